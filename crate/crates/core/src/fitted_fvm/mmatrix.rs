use crate::sparse::CsrMatrix;

/// Relative slack allowed in the row dominance test to absorb rounding in
/// rows whose exact sum is zero.
pub const DOMINANCE_RTOL: f64 = 1e-12;

/// Outcome of the sign-pattern and weak row-dominance test.
#[derive(Debug, Clone, PartialEq)]
pub struct MMatrixReport {
    pub is_m_matrix: bool,
    /// Largest positive off-diagonal entry, 0 when there is none.
    pub worst_offdiag_violation: f64,
    /// Smallest `|e_ii| − Σ_{j≠i} |e_ij|` over all rows.
    pub worst_dominance_slack: f64,
    pub positive_offdiag: Vec<(usize, usize)>,
    pub nonpositive_diagonal: Vec<usize>,
    pub dominance_failures: Vec<usize>,
}

impl MMatrixReport {
    /// One line per failure class with the first few offending indices.
    pub fn summary(&self) -> String {
        if self.is_m_matrix {
            return format!("pass (min dominance slack {:e})", self.worst_dominance_slack);
        }
        let head = |v: &[usize]| v.iter().take(5).map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let mut parts = Vec::new();
        if !self.positive_offdiag.is_empty() {
            let (r, c) = self.positive_offdiag[0];
            parts.push(format!(
                "{} positive off-diagonals (max {:e}, first at ({r},{c}))",
                self.positive_offdiag.len(),
                self.worst_offdiag_violation
            ));
        }
        if !self.nonpositive_diagonal.is_empty() {
            parts.push(format!(
                "{} nonpositive diagonals [{}]",
                self.nonpositive_diagonal.len(),
                head(&self.nonpositive_diagonal)
            ));
        }
        if !self.dominance_failures.is_empty() {
            parts.push(format!(
                "{} rows not dominant (worst slack {:e}) [{}]",
                self.dominance_failures.len(),
                self.worst_dominance_slack,
                head(&self.dominance_failures)
            ));
        }
        format!("fail: {}", parts.join("; "))
    }
}

/// Checks positive diagonal, nonpositive off-diagonals and weak row dominance.
pub fn m_matrix_check(op: impl AsRef<CsrMatrix>) -> MMatrixReport {
    let m = op.as_ref();
    let mut report = MMatrixReport {
        is_m_matrix: true,
        worst_offdiag_violation: 0.0,
        worst_dominance_slack: f64::INFINITY,
        positive_offdiag: Vec::new(),
        nonpositive_diagonal: Vec::new(),
        dominance_failures: Vec::new(),
    };
    for i in 0..m.order() {
        let mut diag = 0.0;
        let mut off = 0.0;
        for (j, v) in m.row(i) {
            if j == i {
                diag = v;
            } else {
                off += v.abs();
                if v > 0.0 {
                    report.positive_offdiag.push((i, j));
                    report.worst_offdiag_violation = report.worst_offdiag_violation.max(v);
                }
            }
        }
        if !(diag > 0.0) {
            report.nonpositive_diagonal.push(i);
        }
        let slack = diag.abs() - off;
        report.worst_dominance_slack = report.worst_dominance_slack.min(slack);
        if slack < -DOMINANCE_RTOL * (diag.abs() + off) {
            report.dominance_failures.push(i);
        }
    }
    if m.order() == 0 {
        report.worst_dominance_slack = 0.0;
    }
    report.is_m_matrix = report.positive_offdiag.is_empty()
        && report.nonpositive_diagonal.is_empty()
        && report.dominance_failures.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes() {
        let r = m_matrix_check(CsrMatrix::identity(4));
        assert!(r.is_m_matrix);
        assert_eq!(r.worst_dominance_slack, 1.0);
    }

    #[test]
    fn positive_offdiagonal_reported() {
        let m = CsrMatrix::from_rows(vec![vec![(0, 2.0), (1, -1.0)], vec![(0, 0.5), (1, 2.0)]]);
        let r = m_matrix_check(&m);
        assert!(!r.is_m_matrix);
        assert_eq!(r.positive_offdiag, vec![(1, 0)]);
        assert_eq!(r.worst_offdiag_violation, 0.5);
        assert!(r.dominance_failures.is_empty());
    }

    #[test]
    fn dominance_and_diagonal_failures() {
        let m = CsrMatrix::from_rows(vec![vec![(0, 1.0), (1, -2.0)], vec![(1, -1.0)]]);
        let r = m_matrix_check(&m);
        assert_eq!(r.dominance_failures, vec![0]);
        assert_eq!(r.nonpositive_diagonal, vec![1]);
        assert_eq!(r.worst_dominance_slack, -1.0);
        assert!(r.summary().starts_with("fail"));
    }

    #[test]
    fn zero_row_sum_tolerates_rounding() {
        let a = 0.1 + 0.2;
        let m = CsrMatrix::from_rows(vec![vec![(0, 0.3), (1, -0.1), (2, -0.2)], vec![(1, 1.0)], vec![(2, a)]]);
        assert!(m_matrix_check(&m).is_m_matrix);
    }
}
