//! Compressed sparse rows and a banded direct solver.

use crate::error::{Error, Result};

/// Square matrix in compressed sparse row form, columns sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row entry lists. Duplicate columns are summed, exact
    /// zeros produced by the sum are kept so the pattern is stable.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < n, "column {c} out of range for order {n}");
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    /// `(kl, ku)`, the lower and upper bandwidth of the stored pattern.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_dot(i, x)).collect()
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).map(|(j, v)| v * x[j]).sum()
    }

    /// `‖A‖∞`.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `I + s·A`.
    pub fn shifted_identity(&self, s: f64) -> Self {
        let rows = (0..self.n)
            .map(|i| {
                let mut row: Vec<(usize, f64)> = self.row(i).map(|(j, v)| (j, s * v)).collect();
                row.push((i, 1.0));
                row
            })
            .collect();
        Self::from_rows(rows)
    }

    /// Row `i` taken from `sources[pick[i]]`. All sources must share the order.
    pub fn select_rows(sources: &[&CsrMatrix], pick: &[usize]) -> Self {
        let n = pick.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, &s) in pick.iter().enumerate() {
            let m = sources[s];
            let range = m.row_ptr[i]..m.row_ptr[i + 1];
            cols.extend_from_slice(&m.cols[range.clone()]);
            vals.extend_from_slice(&m.vals[range]);
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    /// 0-based `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }
}

/// LU factors of a band matrix with partial pivoting, LAPACK `gbtrf` layout.
///
/// Column `c` of the band array holds rows `c − ku − kl ..= c + kl`; row pivoting
/// widens the upper band to `ku + kl`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.order();
        let (kl, ku) = a.bandwidth();
        let ldab = 2 * kl + ku + 1;
        let kv = ku + kl;
        let mut ab = vec![0.0; ldab * n];
        let at = |r: usize, c: usize| kv + r - c + c * ldab;
        for i in 0..n {
            for (j, v) in a.row(i) {
                ab[at(i, j)] = v;
            }
        }
        let mut pivots = vec![0; n];
        // rightmost column touched so far by row swaps
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = ab[at(j, j)].abs();
            for k in 1..=km {
                let v = ab[at(j + k, j)].abs();
                if v > best {
                    best = v;
                    p = k;
                }
            }
            pivots[j] = j + p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::LinearSolve(format!("singular pivot in column {j}")));
            }
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    ab.swap(at(j, c), at(j + p, c));
                }
            }
            let d = ab[at(j, j)];
            for k in 1..=km {
                ab[at(j + k, j)] /= d;
            }
            for c in j + 1..=ju {
                let u = ab[at(j, c)];
                if u != 0.0 {
                    for k in 1..=km {
                        let l = ab[at(j + k, j)];
                        ab[at(j + k, c)] -= l * u;
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, ab, pivots })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        let kv = ku + kl;
        let at = |r: usize, c: usize| kv + r - c + c * ldab;
        let mut x = rhs.to_vec();
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                x.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let xj = x[j];
            for k in 1..=km {
                x[j + k] -= self.ab[at(j + k, j)] * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.ab[at(j, j)];
            let xj = x[j];
            let top = j.saturating_sub(kv);
            for (r, xr) in x.iter_mut().enumerate().take(j).skip(top) {
                *xr -= self.ab[at(r, j)] * xj;
            }
        }
        x
    }
}

/// Scaled residual `‖Ax − b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
pub fn scaled_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r = a.mul_vec(x);
    let res = r.iter().zip(b).map(|(ri, bi)| (ri - bi).abs()).fold(0.0, f64::max);
    let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = a.norm_inf() * xn + bn;
    if scale == 0.0 {
        res
    } else {
        res / scale
    }
}

/// Direct solve with a residual check and up to two refinement sweeps.
pub fn solve(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let lu = BandLu::factor(a)?;
    let mut x = lu.solve(b);
    for _ in 0..2 {
        if scaled_residual(a, &x, b) <= tol {
            return Ok(x);
        }
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    let res = scaled_residual(a, &x, b);
    if res <= tol && x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::LinearSolve(format!("scaled residual {res:e} exceeds {tol:e}")))
    }
}
