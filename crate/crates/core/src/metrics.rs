//! Space-time L² error and temporal order fits.

use crate::error::{Error, Result};
use crate::mesh::TensorMesh;

/// One row of `errors.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub scheme: String,
    pub n: Vec<usize>,
    pub m: usize,
    pub theta: f64,
    pub l2_error: f64,
    pub max_policy_iters: usize,
    pub wall_ms: Option<f64>,
}

impl ErrorRecord {
    pub const CSV_HEADER: &'static str = "scheme,N1,N2,N3,m,theta,l2_error,max_policy_iters,wall_ms";

    /// Axis counts beyond the third are dropped, missing ones left empty.
    pub fn csv_row(&self) -> String {
        let n = |k: usize| self.n.get(k).map(|v| v.to_string()).unwrap_or_default();
        let wall = self.wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{:e},{},{}",
            self.scheme,
            n(0),
            n(1),
            n(2),
            self.m,
            self.theta,
            self.l2_error,
            self.max_policy_iters,
            wall
        )
    }
}

/// `( Σ_{n<steps} Σ_I Δt · l_I · (v_I^n − v(τ_n, x_I))² )^{1/2}` with `τ_n = n Δt`.
///
/// `levels[n]` is the interior value vector at level `n`; only the first
/// `steps` levels enter the sum.
pub fn l2_spacetime_error(
    levels: &[Vec<f64>],
    steps: usize,
    dt: f64,
    mesh: &TensorMesh,
    exact: impl Fn(f64, &[f64]) -> f64,
) -> Result<f64> {
    if levels.len() < steps {
        return Err(Error::Dimension { expected: steps, got: levels.len() });
    }
    let nodes: Vec<(Vec<f64>, f64)> = mesh
        .interior_indices()
        .map(|idx| {
            let volume = mesh.cell_volume(idx.as_slice()).expect("interior node");
            (mesh.point(idx.as_slice()), volume)
        })
        .collect();
    let mut sum = 0.0;
    for (n, level) in levels[..steps].iter().enumerate() {
        if level.len() != nodes.len() {
            return Err(Error::Dimension { expected: nodes.len(), got: level.len() });
        }
        let tau = n as f64 * dt;
        for ((point, volume), v) in nodes.iter().zip(level) {
            let d = v - exact(tau, point);
            sum += dt * volume * d * d;
        }
    }
    Ok(sum.sqrt())
}

/// Least-squares slope of `log(error)` against `log(Δt)`.
pub fn fit_temporal_order(points: &[(f64, f64)]) -> Result<f64> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Parameters("order fit needs at least two distinct time steps".into()));
    }
    if points.iter().any(|&(dt, e)| !(dt > 0.0 && e > 0.0)) {
        return Err(Error::Parameters("order fit needs positive steps and errors".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Order fit over records sharing a horizon, `Δt = T / m`.
pub fn order_from_records(records: &[ErrorRecord], horizon: f64) -> Result<f64> {
    let points: Vec<(f64, f64)> = records.iter().map(|r| (horizon / r.m as f64, r.l2_error)).collect();
    fit_temporal_order(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mesh() -> TensorMesh {
        TensorMesh::uniform(&[(0.0, 1.0), (0.0, 0.5)], &[4, 5]).unwrap()
    }

    #[test]
    fn exact_trajectory_has_zero_error() {
        let mesh = mesh();
        let f = |t: f64, x: &[f64]| t + x[0] * x[1];
        let levels: Vec<Vec<f64>> = (0..5)
            .map(|n| mesh.interior_indices().map(|i| f(n as f64 * 0.25, &mesh.point(i.as_slice()))).collect())
            .collect();
        assert_eq!(l2_spacetime_error(&levels, 4, 0.25, &mesh, f).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_closed_form() {
        let mesh = mesh();
        let delta = 0.3;
        let steps = 8;
        let dt = 1.0 / steps as f64;
        let levels = vec![vec![delta; mesh.unknowns()]; steps];
        let err = l2_spacetime_error(&levels, steps, dt, &mesh, |_, _| 0.0).unwrap();
        // interior control volumes cover [h/2, x_max − h/2] per axis
        let interior: f64 = (1.0 - 0.25) * (0.5 - 0.1);
        assert_relative_eq!(err, delta * interior.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn level_count_checked() {
        let mesh = mesh();
        let levels = vec![vec![0.0; mesh.unknowns()]; 3];
        assert!(l2_spacetime_error(&levels, 4, 0.25, &mesh, |_, _| 0.0).is_err());
        let short = vec![vec![0.0; 2]; 4];
        assert!(l2_spacetime_error(&short, 4, 0.25, &mesh, |_, _| 0.0).is_err());
    }

    #[test]
    fn order_fits() {
        let halving: Vec<(f64, f64)> = (0..4).map(|k| (0.1 / 2f64.powi(k), 3.0 / 2f64.powi(k))).collect();
        assert_relative_eq!(fit_temporal_order(&halving).unwrap(), 1.0, max_relative = 1e-12);
        let quartering: Vec<(f64, f64)> = (0..4).map(|k| (0.1 / 2f64.powi(k), 3.0 / 4f64.powi(k))).collect();
        assert_relative_eq!(fit_temporal_order(&quartering).unwrap(), 2.0, max_relative = 1e-12);
        assert!(fit_temporal_order(&[(0.1, 1.0), (0.1, 2.0)]).is_err());
    }

    #[test]
    fn reference_fitted_column_slope() {
        let recs: Vec<ErrorRecord> = [(50, 1.30), (100, 0.863), (150, 0.631), (200, 0.465)]
            .iter()
            .map(|&(m, e)| ErrorRecord {
                scheme: "fitted".into(),
                n: vec![10, 10, 10],
                m,
                theta: 1.0,
                l2_error: e,
                max_policy_iters: 0,
                wall_ms: None,
            })
            .collect();
        let slope = order_from_records(&recs, 1.0).unwrap();
        // least-squares fit over the four reference levels
        assert!((slope - 0.7256).abs() < 1e-3, "{slope}");
    }

    #[test]
    fn csv_row_layout() {
        let r = ErrorRecord {
            scheme: "fdm".into(),
            n: vec![8, 9, 10],
            m: 50,
            theta: 1.0,
            l2_error: 0.5,
            max_policy_iters: 2,
            wall_ms: None,
        };
        assert_eq!(r.csv_row(), "fdm,8,9,10,50,1,5e-1,2,");
        assert_eq!(ErrorRecord::CSV_HEADER.split(',').count(), r.csv_row().split(',').count());
    }
}
