#![allow(dead_code)]

use fitted_hjb::fitted_fvm::SpatialOperator;
use fitted_hjb::mesh::{Axis, TensorMesh};
use fitted_hjb::problem::{BoundaryPolicy, FaceMode, FnProblem};
use fitted_hjb::sparse::CsrMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Strictly increasing nodes on `[lo, hi]` with jittered spacing.
pub fn random_axis(rng: &mut ChaCha8Rng, lo: f64) -> Axis {
    let n = rng.gen_range(3..=6);
    let mut widths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = widths.iter().sum();
    let span = rng.gen_range(0.5..2.0);
    for w in &mut widths {
        *w *= span / total;
    }
    let mut nodes = vec![lo];
    for w in widths {
        nodes.push(nodes.last().unwrap() + w);
    }
    Axis::from_nodes(nodes).unwrap()
}

pub struct Instance {
    pub problem: FnProblem,
    pub mesh: TensorMesh,
    pub controls: Vec<f64>,
    pub tau: f64,
}

/// Smooth coefficients with `ā > 0`, `c < 0`, symmetric cross factors and a
/// random mix of degenerate and shifted axes and boundary modes.
pub fn random_instance(rng: &mut ChaCha8Rng, dim: usize) -> Instance {
    let axes: Vec<Axis> = (0..dim)
        .map(|_| {
            let lo = if rng.gen_bool(0.6) { 0.0 } else { rng.gen_range(0.05..0.5) };
            random_axis(rng, lo)
        })
        .collect();
    let mesh = TensorMesh::new(axes).unwrap();
    let faces: Vec<[FaceMode; 2]> = (0..dim)
        .map(|_| {
            let pick = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { FaceMode::Dirichlet } else { FaceMode::Zero };
            [pick(rng), pick(rng)]
        })
        .collect();

    let a0: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..1.0)).collect();
    let a1: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..0.5)).collect();
    let b0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b1: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut d = vec![vec![0.0; dim]; dim];
    for (i, r) in (0..dim).flat_map(|i| (i + 1..dim).map(move |r| (i, r))) {
        let v = rng.gen_range(-0.1..0.1);
        d[i][r] = v;
        d[r][i] = v;
    }
    let (c0, c1) = (rng.gen_range(0.01..1.0), rng.gen_range(0.0..0.5));
    let (s0, g0) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0));
    let tau = rng.gen_range(0.0..1.0);
    let controls = (0..mesh.unknowns()).map(|_| rng.gen_range(0.0..1.0)).collect();

    let problem = FnProblem::builder(dim, 1.0)
        .diffusion(move |t, x, a, i| a0[i] * (1.0 + 0.3 * (x[i] + t).sin().powi(2)) + a1[i] * a)
        .drift(move |t, x, a, i| b0[i] + b1[i] * a + 0.2 * (t + x[i]).cos())
        .cross(move |_, x, a, i, r| d[i][r] * (1.0 + a) * (1.0 + 0.1 * x.iter().sum::<f64>()))
        .reaction(move |_, x, a| -(c0 + c1 * a) * (1.0 + 0.1 * x[0]))
        .source(move |t, x, _| s0 * (1.0 + t) * x.iter().product::<f64>())
        .boundary(move |t, x| g0 * (1.0 + t) + x.iter().sum::<f64>())
        .terminal(|x| x.iter().sum())
        .policy(BoundaryPolicy::new(faces));
    Instance { problem, mesh, controls, tau }
}

/// Largest `|a_ij − b_ij| / max(|a_ij|, |b_ij|)` over the union of patterns.
pub fn max_relative_gap(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, j, _) in a.triplets().into_iter().chain(b.triplets()) {
        let (x, y) = (a.get(i, j), b.get(i, j));
        let scale = x.abs().max(y.abs());
        if scale > 0.0 {
            worst = worst.max((x - y).abs() / scale);
        }
    }
    worst
}

/// Same measure over the boundary columns: per row, the coupling
/// coefficients summed per boundary point. Loads are sums of these with
/// cancellation, so they are compared through their terms.
pub fn max_coupling_gap(a: &SpatialOperator, b: &SpatialOperator) -> f64 {
    let sorted = |op: &SpatialOperator, row: usize| {
        let mut c: Vec<(Vec<f64>, f64)> = Vec::new();
        for k in op.couplings(row) {
            match c.iter_mut().find(|e| e.0 == k.point) {
                Some(e) => e.1 += k.coeff,
                None => c.push((k.point.clone(), k.coeff)),
            }
        }
        c.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        c
    };
    let mut worst: f64 = 0.0;
    for row in 0..a.order() {
        let (ca, cb) = (sorted(a, row), sorted(b, row));
        if ca.len() != cb.len() || ca.iter().zip(&cb).any(|(x, y)| x.0 != y.0) {
            return f64::INFINITY;
        }
        for ((_, x), (_, y)) in ca.iter().zip(&cb) {
            let scale = x.abs().max(y.abs());
            if scale > 0.0 {
                worst = worst.max((x - y).abs() / scale);
            }
        }
    }
    worst
}
