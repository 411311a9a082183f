use fitted_hjb::merton::{MertonParams, MertonProblem};
use fitted_hjb::metrics::{fit_temporal_order, l2_spacetime_error};
use fitted_hjb::problem::{ControlProblem, ControlSet, FnProblem};
use fitted_hjb::stepper::{solve, StepperConfig};
use fitted_hjb::{ConstantProblem, FdmScheme, Fitted3d, FittedNd, TensorMesh};

fn constant_order(theta: f64) -> f64 {
    let mesh = TensorMesh::uniform(&[(0.0, 1.0), (0.0, 1.0)], &[6, 6]).unwrap();
    let p = ConstantProblem { a_bar: 0.3, b: 0.2, c: -1.5, source: 0.4, horizon: 2.0, ..ConstantProblem::new(2) };
    let points: Vec<(f64, f64)> = [10usize, 20, 40, 80]
        .iter()
        .map(|&m| {
            let cfg = StepperConfig { theta, steps: m, ..StepperConfig::default() };
            let sol = solve(&FittedNd, &p, &mesh, &ControlSet::singleton(0.0), &cfg).unwrap();
            // the error at the last level carries the full accumulated truncation error
            let last = &sol.levels[m];
            let err = last.iter().map(|v| (v - p.exact(p.horizon)).abs()).fold(0.0, f64::max);
            (sol.dt, err)
        })
        .collect();
    fit_temporal_order(&points).unwrap()
}

#[test]
fn implicit_euler_is_first_order_in_time() {
    let order = constant_order(1.0);
    assert!((order - 1.0).abs() < 0.1, "{order}");
}

#[test]
fn crank_nicolson_is_second_order_in_time() {
    let order = constant_order(0.5);
    assert!((order - 2.0).abs() < 0.1, "{order}");
}

#[test]
fn spacetime_error_of_exactly_represented_problem_shrinks_with_dt() {
    let mesh = TensorMesh::uniform(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], &[4, 4, 4]).unwrap();
    let p = ConstantProblem { b: 0.1, c: -0.6, ..ConstantProblem::new(3) };
    let errs: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&m| {
            let cfg = StepperConfig { steps: m, ..StepperConfig::default() };
            let sol = solve(&Fitted3d, &p, &mesh, &ControlSet::singleton(0.0), &cfg).unwrap();
            l2_spacetime_error(&sol.levels, m, sol.dt, &mesh, |t, _| p.exact(t)).unwrap()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

fn small_merton() -> (MertonProblem, TensorMesh) {
    let params = MertonParams { n: [6, 6, 6], ..MertonParams::table1() };
    let mesh = params.mesh().unwrap();
    (MertonProblem::new(params).unwrap(), mesh)
}

#[test]
fn reaction_controlled_policy_is_exact() {
    // only c depends on α; with v > 0 the best control maximizes c itself
    let mesh = TensorMesh::uniform(&[(0.0, 1.0), (0.0, 1.0)], &[5, 5]).unwrap();
    let p = FnProblem::builder(2, 1.0)
        .drift(|_, x, _, i| 0.2 - 0.5 * x[i])
        .reaction(|_, _, a| -0.1 - (a - 0.3) * (a - 0.3))
        .terminal(|x| 1.0 + x[0] + x[1])
        .boundary(|_, x| 1.0 + x[0] + x[1]);
    let controls = ControlSet::uniform(0.0, 1.0, 11).unwrap();
    let cfg = StepperConfig { steps: 4, ..StepperConfig::default() };
    let sol = solve(&FittedNd, &p, &mesh, &controls, &cfg).unwrap();
    for policy in &sol.policies {
        assert!(policy.iter().all(|&a| (a - 0.3).abs() < 1e-12), "{policy:?}");
    }
    assert!(sol.levels.iter().flatten().all(|&v| v > 0.0));
}

#[test]
fn merton_policy_iteration_is_short_and_residuals_settle() {
    let (problem, mesh) = small_merton();
    let controls = ControlSet::uniform(0.0, 1.0, 21).unwrap();
    for scheme in [&Fitted3d as &dyn fitted_hjb::SpatialScheme, &FdmScheme] {
        let cfg = StepperConfig { steps: 8, ..StepperConfig::default() };
        let sol = solve(scheme, &problem, &mesh, &controls, &cfg).unwrap();
        assert!(sol.max_policy_iters() <= 5, "{}", sol.max_policy_iters());
        for history in &sol.residual_histories {
            assert!(history.iter().all(|r| r.is_finite()));
            assert!(*history.last().unwrap() <= cfg.policy_tol);
        }
    }
}

#[test]
fn merton_values_stay_positive_and_bounded() {
    let (problem, mesh) = small_merton();
    let controls = ControlSet::uniform(0.0, 1.0, 11).unwrap();
    let cfg = StepperConfig { steps: 5, ..StepperConfig::default() };
    let sol = solve(&Fitted3d, &problem, &mesh, &controls, &cfg).unwrap();
    let top = mesh.point(&[6, 6, 6]);
    let ceiling = problem.exact(problem.horizon(), &top);
    for level in &sol.levels {
        assert!(level.iter().all(|&v| v > 0.0 && v <= ceiling * 1.01));
    }
}
