//! Exponentially fitted flux weights on one cell edge.

use crate::error::{Error, Result};

/// `|β ln(x_hi/x_lo)|` at or below which the analytic limit is used.
pub const LIMIT_THRESHOLD: f64 = 1e-10;

/// Weights of the fitted flux across one edge `[x_lo, x_hi]`:
/// `flux ≈ up·v(x_hi) − down·v(x_lo)` per unit of the face coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedFactor {
    /// `b/ā`; infinite when `ā = 0` and `b ≠ 0`.
    pub beta: f64,
    /// `b x_hi^β / (x_hi^β − x_lo^β)`.
    pub up: f64,
    /// `b x_lo^β / (x_hi^β − x_lo^β)`.
    pub down: f64,
}

/// Solves the two-point problem `(ā x v' + b v)' = 0` on `[x_lo, x_hi]` in
/// closed form and returns its flux weights.
///
/// With `t = β ln(x_hi/x_lo)` the weights are `b / (1 − e^{−t})` and
/// `b / (e^{t} − 1)`, evaluated with `expm1` so neither cancels. For
/// `|t| ≤ LIMIT_THRESHOLD` both become `ā / ln(x_hi/x_lo)`. A vanishing `ā`
/// gives the upwind limit.
pub fn fitted_pair(b: f64, a_bar: f64, x_lo: f64, x_hi: f64) -> Result<FittedFactor> {
    if !(x_lo > 0.0 && x_hi > x_lo && x_hi.is_finite()) {
        return Err(Error::FittedInput(format!("need 0 < x_lo < x_hi, got [{x_lo}, {x_hi}]")));
    }
    if !(a_bar >= 0.0 && a_bar.is_finite()) {
        return Err(Error::FittedInput(format!("diffusion factor must be nonnegative, got {a_bar}")));
    }
    if !b.is_finite() {
        return Err(Error::FittedInput(format!("drift factor must be finite, got {b}")));
    }
    if a_bar == 0.0 {
        return Ok(match b.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => FittedFactor { beta: f64::INFINITY, up: b, down: 0.0 },
            Some(std::cmp::Ordering::Less) => FittedFactor { beta: f64::NEG_INFINITY, up: 0.0, down: -b },
            _ => FittedFactor { beta: 0.0, up: 0.0, down: 0.0 },
        });
    }
    let beta = b / a_bar;
    let log_ratio = (x_hi / x_lo).ln();
    let t = beta * log_ratio;
    if t.abs() <= LIMIT_THRESHOLD {
        let w = a_bar / log_ratio;
        return Ok(FittedFactor { beta, up: w, down: w });
    }
    let up = b / -(-t).exp_m1();
    let down = b / t.exp_m1();
    Ok(FittedFactor { beta, up, down })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_beta_is_linear() {
        let f = fitted_pair(1.0, 1.0, 1.0, 1.1).unwrap();
        assert_relative_eq!(f.up, 11.0, max_relative = 1e-13);
        assert_relative_eq!(f.down, 10.0, max_relative = 1e-13);
        assert_eq!(f.beta, 1.0);
    }

    #[test]
    fn zero_drift_hits_log_limit() {
        let f = fitted_pair(0.0, 2.0, 1.0, std::f64::consts::E).unwrap();
        assert_relative_eq!(f.up, 2.0, max_relative = 1e-15);
        assert_relative_eq!(f.down, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn direct_formula_agrees_away_from_limit() {
        for &(b, a, lo, hi) in &[(0.3, 0.7, 0.2, 0.35), (-1.5, 0.2, 0.05, 0.1), (2.0, 0.01, 1.0, 1.01)] {
            let f = fitted_pair(b, a, lo, hi).unwrap();
            let beta: f64 = b / a;
            let den = hi.powf(beta) - lo.powf(beta);
            assert_relative_eq!(f.up, b * hi.powf(beta) / den, max_relative = 1e-10);
            assert_relative_eq!(f.down, b * lo.powf(beta) / den, max_relative = 1e-10);
        }
    }

    #[test]
    fn vanishing_diffusion_gives_upwinding() {
        assert_eq!(fitted_pair(0.4, 0.0, 0.1, 0.2).unwrap().up, 0.4);
        assert_eq!(fitted_pair(0.4, 0.0, 0.1, 0.2).unwrap().down, 0.0);
        let f = fitted_pair(-0.4, 0.0, 0.1, 0.2).unwrap();
        assert_eq!((f.up, f.down), (0.0, 0.4));
        let f = fitted_pair(0.0, 0.0, 0.1, 0.2).unwrap();
        assert_eq!((f.up, f.down), (0.0, 0.0));
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(fitted_pair(1.0, -1.0, 1.0, 2.0).is_err());
        assert!(fitted_pair(1.0, 1.0, 0.0, 2.0).is_err());
        assert!(fitted_pair(1.0, 1.0, 2.0, 2.0).is_err());
        assert!(fitted_pair(f64::NAN, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn tiny_diffusion_stays_accurate() {
        // ā ≪ 1 with b at the scale of the drift: far from the limit branch
        let f = fitted_pair(3e-9, 3e-6, 0.05, 0.1).unwrap();
        let t = 1e-3 * 2f64.ln();
        assert_relative_eq!(f.up, 3e-9 / (1.0 - (-t).exp()), max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn weights_positive(b in -20.0f64..20.0, a in 1e-3f64..5.0, lo in 1e-3f64..2.0, ratio in 1.001f64..3.0) {
            let f = fitted_pair(b, a, lo, lo * ratio).unwrap();
            prop_assert!(f.up > 0.0 && f.down > 0.0);
            prop_assert!(f.up.is_finite() && f.down.is_finite());
        }

        #[test]
        fn flux_difference_equals_drift(b in -5.0f64..5.0, a in 1e-2f64..5.0, lo in 1e-2f64..2.0, ratio in 1.01f64..3.0) {
            // up − down = b exactly in exact arithmetic
            let f = fitted_pair(b, a, lo, lo * ratio).unwrap();
            prop_assume!((b / a * ratio.ln()).abs() > LIMIT_THRESHOLD);
            prop_assert!((f.up - f.down - b).abs() <= 1e-9 * f.up.abs().max(1.0));
        }
    }
}
