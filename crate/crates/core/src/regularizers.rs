//! Spectral filters g_λ applied to the covariance spectrum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    /// g_λ(x) = 1 / (x + λ)
    Tikhonov,
    /// g_λ(x) = (1 - e^{-x/λ}) / x, with g_λ(0) = 1/λ
    Showalter,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("regularization parameter must be positive, got {lambda}")))
    }
}

impl Regularizer {
    pub const ALL: [Regularizer; 2] = [Regularizer::Tikhonov, Regularizer::Showalter];

    /// sup_x x g_λ(x)
    pub fn c1(self) -> f64 {
        1.0
    }

    /// sup_x λ g_λ(x)
    pub fn c2(self) -> f64 {
        1.0
    }

    /// Both filters have infinite qualification.
    pub fn qualification(self) -> f64 {
        f64::INFINITY
    }

    pub fn apply(self, lambda: f64, x: f64) -> Result<f64> {
        check_lambda(lambda)?;
        if x.is_nan() || x < 0.0 {
            return Err(invalid(format!("filter argument must be nonnegative, got {x}")));
        }
        Ok(self.eval(lambda, x))
    }

    #[inline]
    pub(crate) fn eval(self, lambda: f64, x: f64) -> f64 {
        match self {
            Regularizer::Tikhonov => 1.0 / (x + lambda),
            Regularizer::Showalter => {
                let u = x / lambda;
                if u < 1e-6 {
                    (1.0 - 0.5 * u + u * u / 6.0) / lambda
                } else {
                    -(-u).exp_m1() / x
                }
            }
        }
    }

    pub fn value_at_zero(self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(1.0 / lambda)
    }

    /// (g_λ(x) - g_λ(0)) / x, switching to the derivative at zero once
    /// x < 1e-10 κ.
    pub fn g_diff_ratio(self, lambda: f64, x: f64, kappa: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.diff_ratio(lambda, x, kappa))
    }

    #[inline]
    pub(crate) fn diff_ratio(self, lambda: f64, x: f64, kappa: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            // exact for all x ≥ 0, including the limit -1/λ² at zero
            Regularizer::Tikhonov => -1.0 / (lambda * (x + lambda)),
            Regularizer::Showalter => {
                if x < 1e-10 * kappa {
                    return -0.5 / (lambda * lambda);
                }
                let u = x / lambda;
                // ((1 - e^{-u})/u - 1) / u
                let core = if u < 1e-3 {
                    -0.5 + u * (1.0 / 6.0 + u * (-1.0 / 24.0 + u * (1.0 / 120.0 - u / 720.0)))
                } else {
                    (-(-u).exp_m1() / u - 1.0) / u
                };
                core / (lambda * lambda)
            }
        }
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularizer::Tikhonov => "tikhonov",
            Regularizer::Showalter => "showalter",
        })
    }
}

impl FromStr for Regularizer {
    type Err = GofError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tikhonov" => Ok(Regularizer::Tikhonov),
            "showalter" => Ok(Regularizer::Showalter),
            other => Err(invalid(format!("unknown regularizer {other:?} (expected tikhonov | showalter)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lambda_grid() -> Vec<f64> {
        crate::kernels::doubling_grid(1e-6, 5.0).unwrap()
    }

    fn x_grid(kappa: f64) -> impl Iterator<Item = f64> {
        (0..=2000).map(move |i| kappa * i as f64 / 2000.0)
    }

    #[test]
    fn tikhonov_examples() {
        let t = Regularizer::Tikhonov;
        assert_eq!(t.apply(0.5, 0.5).unwrap(), 1.0);
        assert_eq!(t.apply(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(t.value_at_zero(1.0).unwrap(), 1.0);
        assert_eq!(t.g_diff_ratio(1.0, 1.0, 1.0).unwrap(), -0.5);
        assert_eq!(t.g_diff_ratio(2.0, 2.0, 1.0).unwrap(), -0.125);
        assert_eq!(t.g_diff_ratio(1.0, 0.0, 1.0).unwrap(), -1.0);
        // finite difference at 1e-14 agrees with the limit
        let fd = (t.apply(1.0, 1e-14).unwrap() - 1.0) / 1e-14;
        assert!((fd + 1.0).abs() < 1e-2);
    }

    #[test]
    fn showalter_value() {
        // high-precision reference 1 - e^{-1}
        assert_relative_eq!(
            Regularizer::Showalter.apply(1.0, 1.0).unwrap(),
            0.632_120_558_828_557_7,
            max_relative = 1e-15
        );
        assert_eq!(Regularizer::Showalter.apply(2.0, 0.0).unwrap(), 0.5);
        // continuity across the series switch
        let a = Regularizer::Showalter.apply(1.0, 0.999e-6).unwrap();
        let b = Regularizer::Showalter.apply(1.0, 1.001e-6).unwrap();
        // slope at 0 is -1/2, so the two sides differ by about 1e-9
        assert!(((a - b) - 0.5 * 0.002e-6).abs() < 1e-13, "{}", a - b);
    }

    #[test]
    fn showalter_ratio_limit_and_branches() {
        let s = Regularizer::Showalter;
        assert_eq!(s.g_diff_ratio(1.0, 0.0, 1.0).unwrap(), -0.5);
        assert_eq!(s.g_diff_ratio(2.0, 1e-12, 1.0).unwrap(), -0.125);
        // series and direct branches agree at the switch
        let lo = s.g_diff_ratio(1.0, 0.999e-3, 1.0).unwrap();
        let hi = s.g_diff_ratio(1.0, 1.001e-3, 1.0).unwrap();
        // slope of the ratio at 0 is 1/6
        assert!(((hi - lo) - 0.002e-3 / 6.0).abs() < 1e-9, "{lo} {hi}");
        let x = 0.3;
        let direct = (s.apply(1.0, x).unwrap() - 1.0) / x;
        assert_relative_eq!(s.g_diff_ratio(1.0, x, 1.0).unwrap(), direct, max_relative = 1e-12);
    }

    #[test]
    fn nonpositive_lambda_rejected() {
        for r in Regularizer::ALL {
            assert!(r.apply(0.0, 1.0).is_err());
            assert!(r.g_diff_ratio(-1.0, 1.0, 1.0).is_err());
            assert!(r.value_at_zero(0.0).is_err());
        }
    }

    #[test]
    fn filter_constants_hold_on_grid() {
        for r in Regularizer::ALL {
            for kappa in [1.0 / 12.0, 1.0] {
                for &l in &lambda_grid() {
                    let mut c4 = f64::INFINITY;
                    let mut prev = f64::INFINITY;
                    for x in x_grid(kappa) {
                        let g = r.apply(l, x).unwrap();
                        assert!(x * g <= r.c1() * (1.0 + 1e-12), "{r} A1 at x={x}, l={l}");
                        assert!(l * g <= r.c2() * (1.0 + 1e-12), "{r} A2 at x={x}, l={l}");
                        assert!(g <= prev * (1.0 + 1e-12), "{r} not monotone at x={x}");
                        prev = g;
                        c4 = c4.min(g * (x + l));
                    }
                    assert!(c4 > 0.5, "{r} A4 constant {c4}");
                }
            }
        }
    }

    #[test]
    fn diff_ratio_is_lipschitz() {
        let eps = 1e-8;
        for r in Regularizer::ALL {
            let mut x = 1e-9;
            while x < 1.0 {
                let a = r.g_diff_ratio(1.0, x, 1.0).unwrap();
                let b = r.g_diff_ratio(1.0, x + eps, 1.0).unwrap();
                assert!((a - b).abs() <= 1.0 * eps + 1e-15, "{r} at {x}: {a} {b}");
                x *= 1.7;
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("Tikhonov".parse::<Regularizer>().unwrap(), Regularizer::Tikhonov);
        assert_eq!("showalter".parse::<Regularizer>().unwrap(), Regularizer::Showalter);
        assert!("landweber".parse::<Regularizer>().is_err());
    }
}
