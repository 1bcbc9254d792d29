//! Catalog of resource-quality tradeoff functions.
//!
//! Every solver in this crate works against the same small catalog. A
//! member is described by its precision `q(r)` (quality gained from
//! resource `r`) or equivalently by its loss `ℓ(r) = 1/q(r)`:
//!
//! * `LinearPrecision`:      q(r) = r/σ²
//! * `PowerPrecision`:       q(r) = r^α/σ²,  α ∈ (0, 1]
//! * `LogChannelPrecision`:  q(r) = 1/σ² + ln(1 + (r/R)/a)
//! * `ExpMarginLoss`:        ℓ(r) = ½·exp(−r·η²/2),  η ∈ (0, 1/2]
//! * `CustomConvexLoss`:     piecewise-linear convex decreasing table
//!
//! The loss is positive, non-increasing, and convex for every member.
//! The precision is additionally concave for the first three members,
//! which is what the budget solvers rely on; `ExpMarginLoss` and
//! `CustomConvexLoss` have convex reciprocals and are only used where
//! the loss itself is optimized (see `has_concave_precision`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gradient cap used by solvers when a derivative is singular at the
/// boundary (power precision with `alpha < 1` at `r = 0`).
pub const DERIVATIVE_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TradeoffFunction {
    LinearPrecision {
        sigma_sq: f64,
    },
    PowerPrecision {
        sigma_sq: f64,
        alpha: f64,
    },
    LogChannelPrecision {
        sigma_sq: f64,
        a: f64,
        budget_ref: f64,
    },
    ExpMarginLoss {
        eta: f64,
    },
    /// `samples[k] = [r_k, loss_k]` with `r_0 = 0`, strictly increasing
    /// `r`, positive non-increasing losses, and non-decreasing slopes.
    /// Beyond the last sample the loss stays constant.
    CustomConvexLoss {
        samples: Vec<[f64; 2]>,
    },
}

impl TradeoffFunction {
    pub fn linear_precision(sigma_sq: f64) -> Result<Self> {
        let f = TradeoffFunction::LinearPrecision { sigma_sq };
        f.validate()?;
        Ok(f)
    }

    pub fn power_precision(sigma_sq: f64, alpha: f64) -> Result<Self> {
        let f = TradeoffFunction::PowerPrecision { sigma_sq, alpha };
        f.validate()?;
        Ok(f)
    }

    pub fn log_channel_precision(sigma_sq: f64, a: f64, budget_ref: f64) -> Result<Self> {
        let f = TradeoffFunction::LogChannelPrecision {
            sigma_sq,
            a,
            budget_ref,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn exp_margin_loss(eta: f64) -> Result<Self> {
        let f = TradeoffFunction::ExpMarginLoss { eta };
        f.validate()?;
        Ok(f)
    }

    pub fn custom_convex_loss(samples: Vec<[f64; 2]>) -> Result<Self> {
        let f = TradeoffFunction::CustomConvexLoss { samples };
        f.validate()?;
        Ok(f)
    }

    /// Validates the parameters. Deserialized values must be passed
    /// through this before use; the scenario loader does so.
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
            Ok(())
        };
        match self {
            TradeoffFunction::LinearPrecision { sigma_sq } => pos(*sigma_sq, "sigma_sq"),
            TradeoffFunction::PowerPrecision { sigma_sq, alpha } => {
                pos(*sigma_sq, "sigma_sq")?;
                if !alpha.is_finite() || *alpha <= 0.0 || *alpha > 1.0 {
                    return Err(Error::invalid(format!(
                        "alpha must lie in (0, 1], got {alpha}"
                    )));
                }
                Ok(())
            }
            TradeoffFunction::LogChannelPrecision {
                sigma_sq,
                a,
                budget_ref,
            } => {
                pos(*sigma_sq, "sigma_sq")?;
                pos(*a, "a")?;
                pos(*budget_ref, "budget_ref")
            }
            TradeoffFunction::ExpMarginLoss { eta } => {
                if !eta.is_finite() || *eta <= 0.0 || *eta > 0.5 {
                    return Err(Error::invalid(format!(
                        "eta must lie in (0, 1/2], got {eta}"
                    )));
                }
                Ok(())
            }
            TradeoffFunction::CustomConvexLoss { samples } => validate_samples(samples),
        }
    }

    fn check_resource(r: f64) -> Result<()> {
        if !r.is_finite() {
            return Err(Error::domain(format!("resource must be finite, got {r}")));
        }
        if r < 0.0 {
            return Err(Error::domain(format!(
                "resource must be nonnegative, got {r}"
            )));
        }
        Ok(())
    }

    /// Precision q(r). Zero is a legal value (linear and power
    /// precision at r = 0); the corresponding loss is infinite.
    pub fn precision(&self, r: f64) -> Result<f64> {
        Self::check_resource(r)?;
        Ok(match self {
            TradeoffFunction::LinearPrecision { sigma_sq } => r / sigma_sq,
            TradeoffFunction::PowerPrecision { sigma_sq, alpha } => r.powf(*alpha) / sigma_sq,
            TradeoffFunction::LogChannelPrecision {
                sigma_sq,
                a,
                budget_ref,
            } => 1.0 / sigma_sq + (r / (budget_ref * a)).ln_1p(),
            TradeoffFunction::ExpMarginLoss { eta } => 2.0 * (r * eta * eta / 2.0).exp(),
            TradeoffFunction::CustomConvexLoss { samples } => {
                1.0 / eval_piecewise(samples, r)
            }
        })
    }

    /// Loss ℓ(r) = 1/q(r); `f64::INFINITY` when the precision is zero.
    /// Solvers treat an infinite loss as "source unusable".
    pub fn loss(&self, r: f64) -> Result<f64> {
        Self::check_resource(r)?;
        Ok(match self {
            TradeoffFunction::ExpMarginLoss { eta } => 0.5 * (-r * eta * eta / 2.0).exp(),
            TradeoffFunction::CustomConvexLoss { samples } => eval_piecewise(samples, r),
            _ => {
                let q = self.precision(r)?;
                if q == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / q
                }
            }
        })
    }

    /// Analytic dq/dr.
    ///
    /// Errors with [`Error::DerivativeSingularity`] for power precision
    /// with `alpha < 1` at `r = 0`, where the slope is unbounded.
    pub fn precision_derivative(&self, r: f64) -> Result<f64> {
        Self::check_resource(r)?;
        Ok(match self {
            TradeoffFunction::LinearPrecision { sigma_sq } => 1.0 / sigma_sq,
            TradeoffFunction::PowerPrecision { sigma_sq, alpha } => {
                if *alpha < 1.0 && r == 0.0 {
                    return Err(Error::DerivativeSingularity);
                }
                if *alpha == 1.0 {
                    1.0 / sigma_sq
                } else {
                    alpha * r.powf(alpha - 1.0) / sigma_sq
                }
            }
            TradeoffFunction::LogChannelPrecision { a, budget_ref, .. } => {
                1.0 / (budget_ref * a + r)
            }
            TradeoffFunction::ExpMarginLoss { eta } => {
                let e2 = eta * eta;
                e2 * (r * e2 / 2.0).exp()
            }
            TradeoffFunction::CustomConvexLoss { samples } => {
                let loss = eval_piecewise(samples, r);
                let slope = piecewise_slope(samples, r);
                -slope / (loss * loss)
            }
        })
    }

    /// Like [`precision_derivative`] but returns `cap` instead of
    /// failing on the boundary singularity. Used by gradient solvers.
    ///
    /// [`precision_derivative`]: TradeoffFunction::precision_derivative
    pub fn precision_derivative_capped(&self, r: f64, cap: f64) -> Result<f64> {
        match self.precision_derivative(r) {
            Ok(d) => Ok(d.min(cap)),
            Err(Error::DerivativeSingularity) => Ok(cap),
            Err(e) => Err(e),
        }
    }

    /// Analytic dℓ/dr (non-positive). Errors where the loss is infinite.
    pub fn loss_derivative(&self, r: f64) -> Result<f64> {
        Self::check_resource(r)?;
        match self {
            TradeoffFunction::ExpMarginLoss { eta } => {
                let e2 = eta * eta;
                Ok(-(e2 / 2.0) * 0.5 * (-r * e2 / 2.0).exp())
            }
            TradeoffFunction::CustomConvexLoss { samples } => Ok(piecewise_slope(samples, r)),
            _ => {
                let q = self.precision(r)?;
                if q == 0.0 {
                    return Err(Error::domain(
                        "loss derivative undefined where the loss is infinite",
                    ));
                }
                let dq = self.precision_derivative(r)?;
                Ok(-dq / (q * q))
            }
        }
    }

    /// Inverse of the precision map: the resource `r` with `q(r) = y`.
    /// Defined wherever `y` is attainable and the map is strictly
    /// increasing there.
    pub fn inverse_precision(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::domain(format!("precision must be finite, got {y}")));
        }
        match self {
            TradeoffFunction::LinearPrecision { sigma_sq } => {
                if y < 0.0 {
                    return Err(Error::domain("precision is nonnegative"));
                }
                Ok(sigma_sq * y)
            }
            TradeoffFunction::PowerPrecision { sigma_sq, alpha } => {
                if y < 0.0 {
                    return Err(Error::domain("precision is nonnegative"));
                }
                Ok((sigma_sq * y).powf(1.0 / alpha))
            }
            TradeoffFunction::LogChannelPrecision {
                sigma_sq,
                a,
                budget_ref,
            } => {
                let base = 1.0 / sigma_sq;
                if y < base {
                    return Err(Error::domain(format!(
                        "precision {y} below the zero-resource value {base}"
                    )));
                }
                Ok(budget_ref * a * (y - base).exp_m1())
            }
            TradeoffFunction::ExpMarginLoss { eta } => {
                if y < 2.0 {
                    return Err(Error::domain(format!(
                        "precision {y} below the zero-resource value 2"
                    )));
                }
                Ok(2.0 / (eta * eta) * (y / 2.0).ln())
            }
            TradeoffFunction::CustomConvexLoss { samples } => {
                if y <= 0.0 {
                    return Err(Error::domain("precision must be positive"));
                }
                invert_piecewise(samples, 1.0 / y)
            }
        }
    }

    /// Whether dq/dr is unbounded at `r = 0` (power precision with
    /// `alpha < 1`). Solvers keep such coordinates strictly positive;
    /// the optimum is always interior there.
    pub fn derivative_singular_at_zero(&self) -> bool {
        matches!(self, TradeoffFunction::PowerPrecision { alpha, .. } if *alpha < 1.0)
    }

    /// Whether the precision map is concave (the property the simplex
    /// and support solvers rely on). False for the two members whose
    /// natural parameterization is the loss.
    pub fn has_concave_precision(&self) -> bool {
        matches!(
            self,
            TradeoffFunction::LinearPrecision { .. }
                | TradeoffFunction::PowerPrecision { .. }
                | TradeoffFunction::LogChannelPrecision { .. }
        )
    }
}

fn validate_samples(samples: &[[f64; 2]]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::invalid("custom loss needs at least two samples"));
    }
    if samples[0][0] != 0.0 {
        return Err(Error::invalid("custom loss samples must start at r = 0"));
    }
    for [r, loss] in samples {
        if !r.is_finite() || !loss.is_finite() || *loss <= 0.0 {
            return Err(Error::invalid(
                "custom loss samples must be finite with positive losses",
            ));
        }
    }
    let mut prev_slope = f64::NEG_INFINITY;
    for w in samples.windows(2) {
        let ([r0, l0], [r1, l1]) = (w[0], w[1]);
        if r1 <= r0 {
            return Err(Error::invalid(
                "custom loss sample resources must be strictly increasing",
            ));
        }
        if l1 > l0 {
            return Err(Error::invalid("custom loss samples must be non-increasing"));
        }
        let slope = (l1 - l0) / (r1 - r0);
        if slope < prev_slope - 1e-12 * slope.abs().max(1.0) {
            return Err(Error::invalid(
                "custom loss samples must be convex (non-decreasing slopes)",
            ));
        }
        prev_slope = slope;
    }
    Ok(())
}

fn eval_piecewise(samples: &[[f64; 2]], r: f64) -> f64 {
    let last = samples[samples.len() - 1];
    if r >= last[0] {
        return last[1];
    }
    let k = match samples.partition_point(|s| s[0] <= r) {
        0 => 0, // unreachable: r >= 0 = samples[0][0]
        k => k - 1,
    };
    let [r0, l0] = samples[k];
    let [r1, l1] = samples[k + 1];
    l0 + (l1 - l0) * (r - r0) / (r1 - r0)
}

/// Slope of the segment containing `r` (right-continuous at knots;
/// zero beyond the last sample).
fn piecewise_slope(samples: &[[f64; 2]], r: f64) -> f64 {
    let last = samples[samples.len() - 1];
    if r >= last[0] {
        return 0.0;
    }
    let k = match samples.partition_point(|s| s[0] <= r) {
        0 => 0,
        k => k - 1,
    };
    let [r0, l0] = samples[k];
    let [r1, l1] = samples[k + 1];
    (l1 - l0) / (r1 - r0)
}

fn invert_piecewise(samples: &[[f64; 2]], target_loss: f64) -> Result<f64> {
    let first = samples[0][1];
    let last = samples[samples.len() - 1][1];
    if target_loss > first || target_loss < last {
        return Err(Error::domain(format!(
            "loss {target_loss} outside the attainable range [{last}, {first}]"
        )));
    }
    for w in samples.windows(2) {
        let ([r0, l0], [r1, l1]) = (w[0], w[1]);
        if target_loss <= l0 && target_loss >= l1 {
            if l0 == l1 {
                return Err(Error::domain(
                    "precision map not invertible on a flat segment",
                ));
            }
            return Ok(r0 + (r1 - r0) * (l0 - target_loss) / (l0 - l1));
        }
    }
    Err(Error::domain("loss not attained")) // unreachable after range check
}
