//! Fitting the investment-to-quality line from historical records and
//! converting physical-unit fits into dimensionless agent parameters.
//!
//! The model is `Q = Q0 + A (I - I0) + Sigma xi` with the line pinned at the
//! current state `(I0, Q0)`. The maximum-likelihood slope is the pinned
//! least-squares slope and the noise scale is the root mean squared residual.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::AgentParams;
use crate::montecarlo::NormalStream;
use crate::scalar::Scalar;

/// One historical observation: cumulative investment per firm (million USD)
/// and the achieved physical quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoricalRecord<T> {
    pub investment: T,
    pub quality: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit<T> {
    /// quality units per million USD
    pub a_hat: T,
    /// root mean squared residual
    pub sigma_hat: T,
    /// mean squared residual, i.e. `sigma_hat^2`
    pub mean_squared_residual: T,
    /// standard error of `a_hat` given `sigma_hat`
    pub a_hat_std_error: T,
    pub q0: T,
    pub i0: T,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams<T> {
    pub a: T,
    pub sigma: T,
    pub q_required: T,
    /// years
    pub horizon: T,
    /// million USD per year
    pub cost_rate: T,
}

impl<T: Scalar> DimensionlessParams<T> {
    /// Reasons these parameters fall outside the model's domain, if any.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.a.is_nan() || self.a <= T::zero() {
            out.push(format!(
                "a = {} is not positive; effort does not move quality toward the requirement",
                self.a
            ));
        }
        if self.sigma.is_nan() || self.sigma <= T::zero() {
            out.push(format!(
                "sigma = {} is outside the model domain (sigma must be > 0)",
                self.sigma
            ));
        }
        out
    }

    /// Agent parameters in requirement units (`r = 1`) with opportunity cost `c`.
    pub fn to_agent(&self, c: T) -> Result<AgentParams<T>> {
        AgentParams::new(self.a, self.sigma, c, T::one())
    }
}

/// Pinned-intercept maximum-likelihood fit.
pub fn fit_linear_mle<T: Scalar>(
    records: &[HistoricalRecord<T>],
    q0: T,
    i0: T,
) -> Result<CalibrationFit<T>> {
    if records.len() < 2 {
        return Err(ModelError::InsufficientData {
            min: 2,
            got: records.len(),
        });
    }
    let first = records[0].investment;
    if records.iter().all(|r| r.investment == first) {
        return Err(ModelError::DegenerateInvestments);
    }

    let (sxy, sxx) = records.iter().fold((T::zero(), T::zero()), |(sxy, sxx), r| {
        let d = r.investment - i0;
        (sxy + d * (r.quality - q0), sxx + d * d)
    });
    if sxx == T::zero() {
        return Err(ModelError::DegenerateInvestments);
    }
    let a_hat = sxy / sxx;
    let n = T::from_usize(records.len()).unwrap();
    let rss = records.iter().fold(T::zero(), |acc, r| {
        let res = q0 + a_hat * (r.investment - i0) - r.quality;
        acc + res * res
    });
    let msr = rss / n;
    let sigma_hat = msr.sqrt();
    Ok(CalibrationFit {
        a_hat,
        sigma_hat,
        mean_squared_residual: msr,
        a_hat_std_error: sigma_hat / sxx.sqrt(),
        q0,
        i0,
        n_points: records.len(),
    })
}

fn requirement_gap<T: Scalar>(q0: T, q_required: T) -> Result<T> {
    let gap = q_required - q0;
    if gap == T::zero() {
        Err(ModelError::RequirementEqualsBaseline(q0.to_f64_lossy()))
    } else {
        Ok(gap)
    }
}

/// `a = T C A_hat / (Q_r - Q0)`, `sigma = Sigma_hat / (Q_r - Q0)`.
pub fn to_dimensionless<T: Scalar>(
    fit: &CalibrationFit<T>,
    q_required: T,
    horizon: T,
    cost_rate: T,
) -> Result<DimensionlessParams<T>> {
    let gap = requirement_gap(fit.q0, q_required)?;
    for (field, v) in [("horizon", horizon), ("cost_rate", cost_rate)] {
        if !(v.is_finite() && v > T::zero()) {
            return Err(ModelError::InvalidParameter {
                field,
                value: v.to_f64_lossy(),
                reason: "must be finite and > 0",
            });
        }
    }
    Ok(DimensionlessParams {
        a: horizon * cost_rate * fit.a_hat / gap,
        sigma: fit.sigma_hat / gap,
        q_required,
        horizon,
        cost_rate,
    })
}

/// Quality in requirement units: 0 at the state of the art, 1 at the requirement.
pub fn scaled_quality<T: Scalar>(q_physical: T, q0: T, q_required: T) -> Result<T> {
    let gap = requirement_gap(q0, q_required)?;
    Ok((q_physical - q0) / gap)
}

/// Effort implied by an investment: `(I - I0) / (T C)`.
pub fn effort_from_investment<T: Scalar>(investment: T, i0: T, horizon: T, cost_rate: T) -> T {
    (investment - i0) / (horizon * cost_rate)
}

/// Draws synthetic records from the fitted model at the given investments,
/// sample `s` using normal stream index `s`.
pub fn synthetic_records(
    a: f64,
    sigma: f64,
    q0: f64,
    i0: f64,
    investments: &[f64],
    seed: u64,
) -> Vec<HistoricalRecord<f64>> {
    let mut stream = NormalStream::new(seed);
    let mut xi = [0.0];
    investments
        .iter()
        .enumerate()
        .map(|(s, &inv)| {
            stream.fill(s as u64, &mut xi);
            HistoricalRecord {
                investment: inv,
                quality: q0 + a * (inv - i0) + sigma * xi[0],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rec(investment: f64, quality: f64) -> HistoricalRecord<f64> {
        HistoricalRecord { investment, quality }
    }

    #[test]
    fn exact_line_has_zero_residual() {
        let rs: Vec<_> = [0.0, 3.0, 10.0, 20.0]
            .iter()
            .map(|&i| rec(i, 5.0 + 0.5 * (i - 10.0)))
            .collect();
        let fit = fit_linear_mle(&rs, 5.0, 10.0).unwrap();
        assert_abs_diff_eq!(fit.a_hat, 0.5, epsilon = 1e-15);
        assert_eq!(fit.sigma_hat, 0.0);
        assert_eq!(fit.n_points, 4);
    }

    #[test]
    fn symmetric_pair_gives_chord_slope() {
        // residuals +0.1 and -0.1 around the chord through the anchor
        let rs = [rec(8.0, 1.0 - 0.4 + 0.1), rec(12.0, 1.0 + 0.4 - 0.1)];
        let fit = fit_linear_mle(&rs, 1.0, 10.0).unwrap();
        let chord = (rs[1].quality - rs[0].quality) / 4.0;
        assert_abs_diff_eq!(fit.a_hat, chord, epsilon = 1e-14);
    }

    #[test]
    fn order_and_duplicates_are_fine() {
        let rs = [rec(3.0, 2.0), rec(1.0, 1.1), rec(3.0, 2.2), rec(2.0, 1.4)];
        let mut rev = rs;
        rev.reverse();
        let a = fit_linear_mle(&rs, 1.0, 1.0).unwrap();
        let b = fit_linear_mle(&rev, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(a.a_hat, b.a_hat, epsilon = 1e-15);
        assert_abs_diff_eq!(a.sigma_hat, b.sigma_hat, epsilon = 1e-15);
    }

    #[test]
    fn residuals_are_orthogonal_to_regressor() {
        let rs = synthetic_records(0.035, 0.15, 19.0, 102.4, &(0..50).map(|i| 60.0 + i as f64).collect::<Vec<_>>(), 9);
        let fit = fit_linear_mle(&rs, 19.0, 102.4).unwrap();
        let (dot, scale) = rs.iter().fold((0.0, 0.0), |(dot, scale), r| {
            let d = r.investment - 102.4;
            let res = 19.0 + fit.a_hat * d - r.quality;
            (dot + d * res, scale + (d * res).abs())
        });
        assert!(dot.abs() <= 1e-9 * scale);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            fit_linear_mle(&[rec(1.0, 1.0)], 0.0, 0.0),
            Err(ModelError::InsufficientData { min: 2, got: 1 })
        );
        assert_eq!(
            fit_linear_mle(&[rec(1.0, 1.0), rec(1.0, 2.0)], 0.0, 0.0),
            Err(ModelError::DegenerateInvestments)
        );
    }

    #[test]
    fn power_subsystem_coefficient() {
        let fit = CalibrationFit {
            a_hat: 0.035,
            sigma_hat: 0.15,
            mean_squared_residual: 0.0225,
            a_hat_std_error: 0.0,
            q0: 19.0,
            i0: 102.4,
            n_points: 10,
        };
        for (qr, t) in [(19.5, 10.0), (20.0, 4.0), (21.5, 25.0)] {
            let d = to_dimensionless(&fit, qr, t, 0.1).unwrap();
            assert_abs_diff_eq!(d.a * (qr - 19.0) / t, 0.0035, epsilon = 1e-15);
        }
        let d = to_dimensionless(&fit, 19.5, 10.0, 0.1).unwrap();
        assert_abs_diff_eq!(d.a, 0.07, epsilon = 1e-15);
        assert_abs_diff_eq!(d.sigma, 0.3, epsilon = 1e-14);
        let tight = to_dimensionless(&fit, 19.1, 10.0, 0.1).unwrap();
        assert_abs_diff_eq!(tight.sigma, 1.5, epsilon = 1e-12);
        assert!(to_dimensionless(&fit, 19.0, 10.0, 0.1).is_err());
        assert!(to_dimensionless(&fit, 20.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn propulsion_uses_unrounded_coefficient() {
        let fit = CalibrationFit {
            a_hat: 0.0133,
            sigma_hat: 0.12,
            mean_squared_residual: 0.0144,
            a_hat_std_error: 0.0,
            q0: 252.0,
            i0: 149.1,
            n_points: 10,
        };
        let d = to_dimensionless(&fit, 253.0, 10.0, 0.1).unwrap();
        assert_abs_diff_eq!(d.a, 0.0133, epsilon = 1e-15);
    }

    #[test]
    fn zero_sigma_is_flagged() {
        let fit = fit_linear_mle(&[rec(0.0, 0.0), rec(2.0, 1.0)], 0.0, 0.0).unwrap();
        let d = to_dimensionless(&fit, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(d.warnings().len(), 1);
        assert!(d.to_agent(0.01).is_err());
    }

    #[test]
    fn scaled_quality_anchors() {
        assert_eq!(scaled_quality(19.0, 19.0, 20.0).unwrap(), 0.0);
        assert_eq!(scaled_quality(20.0, 19.0, 20.0).unwrap(), 1.0);
        assert_eq!(scaled_quality(19.5, 19.0, 20.0).unwrap(), 0.5);
        assert_eq!(
            scaled_quality(19.5, 19.0, 19.0),
            Err(ModelError::RequirementEqualsBaseline(19.0))
        );
    }

    #[test]
    fn effort_definition() {
        assert_abs_diff_eq!(effort_from_investment(103.4, 102.4, 10.0, 0.1), 1.0, epsilon = 1e-12);
    }
}
