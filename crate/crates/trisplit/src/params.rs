//! Parameter validation and suggestion for the splitting operator.
//!
//! Two regimes are supported, keyed by the sum of the monotonicity moduli of
//! the two resolvent operators:
//!
//! * **Neutral** (`alpha + beta = 0`): the resolvent parameters are tied by
//!   `delta = gamma / (1 + 2*gamma*alpha)` and the step ceiling is
//!   `eta* = 2 + 2*gamma*alpha - gamma/(2*sigma)`.
//! * **Strong** (`alpha + beta > 0`): for a given `gamma` with
//!   `1/gamma` above a threshold `gamma0`, `1/delta` may range over an open
//!   interval around `1/gamma + 2*alpha`, and the ceiling is
//!   `eta* = [4*gamma*delta*(1+gamma*alpha)*(1+delta*beta) - (gamma+delta)^2]
//!           / [2*gamma*delta^2*(alpha+beta)] - gamma/(2*sigma)`.
//!
//! Convergence-mode plans require the relaxation step `eta` strictly below
//! `eta*`; plans that violate this can only be built through
//! [`ParamPlan::for_certification`] and are refused by the iteration driver.

use thiserror::Error;

use crate::operators::Cocoercivity;
use crate::scalar::{lit, Scalar};

/// Tolerance on `alpha + beta = 0` for the neutral regime.
pub const NEUTRAL_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error(
        "gamma = {gamma} infeasible for neutral regime (1 + 2*gamma*alpha = {one_plus}, eta* = {eta_star}); \
         feasible whenever 1/gamma > max(-2*alpha, -alpha + 1/(4*sigma))"
    )]
    InfeasibleGamma {
        gamma: f64,
        one_plus: f64,
        eta_star: f64,
    },
    #[error("moduli do not sum to zero (alpha + beta = {sum:e}); neutral regime requires alpha + beta = 0")]
    NotNeutral { sum: f64 },
    #[error("moduli sum alpha + beta = {sum:e} is not positive; strong regime requires alpha + beta > 0")]
    NonStrongPair { sum: f64 },
    #[error("moduli sum alpha + beta = {sum:e} is negative, outside the convergence theory")]
    NonMonotonePair { sum: f64 },
    #[error("1/gamma = {inv_gamma} is not above the threshold gamma0 = {gamma0}")]
    GammaBelowThreshold { inv_gamma: f64, gamma0: f64 },
    #[error("(gamma, delta) = ({gamma}, {delta}) yields eta* = {eta_star} <= 0{}", feasible_hint(.range))]
    InfeasiblePair {
        gamma: f64,
        delta: f64,
        eta_star: f64,
        range: Option<DeltaRange<f64>>,
    },
    #[error("eta fraction must lie strictly in (0, 1), got {0}")]
    BadEtaFraction(f64),
    #[error("resolvent parameters must be positive, got gamma = {gamma}, delta = {delta}")]
    NonPositiveParameter { gamma: f64, delta: f64 },
}

fn feasible_hint(range: &Option<DeltaRange<f64>>) -> String {
    match range {
        Some(r) => format!(
            "; feasible 1/delta interval is ({}, {})",
            r.inv_delta_lo, r.inv_delta_hi
        ),
        None => String::new(),
    }
}

/// Which convergence regime a plan was validated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `alpha + beta = 0`, tied resolvent parameters.
    Neutral,
    /// `alpha + beta > 0`, interval choice for `delta`.
    Strong,
}

/// Open interval for `1/delta` admissible at a given `gamma` in the strong
/// regime, together with the discriminant that generated it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRange<T> {
    /// Lower endpoint for `1/delta` (already clamped at zero).
    pub inv_delta_lo: T,
    /// Upper endpoint for `1/delta`.
    pub inv_delta_hi: T,
    /// `Delta = (alpha+beta) * (1/gamma + alpha - 1/(4*sigma))`.
    pub discriminant: T,
}

impl<T: Scalar> DeltaRange<T> {
    pub fn contains_inv_delta(&self, inv_delta: T) -> bool {
        inv_delta > self.inv_delta_lo && inv_delta < self.inv_delta_hi
    }

    fn to_f64(self) -> DeltaRange<f64> {
        DeltaRange {
            inv_delta_lo: self.inv_delta_lo.to_f64().unwrap_or(f64::NAN),
            inv_delta_hi: self.inv_delta_hi.to_f64().unwrap_or(f64::NAN),
            discriminant: self.discriminant.to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// Validated algorithm parameters, including the moduli they were derived
/// from. `lambda` always equals `1 + delta/gamma` exactly as computed.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPlan<T> {
    pub gamma: T,
    pub delta: T,
    pub lambda: T,
    pub eta: T,
    pub eta_star: T,
    pub regime: Regime,
    /// Monotonicity modulus of `A` this plan was validated against.
    pub alpha: T,
    /// Monotonicity modulus of `B` this plan was validated against.
    pub beta: T,
    /// Cocoercivity constant of `C` this plan was validated against.
    pub sigma: Cocoercivity<T>,
    certification_only: bool,
}

impl<T: Scalar> ParamPlan<T> {
    /// True when the plan satisfies the strict step condition `eta < eta*`
    /// required for convergence-mode runs.
    pub fn is_convergent(&self) -> bool {
        !self.certification_only && self.eta < self.eta_star
    }

    /// Returns a copy with the relaxation step replaced, flagged for
    /// certification experiments when the new step breaks `eta < eta*`.
    pub fn for_certification(&self, eta: T) -> Self {
        let mut plan = self.clone();
        plan.eta = eta;
        plan.certification_only = eta >= plan.eta_star;
        plan
    }

    /// `omega_1 = eta*/eta - 1`, the coefficient of the residual term in the
    /// averagedness inequality and the telescoped residual bound.
    pub fn omega1(&self) -> T {
        self.eta_star / self.eta - T::one()
    }
}

fn check_eta_fraction<T: Scalar>(fraction: T) -> Result<(), ParamError> {
    if fraction <= T::zero() || fraction >= T::one() {
        return Err(ParamError::BadEtaFraction(
            fraction.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(())
}

fn check_positive<T: Scalar>(gamma: T, delta: T) -> Result<(), ParamError> {
    if gamma <= T::zero() || delta <= T::zero() {
        return Err(ParamError::NonPositiveParameter {
            gamma: gamma.to_f64().unwrap_or(f64::NAN),
            delta: delta.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Builds a neutral-regime plan: requires `alpha + beta = 0` (within
/// [`NEUTRAL_SUM_TOL`]), sets `delta = gamma/(1+2*gamma*alpha)` and
/// `eta = eta_fraction * eta*` with `eta* = 2 + 2*gamma*alpha - gamma/(2*sigma)`.
pub fn plan_neutral<T: Scalar>(
    alpha: T,
    beta: T,
    sigma: Cocoercivity<T>,
    gamma: T,
    eta_fraction: T,
) -> Result<ParamPlan<T>, ParamError> {
    let sum = alpha + beta;
    if sum.abs() > lit::<T>(NEUTRAL_SUM_TOL) {
        return Err(ParamError::NotNeutral {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    check_positive(gamma, gamma)?;
    check_eta_fraction(eta_fraction)?;

    let two = lit::<T>(2.0);
    let one_plus = T::one() + two * gamma * alpha;
    let eta_star = if one_plus > T::zero() {
        two + two * gamma * alpha - sigma.half_over(gamma)
    } else {
        T::zero()
    };
    if one_plus <= T::zero() || eta_star <= T::zero() {
        return Err(ParamError::InfeasibleGamma {
            gamma: gamma.to_f64().unwrap_or(f64::NAN),
            one_plus: one_plus.to_f64().unwrap_or(f64::NAN),
            eta_star: eta_star.to_f64().unwrap_or(f64::NAN),
        });
    }
    let delta = gamma / one_plus;
    Ok(ParamPlan {
        gamma,
        delta,
        lambda: T::one() + delta / gamma,
        eta: eta_fraction * eta_star,
        eta_star,
        regime: Regime::Neutral,
        alpha,
        beta,
        sigma,
        certification_only: false,
    })
}

/// Threshold `gamma0` such that the strong regime admits some `delta` exactly
/// when `1/gamma > gamma0`. Always satisfies
/// `gamma0 >= max(0, -alpha + 1/(4*sigma))`.
pub fn gamma_threshold<T: Scalar>(
    alpha: T,
    beta: T,
    sigma: Cocoercivity<T>,
) -> Result<T, ParamError> {
    let sum = alpha + beta;
    if sum <= T::zero() {
        return Err(ParamError::NonStrongPair {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    let quarter = sigma.quarter_inverse();
    let two = lit::<T>(2.0);
    if alpha >= quarter {
        Ok(T::zero())
    } else if alpha >= -quarter {
        Ok(-alpha + quarter)
    } else {
        Ok(two * beta - two * (sum * (beta - quarter)).sqrt())
    }
}

/// The admissible open interval for `1/delta` at a given `gamma` in the
/// strong regime.
pub fn delta_range<T: Scalar>(
    alpha: T,
    beta: T,
    sigma: Cocoercivity<T>,
    gamma: T,
) -> Result<DeltaRange<T>, ParamError> {
    check_positive(gamma, gamma)?;
    let gamma0 = gamma_threshold(alpha, beta, sigma)?;
    let inv_gamma = T::one() / gamma;
    if inv_gamma <= gamma0 {
        return Err(ParamError::GammaBelowThreshold {
            inv_gamma: inv_gamma.to_f64().unwrap_or(f64::NAN),
            gamma0: gamma0.to_f64().unwrap_or(f64::NAN),
        });
    }
    let sum = alpha + beta;
    let discriminant = sum * (inv_gamma + alpha - sigma.quarter_inverse());
    let two = lit::<T>(2.0);
    let root = discriminant.sqrt();
    let center = inv_gamma + two * alpha;
    let range = DeltaRange {
        inv_delta_lo: (center - two * root).max(T::zero()),
        inv_delta_hi: center + two * root,
        discriminant,
    };
    // above the threshold the interval is nonempty and the discriminant positive
    debug_assert!(range.discriminant > T::zero());
    debug_assert!(range.inv_delta_lo < range.inv_delta_hi);
    Ok(range)
}

/// The strong-regime step ceiling for a concrete `(gamma, delta)` pair; does
/// not validate positivity of the result.
pub fn eta_star_strong<T: Scalar>(
    alpha: T,
    beta: T,
    sigma: Cocoercivity<T>,
    gamma: T,
    delta: T,
) -> T {
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let bracket = four * gamma * delta * (T::one() + gamma * alpha) * (T::one() + delta * beta)
        - (gamma + delta) * (gamma + delta);
    bracket / (two * gamma * delta * delta * (alpha + beta)) - sigma.half_over(gamma)
}

/// Builds a strong-regime plan for a concrete `(gamma, delta)`; fails with
/// the feasible `1/delta` interval attached when `eta* <= 0`.
pub fn plan_strong<T: Scalar>(
    alpha: T,
    beta: T,
    sigma: Cocoercivity<T>,
    gamma: T,
    delta: T,
    eta_fraction: T,
) -> Result<ParamPlan<T>, ParamError> {
    let sum = alpha + beta;
    if sum <= T::zero() {
        return Err(ParamError::NonStrongPair {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    check_positive(gamma, delta)?;
    check_eta_fraction(eta_fraction)?;

    let eta_star = eta_star_strong(alpha, beta, sigma, gamma, delta);
    if eta_star <= T::zero() {
        let range = delta_range(alpha, beta, sigma, gamma)
            .ok()
            .map(|r| r.to_f64());
        return Err(ParamError::InfeasiblePair {
            gamma: gamma.to_f64().unwrap_or(f64::NAN),
            delta: delta.to_f64().unwrap_or(f64::NAN),
            eta_star: eta_star.to_f64().unwrap_or(f64::NAN),
            range,
        });
    }
    Ok(ParamPlan {
        gamma,
        delta,
        lambda: T::one() + delta / gamma,
        eta: eta_fraction * eta_star,
        eta_star,
        regime: Regime::Strong,
        alpha,
        beta,
        sigma,
        certification_only: false,
    })
}

/// Default fraction of the step ceiling used by [`suggest`].
pub const DEFAULT_ETA_FRACTION: f64 = 0.9;

/// Picks feasible parameters from the moduli alone.
///
/// Neutral: `1/gamma = max(-2*alpha, -alpha + 1/(4*sigma), 0) + 1`.
/// Strong: `1/gamma = gamma0 + 1` and `1/delta` at the midpoint of the
/// admissible interval. Both use `eta = 0.9 * eta*`.
pub fn suggest<T: Scalar>(
    alpha: T,
    beta: T,
    sigma: Cocoercivity<T>,
) -> Result<ParamPlan<T>, ParamError> {
    let sum = alpha + beta;
    if sum < -lit::<T>(NEUTRAL_SUM_TOL) {
        return Err(ParamError::NonMonotonePair {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    let fraction = lit::<T>(DEFAULT_ETA_FRACTION);
    let two = lit::<T>(2.0);
    if sum.abs() <= lit::<T>(NEUTRAL_SUM_TOL) {
        let floor = (-two * alpha)
            .max(-alpha + sigma.quarter_inverse())
            .max(T::zero());
        let gamma = T::one() / (floor + T::one());
        plan_neutral(alpha, beta, sigma, gamma, fraction)
    } else {
        let gamma0 = gamma_threshold(alpha, beta, sigma)?;
        let gamma = T::one() / (gamma0 + T::one());
        let range = delta_range(alpha, beta, sigma, gamma)?;
        let inv_delta = (range.inv_delta_lo + range.inv_delta_hi) / two;
        plan_strong(alpha, beta, sigma, gamma, T::one() / inv_delta, fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FIN: fn(f64) -> Cocoercivity<f64> = Cocoercivity::Finite;

    #[test]
    fn neutral_plan_cor42_example() {
        // alpha = beta = 0, sigma = 1, gamma = 2: delta = gamma, eta* = 2 - gamma/(2 sigma)
        let plan = plan_neutral(0.0, 0.0, FIN(1.0), 2.0, 0.5).unwrap();
        assert_eq!(plan.delta, 2.0);
        assert_eq!(plan.lambda, 2.0);
        assert_eq!(plan.eta_star, 1.0);
        assert_eq!(plan.eta, 0.5);
        assert_eq!(plan.regime, Regime::Neutral);
        assert!(plan.is_convergent());
    }

    #[test]
    fn neutral_plan_shifted_moduli() {
        let plan = plan_neutral(0.5, -0.5, FIN(1.0), 1.0, 0.5).unwrap();
        assert_eq!(plan.delta, 0.5);
        assert_eq!(plan.lambda, 1.5);
        assert_eq!(plan.eta_star, 2.5);
    }

    #[test]
    fn neutral_plan_rejects_infeasible_gamma() {
        let err = plan_neutral(-1.0, 1.0, FIN(1.0), 1.0, 0.5).unwrap_err();
        match err {
            ParamError::InfeasibleGamma { one_plus, .. } => assert_eq!(one_plus, -1.0),
            other => panic!("unexpected error {other:?}"),
        }
        // and the error message carries the feasibility recipe
        let msg = plan_neutral(-1.0, 1.0, FIN(1.0), 1.0, 0.5)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("1/gamma > max(-2*alpha, -alpha + 1/(4*sigma))"));
    }

    #[test]
    fn lambda_is_exactly_one_plus_delta_over_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let alpha: f64 = rng.random_range(-0.4..1.0);
            let gamma: f64 = rng.random_range(0.05..2.0);
            if let Ok(plan) = plan_neutral(alpha, -alpha, FIN(1.0), gamma, 0.9) {
                assert_eq!(plan.lambda, 1.0 + plan.delta / plan.gamma);
            }
            let beta: f64 = rng.random_range(0.1..1.5);
            let delta: f64 = rng.random_range(0.05..2.0);
            if let Ok(plan) = plan_strong(alpha, beta, FIN(1.0), gamma, delta, 0.9) {
                assert_eq!(plan.lambda, 1.0 + plan.delta / plan.gamma);
            }
        }
    }

    #[test]
    fn gamma_threshold_three_cases() {
        assert_eq!(gamma_threshold(1.0, 1.0, FIN(0.25)).unwrap(), 0.0);
        assert_eq!(gamma_threshold(0.0, 1.0, FIN(1.0)).unwrap(), 0.25);
        let got = gamma_threshold(-1.0, 2.0, FIN(1.0)).unwrap();
        let expect = 4.0 - 2.0 * 1.75f64.sqrt();
        assert!((got - expect).abs() < 1e-14);
        assert!((got - 1.3542487).abs() < 1e-6);
        assert!(matches!(
            gamma_threshold(1.0, -1.0, FIN(1.0)).unwrap_err(),
            ParamError::NonStrongPair { .. }
        ));
    }

    /// Direct evaluation of the strong-regime feasibility condition:
    /// eta* computed from (gamma, delta) is positive.
    fn condition_direct(alpha: f64, beta: f64, sigma: f64, gamma: f64, delta: f64) -> bool {
        eta_star_strong(alpha, beta, FIN(sigma), gamma, delta) > 0.0
    }

    #[test]
    fn gamma_threshold_is_scan_transition_point() {
        // Slightly above gamma0 some delta satisfies the direct condition;
        // slightly below none does (log-grid scan oracle).
        let cases = [(-1.0, 2.0, 1.0), (0.0, 1.0, 1.0), (-2.0, 2.5, 0.7)];
        for (alpha, beta, sigma) in cases {
            let gamma0 = gamma_threshold(alpha, beta, FIN(sigma)).unwrap();
            let scan = |inv_gamma: f64| -> bool {
                let gamma = 1.0 / inv_gamma;
                (0..4000).any(|k| {
                    let delta = 10f64.powf(-4.0 + 8.0 * k as f64 / 3999.0);
                    condition_direct(alpha, beta, sigma, gamma, delta)
                })
            };
            assert!(
                scan(gamma0 + 0.01),
                "feasible above gamma0 for {alpha},{beta}"
            );
            if gamma0 > 0.02 {
                assert!(
                    !scan(gamma0 - 0.01),
                    "infeasible below gamma0 for {alpha},{beta}"
                );
            }
        }
    }

    #[test]
    fn delta_range_frozen_examples_and_scan_oracle() {
        // (alpha=0, beta=1, sigma=1, gamma=1): 1/delta in (0, 1 + 2*sqrt(0.75))
        let r = delta_range(0.0, 1.0, FIN(1.0), 1.0).unwrap();
        assert_eq!(r.inv_delta_lo, 0.0);
        assert!((r.inv_delta_hi - (1.0 + 2.0 * 0.75f64.sqrt())).abs() < 1e-15);
        assert!((r.discriminant - 0.75).abs() < 1e-15);
        // delta itself must exceed 0.3660254...
        assert!(1.0 / 0.366_025_403_784_438_6 < r.inv_delta_hi + 1e-12);

        // (alpha=1, beta=1, sigma=1, gamma=1): 1/delta in (max(0, 3-2*sqrt(3.5)), 3+2*sqrt(3.5))
        let r2 = delta_range(1.0, 1.0, FIN(1.0), 1.0).unwrap();
        let root = 3.5f64.sqrt();
        assert_eq!(r2.inv_delta_lo, (3.0 - 2.0 * root).max(0.0));
        assert!((r2.inv_delta_hi - (3.0 + 2.0 * root)).abs() < 1e-15);

        // below threshold
        assert!(matches!(
            delta_range(0.0, 1.0, FIN(1.0), 5.0).unwrap_err(),
            ParamError::GammaBelowThreshold { .. }
        ));

        // scan oracle: the empirical transition of the direct condition over a
        // fine delta grid brackets the interval endpoints
        for (alpha, beta, sigma, gamma) in [
            (0.0, 1.0, 1.0, 1.0),
            (1.0, 1.0, 1.0, 1.0),
            (-0.5, 1.2, 0.8, 0.4),
        ] {
            let r = delta_range(alpha, beta, FIN(sigma), gamma).unwrap();
            let mut feas_lo = f64::INFINITY;
            let mut feas_hi = f64::NEG_INFINITY;
            let grid = 60_000;
            for k in 0..grid {
                let inv_delta = 10f64.powf(-3.0 + 7.0 * k as f64 / (grid - 1) as f64);
                if condition_direct(alpha, beta, sigma, gamma, 1.0 / inv_delta) {
                    feas_lo = feas_lo.min(inv_delta);
                    feas_hi = feas_hi.max(inv_delta);
                }
            }
            let step = 3e-4; // relative grid resolution
            assert!((feas_hi - r.inv_delta_hi).abs() <= step * r.inv_delta_hi.abs().max(1.0));
            if r.inv_delta_lo > 1e-3 {
                assert!((feas_lo - r.inv_delta_lo).abs() <= step * r.inv_delta_lo.abs().max(1.0));
            }
        }
    }

    #[test]
    fn plan_strong_zero_c_example() {
        // alpha=1, beta=0, C = Zero: eta* = (4*2*1 - 4)/2 = 2
        let plan = plan_strong(1.0, 0.0, Cocoercivity::Unbounded, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(plan.eta_star, 2.0);
        assert_eq!(plan.lambda, 2.0);
        assert_eq!(plan.eta, 1.0);
        assert_eq!(plan.regime, Regime::Strong);
    }

    #[test]
    fn plan_strong_rejects_delta_outside_interval() {
        let err = plan_strong(0.0, 1.0, FIN(1.0), 1.0, 0.1, 0.5).unwrap_err();
        match err {
            ParamError::InfeasiblePair { range, .. } => {
                let r = range.expect("interval exists above threshold");
                assert!(!(10.0 > r.inv_delta_lo && 10.0 < r.inv_delta_hi));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn eta_star_positive_iff_inside_interval() {
        // equivalence of the direct condition and the interval condition
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut tested = 0;
        while tested < 10_000 {
            let alpha: f64 = rng.random_range(-3.0..3.0);
            let beta: f64 = -alpha + 10f64.powf(rng.random_range(-2.0..0.7));
            let sigma: f64 = 10f64.powf(rng.random_range(-1.3..1.3));
            let gamma: f64 = 10f64.powf(rng.random_range(-2.0..2.0));
            let delta: f64 = 10f64.powf(rng.random_range(-2.0..2.0));
            let direct = condition_direct(alpha, beta, sigma, gamma, delta);
            let eta_star = eta_star_strong(alpha, beta, FIN(sigma), gamma, delta);
            // skip the boundary band where strict inequalities are untestable
            if eta_star.abs() <= 1e-10 * (1.0 + gamma / (2.0 * sigma)) {
                continue;
            }
            let via_interval = match delta_range(alpha, beta, FIN(sigma), gamma) {
                Ok(r) => {
                    let inv_delta = 1.0 / delta;
                    let dist = (inv_delta - r.inv_delta_lo)
                        .abs()
                        .min((inv_delta - r.inv_delta_hi).abs());
                    if dist <= 1e-10 * inv_delta.max(1.0) {
                        continue;
                    }
                    r.contains_inv_delta(inv_delta)
                }
                Err(ParamError::GammaBelowThreshold { inv_gamma, gamma0 }) => {
                    if (inv_gamma - gamma0).abs() <= 1e-10 * inv_gamma.max(1.0) {
                        continue;
                    }
                    false
                }
                Err(other) => panic!("unexpected error {other:?}"),
            };
            assert_eq!(direct, via_interval, "disagreement at alpha={alpha} beta={beta} sigma={sigma} gamma={gamma} delta={delta}");
            tested += 1;
        }
    }

    #[test]
    fn gamma_threshold_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let alpha: f64 = rng.random_range(-3.0..3.0);
            let beta: f64 = -alpha + 10f64.powf(rng.random_range(-3.0..1.0));
            let sigma: f64 = 10f64.powf(rng.random_range(-1.5..1.5));
            let gamma0 = gamma_threshold(alpha, beta, FIN(sigma)).unwrap();
            let bound = (0.0f64).max(-alpha + 1.0 / (4.0 * sigma));
            assert!(gamma0 >= bound - 1e-12 * bound.abs().max(1.0));
        }
    }

    #[test]
    fn eta_star_degenerates_at_interval_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let alpha: f64 = rng.random_range(-1.5..1.5);
            let beta: f64 = -alpha + 10f64.powf(rng.random_range(-1.0..0.7));
            let sigma: f64 = 10f64.powf(rng.random_range(-1.0..1.0));
            let gamma0 = gamma_threshold(alpha, beta, FIN(sigma)).unwrap();
            let gamma = 1.0 / (gamma0 + rng.random_range(0.2..2.0));
            let r = delta_range(alpha, beta, FIN(sigma), gamma).unwrap();
            // strictly inside: positive
            let mid = (r.inv_delta_lo + r.inv_delta_hi) / 2.0;
            assert!(eta_star_strong(alpha, beta, FIN(sigma), gamma, 1.0 / mid) > 0.0);
            // at the unclamped endpoints: vanishes to first order
            let at_hi = eta_star_strong(alpha, beta, FIN(sigma), gamma, 1.0 / r.inv_delta_hi);
            assert!(at_hi.abs() <= 1e-7 * (1.0 + r.inv_delta_hi.powi(2)));
            // outside: nonpositive
            let outside = r.inv_delta_hi * 1.01;
            assert!(eta_star_strong(alpha, beta, FIN(sigma), gamma, 1.0 / outside) <= 0.0);
            if r.inv_delta_lo > 1e-9 {
                let at_lo = eta_star_strong(alpha, beta, FIN(sigma), gamma, 1.0 / r.inv_delta_lo);
                assert!(at_lo.abs() <= 1e-7 * (1.0 + r.inv_delta_lo.powi(2)));
                let below = r.inv_delta_lo * 0.99;
                assert!(eta_star_strong(alpha, beta, FIN(sigma), gamma, 1.0 / below) <= 0.0);
            }
        }
    }

    #[test]
    fn strong_eta_star_tends_to_neutral_limit() {
        // beta = -alpha + eps with the neutral delta tie: eta*(strong) -> eta*(neutral)
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let alpha: f64 = rng.random_range(-0.3..0.8);
            let sigma: f64 = 10f64.powf(rng.random_range(-0.5..0.5));
            let gamma: f64 = {
                let floor = (-2.0 * alpha).max(-alpha + 1.0 / (4.0 * sigma)).max(0.0);
                1.0 / (floor + rng.random_range(0.5..2.0))
            };
            let neutral = plan_neutral(alpha, -alpha, FIN(sigma), gamma, 0.5).unwrap();
            for eps in [1e-3, 1e-4, 1e-5] {
                let beta = -alpha + eps;
                let strong = eta_star_strong(alpha, beta, FIN(sigma), gamma, neutral.delta);
                let gap = (strong - neutral.eta_star).abs();
                // under the neutral tie the eps-dependence cancels exactly, so
                // the observed gap is O(eps) plus cancellation noise ~ eps_mach/eps
                let d = neutral.delta;
                let noise = f64::EPSILON * (gamma + d).powi(2) / (2.0 * gamma * d * d * eps);
                assert!(
                    gap <= 50.0 * eps * (1.0 + neutral.eta_star.abs()) + 100.0 * noise,
                    "gap {gap} at eps {eps} (noise scale {noise})"
                );
            }
        }
    }

    #[test]
    fn suggest_examples_and_roundtrip() {
        // (0,0,1): 1/gamma = 1.25, delta = gamma, lambda = 2
        let plan = suggest(0.0, 0.0, FIN(1.0)).unwrap();
        assert!((1.0 / plan.gamma - 1.25).abs() < 1e-15);
        assert_eq!(plan.delta, plan.gamma);
        assert_eq!(plan.lambda, 2.0);

        // (0,1,1): 1/gamma = 1.25, Delta = 1, 1/delta = (0 + 1.25 + 2)/2
        let plan = suggest(0.0, 1.0, FIN(1.0)).unwrap();
        assert!((1.0 / plan.gamma - 1.25).abs() < 1e-15);
        assert!((1.0 / plan.delta - (1.25 + 2.0) / 2.0).abs() < 1e-12);

        assert!(matches!(
            suggest(0.0, -1.0, FIN(1.0)).unwrap_err(),
            ParamError::NonMonotonePair { .. }
        ));

        // every suggested plan revalidates through the explicit planners
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let alpha: f64 = rng.random_range(-1.5..1.5);
            let strong_beta: f64 = -alpha + 10f64.powf(rng.random_range(-2.0..0.7));
            let sigma = if rng.random_bool(0.2) {
                Cocoercivity::Unbounded
            } else {
                FIN(10f64.powf(rng.random_range(-1.0..1.0)))
            };
            let plan = suggest(alpha, -alpha, sigma).unwrap();
            let revalidated = plan_neutral(alpha, -alpha, sigma, plan.gamma, 0.9).unwrap();
            assert_eq!(plan, revalidated);
            let plan = suggest(alpha, strong_beta, sigma).unwrap();
            let revalidated =
                plan_strong(alpha, strong_beta, sigma, plan.gamma, plan.delta, 0.9).unwrap();
            assert_eq!(plan, revalidated);
            assert!(plan.is_convergent());
        }
    }

    #[test]
    fn certification_plans_are_flagged() {
        let plan = plan_neutral(0.0, 0.0, FIN(1.0), 2.0, 0.5).unwrap();
        let bad = plan.for_certification(3.0 * plan.eta_star);
        assert!(!bad.is_convergent());
        let still_ok = plan.for_certification(0.25 * plan.eta_star);
        assert!(still_ok.is_convergent());
    }

    #[test]
    fn unbounded_sigma_drops_penalty_terms() {
        // with C = Zero the gamma/(2 sigma) term vanishes: eta* = 2 + 2 g a
        let plan = plan_neutral(0.25, -0.25, Cocoercivity::Unbounded, 1.0, 0.5).unwrap();
        assert_eq!(plan.eta_star, 2.5);
        let g0 = gamma_threshold(-0.5, 1.0, Cocoercivity::<f64>::Unbounded).unwrap();
        // third case with 1/(4 sigma) = 0: 2*beta - 2*sqrt((a+b)*beta)
        assert!((g0 - (2.0 - 2.0 * 0.5f64.sqrt())).abs() < 1e-14);
    }
}
