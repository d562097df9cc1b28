//! Closed-form resolvents, forward maps, and subdifferential membership.
//!
//! The resolvent of `A` with parameter `gamma` is the inverse of
//! `Id + gamma*A`; for every catalog kind it is single-valued with full
//! domain whenever `1 + gamma*alpha > 0`, and is computed here in closed
//! form. Proximity operators arise as resolvents of subdifferentials.

use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, Vector};
use crate::operators::{CocoerciveKind, CocoerciveSpec, OperatorKind, OperatorSpec, Problem};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResolventError {
    #[error("resolvent step {gamma} infeasible: 1 + gamma*alpha = {one_plus} <= 0")]
    StepInfeasible { gamma: f64, one_plus: f64 },
    #[error("shift reduction infeasible: 1 + gamma*tau = {one_plus} <= 0")]
    ShiftInfeasible { one_plus: f64 },
    #[error("dimension mismatch: operator expects dim {expected}, point has dim {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("nonpositive resolvent parameter {0}")]
    NonPositiveGamma(f64),
    #[error("interior linear solve failed unexpectedly: {0}")]
    Internal(#[from] LinalgError),
    #[error("membership test needs a single-valued split of the sum")]
    NoSingleValuedSplit,
}

fn check_dim<T: Scalar>(spec_dim: Option<usize>, x: &Vector<T>) -> Result<(), ResolventError> {
    if let Some(expected) = spec_dim {
        if expected != x.dim() {
            return Err(ResolventError::DimensionMismatch {
                expected,
                got: x.dim(),
            });
        }
    }
    Ok(())
}

/// Evaluates `J_{gamma A}(x)`: the unique `a` with `x - a` in `gamma * A(a)`.
///
/// Requires `gamma > 0` and `1 + gamma * modulus > 0`.
pub fn resolvent<T: Scalar>(
    spec: &OperatorSpec<T>,
    gamma: T,
    x: &Vector<T>,
) -> Result<Vector<T>, ResolventError> {
    if gamma <= T::zero() {
        return Err(ResolventError::NonPositiveGamma(
            gamma.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let one_plus = T::one() + gamma * spec.modulus();
    if one_plus <= T::zero() {
        return Err(ResolventError::StepInfeasible {
            gamma: gamma.to_f64().unwrap_or(f64::NAN),
            one_plus: one_plus.to_f64().unwrap_or(f64::NAN),
        });
    }
    check_dim(spec.dim_constraint(), x)?;

    match spec.kind() {
        OperatorKind::Zero => Ok(x.clone()),
        OperatorKind::ScaledIdentity { alpha } => {
            let denom = T::one() + gamma * *alpha;
            Ok(x.scale(T::one() / denom))
        }
        OperatorKind::Affine { matrix, offset } => {
            // (I + gamma M) a = x - gamma b
            let system = Matrix::identity(x.dim()).add(&matrix.scale(gamma));
            let rhs = x.sub_scaled(gamma, offset);
            Ok(system.lu_solve(&rhs)?)
        }
        OperatorKind::SubdiffQuadratic { q, lin } => {
            let system = Matrix::identity(x.dim()).add(&q.scale(gamma));
            let rhs = x.sub_scaled(gamma, lin);
            Ok(system.lu_solve(&rhs)?)
        }
        OperatorKind::SubdiffL1 { weight } => {
            let threshold = gamma * *weight;
            Ok(Vector::from_fn(x.dim(), |i| {
                soft_threshold(x[i], threshold)
            }))
        }
        OperatorKind::SubdiffBoxIndicator { lo, hi } => {
            Ok(Vector::from_fn(x.dim(), |i| x[i].max(lo[i]).min(hi[i])))
        }
        OperatorKind::SubdiffBallIndicator { radius } => {
            let norm = x.norm();
            if norm <= *radius {
                Ok(x.clone())
            } else {
                Ok(x.scale(*radius / norm))
            }
        }
        OperatorKind::Shifted { base, tau } => {
            // flatten nested shifts onto the innermost base
            let mut total = *tau;
            let mut inner: &OperatorSpec<T> = base;
            while let OperatorKind::Shifted { base, tau } = inner.kind() {
                total = total + *tau;
                inner = base;
            }
            match inner.kind() {
                // linear bases absorb the shift into the solve; this stays
                // valid whenever 1 + gamma*modulus > 0, with no extra
                // restriction on the shift itself
                OperatorKind::Zero => Ok(x.scale(T::one() / (T::one() + gamma * total))),
                OperatorKind::ScaledIdentity { alpha } => {
                    Ok(x.scale(T::one() / (T::one() + gamma * (*alpha + total))))
                }
                OperatorKind::Affine { matrix, offset } => {
                    let system = Matrix::identity(x.dim())
                        .add(&matrix.scale(gamma))
                        .add_diagonal(gamma * total);
                    let rhs = x.sub_scaled(gamma, offset);
                    Ok(system.lu_solve(&rhs)?)
                }
                OperatorKind::SubdiffQuadratic { q, lin } => {
                    let system = Matrix::identity(x.dim())
                        .add(&q.scale(gamma))
                        .add_diagonal(gamma * total);
                    let rhs = x.sub_scaled(gamma, lin);
                    Ok(system.lu_solve(&rhs)?)
                }
                // set-valued bases have modulus zero, so the scaled rule
                // J_{gamma(A + tau Id)}(x) = J_{(gamma/(1+gamma tau)) A}(x/(1+gamma tau))
                // applies exactly when the resolvent exists
                _ => {
                    let scale = T::one() + gamma * total;
                    if scale <= T::zero() {
                        return Err(ResolventError::ShiftInfeasible {
                            one_plus: scale.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                    let inner_gamma = gamma / scale;
                    let inner_x = x.scale(T::one() / scale);
                    resolvent(inner, inner_gamma, &inner_x)
                }
            }
        }
    }
}

#[inline]
fn soft_threshold<T: Scalar>(v: T, threshold: T) -> T {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        T::zero()
    }
}

/// Evaluates the cocoercive map `C(x)`.
pub fn forward<T: Scalar>(
    spec: &CocoerciveSpec<T>,
    x: &Vector<T>,
) -> Result<Vector<T>, ResolventError> {
    check_dim(spec.dim_constraint(), x)?;
    match spec.kind() {
        CocoerciveKind::Zero => Ok(Vector::zeros(x.dim())),
        CocoerciveKind::LinearPsd { q, lin } => Ok(q.matvec(x).add(lin)),
        CocoerciveKind::HuberGrad { threshold, target } => {
            let mu = *threshold;
            Ok(Vector::from_fn(x.dim(), |i| {
                let d = x[i] - target[i];
                if d.abs() <= mu {
                    d / mu
                } else if d > T::zero() {
                    T::one()
                } else {
                    -T::one()
                }
            }))
        }
    }
}

/// Tests whether `residual` lies in `A(x)` within `tol`.
///
/// Set-valued kinds use their exact subdifferential/normal-cone
/// characterizations; single-valued kinds use a distance test.
pub fn subdiff_contains_zero<T: Scalar>(
    spec: &OperatorSpec<T>,
    x: &Vector<T>,
    residual: &Vector<T>,
    tol: T,
) -> Result<bool, ResolventError> {
    check_dim(spec.dim_constraint(), x)?;
    if x.dim() != residual.dim() {
        return Err(ResolventError::DimensionMismatch {
            expected: x.dim(),
            got: residual.dim(),
        });
    }
    match spec.kind() {
        OperatorKind::Zero => Ok(residual.norm() <= tol),
        OperatorKind::ScaledIdentity { .. }
        | OperatorKind::Affine { .. }
        | OperatorKind::SubdiffQuadratic { .. } => {
            let value = spec.forward_value(x).expect("single-valued kind");
            Ok(residual.sub(&value).norm() <= tol)
        }
        OperatorKind::SubdiffL1 { weight } => {
            let w = *weight;
            Ok((0..x.dim()).all(|i| {
                if x[i] > tol {
                    (residual[i] - w).abs() <= tol
                } else if x[i] < -tol {
                    (residual[i] + w).abs() <= tol
                } else {
                    residual[i].abs() <= w + tol
                }
            }))
        }
        OperatorKind::SubdiffBoxIndicator { lo, hi } => {
            Ok((0..x.dim()).all(|i| {
                if x[i] < lo[i] - tol || x[i] > hi[i] + tol {
                    return false; // outside the domain
                }
                let at_lo = x[i] <= lo[i] + tol;
                let at_hi = x[i] >= hi[i] - tol;
                match (at_lo, at_hi) {
                    (true, true) => true, // degenerate interval, normal cone is R
                    (true, false) => residual[i] <= tol,
                    (false, true) => residual[i] >= -tol,
                    (false, false) => residual[i].abs() <= tol,
                }
            }))
        }
        OperatorKind::SubdiffBallIndicator { radius } => {
            let r = *radius;
            let norm = x.norm();
            if norm > r + tol {
                return Ok(false);
            }
            if norm < r - tol {
                return Ok(residual.norm() <= tol);
            }
            // boundary: residual must be a nonnegative multiple of x
            let unit = x.scale(T::one() / norm);
            let along = residual.dot(&unit);
            if along < -tol {
                return Ok(false);
            }
            let tangent = residual.sub_scaled(along.max(T::zero()), &unit);
            Ok(tangent.norm() <= tol)
        }
        OperatorKind::Shifted { base, tau } => {
            // v in (A + tau Id)(x)  <=>  v - tau x in A(x)
            let reduced = residual.sub_scaled(*tau, x);
            subdiff_contains_zero(base, x, &reduced, tol)
        }
    }
}

/// Tests the full inclusion `0 in A(x) + B(x) + C(x)` within `tol`, using a
/// single-valued evaluation of one operator and the membership test of the
/// other. Fails when neither `A` nor `B` is single-valued.
pub fn zero_in_sum<T: Scalar>(
    problem: &Problem<T>,
    x: &Vector<T>,
    tol: T,
) -> Result<bool, ResolventError> {
    let c_val = forward(&problem.c, x)?;
    if let Some(a_val) = problem.a.forward_value(x) {
        let residual = a_val.add(&c_val).scale(-T::one());
        subdiff_contains_zero(&problem.b, x, &residual, tol)
    } else if let Some(b_val) = problem.b.forward_value(x) {
        let residual = b_val.add(&c_val).scale(-T::one());
        subdiff_contains_zero(&problem.a, x, &residual, tol)
    } else {
        Err(ResolventError::NoSingleValuedSplit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Cocoercivity;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(entries: &[f64]) -> Vector<f64> {
        Vector::from_slice(entries)
    }

    #[test]
    fn soft_threshold_example() {
        let spec = OperatorSpec::subdiff_l1(1.0).unwrap();
        let out = resolvent(&spec, 0.5, &v(&[3.0, -0.2])).unwrap();
        assert_eq!(out, v(&[2.5, 0.0]));
    }

    #[test]
    fn zero_resolvent_is_identity() {
        let spec = OperatorSpec::<f64>::zero();
        let x = v(&[1.5, -2.0, 0.0]);
        assert_eq!(resolvent(&spec, 7.0, &x).unwrap(), x);
    }

    #[test]
    fn scaled_identity_resolvent() {
        let spec = OperatorSpec::scaled_identity(1.0);
        assert_eq!(resolvent(&spec, 1.0, &v(&[2.0])).unwrap(), v(&[1.0]));
    }

    #[test]
    fn shifted_resolvent_matches_scaled_rule_and_inclusion() {
        let base = OperatorSpec::subdiff_l1(1.0).unwrap();
        let spec = OperatorSpec::shifted(base.clone(), 0.5);
        let x = v(&[3.0]);
        let got = resolvent(&spec, 1.0, &x).unwrap();
        let expect = resolvent(&base, 1.0 / 1.5, &v(&[2.0])).unwrap();
        assert_eq!(got, expect);
        assert!((got[0] - 4.0 / 3.0).abs() < 1e-15);
        // defining inclusion x - a in gamma*(dL1 + tau Id)(a)
        let residual = x.sub(&got); // gamma = 1
        assert!(subdiff_contains_zero(&spec, &got, &residual, 1e-12).unwrap());
    }

    #[test]
    fn resolvent_rejects_infeasible_step() {
        let spec = OperatorSpec::scaled_identity(-2.0);
        let err = resolvent(&spec, 1.0, &v(&[1.0])).unwrap_err();
        assert!(matches!(err, ResolventError::StepInfeasible { .. }));
    }

    #[test]
    fn forward_examples() {
        let zero = CocoerciveSpec::<f64>::zero();
        assert_eq!(forward(&zero, &v(&[1.0, 2.0])).unwrap(), v(&[0.0, 0.0]));

        let ident = CocoerciveSpec::linear_psd(Matrix::identity(2), Vector::zeros(2)).unwrap();
        assert_eq!(forward(&ident, &v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));

        let spec = CocoerciveSpec::linear_psd(
            Matrix::diagonal(&[2.0, 0.0]),
            Vector::from_slice(&[1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(forward(&spec, &v(&[1.0, 1.0])).unwrap(), v(&[3.0, 1.0]));
    }

    #[test]
    fn huber_gradient_clips() {
        let spec = CocoerciveSpec::huber_grad(0.5, Vector::zeros(3)).unwrap();
        let g = forward(&spec, &v(&[0.2, 2.0, -1.0])).unwrap();
        assert_eq!(g, v(&[0.4, 1.0, -1.0]));
    }

    #[test]
    fn membership_interval_and_box() {
        let l1 = OperatorSpec::subdiff_l1(1.0).unwrap();
        assert!(subdiff_contains_zero(&l1, &v(&[0.0]), &v(&[0.3]), 1e-9).unwrap());
        assert!(!subdiff_contains_zero(&l1, &v(&[2.0]), &v(&[0.5]), 1e-9).unwrap());

        let boxi = OperatorSpec::subdiff_box(v(&[0.0]), v(&[1.0])).unwrap();
        assert!(subdiff_contains_zero(&boxi, &v(&[1.0]), &v(&[5.0]), 1e-9).unwrap());
        assert!(!subdiff_contains_zero(&boxi, &v(&[0.5]), &v(&[5.0]), 1e-9).unwrap());
        assert!(!subdiff_contains_zero(&boxi, &v(&[2.0]), &v(&[0.0]), 1e-9).unwrap());
    }

    #[test]
    fn membership_raises_on_dim_mismatch() {
        let l1 = OperatorSpec::subdiff_l1(1.0).unwrap();
        let err = subdiff_contains_zero(&l1, &v(&[0.0]), &v(&[0.0, 0.0]), 1e-9).unwrap_err();
        assert!(matches!(err, ResolventError::DimensionMismatch { .. }));
    }

    fn random_catalog(rng: &mut ChaCha8Rng, dim: usize) -> Vec<OperatorSpec<f64>> {
        let mut specs = vec![
            OperatorSpec::zero(),
            OperatorSpec::scaled_identity(rng.random_range(-0.4..2.0)),
            OperatorSpec::subdiff_l1(rng.random_range(0.0..2.0)).unwrap(),
            OperatorSpec::subdiff_ball(rng.random_range(0.2..3.0)).unwrap(),
        ];
        let lo = Vector::from_fn(dim, |_| rng.random_range(-2.0..0.0));
        let hi = Vector::from_fn(dim, |_| rng.random_range(0.0..2.0));
        specs.push(OperatorSpec::subdiff_box(lo, hi).unwrap());
        let m0 = Matrix::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let q = m0.symmetric_part();
        specs.push(
            OperatorSpec::subdiff_quadratic(
                q,
                Vector::from_fn(dim, |_| rng.random_range(-1.0..1.0)),
            )
            .unwrap(),
        );
        specs.push(
            OperatorSpec::affine(
                Matrix::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)),
                Vector::from_fn(dim, |_| rng.random_range(-1.0..1.0)),
            )
            .unwrap(),
        );
        specs.push(OperatorSpec::shifted(
            OperatorSpec::subdiff_l1(1.0).unwrap(),
            rng.random_range(-0.3..0.8),
        ));
        specs
    }

    #[test]
    fn resolvent_defining_identity_across_catalog() {
        // for a = J_{gamma A} x the slope (x - a)/gamma must lie in A(a)
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let dim = 4;
        let mut checked = 0;
        while checked < 1000 {
            for spec in random_catalog(&mut rng, dim) {
                let gamma: f64 = rng.random_range(0.05..4.0);
                if 1.0 + gamma * spec.modulus() <= 1e-6 {
                    continue;
                }
                let x = Vector::from_fn(dim, |_| rng.random_range(-4.0..4.0));
                let a = resolvent(&spec, gamma, &x).unwrap();
                let slope = x.sub(&a).scale(1.0 / gamma);
                assert!(
                    subdiff_contains_zero(&spec, &a, &slope, 1e-8).unwrap(),
                    "defining identity failed for {:?} at gamma={gamma}",
                    spec.kind()
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn resolvent_cocoercivity() {
        // J_{gamma A} is (1 + gamma*alpha)-cocoercive
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dim = 4;
        for _ in 0..150 {
            for spec in random_catalog(&mut rng, dim) {
                let gamma: f64 = rng.random_range(0.05..3.0);
                let coco = 1.0 + gamma * spec.modulus();
                if coco <= 1e-6 {
                    continue;
                }
                let x = Vector::from_fn(dim, |_| rng.random_range(-4.0..4.0));
                let y = Vector::from_fn(dim, |_| rng.random_range(-4.0..4.0));
                let jx = resolvent(&spec, gamma, &x).unwrap();
                let jy = resolvent(&spec, gamma, &y).unwrap();
                let dx = x.sub(&y);
                let dj = jx.sub(&jy);
                let scale = (x.norm_sq().max(y.norm_sq())).max(1.0);
                assert!(
                    dx.dot(&dj) >= coco * dj.norm_sq() - 1e-9 * scale,
                    "cocoercivity failed for {:?}",
                    spec.kind()
                );
            }
        }
    }

    #[test]
    fn forward_map_cocoercivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let dim = 4;
        for _ in 0..300 {
            let m0 = Matrix::<f64>::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
            let psd = m0.transpose().matmul(&m0);
            let specs = vec![
                CocoerciveSpec::linear_psd(
                    psd,
                    Vector::from_fn(dim, |_| rng.random_range(-1.0..1.0)),
                )
                .unwrap(),
                CocoerciveSpec::huber_grad(
                    rng.random_range(0.1..2.0),
                    Vector::from_fn(dim, |_| rng.random_range(-1.0..1.0)),
                )
                .unwrap(),
            ];
            for spec in specs {
                let sigma = match spec.sigma() {
                    Cocoercivity::Finite(s) => s,
                    Cocoercivity::Unbounded => continue,
                };
                let x = Vector::from_fn(dim, |_| rng.random_range(-4.0..4.0));
                let y = Vector::from_fn(dim, |_| rng.random_range(-4.0..4.0));
                let cx = forward(&spec, &x).unwrap();
                let cy = forward(&spec, &y).unwrap();
                let dx = x.sub(&y);
                let dc = cx.sub(&cy);
                let scale = (x.norm_sq().max(y.norm_sq())).max(1.0);
                assert!(dx.dot(&dc) >= sigma * dc.norm_sq() - 1e-9 * scale);
            }
        }
    }

    #[test]
    fn prox_is_argmin_against_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dim = 3;
        let m0 = Matrix::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let q = m0.transpose().matmul(&m0).add_diagonal(0.1);
        let lo = Vector::from_fn(dim, |_| -1.0);
        let hi = Vector::from_fn(dim, |_| 1.0);
        let specs = vec![
            OperatorSpec::subdiff_quadratic(
                q,
                Vector::from_fn(dim, |_| rng.random_range(-1.0..1.0)),
            )
            .unwrap(),
            OperatorSpec::subdiff_l1(0.7).unwrap(),
            OperatorSpec::subdiff_box(lo.clone(), hi.clone()).unwrap(),
        ];
        for spec in specs {
            let gamma: f64 = rng.random_range(0.2..2.0);
            let x = Vector::from_fn(dim, |_| rng.random_range(-2.0..2.0));
            let p = resolvent(&spec, gamma, &x).unwrap();
            let objective = |z: &Vector<f64>| -> Option<f64> {
                spec.potential_value(z)
                    .map(|f| f + z.sub(&x).norm_sq() / (2.0 * gamma))
            };
            let p_val = objective(&p).expect("prox output must be feasible");
            for _ in 0..1000 {
                let z = Vector::from_fn(dim, |i| {
                    let step: f64 = rng.random_range(-0.5..0.5);
                    // keep box perturbations feasible so the objective is finite
                    match spec.kind() {
                        OperatorKind::SubdiffBoxIndicator { .. } => {
                            (p[i] + step).max(lo[i]).min(hi[i])
                        }
                        _ => p[i] + step,
                    }
                });
                if let Some(z_val) = objective(&z) {
                    assert!(
                        p_val <= z_val + 1e-10,
                        "prox not optimal: {p_val} > {z_val}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_in_sum_detects_solution() {
        // min (x-3)^2/2 + |x| : solution x = 2, 0 = (x-3) + sign(x)
        let a = OperatorSpec::subdiff_quadratic(Matrix::identity(1), Vector::from_slice(&[-3.0]))
            .unwrap();
        let b = OperatorSpec::subdiff_l1(1.0).unwrap();
        let problem = Problem::new(a, b, CocoerciveSpec::zero(), 1).unwrap();
        assert!(zero_in_sum(&problem, &v(&[2.0]), 1e-10).unwrap());
        assert!(!zero_in_sum(&problem, &v(&[1.5]), 1e-10).unwrap());
    }
}
