//! Reproducible test-problem generators and independent solution oracles.
//!
//! Each named family pairs a problem built from catalog operators with a
//! ground-truth solver that shares no code path with the iteration engine:
//! dense linear solves for smooth problems, exhaustive sign-pattern
//! enumeration for L1 terms, face enumeration for boxes, and a Lagrange
//! multiplier bisection for balls. Enumeration families are capped at
//! dimension 12 (3^12 patterns).
//!
//! Generation is bit-reproducible: the same seed always yields the same
//! problem and the same oracle solution.

use thiserror::Error;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{orthonormal_rows, LinalgError, Matrix, Vector};
use crate::operators::{
    CocoerciveKind, CocoerciveSpec, OperatorKind, OperatorSpec, Problem, SpecError,
};
use crate::resolvents::{zero_in_sum, ResolventError};
use crate::scalar::{lit, Scalar};

/// Enumeration oracles cap: 3^12 = 531441 patterns.
pub const ORACLE_DIM_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("dimension {dim} exceeds the enumeration oracle cap {cap} for {tag}")]
    UnsupportedDim {
        tag: ProblemTag,
        dim: usize,
        cap: usize,
    },
    #[error("dimension must be at least 1")]
    ZeroDim,
    #[error("requested weak shift makes alpha + beta = {sum} negative, outside the theory")]
    NonMonotoneShift { sum: f64 },
    #[error("no sign/face pattern is consistent; generator or oracle defect")]
    NoConsistentPattern,
    #[error("oracle solution failed its own membership check (residual tolerance 1e-10)")]
    OracleInconsistent,
    #[error("problem structure not covered by an oracle: {0}")]
    UnsupportedStructure(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
}

/// The named problem families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemTag {
    /// Three strongly convex quadratics; closed-form solution.
    Quad3,
    /// Strongly convex quadratic + L1 + linear map; sign-pattern oracle.
    L1,
    /// Strongly convex quadratic + box indicator + linear map; face oracle.
    Box,
    /// Shifted quadratic (strong) + shifted L1 (weak); sign-pattern oracle.
    Weak,
    /// Strongly convex quadratic + ball indicator + linear map.
    Ball,
}

impl std::fmt::Display for ProblemTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ProblemTag::Quad3 => "P-QUAD3",
            ProblemTag::L1 => "P-L1",
            ProblemTag::Box => "P-BOX",
            ProblemTag::Weak => "P-WEAK",
            ProblemTag::Ball => "P-BALL",
        };
        f.write_str(name)
    }
}

/// A generated instance with its ground truth.
#[derive(Debug, Clone)]
pub struct NamedProblem<T> {
    pub tag: ProblemTag,
    pub problem: Problem<T>,
    pub oracle_solution: Option<Vector<T>>,
    pub seed: u64,
}

fn tag_rng(tag: ProblemTag, seed: u64) -> ChaCha8Rng {
    let salt = match tag {
        ProblemTag::Quad3 => 1u64,
        ProblemTag::L1 => 2,
        ProblemTag::Box => 3,
        ProblemTag::Weak => 4,
        ProblemTag::Ball => 5,
    };
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
}

fn uniform<T: Scalar>(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> T {
    lit::<T>(rng.random_range(lo..hi))
}

/// Random symmetric matrix with a planted positive spectrum; the condition
/// number stays well below the 10^3 cap.
fn planted_spd<T: Scalar>(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Matrix<T> {
    loop {
        let rows: Vec<Vector<T>> = (0..dim)
            .map(|_| Vector::from_fn(dim, |_| uniform(rng, -1.0, 1.0)))
            .collect();
        if let Some(v) = orthonormal_rows(&rows) {
            let eigs: Vec<T> = (0..dim)
                .map(|_| lit::<T>(10f64.powf(rng.random_range(lo.log10()..hi.log10()))))
                .collect();
            let q = v.transpose().matmul(&Matrix::diagonal(&eigs)).matmul(&v);
            return q.symmetric_part();
        }
    }
}

/// Quadratic subdifferential centered at `center`: `x -> Q (x - center)`.
fn centered_quadratic<T: Scalar>(
    q: Matrix<T>,
    center: &Vector<T>,
) -> Result<OperatorSpec<T>, SpecError> {
    let lin = q.matvec(center).scale(-T::one());
    OperatorSpec::subdiff_quadratic(q, lin)
}

fn random_linear_psd<T: Scalar>(
    rng: &mut ChaCha8Rng,
    dim: usize,
) -> Result<CocoerciveSpec<T>, SpecError> {
    let q = planted_spd::<T>(rng, dim, 0.05, 1.5);
    let center = Vector::from_fn(dim, |_| uniform::<T>(rng, -2.0, 2.0));
    let lin = q.matvec(&center).scale(-T::one());
    CocoerciveSpec::linear_psd(q, lin)
}

fn check_enumeration_cap(tag: ProblemTag, dim: usize) -> Result<(), ProblemError> {
    if dim == 0 {
        return Err(ProblemError::ZeroDim);
    }
    match tag {
        ProblemTag::Quad3 => Ok(()),
        _ if dim <= ORACLE_DIM_CAP => Ok(()),
        _ => Err(ProblemError::UnsupportedDim {
            tag,
            dim,
            cap: ORACLE_DIM_CAP,
        }),
    }
}

/// Generates a named instance; the oracle solution is computed eagerly and
/// verified against the membership tester.
pub fn gen<T: Scalar>(
    tag: ProblemTag,
    dim: usize,
    seed: u64,
) -> Result<NamedProblem<T>, ProblemError> {
    check_enumeration_cap(tag, dim)?;
    let mut rng = tag_rng(tag, seed);
    let problem = match tag {
        ProblemTag::Quad3 => {
            let qa = planted_spd::<T>(&mut rng, dim, 0.3, 3.0);
            let qb = planted_spd::<T>(&mut rng, dim, 0.3, 3.0);
            let ca = Vector::from_fn(dim, |_| uniform::<T>(&mut rng, -2.0, 2.0));
            let cb = Vector::from_fn(dim, |_| uniform::<T>(&mut rng, -2.0, 2.0));
            let a = centered_quadratic(qa, &ca)?;
            let b = centered_quadratic(qb, &cb)?;
            let c = random_linear_psd(&mut rng, dim)?;
            Problem::new(a, b, c, dim)?
        }
        ProblemTag::L1 => {
            let qa = planted_spd::<T>(&mut rng, dim, 0.4, 3.0);
            let target = Vector::from_fn(dim, |_| uniform::<T>(&mut rng, -2.5, 2.5));
            let a = centered_quadratic(qa, &target)?;
            let b = OperatorSpec::subdiff_l1(uniform::<T>(&mut rng, 0.3, 1.2))?;
            let c = random_linear_psd(&mut rng, dim)?;
            Problem::new(a, b, c, dim)?
        }
        ProblemTag::Box => {
            let qa = planted_spd::<T>(&mut rng, dim, 0.4, 3.0);
            let target = Vector::from_fn(dim, |_| uniform::<T>(&mut rng, -2.0, 2.0));
            let a = centered_quadratic(qa, &target)?;
            let lo = Vector::from_fn(dim, |_| uniform::<T>(&mut rng, -1.2, -0.1));
            let hi = Vector::from_fn(dim, |_| uniform::<T>(&mut rng, 0.1, 1.2));
            let b = OperatorSpec::subdiff_box(lo, hi)?;
            let c = random_linear_psd(&mut rng, dim)?;
            Problem::new(a, b, c, dim)?
        }
        ProblemTag::Ball => {
            let qa = planted_spd::<T>(&mut rng, dim, 0.4, 3.0);
            let target = Vector::from_fn(dim, |_| uniform::<T>(&mut rng, -2.0, 2.0));
            let a = centered_quadratic(qa, &target)?;
            let b = OperatorSpec::subdiff_ball(uniform::<T>(&mut rng, 0.4, 1.8))?;
            let c = random_linear_psd(&mut rng, dim)?;
            Problem::new(a, b, c, dim)?
        }
        ProblemTag::Weak => {
            let tau: T = uniform(&mut rng, 0.2, 1.0);
            let margin: T = uniform(&mut rng, 0.05, 0.5);
            let qa = planted_spd::<T>(&mut rng, dim, 0.3, 2.0);
            let target = Vector::from_fn(dim, |_| uniform::<T>(&mut rng, -2.0, 2.0));
            let weight: T = uniform(&mut rng, 0.3, 1.0);
            let base_a = centered_quadratic(qa, &target)?;
            let tau_prime = base_a.modulus() + tau - margin;
            let c = random_linear_psd(&mut rng, dim)?;
            weak_pair_problem(base_a, weight, tau, tau_prime, c, dim)?
        }
    };
    let mut named = NamedProblem {
        tag,
        problem,
        oracle_solution: None,
        seed,
    };
    named.oracle_solution = Some(oracle_solve(&named)?);
    Ok(named)
}

/// Builds the weakly/strongly monotone pair `A = base_a + tau*Id`,
/// `B = w*||.||_1 subdifferential - tau_prime*Id`; rejects shifts that drive
/// `alpha + beta` negative.
pub fn weak_pair_problem<T: Scalar>(
    base_a: OperatorSpec<T>,
    weight: T,
    tau: T,
    tau_prime: T,
    c: CocoerciveSpec<T>,
    dim: usize,
) -> Result<Problem<T>, ProblemError> {
    let a = OperatorSpec::shifted(base_a, tau);
    let b = OperatorSpec::shifted(OperatorSpec::subdiff_l1(weight)?, -tau_prime);
    let sum = a.modulus() + b.modulus();
    if sum < T::zero() {
        return Err(ProblemError::NonMonotoneShift {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(Problem::new(a, b, c, dim)?)
}

// ---------------------------------------------------------------------------
// structural decomposition of catalog operators for the oracles
// ---------------------------------------------------------------------------

/// Affine representation `x -> M x + q` of a single-valued operator, with
/// shifts folded in. `None` for set-valued kinds.
fn affine_parts<T: Scalar>(spec: &OperatorSpec<T>) -> Option<(Matrix<T>, Vector<T>, usize)> {
    match spec.kind() {
        OperatorKind::Zero | OperatorKind::ScaledIdentity { .. } => None, // dimension-free; handled by caller
        OperatorKind::Affine { matrix, offset } => {
            Some((matrix.clone(), offset.clone(), matrix.dim()))
        }
        OperatorKind::SubdiffQuadratic { q, lin } => Some((q.clone(), lin.clone(), q.dim())),
        OperatorKind::Shifted { base, tau } => {
            let (m, q, dim) = affine_parts(base)?;
            Some((m.add_diagonal(*tau), q, dim))
        }
        _ => None,
    }
}

/// Affine representation at a known dimension, also covering the
/// dimension-free kinds.
fn affine_parts_at<T: Scalar>(
    spec: &OperatorSpec<T>,
    dim: usize,
) -> Option<(Matrix<T>, Vector<T>)> {
    match spec.kind() {
        OperatorKind::Zero => Some((Matrix::zeros(dim), Vector::zeros(dim))),
        OperatorKind::ScaledIdentity { alpha } => {
            Some((Matrix::identity(dim).scale(*alpha), Vector::zeros(dim)))
        }
        OperatorKind::Shifted { base, tau } => {
            let (m, q) = affine_parts_at(base, dim)?;
            Some((m.add_diagonal(*tau), q))
        }
        _ => affine_parts(spec).map(|(m, q, _)| (m, q)),
    }
}

/// L1 subdifferential with an identity shift folded out: `(weight, shift)`.
fn l1_parts<T: Scalar>(spec: &OperatorSpec<T>) -> Option<(T, T)> {
    match spec.kind() {
        OperatorKind::SubdiffL1 { weight } => Some((*weight, T::zero())),
        OperatorKind::Shifted { base, tau } => {
            let (w, shift) = l1_parts(base)?;
            Some((w, shift + *tau))
        }
        _ => None,
    }
}

fn box_parts<T: Scalar>(spec: &OperatorSpec<T>) -> Option<(Vector<T>, Vector<T>, T)> {
    match spec.kind() {
        OperatorKind::SubdiffBoxIndicator { lo, hi } => Some((lo.clone(), hi.clone(), T::zero())),
        OperatorKind::Shifted { base, tau } => {
            let (lo, hi, shift) = box_parts(base)?;
            Some((lo, hi, shift + *tau))
        }
        _ => None,
    }
}

fn ball_parts<T: Scalar>(spec: &OperatorSpec<T>) -> Option<(T, T)> {
    match spec.kind() {
        OperatorKind::SubdiffBallIndicator { radius } => Some((*radius, T::zero())),
        OperatorKind::Shifted { base, tau } => {
            let (r, shift) = ball_parts(base)?;
            Some((r, shift + *tau))
        }
        _ => None,
    }
}

fn c_affine_parts<T: Scalar>(
    spec: &CocoerciveSpec<T>,
    dim: usize,
) -> Option<(Matrix<T>, Vector<T>)> {
    match spec.kind() {
        CocoerciveKind::Zero => Some((Matrix::zeros(dim), Vector::zeros(dim))),
        CocoerciveKind::LinearPsd { q, lin } => Some((q.clone(), lin.clone())),
        CocoerciveKind::HuberGrad { .. } => None,
    }
}

/// Smooth-part decomposition used by every enumeration oracle: the affine
/// map `x -> M x + q` collecting `A`, `C`, and any identity shift carried by
/// the set-valued `B`.
fn smooth_parts<T: Scalar>(
    problem: &Problem<T>,
    b_shift: T,
) -> Result<(Matrix<T>, Vector<T>), ProblemError> {
    let dim = problem.dim();
    let (ma, qa) = affine_parts_at(&problem.a, dim).ok_or_else(|| {
        ProblemError::UnsupportedStructure("operator A must be affine for this oracle".into())
    })?;
    let (mc, qc) = c_affine_parts(&problem.c, dim).ok_or_else(|| {
        ProblemError::UnsupportedStructure("cocoercive C must be affine for this oracle".into())
    })?;
    Ok((ma.add(&mc).add_diagonal(b_shift), qa.add(&qc)))
}

// ---------------------------------------------------------------------------
// oracles
// ---------------------------------------------------------------------------

/// Independent ground-truth solve, dispatching on the problem structure.
/// The result is verified through the membership tester at 1e-10 before
/// being returned.
pub fn oracle_solve<T: Scalar>(named: &NamedProblem<T>) -> Result<Vector<T>, ProblemError> {
    let problem = &named.problem;
    let solution = match named.tag {
        ProblemTag::Quad3 => oracle_smooth(problem)?,
        ProblemTag::L1 | ProblemTag::Weak => {
            let (w, shift) = l1_parts(&problem.b).ok_or_else(|| {
                ProblemError::UnsupportedStructure("operator B must be (shifted) L1".into())
            })?;
            let (m, q) = smooth_parts(problem, shift)?;
            oracle_sign_patterns(&m, &q, w)?
        }
        ProblemTag::Box => {
            let (lo, hi, shift) = box_parts(&problem.b).ok_or_else(|| {
                ProblemError::UnsupportedStructure("operator B must be a (shifted) box".into())
            })?;
            let (m, q) = smooth_parts(problem, shift)?;
            oracle_face_patterns(&m, &q, &lo, &hi)?
        }
        ProblemTag::Ball => {
            let (r, shift) = ball_parts(&problem.b).ok_or_else(|| {
                ProblemError::UnsupportedStructure("operator B must be a (shifted) ball".into())
            })?;
            let (m, q) = smooth_parts(problem, shift)?;
            oracle_ball(&m, &q, r)?
        }
    };
    if !zero_in_sum(problem, &solution, lit::<T>(1e-10))? {
        return Err(ProblemError::OracleInconsistent);
    }
    Ok(solution)
}

/// All operators affine: solve the summed stationarity system directly.
fn oracle_smooth<T: Scalar>(problem: &Problem<T>) -> Result<Vector<T>, ProblemError> {
    let dim = problem.dim();
    let (mb, qb) = affine_parts_at(&problem.b, dim).ok_or_else(|| {
        ProblemError::UnsupportedStructure("operator B must be affine for this oracle".into())
    })?;
    let (m, q) = smooth_parts(problem, T::zero())?;
    let total_m = m.add(&mb);
    let total_q = q.add(&qb);
    Ok(total_m.lu_solve(&total_q.scale(-T::one()))?)
}

/// Exhaustive {-, 0, +} sign-pattern enumeration for
/// `0 in M x + q + w * d||x||_1`. Strong convexity of the smooth part makes
/// the consistent pattern unique.
fn oracle_sign_patterns<T: Scalar>(
    m: &Matrix<T>,
    q: &Vector<T>,
    weight: T,
) -> Result<Vector<T>, ProblemError> {
    let dim = q.dim();
    let tol = lit::<T>(1e-11);
    let mut pattern = vec![0i8; dim];
    let total = 3usize.pow(dim as u32);
    for code in 0..total {
        let mut rem = code;
        for slot in pattern.iter_mut() {
            *slot = [0i8, 1, -1][rem % 3];
            rem /= 3;
        }
        if let Some(x) = try_sign_pattern(m, q, weight, &pattern, tol)? {
            return Ok(x);
        }
    }
    Err(ProblemError::NoConsistentPattern)
}

fn try_sign_pattern<T: Scalar>(
    m: &Matrix<T>,
    q: &Vector<T>,
    weight: T,
    pattern: &[i8],
    tol: T,
) -> Result<Option<Vector<T>>, ProblemError> {
    let dim = pattern.len();
    let free: Vec<usize> = (0..dim).filter(|&i| pattern[i] != 0).collect();
    let mut x = Vector::zeros(dim);
    if !free.is_empty() {
        let sub = m.principal_submatrix(&free);
        let rhs = Vector::from_fn(free.len(), |k| {
            let i = free[k];
            let sign = lit::<T>(pattern[i] as f64);
            -q[i] - weight * sign
        });
        let x_free = match sub.lu_solve(&rhs) {
            Ok(sol) => sol,
            Err(LinalgError::Singular) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        // sign consistency on the support
        for (k, &i) in free.iter().enumerate() {
            let sign = lit::<T>(pattern[i] as f64);
            if x_free[k] * sign <= T::zero() {
                return Ok(None);
            }
        }
        let mut entries = vec![T::zero(); dim];
        for (k, &i) in free.iter().enumerate() {
            entries[i] = x_free[k];
        }
        x = Vector::from_slice(&entries);
    }
    // dual feasibility off the support
    let g = m.matvec(&x).add(q);
    for i in 0..dim {
        if pattern[i] == 0 && g[i].abs() > weight + tol {
            return Ok(None);
        }
    }
    Ok(Some(x))
}

/// Exhaustive {lo, free, hi} face enumeration for
/// `0 in M x + q + N_[lo,hi](x)`.
fn oracle_face_patterns<T: Scalar>(
    m: &Matrix<T>,
    q: &Vector<T>,
    lo: &Vector<T>,
    hi: &Vector<T>,
) -> Result<Vector<T>, ProblemError> {
    let dim = q.dim();
    let tol = lit::<T>(1e-11);
    let mut pattern = vec![0i8; dim]; // 0 free, -1 at lo, +1 at hi
    let total = 3usize.pow(dim as u32);
    for code in 0..total {
        let mut rem = code;
        for slot in pattern.iter_mut() {
            *slot = [0i8, -1, 1][rem % 3];
            rem /= 3;
        }
        if let Some(x) = try_face_pattern(m, q, lo, hi, &pattern, tol)? {
            return Ok(x);
        }
    }
    Err(ProblemError::NoConsistentPattern)
}

fn try_face_pattern<T: Scalar>(
    m: &Matrix<T>,
    q: &Vector<T>,
    lo: &Vector<T>,
    hi: &Vector<T>,
    pattern: &[i8],
    tol: T,
) -> Result<Option<Vector<T>>, ProblemError> {
    let dim = pattern.len();
    let free: Vec<usize> = (0..dim).filter(|&i| pattern[i] == 0).collect();
    let mut entries: Vec<T> = (0..dim)
        .map(|i| match pattern[i] {
            -1 => lo[i],
            1 => hi[i],
            _ => T::zero(),
        })
        .collect();
    if !free.is_empty() {
        // solve the free block with the active coordinates substituted
        let sub = m.principal_submatrix(&free);
        let rhs = Vector::from_fn(free.len(), |k| {
            let i = free[k];
            let mut acc = -q[i];
            for j in 0..dim {
                if pattern[j] != 0 {
                    acc = acc - m[(i, j)] * entries[j];
                }
            }
            acc
        });
        let x_free = match sub.lu_solve(&rhs) {
            Ok(sol) => sol,
            Err(LinalgError::Singular) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        for (k, &i) in free.iter().enumerate() {
            if x_free[k] <= lo[i] || x_free[k] >= hi[i] {
                return Ok(None);
            }
            entries[i] = x_free[k];
        }
    }
    let x = Vector::from_slice(&entries);
    // multiplier signs: -g must lie in the normal cone
    let g = m.matvec(&x).add(q);
    for i in 0..dim {
        match pattern[i] {
            -1 if g[i] < -tol => return Ok(None),
            1 if g[i] > tol => return Ok(None),
            _ => {}
        }
    }
    Ok(Some(x))
}

/// Two-case oracle for `0 in M x + q + N_ball(r)(x)`: interior stationarity
/// or a boundary Lagrange multiplier located by bisection.
fn oracle_ball<T: Scalar>(
    m: &Matrix<T>,
    q: &Vector<T>,
    radius: T,
) -> Result<Vector<T>, ProblemError> {
    let interior = m.lu_solve(&q.scale(-T::one()))?;
    if interior.norm() <= radius {
        return Ok(interior);
    }
    // boundary: solve (M + t I) x = -q with ||x(t)|| = r, t >= 0;
    // ||x(t)|| decreases in t for positive definite M
    let norm_at = |t: T| -> Result<T, ProblemError> {
        Ok(m.add_diagonal(t).lu_solve(&q.scale(-T::one()))?.norm())
    };
    let mut t_lo = T::zero();
    let mut t_hi = T::one();
    let mut guard = 0;
    while norm_at(t_hi)? > radius {
        t_hi = t_hi * lit::<T>(2.0);
        guard += 1;
        if guard > 200 {
            return Err(ProblemError::NoConsistentPattern);
        }
    }
    for _ in 0..200 {
        let mid = (t_lo + t_hi) * lit::<T>(0.5);
        if norm_at(mid)? > radius {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
        if (t_hi - t_lo) <= lit::<T>(1e-16) * t_hi.max(T::one()) {
            break;
        }
    }
    let t = (t_lo + t_hi) * lit::<T>(0.5);
    Ok(m.add_diagonal(t).lu_solve(&q.scale(-T::one()))?)
}

/// Total objective value `f(x) + g(x) + h(x)` when every piece has a
/// potential; `None` when `x` is infeasible for an indicator.
pub fn total_potential<T: Scalar>(problem: &Problem<T>, x: &Vector<T>) -> Option<T> {
    let fa = problem.a.potential_value(x)?;
    let fb = problem.b.potential_value(x)?;
    Some(fa + fb + problem.c.potential_value(x))
}
