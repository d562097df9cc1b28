//! Operator catalog and problem data model.
//!
//! An [`OperatorSpec`] describes a maximally monotone operator together with
//! its certified monotonicity modulus; a [`CocoerciveSpec`] describes a
//! single-valued cocoercive map together with its certified cocoercivity
//! constant. Moduli are computed at construction time, never trusted from the
//! caller, because every downstream step-size guarantee depends on them.

use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, Vector};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("quadratic matrix must be symmetric (max asymmetry {max_asym:e})")]
    NonSymmetric { max_asym: f64 },
    #[error("cocoercive map must be positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPositiveSemidefinite { min_eig: f64 },
    #[error("box indicator requires lo <= hi componentwise")]
    BoxBoundsInverted,
    #[error("ball indicator requires a positive radius")]
    NonPositiveRadius,
    #[error("L1 weight must be nonnegative")]
    NegativeWeight,
    #[error("Huber threshold must be positive")]
    NonPositiveThreshold,
    #[error("operator dimensions disagree: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Certified cocoercivity constant; `Unbounded` stands for the zero map,
/// which is cocoercive with every positive constant, so any term of the form
/// `gamma / (2 sigma)` or `1 / (4 sigma)` evaluates to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cocoercivity<T> {
    Finite(T),
    Unbounded,
}

impl<T: Scalar> Cocoercivity<T> {
    pub fn finite(value: T) -> Self {
        Cocoercivity::Finite(value)
    }

    pub fn as_option(&self) -> Option<T> {
        match self {
            Cocoercivity::Finite(s) => Some(*s),
            Cocoercivity::Unbounded => None,
        }
    }

    /// `x / (2 sigma)`, zero when unbounded.
    pub fn half_over(&self, x: T) -> T {
        match self {
            Cocoercivity::Finite(s) => x / (lit::<T>(2.0) * *s),
            Cocoercivity::Unbounded => T::zero(),
        }
    }

    /// `1 / (4 sigma)`, zero when unbounded.
    pub fn quarter_inverse(&self) -> T {
        match self {
            Cocoercivity::Finite(s) => T::one() / (lit::<T>(4.0) * *s),
            Cocoercivity::Unbounded => T::zero(),
        }
    }

    /// True when `self` certifies at least `other`'s cocoercivity.
    pub fn at_least(&self, other: &Self) -> bool {
        match (self, other) {
            (Cocoercivity::Unbounded, _) => true,
            (Cocoercivity::Finite(_), Cocoercivity::Unbounded) => false,
            (Cocoercivity::Finite(a), Cocoercivity::Finite(b)) => a >= b,
        }
    }
}

/// Kinds of maximally monotone operators with closed-form resolvents.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind<T> {
    /// The zero operator; its resolvent is the identity.
    Zero,
    /// `x -> alpha * x`.
    ScaledIdentity { alpha: T },
    /// `x -> M x + b` with arbitrary square `M` (monotonicity from the
    /// symmetric part).
    Affine {
        matrix: Matrix<T>,
        offset: Vector<T>,
    },
    /// Subdifferential of the quadratic `x -> x'Qx/2 + q'x`, `Q` symmetric.
    SubdiffQuadratic { q: Matrix<T>, lin: Vector<T> },
    /// Subdifferential of `x -> w * ||x||_1`.
    SubdiffL1 { weight: T },
    /// Normal cone of the box `[lo, hi]`.
    SubdiffBoxIndicator { lo: Vector<T>, hi: Vector<T> },
    /// Normal cone of the Euclidean ball of radius `r` centered at 0.
    SubdiffBallIndicator { radius: T },
    /// `base + tau * Id`; shifts monotonicity by `tau`.
    Shifted { base: Box<OperatorSpec<T>>, tau: T },
}

/// A maximally monotone operator plus its certified modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec<T> {
    kind: OperatorKind<T>,
    modulus: T,
}

impl<T: Scalar> OperatorSpec<T> {
    /// Validates the description and certifies the monotonicity modulus.
    pub fn new(kind: OperatorKind<T>) -> Result<Self, SpecError> {
        let modulus = certify_modulus(&kind)?;
        Ok(Self { kind, modulus })
    }

    pub fn zero() -> Self {
        Self {
            kind: OperatorKind::Zero,
            modulus: T::zero(),
        }
    }

    pub fn scaled_identity(alpha: T) -> Self {
        Self {
            kind: OperatorKind::ScaledIdentity { alpha },
            modulus: alpha,
        }
    }

    pub fn affine(matrix: Matrix<T>, offset: Vector<T>) -> Result<Self, SpecError> {
        Self::new(OperatorKind::Affine { matrix, offset })
    }

    pub fn subdiff_quadratic(q: Matrix<T>, lin: Vector<T>) -> Result<Self, SpecError> {
        Self::new(OperatorKind::SubdiffQuadratic { q, lin })
    }

    pub fn subdiff_l1(weight: T) -> Result<Self, SpecError> {
        Self::new(OperatorKind::SubdiffL1 { weight })
    }

    pub fn subdiff_box(lo: Vector<T>, hi: Vector<T>) -> Result<Self, SpecError> {
        Self::new(OperatorKind::SubdiffBoxIndicator { lo, hi })
    }

    pub fn subdiff_ball(radius: T) -> Result<Self, SpecError> {
        Self::new(OperatorKind::SubdiffBallIndicator { radius })
    }

    pub fn shifted(base: OperatorSpec<T>, tau: T) -> Self {
        let modulus = base.modulus + tau;
        Self {
            kind: OperatorKind::Shifted {
                base: Box::new(base),
                tau,
            },
            modulus,
        }
    }

    pub fn kind(&self) -> &OperatorKind<T> {
        &self.kind
    }

    /// Certified monotonicity modulus alpha: the operator satisfies
    /// `<x - y, u - v> >= alpha * ||x - y||^2` on its graph.
    pub fn modulus(&self) -> T {
        self.modulus
    }

    /// The fixed dimension this operator acts on, if any; dimension-free
    /// kinds (zero, scaled identity, L1, ball) return `None`.
    pub fn dim_constraint(&self) -> Option<usize> {
        match &self.kind {
            OperatorKind::Zero
            | OperatorKind::ScaledIdentity { .. }
            | OperatorKind::SubdiffL1 { .. }
            | OperatorKind::SubdiffBallIndicator { .. } => None,
            OperatorKind::Affine { matrix, .. } => Some(matrix.dim()),
            OperatorKind::SubdiffQuadratic { q, .. } => Some(q.dim()),
            OperatorKind::SubdiffBoxIndicator { lo, .. } => Some(lo.dim()),
            OperatorKind::Shifted { base, .. } => base.dim_constraint(),
        }
    }

    /// Evaluates the operator where it is single-valued as a map; returns
    /// `None` for genuinely set-valued kinds (L1, box, ball).
    pub fn forward_value(&self, x: &Vector<T>) -> Option<Vector<T>> {
        match &self.kind {
            OperatorKind::Zero => Some(Vector::zeros(x.dim())),
            OperatorKind::ScaledIdentity { alpha } => Some(x.scale(*alpha)),
            OperatorKind::Affine { matrix, offset } => Some(matrix.matvec(x).add(offset)),
            OperatorKind::SubdiffQuadratic { q, lin } => Some(q.matvec(x).add(lin)),
            OperatorKind::SubdiffL1 { .. }
            | OperatorKind::SubdiffBoxIndicator { .. }
            | OperatorKind::SubdiffBallIndicator { .. } => None,
            OperatorKind::Shifted { base, tau } => base
                .forward_value(x)
                .map(|v| Vector::from_fn(x.dim(), |i| v[i] + *tau * x[i])),
        }
    }

    /// Value of the potential function whose subdifferential this operator
    /// is, when one exists in the catalog. Indicator kinds return `None`
    /// outside their domain (the value is +infinity there).
    pub fn potential_value(&self, x: &Vector<T>) -> Option<T> {
        let half = lit::<T>(0.5);
        match &self.kind {
            OperatorKind::Zero => Some(T::zero()),
            OperatorKind::ScaledIdentity { alpha } => Some(half * *alpha * x.norm_sq()),
            OperatorKind::Affine { .. } => None,
            OperatorKind::SubdiffQuadratic { q, lin } => {
                Some(half * x.dot(&q.matvec(x)) + lin.dot(x))
            }
            OperatorKind::SubdiffL1 { weight } => {
                Some(*weight * x.iter().map(|&e| e.abs()).sum::<T>())
            }
            OperatorKind::SubdiffBoxIndicator { lo, hi } => {
                let inside = (0..x.dim()).all(|i| x[i] >= lo[i] && x[i] <= hi[i]);
                inside.then(|| T::zero())
            }
            OperatorKind::SubdiffBallIndicator { radius } => {
                (x.norm() <= *radius).then(|| T::zero())
            }
            OperatorKind::Shifted { base, tau } => base
                .potential_value(x)
                .map(|v| v + half * *tau * x.norm_sq()),
        }
    }
}

/// Computes the certified monotonicity modulus of an operator description.
///
/// Affine and quadratic kinds require a symmetric eigensolve of the
/// (symmetric part of the) matrix; everything else is a table lookup.
pub fn certify_modulus<T: Scalar>(kind: &OperatorKind<T>) -> Result<T, SpecError> {
    let sym_tol = |m: &Matrix<T>| lit::<T>(1e-12) * m.max_abs().max(T::one());
    match kind {
        OperatorKind::Zero => Ok(T::zero()),
        OperatorKind::ScaledIdentity { alpha } => Ok(*alpha),
        OperatorKind::Affine { matrix, offset } => {
            if matrix.dim() != offset.dim() {
                return Err(SpecError::DimensionMismatch(format!(
                    "affine matrix is {}x{} but offset has dim {}",
                    matrix.dim(),
                    matrix.dim(),
                    offset.dim()
                )));
            }
            Ok(matrix.symmetric_part().min_eigenvalue()?)
        }
        OperatorKind::SubdiffQuadratic { q, lin } => {
            if q.dim() != lin.dim() {
                return Err(SpecError::DimensionMismatch(format!(
                    "quadratic matrix is {}x{} but linear term has dim {}",
                    q.dim(),
                    q.dim(),
                    lin.dim()
                )));
            }
            if !q.is_symmetric(sym_tol(q)) {
                let max_asym = q
                    .row_major()
                    .iter()
                    .zip(q.transpose().row_major().iter())
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), |acc, d| acc.max(d));
                return Err(SpecError::NonSymmetric {
                    max_asym: max_asym.to_f64().unwrap_or(f64::NAN),
                });
            }
            Ok(q.min_eigenvalue()?)
        }
        OperatorKind::SubdiffL1 { weight } => {
            if *weight < T::zero() {
                return Err(SpecError::NegativeWeight);
            }
            Ok(T::zero())
        }
        OperatorKind::SubdiffBoxIndicator { lo, hi } => {
            if lo.dim() != hi.dim() {
                return Err(SpecError::DimensionMismatch(format!(
                    "box bounds have dims {} and {}",
                    lo.dim(),
                    hi.dim()
                )));
            }
            if (0..lo.dim()).any(|i| lo[i] > hi[i]) {
                return Err(SpecError::BoxBoundsInverted);
            }
            Ok(T::zero())
        }
        OperatorKind::SubdiffBallIndicator { radius } => {
            if *radius <= T::zero() {
                return Err(SpecError::NonPositiveRadius);
            }
            Ok(T::zero())
        }
        OperatorKind::Shifted { base, tau } => Ok(base.modulus() + *tau),
    }
}

/// Kinds of single-valued cocoercive maps.
#[derive(Debug, Clone, PartialEq)]
pub enum CocoerciveKind<T> {
    /// The zero map.
    Zero,
    /// `x -> Q x + q` with symmetric positive semidefinite `Q`.
    LinearPsd { q: Matrix<T>, lin: Vector<T> },
    /// Gradient of the Huber loss with threshold `mu` centered at `target`.
    HuberGrad { threshold: T, target: Vector<T> },
}

/// A cocoercive map plus its certified cocoercivity constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CocoerciveSpec<T> {
    kind: CocoerciveKind<T>,
    sigma: Cocoercivity<T>,
}

impl<T: Scalar> CocoerciveSpec<T> {
    pub fn new(kind: CocoerciveKind<T>) -> Result<Self, SpecError> {
        let sigma = certify_sigma(&kind)?;
        Ok(Self { kind, sigma })
    }

    pub fn zero() -> Self {
        Self {
            kind: CocoerciveKind::Zero,
            sigma: Cocoercivity::Unbounded,
        }
    }

    pub fn linear_psd(q: Matrix<T>, lin: Vector<T>) -> Result<Self, SpecError> {
        Self::new(CocoerciveKind::LinearPsd { q, lin })
    }

    pub fn huber_grad(threshold: T, target: Vector<T>) -> Result<Self, SpecError> {
        Self::new(CocoerciveKind::HuberGrad { threshold, target })
    }

    pub fn kind(&self) -> &CocoerciveKind<T> {
        &self.kind
    }

    /// Certified cocoercivity constant sigma: the map satisfies
    /// `<x - y, Cx - Cy> >= sigma * ||Cx - Cy||^2`.
    pub fn sigma(&self) -> Cocoercivity<T> {
        self.sigma
    }

    pub fn dim_constraint(&self) -> Option<usize> {
        match &self.kind {
            CocoerciveKind::Zero => None,
            CocoerciveKind::LinearPsd { q, .. } => Some(q.dim()),
            CocoerciveKind::HuberGrad { target, .. } => Some(target.dim()),
        }
    }

    /// Value of the convex potential whose gradient this map is.
    pub fn potential_value(&self, x: &Vector<T>) -> T {
        let half = lit::<T>(0.5);
        match &self.kind {
            CocoerciveKind::Zero => T::zero(),
            CocoerciveKind::LinearPsd { q, lin } => half * x.dot(&q.matvec(x)) + lin.dot(x),
            CocoerciveKind::HuberGrad { threshold, target } => {
                let mu = *threshold;
                (0..x.dim())
                    .map(|i| {
                        let d = (x[i] - target[i]).abs();
                        if d <= mu {
                            half * d * d / mu
                        } else {
                            d - half * mu
                        }
                    })
                    .sum()
            }
        }
    }
}

fn certify_sigma<T: Scalar>(kind: &CocoerciveKind<T>) -> Result<Cocoercivity<T>, SpecError> {
    match kind {
        CocoerciveKind::Zero => Ok(Cocoercivity::Unbounded),
        CocoerciveKind::LinearPsd { q, lin } => {
            if q.dim() != lin.dim() {
                return Err(SpecError::DimensionMismatch(format!(
                    "linear map is {}x{} but offset has dim {}",
                    q.dim(),
                    q.dim(),
                    lin.dim()
                )));
            }
            let tol = lit::<T>(1e-12) * q.max_abs().max(T::one());
            if !q.is_symmetric(tol) {
                let max_asym = q
                    .row_major()
                    .iter()
                    .zip(q.transpose().row_major().iter())
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), |acc, d| acc.max(d));
                return Err(SpecError::NonSymmetric {
                    max_asym: max_asym.to_f64().unwrap_or(f64::NAN),
                });
            }
            let eig = q.sym_eigenvalues()?;
            let min_eig = eig[0];
            let max_eig = eig[eig.len() - 1];
            if min_eig < -lit::<T>(1e-10) * max_eig.abs().max(T::one()) {
                return Err(SpecError::NotPositiveSemidefinite {
                    min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
                });
            }
            if max_eig <= lit::<T>(1e-300) {
                // the zero matrix: the map is constant, cocoercive for any sigma
                Ok(Cocoercivity::Unbounded)
            } else {
                Ok(Cocoercivity::Finite(T::one() / max_eig))
            }
        }
        CocoerciveKind::HuberGrad { threshold, .. } => {
            if *threshold <= T::zero() {
                return Err(SpecError::NonPositiveThreshold);
            }
            Ok(Cocoercivity::Finite(*threshold))
        }
    }
}

/// The inclusion data: find `x` with `0 in A(x) + B(x) + C(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<T> {
    pub a: OperatorSpec<T>,
    pub b: OperatorSpec<T>,
    pub c: CocoerciveSpec<T>,
    dim: usize,
}

impl<T: Scalar> Problem<T> {
    pub fn new(
        a: OperatorSpec<T>,
        b: OperatorSpec<T>,
        c: CocoerciveSpec<T>,
        dim: usize,
    ) -> Result<Self, SpecError> {
        for (name, constraint) in [
            ("operator a", a.dim_constraint()),
            ("operator b", b.dim_constraint()),
            ("cocoercive c", c.dim_constraint()),
        ] {
            if let Some(d) = constraint {
                if d != dim {
                    return Err(SpecError::DimensionMismatch(format!(
                        "{name} acts on dim {d}, problem has dim {dim}"
                    )));
                }
            }
        }
        Ok(Self { a, b, c, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}
