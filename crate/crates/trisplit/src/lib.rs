//! Adaptive splitting solver for inclusions `0 in A(x) + B(x) + C(x)` in
//! R^n, where `A` and `B` are maximally monotone up to a known modulus
//! (strongly or weakly monotone) with closed-form resolvents, and `C` is a
//! cocoercive single-valued map used only through forward evaluations.
//!
//! The solver iterates the composed operator
//!
//! ```text
//! T = Id - eta J_{gamma A} + eta J_{delta B}((1-lambda) Id + lambda J_{gamma A} - delta C J_{gamma A})
//! ```
//!
//! with `lambda = 1 + delta/gamma`. The resolvent parameters adapt to the
//! moduli: with `alpha + beta = 0` they are tied by
//! `delta = gamma/(1 + 2 gamma alpha)`; with `alpha + beta > 0` an open
//! interval of `delta` is admissible for each `gamma` above a threshold.
//! [`params`] validates and suggests these choices, [`engine`] runs the
//! iteration and certifies solutions through KKT residuals, [`certify`]
//! checks the underlying identities and inequalities numerically, and
//! [`problems`] provides seeded instances with independent brute-force
//! oracles.
//!
//! Everything numerical is generic over the scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); the aliases below fix the common concrete choices.
//!
//! # Example
//!
//! Minimize `(x-1)^2/2 + (x-4)^2/2 + (x-7)^2/2` by splitting it into two
//! subdifferentials and a gradient:
//!
//! ```
//! use trisplit::linalg::{Matrix, Vector};
//! use trisplit::operators::{CocoerciveSpec, OperatorSpec, Problem};
//! use trisplit::{engine, params};
//!
//! let quad = |center: f64| {
//!     OperatorSpec::subdiff_quadratic(Matrix::identity(1), Vector::from_slice(&[-center]))
//!         .unwrap()
//! };
//! let problem = Problem::new(
//!     quad(1.0),
//!     quad(4.0),
//!     CocoerciveSpec::linear_psd(Matrix::identity(1), Vector::from_slice(&[-7.0])).unwrap(),
//!     1,
//! )
//! .unwrap();
//! let plan = params::suggest(1.0, 1.0, problem.c.sigma()).unwrap();
//! let report = engine::solve(
//!     &problem,
//!     &plan,
//!     &Vector::zeros(1),
//!     &engine::StopRule::default(),
//! )
//! .unwrap();
//! assert!((report.final_shadow[0] - 4.0).abs() < 1e-8);
//! ```

pub mod certify;
pub mod engine;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod params;
pub mod problems;
pub mod resolvents;
pub mod scalar;

pub use engine::{RunReport, RunStatus, StopRule};
pub use operators::{CocoerciveSpec, Cocoercivity, OperatorSpec, Problem};
pub use params::{DeltaRange, ParamPlan, Regime};
pub use scalar::Scalar;

/// Double-precision vector, the default working type.
pub type Vector64 = linalg::Vector<f64>;
/// Double-precision square matrix.
pub type Matrix64 = linalg::Matrix<f64>;
/// Double-precision problem description.
pub type Problem64 = operators::Problem<f64>;
/// Double-precision parameter plan.
pub type ParamPlan64 = params::ParamPlan<f64>;
/// Double-precision run report.
pub type RunReport64 = engine::RunReport<f64>;

/// Single-precision vector.
pub type Vector32 = linalg::Vector<f32>;
/// Single-precision square matrix.
pub type Matrix32 = linalg::Matrix<f32>;
/// Single-precision problem description.
pub type Problem32 = operators::Problem<f32>;
/// Single-precision parameter plan.
pub type ParamPlan32 = params::ParamPlan<f32>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};

    #[test]
    fn single_precision_smoke() {
        // the core is scalar-generic; drive a small solve in f32
        let quad = |center: f32| {
            OperatorSpec::subdiff_quadratic(
                Matrix::<f32>::identity(1),
                Vector::from_slice(&[-center]),
            )
            .unwrap()
        };
        let problem = Problem32::new(
            quad(1.0),
            quad(4.0),
            CocoerciveSpec::linear_psd(Matrix::<f32>::identity(1), Vector::from_slice(&[-7.0f32]))
                .unwrap(),
            1,
        )
        .unwrap();
        let plan = params::suggest(1.0f32, 1.0, problem.c.sigma()).unwrap();
        let stop = StopRule::new(1e-6f32, 1e-4, 10_000);
        let report = engine::solve(&problem, &plan, &Vector::zeros(1), &stop).unwrap();
        assert_eq!(report.status, RunStatus::Converged);
        assert!((report.final_shadow[0] - 4.0).abs() < 1e-3);
    }
}
