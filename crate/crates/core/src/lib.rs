//! Riemannian optimization on the real symplectic group `Sp(2n, ℝ)`.
//!
//! Points are `2n × 2n` matrices with `MᵀJM = J`; tangent vectors at `M` are
//! stored as `MJS` with `S` symmetric. The crate provides embedded gradients
//! and restricted Hessians for the Frobenius and left-invariant metrics, a
//! Cayley-type retraction, and steepest-descent and Newton optimizers.

// Negated comparisons in input guards are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
pub mod error;
pub mod gradients;
pub mod hessians;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod optimizers;
pub mod random;
pub mod retraction;
pub mod validation;

pub use costs::{brockett_model, least_squares_model, BrockettCost, LeastSquaresCost};
pub use error::{Error, Result};
pub use gradients::{CostModel, Criticality, MultiplierMatrix};
pub use hessians::{HessianMatrix, Inertia, Metric};
pub use linalg::{Mat, Vector};
pub use manifold::{ConstraintIndex, ConstraintKind, Dim, SymTangent, SymplecticPoint};
pub use optimizers::{
    newton, steepest_descent, Classification, CriticalKind, IterRecord, OptimizerConfig,
    OptimizerTrace, Status,
};
pub use retraction::{cayley_retract, retract_tangent};
