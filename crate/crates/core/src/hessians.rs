//! Restricted Hessians on `T_M Sp(2n)` for the induced Euclidean metric and
//! the left-invariant metric, plus Newton-system assembly.
//!
//! Kronecker-structured forms `vec(V)ᵀ(Y ⊗ X)vec(W)` are always evaluated as
//! `tr(VᵀXWYᵀ)`; nothing of size `(2n)² × (2n)²` is ever allocated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradients::{lagrange_inv, sylvester_multipliers, CostModel};
use crate::linalg::{bracket, sorted_sym_eigenvalues, Mat, Vector};
use crate::manifold::{omega, poisson, tangent_basis_params, ConstraintIndex, Dim, SymTangent, SymplecticPoint};

/// Symmetry tolerance for assembled Hessian matrices, relative to `1 + ‖h‖_F`.
pub const HESSIAN_SYM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Invariant,
}

/// Counts of positive, zero and negative eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub positive: usize,
    pub zero: usize,
    pub negative: usize,
}

/// Hessian in the coordinates of [`tangent_basis_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct HessianMatrix {
    n: Dim,
    h: Mat,
    metric: Metric,
}

impl HessianMatrix {
    pub fn new(n: Dim, h: Mat, metric: Metric) -> Result<Self> {
        let m = n.manifold_dim();
        if h.nrows() != m || h.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                rows: h.nrows(),
                cols: h.ncols(),
            });
        }
        let residual = (&h - h.transpose()).norm();
        if residual > HESSIAN_SYM_TOL * (1.0 + h.norm()) {
            return Err(Error::InvalidArgument(format!(
                "Hessian matrix is not symmetric (residual {residual:.3e})"
            )));
        }
        Ok(HessianMatrix { n, h, metric })
    }

    pub fn dim(&self) -> Dim {
        self.n
    }

    pub fn matrix(&self) -> &Mat {
        &self.h
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_sym_eigenvalues(&self.h)
    }

    /// Eigenvalues with `|λ| ≤ rel_tol · max|λ|` count as zero.
    pub fn inertia(&self, rel_tol: f64) -> Inertia {
        let eig = self.eigenvalues();
        let scale = eig.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let cut = rel_tol * scale;
        let mut out = Inertia {
            positive: 0,
            zero: 0,
            negative: 0,
        };
        for &e in &eig {
            if e > cut {
                out.positive += 1;
            } else if e < -cut {
                out.negative += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    pub fn is_positive_definite(&self) -> bool {
        self.h.clone().cholesky().is_some()
    }
}

/// `vec(V)ᵀ(Ω ⊗ J)vec(W) = tr(VᵀJWΩᵀ)`, the Hessian of one constraint.
pub fn constraint_hessian_bilinear(idx: ConstraintIndex, v: &Mat, w: &Mat) -> Result<f64> {
    let n = Dim::of_matrix(v)?;
    n.expect_shape(w)?;
    let checked = ConstraintIndex::new(idx.kind, idx.i, idx.j, n)?;
    let om = omega(checked, n);
    let j = poisson(n);
    Ok((v.transpose() * j * w * om.transpose()).trace())
}

fn check_base(m: &SymplecticPoint, v: &SymTangent) -> Result<()> {
    if v.base() != m {
        return Err(Error::InvalidArgument(
            "tangent vector is based at a different point".into(),
        ));
    }
    Ok(())
}

/// `Hess G(MJS₁, MJS₂) + tr(S₁JS₂Σ̃)`
pub fn hess_euc_restricted<C: CostModel + ?Sized>(
    m: &SymplecticPoint,
    cost: &C,
    v1: &SymTangent,
    v2: &SymTangent,
) -> Result<f64> {
    check_base(m, v1)?;
    check_base(m, v2)?;
    let grad = cost.euc_grad(m.matrix());
    let sigma = sylvester_multipliers(m, &grad)?;
    let j = poisson(m.dim());
    let ambient = cost.euc_hess(m.matrix(), &v1.ambient(), &v2.ambient());
    let correction = (v1.s() * &j * v2.s() * sigma.matrix()).trace();
    Ok(ambient + correction)
}

/// `∇_X Y` for left-invariant fields `X = MX₀`, `Y = MY₀`:
/// `½M([X₀,Y₀] − [Y₀ᵀ,X₀] − [X₀ᵀ,Y₀])`.
pub fn covariant_deriv_left_inv(m: &Mat, x0: &Mat, y0: &Mat) -> Mat {
    let inner = bracket(x0, y0) - bracket(&y0.transpose(), x0) - bracket(&x0.transpose(), y0);
    m * inner * 0.5
}

/// Covariant derivative for general fields. `dy_along_x` is the ambient
/// directional derivative `X_M(Y)`, which the caller must supply.
pub fn covariant_deriv_general(m: &Mat, x: &Mat, y: &Mat, dy_along_x: &Mat) -> Result<Mat> {
    let minv = m.clone().try_inverse().ok_or(Error::Singular)?;
    let minv_t = minv.transpose();
    let g = &minv_t * &minv;
    let sum = y * &minv * x
        + x * &minv * y
        + m * y.transpose() * &g * x
        + m * x.transpose() * &g * y
        - y * x.transpose() * &minv_t
        - x * y.transpose() * &minv_t;
    Ok(dy_along_x - sum * 0.5)
}

/// `½(X₀Y₀ + Y₀X₀ + [Y₀ᵀ,X₀] + [X₀ᵀ,Y₀])`
pub fn z_term(x0: &Mat, y0: &Mat) -> Mat {
    (x0 * y0 + y0 * x0 + bracket(&y0.transpose(), x0) + bracket(&x0.transpose(), y0)) * 0.5
}

/// Data shared by every entry of the invariant Hessian at a fixed point.
struct InvHessianParts {
    j: Mat,
    gamma: Mat,
    /// `∇G + JMΓ̃`
    pairing: Mat,
}

impl InvHessianParts {
    fn at(m: &SymplecticPoint, grad: &Mat) -> Result<Self> {
        let gamma = lagrange_inv(m, grad)?.into_matrix();
        let j = poisson(m.dim());
        let pairing = grad + &j * m.matrix() * &gamma;
        Ok(InvHessianParts { j, gamma, pairing })
    }

    fn eval<C: CostModel + ?Sized>(&self, m: &Mat, cost: &C, s1: &Mat, s2: &Mat) -> f64 {
        let js1 = &self.j * s1;
        let js2 = &self.j * s2;
        let ambient = cost.euc_hess(m, &(m * &js1), &(m * &js2));
        let correction = (s1 * &self.j * s2 * &self.gamma).trace();
        let z = m * z_term(&js1, &js2);
        ambient + correction + self.pairing.dot(&z)
    }
}

/// `Hess G(MJS₁, MJS₂) + tr(S₁JS₂Γ̃) + ⟨∇G + JMΓ̃, M·Z(JS₁, JS₂)⟩`
pub fn hess_inv_restricted<C: CostModel + ?Sized>(
    m: &SymplecticPoint,
    cost: &C,
    v1: &SymTangent,
    v2: &SymTangent,
) -> Result<f64> {
    check_base(m, v1)?;
    check_base(m, v2)?;
    let grad = cost.euc_grad(m.matrix());
    let parts = InvHessianParts::at(m, &grad)?;
    Ok(parts.eval(m.matrix(), cost, v1.s(), v2.s()))
}

/// Upper-triangle index pairs of an `m × m` matrix, row-major.
fn upper_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect()
}

fn assemble(m: usize, pairs: &[(usize, usize)], values: &[f64]) -> Mat {
    let mut h = Mat::zeros(m, m);
    for (&(a, b), &v) in pairs.iter().zip(values) {
        h[(a, b)] = v;
        h[(b, a)] = v;
    }
    h
}

/// Newton coordinates at `M`: the invariant Hessian `h` and `gₐ = ⟨∇G, M eₐ⟩`.
///
/// Entries are evaluated in parallel; each is computed independently, so the
/// result does not depend on the thread count.
pub fn newton_system<C: CostModel + ?Sized>(
    m: &SymplecticPoint,
    cost: &C,
) -> Result<(HessianMatrix, Vector)> {
    let n = m.dim();
    let mm = m.matrix();
    let grad = cost.euc_grad(mm);
    let parts = InvHessianParts::at(m, &grad)?;
    let params = tangent_basis_params(n);
    let dim = params.len();

    let g = Vector::from_iterator(
        dim,
        params.iter().map(|s| grad.dot(&(mm * &parts.j * s))),
    );
    let pairs = upper_pairs(dim);
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| parts.eval(mm, cost, &params[a], &params[b]))
        .collect();
    let h = HessianMatrix::new(n, assemble(dim, &pairs, &values), Metric::Invariant)?;
    Ok((h, g))
}

/// Tangent-basis coordinates of the two terms of the restricted Euclidean
/// Hessian: the ambient part `Hess G(MJSₐ, MJS_b)` and the multiplier part
/// `tr(SₐJS_bΣ̃)`. Their sizes set the scale for deciding which eigenvalues
/// of the sum are zero.
pub fn euclidean_hessian_parts<C: CostModel + ?Sized>(
    m: &SymplecticPoint,
    cost: &C,
) -> Result<(Mat, Mat)> {
    let n = m.dim();
    let mm = m.matrix();
    let grad = cost.euc_grad(mm);
    let sigma = sylvester_multipliers(m, &grad)?.into_matrix();
    let j = poisson(n);
    let params = tangent_basis_params(n);
    let ambient: Vec<Mat> = params.iter().map(|s| mm * &j * s).collect();
    let pairs = upper_pairs(params.len());
    let values: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            (
                cost.euc_hess(mm, &ambient[a], &ambient[b]),
                (&params[a] * &j * &params[b] * &sigma).trace(),
            )
        })
        .collect();
    let (amb, corr): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    Ok((
        assemble(params.len(), &pairs, &amb),
        assemble(params.len(), &pairs, &corr),
    ))
}

/// The restricted Euclidean Hessian in tangent-basis coordinates.
pub fn euclidean_hessian_matrix<C: CostModel + ?Sized>(
    m: &SymplecticPoint,
    cost: &C,
) -> Result<HessianMatrix> {
    let (ambient, correction) = euclidean_hessian_parts(m, cost)?;
    HessianMatrix::new(m.dim(), ambient + correction, Metric::Euclidean)
}
