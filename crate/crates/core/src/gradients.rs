//! Embedded gradients and Lagrange-multiplier matrices.
//!
//! Under the Frobenius metric the embedded gradient is `∇G + JMΣ̃`, where the
//! skew multiplier matrix `Σ̃` solves the Sylvester equation
//! `MᵀMΣ̃ + Σ̃MᵀM = ∇GᵀJM + MᵀJ∇G`. Under the left-invariant metric the
//! multipliers have the closed form `Γ̃ = ½(JMᵀ∇G + ∇GᵀMJ)`.
//!
//! Two independent routes to `Σ̃` are kept for cross-checking: the `n = 1`
//! closed form and a Gram-matrix solve over the individual constraint
//! gradients.

use crate::error::{Error, Result};
use crate::linalg::{condition_number, skew_part, skewness_defect, unvec, vec_of, Mat, Vector};
use crate::manifold::{
    ambient_to_tangent, constraint_indices, omega, poisson, ConstraintIndex, Dim, SymTangent,
    SymplecticPoint,
};
use crate::retraction::cayley_retract;

/// Skewness of any multiplier matrix handed out.
pub const SKEW_TOL: f64 = 1e-12;

/// Relative residual accepted from the Sylvester solve.
pub const SYLVESTER_TOL: f64 = 1e-10;

/// Gram matrices worse conditioned than this mark a degenerate point.
pub const GRAM_MAX_CONDITION: f64 = 1e12;

/// Default bound on `n` for the Gram route, which scales as `O(n⁶)`.
pub const GRAM_MAX_N: usize = 4;

/// A smooth cost on the ambient matrix space: value, Euclidean gradient and
/// Euclidean Hessian bilinear form.
pub trait CostModel: Sync {
    fn value(&self, m: &Mat) -> f64;

    fn euc_grad(&self, m: &Mat) -> Mat;

    /// `Hess_Euc G(M)(V, W)`; symmetric in `V` and `W`.
    fn euc_hess(&self, m: &Mat, v: &Mat, w: &Mat) -> f64;
}

impl<C: CostModel + ?Sized> CostModel for &C {
    fn value(&self, m: &Mat) -> f64 {
        (**self).value(m)
    }
    fn euc_grad(&self, m: &Mat) -> Mat {
        (**self).euc_grad(m)
    }
    fn euc_hess(&self, m: &Mat, v: &Mat, w: &Mat) -> f64 {
        (**self).euc_hess(m, v, w)
    }
}

/// Skew-symmetric `2n × 2n` multiplier matrix
/// `[[Σ_AC, Σ], [−Σᵀ, Σ_BD]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierMatrix {
    n: Dim,
    entries: Mat,
}

impl MultiplierMatrix {
    /// Takes the skew part of `entries`. Callers are expected to have checked
    /// that the symmetric part is negligible.
    pub fn from_skew(entries: Mat) -> Result<Self> {
        let n = Dim::of_matrix(&entries)?;
        Ok(MultiplierMatrix {
            n,
            entries: skew_part(&entries),
        })
    }

    pub fn zeros(n: Dim) -> Self {
        MultiplierMatrix {
            n,
            entries: Mat::zeros(n.ambient(), n.ambient()),
        }
    }

    pub fn dim(&self) -> Dim {
        self.n
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    pub fn into_matrix(self) -> Mat {
        self.entries
    }

    fn block(&self, row: usize, col: usize) -> Mat {
        let k = self.n.n();
        self.entries.view((row * k, col * k), (k, k)).into_owned()
    }

    /// Upper-left block; its strict upper triangle holds `σᴬᶜᵢⱼ`.
    pub fn sigma_ac(&self) -> Mat {
        self.block(0, 0)
    }

    /// Lower-right block; its strict upper triangle holds `σᴮᴰᵢⱼ`.
    pub fn sigma_bd(&self) -> Mat {
        self.block(1, 1)
    }

    /// Upper-right block, the full matrix of mixed multipliers `σⁱʲ`.
    pub fn sigma_mix(&self) -> Mat {
        self.block(0, 1)
    }

    /// Multiplier attached to one constraint function.
    pub fn multiplier(&self, idx: ConstraintIndex) -> f64 {
        // ⟨Ω, Σ̃⟩ picks the entry twice (once with each sign)
        0.5 * omega(idx, self.n).dot(&self.entries)
    }
}

/// `Y − Yᵀ` with `Y = MᵀJ∇G`, i.e. `∇GᵀJM + MᵀJ∇G` with exact skew symmetry.
fn sylvester_rhs(m: &Mat, grad: &Mat, j: &Mat) -> Mat {
    let y = m.transpose() * j * grad;
    &y - y.transpose()
}

/// Solve `MᵀMΣ̃ + Σ̃MᵀM = ∇GᵀJM + MᵀJ∇G` through the `4n² × 4n²` Kronecker
/// system `(I ⊗ MᵀM + MᵀM ⊗ I) vec Σ̃ = vec(rhs)`.
pub fn sylvester_multipliers(m: &SymplecticPoint, grad: &Mat) -> Result<MultiplierMatrix> {
    let n = m.dim();
    n.expect_shape(grad)?;
    let dim = n.ambient();
    let j = poisson(n);
    let p = m.matrix().transpose() * m.matrix();
    let id = Mat::identity(dim, dim);
    let kron = id.kronecker(&p) + p.kronecker(&id);
    let rhs = sylvester_rhs(m.matrix(), grad, &j);
    let b = vec_of(&rhs);

    let sol: Vector = match kron.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => {
            return Err(Error::SylvesterFailed {
                condition: condition_number(&kron),
            })
        }
    };
    let raw = unvec(&sol, dim, dim);

    let scale = 1.0 + rhs.norm();
    let residual = (&p * &raw + &raw * &p - &rhs).norm();
    if !(residual <= SYLVESTER_TOL * scale) {
        return Err(Error::SylvesterFailed {
            condition: condition_number(&kron),
        });
    }
    let skew_residual = skewness_defect(&raw);
    if skew_residual > SYLVESTER_TOL * (1.0 + raw.norm()) {
        return Err(Error::SylvesterNotSkew {
            residual: skew_residual,
        });
    }
    MultiplierMatrix::from_skew(raw)
}

/// `‖MᵀMΣ̃ + Σ̃MᵀM − rhs‖_F` and `‖rhs‖_F` for a candidate `Σ̃`.
pub fn sylvester_residual(m: &SymplecticPoint, grad: &Mat, sigma: &MultiplierMatrix) -> (f64, f64) {
    let j = poisson(m.dim());
    let p = m.matrix().transpose() * m.matrix();
    let rhs = sylvester_rhs(m.matrix(), grad, &j);
    let s = sigma.matrix();
    ((&p * s + s * &p - &rhs).norm(), rhs.norm())
}

/// `(∇GᵀJM + MᵀJ∇G) / tr(MᵀM)`, valid only for `n = 1`.
pub fn sigma_closed_form_n1(m: &SymplecticPoint, grad: &Mat) -> Result<MultiplierMatrix> {
    let n = m.dim();
    if n.n() != 1 {
        return Err(Error::RequiresN1(n.n()));
    }
    n.expect_shape(grad)?;
    let j = poisson(n);
    let rhs = sylvester_rhs(m.matrix(), grad, &j);
    let trace = m.matrix().norm_squared();
    MultiplierMatrix::from_skew(rhs / trace)
}

/// Euclidean gradient `−JMΩ` of a single constraint function at any matrix `m`.
pub fn constraint_gradient(idx: ConstraintIndex, m: &Mat) -> Result<Mat> {
    let n = Dim::of_matrix(m)?;
    ConstraintIndex::new(idx.kind, idx.i, idx.j, n)?;
    let j = poisson(n);
    Ok(-(j * m * omega(idx, n)))
}

/// Multipliers from the normal equations of the constraint gradients.
///
/// With `∇Fᵢ` the constraint gradients, solves `Gram · σ = (⟨∇Fᵢ, ∇G⟩)ᵢ`
/// and packs `Σ̃ = Σᵢ σᵢ Ωᵢ`, so that `∇G − Σᵢ σᵢ∇Fᵢ = ∇G + JMΣ̃`.
pub fn gram_multipliers(m: &SymplecticPoint, grad: &Mat) -> Result<MultiplierMatrix> {
    gram_multipliers_bounded(m, grad, GRAM_MAX_N)
}

pub fn gram_multipliers_bounded(
    m: &SymplecticPoint,
    grad: &Mat,
    max_n: usize,
) -> Result<MultiplierMatrix> {
    let n = m.dim();
    if n.n() > max_n {
        return Err(Error::InvalidArgument(format!(
            "Gram multipliers limited to n <= {max_n}, got n = {n}"
        )));
    }
    n.expect_shape(grad)?;
    let indices = constraint_indices(n);
    let grads = indices
        .iter()
        .map(|&idx| constraint_gradient(idx, m.matrix()))
        .collect::<Result<Vec<_>>>()?;
    let k = grads.len();
    let gram = Mat::from_fn(k, k, |a, b| grads[a].dot(&grads[b]));
    let rhs = Vector::from_fn(k, |a, _| grads[a].dot(grad));

    let condition = condition_number(&gram);
    if !(condition <= GRAM_MAX_CONDITION) {
        return Err(Error::DegeneratePoint { condition });
    }
    let sigma = gram
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or(Error::DegeneratePoint { condition })?;

    let mut packed = Mat::zeros(n.ambient(), n.ambient());
    for (idx, s) in indices.iter().zip(sigma.iter()) {
        packed += omega(*idx, n) * *s;
    }
    MultiplierMatrix::from_skew(packed)
}

/// Ambient embedded gradient `∇G + JMΣ̃` and the multipliers used.
pub fn embedded_gradient_euc_ambient(
    m: &SymplecticPoint,
    grad: &Mat,
) -> Result<(Mat, MultiplierMatrix)> {
    let sigma = sylvester_multipliers(m, grad)?;
    let j = poisson(m.dim());
    let ambient = grad + j * m.matrix() * sigma.matrix();
    Ok((ambient, sigma))
}

/// Riemannian gradient for the metric induced by the Frobenius product.
pub fn embedded_gradient_euc<C: CostModel + ?Sized>(
    m: &SymplecticPoint,
    cost: &C,
) -> Result<SymTangent> {
    let grad = cost.euc_grad(m.matrix());
    let (ambient, _) = embedded_gradient_euc_ambient(m, &grad)?;
    let (tangent, residual) = ambient_to_tangent(m, &ambient)?;
    debug_assert!(residual <= 1e-8 * (1.0 + ambient.norm() * m.matrix().norm_squared()));
    Ok(tangent)
}

/// `Γ̃ = ½(JMᵀ∇G + ∇GᵀMJ)`, built as the skew part of `JMᵀ∇G`.
pub fn lagrange_inv(m: &SymplecticPoint, grad: &Mat) -> Result<MultiplierMatrix> {
    let n = m.dim();
    n.expect_shape(grad)?;
    let x = poisson(n) * m.matrix().transpose() * grad;
    MultiplierMatrix::from_skew(x)
}

/// `½(MMᵀ∇G + MJ∇GᵀMJ)`
pub fn embedded_gradient_inv_ambient(m: &SymplecticPoint, grad: &Mat) -> Mat {
    let j = poisson(m.dim());
    let mm = m.matrix();
    let mj = mm * &j;
    (mm * mm.transpose() * grad + &mj * grad.transpose() * &mj) * 0.5
}

/// `MMᵀ∇G + MJΓ̃` for a caller-supplied multiplier matrix. With `Γ̃` from
/// [`lagrange_inv`] this equals [`embedded_gradient_inv_ambient`].
pub fn inv_gradient_from_multipliers(m: &SymplecticPoint, grad: &Mat, gamma: &Mat) -> Mat {
    let j = poisson(m.dim());
    let mm = m.matrix();
    mm * mm.transpose() * grad + mm * j * gamma
}

/// Riemannian gradient for the left-invariant metric.
pub fn embedded_gradient_inv<C: CostModel + ?Sized>(
    m: &SymplecticPoint,
    cost: &C,
) -> Result<SymTangent> {
    let grad = cost.euc_grad(m.matrix());
    let ambient = embedded_gradient_inv_ambient(m, &grad);
    let (tangent, _) = ambient_to_tangent(m, &ambient)?;
    Ok(tangent)
}

/// Left-invariant inner product `tr(XᵀM⁻ᵀM⁻¹Y)` at `M`.
pub fn inv_inner(m: &SymplecticPoint, x: &Mat, y: &Mat) -> Result<f64> {
    let lu = m.matrix().clone().lu();
    let mx = lu.solve(x).ok_or(Error::Singular)?;
    let my = lu.solve(y).ok_or(Error::Singular)?;
    Ok(mx.dot(&my))
}

/// Outcome of the first-order optimality test.
#[derive(Debug, Clone, PartialEq)]
pub struct Criticality {
    pub critical: bool,
    /// `‖JMᵀ∇G − ∇GᵀMJ‖_F`
    pub residual: f64,
    /// `tol · (1 + ‖∇G‖_F)`
    pub threshold: f64,
    /// At a critical point the multipliers are `JMᵀ∇G`.
    pub multipliers: Option<MultiplierMatrix>,
}

/// A point is critical iff `JMᵀ∇G` is skew, i.e. `JMᵀ∇G = ∇GᵀMJ`.
pub fn is_critical<C: CostModel + ?Sized>(m: &SymplecticPoint, cost: &C, tol: f64) -> Criticality {
    let grad = cost.euc_grad(m.matrix());
    criticality_from_grad(m, &grad, tol)
}

pub fn criticality_from_grad(m: &SymplecticPoint, grad: &Mat, tol: f64) -> Criticality {
    let x = poisson(m.dim()) * m.matrix().transpose() * grad;
    let residual = skewness_defect(&x);
    let threshold = tol * (1.0 + grad.norm());
    let critical = residual <= threshold;
    Criticality {
        critical,
        residual,
        threshold,
        multipliers: critical.then(|| MultiplierMatrix {
            n: m.dim(),
            entries: skew_part(&x),
        }),
    }
}

/// Central difference of `G` along the retraction curve `t ↦ R_M(t·v)`.
pub fn fd_directional<C: CostModel + ?Sized>(
    cost: &C,
    m: &SymplecticPoint,
    v: &SymTangent,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let fwd = cayley_retract(m, &(v.s() * h))?;
    let bwd = cayley_retract(m, &(v.s() * -h))?;
    Ok((cost.value(fwd.matrix()) - cost.value(bwd.matrix())) / (2.0 * h))
}
