//! Concrete cost functions: least-squares distance to a symplectic target and
//! the generalized Brockett function `tr(QMNJMᵀJ)`.

use crate::error::{Error, Result};
use crate::gradients::CostModel;
use crate::linalg::{skewness_defect, Mat};
use crate::manifold::{poisson, Dim, SymplecticPoint};
use crate::random::{self, seeded_rng};

/// J-symmetry tolerance: `‖LᵀJ − JL‖_F`.
pub const J_SYMMETRY_TOL: f64 = 1e-10;

/// `G(M) = ‖M − W‖²_F`
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresCost {
    target: SymplecticPoint,
}

impl LeastSquaresCost {
    pub fn new(target: SymplecticPoint) -> Self {
        LeastSquaresCost { target }
    }

    pub fn target(&self) -> &SymplecticPoint {
        &self.target
    }
}

pub fn least_squares_model(target: SymplecticPoint) -> LeastSquaresCost {
    LeastSquaresCost::new(target)
}

impl CostModel for LeastSquaresCost {
    fn value(&self, m: &Mat) -> f64 {
        (m - self.target.matrix()).norm_squared()
    }

    fn euc_grad(&self, m: &Mat) -> Mat {
        (m - self.target.matrix()) * 2.0
    }

    fn euc_hess(&self, _m: &Mat, v: &Mat, w: &Mat) -> f64 {
        2.0 * v.dot(w)
    }
}

/// `‖LᵀJ − JL‖_F`
pub fn j_symmetry_residual(l: &Mat) -> Result<f64> {
    let n = Dim::of_matrix(l)?;
    let j = poisson(n);
    Ok((l.transpose() * &j - &j * l).norm())
}

/// `G(M) = tr(QMNJMᵀJ)`, which equals `−tr(M⁻¹QMN)` on the group.
#[derive(Debug, Clone, PartialEq)]
pub struct BrockettCost {
    q: Mat,
    n_mat: Mat,
    j: Mat,
}

impl BrockettCost {
    pub fn new(q: Mat, n_mat: Mat) -> Result<Self> {
        let dim = Dim::of_matrix(&q)?;
        dim.expect_shape(&n_mat)?;
        for l in [&q, &n_mat] {
            let residual = j_symmetry_residual(l)?;
            if residual > J_SYMMETRY_TOL {
                return Err(Error::NotJSymmetric { residual });
            }
            if l.clone().try_inverse().is_none() {
                return Err(Error::Singular);
            }
        }
        Ok(BrockettCost {
            q,
            n_mat,
            j: poisson(dim),
        })
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn n_mat(&self) -> &Mat {
        &self.n_mat
    }

    /// `K = MᵀJQMN`; `M` is critical iff `K` is skew.
    pub fn k_matrix(&self, m: &Mat) -> Mat {
        m.transpose() * &self.j * &self.q * m * &self.n_mat
    }
}

pub fn brockett_model(q: Mat, n_mat: Mat) -> Result<BrockettCost> {
    BrockettCost::new(q, n_mat)
}

impl CostModel for BrockettCost {
    fn value(&self, m: &Mat) -> f64 {
        (&self.q * m * &self.n_mat * &self.j * m.transpose() * &self.j).trace()
    }

    /// `2JQMNJ`
    fn euc_grad(&self, m: &Mat) -> Mat {
        &self.j * &self.q * m * &self.n_mat * &self.j * 2.0
    }

    /// `vec(V)ᵀ(−2(JNᵀ) ⊗ (JQ))vec(W) = 2 tr(VᵀJQWNJ)`
    fn euc_hess(&self, _m: &Mat, v: &Mat, w: &Mat) -> f64 {
        let jq = &self.j * &self.q;
        let nj = &self.n_mat * &self.j;
        2.0 * (v.transpose() * jq * w * nj).trace()
    }
}

/// `−tr(M⁻¹QMN)`, the group form of the Brockett value.
pub fn brockett_group_value(cost: &BrockettCost, m: &SymplecticPoint) -> Result<f64> {
    let inv = m.matrix().clone().try_inverse().ok_or(Error::Singular)?;
    Ok(-(inv * &cost.q * m.matrix() * &cost.n_mat).trace())
}

/// Returns `(critical, ‖K + Kᵀ‖_F)` with `K = MᵀJQMN`; critical when the
/// residual is at most `tol · (1 + ‖K‖_F)`.
pub fn brockett_critical_check(cost: &BrockettCost, m: &SymplecticPoint, tol: f64) -> (bool, f64) {
    let k = cost.k_matrix(m.matrix());
    let residual = skewness_defect(&k);
    (residual <= tol * (1.0 + k.norm()), residual)
}

/// `tr(JMᵀJQMNJSJS) − tr(JMᵀJQMJSNJS)`; half the restricted Euclidean
/// Hessian at a critical point along `MJS`.
pub fn brockett_gap(cost: &BrockettCost, m: &Mat, s: &Mat) -> f64 {
    let j = &cost.j;
    let a = j * m.transpose() * j * &cost.q * m;
    let js = j * s;
    let first = (&a * &cost.n_mat * &js * &js).trace();
    let second = (&a * &js * &cost.n_mat * &js).trace();
    first - second
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSample {
    pub min_gap: f64,
    pub worst_s: Mat,
    pub trials: usize,
}

/// Sample the second-order gap over random unit-Frobenius symmetric `S`.
///
/// `min_gap ≥ 0` is the sampled necessary condition for a local minimum,
/// `min_gap > 0` the sampled sufficient one.
pub fn brockett_second_order_sample(
    cost: &BrockettCost,
    m_c: &SymplecticPoint,
    trials: usize,
    seed: u64,
) -> Result<SecondOrderSample> {
    let (critical, residual) = brockett_critical_check(cost, m_c, 1e-6);
    if !critical {
        return Err(Error::NotCritical { residual });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let dim = m_c.dim().ambient();
    let mut rng = seeded_rng(seed);
    let mut best: Option<(f64, Mat)> = None;
    for _ in 0..trials {
        let s = random::symmetric(&mut rng, dim, 1.0);
        let norm = s.norm();
        if norm == 0.0 {
            continue;
        }
        let s = s / norm;
        let gap = brockett_gap(cost, m_c.matrix(), &s);
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, s));
        }
    }
    let (min_gap, worst_s) = best.expect("at least one non-zero sample");
    Ok(SecondOrderSample {
        min_gap,
        worst_s,
        trials,
    })
}

/// Random J-symmetric `L = −JK` for a random skew `K`; `JL = K` is skew by construction.
pub fn random_j_symmetric(n: Dim, seed: u64, scale: f64) -> Result<Mat> {
    const ATTEMPTS: usize = 16;
    let mut rng = seeded_rng(seed);
    let j = poisson(n);
    for _ in 0..ATTEMPTS {
        let k = random::skew(&mut rng, n.ambient(), scale);
        let l = -(&j * k);
        let sv = l.singular_values();
        if sv.max() == 0.0 || sv.min() < 1e-8 * sv.max() {
            continue;
        }
        debug_assert!(j_symmetry_residual(&l).unwrap() <= 1e-14 * (1.0 + l.norm()));
        return Ok(l);
    }
    Err(Error::GenerationFailed {
        attempts: ATTEMPTS,
        seed,
    })
}

/// Random symmetric `2n × 2n` matrix with entries in `[−scale, scale]`.
pub fn random_symmetric(n: Dim, seed: u64, scale: f64) -> Mat {
    random::symmetric(&mut seeded_rng(seed), n.ambient(), scale)
}
