//! Steepest descent and embedded Newton on `Sp(2n)`, both stepping through
//! the Cayley retraction with Armijo backtracking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradients::{
    embedded_gradient_euc_ambient, embedded_gradient_inv_ambient, inv_inner, CostModel, Criticality,
    criticality_from_grad,
};
use crate::hessians::{euclidean_hessian_parts, newton_system, HessianMatrix, Inertia, Metric};
use crate::linalg::{sorted_sym_eigenvalues, sym_part, Mat, Vector};
use crate::manifold::{poisson, tangent_basis_params, SymplecticPoint};
use crate::retraction::cayley_retract;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmijoConfig {
    pub lambda0: f64,
    pub c1: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        ArmijoConfig {
            lambda0: 1.0,
            c1: 1e-4,
            shrink: 0.5,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    /// Tikhonov shift added to the diagonal of `h`.
    pub regularization: f64,
    pub fallback_to_gradient: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            regularization: 0.0,
            fallback_to_gradient: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    /// Threshold on `‖∂_Euc G‖_F`.
    pub grad_tol: f64,
    pub armijo: ArmijoConfig,
    pub newton: NewtonConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iter: 2000,
            grad_tol: 1e-9,
            armijo: ArmijoConfig::default(),
            newton: NewtonConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.armijo;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(a.lambda0 > 0.0 && a.lambda0.is_finite()) {
            return bad(format!("armijo.lambda0 must be positive, got {}", a.lambda0));
        }
        if !(a.c1 > 0.0 && a.c1 < 1.0) {
            return bad(format!("armijo.c1 must lie in (0, 1), got {}", a.c1));
        }
        if !(a.shrink > 0.0 && a.shrink < 1.0) {
            return bad(format!("armijo.shrink must lie in (0, 1), got {}", a.shrink));
        }
        if !(self.grad_tol >= 0.0) {
            return bad(format!("grad_tol must be non-negative, got {}", self.grad_tol));
        }
        if !(self.newton.regularization >= 0.0 && self.newton.regularization.is_finite()) {
            return bad(format!(
                "newton.regularization must be non-negative, got {}",
                self.newton.regularization
            ));
        }
        Ok(())
    }
}

/// One accepted iterate. `k = 0` is the starting point, with `step = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub symplecticity_residual: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Stalled,
    SingularPencil,
    SingularHessian,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Stalled => "stalled",
            Status::SingularPencil => "singular_pencil",
            Status::SingularHessian => "singular_hessian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace {
    pub records: Vec<IterRecord>,
    pub status: Status,
    pub final_point: SymplecticPoint,
}

impl OptimizerTrace {
    /// Accepted steps, excluding the starting point.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("trace always holds the starting point")
    }

    pub fn max_symplecticity_residual(&self) -> f64 {
        self.records
            .iter()
            .fold(0.0, |acc, r| acc.max(r.symplecticity_residual))
    }
}

/// Value and first-order data at an iterate.
struct Snapshot {
    cost: f64,
    grad: Mat,
    grad_norm: f64,
}

fn snapshot<C: CostModel + ?Sized>(cost: &C, m: &SymplecticPoint) -> Result<Snapshot> {
    let grad = cost.euc_grad(m.matrix());
    let (ambient, _) = embedded_gradient_euc_ambient(m, &grad)?;
    Ok(Snapshot {
        cost: cost.value(m.matrix()),
        grad_norm: ambient.norm(),
        grad,
    })
}

fn record(k: usize, m: &SymplecticPoint, snap: &Snapshot, step: f64, backtracks: usize) -> IterRecord {
    IterRecord {
        k,
        cost: snap.cost,
        grad_norm: snap.grad_norm,
        step,
        symplecticity_residual: m.residual(),
        backtracks,
    }
}

enum LineSearch {
    Accepted {
        point: SymplecticPoint,
        step: f64,
        backtracks: usize,
    },
    Failed {
        last_pencil: bool,
    },
}

/// Backtrack on `λ` until `G(R_M(λS)) ≤ G(M) − c1·λ·decrease`. A singular
/// pencil counts as a rejection.
fn armijo<C: CostModel + ?Sized>(
    cost: &C,
    m: &SymplecticPoint,
    g0: f64,
    unit_step: &Mat,
    decrease: f64,
    cfg: &ArmijoConfig,
) -> LineSearch {
    let mut lambda = cfg.lambda0;
    let mut last_pencil = false;
    for backtracks in 0..=cfg.max_backtracks {
        match cayley_retract(m, &(unit_step * lambda)) {
            Ok(point) => {
                let value = cost.value(point.matrix());
                if value <= g0 - cfg.c1 * lambda * decrease {
                    return LineSearch::Accepted {
                        point,
                        step: lambda,
                        backtracks,
                    };
                }
                last_pencil = false;
            }
            Err(Error::SingularPencil { .. }) => last_pencil = true,
            Err(_) => last_pencil = false,
        }
        lambda *= cfg.shrink;
    }
    LineSearch::Failed { last_pencil }
}

/// Unit steepest-descent parameter `½(X + Xᵀ)` with `X = JMᵀ∇G`, so that
/// `MJS = −∂_Inv G`, and the Armijo decrease `‖∂_Inv G‖²_Inv`.
pub fn steepest_descent_direction(m: &SymplecticPoint, grad: &Mat) -> Result<(Mat, f64)> {
    let j = poisson(m.dim());
    let x = &j * m.matrix().transpose() * grad;
    let s = sym_part(&x);
    let d_inv = embedded_gradient_inv_ambient(m, grad);
    let decrease = inv_inner(m, &d_inv, &d_inv)?;
    Ok((s, decrease))
}

fn failure_status(last_pencil: bool) -> Status {
    if last_pencil {
        Status::SingularPencil
    } else {
        Status::Stalled
    }
}

pub fn steepest_descent<C: CostModel + ?Sized>(
    cost: &C,
    m0: &SymplecticPoint,
    cfg: &OptimizerConfig,
) -> Result<OptimizerTrace> {
    cfg.validate()?;
    let mut m = m0.clone();
    let mut snap = snapshot(cost, &m)?;
    let mut records = vec![record(0, &m, &snap, 0.0, 0)];
    let status = loop {
        if snap.grad_norm <= cfg.grad_tol {
            break Status::Converged;
        }
        if records.len() > cfg.max_iter {
            break Status::MaxIter;
        }
        let (s, decrease) = steepest_descent_direction(&m, &snap.grad)?;
        match armijo(cost, &m, snap.cost, &s, decrease, &cfg.armijo) {
            LineSearch::Accepted {
                point,
                step,
                backtracks,
            } => {
                m = point;
                snap = snapshot(cost, &m)?;
                records.push(record(records.len(), &m, &snap, step, backtracks));
            }
            LineSearch::Failed { last_pencil } => break failure_status(last_pencil),
        }
    };
    Ok(OptimizerTrace {
        records,
        status,
        final_point: m,
    })
}

/// Solution of `h·v = −g`, or `None` when `h` is singular.
fn newton_coefficients(h: &HessianMatrix, g: &Vector, regularization: f64) -> Option<Vector> {
    let mut hm = h.matrix().clone();
    for i in 0..hm.nrows() {
        hm[(i, i)] += regularization;
    }
    let lu = hm.clone().lu();
    let u_diag = lu.u().diagonal();
    let min_pivot = u_diag.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
    if !(min_pivot > 1e-14 * (1.0 + hm.norm())) {
        return None;
    }
    lu.solve(&(-g))
}

/// Symmetric parameter `Σ vₐSₐ` of the tangent vector with coordinates `v`.
/// This equals `−MᵀJ·(Σ vₐ M eₐ)` because `MᵀJM = J`.
pub fn newton_step_param(params: &[Mat], v: &Vector) -> Mat {
    let k = params[0].nrows();
    params
        .iter()
        .zip(v.iter())
        .fold(Mat::zeros(k, k), |acc, (s, &c)| acc + s * c)
}

pub fn newton<C: CostModel + ?Sized>(
    cost: &C,
    m0: &SymplecticPoint,
    cfg: &OptimizerConfig,
) -> Result<OptimizerTrace> {
    cfg.validate()?;
    let params = tangent_basis_params(m0.dim());
    let mut m = m0.clone();
    let mut snap = snapshot(cost, &m)?;
    let mut records = vec![record(0, &m, &snap, 0.0, 0)];
    let status = loop {
        if snap.grad_norm <= cfg.grad_tol {
            break Status::Converged;
        }
        if records.len() > cfg.max_iter {
            break Status::MaxIter;
        }
        let (h, g) = newton_system(&m, cost)?;
        let newton_dir = newton_coefficients(&h, &g, cfg.newton.regularization)
            .map(|v| {
                let slope = g.dot(&v);
                (v, slope)
            })
            .filter(|(_, slope)| *slope < 0.0);
        let (s, decrease) = match newton_dir {
            Some((v, slope)) => (newton_step_param(&params, &v), -slope),
            None if cfg.newton.fallback_to_gradient => steepest_descent_direction(&m, &snap.grad)?,
            None => break Status::SingularHessian,
        };
        match armijo(cost, &m, snap.cost, &s, decrease, &cfg.armijo) {
            LineSearch::Accepted {
                point,
                step,
                backtracks,
            } => {
                m = point;
                snap = snapshot(cost, &m)?;
                records.push(record(records.len(), &m, &snap, step, backtracks));
            }
            LineSearch::Failed { last_pencil } => break failure_status(last_pencil),
        }
    };
    Ok(OptimizerTrace {
        records,
        status,
        final_point: m,
    })
}

/// Largest `rₖ₊₁ / rₖ²` over consecutive gradient norms, skipping steps
/// that land at or below `floor`, where roundoff dominates.
pub fn quadratic_rate_constant(records: &[IterRecord], floor: f64) -> Option<f64> {
    records
        .windows(2)
        .filter(|w| w[1].grad_norm > floor)
        .map(|w| w[1].grad_norm / (w[0].grad_norm * w[0].grad_norm))
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: CriticalKind,
    pub inertia: Inertia,
    pub eigenvalues: Vec<f64>,
}

/// Zero threshold relative to the spectral radius.
pub const CLASSIFY_ZERO_TOL: f64 = 1e-8;

/// Classify a critical point by the inertia of the restricted Euclidean
/// Hessian. The spectral radius used for the zero threshold is the largest
/// of those of the Hessian and its ambient and multiplier parts, so exact
/// cancellation between the parts reads as zero.
pub fn classify_critical_point<C: CostModel + ?Sized>(
    m_c: &SymplecticPoint,
    cost: &C,
) -> Result<Classification> {
    let grad = cost.euc_grad(m_c.matrix());
    let Criticality {
        critical, residual, ..
    } = criticality_from_grad(m_c, &grad, 1e-8);
    if !critical {
        return Err(Error::NotCritical { residual });
    }
    let (ambient, correction) = euclidean_hessian_parts(m_c, cost)?;
    let h = HessianMatrix::new(m_c.dim(), &ambient + &correction, Metric::Euclidean)?;
    let eigenvalues = h.eigenvalues();
    let radius = |a: &Mat| {
        sorted_sym_eigenvalues(a)
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    };
    let scale = radius(h.matrix()).max(radius(&ambient)).max(radius(&correction));
    let cut = CLASSIFY_ZERO_TOL * scale;
    let mut inertia = Inertia {
        positive: 0,
        zero: 0,
        negative: 0,
    };
    for &e in &eigenvalues {
        if e > cut {
            inertia.positive += 1;
        } else if e < -cut {
            inertia.negative += 1;
        } else {
            inertia.zero += 1;
        }
    }
    let kind = match inertia {
        Inertia {
            positive: p,
            negative: q,
            ..
        } if p > 0 && q > 0 => CriticalKind::Saddle,
        Inertia { zero: z, .. } if z > 0 => CriticalKind::Degenerate,
        Inertia { negative: 0, .. } => CriticalKind::Minimum,
        _ => CriticalKind::Maximum,
    };
    Ok(Classification {
        kind,
        inertia,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{brockett_model, least_squares_model};
    use crate::manifold::{random_symplectic, random_tangent, Dim, SymTangent};
    use crate::retraction::retract_tangent;

    fn d(n: usize) -> Dim {
        Dim::new(n).unwrap()
    }

    fn diag_target() -> SymplecticPoint {
        SymplecticPoint::new(Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5])).unwrap()
    }

    #[test]
    fn config_validation() {
        let ok = OptimizerConfig::default();
        assert!(ok.validate().is_ok());
        let mut bad = ok;
        bad.armijo.c1 = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.armijo.shrink = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.armijo.lambda0 = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn starting_at_minimum_converges_immediately() {
        let w = diag_target();
        let cost = least_squares_model(w.clone());
        for run in [steepest_descent, newton] {
            let t = run(&cost, &w, &OptimizerConfig::default()).unwrap();
            assert_eq!(t.status, Status::Converged);
            assert_eq!(t.iterations(), 0);
            assert_eq!(t.records[0].k, 0);
        }
    }

    #[test]
    fn steepest_descent_diag_target_from_identity() {
        let w = diag_target();
        let cost = least_squares_model(w.clone());
        let t = steepest_descent(&cost, &SymplecticPoint::identity(d(1)), &OptimizerConfig::default())
            .unwrap();
        assert_eq!(t.status, Status::Converged);
        assert!(t.iterations() <= 2000);
        assert!((t.final_point.matrix() - w.matrix()).norm() <= 1e-6);
        assert!(t.max_symplecticity_residual() <= 1e-9);
        for pair in t.records.windows(2) {
            assert!(pair[1].cost < pair[0].cost);
        }
    }

    #[test]
    fn descent_step_matches_invariant_gradient() {
        let n = d(2);
        let w = random_symplectic(n, 1, 1.0).unwrap();
        let cost = least_squares_model(w);
        let m = random_symplectic(n, 2, 0.5).unwrap();
        let grad = cost.euc_grad(m.matrix());
        let (s, decrease) = steepest_descent_direction(&m, &grad).unwrap();
        let lambda = 0.3;
        let lhs = SymTangent::new(m.clone(), &s * lambda).unwrap().ambient();
        let d_inv = embedded_gradient_inv_ambient(&m, &grad);
        assert!((lhs + &d_inv * lambda).norm() <= 1e-10 * (1.0 + d_inv.norm()));
        // ‖∂_Inv G‖²_Inv = dG(∂_Inv G) = ⟨∇G, ∂_Inv G⟩
        assert!((decrease - grad.dot(&d_inv)).abs() <= 1e-10 * (1.0 + decrease));
    }

    #[test]
    fn newton_quadratic_convergence() {
        for k in 1..=2 {
            let w = random_symplectic(d(k), 3 + k as u64, 1.0).unwrap();
            let cost = least_squares_model(w.clone());
            let m0 = retract_tangent(&random_tangent(&w, 9, 0.1)).unwrap();
            let cfg = OptimizerConfig {
                grad_tol: 1e-12,
                max_iter: 10,
                ..OptimizerConfig::default()
            };
            let t = newton(&cost, &m0, &cfg).unwrap();
            assert_eq!(t.status, Status::Converged, "{:?}", t.records);
            let c = quadratic_rate_constant(&t.records, 1e-12).unwrap();
            assert!(c.is_finite() && c < 1e3, "C = {c}");
            assert!((t.final_point.matrix() - w.matrix()).norm() <= 1e-10);
        }
    }

    #[test]
    fn newton_direction_solves_newton_equation() {
        let n = d(2);
        let w = random_symplectic(n, 5, 1.0).unwrap();
        let cost = least_squares_model(w.clone());
        let m = retract_tangent(&random_tangent(&w, 6, 0.3)).unwrap();
        let (h, g) = newton_system(&m, &cost).unwrap();
        let v = newton_coefficients(&h, &g, 0.0).unwrap();
        assert!((h.matrix() * &v + &g).norm() <= 1e-10 * (1.0 + g.norm()));
    }

    #[test]
    fn newton_singular_hessian_without_fallback() {
        let n = d(1);
        let id = Mat::identity(2, 2);
        // Constant on the group, so h vanishes up to roundoff. A zero
        // tolerance keeps the roundoff-sized gradient from ending the run.
        let cost = brockett_model(id.clone(), id).unwrap();
        let cfg = OptimizerConfig {
            grad_tol: 0.0,
            newton: NewtonConfig {
                regularization: 0.0,
                fallback_to_gradient: false,
            },
            ..OptimizerConfig::default()
        };
        let m = random_symplectic(n, 1, 0.5).unwrap();
        let t = newton(&cost, &m, &cfg).unwrap();
        assert!(matches!(t.status, Status::SingularHessian | Status::Converged));
    }

    #[test]
    fn deterministic_runs() {
        let n = d(2);
        let w = random_symplectic(n, 7, 1.0).unwrap();
        let cost = least_squares_model(w.clone());
        let m0 = retract_tangent(&random_tangent(&w, 8, 0.5)).unwrap();
        let cfg = OptimizerConfig::default();
        assert_eq!(
            steepest_descent(&cost, &m0, &cfg).unwrap(),
            steepest_descent(&cost, &m0, &cfg).unwrap()
        );
        assert_eq!(newton(&cost, &m0, &cfg).unwrap(), newton(&cost, &m0, &cfg).unwrap());
    }

    #[test]
    fn classification_examples() {
        let w = random_symplectic(d(2), 11, 1.0).unwrap();
        let cost = least_squares_model(w.clone());
        let c = classify_critical_point(&w, &cost).unwrap();
        assert_eq!(c.kind, CriticalKind::Minimum);
        assert_eq!(c.inertia, Inertia { positive: 10, zero: 0, negative: 0 });

        let id = Mat::identity(4, 4);
        let flat = brockett_model(id.clone(), id.clone()).unwrap();
        let m = random_symplectic(d(2), 12, 1.0).unwrap();
        let c = classify_critical_point(&m, &flat).unwrap();
        assert_eq!(c.kind, CriticalKind::Degenerate);
        assert_eq!(c.inertia.zero, 10);

        // For W = I the point −I is critical, and not a minimum.
        let cost = least_squares_model(SymplecticPoint::identity(d(2)));
        let minus = SymplecticPoint::new(-id).unwrap();
        let c = classify_critical_point(&minus, &cost).unwrap();
        assert_eq!(c.kind, CriticalKind::Saddle, "{:?}", c.eigenvalues);
        assert!(c.inertia.positive > 0 && c.inertia.negative > 0);

        let off = random_symplectic(d(2), 13, 1.0).unwrap();
        assert!(matches!(
            classify_critical_point(&off, &cost),
            Err(Error::NotCritical { .. })
        ));
    }
}
