//! Cayley-type retraction `R_M(MJS) = −M(S + 2J)⁻¹(S − 2J)`.
//!
//! Because `S − 2J = (S + 2J)ᵀ`, one LU factorization decides invertibility of
//! both factors. The output is symplectic for every symmetric `S` where the
//! pencil is invertible; no re-projection is ever applied.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::manifold::{poisson, SymTangent, SymplecticPoint, CERT_TOL};

/// Pivot ratio below which `S + 2J` is treated as singular.
pub const PENCIL_GUARD: f64 = 1e-12;

/// `min |uᵢᵢ| / ‖A‖_F` from a partially pivoted LU of `A`. Cheap estimate of
/// the relative smallest singular value.
fn lu_pivot_ratio(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, norm: f64) -> f64 {
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
    if norm == 0.0 {
        0.0
    } else {
        min_pivot / norm
    }
}

pub fn cayley_retract(m: &SymplecticPoint, s: &Mat) -> Result<SymplecticPoint> {
    let n = m.dim();
    n.expect_shape(s)?;
    let j = poisson(n);
    let plus = s + &j * 2.0;
    let minus = s - &j * 2.0;
    let norm = plus.norm();
    let lu = plus.lu();
    let ratio = lu_pivot_ratio(&lu, norm);
    if ratio < PENCIL_GUARD {
        return Err(Error::SingularPencil { ratio });
    }
    let x = lu.solve(&minus).ok_or(Error::SingularPencil { ratio })?;
    let r = -(m.matrix() * x);
    debug_assert!({
        let res = crate::manifold::symplectic_residual(&r).unwrap();
        res <= CERT_TOL * (1.0 + r.norm_squared()) * (1.0 + s.norm())
    });
    Ok(SymplecticPoint::from_trusted(r))
}

pub fn retract_tangent(v: &SymTangent) -> Result<SymplecticPoint> {
    cayley_retract(v.base(), v.s())
}

/// 2-norm condition numbers of `S + 2J` and `S − 2J` via SVD. The two always
/// agree up to roundoff; used by validation code rather than the hot path.
pub fn pencil_conditions(s: &Mat) -> Result<(f64, f64)> {
    let n = crate::manifold::Dim::of_matrix(s)?;
    let j = poisson(n);
    Ok((
        crate::linalg::condition_number(&(s + &j * 2.0)),
        crate::linalg::condition_number(&(s - &j * 2.0)),
    ))
}
