//! Core types for the real symplectic group `Sp(2n, ℝ)`.
//!
//! A point is a `2n × 2n` matrix `M` with `MᵀJM = J`, where `J` is the Poisson
//! matrix `[[0, Iₙ], [−Iₙ, 0]]`. Tangent vectors at `M` all have the form
//! `MJS` with `S` symmetric, and are stored by that symmetric parameter.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, sym_part, Mat};
use crate::random::{self, seeded_rng};
use crate::retraction::cayley_retract;

/// Default tolerance for `‖MᵀJM − J‖_F` when certifying a point.
pub const CERT_TOL: f64 = 1e-8;

/// Tolerance on `|det M − 1|` for certified points.
pub const DET_TOL: f64 = 1e-6;

/// Half-dimension `n`; ambient matrices are `2n × 2n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dim(usize);

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            Err(Error::InvalidDim(n))
        } else {
            Ok(Dim(n))
        }
    }

    pub fn n(self) -> usize {
        self.0
    }

    /// Ambient size `2n`.
    pub fn ambient(self) -> usize {
        2 * self.0
    }

    /// `n(2n + 1)`, the dimension of the group.
    pub fn manifold_dim(self) -> usize {
        self.0 * (2 * self.0 + 1)
    }

    /// `2n² − n`, the number of independent constraints.
    pub fn constraint_count(self) -> usize {
        2 * self.0 * self.0 - self.0
    }

    /// Recover `n` from an even square matrix.
    pub fn of_matrix(m: &Mat) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols || rows % 2 != 0 || rows == 0 {
            return Err(Error::NotEvenSquare { rows, cols });
        }
        Ok(Dim(rows / 2))
    }

    pub(crate) fn expect_shape(self, m: &Mat) -> Result<()> {
        let (rows, cols) = m.shape();
        let expected = self.ambient();
        if rows != expected || cols != expected {
            return Err(Error::DimensionMismatch {
                expected,
                rows,
                cols,
            });
        }
        Ok(())
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Dim::new(n)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.0
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The Poisson matrix `J = [[0, Iₙ], [−Iₙ, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonMatrix {
    n: Dim,
    entries: Mat,
}

impl PoissonMatrix {
    pub fn dim(&self) -> Dim {
        self.n
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    pub fn into_matrix(self) -> Mat {
        self.entries
    }
}

pub fn make_poisson(n: Dim) -> PoissonMatrix {
    PoissonMatrix {
        n,
        entries: poisson(n),
    }
}

/// `J` as a plain matrix.
pub fn poisson(n: Dim) -> Mat {
    let k = n.n();
    Mat::from_fn(2 * k, 2 * k, |i, j| {
        if j == i + k {
            1.0
        } else if i == j + k {
            -1.0
        } else {
            0.0
        }
    })
}

/// Returns `(‖mᵀJm − J‖_F ≤ tol, ‖mᵀJm − J‖_F)`.
pub fn certify_symplectic(m: &Mat, tol: f64) -> Result<(bool, f64)> {
    let residual = symplectic_residual(m)?;
    Ok((residual <= tol, residual))
}

/// `‖mᵀJm − J‖_F`
pub fn symplectic_residual(m: &Mat) -> Result<f64> {
    let n = Dim::of_matrix(m)?;
    let j = poisson(n);
    Ok((m.transpose() * &j * m - j).norm())
}

/// A matrix certified to lie on `Sp(2n, ℝ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPoint {
    n: Dim,
    m: Mat,
}

impl SymplecticPoint {
    /// Certify at the default tolerance [`CERT_TOL`].
    pub fn new(m: Mat) -> Result<Self> {
        Self::with_tolerance(m, CERT_TOL)
    }

    pub fn with_tolerance(m: Mat, tol: f64) -> Result<Self> {
        let n = Dim::of_matrix(&m)?;
        let (ok, residual) = certify_symplectic(&m, tol)?;
        if !ok {
            return Err(Error::NotSymplectic { residual, tol });
        }
        let det = m.clone().lu().determinant();
        if (det - 1.0).abs() > DET_TOL * (1.0 + m.norm_squared()) {
            return Err(Error::NotSymplectic {
                residual: (det - 1.0).abs(),
                tol: DET_TOL,
            });
        }
        Ok(SymplecticPoint { n, m })
    }

    /// Wrap a matrix produced by a structure-preserving map. The caller vouches
    /// for symplecticity.
    pub(crate) fn from_trusted(m: Mat) -> Self {
        let n = Dim::of_matrix(&m).expect("trusted symplectic matrix has even square shape");
        SymplecticPoint { n, m }
    }

    pub fn identity(n: Dim) -> Self {
        SymplecticPoint {
            n,
            m: Mat::identity(n.ambient(), n.ambient()),
        }
    }

    pub fn dim(&self) -> Dim {
        self.n
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.m).expect("shape checked at construction")
    }

    fn block(&self, row: usize, col: usize) -> Mat {
        let k = self.n.n();
        self.m.view((row * k, col * k), (k, k)).into_owned()
    }

    pub fn a(&self) -> Mat {
        self.block(0, 0)
    }

    pub fn b(&self) -> Mat {
        self.block(0, 1)
    }

    pub fn c(&self) -> Mat {
        self.block(1, 0)
    }

    pub fn d(&self) -> Mat {
        self.block(1, 1)
    }
}

/// A tangent vector `MJS` at `base`, stored by its symmetric parameter `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTangent {
    base: SymplecticPoint,
    s: Mat,
}

impl SymTangent {
    /// Symmetrizes `s` on the way in.
    pub fn new(base: SymplecticPoint, s: Mat) -> Result<Self> {
        base.dim().expect_shape(&s)?;
        Ok(SymTangent {
            base,
            s: sym_part(&s),
        })
    }

    pub fn zero(base: SymplecticPoint) -> Self {
        let k = base.dim().ambient();
        SymTangent {
            base,
            s: Mat::zeros(k, k),
        }
    }

    pub fn base(&self) -> &SymplecticPoint {
        &self.base
    }

    pub fn s(&self) -> &Mat {
        &self.s
    }

    pub fn ambient(&self) -> Mat {
        tangent_ambient(self)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymTangent {
            base: self.base.clone(),
            s: &self.s * factor,
        }
    }
}

/// `base · J · s`
pub fn tangent_ambient(v: &SymTangent) -> Mat {
    let j = poisson(v.base.dim());
    v.base.matrix() * j * &v.s
}

/// Pull an ambient matrix back to a symmetric parameter.
///
/// Computes `raw = −MᵀJV` and returns its symmetric part together with
/// `‖raw − rawᵀ‖_F`, which vanishes exactly when `V` is tangent at `M`.
pub fn ambient_to_tangent(m: &SymplecticPoint, v: &Mat) -> Result<(SymTangent, f64)> {
    m.dim().expect_shape(v)?;
    let j = poisson(m.dim());
    let raw = -(m.matrix().transpose() * j * v);
    let residual = asymmetry(&raw);
    Ok((
        SymTangent {
            base: m.clone(),
            s: sym_part(&raw),
        },
        residual,
    ))
}

/// Which family a constraint function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `⟨aᵢ, cⱼ⟩ − ⟨aⱼ, cᵢ⟩`, `i < j`
    Ac,
    /// `⟨bᵢ, dⱼ⟩ − ⟨bⱼ, dᵢ⟩`, `i < j`
    Bd,
    /// `⟨aᵢ, dⱼ⟩ − ⟨cᵢ, bⱼ⟩ − δᵢⱼ`, all `i, j`
    Mix,
}

/// A single constraint function; indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstraintIndex {
    pub kind: ConstraintKind,
    pub i: usize,
    pub j: usize,
}

impl ConstraintIndex {
    pub fn new(kind: ConstraintKind, i: usize, j: usize, n: Dim) -> Result<Self> {
        let k = n.n();
        let ok = match kind {
            ConstraintKind::Ac | ConstraintKind::Bd => i < j && j < k,
            ConstraintKind::Mix => i < k && j < k,
        };
        if ok {
            Ok(ConstraintIndex { kind, i, j })
        } else {
            Err(Error::ConstraintIndex { kind, i, j, n: k })
        }
    }
}

/// Every constraint in canonical order: AC pairs, BD pairs (both `i < j`,
/// lexicographic), then mixed pairs row-major.
pub fn constraint_indices(n: Dim) -> Vec<ConstraintIndex> {
    let k = n.n();
    let mut out = Vec::with_capacity(n.constraint_count());
    for kind in [ConstraintKind::Ac, ConstraintKind::Bd] {
        for i in 0..k {
            for j in (i + 1)..k {
                out.push(ConstraintIndex { kind, i, j });
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            out.push(ConstraintIndex {
                kind: ConstraintKind::Mix,
                i,
                j,
            });
        }
    }
    out
}

/// Values of all constraint functions, in [`constraint_indices`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintVector {
    pub values: Vec<f64>,
}

impl ConstraintVector {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }
}

/// Evaluate one constraint function at an arbitrary (not necessarily symplectic) matrix.
pub fn constraint_value(idx: ConstraintIndex, m: &Mat) -> Result<f64> {
    let n = Dim::of_matrix(m)?;
    let k = n.n();
    let col = |c: usize, top: bool| m.view((if top { 0 } else { k }, c), (k, 1)).into_owned();
    let (i, j) = (idx.i, idx.j);
    Ok(match idx.kind {
        ConstraintKind::Ac => col(i, true).dot(&col(j, false)) - col(j, true).dot(&col(i, false)),
        ConstraintKind::Bd => {
            col(k + i, true).dot(&col(k + j, false)) - col(k + j, true).dot(&col(k + i, false))
        }
        ConstraintKind::Mix => {
            let delta = if i == j { 1.0 } else { 0.0 };
            col(i, true).dot(&col(k + j, false)) - col(i, false).dot(&col(k + j, true)) - delta
        }
    })
}

pub fn constraint_values(m: &Mat) -> Result<ConstraintVector> {
    let n = Dim::of_matrix(m)?;
    let values = constraint_indices(n)
        .into_iter()
        .map(|idx| constraint_value(idx, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConstraintVector { values })
}

/// The elementary skew pattern `Ω` of a constraint; its Euclidean Hessian is `Ω ⊗ J`.
pub fn omega(idx: ConstraintIndex, n: Dim) -> Mat {
    let k = n.n();
    let mut w = Mat::zeros(2 * k, 2 * k);
    let (i, j) = (idx.i, idx.j);
    match idx.kind {
        ConstraintKind::Ac => {
            w[(i, j)] = 1.0;
            w[(j, i)] = -1.0;
        }
        ConstraintKind::Bd => {
            w[(k + i, k + j)] = 1.0;
            w[(k + j, k + i)] = -1.0;
        }
        ConstraintKind::Mix => {
            w[(i, k + j)] = 1.0;
            w[(k + j, i)] = -1.0;
        }
    }
    w
}

/// Symmetric parameters `½(fᵢfⱼᵀ + fⱼfᵢᵀ)`, `i ≤ j`, row-major.
pub fn tangent_basis_params(n: Dim) -> Vec<Mat> {
    let dim = n.ambient();
    let mut out = Vec::with_capacity(n.manifold_dim());
    for i in 0..dim {
        for j in i..dim {
            let mut s = Mat::zeros(dim, dim);
            s[(i, j)] += 0.5;
            s[(j, i)] += 0.5;
            out.push(s);
        }
    }
    out
}

/// The constant matrices `e₍ᵢ,ⱼ₎ = ½J(fᵢfⱼᵀ + fⱼfᵢᵀ)`; `{M e₍ᵢ,ⱼ₎}` is a basis of `T_M Sp`.
pub fn tangent_basis(n: Dim) -> Vec<Mat> {
    let j = poisson(n);
    tangent_basis_params(n).into_iter().map(|s| &j * s).collect()
}

/// Random point `R_I(S)` for a random symmetric `S` with entries in `[−scale, scale]`.
pub fn random_symplectic(n: Dim, seed: u64, scale: f64) -> Result<SymplecticPoint> {
    if !(scale >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale must be non-negative, got {scale}"
        )));
    }
    const ATTEMPTS: usize = 16;
    let mut rng = seeded_rng(seed);
    let id = SymplecticPoint::identity(n);
    for _ in 0..ATTEMPTS {
        let s = random::symmetric(&mut rng, n.ambient(), scale);
        match cayley_retract(&id, &s) {
            Ok(p) if p.residual() <= CERT_TOL => return Ok(p),
            _ => continue,
        }
    }
    Err(Error::GenerationFailed {
        attempts: ATTEMPTS,
        seed,
    })
}

/// Random tangent at `base` whose ambient representative has Frobenius norm `radius`.
pub fn random_tangent(base: &SymplecticPoint, seed: u64, radius: f64) -> SymTangent {
    let mut rng = seeded_rng(seed);
    let s = random::symmetric(&mut rng, base.dim().ambient(), 1.0);
    let v = SymTangent {
        base: base.clone(),
        s,
    };
    let norm = v.ambient().norm();
    if norm == 0.0 {
        SymTangent::zero(base.clone())
    } else {
        v.scaled(radius / norm)
    }
}
