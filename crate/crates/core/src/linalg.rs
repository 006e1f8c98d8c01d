//! Small dense helpers shared by the kernels.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Frobenius inner product `tr(XᵀY)`.
pub fn frob_inner(x: &Mat, y: &Mat) -> f64 {
    x.dot(y)
}

pub fn frob_norm(x: &Mat) -> f64 {
    x.norm()
}

/// Matrix commutator `XY − YX`.
pub fn bracket(x: &Mat, y: &Mat) -> Mat {
    x * y - y * x
}

pub fn sym_part(x: &Mat) -> Mat {
    (x + x.transpose()) * 0.5
}

pub fn skew_part(x: &Mat) -> Mat {
    (x - x.transpose()) * 0.5
}

/// `‖X − Xᵀ‖_F`
pub fn asymmetry(x: &Mat) -> f64 {
    (x - x.transpose()).norm()
}

/// `‖X + Xᵀ‖_F`
pub fn skewness_defect(x: &Mat) -> f64 {
    (x + x.transpose()).norm()
}

/// 2-norm condition number from the singular values. Infinite for singular input.
pub fn condition_number(a: &Mat) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    a.clone().try_inverse().ok_or(Error::Singular)
}

/// Symmetric eigenvalues in ascending order.
pub fn sorted_sym_eigenvalues(a: &Mat) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Column-major vectorization, matching the `vec` operator.
pub fn vec_of(x: &Mat) -> Vector {
    Vector::from_column_slice(x.as_slice())
}

pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Mat {
    Mat::from_column_slice(rows, cols, v.as_slice())
}
