//! Seeded fixtures shared by the kernel benchmarks.

use sympopt_core::costs::{brockett_model, least_squares_model, random_j_symmetric};
use sympopt_core::manifold::{random_symplectic, random_tangent};
use sympopt_core::{BrockettCost, Dim, LeastSquaresCost, Mat, SymplecticPoint};

pub struct Fixture {
    pub point: SymplecticPoint,
    pub least_squares: LeastSquaresCost,
    pub brockett: BrockettCost,
    /// A unit-norm tangent parameter at `point`.
    pub step: Mat,
}

pub fn fixture(n: usize, seed: u64) -> Fixture {
    let dim = Dim::new(n).expect("n ≥ 1");
    let target = random_symplectic(dim, seed, 1.0).expect("fixture target");
    let point = random_symplectic(dim, seed + 1, 0.5).expect("fixture point");
    let brockett = brockett_model(
        random_j_symmetric(dim, seed + 2, 1.0).expect("fixture Q"),
        random_j_symmetric(dim, seed + 3, 1.0).expect("fixture N"),
    )
    .expect("fixture Brockett cost");
    let step = random_tangent(&point, seed + 4, 1.0).s().clone();
    Fixture {
        point,
        least_squares: least_squares_model(target),
        brockett,
        step,
    }
}
