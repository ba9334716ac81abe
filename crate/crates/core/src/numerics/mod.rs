//! Dense linear algebra kernels and seeded randomness.

mod linalg;
mod rng;

pub use linalg::{
    hermitian_exp, is_hermitian, max_abs, regularized_solve, sym_eig, EigenDecomposition,
    InverseTracker,
};
pub use rng::{complex_gaussian, SeedStream, StreamRng};

use nalgebra::{DMatrix, DVector};

pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

/// Embeds a real matrix in the complex container.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}
