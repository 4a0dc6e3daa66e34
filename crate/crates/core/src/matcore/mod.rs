//! Dense complex linear algebra: norms, Hermitian functional calculus,
//! Schur form, and seeded Haar sampling.

mod eigh;
mod json;
mod matrix;
mod norm;
pub mod random;
mod schur;

pub use eigh::{eigh, eigvalsh, HermitianEigen};
pub use matrix::{CMatrix, C64};
pub use norm::{
    is_nilpotent, nilpotency_residual, operator_norm, psd_sqrt, spectral_radius,
    HermitianCheckTolerance, DENSE_NORM_LIMIT,
};
pub use random::{haar_unitary, haar_unitary_from, random_unit_vector, stream_rng, SeededRng};
pub use schur::{hessenberg, schur, Schur};

pub(crate) use json::MatrixJson;
pub(crate) use matrix::{ONE, ZERO};
pub(crate) use norm::{block_norm, operator_norm_unchecked, psd_decompose};
