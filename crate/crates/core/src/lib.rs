//! Upper bounds on the operator-norm distance from a complex square matrix
//! to the set of nilpotent matrices, with explicit nilpotent certificates.
//!
//! The distance `ν(A)` equals the infimum, over complete flags, of the
//! largest lower-left corner norm of `A` written in the flag basis. Any flag
//! therefore yields an upper bound, and [`nestdist::nearest_flag_nilpotent`]
//! turns it into a nilpotent `N` attaining it. [`optimize`] searches the flag
//! manifold; [`chains`] holds the scalar and positive-semidefinite chain
//! reformulations and the closed forms for rank-one projections; [`verify`]
//! runs the lower-bound experiments.

pub mod chains;
pub mod error;
pub mod matcore;
pub mod nestdist;
pub mod optimize;
pub mod parallel;
pub mod verify;

pub use error::{Error, Result};
pub use matcore::{CMatrix, C64};
