//! Flag form of the distance to the nilpotents: corner norms, the per-flag
//! objective, Parrott completion, and explicit certificates.

mod certificate;
mod flag;
mod parrott;

pub use certificate::{
    nearest_flag_nilpotent, nearest_flag_nilpotent_with, nearest_partial_flag_nilpotent,
    schur_flag, schur_upper_bound, CertificateFlag, CertifiedUpperBound, DEFAULT_CERT_TOL,
};
pub use flag::{
    corner_norms, flag_objective, partial_corner_norms, partial_flag_objective, Flag, PartialFlag,
    UNITARY_TOL,
};
pub use parrott::{parrott_min, ParrottCompletion};

pub(crate) use flag::{corner_norms_rotated, validate_ranks};
