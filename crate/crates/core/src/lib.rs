//! Exact and numerical construction of two-level Cretan matrices.
//!
//! * [`qfield`]: exact arithmetic in `Q(sqrt(d))`.
//! * [`designs`]: symmetric designs from difference sets, complements, search.
//! * [`cretan`]: characteristic roots, weights, exact orthogonality.
//! * [`numeric`]: residuals, LU determinants and template search.
//! * [`documents`], [`portrait`], [`cli`]: file formats and the command line.

pub mod cli;
pub mod cretan;
pub mod designs;
pub mod documents;
pub mod numeric;
pub mod portrait;
pub mod qfield;

pub use cretan::{
    all_solutions, build_cretan, determinant, hadamard_family_cretan, solve_characteristic, verify_exact,
    CharacteristicSolution, Classification, CretanMatrix, Solutions,
};
pub use designs::{
    complement, develop, find_difference_set, menon_family, qr_family, twin_prime_family, verify_sbibd,
    DesignParams, DifferenceSet, IncidenceMatrix,
};
pub use numeric::{compare_exact_float, float_det, residual, search, FloatMatrix, SearchConfig, SearchTemplate};
pub use qfield::QuadExt;
