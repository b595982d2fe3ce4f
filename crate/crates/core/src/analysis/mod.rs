//! Convergence analysis of the SART and pSART fixed-point maps: Jacobians,
//! spectral radii (closed form, polynomial roots, power iteration),
//! convergence maps and numerical checks of the SART convergence lemmas.

mod convmap;
mod eigen;
mod jacobian;
mod lemmas;
mod operator;
mod power;

pub use convmap::{convergence_map, ConvergenceMap, ConvergenceMapConfig, JumpStats};
pub use eigen::{
    characteristic_polynomial, eigenvalues, matrix_rank, polynomial_roots, spectral_radius_2x2,
    spectral_radius_by_roots,
};
pub use jacobian::{jacobian_f, jacobian_f_dense};
pub use lemmas::{
    sart_weight_matrix, verify_lemma_a1, verify_lemma_a2, verify_theorem_a3, LemmaA1, LemmaA2,
    TheoremA3, Verification, MAX_LEMMA_DIM, RANK_PIVOT_TOL,
};
pub use operator::{check_linearity, DenseOperator, IterationMatrix, LinearOperator};
pub use power::{power_iteration, PowerIterationResult};
