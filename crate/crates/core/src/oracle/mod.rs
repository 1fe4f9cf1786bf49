//! Verification paths that share no solution formulas with the solver:
//! the explicit Hamel family, a finite-difference residual of the full
//! equations, a dense finite-difference BVP per mode, and checks of the
//! appendix integral estimates.

pub mod dense_bvp;
pub mod hamel;
pub mod lemmas;
pub mod residual;
pub mod suite;

pub use dense_bvp::{dense_bvp_homogeneous, dense_bvp_mode, dense_bvp_mode_refined, relative_sup_difference};
pub use hamel::HamelParams;
pub use lemmas::{lemma_a1_check, lemma_a2_check, LemmaCheck};
pub use residual::{default_points, halton_points, ns_residual, ResidualReport, Sampler};
pub use suite::{run_verification, VerificationReport, VerificationRow};
