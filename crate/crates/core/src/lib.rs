//! Feasibility of tropical Metzler semidefinite programs through stochastic
//! mean payoff games.
//!
//! A pencil of symmetric tropical Metzler matrices defines a tropical
//! spectrahedron. Its nontriviality is decided by the game whose Shapley
//! operator `F` satisfies `𝒮_λ = {x : λ + x ≤ F(x)}`: either by value
//! iteration ([`check_feasibility`]) or by exhaustive policy enumeration over
//! exactly evaluated Markov chains ([`game_value_bruteforce`]).

pub mod bench;
pub mod certify;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod game;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod pencil;
pub mod pipeline;
pub mod rational;
pub mod scalar;
pub mod shapley;
pub mod tropical;

pub use certify::{
    archimedean_threshold, lift_description, verify_subharmonic, verify_superharmonic, Certificate,
    CertificateKind, MonomialLift, Threshold,
};
pub use error::{Error, Result};
pub use exact::{affine_feasibility, game_value_bruteforce, solve_tmsdfp, GameValue, Margin, Status};
pub use game::{game_from_pencil, pencil_from_game, MaxAction, MinAction, Policy, StochGame};
pub use markov::{analyze, chain_from_policies, ChainAnalysis, MarkovChain};
pub use pencil::{
    homogenize, membership_general, membership_metzler, metzlerize, normalize, Pencil, SymMatrix,
    TropPoint,
};
pub use rational::{format_rational, parse_rational, Rational};
pub use shapley::{apply_f, check_feasibility, FeasibilityOptions, IterationReport, Verdict};
pub use tropical::{strop_mul, ExtReal, Sign, SignedTrop, TropPolynomial};
