//! Arithmetic of `Γ₀(4N)`: integer matrices, characters, the theta
//! multiplier and the Atkin–Lehner normalizer.

pub mod atkin_lehner;
pub mod character;
pub mod cocycle;
pub mod index;
pub mod matrix;
pub mod numtheory;

pub use atkin_lehner::{
    al_coset_rep, atkin_lehner_matrix, matrix_a, normalizer_decompose, w2_matrix, Decomposition,
};
pub use character::{DirichletCharacter, RootOfUnity};
pub use cocycle::{
    automorphy_factor, cocycle_j, eps_d, slash, slash_gamma, theta_multiplier, theta_root,
    Metaplectic, Weight,
};
pub use index::{gamma0_coset_reps, gamma0_index, gamma0_volume};
pub use matrix::GroupElement;
pub use numtheory::{jacobi, kronecker};
