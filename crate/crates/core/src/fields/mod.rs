//! Grids, spinor fields, potentials, discretized kernel operators and the
//! weighted, `B` and `B*` norms used to measure them.

pub mod assemble;
pub mod dump;
pub mod grid;
pub mod norms;
pub mod operator;
pub mod potential;
pub mod resolvent;
pub mod stencil;

pub use assemble::{assemble_operator, assemble_scalar, check_memcap, KernelOperator};
pub use grid::{Grid, SpinorField};
pub use norms::{
    b_norm, b_to_b_norm, b_to_bstar_norm, bstar_norm, weighted_operator_norm, Bracket,
    DyadicShells,
};
pub use operator::{
    BlockDiagonal, Combination, DenseOperator, Identity, LinearOperator, Product, ScalarMultiplier,
};
pub use potential::{sample_potential, MatrixProfile, PotentialKind, PotentialSpec};
