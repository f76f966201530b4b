//! Separable multidimensional orthogonal matching pursuit (SMOMP), a dense
//! reference solver, and an mmWave joint channel-estimation and localization
//! simulator built on top of them.

// `!(x > y)` is used on purpose so that NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod dictionary;
pub mod error;
pub mod experiment;
pub mod index;
pub mod linalg;
pub mod mmwave;
pub mod momp;
pub mod random;
pub mod selftest;
pub mod smomp;
pub mod solution;
pub mod tensor;

pub use dictionary::{
    build_axis_dictionary, build_delay_dictionary, evaluate_pulse, Dictionary, PulseKind,
    PulseShape,
};
pub use error::{Error, Result};
pub use index::{group_dictionary_index, IndexSpace, MultiIndex};
pub use momp::{densify, momp_correlation, momp_solve, DenseProblem};
pub use smomp::{combined_atom, smomp_correlation, smomp_solve, FactorBlock, SeparableProblem};
pub use solution::{SolverConfig, SparseSolution};
pub use tensor::ComplexTensor;
