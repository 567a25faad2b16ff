//! Computational companion to the thermodynamic study of thin semigroups in
//! SL2(Z): exact ball enumeration, congruence counting, Ruelle transfer
//! operators and Hausdorff dimension, renewal identities, congruence
//! spectral gaps, convolution flattening on SL2(Z/q), and the Zaremba
//! denominator census.

pub mod ball;
pub mod cheb;
pub mod congruence;
pub mod congtransfer;
pub mod counting;
pub mod dynamics;
pub mod error;
pub mod expander;
pub mod linalg;
pub mod matrix;
pub mod renewal;
pub mod stats;
pub mod system;
pub mod thermo;
pub mod validate;
pub mod zaremba;

pub use error::{Error, Result};
