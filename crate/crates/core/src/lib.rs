//! Discrete Besov and Korevaar-Schoen energies on atomic approximations of
//! self-similar sets and their one-point gluings, together with estimators for
//! critical exponents and a decomposition into irreducible components.

pub mod cli;
pub mod decompose;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod exponents;
pub mod family;
pub mod functions;
pub mod linalg;
pub mod numeric;
pub mod space;

pub use error::{Error, Result};
