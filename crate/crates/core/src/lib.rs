//! Hamiltonian fluid closures for the one-dimensional Vlasov-Poisson system.
//!
//! * [`poly`]: exact sparse polynomials over the rationals.
//! * [`moments`]: conversions between raw and centered moment hierarchies.
//! * [`closures`]: the closure families as explicit polynomials in normal
//!   variables, plus inversion of the moment map.
//! * [`bracket`]: hydrodynamic Poisson brackets and their identity checks.
//! * [`sim`]: a periodic 1D solver for the closed fluid system and a
//!   multi-stream kinetic reference.

pub mod bracket;
pub mod closures;
pub mod exec;
pub mod linalg;
pub mod moments;
pub mod poly;
pub mod sim;

pub use exec::Execution;
pub use poly::{MultiPoly, PolyError};
