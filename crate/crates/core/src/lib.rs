//! Jet-bundle equivalence engine for sesqui-holomorphic reproducing kernels.
//!
//! Kernels are written in a small expression language (`dsl`), differentiated
//! symbolically in the Wirtinger variables (`calc`), and fed to the jet and
//! curvature routines (`jet`), the order-k equivalence test (`equivalence`)
//! and the bidisc quotient-module model (`bidisc`).

pub mod bidisc;
pub mod calc;
pub mod dsl;
pub mod equivalence;
mod error;
pub mod grid;
pub mod jet;
pub mod linalg;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
