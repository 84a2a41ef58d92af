pub mod cobordism;
pub mod error;
pub mod interval;
pub mod linalg;
pub mod random;
pub mod sectorial;
pub mod spectral_flow;
pub mod symplectic;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use num_complex::Complex64 as C64;
