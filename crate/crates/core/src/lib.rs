//! Quasi-periodic Helmholtz transmission through layered gratings with
//! quasi-optimal domain decomposition.

pub mod biops;
pub mod ddm;
pub mod dtn;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod krylov;
pub mod linalg;
pub mod par;
pub mod post;
pub mod precond;
pub mod qpgreen;
pub mod rtr;
pub mod solve;
pub mod special;

pub type C64 = num_complex::Complex64;

pub use error::{Error, Result};
