//! Generalized capacities of domains with small holes, computed with
//! boundary integral equations: direct solves at fixed hole size, the
//! convergent power series in the hole size, and the eigenvalue shifts
//! they predict.

pub mod direct;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod kernels;
pub mod layer_ops;
pub mod linalg;
pub mod poly;
pub mod quadrature;
pub mod series;

pub use error::{CapaxError, Result};
pub use exec::Exec;
pub use geometry::{Point, Surface};
pub use poly::{MultiIndex, TaylorPoly};
