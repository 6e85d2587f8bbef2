//! Exact arithmetic for the rational sl2 qKZ difference equations over
//! fields of characteristic `p`: polynomial solutions, their leading terms,
//! orthogonality, and the p-curvature of the qKZ connection.

pub mod error;
pub mod ffield;
pub mod hypergeo;
pub mod linalg;
pub mod mpoly;
pub mod pcurvature;
pub mod pochhammer;
pub mod qkz;
pub mod report;
pub mod suites;

pub use error::{Error, Result};
