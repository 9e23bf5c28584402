//! p-adic fields: scalars, unramified levels and Eisenstein extensions.

pub mod field;
pub mod qp;
pub mod teich;

pub use field::{Elem, Tower};
pub use qp::Qp;
pub mod matrix;
pub mod poly;

pub use matrix::Mat;
