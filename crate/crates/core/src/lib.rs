pub mod bounds;
pub mod error;
pub mod filtration;
pub mod fixtures;
pub mod grouprep;
pub mod io;
pub mod isocrystal;
pub mod padic;
pub mod sampling;
pub mod symplectic;

pub use error::{Error, Result};
