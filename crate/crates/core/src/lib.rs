pub mod cli;
pub mod error;
pub mod interpolation;
pub mod io;
pub mod linalg;
pub mod lqr;
pub mod reduction;
pub mod saddle;
pub mod system;
pub mod testbed;
pub mod transfer;

pub use error::{Error, Result};
