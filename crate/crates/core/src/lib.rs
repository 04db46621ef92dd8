pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod completion;
pub mod rsvd;
pub mod sparse;
pub mod timing;

pub use error::{Error, ErrorClass, Result};
