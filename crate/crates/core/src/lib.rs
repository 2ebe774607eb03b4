pub mod cloudsim;
pub mod error;
pub mod exec;
pub mod optimizer;
pub mod qsim;
pub mod tiering;
pub mod vqa;

pub use error::{Error, Result};
