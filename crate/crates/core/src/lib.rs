//! Queueing approximations for a closed loading/haulage cycle.

pub mod error;
pub mod flow;
pub mod moments;
pub mod netmodel;
pub mod pfa;
pub mod sim;
pub mod stst;
pub mod study;

pub use error::{Error, Result};
