pub mod analysis;
pub mod bench;
pub mod cli;
pub mod control;
pub mod error;
pub mod library;
pub mod moo;
pub mod ocp;
pub mod service;
pub mod vehicle;

pub use error::{Error, Result};
