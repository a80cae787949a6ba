//! Broadbeam precoder synthesis for massive-MIMO base-station arrays.

pub mod array;
pub mod compensated;
pub mod error;
pub mod network;
pub mod report;
pub mod roots;
pub mod samples;
pub mod search;
pub mod selector;
pub mod spectral;

pub use error::{Error, Result};
