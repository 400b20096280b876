pub mod active_bf;
pub mod ao_driver;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod passive_bf;
pub mod rates;
pub mod rng;

pub use error::{Error, Result};
