pub mod authfp;
pub mod classifier;
pub mod dsp;
pub mod error;
pub mod frontend;
pub mod jammer;
pub mod mac;
pub mod net;
pub mod nn;
pub mod phy;
pub mod report;
pub mod rng;
pub mod sensing;
pub mod waveform;

pub use error::{Error, Result};
