pub mod dsp;
pub mod error;
pub mod io;
pub mod resample;
pub mod types;

pub use error::{Error, Result};
pub use types::*;
pub mod spectral;
pub mod sim;
pub mod waveforms;
pub mod detect;
pub mod metrics;
pub mod recover;
pub mod synth;
pub mod suite;
pub mod cli;
