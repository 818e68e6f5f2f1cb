//! Ultra-low-rate image compression: an image is coded as a short hard
//! prompt recovered by projected gradient search, optionally paired with a
//! learned-codec compressed edge-map sketch, and reconstructed by a
//! text-to-image backend.

pub mod cli;
pub mod core;
pub mod decoder;
pub mod error;
pub mod evaluation;
pub mod inversion;
pub mod pipeline;
pub mod sketch;
pub mod synthetic;
pub mod token_codec;

mod optim;

pub use crate::error::{Error, Result};
