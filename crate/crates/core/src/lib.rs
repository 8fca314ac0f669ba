//! Character detection, co-reference, grounding and ranking for visual
//! stories: sequences of images paired with one sentence each.

pub mod cli;
pub mod embeddings;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod grounding;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod ranking;
pub mod textchars;
pub mod visualchars;

pub use error::{Error, Result};
