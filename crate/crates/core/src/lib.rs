pub mod cli;
pub mod corpus;
pub mod error;
pub mod learn;
pub mod pipeline;
pub mod sentiment;
pub mod summarization;
pub mod synth;
pub mod temporal_features;
pub mod user_features;

pub use error::{Error, Result};
