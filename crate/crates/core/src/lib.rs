pub mod config;
pub mod corpus;
pub mod entailment;
pub mod error;
pub mod pipeline;
pub mod ranker;
pub mod simfeatures;
pub mod store;
pub mod textpipe;
pub mod vectorspace;
pub mod workflow;

pub use error::{Error, Result};
