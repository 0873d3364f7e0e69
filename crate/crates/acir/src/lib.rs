//! Feature location over Git history.
//!
//! Source artifacts (files or methods) at a pinned revision are described
//! by the messages of the commits that touched their lines, indexed with
//! TF-IDF, and searched by cosine similarity. The [`reenact`] module replays
//! resolved issues to measure retrieval quality.

pub mod cli;
pub mod corpus;
pub mod diff;
pub mod error;
pub mod git;
pub mod partition;
pub mod reenact;
pub mod store;

pub use error::{Error, Result};
pub use git::GitRepository;
