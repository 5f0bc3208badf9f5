//! File formats, the training pipeline, acceptance checks and the `thtn`
//! command line for [`thtn_core`].

pub mod accept;
pub mod config;
pub mod error;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod synthetic;

pub use config::RunConfig;
pub use error::{Error, Result};
