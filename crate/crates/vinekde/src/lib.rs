//! File formats, the simulation benchmark, the classification pipeline and the
//! `vinekde` command-line tool, built on [`vinekde_core`].

pub mod classification;
pub mod cli;
pub mod csvio;
pub mod error;
pub mod harness;
pub mod model_file;

pub use error::{AppError, AppResult};
