//! Command-line front end: expression parsing, `.sfun` files, plots and the command set.

pub mod colormap;
pub mod commands;
pub mod error;
pub mod expr;
pub mod plot;
pub mod sfun;

pub use commands::{run, Cli};
pub use error::CliError;
