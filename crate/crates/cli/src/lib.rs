//! Line-oriented operator console for the simulated transmission.

mod command;
mod session;

pub use command::{parse_line, CliCommand, ParseOutcome, Verb, HELP};
pub use session::{run_script, sweep_air, Reply, Session, SessionConfig};
