//! Service and batch front ends over the explain-loop session engine.

pub mod api;
pub mod batch;
pub mod server;
pub mod setup;

pub use api::{ApiEvent, ApiEventKind};
pub use batch::{run_batch, BatchOutcome, Finish, RunResult, RunStatus, ScriptedRun};
pub use server::{router, AppState};
pub use setup::CliError;
