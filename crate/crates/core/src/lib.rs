//! Allow-lists, deny-lists and the machinery to check them: a deterministic
//! concurrency simulator, wait-free snapshot objects, the list constructions,
//! consensus reductions, two applications, and a linearizability checker.

pub mod allowlist;
pub mod apps;
pub mod campaign;
pub mod crypto;
pub mod denylist;
pub mod lincheck;
pub mod model;
pub mod ops;
pub mod reductions;
pub mod scenario;
pub mod sim;
pub mod snapshot;
pub mod value;

pub use value::{ProcessId, Value};
