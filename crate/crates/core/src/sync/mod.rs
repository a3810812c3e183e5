//! Reconciling a workspace with the files on disk, and persisting it.

mod apply;
mod changes;
mod persist;

pub use apply::*;
pub use changes::*;
pub use persist::*;
