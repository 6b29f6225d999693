pub mod checker;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod netsim;
pub mod protocols;
pub mod quorum;
pub mod types;
pub mod views;

pub use error::{Error, Result};
pub use protocols::{Algorithm, Suite};
pub use quorum::{QuorumSystem, ServerSet};
pub use types::{Message, MsgKind, OpKind, OperationRecord, ProcessId, Role, SimTime, Tag, Value};
