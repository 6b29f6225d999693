//! Deterministic discrete-event network simulator.
//!
//! Events run in `(time, insertion sequence)` order. Links are reliable;
//! reordering comes from per-message jitter drawn from the run's seeded
//! generator. Queueing is not modelled. Local computation takes no
//! simulated time.

mod sim;
mod topology;
mod trace;

pub use sim::{run, Crash, PlannedOp, SimConfig, Simulation, DEFAULT_CAP_S, DEFAULT_JITTER_MAX_S};
pub use topology::{
    build_topology, Endpoint, Link, LinkSpec, Network, PathCost, TopologyKind, TopologySpec,
    CLIENT_LINK, ROUTER_LINK, SERIES_SERVER_LINK, STAR_SERVER_LINK,
};
pub use trace::{Action, SendRecord, Trace, TraceEvent};

#[cfg(test)]
mod tests;
