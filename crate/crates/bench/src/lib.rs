//! Fixtures shared by the benchmarks.

use erato_core::checker::{extract_history, History};
use erato_core::harness::{run_scenario, ScenarioConfig, Scheme};
use erato_core::quorum::QuorumSystem;
use erato_core::views::TagView;
use erato_core::{Algorithm, Tag};

/// Desk-scale star deployment: 9 servers, `readers` readers, stochastic load.
pub fn desk_config(algorithm: Algorithm, readers: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(algorithm);
    cfg.n_readers = readers;
    cfg.n_writers = if algorithm.is_multi_writer() { 2 } else { 1 };
    cfg.scheme = Scheme::Stochastic;
    cfg.ops_per_client = 10;
    cfg
}

/// A view of the first quorum in which the first `holders` members hold a
/// newer tag than the rest.
pub fn split_view(qs: &QuorumSystem, holders: usize) -> TagView {
    let q = qs.quorum(0);
    TagView::new(
        0,
        q.iter().enumerate().map(|(k, s)| {
            let tag = if k < holders {
                Tag::new(2, 1)
            } else {
                Tag::new(1, 1)
            };
            (s, tag)
        }),
    )
}

pub fn simulated_history(algorithm: Algorithm, readers: usize) -> History {
    let run = run_scenario(&desk_config(algorithm, readers)).expect("valid desk config");
    extract_history(&run.trace)
}
