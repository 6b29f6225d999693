use rand::Rng;

use crate::netsim::PlannedOp;
use crate::protocols::Invocation;
use crate::types::{ProcessId, Role, SimTime, Value};

use super::config::{ScenarioConfig, Scheme};

/// Every client's operations, readers first. Writer `k`'s `i`-th write
/// stores a value unique to `(k, i)`.
pub fn build_workload<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<PlannedOp> {
    let clients = (0..cfg.n_readers)
        .map(|i| (ProcessId::reader(i as u32), cfg.read_interval))
        .chain((0..cfg.n_writers).map(|i| (ProcessId::writer(i as u32), cfg.write_interval)));
    let mut ops = Vec::with_capacity((cfg.n_readers + cfg.n_writers) * cfg.ops_per_client);
    for (process, interval) in clients {
        let ms = ((interval * 1000.0).round() as u64).max(1);
        for i in 1..=cfg.ops_per_client as u64 {
            let at = match cfg.scheme {
                Scheme::Fixed => SimTime::from_secs_f64(i as f64 * interval),
                Scheme::Stochastic => {
                    let offset = rng.gen_range(1..=ms);
                    SimTime::from_secs_f64((i - 1) as f64 * interval) + SimTime(offset * 1_000_000)
                }
            };
            let invocation = if process.role == Role::Reader {
                Invocation::Read
            } else {
                Invocation::Write(Value::for_write(process.index, i, cfg.value_size))
            };
            ops.push(PlannedOp {
                at,
                process,
                invocation,
            });
        }
    }
    ops
}
