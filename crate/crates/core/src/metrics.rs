//! Per-operation statistics, aggregate summaries and worst-case bounds.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::netsim::Trace;
use crate::protocols::Algorithm;
use crate::types::{MsgKind, OpKind, ProcessId};

#[derive(Clone, Debug, PartialEq)]
pub struct OpStats {
    pub algorithm: Algorithm,
    pub op_id: u64,
    pub process: ProcessId,
    pub kind: OpKind,
    pub invoked_at_s: f64,
    pub latency_s: f64,
    pub exchanges: u32,
    /// Every message sent on behalf of the operation.
    pub messages: u64,
}

/// Messages sent per operation. Read-path messages must belong to reads
/// and discovery messages to writes; write requests and acks may belong to
/// either, since ABD reads write back.
pub fn attribute_messages(trace: &Trace) -> Result<BTreeMap<u64, u64>> {
    let kinds: BTreeMap<u64, OpKind> = trace.ops.iter().map(|o| (o.op_id, o.kind)).collect();
    let mut counts: BTreeMap<u64, u64> = trace.ops.iter().map(|o| (o.op_id, 0)).collect();
    for s in &trace.sends {
        let Some(op) = s.op_id else {
            return Err(Error::Accounting(format!(
                "{} from {} at {} has no operation",
                s.kind, s.from, s.time
            )));
        };
        let Some(&kind) = kinds.get(&op) else {
            return Err(Error::Accounting(format!(
                "{} from {} names unknown op {op}",
                s.kind, s.from
            )));
        };
        let fits = match s.kind {
            MsgKind::ReadRequest | MsgKind::ReadRelay | MsgKind::ReadAck => kind == OpKind::Read,
            MsgKind::WriteDiscover | MsgKind::DiscoverAck => kind == OpKind::Write,
            MsgKind::WriteRequest | MsgKind::WriteAck => true,
        };
        if !fits {
            return Err(Error::Accounting(format!(
                "{} attributed to {kind} op {op}",
                s.kind
            )));
        }
        *counts.get_mut(&op).unwrap() += 1;
    }
    Ok(counts)
}

/// Statistics of the completed operations of a trace.
pub fn op_stats(trace: &Trace, algorithm: Algorithm) -> Result<Vec<OpStats>> {
    let counts = attribute_messages(trace)?;
    Ok(trace
        .ops
        .iter()
        .filter_map(|o| {
            let latency = o.latency()?;
            Some(OpStats {
                algorithm,
                op_id: o.op_id,
                process: o.process,
                kind: o.kind,
                invoked_at_s: o.invoked_at.as_secs_f64(),
                latency_s: latency.as_secs_f64(),
                exchanges: o.exchanges,
                messages: counts[&o.op_id],
            })
        })
        .collect())
}

/// Worst-case messages of one operation with `n` servers, when no server
/// relays to more than all `n`.
pub fn worst_case_messages(algorithm: Algorithm, kind: OpKind, n: usize) -> u64 {
    let n = n as u64;
    match (algorithm, kind) {
        (Algorithm::Erato | Algorithm::EratoMw, OpKind::Read) => n * n + 3 * n,
        (Algorithm::OhSam | Algorithm::OhMam, OpKind::Read) => n * n + 2 * n,
        (Algorithm::Abd | Algorithm::AbdMw, OpKind::Read) => 4 * n,
        (a, OpKind::Write) if a.is_multi_writer() => 4 * n,
        (_, OpKind::Write) => 2 * n,
    }
}

/// Exchange counts an operation may complete in.
pub fn allowed_exchanges(algorithm: Algorithm, kind: OpKind) -> &'static [u32] {
    match (algorithm, kind) {
        (Algorithm::Erato | Algorithm::EratoMw, OpKind::Read) => &[2, 3],
        (Algorithm::OhSam | Algorithm::OhMam, OpKind::Read) => &[3],
        (Algorithm::Abd | Algorithm::AbdMw, OpKind::Read) => &[4],
        (a, OpKind::Write) if a.is_multi_writer() => &[4],
        (_, OpKind::Write) => &[2],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub algorithm: Algorithm,
    pub kind: OpKind,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub exchanges: BTreeMap<u32, usize>,
    /// Fraction of reads done in 2 exchanges.
    pub fast_read_ratio: Option<f64>,
    pub mean_messages: f64,
}

/// Latency summaries, in seconds, per algorithm and operation kind.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
}

impl Summary {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, algorithm: Algorithm, kind: OpKind) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.algorithm == algorithm && g.kind == kind)
    }
}

pub fn summarize(stats: &[OpStats]) -> Summary {
    let mut groups: BTreeMap<(&'static str, &'static str), Vec<&OpStats>> = BTreeMap::new();
    for s in stats {
        groups
            .entry((s.algorithm.name(), s.kind.name()))
            .or_default()
            .push(s);
    }
    let groups = groups
        .into_values()
        .map(|ops| {
            let mut lat: Vec<f64> = ops.iter().map(|s| s.latency_s).collect();
            lat.sort_by(f64::total_cmp);
            let count = lat.len();
            let mut exchanges = BTreeMap::new();
            for s in &ops {
                *exchanges.entry(s.exchanges).or_default() += 1;
            }
            let kind = ops[0].kind;
            GroupSummary {
                algorithm: ops[0].algorithm,
                kind,
                count,
                mean: lat.iter().sum::<f64>() / count as f64,
                median: median(&lat),
                p95: nearest_rank(&lat, 0.95),
                max: lat[count - 1],
                fast_read_ratio: (kind == OpKind::Read)
                    .then(|| exchanges.get(&2).copied().unwrap_or(0) as f64 / count as f64),
                exchanges,
                mean_messages: ops.iter().map(|s| s.messages as f64).sum::<f64>() / count as f64,
            }
        })
        .collect();
    Summary { groups }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}
