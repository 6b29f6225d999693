use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::protocols::{Event, Invocation, Node, StepOutput, Suite};
use crate::quorum::{QuorumSystem, ServerSet};
use crate::types::{Message, OpKind, OperationRecord, ProcessId, Role, SimTime};

use super::topology::Network;
use super::trace::{Action, SendRecord, Trace, TraceEvent};

pub const DEFAULT_JITTER_MAX_S: f64 = 0.001;
pub const DEFAULT_CAP_S: f64 = 300.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub jitter_max: f64,
    pub cap: SimTime,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            jitter_max: DEFAULT_JITTER_MAX_S,
            cap: SimTime::from_secs_f64(DEFAULT_CAP_S),
            seed: 0,
        }
    }
}

/// A client operation to invoke at `at`. If the client is still busy then,
/// the invocation waits until its previous operation responds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannedOp {
    pub at: SimTime,
    pub process: ProcessId,
    pub invocation: Invocation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crash {
    pub node: ProcessId,
    pub at: SimTime,
}

#[derive(Debug)]
enum Pending {
    Invoke(u64),
    Deliver(Message),
    Crash,
}

#[derive(Debug)]
struct Scheduled {
    time: SimTime,
    seq: u64,
    target: ProcessId,
    what: Pending,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap and we pop the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

/// One simulated execution. Build, add workload and crashes, then [`run`](Simulation::run).
pub struct Simulation<'a> {
    network: &'a Network,
    qs: &'a QuorumSystem,
    config: SimConfig,
    n_readers: usize,
    nodes: Vec<Node>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    rng: ChaCha8Rng,
    crash_at: BTreeMap<ProcessId, SimTime>,
    planned: Vec<PlannedOp>,
    /// Per client slot: operation in progress and invocations waiting.
    current: Vec<Option<u64>>,
    deferred: Vec<VecDeque<u64>>,
    /// `(client, op counter)` to operation id, for message attribution.
    attribution: BTreeMap<(ProcessId, u64), u64>,
    /// Index into `trace.ops` by op id.
    record_index: BTreeMap<u64, usize>,
    trace: Trace,
}

impl<'a> Simulation<'a> {
    pub fn new(
        network: &'a Network,
        qs: &'a QuorumSystem,
        suite: Suite,
        n_readers: usize,
        n_writers: usize,
        config: SimConfig,
    ) -> Self {
        let n_servers = qs.n_servers();
        let ids = (0..n_servers)
            .map(|i| ProcessId::server(i as u32))
            .chain((0..n_readers).map(|i| ProcessId::reader(i as u32)))
            .chain((0..n_writers).map(|i| ProcessId::writer(i as u32)));
        let nodes: Vec<Node> = ids.map(|id| Node::new(id, suite, qs)).collect();
        let n_nodes = nodes.len();
        let mut trace = Trace::default();
        trace.meta.push(("seed".into(), config.seed.to_string()));
        trace.meta.push((
            "jitter_max_ns".into(),
            SimTime::from_secs_f64(config.jitter_max).to_string(),
        ));
        trace.meta.push(("cap_ns".into(), config.cap.to_string()));
        Self {
            network,
            qs,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            n_readers,
            nodes,
            queue: BinaryHeap::new(),
            seq: 0,
            crash_at: BTreeMap::new(),
            planned: Vec::new(),
            current: vec![None; n_nodes],
            deferred: vec![VecDeque::new(); n_nodes],
            attribution: BTreeMap::new(),
            record_index: BTreeMap::new(),
            trace,
        }
    }

    fn slot(&self, id: ProcessId) -> Option<usize> {
        let n_servers = self.qs.n_servers();
        let i = id.index as usize;
        let slot = match id.role {
            Role::Server if i < n_servers => i,
            Role::Reader if i < self.n_readers => n_servers + i,
            Role::Writer => n_servers + self.n_readers + i,
            _ => return None,
        };
        (slot < self.nodes.len()).then_some(slot)
    }

    fn push(&mut self, time: SimTime, target: ProcessId, what: Pending) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            seq: self.seq,
            target,
            what,
        });
    }

    pub fn add_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.trace.meta.push((key.into(), value.to_string()));
    }

    /// Queue client operations; op ids follow the order given.
    pub fn schedule(&mut self, ops: impl IntoIterator<Item = PlannedOp>) -> Result<()> {
        for op in ops {
            if !op.process.is_client() || self.slot(op.process).is_none() {
                return Err(Error::InvalidInput(format!(
                    "{} is not a client of this deployment",
                    op.process
                )));
            }
            let ok = matches!(
                (op.process.role, &op.invocation),
                (Role::Reader, Invocation::Read) | (Role::Writer, Invocation::Write(_))
            );
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "{} cannot perform {:?}",
                    op.process, op.invocation
                )));
            }
            let op_id = self.planned.len() as u64 + 1;
            self.push(op.at, op.process, Pending::Invoke(op_id));
            self.planned.push(op);
        }
        Ok(())
    }

    /// The node takes no step at or after `at`. Messages it already sent
    /// are still delivered.
    pub fn inject_crash(&mut self, node: ProcessId, at: SimTime) -> Result<()> {
        if self.slot(node).is_none() {
            return Err(Error::InvalidInput(format!(
                "cannot crash unknown node {node}"
            )));
        }
        let entry = self.crash_at.entry(node).or_insert(at);
        *entry = (*entry).min(at);
        self.push(at, node, Pending::Crash);
        Ok(())
    }

    fn crashed(&self, node: ProcessId, now: SimTime) -> bool {
        self.crash_at.get(&node).is_some_and(|&c| now >= c)
    }

    pub fn run(mut self) -> Result<Trace> {
        let crashed_servers: ServerSet = self
            .crash_at
            .keys()
            .filter(|n| n.is_server())
            .map(|n| n.index)
            .collect();
        if !self.qs.survives(crashed_servers) {
            return Err(Error::InvalidParameter(format!(
                "crashing servers {crashed_servers:?} leaves no quorum alive"
            )));
        }
        self.trace.crashes = self.crash_at.iter().map(|(&n, &t)| (n, t)).collect();

        let mut now = SimTime::ZERO;
        while let Some(next) = self.queue.pop() {
            if next.time > self.config.cap {
                break;
            }
            now = next.time;
            match next.what {
                Pending::Crash => self.trace.events.push(TraceEvent {
                    time: now,
                    node: next.target,
                    action: Action::Crash,
                    sends: 0,
                    server_tag: None,
                    responded: None,
                }),
                _ if self.crashed(next.target, now) => {}
                Pending::Invoke(op_id) => self.invoke(next.target, op_id, now)?,
                Pending::Deliver(msg) => self.deliver(next.target, msg, now)?,
            }
        }
        self.trace.end_time = now;

        let mut done = vec![false; self.planned.len()];
        for r in &self.trace.ops {
            if r.is_complete() {
                done[r.op_id as usize - 1] = true;
            }
        }
        self.trace.incomplete = self
            .planned
            .iter()
            .zip(&done)
            .any(|(p, &ok)| !ok && !self.crash_at.contains_key(&p.process));

        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for s in &self.trace.sends {
            if let Some(op) = s.op_id {
                *counts.entry(op).or_default() += 1;
            }
        }
        for r in &mut self.trace.ops {
            r.messages = counts.get(&r.op_id).copied().unwrap_or(0);
        }
        Ok(self.trace)
    }

    fn invoke(&mut self, client: ProcessId, op_id: u64, now: SimTime) -> Result<()> {
        let slot = self.slot(client).unwrap();
        if self.nodes[slot].is_busy() {
            self.deferred[slot].push_back(op_id);
            return Ok(());
        }
        let planned = &self.planned[op_id as usize - 1];
        let (kind, value) = match &planned.invocation {
            Invocation::Read => (OpKind::Read, None),
            Invocation::Write(v) => (OpKind::Write, Some(v.clone())),
        };
        let invocation = planned.invocation.clone();
        self.record_index.insert(op_id, self.trace.ops.len());
        self.trace.ops.push(OperationRecord {
            op_id,
            process: client,
            kind,
            invoked_at: now,
            responded_at: None,
            tag: None,
            value,
            exchanges: 0,
            messages: 0,
        });
        self.current[slot] = Some(op_id);

        let started = Instant::now();
        let out = self.nodes[slot].step(Event::Invoke(invocation), self.qs);
        *self.trace.compute.entry(op_id).or_default() += started.elapsed();
        self.apply(client, slot, Action::Invoke(op_id), out, now)
    }

    fn deliver(&mut self, node: ProcessId, msg: Message, now: SimTime) -> Result<()> {
        let slot = self.slot(node).unwrap();
        let op_id = self.attribution.get(&(msg.client(), msg.op())).copied();
        let started = Instant::now();
        let out = self.nodes[slot].step(Event::Deliver(msg.clone()), self.qs);
        if let Some(op) = op_id {
            *self.trace.compute.entry(op).or_default() += started.elapsed();
        }
        self.apply(node, slot, Action::Deliver(msg), out, now)
    }

    fn apply(
        &mut self,
        node: ProcessId,
        slot: usize,
        action: Action,
        out: StepOutput,
        now: SimTime,
    ) -> Result<()> {
        let n_sends = out.sends.len() as u32;
        for (dst, msg) in out.sends {
            if node.is_client() {
                if let Some(op) = self.current[slot] {
                    self.attribution.insert((node, msg.op()), op);
                }
            }
            let op_id = self.attribution.get(&(msg.client(), msg.op())).copied();
            let deliver_at = if dst == node {
                now
            } else {
                let d = self.network.message_delay(
                    node,
                    dst,
                    msg.size_bits(),
                    self.config.jitter_max,
                    &mut self.rng,
                )?;
                SimTime(now.0 + SimTime::from_secs_f64(d).0.max(1))
            };
            self.trace.sends.push(SendRecord {
                time: now,
                from: node,
                to: dst,
                deliver_at,
                kind: msg.kind(),
                tag: msg.tag(),
                op_id,
            });
            self.push(deliver_at, dst, Pending::Deliver(msg));
        }
        if out.stale {
            self.trace.stale_drops += 1;
        }

        let mut responded = None;
        if let Some(resp) = out.response {
            let op_id = self.current[slot]
                .take()
                .expect("response without an operation");
            let rec = &mut self.trace.ops[self.record_index[&op_id]];
            rec.responded_at = Some(now);
            rec.tag = Some(resp.tag);
            rec.exchanges = resp.exchanges;
            if rec.kind == OpKind::Read {
                rec.value = Some(resp.value);
            }
            responded = Some(op_id);
        }
        self.trace.events.push(TraceEvent {
            time: now,
            node,
            action,
            sends: n_sends,
            server_tag: self.nodes[slot].server_tag(),
            responded,
        });
        if responded.is_some() {
            if let Some(next) = self.deferred[slot].pop_front() {
                self.invoke(node, next, now)?;
            }
        }
        Ok(())
    }
}

/// Run a workload against a deployment and return its trace.
#[allow(clippy::too_many_arguments)]
pub fn run(
    network: &Network,
    qs: &QuorumSystem,
    suite: Suite,
    n_readers: usize,
    n_writers: usize,
    workload: Vec<PlannedOp>,
    crashes: &[Crash],
    config: SimConfig,
) -> Result<Trace> {
    let mut sim = Simulation::new(network, qs, suite, n_readers, n_writers, config);
    for c in crashes {
        sim.inject_crash(c.node, c.at)?;
    }
    sim.schedule(workload)?;
    sim.run()
}
