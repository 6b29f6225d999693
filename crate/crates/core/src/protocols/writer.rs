use crate::quorum::{QuorumSystem, ServerSet};
use crate::types::{Message, MsgKind, ProcessId, Tag, Value};

use super::{broadcast, Event, Invocation, Response, StepOutput};

/// Sole writer: one round, `ts` incremented per write.
///
/// Acks are matched on `write_op`, which advances in lockstep with `ts`.
#[derive(Clone, Debug)]
pub struct SwmrWriter {
    id: ProcessId,
    n_servers: usize,
    ts: u64,
    write_op: u64,
    value: Value,
    acks: ServerSet,
    pending: bool,
}

impl SwmrWriter {
    pub fn new(id: ProcessId, n_servers: usize) -> Self {
        Self {
            id,
            n_servers,
            ts: 0,
            write_op: 0,
            value: Value::initial(),
            acks: ServerSet::EMPTY,
            pending: false,
        }
    }

    pub fn tag(&self) -> Tag {
        Tag::new(self.ts, self.id.index)
    }

    pub fn is_busy(&self) -> bool {
        self.pending
    }

    pub fn step(&mut self, event: Event, qs: &QuorumSystem) -> StepOutput {
        match event {
            Event::Invoke(Invocation::Write(value)) => {
                debug_assert!(!self.pending, "writer {} invoked while busy", self.id);
                self.ts += 1;
                self.write_op += 1;
                self.value = value;
                self.acks = ServerSet::EMPTY;
                self.pending = true;
                let msg =
                    Message::write_request(self.id, self.write_op, self.tag(), self.value.clone());
                StepOutput {
                    sends: broadcast(self.n_servers, &msg),
                    ..StepOutput::default()
                }
            }
            Event::Invoke(Invocation::Read) => {
                debug_assert!(false, "writer {} asked to read", self.id);
                StepOutput::default()
            }
            Event::Deliver(msg) => {
                if msg.op() != self.write_op || msg.client() != self.id {
                    return StepOutput::stale();
                }
                if !self.pending || msg.kind() != MsgKind::WriteAck {
                    return StepOutput::default();
                }
                self.acks.insert(msg.sender().index);
                if qs.first_contained_quorum(self.acks).is_none() {
                    return StepOutput::default();
                }
                self.pending = false;
                StepOutput {
                    response: Some(Response {
                        tag: self.tag(),
                        value: self.value.clone(),
                        exchanges: 2,
                    }),
                    ..StepOutput::default()
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WritePhase {
    Idle,
    Discover,
    Put { tag: Tag },
}

/// Multi-writer: discover the highest timestamp, then put `(max+1, id)`.
/// `write_op` advances once per phase.
#[derive(Clone, Debug)]
pub struct MwmrWriter {
    id: ProcessId,
    n_servers: usize,
    write_op: u64,
    value: Value,
    phase: WritePhase,
    acks: Vec<Option<Tag>>,
    ack_srv: ServerSet,
}

impl MwmrWriter {
    pub fn new(id: ProcessId, n_servers: usize) -> Self {
        Self {
            id,
            n_servers,
            write_op: 0,
            value: Value::initial(),
            phase: WritePhase::Idle,
            acks: vec![None; n_servers],
            ack_srv: ServerSet::EMPTY,
        }
    }

    pub fn phase(&self) -> &WritePhase {
        &self.phase
    }

    pub fn is_busy(&self) -> bool {
        self.phase != WritePhase::Idle
    }

    fn reset_acks(&mut self) {
        self.acks.iter_mut().for_each(|a| *a = None);
        self.ack_srv = ServerSet::EMPTY;
    }

    pub fn step(&mut self, event: Event, qs: &QuorumSystem) -> StepOutput {
        match event {
            Event::Invoke(Invocation::Write(value)) => {
                debug_assert!(!self.is_busy(), "writer {} invoked while busy", self.id);
                self.write_op += 1;
                self.value = value;
                self.reset_acks();
                self.phase = WritePhase::Discover;
                StepOutput {
                    sends: broadcast(
                        self.n_servers,
                        &Message::write_discover(self.id, self.write_op),
                    ),
                    ..StepOutput::default()
                }
            }
            Event::Invoke(Invocation::Read) => {
                debug_assert!(false, "writer {} asked to read", self.id);
                StepOutput::default()
            }
            Event::Deliver(msg) => {
                if msg.op() != self.write_op || msg.client() != self.id {
                    return StepOutput::stale();
                }
                let server = msg.sender().index;
                match (&self.phase, msg.kind()) {
                    (WritePhase::Discover, MsgKind::DiscoverAck) => {
                        self.acks[server as usize] = msg.tag();
                        self.ack_srv.insert(server);
                        let Some(q) = qs.first_contained_quorum(self.ack_srv) else {
                            return StepOutput::default();
                        };
                        let max_ts = qs
                            .quorum(q)
                            .iter()
                            .filter_map(|s| self.acks[s as usize])
                            .map(|t| t.ts)
                            .max()
                            .unwrap_or(0);
                        let tag = Tag::new(max_ts + 1, self.id.index);
                        self.write_op += 1;
                        self.reset_acks();
                        self.phase = WritePhase::Put { tag };
                        let msg =
                            Message::write_request(self.id, self.write_op, tag, self.value.clone());
                        StepOutput {
                            sends: broadcast(self.n_servers, &msg),
                            ..StepOutput::default()
                        }
                    }
                    (WritePhase::Put { tag }, MsgKind::WriteAck) => {
                        let tag = *tag;
                        self.ack_srv.insert(server);
                        if qs.first_contained_quorum(self.ack_srv).is_none() {
                            return StepOutput::default();
                        }
                        self.phase = WritePhase::Idle;
                        StepOutput {
                            response: Some(Response {
                                tag,
                                value: self.value.clone(),
                                exchanges: 4,
                            }),
                            ..StepOutput::default()
                        }
                    }
                    _ => StepOutput::default(),
                }
            }
        }
    }
}
