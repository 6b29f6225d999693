use crate::quorum::{QuorumSystem, ServerSet};
use crate::types::{Message, MsgKind, ProcessId, Tag, Value};
use crate::views::{classify, iterative_analyze, IterativeDecision, TagView, ViewClass};

use super::{broadcast, Event, Invocation, ReaderKind, Response, StepOutput};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReadPhase {
    Idle,
    /// Collecting relays and acks. `awaiting_acks` is set once the relay
    /// quorum has been analysed and the reader decided to wait for acks.
    Collect {
        awaiting_acks: bool,
    },
    /// Second ABD round: writing the chosen tag back to a quorum.
    WriteBack {
        tag: Tag,
        value: Value,
        acks: ServerSet,
    },
}

/// Reader state: `RR`/`RA` are the relay and ack messages received for the
/// current `read_op`, indexed by server; `RRsrv`/`RAsrv` their senders.
#[derive(Clone, Debug)]
pub struct Reader {
    id: ProcessId,
    kind: ReaderKind,
    n_servers: usize,
    read_op: u64,
    phase: ReadPhase,
    relays: Vec<Option<(Tag, Value)>>,
    relay_srv: ServerSet,
    acks: Vec<Option<(Tag, Value)>>,
    ack_srv: ServerSet,
}

impl Reader {
    pub fn new(id: ProcessId, kind: ReaderKind, n_servers: usize) -> Self {
        Self {
            id,
            kind,
            n_servers,
            read_op: 0,
            phase: ReadPhase::Idle,
            relays: vec![None; n_servers],
            relay_srv: ServerSet::EMPTY,
            acks: vec![None; n_servers],
            ack_srv: ServerSet::EMPTY,
        }
    }

    pub fn read_op(&self) -> u64 {
        self.read_op
    }

    pub fn phase(&self) -> &ReadPhase {
        &self.phase
    }

    pub fn is_busy(&self) -> bool {
        self.phase != ReadPhase::Idle
    }

    pub fn step(&mut self, event: Event, qs: &QuorumSystem) -> StepOutput {
        match event {
            Event::Invoke(Invocation::Read) => self.invoke(),
            Event::Invoke(Invocation::Write(_)) => {
                debug_assert!(false, "reader {} asked to write", self.id);
                StepOutput::default()
            }
            Event::Deliver(msg) => self.deliver(msg, qs),
        }
    }

    fn invoke(&mut self) -> StepOutput {
        debug_assert!(!self.is_busy(), "reader {} invoked while busy", self.id);
        self.read_op += 1;
        self.relays.iter_mut().for_each(|r| *r = None);
        self.acks.iter_mut().for_each(|a| *a = None);
        self.relay_srv = ServerSet::EMPTY;
        self.ack_srv = ServerSet::EMPTY;
        self.phase = ReadPhase::Collect {
            awaiting_acks: false,
        };
        StepOutput {
            sends: broadcast(
                self.n_servers,
                &Message::read_request(self.id, self.read_op),
            ),
            ..StepOutput::default()
        }
    }

    fn deliver(&mut self, msg: Message, qs: &QuorumSystem) -> StepOutput {
        if msg.client() != self.id || msg.op() != self.read_op {
            return StepOutput::stale();
        }
        let server = msg.sender().index;
        match (&mut self.phase, msg.kind()) {
            (ReadPhase::Idle, _) => StepOutput::default(),
            (ReadPhase::Collect { .. }, MsgKind::ReadRelay) => {
                self.relays[server as usize] = Some(carried(&msg));
                self.relay_srv.insert(server);
                self.try_complete(qs)
            }
            (ReadPhase::Collect { .. }, MsgKind::ReadAck) => {
                self.acks[server as usize] = Some(carried(&msg));
                self.ack_srv.insert(server);
                self.try_complete(qs)
            }
            (ReadPhase::WriteBack { tag, value, acks }, MsgKind::WriteAck) => {
                acks.insert(server);
                if qs.first_contained_quorum(*acks).is_some() {
                    let response = Response {
                        tag: *tag,
                        value: value.clone(),
                        exchanges: 4,
                    };
                    self.phase = ReadPhase::Idle;
                    StepOutput {
                        response: Some(response),
                        ..StepOutput::default()
                    }
                } else {
                    StepOutput::default()
                }
            }
            _ => StepOutput::default(),
        }
    }

    fn try_complete(&mut self, qs: &QuorumSystem) -> StepOutput {
        if self.kind == ReaderKind::Abd {
            return self.abd_query(qs);
        }
        if let Some(q) = qs.first_contained_quorum(self.ack_srv) {
            let acks = collect(&self.acks, qs.quorum(q));
            let (tag, value) = if self.kind == ReaderKind::EagerMax {
                acks.max_by_key(|(t, _)| *t)
            } else {
                acks.min_by_key(|(t, _)| *t)
            }
            .unwrap();
            return self.respond(tag, value, 3);
        }
        let ReadPhase::Collect { awaiting_acks } = self.phase else {
            return StepOutput::default();
        };
        if awaiting_acks || self.kind == ReaderKind::AckQuorum {
            return StepOutput::default();
        }
        let Some(q) = qs.first_contained_quorum(self.relay_srv) else {
            return StepOutput::default();
        };
        let members = qs.quorum(q);
        let view = TagView::new(
            q,
            members
                .iter()
                .map(|s| (s, self.relays[s as usize].as_ref().unwrap().0)),
        );
        let chosen = match self.kind {
            ReaderKind::Erato | ReaderKind::EagerMax => {
                let max = view.tags.iter().map(|&(_, t)| t).max().unwrap();
                match classify(qs, &view).expect("view built from a full quorum") {
                    ViewClass::View1 => self.relay_with(members, |t| t == max),
                    // the sole writer's previous write is complete
                    ViewClass::View2 if max.ts > 0 => {
                        self.relay_with(members, |t| t.ts == max.ts - 1)
                    }
                    ViewClass::View3 if self.kind == ReaderKind::EagerMax => {
                        self.relay_with(members, |t| t == max)
                    }
                    _ => None,
                }
            }
            ReaderKind::EratoMw => match iterative_analyze(qs, &view).expect("well-formed view") {
                IterativeDecision::ReturnTag { tag, holders } => {
                    self.relay_with(holders, |t| t == tag)
                }
                IterativeDecision::AwaitAcks => None,
            },
            ReaderKind::AckQuorum | ReaderKind::Abd => unreachable!(),
        };
        match chosen {
            Some((tag, value)) => self.respond(tag, value, 2),
            None => {
                // no value to return from relays alone: wait for an ack quorum
                self.phase = ReadPhase::Collect {
                    awaiting_acks: true,
                };
                StepOutput::default()
            }
        }
    }

    fn relay_with(&self, among: ServerSet, pred: impl Fn(Tag) -> bool) -> Option<(Tag, Value)> {
        collect(&self.relays, among).find(|(t, _)| pred(*t))
    }

    fn abd_query(&mut self, qs: &QuorumSystem) -> StepOutput {
        let Some(q) = qs.first_contained_quorum(self.ack_srv) else {
            return StepOutput::default();
        };
        let (tag, value) = collect(&self.acks, qs.quorum(q))
            .max_by_key(|(t, _)| *t)
            .unwrap();
        let msg = Message::write_request(self.id, self.read_op, tag, value.clone());
        self.phase = ReadPhase::WriteBack {
            tag,
            value,
            acks: ServerSet::EMPTY,
        };
        StepOutput {
            sends: broadcast(self.n_servers, &msg),
            ..StepOutput::default()
        }
    }

    fn respond(&mut self, tag: Tag, value: Value, exchanges: u32) -> StepOutput {
        self.phase = ReadPhase::Idle;
        StepOutput {
            response: Some(Response {
                tag,
                value,
                exchanges,
            }),
            ..StepOutput::default()
        }
    }
}

fn carried(msg: &Message) -> (Tag, Value) {
    (msg.tag().unwrap(), msg.value().unwrap().clone())
}

fn collect(
    slots: &[Option<(Tag, Value)>],
    among: ServerSet,
) -> impl Iterator<Item = (Tag, Value)> + '_ {
    among
        .iter()
        .filter_map(move |s| slots[s as usize].as_ref().map(|(t, v)| (*t, v.clone())))
}
