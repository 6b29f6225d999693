use std::collections::BTreeMap;

use crate::quorum::{QuorumSystem, ServerSet};
use crate::types::{Message, MsgKind, ProcessId, Tag, Value};

use super::{Event, ServerMode, StepOutput, Suite};

/// Replica state. The tag never decreases.
#[derive(Clone, Debug)]
pub struct Server {
    id: ProcessId,
    mode: ServerMode,
    multi_writer: bool,
    tag: Tag,
    value: Value,
    /// `D`: every server sharing a quorum with this one, itself included.
    destinations: ServerSet,
    /// Latest read operation seen per reader.
    operations: BTreeMap<ProcessId, u64>,
    /// Servers that relayed the reader's latest operation to us.
    relays: BTreeMap<ProcessId, ServerSet>,
    /// Latest read operation we have already acknowledged, per reader.
    acked: BTreeMap<ProcessId, u64>,
    /// Latest write operation applied, per writing client.
    write_ops: BTreeMap<ProcessId, u64>,
}

impl Server {
    pub fn new(index: u32, suite: Suite, qs: &QuorumSystem) -> Self {
        Self {
            id: ProcessId::server(index),
            mode: suite.server,
            multi_writer: suite.multi_writer,
            tag: Tag::INITIAL,
            value: Value::initial(),
            destinations: qs.relay_destinations(index),
            operations: BTreeMap::new(),
            relays: BTreeMap::new(),
            acked: BTreeMap::new(),
            write_ops: BTreeMap::new(),
        }
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    pub fn destinations(&self) -> ServerSet {
        self.destinations
    }

    pub fn relays_for(&self, reader: ProcessId) -> ServerSet {
        self.relays.get(&reader).copied().unwrap_or_default()
    }

    fn adopt(&mut self, tag: Tag, value: &Value) {
        if self.tag < tag {
            self.tag = tag;
            self.value = value.clone();
        }
    }

    pub fn step(&mut self, event: Event, qs: &QuorumSystem) -> StepOutput {
        let Event::Deliver(msg) = event else {
            debug_assert!(false, "server {} cannot invoke operations", self.id);
            return StepOutput::default();
        };
        let client = msg.client();
        let op = msg.op();
        let sends = match msg.kind() {
            MsgKind::ReadRequest => match self.mode {
                ServerMode::Direct => {
                    vec![(
                        client,
                        Message::read_ack(self.id, client, op, self.tag, self.value.clone()),
                    )]
                }
                ServerMode::Relay { to_reader } => {
                    let relay =
                        Message::read_relay(self.id, client, op, self.tag, self.value.clone());
                    let mut sends: Vec<_> = self
                        .destinations
                        .iter()
                        .map(|s| (ProcessId::server(s), relay.clone()))
                        .collect();
                    if to_reader {
                        sends.push((client, relay));
                    }
                    sends
                }
            },
            MsgKind::ReadRelay => self.on_relay(&msg, qs),
            MsgKind::WriteRequest => {
                let tag = msg.tag().unwrap();
                let value = msg.value().unwrap();
                if self.multi_writer {
                    let seen = self.write_ops.entry(client).or_insert(0);
                    if *seen < op {
                        *seen = op;
                        self.adopt(tag, value);
                    }
                } else {
                    self.adopt(tag, value);
                }
                vec![(client, Message::write_ack(self.id, client, op, self.tag))]
            }
            MsgKind::WriteDiscover => {
                vec![(client, Message::discover_ack(self.id, client, op, self.tag))]
            }
            // acks are addressed to clients; a server ignores strays
            MsgKind::ReadAck | MsgKind::WriteAck | MsgKind::DiscoverAck => Vec::new(),
        };
        StepOutput {
            sends,
            ..StepOutput::default()
        }
    }

    fn on_relay(&mut self, msg: &Message, qs: &QuorumSystem) -> Vec<(ProcessId, Message)> {
        let reader = msg.client();
        let read_op = msg.op();
        self.adopt(msg.tag().unwrap(), msg.value().unwrap());

        let current = self.operations.entry(reader).or_insert(0);
        if *current < read_op {
            *current = read_op;
            self.relays.insert(reader, ServerSet::EMPTY);
        }
        if *current != read_op {
            return Vec::new();
        }
        let relays = self.relays.entry(reader).or_default();
        relays.insert(msg.sender().index);
        let acked = self.acked.entry(reader).or_insert(0);
        if *acked < read_op && qs.first_contained_quorum(*relays).is_some() {
            *acked = read_op;
            vec![(
                reader,
                Message::read_ack(self.id, reader, read_op, self.tag, self.value.clone()),
            )]
        } else {
            Vec::new()
        }
    }
}
