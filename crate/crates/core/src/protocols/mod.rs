//! Message-driven state machines for the register protocols.
//!
//! Every process is a [`Node`]; a step consumes one [`Event`] and yields the
//! messages to send plus, for clients, at most one operation response.
//! Steps are deterministic and perform no I/O.
//!
//! | algorithm  | reader            | writer        | server                     |
//! |------------|-------------------|---------------|----------------------------|
//! | `erato`    | quorum views      | single writer | relays to peers and reader |
//! | `erato_mw` | iterative views   | discover+put  | relays to peers and reader |
//! | `ohsam`    | ack quorum, min   | single writer | relays to peers only       |
//! | `ohmam`    | ack quorum, min   | discover+put  | relays to peers only       |
//! | `abd`      | query + writeback | single writer | replies directly           |
//! | `abd_mw`   | query + writeback | discover+put  | replies directly           |
//!
//! The OhSam/OhMam and ABD baselines are reconstructions from their
//! published summaries, not ports of reference code.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quorum::QuorumSystem;
use crate::types::{Message, ProcessId, Role, Tag, Value};

mod reader;
mod server;
mod writer;

pub use reader::{ReadPhase, Reader};
pub use server::Server;
pub use writer::{MwmrWriter, SwmrWriter, WritePhase};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Erato,
    EratoMw,
    Abd,
    AbdMw,
    OhSam,
    OhMam,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Erato,
        Algorithm::EratoMw,
        Algorithm::Abd,
        Algorithm::AbdMw,
        Algorithm::OhSam,
        Algorithm::OhMam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Erato => "erato",
            Algorithm::EratoMw => "erato_mw",
            Algorithm::Abd => "abd",
            Algorithm::AbdMw => "abd_mw",
            Algorithm::OhSam => "ohsam",
            Algorithm::OhMam => "ohmam",
        }
    }

    pub fn is_multi_writer(self) -> bool {
        matches!(
            self,
            Algorithm::EratoMw | Algorithm::AbdMw | Algorithm::OhMam
        )
    }

    pub fn suite(self) -> Suite {
        let (reader, server) = match self {
            Algorithm::Erato => (ReaderKind::Erato, ServerMode::Relay { to_reader: true }),
            Algorithm::EratoMw => (ReaderKind::EratoMw, ServerMode::Relay { to_reader: true }),
            Algorithm::OhSam | Algorithm::OhMam => (
                ReaderKind::AckQuorum,
                ServerMode::Relay { to_reader: false },
            ),
            Algorithm::Abd | Algorithm::AbdMw => (ReaderKind::Abd, ServerMode::Direct),
        };
        Suite {
            reader,
            server,
            multi_writer: self.is_multi_writer(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReaderKind {
    /// Single-writer quorum-view reader (2 or 3 exchanges).
    Erato,
    /// Multi-writer reader with the iterative view analysis (2 or 3 exchanges).
    EratoMw,
    /// Always waits for a quorum of read acks and returns the minimum tag (3 exchanges).
    AckQuorum,
    /// Two round trips: query a quorum, write the maximum back (4 exchanges).
    Abd,
    /// Deliberately unsafe: an ambiguous view returns the maximum tag at
    /// once and the ack path returns the maximum instead of the minimum.
    /// Exists only to show the checker can fail.
    EagerMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServerMode {
    /// Answer a read request by relaying to the destination set, plus the
    /// reader itself when `to_reader` is set; acknowledge once relays from
    /// a quorum arrive.
    Relay { to_reader: bool },
    /// Answer a read request directly with the local tag and value.
    Direct,
}

/// The reader, writer and server behaviour of one deployment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Suite {
    pub reader: ReaderKind,
    pub server: ServerMode,
    pub multi_writer: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Invocation {
    Read,
    Write(Value),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Invoke(Invocation),
    Deliver(Message),
}

/// Result of a completed operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Response {
    pub tag: Tag,
    pub value: Value,
    pub exchanges: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepOutput {
    pub sends: Vec<(ProcessId, Message)>,
    pub response: Option<Response>,
    /// The delivered message belonged to an older operation and was dropped.
    pub stale: bool,
}

impl StepOutput {
    fn stale() -> Self {
        Self {
            stale: true,
            ..Self::default()
        }
    }
}

pub(crate) fn broadcast(n_servers: usize, msg: &Message) -> Vec<(ProcessId, Message)> {
    (0..n_servers as u32)
        .map(|s| (ProcessId::server(s), msg.clone()))
        .collect()
}

#[derive(Clone, Debug)]
pub enum Node {
    Reader(Reader),
    SwmrWriter(SwmrWriter),
    MwmrWriter(MwmrWriter),
    Server(Server),
}

impl Node {
    /// Build the state machine for `id` under `suite`.
    pub fn new(id: ProcessId, suite: Suite, qs: &QuorumSystem) -> Self {
        match id.role {
            Role::Reader => Node::Reader(Reader::new(id, suite.reader, qs.n_servers())),
            Role::Writer if suite.multi_writer => {
                Node::MwmrWriter(MwmrWriter::new(id, qs.n_servers()))
            }
            Role::Writer => Node::SwmrWriter(SwmrWriter::new(id, qs.n_servers())),
            Role::Server => Node::Server(Server::new(id.index, suite, qs)),
        }
    }

    pub fn step(&mut self, event: Event, qs: &QuorumSystem) -> StepOutput {
        match self {
            Node::Reader(r) => r.step(event, qs),
            Node::SwmrWriter(w) => w.step(event, qs),
            Node::MwmrWriter(w) => w.step(event, qs),
            Node::Server(s) => s.step(event, qs),
        }
    }

    /// The replica tag, for servers.
    pub fn server_tag(&self) -> Option<Tag> {
        match self {
            Node::Server(s) => Some(s.tag()),
            _ => None,
        }
    }

    pub fn is_busy(&self) -> bool {
        match self {
            Node::Reader(r) => r.is_busy(),
            Node::SwmrWriter(w) => w.is_busy(),
            Node::MwmrWriter(w) => w.is_busy(),
            Node::Server(_) => false,
        }
    }
}

#[cfg(test)]
mod tests;
