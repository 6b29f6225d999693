//! Shared vocabulary: process identifiers, tags, values, wire messages and
//! operation records.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use bytes::Bytes;

use crate::error::{Error, Result};

/// Fixed per-message header used by the network size model.
pub const HEADER_OCTETS: usize = 64;

/// Smallest payload able to hold the unique (writer, sequence) stamp.
pub const MIN_VALUE_OCTETS: usize = 12;

pub const DEFAULT_VALUE_OCTETS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Reader,
    Writer,
    Server,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId {
    pub role: Role,
    pub index: u32,
}

impl ProcessId {
    pub const fn reader(index: u32) -> Self {
        Self {
            role: Role::Reader,
            index,
        }
    }

    pub const fn writer(index: u32) -> Self {
        Self {
            role: Role::Writer,
            index,
        }
    }

    pub const fn server(index: u32) -> Self {
        Self {
            role: Role::Server,
            index,
        }
    }

    pub fn is_server(&self) -> bool {
        self.role == Role::Server
    }

    pub fn is_client(&self) -> bool {
        !self.is_server()
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.role {
            Role::Reader => 'r',
            Role::Writer => 'w',
            Role::Server => 's',
        };
        write!(f, "{prefix}{}", self.index)
    }
}

impl FromStr for ProcessId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad process id {s:?}"));
        let mut chars = s.chars();
        let role = match chars.next() {
            Some('r') => Role::Reader,
            Some('w') => Role::Writer,
            Some('s') => Role::Server,
            _ => return Err(bad()),
        };
        let index = chars.as_str().parse().map_err(|_| bad())?;
        Ok(Self { role, index })
    }
}

/// Logical version of a written value: timestamp, then writer index.
///
/// The derived ordering is lexicographic on `(ts, wid)`. In single-writer
/// mode `wid` never changes, so the order is plain timestamp order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag {
    pub ts: u64,
    pub wid: u32,
}

impl Tag {
    /// Tag of the initial register value. Writer index 0 is the smallest
    /// writer id and `ts = 0` is never produced by a write.
    pub const INITIAL: Tag = Tag { ts: 0, wid: 0 };

    pub const fn new(ts: u64, wid: u32) -> Self {
        Self { ts, wid }
    }
}

pub fn compare_tags(a: Tag, b: Tag) -> Ordering {
    a.cmp(&b)
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ts, self.wid)
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad tag {s:?}"));
        let (ts, wid) = s.split_once(':').ok_or_else(bad)?;
        Ok(Tag {
            ts: ts.parse().map_err(|_| bad())?,
            wid: wid.parse().map_err(|_| bad())?,
        })
    }
}

/// Opaque register payload. Cloning is cheap (reference counted).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value(Bytes);

impl Value {
    /// The initial value, encoded as an empty payload.
    pub fn initial() -> Self {
        Self(Bytes::new())
    }

    pub fn from_bytes(bytes: impl Into<Bytes>) -> Self {
        Self(bytes.into())
    }

    /// A payload of `size` octets that is unique per `(writer, seq)`.
    pub fn for_write(writer: u32, seq: u64, size: usize) -> Self {
        let mut buf = vec![0u8; size.max(MIN_VALUE_OCTETS)];
        buf[..4].copy_from_slice(&writer.to_be_bytes());
        buf[4..12].copy_from_slice(&seq.to_be_bytes());
        Self(Bytes::from(buf))
    }

    pub fn is_initial(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        if self.0.is_empty() {
            "-".to_string()
        } else {
            hex::encode(&self.0)
        }
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        if s == "-" {
            return Ok(Self::initial());
        }
        hex::decode(s)
            .map(Self::from_bytes)
            .map_err(|e| Error::InvalidInput(format!("bad value hex: {e}")))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() >= MIN_VALUE_OCTETS {
            let writer = u32::from_be_bytes(self.0[..4].try_into().unwrap());
            let seq = u64::from_be_bytes(self.0[4..12].try_into().unwrap());
            write!(f, "v(w{writer}#{seq})")
        } else if self.0.is_empty() {
            f.write_str("⊥")
        } else {
            write!(f, "v({})", hex::encode(&self.0))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MsgKind {
    ReadRequest,
    ReadRelay,
    ReadAck,
    WriteRequest,
    WriteAck,
    WriteDiscover,
    DiscoverAck,
}

impl MsgKind {
    pub const ALL: [MsgKind; 7] = [
        MsgKind::ReadRequest,
        MsgKind::ReadRelay,
        MsgKind::ReadAck,
        MsgKind::WriteRequest,
        MsgKind::WriteAck,
        MsgKind::WriteDiscover,
        MsgKind::DiscoverAck,
    ];

    pub fn has_tag(self) -> bool {
        !matches!(self, MsgKind::ReadRequest | MsgKind::WriteDiscover)
    }

    pub fn has_value(self) -> bool {
        matches!(
            self,
            MsgKind::ReadRelay | MsgKind::ReadAck | MsgKind::WriteRequest
        )
    }

    /// Read-path messages always name a reader as their client.
    pub fn is_read_path(self) -> bool {
        matches!(
            self,
            MsgKind::ReadRequest | MsgKind::ReadRelay | MsgKind::ReadAck
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            MsgKind::ReadRequest => "readRequest",
            MsgKind::ReadRelay => "readRelay",
            MsgKind::ReadAck => "readAck",
            MsgKind::WriteRequest => "writeRequest",
            MsgKind::WriteAck => "writeAck",
            MsgKind::WriteDiscover => "writeDiscover",
            MsgKind::DiscoverAck => "discoverAck",
        }
    }
}

impl fmt::Display for MsgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MsgKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MsgKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown message kind {s:?}")))
    }
}

/// A protocol message.
///
/// Every kind names exactly one client operation: `client` is the reader
/// (`read_op` in the read path) or the process writing (`write_op`). Read
/// write-backs in the ABD baselines send `WriteRequest`s whose client is a
/// reader. Which of `tag` and `value` are present is fixed by `kind` and
/// enforced by [`Message::new`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    kind: MsgKind,
    sender: ProcessId,
    client: ProcessId,
    op: u64,
    tag: Option<Tag>,
    value: Option<Value>,
}

impl Message {
    pub fn new(
        kind: MsgKind,
        sender: ProcessId,
        client: ProcessId,
        op: u64,
        tag: Option<Tag>,
        value: Option<Value>,
    ) -> Result<Self> {
        if kind.has_tag() != tag.is_some() {
            return Err(Error::InvalidInput(format!(
                "{kind} must {}carry a tag",
                if kind.has_tag() { "" } else { "not " }
            )));
        }
        if kind.has_value() != value.is_some() {
            return Err(Error::InvalidInput(format!(
                "{kind} must {}carry a value",
                if kind.has_value() { "" } else { "not " }
            )));
        }
        if !client.is_client() || (kind.is_read_path() && client.role != Role::Reader) {
            return Err(Error::InvalidInput(format!(
                "{kind} cannot name {client} as its client"
            )));
        }
        Ok(Self {
            kind,
            sender,
            client,
            op,
            tag,
            value,
        })
    }

    pub fn read_request(reader: ProcessId, read_op: u64) -> Self {
        Self::new(MsgKind::ReadRequest, reader, reader, read_op, None, None).unwrap()
    }

    pub fn read_relay(
        server: ProcessId,
        reader: ProcessId,
        read_op: u64,
        tag: Tag,
        value: Value,
    ) -> Self {
        Self::new(
            MsgKind::ReadRelay,
            server,
            reader,
            read_op,
            Some(tag),
            Some(value),
        )
        .unwrap()
    }

    pub fn read_ack(
        server: ProcessId,
        reader: ProcessId,
        read_op: u64,
        tag: Tag,
        value: Value,
    ) -> Self {
        Self::new(
            MsgKind::ReadAck,
            server,
            reader,
            read_op,
            Some(tag),
            Some(value),
        )
        .unwrap()
    }

    pub fn write_request(client: ProcessId, write_op: u64, tag: Tag, value: Value) -> Self {
        Self::new(
            MsgKind::WriteRequest,
            client,
            client,
            write_op,
            Some(tag),
            Some(value),
        )
        .unwrap()
    }

    pub fn write_ack(server: ProcessId, client: ProcessId, write_op: u64, tag: Tag) -> Self {
        Self::new(MsgKind::WriteAck, server, client, write_op, Some(tag), None).unwrap()
    }

    pub fn write_discover(writer: ProcessId, write_op: u64) -> Self {
        Self::new(MsgKind::WriteDiscover, writer, writer, write_op, None, None).unwrap()
    }

    pub fn discover_ack(server: ProcessId, writer: ProcessId, write_op: u64, tag: Tag) -> Self {
        Self::new(
            MsgKind::DiscoverAck,
            server,
            writer,
            write_op,
            Some(tag),
            None,
        )
        .unwrap()
    }

    pub fn kind(&self) -> MsgKind {
        self.kind
    }

    pub fn sender(&self) -> ProcessId {
        self.sender
    }

    /// The reader or writer whose operation this message belongs to.
    pub fn client(&self) -> ProcessId {
        self.client
    }

    /// `read_op` or `write_op`, depending on the kind.
    pub fn op(&self) -> u64 {
        self.op
    }

    pub fn tag(&self) -> Option<Tag> {
        self.tag
    }

    pub fn value(&self) -> Option<&Value> {
        self.value.as_ref()
    }

    /// Wire size under the fixed-header model.
    pub fn size_bits(&self) -> u64 {
        let payload = self.value.as_ref().map_or(0, Value::len);
        ((HEADER_OCTETS + payload) * 8) as u64
    }

    /// Compact single-field text form used by the trace log:
    /// `kind/sender/client/op/tag/value`, `-` for absent fields.
    pub fn encode(&self) -> String {
        format!(
            "{}/{}/{}/{}/{}/{}",
            self.kind,
            self.sender,
            self.client,
            self.op,
            self.tag.map_or_else(|| "-".to_string(), |t| t.to_string()),
            self.value.as_ref().map_or_else(
                || "-".to_string(),
                |v| {
                    if v.is_initial() {
                        "~".to_string()
                    } else {
                        v.to_hex()
                    }
                }
            ),
        )
    }

    pub fn decode(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('/').collect();
        if parts.len() != 6 {
            return Err(Error::InvalidInput(format!("bad message {s:?}")));
        }
        let tag = match parts[4] {
            "-" => None,
            t => Some(t.parse()?),
        };
        let value = match parts[5] {
            "-" => None,
            "~" => Some(Value::initial()),
            v => Some(Value::from_hex(v)?),
        };
        Self::new(
            parts[0].parse()?,
            parts[1].parse()?,
            parts[2].parse()?,
            parts[3]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad op counter in {s:?}")))?,
            tag,
            value,
        )
    }
}

/// Simulated time in nanoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs_f64(secs: f64) -> Self {
        SimTime((secs * 1e9).round().max(0.0) as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Read,
    Write,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Read => "read",
            OpKind::Write => "write",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "read" => Ok(OpKind::Read),
            "write" => Ok(OpKind::Write),
            _ => Err(Error::InvalidInput(format!("unknown op kind {s:?}"))),
        }
    }
}

/// One client operation, as observed at its invoking process.
///
/// `tag` is the written tag for writes and the returned tag for reads;
/// `value` is the written value (known from invocation) or the returned
/// value (known from response).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperationRecord {
    pub op_id: u64,
    pub process: ProcessId,
    pub kind: OpKind,
    pub invoked_at: SimTime,
    pub responded_at: Option<SimTime>,
    pub tag: Option<Tag>,
    pub value: Option<Value>,
    pub exchanges: u32,
    pub messages: u64,
}

impl OperationRecord {
    pub fn is_complete(&self) -> bool {
        self.responded_at.is_some()
    }

    pub fn latency(&self) -> Option<SimTime> {
        self.responded_at.map(|r| r.saturating_sub(self.invoked_at))
    }

    /// Real-time precedence: this operation responded before `other` was invoked.
    pub fn precedes(&self, other: &OperationRecord) -> bool {
        matches!(self.responded_at, Some(r) if r < other.invoked_at)
    }
}
