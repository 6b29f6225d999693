//! Atomicity checking of register histories.
//!
//! [`check_atomicity_tagged`] orders operations by the tags the protocols
//! attach to them and checks the result against real time.
//! [`brute_force_linearizable`] searches every serialization of a small
//! history and serves as an independent oracle.

mod generate;
mod lemmas;
mod oracle;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::netsim::Trace;
use crate::types::{MsgKind, OpKind, OperationRecord, ProcessId, Tag, Value};

pub use generate::random_swmr_history;
pub use lemmas::{check_lemmas, LemmaReport};
pub use oracle::{brute_force_linearizable, BRUTE_FORCE_LIMIT};

/// A well-formed history: operations of one process never overlap.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    ops: Vec<OperationRecord>,
}

impl History {
    pub fn new(ops: Vec<OperationRecord>) -> Result<Self> {
        validate(&ops)?;
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[OperationRecord] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn completed(&self) -> impl Iterator<Item = &OperationRecord> {
        self.ops.iter().filter(|o| o.is_complete())
    }
}

fn validate(ops: &[OperationRecord]) -> Result<()> {
    let mut by_process: BTreeMap<ProcessId, Vec<&OperationRecord>> = BTreeMap::new();
    for op in ops {
        if !op.process.is_client() {
            return Err(Error::InvalidHistory(format!(
                "op {} issued by server {}",
                op.op_id, op.process
            )));
        }
        if let Some(r) = op.responded_at {
            if r < op.invoked_at {
                return Err(Error::InvalidHistory(format!(
                    "op {} responds before invocation",
                    op.op_id
                )));
            }
        }
        by_process.entry(op.process).or_default().push(op);
    }
    for (p, mut list) in by_process {
        list.sort_by_key(|o| o.invoked_at);
        for w in list.windows(2) {
            match w[0].responded_at {
                Some(r) if r <= w[1].invoked_at => {}
                _ => {
                    return Err(Error::InvalidHistory(format!(
                        "{p} invokes op {} while op {} is pending",
                        w[1].op_id, w[0].op_id
                    )))
                }
            }
        }
    }
    let mut ids: Vec<u64> = ops.iter().map(|o| o.op_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidHistory("duplicate operation ids".into()));
    }
    Ok(())
}

/// Real-time order, plus program order between operations of one process
/// that touch at an instant.
pub fn happens_before(a: &OperationRecord, b: &OperationRecord) -> bool {
    match a.responded_at {
        Some(r) => {
            r < b.invoked_at || (r == b.invoked_at && a.process == b.process && a.op_id != b.op_id)
        }
        None => false,
    }
}

/// Operation records of a simulated run. Incomplete writes get the tag they
/// were propagated with, when they got that far.
pub fn extract_history(trace: &Trace) -> History {
    let mut pending_tags: BTreeMap<u64, Tag> = BTreeMap::new();
    for s in &trace.sends {
        if let (MsgKind::WriteRequest, Some(op), Some(tag)) = (s.kind, s.op_id, s.tag) {
            if s.from.role == crate::types::Role::Writer {
                pending_tags.insert(op, tag);
            }
        }
    }
    let ops = trace
        .ops
        .iter()
        .cloned()
        .map(|mut o| {
            if o.kind == OpKind::Write && o.tag.is_none() {
                o.tag = pending_tags.get(&o.op_id).copied();
            }
            o
        })
        .collect();
    // the simulator never overlaps a client's operations
    History { ops }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    A1,
    A2,
    A3,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::A1 => "A1",
            Property::A2 => "A2",
            Property::A3 => "A3",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub property: Property,
    /// Offending operation ids.
    pub witness: (u64, u64),
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verdict {
    pub violation: Option<Violation>,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.violation.is_none()
    }

    pub fn violated(&self) -> Option<Property> {
        self.violation.as_ref().map(|v| v.property)
    }

    pub fn witness(&self) -> Option<(u64, u64)> {
        self.violation.as_ref().map(|v| v.witness)
    }

    fn fail(property: Property, witness: (u64, u64), detail: String) -> Self {
        Self {
            violation: Some(Violation {
                property,
                witness,
                detail,
            }),
        }
    }

    /// Line-oriented report, `key<TAB>value`.
    pub fn report(&self) -> String {
        match &self.violation {
            None => "verdict\tok\n".to_string(),
            Some(v) => format!(
                "verdict\tviolated\nproperty\t{}\nwitness\t{}\t{}\ndetail\t{}\n",
                v.property, v.witness.0, v.witness.1, v.detail
            ),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => f.write_str("ok"),
            Some(v) => write!(
                f,
                "{} violated by ops {} and {}: {}",
                v.property, v.witness.0, v.witness.1, v.detail
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CheckMode {
    /// Completed operations, plus incomplete writes whose value some read returned.
    #[default]
    Completed,
    /// Also every incomplete write with a known tag, treated as never responding.
    Strict,
}

pub fn check_atomicity_tagged(history: &History) -> Result<Verdict> {
    check_atomicity_tagged_with(history, CheckMode::Completed)
}

pub fn check_atomicity_tagged_with(history: &History, mode: CheckMode) -> Result<Verdict> {
    let ops = history.ops();
    validate(ops)?;

    let returned: Vec<&Value> = ops
        .iter()
        .filter(|o| o.kind == OpKind::Read && o.is_complete())
        .filter_map(|o| o.value.as_ref())
        .collect();
    let mut pi: Vec<&OperationRecord> = Vec::new();
    for o in ops {
        let include = match (o.kind, o.is_complete()) {
            (_, true) => true,
            (OpKind::Read, false) => false,
            (OpKind::Write, false) => match mode {
                CheckMode::Strict => o.tag.is_some(),
                CheckMode::Completed => {
                    o.tag.is_some() && o.value.as_ref().is_some_and(|v| returned.contains(&v))
                }
            },
        };
        if include {
            let Some(_) = o.tag else {
                return Err(Error::InvalidHistory(format!(
                    "completed op {} carries no tag",
                    o.op_id
                )));
            };
            if o.value.is_none() {
                return Err(Error::InvalidHistory(format!(
                    "op {} carries no value",
                    o.op_id
                )));
            }
            pi.push(o);
        }
    }
    let tag = |o: &OperationRecord| o.tag.unwrap();

    // A2: write tags are unique and above the initial tag
    let mut writes: BTreeMap<Tag, &OperationRecord> = BTreeMap::new();
    for &w in pi.iter().filter(|o| o.kind == OpKind::Write) {
        if tag(w) == Tag::INITIAL {
            return Ok(Verdict::fail(
                Property::A2,
                (w.op_id, w.op_id),
                format!("write {} uses the initial tag", w.op_id),
            ));
        }
        if let Some(other) = writes.insert(tag(w), w) {
            return Ok(Verdict::fail(
                Property::A2,
                (other.op_id, w.op_id),
                format!(
                    "writes {} and {} share tag {}",
                    other.op_id,
                    w.op_id,
                    tag(w)
                ),
            ));
        }
    }

    // A3: every read returns some write's value, or the initial value
    for &r in pi.iter().filter(|o| o.kind == OpKind::Read) {
        let (t, v) = (tag(r), r.value.as_ref().unwrap());
        let legal = match writes.get(&t) {
            Some(w) => w.value.as_ref() == Some(v),
            None => t == Tag::INITIAL && v.is_initial(),
        };
        if !legal {
            let witness = writes.get(&t).map_or(r.op_id, |w| w.op_id);
            return Ok(Verdict::fail(
                Property::A3,
                (witness, r.op_id),
                format!(
                    "read {} returns ({t}, {v}) which no write produced",
                    r.op_id
                ),
            ));
        }
    }

    // real-time order against tag order
    let mut by_response: Vec<&OperationRecord> =
        pi.iter().copied().filter(|o| o.is_complete()).collect();
    by_response.sort_by_key(|o| o.responded_at);
    for &b in &pi {
        for &a in &by_response {
            if a.responded_at.unwrap() > b.invoked_at {
                break;
            }
            if !happens_before(a, b) {
                continue;
            }
            if let Some(v) = real_time_violation(a, b, tag(a), tag(b)) {
                return Ok(v);
            }
        }
    }
    Ok(Verdict::default())
}

/// `a` responded before `b` was invoked.
fn real_time_violation(
    a: &OperationRecord,
    b: &OperationRecord,
    ta: Tag,
    tb: Tag,
) -> Option<Verdict> {
    let w = (a.op_id, b.op_id);
    match (a.kind, b.kind) {
        (OpKind::Write, OpKind::Write) if tb <= ta => Some(Verdict::fail(
            Property::A1,
            w,
            format!("write {} ({tb}) follows write {} ({ta})", b.op_id, a.op_id),
        )),
        (OpKind::Write, OpKind::Read) if tb < ta => Some(Verdict::fail(
            Property::A3,
            w,
            format!(
                "read {} returns {tb} after write {} of {ta} completed",
                b.op_id, a.op_id
            ),
        )),
        (OpKind::Read, OpKind::Write) if tb <= ta => Some(Verdict::fail(
            Property::A1,
            w,
            format!(
                "write {} ({tb}) starts after read {} returned {ta}",
                b.op_id, a.op_id
            ),
        )),
        (OpKind::Read, OpKind::Read) if tb < ta => Some(Verdict::fail(
            Property::A1,
            w,
            format!(
                "read {} returns {tb} after read {} returned {ta}",
                b.op_id, a.op_id
            ),
        )),
        _ => None,
    }
}
