use std::collections::BTreeMap;

use crate::netsim::Trace;
use crate::types::{OpKind, ProcessId, Tag};

use super::happens_before;

/// Tag-ordering properties the protocols maintain, checked on one trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LemmaReport {
    /// No server's tag ever decreases.
    pub server_tags_monotone: bool,
    /// A read returns a tag at least that of every write preceding it.
    pub read_after_write: bool,
    /// A write's tag exceeds that of every write preceding it.
    pub write_after_write: bool,
    /// A read returns a tag at least that of every read preceding it.
    pub read_after_read: bool,
    pub violations: Vec<String>,
}

impl LemmaReport {
    pub fn all_hold(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_lemmas(trace: &Trace) -> LemmaReport {
    let mut report = LemmaReport {
        server_tags_monotone: true,
        read_after_write: true,
        write_after_write: true,
        read_after_read: true,
        violations: Vec::new(),
    };

    let mut last: BTreeMap<ProcessId, Tag> = BTreeMap::new();
    for e in &trace.events {
        if let Some(t) = e.server_tag {
            let prev = last.entry(e.node).or_insert(Tag::INITIAL);
            if t < *prev {
                report.server_tags_monotone = false;
                report.violations.push(format!(
                    "{} tag drops from {prev} to {t} at {}",
                    e.node, e.time
                ));
            }
            *prev = t;
        }
    }

    let done: Vec<_> = trace
        .ops
        .iter()
        .filter(|o| o.is_complete() && o.tag.is_some())
        .collect();
    for a in &done {
        for b in &done {
            if !happens_before(a, b) {
                continue;
            }
            let (ta, tb) = (a.tag.unwrap(), b.tag.unwrap());
            let (holds, flag, name) = match (a.kind, b.kind) {
                (OpKind::Write, OpKind::Read) => {
                    (tb >= ta, &mut report.read_after_write, "read-after-write")
                }
                (OpKind::Write, OpKind::Write) => {
                    (tb > ta, &mut report.write_after_write, "write-after-write")
                }
                (OpKind::Read, OpKind::Read) => {
                    (tb >= ta, &mut report.read_after_read, "read-after-read")
                }
                (OpKind::Read, OpKind::Write) => continue,
            };
            if !holds {
                *flag = false;
                report.violations.push(format!(
                    "{name}: op {} ({ta}) then op {} ({tb})",
                    a.op_id, b.op_id
                ));
            }
        }
    }
    report
}
