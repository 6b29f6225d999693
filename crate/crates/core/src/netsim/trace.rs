//! Execution traces and their log format. One record per line, fields
//! separated by single tabs (shown as spaces below).
//!
//! ```text
//! erato-trace 1
//! meta <key> <value>
//! crash <node> <time_ns>
//! op <op_id> <process> <read|write> <invoked_ns> <responded_ns|-> <tag|-> <value|-> <exchanges> <messages>
//! ev <time_ns> <node> invoke <op_id> <sends> <server_tag|-> <responded_op|->
//! ev <time_ns> <node> deliver <message> <sends> <server_tag|-> <responded_op|->
//! ev <time_ns> <node> crash - 0 - -
//! send <time_ns> <from> <to> <deliver_ns> <kind> <tag|-> <op_id|->
//! end <time_ns> <complete|incomplete> <stale_drops>
//! ```
//!
//! Values are hex, `~` for the initial value and `-` for absent.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::types::{Message, MsgKind, OpKind, OperationRecord, ProcessId, SimTime, Tag, Value};

const MAGIC: &str = "erato-trace";
const VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Invoke(u64),
    Deliver(Message),
    Crash,
}

/// One step taken by one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: SimTime,
    pub node: ProcessId,
    pub action: Action,
    pub sends: u32,
    /// Replica tag after the step, for servers.
    pub server_tag: Option<Tag>,
    /// Operation completed by this step, if any.
    pub responded: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SendRecord {
    pub time: SimTime,
    pub from: ProcessId,
    pub to: ProcessId,
    pub deliver_at: SimTime,
    pub kind: MsgKind,
    pub tag: Option<Tag>,
    /// Operation the message is attributed to.
    pub op_id: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub meta: Vec<(String, String)>,
    pub crashes: Vec<(ProcessId, SimTime)>,
    pub ops: Vec<OperationRecord>,
    pub events: Vec<TraceEvent>,
    pub sends: Vec<SendRecord>,
    pub end_time: SimTime,
    /// The time cap was reached while a live client still had work.
    pub incomplete: bool,
    pub stale_drops: u64,
    /// Wall-clock time spent in protocol steps, per operation. Not part of
    /// the log, so traces stay byte-identical across runs.
    pub compute: BTreeMap<u64, Duration>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn value_field(v: Option<&Value>) -> String {
    match v {
        None => "-".into(),
        Some(v) if v.is_initial() => "~".into(),
        Some(v) => v.to_hex(),
    }
}

impl Trace {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn op(&self, op_id: u64) -> Option<&OperationRecord> {
        self.ops.iter().find(|o| o.op_id == op_id)
    }

    pub fn crash_time(&self, node: ProcessId) -> Option<SimTime> {
        self.crashes
            .iter()
            .find(|(n, _)| *n == node)
            .map(|&(_, t)| t)
    }

    pub fn to_log(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}\t{VERSION}");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta\t{k}\t{v}");
        }
        for (n, t) in &self.crashes {
            let _ = writeln!(out, "crash\t{n}\t{t}");
        }
        for o in &self.ops {
            let _ = writeln!(
                out,
                "op\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                o.op_id,
                o.process,
                o.kind,
                o.invoked_at,
                opt(o.responded_at),
                opt(o.tag),
                value_field(o.value.as_ref()),
                o.exchanges,
                o.messages
            );
        }
        for e in &self.events {
            let (name, arg) = match &e.action {
                Action::Invoke(op) => ("invoke", op.to_string()),
                Action::Deliver(m) => ("deliver", m.encode()),
                Action::Crash => ("crash", "-".to_string()),
            };
            let _ = writeln!(
                out,
                "ev\t{}\t{}\t{name}\t{arg}\t{}\t{}\t{}",
                e.time,
                e.node,
                e.sends,
                opt(e.server_tag),
                opt(e.responded)
            );
        }
        for s in &self.sends {
            let _ = writeln!(
                out,
                "send\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.time,
                s.from,
                s.to,
                s.deliver_at,
                s.kind,
                opt(s.tag),
                opt(s.op_id)
            );
        }
        let _ = writeln!(
            out,
            "end\t{}\t{}\t{}",
            self.end_time,
            if self.incomplete {
                "incomplete"
            } else {
                "complete"
            },
            self.stale_drops
        );
        out
    }

    pub fn parse_log(text: &str) -> Result<Trace> {
        let mut trace = Trace::default();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == format!("{MAGIC}\t{VERSION}") => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing trace header".into(),
                })
            }
        }
        let mut ended = false;
        for (i, line) in lines {
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let err = |msg: String| Error::Parse { line: lineno, msg };
            let want = |n: usize| {
                if f.len() == n {
                    Ok(())
                } else {
                    Err(err(format!(
                        "{} expects {n} fields, found {}",
                        f[0],
                        f.len()
                    )))
                }
            };
            let wrap = |e: Error| err(e.to_string());
            match f[0] {
                "meta" => {
                    want(3)?;
                    trace.meta.push((f[1].to_string(), f[2].to_string()));
                }
                "crash" => {
                    want(3)?;
                    trace
                        .crashes
                        .push((f[1].parse().map_err(wrap)?, parse_time(f[2]).map_err(wrap)?));
                }
                "op" => {
                    want(10)?;
                    trace.ops.push(OperationRecord {
                        op_id: parse_num(f[1]).map_err(wrap)?,
                        process: f[2].parse().map_err(wrap)?,
                        kind: f[3].parse::<OpKind>().map_err(wrap)?,
                        invoked_at: parse_time(f[4]).map_err(wrap)?,
                        responded_at: parse_opt(f[5], parse_time).map_err(wrap)?,
                        tag: parse_opt(f[6], str::parse::<Tag>).map_err(wrap)?,
                        value: match f[7] {
                            "-" => None,
                            "~" => Some(Value::initial()),
                            v => Some(Value::from_hex(v).map_err(wrap)?),
                        },
                        exchanges: parse_num(f[8]).map_err(wrap)? as u32,
                        messages: parse_num(f[9]).map_err(wrap)?,
                    });
                }
                "ev" => {
                    want(8)?;
                    let action = match f[3] {
                        "invoke" => Action::Invoke(parse_num(f[4]).map_err(wrap)?),
                        "deliver" => Action::Deliver(Message::decode(f[4]).map_err(wrap)?),
                        "crash" => Action::Crash,
                        other => return Err(err(format!("unknown event {other:?}"))),
                    };
                    trace.events.push(TraceEvent {
                        time: parse_time(f[1]).map_err(wrap)?,
                        node: f[2].parse().map_err(wrap)?,
                        action,
                        sends: parse_num(f[5]).map_err(wrap)? as u32,
                        server_tag: parse_opt(f[6], str::parse::<Tag>).map_err(wrap)?,
                        responded: parse_opt(f[7], parse_num).map_err(wrap)?,
                    });
                }
                "send" => {
                    want(8)?;
                    trace.sends.push(SendRecord {
                        time: parse_time(f[1]).map_err(wrap)?,
                        from: f[2].parse().map_err(wrap)?,
                        to: f[3].parse().map_err(wrap)?,
                        deliver_at: parse_time(f[4]).map_err(wrap)?,
                        kind: f[5].parse().map_err(wrap)?,
                        tag: parse_opt(f[6], str::parse::<Tag>).map_err(wrap)?,
                        op_id: parse_opt(f[7], parse_num).map_err(wrap)?,
                    });
                }
                "end" => {
                    want(4)?;
                    trace.end_time = parse_time(f[1]).map_err(wrap)?;
                    trace.incomplete = match f[2] {
                        "complete" => false,
                        "incomplete" => true,
                        other => return Err(err(format!("bad end status {other:?}"))),
                    };
                    trace.stale_drops = parse_num(f[3]).map_err(wrap)?;
                    ended = true;
                }
                other => return Err(err(format!("unknown record {other:?}"))),
            }
        }
        if !ended {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: "truncated trace: no end record".into(),
            });
        }
        Ok(trace)
    }
}

fn parse_num(s: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("bad number {s:?}")))
}

fn parse_time(s: &str) -> Result<SimTime> {
    parse_num(s).map(SimTime)
}

fn parse_opt<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
    if s == "-" {
        Ok(None)
    } else {
        f(s).map(Some)
    }
}
