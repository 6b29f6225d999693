use super::*;
use crate::protocols::{Algorithm, Invocation};
use crate::quorum::QuorumSystem;
use crate::types::{MsgKind, ProcessId, SimTime, Value};

fn secs(s: f64) -> SimTime {
    SimTime::from_secs_f64(s)
}

fn write(w: u32, seq: u64, at: f64) -> PlannedOp {
    PlannedOp {
        at: secs(at),
        process: ProcessId::writer(w),
        invocation: Invocation::Write(Value::for_write(w, seq, 64)),
    }
}

fn read(r: u32, at: f64) -> PlannedOp {
    PlannedOp {
        at: secs(at),
        process: ProcessId::reader(r),
        invocation: Invocation::Read,
    }
}

fn setup(n: usize, readers: usize, writers: usize) -> (Network, QuorumSystem) {
    let net = build_topology(&TopologySpec::series(n), n, readers, writers).unwrap();
    (net, QuorumSystem::majority(n).unwrap())
}

fn mixed_workload(readers: u32, writers: u32, rounds: u32) -> Vec<PlannedOp> {
    let mut ops = Vec::new();
    for i in 0..rounds {
        for w in 0..writers {
            ops.push(write(w, i as u64 + 1, 0.013 * i as f64 + 0.001 * w as f64));
        }
        for r in 0..readers {
            ops.push(read(r, 0.011 * i as f64 + 0.0007 * r as f64));
        }
    }
    ops
}

#[test]
fn single_write_on_three_servers() {
    let (net, qs) = setup(3, 0, 1);
    let trace = run(
        &net,
        &qs,
        Algorithm::Erato.suite(),
        0,
        1,
        vec![write(0, 1, 0.0)],
        &[],
        SimConfig::default(),
    )
    .unwrap();
    let from_writer: Vec<_> = trace
        .sends
        .iter()
        .filter(|s| s.from == ProcessId::writer(0))
        .collect();
    assert_eq!(from_writer.len(), 3);
    assert!(from_writer.iter().all(|s| s.kind == MsgKind::WriteRequest));
    let acks = trace
        .events
        .iter()
        .filter(|e| matches!(&e.action, Action::Deliver(m) if m.kind() == MsgKind::WriteAck))
        .count();
    assert!(acks >= 2);
    let op = trace.op(1).unwrap();
    assert!(op.is_complete());
    assert_eq!(op.exchanges, 2);
    assert_eq!(op.messages, 6);
    assert!(!trace.incomplete);
}

#[test]
fn one_server_crash_keeps_every_algorithm_live() {
    for alg in [
        Algorithm::Erato,
        Algorithm::EratoMw,
        Algorithm::Abd,
        Algorithm::AbdMw,
        Algorithm::OhSam,
        Algorithm::OhMam,
    ] {
        let writers = if alg.is_multi_writer() { 2 } else { 1 };
        let (net, qs) = setup(3, 2, writers);
        let crashes = [Crash {
            node: ProcessId::server(1),
            at: SimTime::ZERO,
        }];
        let trace = run(
            &net,
            &qs,
            alg.suite(),
            2,
            writers,
            mixed_workload(2, writers as u32, 3),
            &crashes,
            SimConfig::default(),
        )
        .unwrap();
        assert!(!trace.incomplete, "{alg}");
        assert!(trace.ops.iter().all(|o| o.is_complete()), "{alg}");
        assert!(trace
            .events
            .iter()
            .all(|e| e.node != ProcessId::server(1) || e.action == Action::Crash));
    }
}

#[test]
fn crashing_a_majority_is_rejected() {
    let (net, qs) = setup(3, 1, 1);
    let crashes = [
        Crash {
            node: ProcessId::server(0),
            at: SimTime::ZERO,
        },
        Crash {
            node: ProcessId::server(1),
            at: secs(1.0),
        },
    ];
    let res = run(
        &net,
        &qs,
        Algorithm::Erato.suite(),
        1,
        1,
        vec![],
        &crashes,
        SimConfig::default(),
    );
    assert!(res.is_err());
}

#[test]
fn empty_workload_ends_at_zero() {
    let (net, qs) = setup(3, 1, 1);
    let trace = run(
        &net,
        &qs,
        Algorithm::Erato.suite(),
        1,
        1,
        vec![],
        &[],
        SimConfig::default(),
    )
    .unwrap();
    assert_eq!(trace.end_time, SimTime::ZERO);
    assert!(trace.ops.is_empty() && trace.sends.is_empty());
    assert!(!trace.incomplete);
}

#[test]
fn reader_crash_mid_operation_is_not_a_liveness_failure() {
    let (net, qs) = setup(3, 1, 1);
    let crashes = [Crash {
        node: ProcessId::reader(0),
        at: secs(0.005),
    }];
    let trace = run(
        &net,
        &qs,
        Algorithm::Erato.suite(),
        1,
        1,
        vec![read(0, 0.0), write(0, 1, 0.0)],
        &crashes,
        SimConfig::default(),
    )
    .unwrap();
    let r = trace
        .ops
        .iter()
        .find(|o| o.process == ProcessId::reader(0))
        .unwrap();
    assert!(!r.is_complete());
    assert!(trace
        .ops
        .iter()
        .find(|o| o.process == ProcessId::writer(0))
        .unwrap()
        .is_complete());
    assert!(!trace.incomplete);
}

#[test]
fn busy_client_defers_its_next_invocation() {
    let (net, qs) = setup(3, 1, 1);
    let trace = run(
        &net,
        &qs,
        Algorithm::Erato.suite(),
        1,
        1,
        vec![read(0, 0.0), read(0, 0.0001)],
        &[],
        SimConfig::default(),
    )
    .unwrap();
    let (a, b) = (trace.op(1).unwrap(), trace.op(2).unwrap());
    assert_eq!(b.invoked_at, a.responded_at.unwrap());
    assert!(a.precedes(b) || a.responded_at == Some(b.invoked_at));
}

#[test]
fn same_seed_same_trace() {
    let (net, qs) = setup(5, 3, 2);
    let go = |seed| {
        let cfg = SimConfig {
            seed,
            ..SimConfig::default()
        };
        run(
            &net,
            &qs,
            Algorithm::EratoMw.suite(),
            3,
            2,
            mixed_workload(3, 2, 4),
            &[],
            cfg,
        )
        .unwrap()
        .to_log()
    };
    assert_eq!(go(7), go(7));
    assert_ne!(go(7), go(8));
}

#[test]
fn causality_and_message_accounting() {
    let (net, qs) = setup(5, 3, 2);
    let trace = run(
        &net,
        &qs,
        Algorithm::OhMam.suite(),
        3,
        2,
        mixed_workload(3, 2, 4),
        &[],
        SimConfig {
            jitter_max: 0.005,
            ..SimConfig::default()
        },
    )
    .unwrap();
    for s in &trace.sends {
        if s.from != s.to {
            assert!(s.deliver_at > s.time);
            let floor = net.path(s.from, s.to).unwrap().propagation_s;
            assert!(s.deliver_at.as_secs_f64() - s.time.as_secs_f64() >= floor - 1e-9);
        }
        assert!(s.op_id.is_some());
    }
    let total: u64 = trace.ops.iter().map(|o| o.messages).sum();
    assert_eq!(total, trace.sends.len() as u64);
    let mut last = SimTime::ZERO;
    for e in &trace.events {
        assert!(e.time >= last);
        last = e.time;
    }
}

#[test]
fn trace_log_round_trip() {
    let (net, qs) = setup(3, 2, 1);
    let crashes = [Crash {
        node: ProcessId::server(2),
        at: secs(0.02),
    }];
    let trace = run(
        &net,
        &qs,
        Algorithm::Erato.suite(),
        2,
        1,
        mixed_workload(2, 1, 3),
        &crashes,
        SimConfig::default(),
    )
    .unwrap();
    let log = trace.to_log();
    let back = Trace::parse_log(&log).unwrap();
    assert_eq!(back.to_log(), log);
    assert_eq!(back.ops, trace.ops);
    assert_eq!(back.events, trace.events);

    let truncated: String = log.lines().take(10).map(|l| format!("{l}\n")).collect();
    assert!(Trace::parse_log(&truncated).is_err());
    assert!(Trace::parse_log("nonsense\n").is_err());
}

#[test]
fn cap_marks_pending_work_incomplete() {
    let (net, qs) = setup(3, 1, 1);
    let cfg = SimConfig {
        cap: secs(0.001),
        ..SimConfig::default()
    };
    let trace = run(
        &net,
        &qs,
        Algorithm::Abd.suite(),
        1,
        1,
        vec![read(0, 0.0)],
        &[],
        cfg,
    )
    .unwrap();
    assert!(trace.incomplete);
}

#[test]
fn invalid_workload_is_rejected() {
    let (net, qs) = setup(3, 1, 1);
    let bad = PlannedOp {
        at: SimTime::ZERO,
        process: ProcessId::reader(0),
        invocation: Invocation::Write(Value::for_write(0, 1, 64)),
    };
    assert!(run(
        &net,
        &qs,
        Algorithm::Erato.suite(),
        1,
        1,
        vec![bad],
        &[],
        SimConfig::default()
    )
    .is_err());
    assert!(run(
        &net,
        &qs,
        Algorithm::Erato.suite(),
        1,
        1,
        vec![read(4, 0.0)],
        &[],
        SimConfig::default()
    )
    .is_err());
}
