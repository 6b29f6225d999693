use super::*;
use crate::quorum::{QuorumSystem, ServerSet};
use crate::types::{Message, MsgKind, ProcessId, Tag, Value};

const R: ProcessId = ProcessId::reader(0);

fn s(i: u32) -> ProcessId {
    ProcessId::server(i)
}

fn val(ts: u64) -> Value {
    Value::for_write(0, ts, 16)
}

fn relay(from: u32, op: u64, tag: Tag) -> Event {
    Event::Deliver(Message::read_relay(s(from), R, op, tag, val(tag.ts)))
}

fn ack(from: u32, op: u64, tag: Tag) -> Event {
    Event::Deliver(Message::read_ack(s(from), R, op, tag, val(tag.ts)))
}

fn t(ts: u64) -> Tag {
    Tag::new(ts, 0)
}

fn reader(kind: ReaderKind, qs: &QuorumSystem) -> Reader {
    let mut r = Reader::new(R, kind, qs.n_servers());
    r.step(Event::Invoke(Invocation::Read), qs);
    r
}

#[test]
fn read_invocation_broadcasts_request() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut r = Reader::new(R, ReaderKind::Erato, 3);
    let out = r.step(Event::Invoke(Invocation::Read), &qs);
    assert_eq!(r.read_op(), 1);
    assert_eq!(out.sends.len(), 3);
    for (i, (to, m)) in out.sends.iter().enumerate() {
        assert_eq!(*to, s(i as u32));
        assert_eq!(m.kind(), MsgKind::ReadRequest);
        assert_eq!(m.op(), 1);
    }
}

#[test]
fn view1_relays_answer_in_two_exchanges() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut r = reader(ReaderKind::Erato, &qs);
    assert!(r.step(relay(0, 1, t(5)), &qs).response.is_none());
    let resp = r.step(relay(1, 1, t(5)), &qs).response.unwrap();
    assert_eq!((resp.tag, resp.value, resp.exchanges), (t(5), val(5), 2));
    assert!(!r.is_busy());
}

#[test]
fn ack_quorum_returns_minimum_in_three_exchanges() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut r = reader(ReaderKind::Erato, &qs);
    assert!(r.step(ack(0, 1, t(5)), &qs).response.is_none());
    let resp = r.step(ack(1, 1, t(4)), &qs).response.unwrap();
    assert_eq!((resp.tag, resp.value, resp.exchanges), (t(4), val(4), 3));
}

#[test]
fn view2_returns_previous_timestamp() {
    // majority(4), quorum 0 = {0,1,2}
    let qs = QuorumSystem::majority(4).unwrap();
    let mut r = reader(ReaderKind::Erato, &qs);
    r.step(relay(0, 1, t(5)), &qs);
    r.step(relay(1, 1, t(4)), &qs);
    let resp = r.step(relay(2, 1, t(4)), &qs).response.unwrap();
    assert_eq!((resp.tag, resp.exchanges), (t(4), 2));
}

#[test]
fn view2_without_predecessor_falls_back_to_acks() {
    let qs = QuorumSystem::majority(4).unwrap();
    let mut r = reader(ReaderKind::Erato, &qs);
    r.step(relay(0, 1, t(5)), &qs);
    r.step(relay(1, 1, t(3)), &qs);
    assert!(r.step(relay(2, 1, t(3)), &qs).response.is_none());
    assert_eq!(
        r.phase(),
        &ReadPhase::Collect {
            awaiting_acks: true
        }
    );
    // later relays are not re-analysed
    assert!(r.step(relay(3, 1, t(5)), &qs).response.is_none());
    r.step(ack(0, 1, t(5)), &qs);
    r.step(ack(1, 1, t(5)), &qs);
    let resp = r.step(ack(3, 1, t(5)), &qs).response.unwrap();
    assert_eq!((resp.tag, resp.exchanges), (t(5), 3));
}

#[test]
fn view3_waits_for_acks() {
    let qs = QuorumSystem::majority(4).unwrap();
    let mut r = reader(ReaderKind::Erato, &qs);
    r.step(relay(0, 1, t(5)), &qs);
    r.step(relay(1, 1, t(5)), &qs);
    assert!(r.step(relay(2, 1, t(4)), &qs).response.is_none());
    assert_eq!(
        r.phase(),
        &ReadPhase::Collect {
            awaiting_acks: true
        }
    );
}

#[test]
fn stale_messages_are_dropped() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut r = reader(ReaderKind::Erato, &qs);
    r.step(relay(0, 1, t(1)), &qs);
    r.step(relay(1, 1, t(1)), &qs);
    r.step(Event::Invoke(Invocation::Read), &qs);
    let out = r.step(relay(0, 1, t(1)), &qs);
    assert!(out.stale && out.response.is_none());
    let out = r.step(ack(1, 1, t(1)), &qs);
    assert!(out.stale);
}

#[test]
fn swmr_writer_counts_timestamps_and_acks() {
    let qs = QuorumSystem::majority(3).unwrap();
    let w = ProcessId::writer(0);
    let mut writer = SwmrWriter::new(w, 3);
    for k in 1..=3u64 {
        let out = writer.step(Event::Invoke(Invocation::Write(val(k))), &qs);
        assert_eq!(out.sends.len(), 3);
        assert!(out
            .sends
            .iter()
            .all(|(_, m)| m.tag() == Some(Tag::new(k, 0))));
        let a0 = Message::write_ack(s(0), w, k, Tag::new(k, 0));
        assert!(writer.step(Event::Deliver(a0), &qs).response.is_none());
        let a2 = Message::write_ack(s(2), w, k, Tag::new(k, 0));
        let resp = writer.step(Event::Deliver(a2), &qs).response.unwrap();
        assert_eq!((resp.tag, resp.exchanges), (Tag::new(k, 0), 2));
    }
}

#[test]
fn erato_server_relays_and_acks_once() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut srv = Server::new(0, Algorithm::Erato.suite(), &qs);
    let out = srv.step(Event::Deliver(Message::read_request(R, 1)), &qs);
    let dests: Vec<_> = out.sends.iter().map(|(d, _)| *d).collect();
    assert_eq!(dests, vec![s(0), s(1), s(2), R]);
    assert!(out
        .sends
        .iter()
        .all(|(_, m)| m.kind() == MsgKind::ReadRelay));

    // higher tag in a relay is adopted
    srv.step(
        Event::Deliver(Message::write_request(
            ProcessId::writer(0),
            1,
            t(5),
            val(5),
        )),
        &qs,
    );
    assert_eq!(srv.tag(), t(5));
    assert!(srv.step(relay(1, 1, t(7)), &qs).sends.is_empty());
    assert_eq!(srv.tag(), t(7));
    assert_eq!(srv.value(), &val(7));

    // relays from {0,1} complete quorum 0: exactly one ack
    let out = srv.step(relay(0, 1, t(5)), &qs);
    assert_eq!(out.sends.len(), 1);
    let (to, m) = &out.sends[0];
    assert_eq!(
        (*to, m.kind(), m.tag(), m.op()),
        (R, MsgKind::ReadAck, Some(t(7)), 1)
    );
    assert!(srv.step(relay(2, 1, t(5)), &qs).sends.is_empty());

    // a newer read resets the relay set
    srv.step(relay(2, 2, t(1)), &qs);
    assert_eq!(srv.relays_for(R), ServerSet::singleton(2));
    assert_eq!(srv.tag(), t(7));
}

#[test]
fn ohsam_server_does_not_relay_to_reader() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut srv = Server::new(1, Algorithm::OhSam.suite(), &qs);
    let out = srv.step(Event::Deliver(Message::read_request(R, 1)), &qs);
    assert_eq!(out.sends.len(), 3);
    assert!(out.sends.iter().all(|(d, _)| d.is_server()));
}

#[test]
fn ohsam_reader_ignores_uniform_relays() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut r = reader(ReaderKind::AckQuorum, &qs);
    assert!(r.step(relay(0, 1, t(5)), &qs).response.is_none());
    assert!(r.step(relay(1, 1, t(5)), &qs).response.is_none());
    r.step(ack(0, 1, t(6)), &qs);
    let resp = r.step(ack(2, 1, t(5)), &qs).response.unwrap();
    assert_eq!((resp.tag, resp.exchanges), (t(5), 3));
}

fn mw(ts: u64, wid: u32) -> Tag {
    Tag::new(ts, wid)
}

#[test]
fn erato_mw_reader_paths() {
    let qs = QuorumSystem::majority(4).unwrap();
    let mv = |tag: Tag| Value::for_write(tag.wid, tag.ts, 16);
    let rl = |from: u32, tag: Tag| Event::Deliver(Message::read_relay(s(from), R, 1, tag, mv(tag)));
    let ak = |from: u32, tag: Tag| Event::Deliver(Message::read_ack(s(from), R, 1, tag, mv(tag)));

    let mut r = reader(ReaderKind::EratoMw, &qs);
    r.step(rl(0, mw(5, 2)), &qs);
    r.step(rl(1, mw(5, 2)), &qs);
    let resp = r.step(rl(2, mw(5, 2)), &qs).response.unwrap();
    assert_eq!((resp.tag, resp.exchanges), (mw(5, 2), 2));

    let mut r = reader(ReaderKind::EratoMw, &qs);
    r.step(rl(0, mw(5, 2)), &qs);
    r.step(rl(1, mw(4, 1)), &qs);
    let resp = r.step(rl(2, mw(4, 1)), &qs).response.unwrap();
    assert_eq!(
        (resp.tag, resp.value, resp.exchanges),
        (mw(4, 1), mv(mw(4, 1)), 2)
    );

    let mut r = reader(ReaderKind::EratoMw, &qs);
    r.step(rl(0, mw(5, 2)), &qs);
    r.step(rl(1, mw(5, 2)), &qs);
    assert!(r.step(rl(2, mw(4, 1)), &qs).response.is_none());
    r.step(ak(0, mw(5, 2)), &qs);
    r.step(ak(1, mw(6, 1)), &qs);
    let resp = r.step(ak(3, mw(5, 2)), &qs).response.unwrap();
    assert_eq!((resp.tag, resp.exchanges), (mw(5, 2), 3));
}

fn discover(
    writer: &mut MwmrWriter,
    id: ProcessId,
    qs: &QuorumSystem,
    acks: &[(u32, Tag)],
) -> Vec<(ProcessId, Message)> {
    writer.step(Event::Invoke(Invocation::Write(val(99))), qs);
    let mut last = Vec::new();
    for &(from, tag) in acks {
        last = writer
            .step(
                Event::Deliver(Message::discover_ack(s(from), id, 1, tag)),
                qs,
            )
            .sends;
    }
    last
}

#[test]
fn mwmr_writer_picks_next_tag() {
    let qs = QuorumSystem::majority(5).unwrap();
    let w = ProcessId::writer(7);
    let mut writer = MwmrWriter::new(w, 5);
    let sends = discover(
        &mut writer,
        w,
        &qs,
        &[(0, mw(3, 1)), (1, mw(5, 2)), (2, mw(4, 1))],
    );
    assert_eq!(sends.len(), 5);
    assert!(sends
        .iter()
        .all(|(_, m)| m.kind() == MsgKind::WriteRequest && m.op() == 2));
    assert_eq!(writer.phase(), &WritePhase::Put { tag: mw(6, 7) });

    let mut fresh = MwmrWriter::new(w, 5);
    discover(
        &mut fresh,
        w,
        &qs,
        &[(0, Tag::INITIAL), (1, Tag::INITIAL), (2, Tag::INITIAL)],
    );
    assert_eq!(fresh.phase(), &WritePhase::Put { tag: mw(1, 7) });

    // two writers seeing the same maximum still get distinct tags
    let (w1, w2) = (ProcessId::writer(1), ProcessId::writer(2));
    let mut a = MwmrWriter::new(w1, 5);
    let mut b = MwmrWriter::new(w2, 5);
    let seen = [(0, mw(5, 3)), (1, mw(5, 3)), (2, mw(2, 1))];
    discover(&mut a, w1, &qs, &seen);
    discover(&mut b, w2, &qs, &seen);
    assert_eq!(a.phase(), &WritePhase::Put { tag: mw(6, 1) });
    assert_eq!(b.phase(), &WritePhase::Put { tag: mw(6, 2) });

    // put phase completes with 4 exchanges
    for from in 0..2 {
        let out = a.step(
            Event::Deliver(Message::write_ack(s(from), w1, 2, mw(6, 1))),
            &qs,
        );
        assert!(out.response.is_none());
    }
    let stale = a.step(
        Event::Deliver(Message::write_ack(s(3), w1, 1, mw(6, 1))),
        &qs,
    );
    assert!(stale.stale);
    let resp = a
        .step(
            Event::Deliver(Message::write_ack(s(2), w1, 2, mw(6, 1))),
            &qs,
        )
        .response
        .unwrap();
    assert_eq!((resp.tag, resp.exchanges), (mw(6, 1), 4));
}

#[test]
fn mwmr_server_write_handling() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut srv = Server::new(0, Algorithm::EratoMw.suite(), &qs);
    let (w1, w2) = (ProcessId::writer(1), ProcessId::writer(2));

    let out = srv.step(Event::Deliver(Message::write_discover(w1, 1)), &qs);
    assert_eq!(
        out.sends,
        vec![(w1, Message::discover_ack(s(0), w1, 1, Tag::INITIAL))]
    );
    assert_eq!(srv.tag(), Tag::INITIAL);

    srv.step(
        Event::Deliver(Message::write_request(w1, 2, mw(4, 1), val(1))),
        &qs,
    );
    assert_eq!(srv.tag(), mw(4, 1));
    srv.step(
        Event::Deliver(Message::write_request(w2, 2, mw(4, 2), val(2))),
        &qs,
    );
    assert_eq!(srv.tag(), mw(4, 2));

    // a replayed request from an older write_op is acked but not applied
    let mut other = Server::new(1, Algorithm::EratoMw.suite(), &qs);
    other.step(
        Event::Deliver(Message::write_request(w1, 4, mw(2, 1), val(2))),
        &qs,
    );
    let out = other.step(
        Event::Deliver(Message::write_request(w1, 2, mw(9, 1), val(9))),
        &qs,
    );
    assert_eq!(other.tag(), mw(2, 1));
    assert_eq!(
        out.sends,
        vec![(w1, Message::write_ack(s(1), w1, 2, mw(2, 1)))]
    );
}

#[test]
fn abd_read_takes_four_exchanges() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut srvs: Vec<Server> = (0..3)
        .map(|i| Server::new(i, Algorithm::Abd.suite(), &qs))
        .collect();
    let mut r = reader(ReaderKind::Abd, &qs);
    // servers 0 and 2 answer the query; 2 holds a newer tag
    srvs[2].step(
        Event::Deliver(Message::write_request(
            ProcessId::writer(0),
            1,
            t(3),
            val(3),
        )),
        &qs,
    );
    let mut writeback = Vec::new();
    for i in [0, 2] {
        let out = srvs[i].step(Event::Deliver(Message::read_request(R, 1)), &qs);
        assert_eq!(out.sends.len(), 1);
        let (_, m) = out.sends.into_iter().next().unwrap();
        assert_eq!(m.kind(), MsgKind::ReadAck);
        writeback = r.step(Event::Deliver(m), &qs).sends;
    }
    assert_eq!(writeback.len(), 3);
    let (_, wb) = &writeback[0];
    assert_eq!(
        (wb.kind(), wb.client(), wb.tag()),
        (MsgKind::WriteRequest, R, Some(t(3)))
    );
    let mut resp = None;
    for i in [0, 1] {
        let out = srvs[i].step(Event::Deliver(wb.clone()), &qs);
        assert_eq!(srvs[i].tag(), t(3));
        for (_, m) in out.sends {
            resp = resp.or(r.step(Event::Deliver(m), &qs).response);
        }
    }
    let resp = resp.unwrap();
    assert_eq!((resp.tag, resp.exchanges), (t(3), 4));
}

#[test]
fn abd_uniform_read_has_no_fast_path() {
    let qs = QuorumSystem::majority(3).unwrap();
    let mut r = reader(ReaderKind::Abd, &qs);
    r.step(ack(0, 1, t(0)), &qs);
    let wb = r.step(ack(1, 1, t(0)), &qs);
    assert!(wb.response.is_none());
    assert_eq!(wb.sends.len(), 3);
    r.step(Event::Deliver(Message::write_ack(s(0), R, 1, t(0))), &qs);
    let resp = r
        .step(Event::Deliver(Message::write_ack(s(1), R, 1, t(0))), &qs)
        .response
        .unwrap();
    assert_eq!(resp.exchanges, 4);
}

#[test]
fn steps_are_deterministic() {
    let qs = QuorumSystem::majority(4).unwrap();
    let events = [
        relay(0, 1, t(5)),
        relay(1, 1, t(4)),
        ack(0, 1, t(5)),
        relay(2, 1, t(4)),
    ];
    let run = || {
        let mut node = Node::new(R, Algorithm::Erato.suite(), &qs);
        let mut outs = vec![node.step(Event::Invoke(Invocation::Read), &qs)];
        outs.extend(events.iter().cloned().map(|e| node.step(e, &qs)));
        outs
    };
    assert_eq!(run(), run());
}
