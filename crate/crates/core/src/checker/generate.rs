use rand::Rng;

use crate::types::{OpKind, OperationRecord, ProcessId, SimTime, Tag, Value};

use super::History;

/// A random single-writer history with at most `max_ops` completed
/// operations. Reads return the value of some write (or the initial value)
/// with its matching tag, so the result may or may not be atomic. The last
/// write is sometimes left pending.
pub fn random_swmr_history<R: Rng + ?Sized>(rng: &mut R, max_ops: usize) -> History {
    let max_ops = max_ops.max(1);
    let n_writes = rng.gen_range(0..=3.min(max_ops - 1));
    let n_reads = rng.gen_range(1..=max_ops - n_writes);
    let n_readers = rng.gen_range(1..=3u32);
    let mut ops = Vec::new();
    let mut next_id = 1u64;

    let mut t = 0u64;
    let writes: Vec<(u64, Option<u64>)> = (0..n_writes)
        .map(|k| {
            let start = t + rng.gen_range(0..20);
            let end = start + rng.gen_range(1..30);
            t = end;
            let pending = k + 1 == n_writes && rng.gen_bool(0.2);
            (start, (!pending).then_some(end))
        })
        .collect();
    for (k, &(start, end)) in writes.iter().enumerate() {
        let seq = k as u64 + 1;
        ops.push(OperationRecord {
            op_id: next_id,
            process: ProcessId::writer(0),
            kind: OpKind::Write,
            invoked_at: SimTime(start),
            responded_at: end.map(SimTime),
            tag: Some(Tag::new(seq, 0)),
            value: Some(Value::for_write(0, seq, 16)),
            exchanges: 0,
            messages: 0,
        });
        next_id += 1;
    }

    let mut clocks = vec![0u64; n_readers as usize];
    for _ in 0..n_reads {
        let r = rng.gen_range(0..n_readers);
        let clock = &mut clocks[r as usize];
        let start = *clock + rng.gen_range(0..25);
        let end = start + rng.gen_range(1..40);
        *clock = end;
        let seq = if rng.gen_bool(0.5) {
            // the latest write invoked before the read responds
            writes.iter().take_while(|w| w.0 <= end).count() as u64
        } else {
            rng.gen_range(0..=n_writes as u64)
        };
        let (tag, value) = if seq == 0 {
            (Tag::INITIAL, Value::initial())
        } else {
            (Tag::new(seq, 0), Value::for_write(0, seq, 16))
        };
        ops.push(OperationRecord {
            op_id: next_id,
            process: ProcessId::reader(r),
            kind: OpKind::Read,
            invoked_at: SimTime(start),
            responded_at: Some(SimTime(end)),
            tag: Some(tag),
            value: Some(value),
            exchanges: 0,
            messages: 0,
        });
        next_id += 1;
    }
    History::new(ops).expect("generated histories are well formed")
}
