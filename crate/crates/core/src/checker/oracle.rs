use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::types::{OpKind, OperationRecord, Value};

use super::{happens_before, History};

/// Most completed operations [`brute_force_linearizable`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;
const TOTAL_LIMIT: usize = 24;

/// Whether some total order of the operations respects real time and is a
/// legal sequential register history. Incomplete writes may take effect or
/// not; incomplete reads are ignored. Values identify writes.
pub fn brute_force_linearizable(history: &History) -> Result<bool> {
    let ops: Vec<&OperationRecord> = history
        .ops()
        .iter()
        .filter(|o| o.is_complete() || o.kind == OpKind::Write)
        .collect();
    let completed = ops.iter().filter(|o| o.is_complete()).count();
    if completed > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(completed, BRUTE_FORCE_LIMIT));
    }
    if ops.len() > TOTAL_LIMIT {
        return Err(Error::TooLarge(ops.len(), TOTAL_LIMIT));
    }
    for o in &ops {
        if o.value.is_none() {
            return Err(Error::InvalidHistory(format!(
                "op {} carries no value",
                o.op_id
            )));
        }
    }

    let pred: Vec<u32> = ops
        .iter()
        .map(|b| {
            ops.iter()
                .enumerate()
                .filter(|(_, a)| happens_before(a, b))
                .fold(0u32, |m, (j, _)| m | 1 << j)
        })
        .collect();
    let required = ops
        .iter()
        .enumerate()
        .filter(|(_, o)| o.is_complete())
        .fold(0u32, |m, (j, _)| m | 1 << j);

    let search = Search {
        ops: &ops,
        pred: &pred,
        required,
        initial: Value::initial(),
    };
    let mut failed = HashSet::new();
    Ok(search.dfs(0, None, &mut failed))
}

struct Search<'a> {
    ops: &'a [&'a OperationRecord],
    pred: &'a [u32],
    required: u32,
    initial: Value,
}

impl Search<'_> {
    /// `current`: index of the write whose value the register holds.
    fn dfs(
        &self,
        placed: u32,
        current: Option<usize>,
        failed: &mut HashSet<(u32, Option<usize>)>,
    ) -> bool {
        if placed & self.required == self.required {
            return true;
        }
        if failed.contains(&(placed, current)) {
            return false;
        }
        let held = current.map_or(&self.initial, |i| self.ops[i].value.as_ref().unwrap());
        for (i, op) in self.ops.iter().enumerate() {
            let bit = 1u32 << i;
            if placed & bit != 0 || self.pred[i] & !placed != 0 {
                continue;
            }
            let next = match op.kind {
                OpKind::Write => Some(i),
                OpKind::Read if op.value.as_ref() == Some(held) => current,
                OpKind::Read => continue,
            };
            if self.dfs(placed | bit, next, failed) {
                return true;
            }
        }
        failed.insert((placed, current));
        false
    }
}
