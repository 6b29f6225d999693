//! Quorum systems over at most 64 servers, identified `0..n`.

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_SERVERS: usize = 64;

/// Majority systems enumerate every quorum; keep that list tractable.
pub const MAX_MAJORITY_SERVERS: usize = 20;

/// A set of server ids backed by a 64-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServerSet(u64);

impl ServerSet {
    pub const EMPTY: ServerSet = ServerSet(0);

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            Self(u64::MAX)
        } else {
            Self((1u64 << n) - 1)
        }
    }

    pub fn singleton(s: u32) -> Self {
        Self(1u64 << s)
    }

    pub fn insert(&mut self, s: u32) {
        self.0 |= 1u64 << s;
    }

    pub fn remove(&mut self, s: u32) {
        self.0 &= !(1u64 << s);
    }

    pub fn contains(self, s: u32) -> bool {
        s < 64 && self.0 & (1u64 << s) != 0
    }

    pub fn is_subset(self, other: ServerSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersection(self, other: ServerSet) -> ServerSet {
        Self(self.0 & other.0)
    }

    pub fn union(self, other: ServerSet) -> ServerSet {
        Self(self.0 | other.0)
    }

    pub fn difference(self, other: ServerSet) -> ServerSet {
        Self(self.0 & !other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in increasing id order.
    pub fn iter(self) -> impl Iterator<Item = u32> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let s = bits.trailing_zeros();
                bits &= bits - 1;
                Some(s)
            }
        })
    }
}

impl FromIterator<u32> for ServerSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut set = ServerSet::EMPTY;
        for s in iter {
            set.insert(s);
        }
        set
    }
}

impl fmt::Debug for ServerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// An ordered list of pairwise-intersecting quorums over a server universe.
///
/// List order is the iteration order used by every "first quorum" scan, so
/// the quorum a client acts on is reproducible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuorumSystem {
    n_servers: usize,
    quorums: Vec<ServerSet>,
}

impl QuorumSystem {
    /// All subsets of size `n/2 + 1`, in lexicographic order of members.
    pub fn majority(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_MAJORITY_SERVERS {
            return Err(Error::InvalidParameter(format!(
                "majority quorums need 1..={MAX_MAJORITY_SERVERS} servers, got {n}"
            )));
        }
        let k = n / 2 + 1;
        let mut quorums = Vec::new();
        let mut chosen: Vec<u32> = (0..k as u32).collect();
        loop {
            quorums.push(chosen.iter().copied().collect());
            // advance to the next k-combination in lexicographic order
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(Self {
                        n_servers: n,
                        quorums,
                    });
                }
                i -= 1;
                if (chosen[i] as usize) < n - k + i {
                    break;
                }
            }
            chosen[i] += 1;
            for j in i + 1..k {
                chosen[j] = chosen[j - 1] + 1;
            }
        }
    }

    /// Servers laid out row-major in a `rows x cols` grid; one quorum per
    /// (row, column) pair, holding that whole row and that whole column.
    pub fn matrix(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols > MAX_SERVERS {
            return Err(Error::InvalidParameter(format!(
                "matrix quorums need non-zero dimensions with at most {MAX_SERVERS} cells, got {rows}x{cols}"
            )));
        }
        let cell = |r: usize, c: usize| (r * cols + c) as u32;
        let mut quorums = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let row: ServerSet = (0..cols).map(|j| cell(r, j)).collect();
                let col: ServerSet = (0..rows).map(|i| cell(i, c)).collect();
                quorums.push(row.union(col));
            }
        }
        Ok(Self {
            n_servers: rows * cols,
            quorums,
        })
    }

    /// A caller-supplied list, accepted only if it forms a quorum system.
    pub fn from_sets(n_servers: usize, quorums: Vec<ServerSet>) -> Result<Self> {
        if n_servers == 0 || n_servers > MAX_SERVERS {
            return Err(Error::InvalidParameter(format!(
                "universe size must be 1..={MAX_SERVERS}, got {n_servers}"
            )));
        }
        let qs = Self { n_servers, quorums };
        if !qs.validate() {
            return Err(Error::InvalidParameter(
                "quorums must be non-empty, inside the universe and pairwise intersecting".into(),
            ));
        }
        Ok(qs)
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    pub fn universe(&self) -> ServerSet {
        ServerSet::full(self.n_servers)
    }

    pub fn quorums(&self) -> &[ServerSet] {
        &self.quorums
    }

    pub fn quorum(&self, index: usize) -> ServerSet {
        self.quorums[index]
    }

    pub fn len(&self) -> usize {
        self.quorums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quorums.is_empty()
    }

    pub fn validate(&self) -> bool {
        let universe = self.universe();
        !self.quorums.is_empty()
            && self
                .quorums
                .iter()
                .all(|q| !q.is_empty() && q.is_subset(universe))
            && self.quorums.iter().enumerate().all(|(i, a)| {
                self.quorums[i + 1..]
                    .iter()
                    .all(|b| !a.intersection(*b).is_empty())
            })
    }

    /// Index of the first quorum (in list order) wholly inside `responders`.
    pub fn first_contained_quorum(&self, responders: ServerSet) -> Option<usize> {
        self.quorums.iter().position(|q| q.is_subset(responders))
    }

    /// Union of every quorum that contains `s`.
    pub fn relay_destinations(&self, s: u32) -> ServerSet {
        self.quorums
            .iter()
            .filter(|q| q.contains(s))
            .fold(ServerSet::EMPTY, |acc, q| acc.union(*q))
    }

    /// True if some quorum avoids every server in `crashed`.
    pub fn survives(&self, crashed: ServerSet) -> bool {
        self.quorums
            .iter()
            .any(|q| q.intersection(crashed).is_empty())
    }
}
