use std::fmt;
use std::str::FromStr;

use toml::{Table, Value as Toml};

use crate::error::{ConfigIssue, Error, Result};
use crate::netsim::{Crash, TopologyKind, DEFAULT_CAP_S, DEFAULT_JITTER_MAX_S};
use crate::protocols::Algorithm;
use crate::quorum::{QuorumSystem, ServerSet, MAX_MAJORITY_SERVERS, MAX_SERVERS};
use crate::types::{ProcessId, SimTime, DEFAULT_VALUE_OCTETS, MIN_VALUE_OCTETS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuorumKind {
    Majority,
    Matrix,
}

impl QuorumKind {
    pub fn name(self) -> &'static str {
        match self {
            QuorumKind::Majority => "majority",
            QuorumKind::Matrix => "matrix",
        }
    }
}

impl fmt::Display for QuorumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuorumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(QuorumKind::Majority),
            "matrix" => Ok(QuorumKind::Matrix),
            _ => Err(Error::InvalidInput(format!("unknown quorum kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// The i-th operation of a client at `i * interval`.
    Fixed,
    /// The i-th operation at a uniformly random millisecond of the i-th interval.
    Stochastic,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Fixed => "fixed",
            Scheme::Stochastic => "stochastic",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Scheme::Fixed),
            "stochastic" => Ok(Scheme::Stochastic),
            _ => Err(Error::InvalidInput(format!("unknown scheme {s:?}"))),
        }
    }
}

/// A validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub algorithm: Algorithm,
    pub topology: TopologyKind,
    pub n_servers: usize,
    pub quorum: QuorumKind,
    pub n_readers: usize,
    pub n_writers: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Seconds between reads of one reader (`rInt`).
    pub read_interval: f64,
    /// Seconds between writes of one writer (`wInt`).
    pub write_interval: f64,
    pub ops_per_client: usize,
    pub value_size: usize,
    pub jitter_max: f64,
    pub cap_seconds: f64,
    pub crashes: Vec<Crash>,
}

pub const DEFAULT_OPS_PER_CLIENT: usize = 25;
pub const DEFAULT_READ_INTERVAL: f64 = 2.0;
pub const DEFAULT_WRITE_INTERVAL: f64 = 4.0;

impl ScenarioConfig {
    /// Defaults for everything but the algorithm.
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            topology: TopologyKind::Star,
            n_servers: 9,
            quorum: QuorumKind::Majority,
            n_readers: 10,
            n_writers: 1,
            seed: 0,
            scheme: Scheme::Fixed,
            read_interval: DEFAULT_READ_INTERVAL,
            write_interval: DEFAULT_WRITE_INTERVAL,
            ops_per_client: DEFAULT_OPS_PER_CLIENT,
            value_size: DEFAULT_VALUE_OCTETS,
            jitter_max: DEFAULT_JITTER_MAX_S,
            cap_seconds: DEFAULT_CAP_S,
            crashes: Vec::new(),
        }
    }

    pub fn quorum_system(&self) -> Result<QuorumSystem> {
        match self.quorum {
            QuorumKind::Majority => QuorumSystem::majority(self.n_servers),
            QuorumKind::Matrix => {
                let side = isqrt(self.n_servers);
                QuorumSystem::matrix(side, side)
            }
        }
    }

    /// Check every constraint and report all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        self.check(&mut issues);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }

    fn check(&self, issues: &mut Vec<ConfigIssue>) {
        let mut bad = |key: &str, msg: String| issues.push(ConfigIssue::new(key, msg));
        if !self.algorithm.is_multi_writer() && self.n_writers != 1 {
            bad(
                "scenario.n_writers",
                format!(
                    "SWMR requires one writer ({} has {})",
                    self.algorithm, self.n_writers
                ),
            );
        }
        if self.n_servers == 0 || self.n_servers > MAX_SERVERS {
            bad(
                "scenario.n_servers",
                format!("must be in 1..={MAX_SERVERS}"),
            );
        } else {
            match self.quorum {
                QuorumKind::Matrix if isqrt(self.n_servers).pow(2) != self.n_servers => bad(
                    "scenario.n_servers",
                    format!("matrix quorums: square required, got {}", self.n_servers),
                ),
                QuorumKind::Majority if self.n_servers > MAX_MAJORITY_SERVERS => bad(
                    "scenario.n_servers",
                    format!("majority quorums support at most {MAX_MAJORITY_SERVERS} servers; use matrix"),
                ),
                _ => {}
            }
        }
        if self.n_readers > 100_000 || self.n_writers > 100_000 {
            bad("scenario", "too many clients".into());
        }
        for (key, v) in [
            ("workload.read_interval", self.read_interval),
            ("workload.write_interval", self.write_interval),
        ] {
            if !(v.is_finite() && v >= 0.001) {
                bad(key, format!("must be at least 0.001 seconds, got {v}"));
            }
        }
        if self.value_size < MIN_VALUE_OCTETS {
            bad(
                "workload.value_size",
                format!(
                    "must be at least {MIN_VALUE_OCTETS} octets, got {}",
                    self.value_size
                ),
            );
        }
        if !(self.jitter_max.is_finite() && self.jitter_max >= 0.0) {
            bad(
                "network.jitter_max",
                format!(
                    "must be a non-negative number of seconds, got {}",
                    self.jitter_max
                ),
            );
        }
        if !(self.cap_seconds.is_finite() && self.cap_seconds > 0.0) {
            bad(
                "network.cap_seconds",
                format!("must be positive, got {}", self.cap_seconds),
            );
        }

        let mut crashed = ServerSet::EMPTY;
        for c in &self.crashes {
            let i = c.node.index as usize;
            let exists = match c.node.role {
                crate::types::Role::Server => i < self.n_servers,
                crate::types::Role::Reader => i < self.n_readers,
                crate::types::Role::Writer => i < self.n_writers,
            };
            if !exists {
                bad(
                    "faults.crashes",
                    format!("{} is not part of the deployment", c.node),
                );
            } else if c.node.is_server() {
                crashed.insert(c.node.index);
            }
        }
        if let Ok(qs) = self.quorum_system() {
            if !qs.survives(crashed) {
                bad(
                    "faults.crashes",
                    format!("crashing {crashed:?} leaves no quorum alive"),
                );
            }
        }
    }
}

pub(crate) fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `node@seconds`, e.g. `s0@0.0` or `r3@1.5`.
pub fn parse_crash(s: &str) -> Result<Crash> {
    let (node, at) = s
        .split_once('@')
        .ok_or_else(|| Error::InvalidInput(format!("crash {s:?} is not node@seconds")))?;
    let node: ProcessId = node.trim().parse()?;
    let at: f64 = at
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad crash time in {s:?}")))?;
    if !(at.is_finite() && at >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "crash time in {s:?} must be non-negative"
        )));
    }
    Ok(Crash {
        node,
        at: SimTime::from_secs_f64(at),
    })
}

pub fn format_crash(c: &Crash) -> String {
    format!("{}@{}", c.node, c.at.as_secs_f64())
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "scenario",
        &[
            "algorithm",
            "topology",
            "n_servers",
            "quorum",
            "n_readers",
            "n_writers",
            "seed",
        ],
    ),
    (
        "workload",
        &[
            "scheme",
            "read_interval",
            "write_interval",
            "ops_per_client",
            "value_size",
        ],
    ),
    ("network", &["jitter_max", "cap_seconds"]),
    ("faults", &["crashes"]),
];

/// Section a scenario key lives in.
pub(crate) fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS
        .iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| *s)
}

/// Parse a scenario document. Unknown sections and keys, type errors and
/// constraint violations are all reported together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![ConfigIssue::new(
            "<document>",
            e.message().to_string(),
        )])
    })?;
    config_from_table(&table, &[])
}

pub(crate) fn config_from_table(table: &Table, ignore_sections: &[&str]) -> Result<ScenarioConfig> {
    let mut r = Reader::default();
    for (name, value) in table {
        if ignore_sections.contains(&name.as_str()) {
            continue;
        }
        let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == name) else {
            r.issue(name, "unknown section");
            continue;
        };
        let Some(section) = value.as_table() else {
            r.issue(name, "expected a [section]");
            continue;
        };
        for key in section.keys() {
            if !keys.contains(&key.as_str()) {
                r.issue(&format!("{name}.{key}"), "unknown key");
            }
        }
    }
    let get = |path: &str| -> Option<&Toml> {
        let (s, k) = path.split_once('.').unwrap();
        table.get(s)?.as_table()?.get(k)
    };

    let algorithm = match get("scenario.algorithm") {
        None => {
            r.issue("scenario.algorithm", "required");
            None
        }
        Some(v) => r.parsed::<Algorithm>("scenario.algorithm", v),
    };
    let mut cfg = ScenarioConfig::new(algorithm.unwrap_or(Algorithm::Erato));
    macro_rules! field {
        ($path:literal, $slot:expr, $how:ident) => {
            if let Some(v) = get($path) {
                if let Some(x) = r.$how($path, v) {
                    $slot = x;
                }
            }
        };
    }
    field!("scenario.topology", cfg.topology, parsed);
    field!("scenario.n_servers", cfg.n_servers, count);
    field!("scenario.quorum", cfg.quorum, parsed);
    field!("scenario.n_readers", cfg.n_readers, count);
    field!("scenario.n_writers", cfg.n_writers, count);
    field!("scenario.seed", cfg.seed, seed);
    field!("workload.scheme", cfg.scheme, parsed);
    field!("workload.read_interval", cfg.read_interval, seconds);
    field!("workload.write_interval", cfg.write_interval, seconds);
    field!("workload.ops_per_client", cfg.ops_per_client, count);
    field!("workload.value_size", cfg.value_size, count);
    field!("network.jitter_max", cfg.jitter_max, seconds);
    field!("network.cap_seconds", cfg.cap_seconds, seconds);
    if let Some(v) = get("faults.crashes") {
        match v.as_array() {
            None => r.issue(
                "faults.crashes",
                "expected an array of \"node@seconds\" strings",
            ),
            Some(items) => {
                for item in items {
                    match item.as_str().map(parse_crash) {
                        Some(Ok(c)) => cfg.crashes.push(c),
                        Some(Err(e)) => r.issue("faults.crashes", &e.to_string()),
                        None => r.issue("faults.crashes", "expected a string"),
                    }
                }
            }
        }
    }

    if algorithm.is_some() {
        cfg.check(&mut r.issues);
    }
    if r.issues.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(r.issues))
    }
}

#[derive(Default)]
struct Reader {
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, key: &str, msg: &str) {
        self.issues.push(ConfigIssue::new(key, msg));
    }

    fn parsed<T: FromStr<Err = Error>>(&mut self, key: &str, v: &Toml) -> Option<T> {
        match v.as_str() {
            None => {
                self.issue(key, "expected a string");
                None
            }
            Some(s) => match s.parse() {
                Ok(x) => Some(x),
                Err(e) => {
                    self.issue(key, &e.to_string());
                    None
                }
            },
        }
    }

    fn count(&mut self, key: &str, v: &Toml) -> Option<usize> {
        match v.as_integer() {
            Some(i) if i >= 0 => Some(i as usize),
            _ => {
                self.issue(key, "expected a non-negative integer");
                None
            }
        }
    }

    fn seed(&mut self, key: &str, v: &Toml) -> Option<u64> {
        self.count(key, v).map(|n| n as u64)
    }

    fn seconds(&mut self, key: &str, v: &Toml) -> Option<f64> {
        match v {
            Toml::Float(f) => Some(*f),
            Toml::Integer(i) => Some(*i as f64),
            _ => {
                self.issue(key, "expected a number of seconds");
                None
            }
        }
    }
}

/// Render a config back to a document `parse_config` accepts.
pub fn render_config(cfg: &ScenarioConfig) -> String {
    let crashes: Vec<String> = cfg
        .crashes
        .iter()
        .map(|c| format!("\"{}\"", format_crash(c)))
        .collect();
    format!(
        "[scenario]\nalgorithm = \"{}\"\ntopology = \"{}\"\nn_servers = {}\nquorum = \"{}\"\n\
         n_readers = {}\nn_writers = {}\nseed = {}\n\n\
         [workload]\nscheme = \"{}\"\nread_interval = {:?}\nwrite_interval = {:?}\n\
         ops_per_client = {}\nvalue_size = {}\n\n\
         [network]\njitter_max = {:?}\ncap_seconds = {:?}\n\n\
         [faults]\ncrashes = [{}]\n",
        cfg.algorithm,
        cfg.topology,
        cfg.n_servers,
        cfg.quorum,
        cfg.n_readers,
        cfg.n_writers,
        cfg.seed,
        cfg.scheme,
        cfg.read_interval,
        cfg.write_interval,
        cfg.ops_per_client,
        cfg.value_size,
        cfg.jitter_max,
        cfg.cap_seconds,
        crashes.join(", ")
    )
}
