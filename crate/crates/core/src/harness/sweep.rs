use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use toml::{Table, Value as Toml};

use crate::error::{ConfigIssue, Error, Result};
use crate::metrics::{summarize, OpStats};
use crate::protocols::Algorithm;
use crate::types::{OpKind, ProcessId};

use super::config::{config_from_table, section_of, ScenarioConfig};
use super::scenario::{run_scenario, write_rows, Outcome, ResultRow};

pub const DEFAULT_SEEDS: u64 = 10;

/// A base scenario plus axes to vary. Every combination of axis values is
/// one cell; each cell runs `seeds` consecutive seeds from the base seed.
///
/// ```toml
/// [scenario]
/// topology = "star"
/// n_servers = 9
///
/// [grid]
/// algorithm = ["erato", "ohsam", "abd"]
/// n_readers = [10, 20]
/// seeds = 10
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    base: Table,
    axes: Vec<(String, Vec<Toml>)>,
    seeds: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub name: String,
    pub config: ScenarioConfig,
    pub seeds: Vec<u64>,
}

pub fn parse_grid(text: &str) -> Result<Grid> {
    let mut base: Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![ConfigIssue::new(
            "<document>",
            e.message().to_string(),
        )])
    })?;
    let mut issues = Vec::new();
    let mut axes = Vec::new();
    let mut seeds = DEFAULT_SEEDS;
    if let Some(grid) = base.remove("grid") {
        let Toml::Table(grid) = grid else {
            return Err(Error::Config(vec![ConfigIssue::new(
                "grid",
                "expected a [grid] section",
            )]));
        };
        for (key, value) in grid {
            let path = format!("grid.{key}");
            if key == "seeds" {
                match value.as_integer() {
                    Some(n) if n >= 0 => seeds = n as u64,
                    _ => issues.push(ConfigIssue::new(path, "expected a non-negative integer")),
                }
            } else if section_of(&key).is_none() || key == "crashes" || key == "seed" {
                issues.push(ConfigIssue::new(path, "not a grid axis"));
            } else {
                match value {
                    Toml::Array(values) => axes.push((key, values)),
                    _ => issues.push(ConfigIssue::new(path, "expected an array of values")),
                }
            }
        }
    }
    if !issues.is_empty() {
        return Err(Error::Config(issues));
    }
    Ok(Grid { base, axes, seeds })
}

const NAME_KEYS: [&str; 7] = [
    "algorithm",
    "topology",
    "quorum",
    "n_servers",
    "n_readers",
    "n_writers",
    "scheme",
];

impl Grid {
    pub fn seeds(&self) -> u64 {
        self.seeds
    }

    /// Override a scenario key in the base, e.g. `set_base("seed", 7)`.
    pub fn set_base(&mut self, key: &str, value: impl Into<Toml>) -> Result<()> {
        let value = value.into();
        let section = section_of(key)
            .ok_or_else(|| Error::Config(vec![ConfigIssue::new(key, "unknown key")]))?;
        let entry = self
            .base
            .entry(section.to_string())
            .or_insert_with(|| Toml::Table(Table::new()));
        match entry {
            Toml::Table(t) => {
                t.insert(key.to_string(), value);
                Ok(())
            }
            _ => Err(Error::Config(vec![ConfigIssue::new(
                section,
                "expected a [section]",
            )])),
        }
    }

    /// Expand the grid, validating every cell; all problems are reported together.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut combos: Vec<Vec<(&str, &Toml)>> = vec![Vec::new()];
        for (key, values) in &self.axes {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((key.as_str(), v));
                        c
                    })
                })
                .collect();
        }
        let mut cells = Vec::new();
        let mut issues = Vec::new();
        for combo in combos {
            let mut table = self.base.clone();
            for &(key, value) in &combo {
                let section = section_of(key).unwrap();
                let entry = table
                    .entry(section.to_string())
                    .or_insert_with(|| Toml::Table(Table::new()));
                if let Toml::Table(t) = entry {
                    t.insert(key.to_string(), value.clone());
                }
            }
            let label: Vec<String> = combo.iter().map(|(k, v)| format!("{k}={v}")).collect();
            match config_from_table(&table, &[]) {
                Ok(config) => {
                    let seeds = (0..self.seeds).map(|i| config.seed + i).collect();
                    cells.push(Cell {
                        name: cell_name(&config, &combo),
                        config,
                        seeds,
                    });
                }
                Err(Error::Config(found)) => issues.extend(found.into_iter().map(|i| {
                    ConfigIssue::new(format!("cell [{}] {}", label.join(" "), i.key), i.msg)
                })),
                Err(e) => return Err(e),
            }
        }
        if issues.is_empty() {
            Ok(cells)
        } else {
            Err(Error::Config(issues))
        }
    }
}

fn cell_name(cfg: &ScenarioConfig, combo: &[(&str, &Toml)]) -> String {
    let mut name = format!(
        "{}-{}-{}{}-r{}-w{}-{}",
        cfg.algorithm,
        cfg.topology,
        cfg.quorum,
        cfg.n_servers,
        cfg.n_readers,
        cfg.n_writers,
        cfg.scheme
    );
    for (key, value) in combo {
        if !NAME_KEYS.contains(key) {
            let v: String = value
                .to_string()
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '.' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            let _ = write!(name, "-{key}{v}");
        }
    }
    name
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses every core.
    pub parallelism: Option<usize>,
    pub with_compute: bool,
    /// Also keep each run's trace log under `traces/<cell>/`.
    pub write_traces: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub seed: u64,
    pub outcome: Outcome,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct CellReport {
    pub name: String,
    pub csv: PathBuf,
    pub runs: usize,
    pub failures: Vec<RunFailure>,
}

#[derive(Clone, Debug, Default)]
pub struct SweepReport {
    pub cells: Vec<CellReport>,
    /// Written only when every cell passed.
    pub summary: Option<PathBuf>,
}

impl SweepReport {
    pub fn ok(&self) -> bool {
        self.cells.iter().all(|c| c.failures.is_empty())
    }

    /// Atomicity violations take precedence over liveness failures.
    pub fn worst_outcome(&self) -> Outcome {
        let all = self.cells.iter().flat_map(|c| &c.failures);
        if all
            .clone()
            .any(|f| f.outcome == Outcome::AtomicityViolation)
        {
            Outcome::AtomicityViolation
        } else if all.clone().next().is_some() {
            Outcome::LivenessCap
        } else {
            Outcome::Ok
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let status = if c.failures.is_empty() {
                "ok"
            } else {
                "FAILED"
            };
            let _ = writeln!(
                out,
                "{}\t{status}\t{} runs\t{}",
                c.name,
                c.runs,
                c.csv.display()
            );
            for f in &c.failures {
                let _ = writeln!(out, "  seed {}: {:?}: {}", f.seed, f.outcome, f.detail);
            }
        }
        out
    }
}

struct JobResult {
    rows: Vec<ResultRow>,
    failure: Option<RunFailure>,
}

/// Run every cell of the grid, in parallel across cells and seeds. Writes
/// `cells/<cell>.csv` per cell and `summary.csv` under `out_dir`.
pub fn sweep(grid: &Grid, out_dir: &Path, opts: &SweepOptions) -> Result<SweepReport> {
    let cells = grid.cells()?;
    if cells.is_empty() {
        return Ok(SweepReport::default());
    }
    let cell_dir = out_dir.join("cells");
    fs::create_dir_all(&cell_dir)?;
    if opts.write_traces {
        for c in &cells {
            fs::create_dir_all(out_dir.join("traces").join(&c.name))?;
        }
    }

    let jobs: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let run_job = |&(i, seed): &(usize, u64)| -> Result<JobResult> {
        let cell = &cells[i];
        let mut cfg = cell.config.clone();
        cfg.seed = seed;
        let run = run_scenario(&cfg)?;
        if opts.write_traces {
            let path = out_dir
                .join("traces")
                .join(&cell.name)
                .join(format!("seed-{seed}.log"));
            fs::write(path, run.trace.to_log())?;
        }
        let failure = match run.outcome() {
            Outcome::Ok => None,
            outcome => Some(RunFailure {
                seed,
                outcome,
                detail: match outcome {
                    Outcome::AtomicityViolation => run.verdict.to_string(),
                    _ => format!(
                        "time cap of {} s reached with operations pending",
                        cfg.cap_seconds
                    ),
                },
            }),
        };
        Ok(JobResult {
            rows: run.rows,
            failure,
        })
    };
    let results: Vec<Result<JobResult>> = match opts.parallelism {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| jobs.par_iter().map(run_job).collect()),
        None => jobs.par_iter().map(run_job).collect(),
    };

    let mut per_cell: Vec<(Vec<ResultRow>, Vec<RunFailure>, usize)> =
        vec![(Vec::new(), Vec::new(), 0); cells.len()];
    for (&(i, _), res) in jobs.iter().zip(results) {
        let res = res?;
        let slot = &mut per_cell[i];
        slot.0.extend(res.rows);
        slot.1.extend(res.failure);
        slot.2 += 1;
    }

    let mut report = SweepReport::default();
    let mut summary = Vec::new();
    for (cell, (rows, failures, runs)) in cells.iter().zip(per_cell) {
        let csv = cell_dir.join(format!("{}.csv", cell.name));
        write_rows(fs::File::create(&csv)?, &rows, opts.with_compute)?;
        summary.extend(summarize_rows(&rows)?.into_iter().map(|mut s| {
            s.cell = Some(cell.name.clone());
            s
        }));
        report.cells.push(CellReport {
            name: cell.name.clone(),
            csv,
            runs,
            failures,
        });
    }
    if report.ok() {
        let path = out_dir.join("summary.csv");
        write_summary(fs::File::create(&path)?, &summary)?;
        report.summary = Some(path);
    }
    Ok(report)
}

/// Latency statistics of one configuration and operation kind.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub cell: Option<String>,
    pub algorithm: String,
    pub topology: String,
    pub n_servers: usize,
    pub n_readers: usize,
    pub n_writers: usize,
    pub scheme: String,
    pub op_kind: String,
    pub count: usize,
    pub mean_latency_s: f64,
    pub median_latency_s: f64,
    pub p95_latency_s: f64,
    pub max_latency_s: f64,
    pub fast_read_ratio: Option<f64>,
    pub mean_messages: f64,
}

type GroupKey = (String, String, usize, usize, usize, String, String);

/// Group per-operation rows by configuration and operation kind.
pub fn summarize_rows(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    let mut groups: BTreeMap<GroupKey, Vec<OpStats>> = BTreeMap::new();
    for r in rows {
        let key = (
            r.algorithm.clone(),
            r.topology.clone(),
            r.n_servers,
            r.n_readers,
            r.n_writers,
            r.scheme.clone(),
            r.op_kind.clone(),
        );
        groups.entry(key).or_default().push(OpStats {
            algorithm: r.algorithm.parse::<Algorithm>()?,
            op_id: r.op_id,
            process: r.process.parse::<ProcessId>()?,
            kind: r.op_kind.parse::<OpKind>()?,
            invoked_at_s: r.invoked_at,
            latency_s: r.latency_s,
            exchanges: r.exchanges,
            messages: r.messages,
        });
    }
    Ok(groups
        .into_iter()
        .map(|(k, stats)| {
            let g = summarize(&stats).groups.remove(0);
            SummaryRow {
                cell: None,
                algorithm: k.0,
                topology: k.1,
                n_servers: k.2,
                n_readers: k.3,
                n_writers: k.4,
                scheme: k.5,
                op_kind: k.6,
                count: g.count,
                mean_latency_s: g.mean,
                median_latency_s: g.median,
                p95_latency_s: g.p95,
                max_latency_s: g.max,
                fast_read_ratio: g.fast_read_ratio,
                mean_messages: g.mean_messages,
            }
        })
        .collect())
}

pub const SUMMARY_COLUMNS: [&str; 14] = [
    "algorithm",
    "topology",
    "n_servers",
    "n_readers",
    "n_writers",
    "scheme",
    "op_kind",
    "count",
    "mean_latency_s",
    "median_latency_s",
    "p95_latency_s",
    "max_latency_s",
    "fast_read_ratio",
    "mean_messages",
];

/// Summary CSV; a leading `cell` column is added when rows carry one.
pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let with_cell = rows.iter().any(|r| r.cell.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = Vec::new();
    if with_cell {
        header.push("cell");
    }
    header.extend(SUMMARY_COLUMNS);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = Vec::with_capacity(15);
        if with_cell {
            rec.push(r.cell.clone().unwrap_or_default());
        }
        rec.extend([
            r.algorithm.clone(),
            r.topology.clone(),
            r.n_servers.to_string(),
            r.n_readers.to_string(),
            r.n_writers.to_string(),
            r.scheme.clone(),
            r.op_kind.clone(),
            r.count.to_string(),
            format!("{:.9}", r.mean_latency_s),
            format!("{:.9}", r.median_latency_s),
            format!("{:.9}", r.p95_latency_s),
            format!("{:.9}", r.max_latency_s),
            r.fast_read_ratio
                .map_or_else(String::new, |f| format!("{f:.6}")),
            format!("{:.3}", r.mean_messages),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
