use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checker::{check_atomicity_tagged, check_lemmas, extract_history, LemmaReport, Verdict};
use crate::error::{Error, Result};
use crate::metrics::{op_stats, OpStats};
use crate::netsim::{build_topology, SimConfig, Simulation, TopologySpec, Trace};
use crate::types::SimTime;

use super::config::{render_config, ScenarioConfig};
use super::workload::build_workload;

/// Version of the per-operation CSV layout below.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 14] = [
    "algorithm",
    "topology",
    "n_servers",
    "n_readers",
    "n_writers",
    "scheme",
    "seed",
    "op_id",
    "process",
    "op_kind",
    "invoked_at",
    "latency_s",
    "exchanges",
    "messages",
];

/// Optional trailing column: wall-clock seconds spent in protocol steps.
pub const COMPUTE_COLUMN: &str = "compute_s";

/// One completed operation of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub algorithm: String,
    pub topology: String,
    pub n_servers: usize,
    pub n_readers: usize,
    pub n_writers: usize,
    pub scheme: String,
    pub seed: u64,
    pub op_id: u64,
    pub process: String,
    pub op_kind: String,
    pub invoked_at: f64,
    pub latency_s: f64,
    pub exchanges: u32,
    pub messages: u64,
    pub compute_s: Option<f64>,
}

impl ResultRow {
    fn from_stats(cfg: &ScenarioConfig, s: &OpStats, trace: &Trace) -> Self {
        Self {
            algorithm: cfg.algorithm.name().into(),
            topology: cfg.topology.name().into(),
            n_servers: cfg.n_servers,
            n_readers: cfg.n_readers,
            n_writers: cfg.n_writers,
            scheme: cfg.scheme.name().into(),
            seed: cfg.seed,
            op_id: s.op_id,
            process: s.process.to_string(),
            op_kind: s.kind.name().into(),
            invoked_at: s.invoked_at_s,
            latency_s: s.latency_s,
            exchanges: s.exchanges,
            messages: s.messages,
            compute_s: trace.compute.get(&s.op_id).map(|d| d.as_secs_f64()),
        }
    }

    fn record(&self, with_compute: bool) -> Vec<String> {
        let mut r = vec![
            self.algorithm.clone(),
            self.topology.clone(),
            self.n_servers.to_string(),
            self.n_readers.to_string(),
            self.n_writers.to_string(),
            self.scheme.clone(),
            self.seed.to_string(),
            self.op_id.to_string(),
            self.process.clone(),
            self.op_kind.clone(),
            format!("{:.9}", self.invoked_at),
            format!("{:.9}", self.latency_s),
            self.exchanges.to_string(),
            self.messages.to_string(),
        ];
        if with_compute {
            r.push(format!("{:.9}", self.compute_s.unwrap_or(0.0)));
        }
        r
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow], with_compute: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if with_compute {
        header.push(COMPUTE_COLUMN);
    }
    w.write_record(&header)?;
    for row in rows {
        w.write_record(row.record(with_compute))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let with_compute = match cols.len() {
        14 => false,
        15 if cols[14] == COMPUTE_COLUMN => true,
        _ => {
            return Err(Error::InvalidInput(format!(
                "unexpected CSV header {cols:?}"
            )))
        }
    };
    if cols[..14] != CSV_COLUMNS {
        return Err(Error::InvalidInput(format!(
            "unexpected CSV header {cols:?}"
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let bad = |k: usize| Error::Parse {
            line,
            msg: format!(
                "bad {} {:?}",
                CSV_COLUMNS.get(k).unwrap_or(&COMPUTE_COLUMN),
                field(k)
            ),
        };
        macro_rules! num {
            ($k:expr) => {
                field($k).parse().map_err(|_| bad($k))?
            };
        }
        rows.push(ResultRow {
            algorithm: field(0).into(),
            topology: field(1).into(),
            n_servers: num!(2),
            n_readers: num!(3),
            n_writers: num!(4),
            scheme: field(5).into(),
            seed: num!(6),
            op_id: num!(7),
            process: field(8).into(),
            op_kind: field(9).into(),
            invoked_at: num!(10),
            latency_s: num!(11),
            exchanges: num!(12),
            messages: num!(13),
            compute_s: if with_compute { Some(num!(14)) } else { None },
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    AtomicityViolation,
    /// A live client still had work when the time cap was reached.
    LivenessCap,
}

/// Everything one scenario run produces.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub trace: Trace,
    pub verdict: Verdict,
    pub lemmas: LemmaReport,
    pub stats: Vec<OpStats>,
    pub rows: Vec<ResultRow>,
}

impl ScenarioRun {
    pub fn outcome(&self) -> Outcome {
        if !self.verdict.ok() {
            Outcome::AtomicityViolation
        } else if self.trace.incomplete {
            Outcome::LivenessCap
        } else {
            Outcome::Ok
        }
    }
}

/// Build the deployment, run it, check atomicity and compute metrics.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let qs = cfg.quorum_system()?;
    let net = build_topology(
        &TopologySpec::for_kind(cfg.topology, cfg.n_servers),
        cfg.n_servers,
        cfg.n_readers,
        cfg.n_writers,
    )?;
    let mut workload_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    workload_rng.set_stream(1);
    let workload = build_workload(cfg, &mut workload_rng);

    let sim_cfg = SimConfig {
        jitter_max: cfg.jitter_max,
        cap: SimTime::from_secs_f64(cfg.cap_seconds),
        seed: cfg.seed,
    };
    let mut sim = Simulation::new(
        &net,
        &qs,
        cfg.algorithm.suite(),
        cfg.n_readers,
        cfg.n_writers,
        sim_cfg,
    );
    sim.add_meta("algorithm", cfg.algorithm);
    sim.add_meta("topology", cfg.topology);
    sim.add_meta("quorum", cfg.quorum);
    sim.add_meta("n_servers", cfg.n_servers);
    sim.add_meta("n_readers", cfg.n_readers);
    sim.add_meta("n_writers", cfg.n_writers);
    sim.add_meta("scheme", cfg.scheme);
    for c in &cfg.crashes {
        sim.inject_crash(c.node, c.at)?;
    }
    sim.schedule(workload)?;
    let trace = sim.run()?;

    let verdict = check_atomicity_tagged(&extract_history(&trace))?;
    let lemmas = check_lemmas(&trace);
    let stats = op_stats(&trace, cfg.algorithm)?;
    let rows = stats
        .iter()
        .map(|s| ResultRow::from_stats(cfg, s, &trace))
        .collect();
    Ok(ScenarioRun {
        config: cfg.clone(),
        trace,
        verdict,
        lemmas,
        stats,
        rows,
    })
}

/// Files written for one run.
#[derive(Clone, Debug)]
pub struct RunFiles {
    pub config: PathBuf,
    pub trace: PathBuf,
    pub verdict: PathBuf,
    pub csv: PathBuf,
}

/// Write `config.toml`, `trace.log`, `verdict.txt` and `ops.csv` to `dir`.
pub fn write_run(dir: &Path, run: &ScenarioRun, with_compute: bool) -> Result<RunFiles> {
    fs::create_dir_all(dir)?;
    let files = RunFiles {
        config: dir.join("config.toml"),
        trace: dir.join("trace.log"),
        verdict: dir.join("verdict.txt"),
        csv: dir.join("ops.csv"),
    };
    fs::write(&files.config, render_config(&run.config))?;
    fs::write(&files.trace, run.trace.to_log())?;
    fs::write(&files.verdict, run.verdict.report())?;
    write_rows(fs::File::create(&files.csv)?, &run.rows, with_compute)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_crash;
    use crate::protocols::Algorithm;

    fn desk(alg: Algorithm) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(alg);
        cfg.ops_per_client = 5;
        cfg
    }

    #[test]
    fn erato_star_fixed() {
        let run = run_scenario(&desk(Algorithm::Erato)).unwrap();
        assert_eq!(run.outcome(), Outcome::Ok);
        let reads = run.rows.iter().filter(|r| r.op_kind == "read").count();
        assert_eq!(reads, 50);
        assert!(run.lemmas.all_hold());
    }

    #[test]
    fn erato_with_crashed_server() {
        let mut cfg = desk(Algorithm::Erato);
        cfg.crashes.push(parse_crash("s4@0").unwrap());
        let run = run_scenario(&cfg).unwrap();
        assert_eq!(run.outcome(), Outcome::Ok);
        assert_eq!(run.rows.len(), 55);
    }

    #[test]
    fn abd_reads_take_four_exchanges() {
        let run = run_scenario(&desk(Algorithm::Abd)).unwrap();
        assert!(run.verdict.ok());
        assert!(run
            .rows
            .iter()
            .filter(|r| r.op_kind == "read")
            .all(|r| r.exchanges == 4));
    }

    #[test]
    fn csv_round_trip() {
        let run = run_scenario(&desk(Algorithm::OhSam)).unwrap();
        for with_compute in [false, true] {
            let mut buf = Vec::new();
            write_rows(&mut buf, &run.rows, with_compute).unwrap();
            let back = read_rows(buf.as_slice()).unwrap();
            assert_eq!(back.len(), run.rows.len());
            assert_eq!(back[3].process, run.rows[3].process);
            assert!((back[3].latency_s - run.rows[3].latency_s).abs() < 1e-9);
            assert_eq!(back[0].compute_s.is_some(), with_compute);
        }
        let header = "algorithm,topology\n";
        assert!(read_rows(header.as_bytes()).is_err());
    }

    #[test]
    fn csv_bytes_are_reproducible() {
        let render = || {
            let run = run_scenario(&desk(Algorithm::EratoMw)).unwrap();
            let mut buf = Vec::new();
            write_rows(&mut buf, &run.rows, false).unwrap();
            (buf, run.trace.to_log())
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = desk(Algorithm::Erato);
        cfg.n_writers = 2;
        assert!(matches!(run_scenario(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn run_files() {
        let dir = tempfile::tempdir().unwrap();
        let run = run_scenario(&desk(Algorithm::Erato)).unwrap();
        let files = write_run(dir.path(), &run, true).unwrap();
        let trace = Trace::parse_log(&fs::read_to_string(&files.trace).unwrap()).unwrap();
        assert_eq!(trace.to_log(), run.trace.to_log());
        assert_eq!(fs::read_to_string(&files.verdict).unwrap(), "verdict\tok\n");
        let cfg = super::super::config::parse_config(&fs::read_to_string(&files.config).unwrap())
            .unwrap();
        assert_eq!(cfg, run.config);
    }
}
