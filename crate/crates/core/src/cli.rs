//! The `stpm` command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage, input and validation errors,
//! 1 for internal failures.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::dataset::{self, SynthSpec};
use crate::discriminant::{self, PairedManifest};
use crate::engine::{self, MinerConfig, DISCRIMINANT_T1_FLOOR};
use crate::error::{Error, Result};
use crate::oracle::{self, GridSpec};
use crate::report::{self, EntryRecord, RunReport, SummaryRecord};

#[derive(Debug, Parser)]
#[command(name = "stpm", version, about = "Mine stable and discriminant spatio-temporal patterns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted-pattern recording from a JSON spec.
    Gen {
        spec: PathBuf,
        out_dir: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mine stable patterns from a data directory.
    Mine {
        data_dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Mine discriminant patterns between two settings.
    MineDisc {
        /// Positive-setting data directory.
        #[arg(required_unless_present = "manifest", requires = "neg_dir")]
        pos_dir: Option<PathBuf>,
        /// Negative-setting data directory.
        #[arg(requires = "pos_dir")]
        neg_dir: Option<PathBuf>,
        /// Paired manifest JSON naming both recordings' files.
        #[arg(long, conflicts_with_all = ["pos_dir", "neg_dir"])]
        manifest: Option<PathBuf>,
        #[arg(long)]
        min_d: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Enumerate Euclidean candidates on a grid and write their front.
    Oracle {
        data_dir: PathBuf,
        /// Grid spec JSON.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Tabulate a result file, optionally against an oracle front or ground truth.
    Report {
        mine_out: PathBuf,
        #[arg(long)]
        oracle: Option<PathBuf>,
        /// Ground-truth JSON written by `gen`.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config JSON with MinerConfig field names; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threads for scoring the initial population.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pop_size: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub min_len: Option<usize>,
    #[arg(long)]
    pub min_sigma: Option<f64>,
    #[arg(long)]
    pub min_area: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub t1_floor: Option<usize>,
    /// Record wall-clock seconds in the summary line (output is then no
    /// longer byte-reproducible).
    #[arg(long)]
    pub timing: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<MinerConfig> {
    path.map_or_else(|| Ok(MinerConfig::default()), read_json)
}

impl RunArgs {
    fn resolve(&self) -> Result<MinerConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.pop_size {
            cfg.pop_size = v;
        }
        if let Some(v) = self.budget {
            cfg.eval_budget = v;
        }
        if let Some(v) = self.min_len {
            cfg.min_len = v;
        }
        if let Some(v) = self.min_sigma {
            cfg.min_sigma = v;
        }
        if let Some(v) = self.min_area {
            cfg.min_area = v;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.t1_floor {
            cfg.t1_floor = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(path, text).map_err(|e| Error::io(path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(spec_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| Error::io(spec_path, e))?;
    let mut spec: SynthSpec =
        serde_json::from_str(&text).map_err(|e| Error::Spec(format!("{}: {e}", spec_path.display())))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let (rec, planted) = dataset::generate_synthetic(&spec)?;
    dataset::save_dir(out_dir, &rec, &planted)?;
    log::info!("wrote {} sensors x {} steps to {}", rec.n_sensors(), rec.n_steps(), out_dir.display());
    Ok(())
}

fn cmd_mine(data_dir: &Path, run: &RunArgs) -> Result<()> {
    let mut cfg = run.resolve()?;
    let rec = dataset::load_dir(data_dir)?;
    cfg.t1_floor = Some(cfg.t1_floor_or(1));
    let start = Instant::now();
    let outcome = engine::run_with_threads(&cfg, &rec, run.threads)?;
    let wall = start.elapsed().as_secs_f64();
    log::info!("mined {} entries in {wall:.2} s", outcome.archive.len());

    let entries: Vec<EntryRecord> = outcome.archive.entries().iter().map(EntryRecord::from_pattern).collect();
    let mut s = SummaryRecord::new("mine", &cfg, entries.len());
    s.evaluations = Some(outcome.evaluations);
    s.wall_seconds = run.timing.then_some(wall);
    emit(run.out.as_deref(), &RunReport { entries, summary: s }.to_jsonl()?)
}

fn cmd_mine_disc(
    pos_dir: Option<&Path>,
    neg_dir: Option<&Path>,
    manifest: Option<&Path>,
    min_d: Option<f64>,
    run: &RunArgs,
) -> Result<()> {
    let mut cfg = run.resolve()?;
    if min_d.is_some() {
        cfg.min_d = min_d;
    }
    cfg.validate()?;
    if cfg.min_d.is_none() {
        return Err(Error::Config(
            "discriminant mining needs a minimal activity difference: pass --min-d or set min_d in the config".into(),
        ));
    }
    cfg.t1_floor = Some(cfg.t1_floor_or(DISCRIMINANT_T1_FLOOR));
    let pr = match (manifest, pos_dir, neg_dir) {
        (Some(m), _, _) => PairedManifest::load(m)?,
        (None, Some(p), Some(n)) => discriminant::load_paired_dirs(p, n)?,
        _ => return Err(Error::Config("give either --manifest or both data directories".into())),
    };
    let start = Instant::now();
    let outcome = discriminant::run_discriminant_with_threads(&cfg, &pr, run.threads)?;
    let wall = start.elapsed().as_secs_f64();
    log::info!("mined {} discriminant entries in {wall:.2} s", outcome.archive.len());

    let entries: Vec<EntryRecord> = outcome
        .archive
        .entries()
        .iter()
        .map(|e| EntryRecord::from_discriminant(e, discriminant::discriminant_score(&pr, &e.genotype)))
        .collect();
    let mut s = SummaryRecord::new("mine-disc", &cfg, entries.len());
    s.evaluations = Some(outcome.evaluations);
    s.wall_seconds = run.timing.then_some(wall);
    emit(run.out.as_deref(), &RunReport { entries, summary: s }.to_jsonl()?)
}

fn cmd_oracle(data_dir: &Path, grid: &Path, config: Option<&Path>, out: Option<&Path>, threads: usize) -> Result<()> {
    let mut cfg = load_config(config)?;
    cfg.validate()?;
    let grid: GridSpec = read_json(grid)?;
    let rec = dataset::load_dir(data_dir)?;
    cfg.t1_floor = Some(cfg.t1_floor_or(1));
    let cands = oracle::enumerate_candidates_with_threads(&rec, &grid, &cfg, threads)?;
    let front = oracle::oracle_front(&cands, cfg.p);
    log::info!("{} admissible candidates, {} on the front", cands.len(), front.len());

    let entries: Vec<EntryRecord> = front.iter().map(EntryRecord::from_pattern).collect();
    let mut s = SummaryRecord::new("oracle", &cfg, entries.len());
    s.seed = None;
    s.candidates = Some(cands.len());
    emit(out, &RunReport { entries, summary: s }.to_jsonl()?)
}

fn cmd_report(
    mine_out: &Path,
    oracle_out: Option<&Path>,
    truth: Option<&Path>,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let run = RunReport::load(mine_out)?;
    let oracle = oracle_out.map(RunReport::load).transpose()?;
    let truth = truth.map(dataset::load_ground_truth).transpose()?;
    let cmp = report::compare(&run, oracle.as_ref(), truth.as_deref());
    let (audit, with_truth) = (oracle.is_some(), truth.is_some());
    emit(out, &cmp.to_table(audit, with_truth))?;
    if let Some(path) = csv {
        emit(Some(path), &cmp.to_csv(audit, with_truth)?)?;
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { spec, out_dir, seed } => cmd_gen(&spec, &out_dir, seed),
        Command::Mine { data_dir, run } => cmd_mine(&data_dir, &run),
        Command::MineDisc {
            pos_dir,
            neg_dir,
            manifest,
            min_d,
            run,
        } => cmd_mine_disc(pos_dir.as_deref(), neg_dir.as_deref(), manifest.as_deref(), min_d, &run),
        Command::Oracle {
            data_dir,
            grid,
            config,
            out,
            threads,
        } => cmd_oracle(&data_dir, &grid, config.as_deref(), out.as_deref(), threads),
        Command::Report {
            mine_out,
            oracle,
            truth,
            csv,
            out,
        } => cmd_report(&mine_out, oracle.as_deref(), truth.as_deref(), csv.as_deref(), out.as_deref()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match std::panic::catch_unwind(|| execute(cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(_) => 1,
    }
}
