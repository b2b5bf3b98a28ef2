//! Command-line front end.
//!
//! ```text
//! tsgbm <simulate|train|evaluate|scatter|crlb> --config PATH [--seed U64] [--threads N] [--out DIR]
//! ```
//!
//! `--config` accepts a file path or the name of a shipped config. Every
//! command writes its CSV outputs plus `manifest.<command>.json` into the
//! output directory and prints a one-line JSON summary on stdout.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{EstimatorKind, ExperimentConfig};
use crate::crlb::weibull_crlb;
use crate::error::{Error, Result};
use crate::output::{fmt_f64, CsvTable, RunManifest, StageTiming};
use crate::pipeline::{evaluate_mse, scatter, ConstantEstimator, Estimator, TsgbmEstimator};
use crate::seed::{purpose, SeedPolicy, NORMAL_TRANSFORM, RNG_ALGORITHM};
use crate::simulators::{Mechanism, MechanismKind};

pub const ESTIMATOR_FILE: &str = "estimator.json";

#[derive(Debug, Parser)]
#[command(name = "tsgbm", version, about = "Minimax two-stage gradient boosting estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one sequence per test parameter and write it as CSV.
    Simulate(RunArgs),
    /// Train the estimator and write it with its training features.
    Train(RunArgs),
    /// Monte Carlo MSE table at the configured test parameters.
    Evaluate(RunArgs),
    /// True vs estimated parameters over fresh prior draws.
    Scatter(RunArgs),
    /// Weibull Cramér-Rao bounds at the configured test parameters.
    Crlb(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Config file path or shipped config name.
    #[arg(long)]
    pub config: String,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Scatter(_) => "scatter",
            Command::Crlb(_) => "crlb",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a)
            | Command::Train(a)
            | Command::Evaluate(a)
            | Command::Scatter(a)
            | Command::Crlb(a) => a,
        }
    }
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => 2,
        Error::Domain(_) | Error::DegenerateFit { .. } => 3,
        _ => 4,
    }
}

/// Parses `argv` (including the program name), runs the command, and
/// returns the process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("tsgbm {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and returns its JSON summary line.
pub fn run(cli: &Cli) -> Result<String> {
    let args = cli.command.args();
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if args.threads == Some(0) {
        return Err(Error::config("--threads", "must be at least 1"));
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    std::fs::create_dir_all(&out_dir)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config("--threads", e.to_string()))?;
    let threads = pool.current_num_threads();

    let mut ctx = RunContext {
        command: cli.command.name(),
        cfg,
        out_dir,
        started: Instant::now(),
        stages: Vec::new(),
        outputs: Vec::new(),
    };
    pool.install(|| match &cli.command {
        Command::Simulate(_) => ctx.simulate(),
        Command::Train(_) => ctx.train().map(|_| ()),
        Command::Evaluate(_) => ctx.evaluate(),
        Command::Scatter(_) => ctx.scatter(),
        Command::Crlb(_) => ctx.crlb(),
    })?;
    ctx.finish(threads)
}

struct RunContext {
    command: &'static str,
    cfg: ExperimentConfig,
    out_dir: PathBuf,
    started: Instant,
    stages: Vec<StageTiming>,
    outputs: Vec<String>,
}

impl RunContext {
    fn manifest_name(&self) -> String {
        format!("manifest.{}.json", self.command)
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&Self) -> Result<T>) -> Result<T> {
        eprintln!("[tsgbm] {}: {name}", self.cfg.name);
        let t = Instant::now();
        let out = f(self).map_err(|e| match e {
            Error::Domain(m) => Error::Stage {
                stage: "run",
                message: format!("{name}: {m}"),
            },
            other => other,
        })?;
        self.stages.push(StageTiming {
            stage: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    fn table(&self, header: Vec<String>) -> CsvTable {
        let mut t = CsvTable::new(header);
        t.comment("tsgbm", self.command)
            .comment("config", &self.cfg.name)
            .comment("config_fingerprint", self.cfg.fingerprint())
            .comment("manifest", self.manifest_name())
            .comment("master_seed", self.cfg.master_seed)
            .comment("rng", RNG_ALGORITHM)
            .comment("normal", NORMAL_TRANSFORM);
        t
    }

    fn write(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        let path = self.out_dir.join(name);
        table.write(&path)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn finish(self, threads: usize) -> Result<String> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            config_name: self.cfg.name.clone(),
            config_fingerprint: self.cfg.fingerprint(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            rng_algorithm: RNG_ALGORITHM.to_string(),
            normal_transform: NORMAL_TRANSFORM.to_string(),
            threads,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            stages: self.stages,
            outputs: self.outputs.clone(),
        };
        let manifest_path = self.out_dir.join(format!("manifest.{}.json", self.command));
        manifest.write(&manifest_path)?;
        Ok(serde_json::json!({
            "command": self.command,
            "config": self.cfg.name,
            "config_fingerprint": manifest.config_fingerprint,
            "manifest": manifest_path.display().to_string(),
            "outputs": self.outputs,
        })
        .to_string())
    }

    fn simulate(&mut self) -> Result<()> {
        let seeds = SeedPolicy::new(self.cfg.master_seed);
        let thetas = self.cfg.theta_test()?;
        for (i, theta) in thetas.iter().enumerate() {
            let seed = seeds.seed(purpose::SIMULATE, i as u64);
            let y = self.stage(&format!("simulate theta[{i}]"), |ctx| {
                ctx.cfg.mechanism.simulate(&theta.values, seed)
            })?;
            let mut t = self.table(vec!["y".into()]);
            let desc: Vec<String> = theta
                .names
                .iter()
                .zip(&theta.values)
                .map(|(n, v)| format!("{n}={}", fmt_f64(*v)))
                .collect();
            t.comment("mechanism", &y.mechanism_id)
                .comment("theta", desc.join(";"))
                .comment("n", y.len())
                .comment("seed", seed);
            for v in &y.samples {
                t.push_floats(&[*v]);
            }
            self.write(&format!("sequence_{i}.csv"), &t)?;
        }
        Ok(())
    }

    fn train(&mut self) -> Result<TsgbmEstimator> {
        let prior = self.cfg.prior_spec()?;
        let set = self.stage("simulate training set", |ctx| {
            crate::pipeline::build_training_set(
                &ctx.cfg.mechanism,
                &prior,
                &ctx.cfg.compressor,
                ctx.cfg.features,
                ctx.cfg.train.m_train,
                ctx.cfg.master_seed,
            )
        })?;
        let mut est = self.stage("fit boosted models", |ctx| {
            crate::pipeline::fit_estimator(
                &ctx.cfg.mechanism,
                &prior,
                &ctx.cfg.compressor,
                ctx.cfg.features,
                &ctx.cfg.gbm,
                &ctx.cfg.loss,
                &set,
                ctx.cfg.master_seed,
            )
        })?;
        est.config_fingerprint = Some(self.cfg.fingerprint());

        let names = self.cfg.parameter_names();
        let n_phi = set.features.first().map_or(0, Vec::len);
        let mut header: Vec<String> = names.clone();
        header.extend((0..n_phi).map(|j| format!("phi_{j}")));
        let mut t = self.table(header);
        t.comment("dropped_draws", set.dropped);
        for (theta, phi) in set.thetas.iter().zip(&set.features) {
            let mut row = theta.clone();
            row.extend_from_slice(phi);
            t.push_floats(&row);
        }
        self.write("training_features.csv", &t)?;

        let path = self.out_dir.join(ESTIMATOR_FILE);
        std::fs::write(&path, est.to_json())?;
        self.outputs.push(path.display().to_string());
        Ok(est)
    }

    /// Reuses a saved estimator when it was trained from the same config.
    fn load_or_train(&mut self) -> Result<TsgbmEstimator> {
        let path = self.out_dir.join(ESTIMATOR_FILE);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(est) = TsgbmEstimator::from_json(&text) {
                if est.config_fingerprint.as_deref() == Some(self.cfg.fingerprint().as_str()) {
                    eprintln!("[tsgbm] {}: reusing {}", self.cfg.name, path.display());
                    return Ok(est);
                }
            }
        }
        self.train()
    }

    fn evaluate(&mut self) -> Result<()> {
        let names = self.cfg.parameter_names();
        let thetas = self.cfg.theta_test()?;
        let trained = match self.cfg.evaluate.estimator {
            EstimatorKind::Tsgbm => Some(self.load_or_train()?),
            EstimatorKind::Oracle => None,
        };
        let weibull = self.cfg.mechanism.kind == MechanismKind::Weibull;
        let mut header: Vec<String> = names.iter().map(|n| format!("true_{n}")).collect();
        header.extend(names.iter().map(|n| format!("mse_{n}")));
        if weibull {
            header.extend(names.iter().map(|n| format!("crlb_{n}")));
        }
        header.extend(["mc".to_string(), "seed".to_string()]);
        let mut t = self.table(header);
        t.comment("estimator", format!("{:?}", self.cfg.evaluate.estimator).to_lowercase());

        let seeds = SeedPolicy::new(self.cfg.master_seed);
        let mc = self.cfg.evaluate.mc;
        for (i, theta) in thetas.iter().enumerate() {
            let seed = seeds.seed(purpose::MSE_TABLE, i as u64);
            let oracle = ConstantEstimator(theta.values.clone());
            let est: &dyn Estimator = match &trained {
                Some(e) => e,
                None => &oracle,
            };
            let report = self.stage(&format!("mse at theta[{i}]"), |ctx| {
                evaluate_mse(est, &ctx.cfg.mechanism, theta, mc, seed)
            })?;
            let mut row: Vec<String> = theta.values.iter().map(|&v| fmt_f64(v)).collect();
            row.extend(report.mse.iter().map(|&v| fmt_f64(v)));
            if weibull {
                let (ce, cg) = weibull_crlb(theta.values[0], theta.values[1], self.cfg.mechanism.n)?;
                row.extend([fmt_f64(ce), fmt_f64(cg)]);
            }
            row.extend([mc.to_string(), seed.to_string()]);
            t.push_row(row);
        }
        self.write("mse.csv", &t)
    }

    fn scatter(&mut self) -> Result<()> {
        let est = self.load_or_train()?;
        let prior = self.cfg.prior_spec()?;
        let points = self.stage("scatter", |ctx| {
            scatter(&est, &ctx.cfg.mechanism, &prior, ctx.cfg.evaluate.m_test, ctx.cfg.master_seed)
        })?;
        let names = self.cfg.parameter_names();
        let mut header: Vec<String> = names.iter().map(|n| format!("true_{n}")).collect();
        header.extend(names.iter().map(|n| format!("est_{n}")));
        let mut t = self.table(header);
        for p in &points {
            let mut row = p.truth.clone();
            row.extend_from_slice(&p.estimate);
            t.push_floats(&row);
        }
        self.write("scatter.csv", &t)
    }

    fn crlb(&mut self) -> Result<()> {
        if self.cfg.mechanism.kind != MechanismKind::Weibull {
            return Err(Error::config(
                "mechanism.kind",
                "Cramér-Rao bounds are only available for the weibull mechanism",
            ));
        }
        let n = self.cfg.mechanism.n;
        let mut t = self.table(vec![
            "eta".into(),
            "gamma".into(),
            "n".into(),
            "crlb_eta".into(),
            "crlb_gamma".into(),
        ]);
        let thetas = self.cfg.theta_test()?;
        let rows = self.stage("crlb", |_| {
            thetas
                .iter()
                .map(|th| weibull_crlb(th.values[0], th.values[1], n).map(|c| (th.values.clone(), c)))
                .collect::<Result<Vec<_>>>()
        })?;
        for (th, (ce, cg)) in rows {
            t.push_row(vec![fmt_f64(th[0]), fmt_f64(th[1]), n.to_string(), fmt_f64(ce), fmt_f64(cg)]);
        }
        self.write("crlb.csv", &t)
    }
}

/// Output directory a command would use for `cfg` without `--out`.
pub fn default_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new("out").join(&cfg.name))
}
