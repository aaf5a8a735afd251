//! Command-line front end.
//!
//! Every run is parameterized by a flat `key=value` config, optionally read
//! from `--config FILE` and overridden by flags (`--region-set emn` sets key
//! `region_set`). Unknown keys are rejected. The fully resolved config is
//! echoed to `<out>.config` next to the primary output.
//!
//! Exit codes: 0 ok, 2 bad arguments, 3 data error, 4 protocol violation.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::coactivation::{FingerprintSet, VariantId};
use crate::eval::{evaluate_fingerprints, BootstrapConfig};
use crate::manifest::Manifest;
use crate::normalize::NormStats;
use crate::pipeline::{self, FingerprintConfig, PipelineError};
use crate::probe::{ProbeConfig, ProbeModel};
use crate::regions::SamplingPolicy;
use crate::synth::{self, IncoherenceMode, SyntheticConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARGS: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_PROTOCOL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Args(String),
    Data(String),
    Protocol(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Args(_) => EXIT_ARGS,
            CliError::Data(_) => EXIT_DATA,
            CliError::Protocol(_) => EXIT_PROTOCOL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Args(m) => write!(f, "argument error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Protocol(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Protocol(_) => CliError::Protocol(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

/// Every recognized config key with its default, if any.
const KEYS: &[(&str, Option<&str>)] = &[
    ("manifest", None),
    ("stats", None),
    ("fingerprints", None),
    ("model", None),
    ("out", None),
    ("variant", Some("dca")),
    ("variants", Some("all")),
    ("region_set", Some("emn")),
    ("k", Some("20")),
    ("seed_root", Some("0")),
    ("frames", Some("15")),
    ("c", Some("0.1")),
    ("max_iter", Some("2000")),
    ("tolerance", Some("1e-6")),
    ("probe_seed", Some("42")),
    ("class_balanced", Some("true")),
    ("lbfgs_memory", Some("10")),
    ("n_resamples", Some("1000")),
    ("bootstrap_seed", Some("42")),
    ("d", Some("64")),
    ("n_videos", Some("200")),
    ("frames_per_video", Some("5")),
    ("mean_scale", Some("1")),
    ("noise_scale", Some("0.5")),
    ("incoherence_mode", Some("independent_means")),
    ("flip_fraction", Some("0.5")),
    ("train_fraction", Some("0.5")),
    ("seed", Some("7")),
];

/// Resolved run parameters: defaults, then config file, then flags.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn with_defaults() -> Self {
        let values = KEYS
            .iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v.to_string())))
            .collect();
        RunConfig { values }
    }

    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse_into(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Args(format!("config line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Args(format!("unknown config key {key:?}")));
        }
        self.values.insert(key.to_owned(), value.to_owned());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Args(format!("missing required key {key:?}")))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.require(key).map(PathBuf::from)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|e| CliError::Args(format!("invalid value {raw:?} for {key}: {e}")))
    }

    /// Sorted `key=value` lines of every resolved key.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    fn write_echo(&self, out: &Path) -> Result<(), CliError> {
        let mut name = out.as_os_str().to_owned();
        name.push(".config");
        fs::write(PathBuf::from(name), self.echo()).map_err(data)
    }

    fn policy(&self) -> Result<SamplingPolicy, CliError> {
        SamplingPolicy::new(self.parsed("k")?, self.parsed("seed_root")?, self.parsed("region_set")?)
            .map_err(|e| CliError::Args(e.to_string()))
    }

    fn fingerprint_config(&self) -> Result<FingerprintConfig, CliError> {
        Ok(FingerprintConfig {
            policy: self.policy()?,
            variant: self.parsed("variant")?,
            n_frames: self.parsed("frames")?,
        })
    }

    fn probe_config(&self) -> Result<ProbeConfig, CliError> {
        Ok(ProbeConfig {
            c_value: self.parsed("c")?,
            max_iter: self.parsed("max_iter")?,
            seed: self.parsed("probe_seed")?,
            tolerance: self.parsed("tolerance")?,
            class_balanced: self.parsed("class_balanced")?,
            memory: self.parsed("lbfgs_memory")?,
        })
    }

    fn bootstrap(&self) -> Result<BootstrapConfig, CliError> {
        Ok(BootstrapConfig {
            n_resamples: self.parsed("n_resamples")?,
            seed: self.parsed("bootstrap_seed")?,
        })
    }

    fn synthetic(&self) -> Result<SyntheticConfig, CliError> {
        let mode = self.require("incoherence_mode")?;
        Ok(SyntheticConfig {
            d: self.parsed("d")?,
            k: self.parsed("k")?,
            n_videos_per_class: self.parsed("n_videos")?,
            frames_per_video: self.parsed("frames_per_video")?,
            mean_scale: self.parsed("mean_scale")?,
            noise_scale: self.parsed("noise_scale")?,
            incoherence: IncoherenceMode::parse(mode)
                .ok_or_else(|| CliError::Args(format!("unknown incoherence_mode {mode:?}")))?,
            flip_fraction: self.parsed("flip_fraction")?,
            regions: self.parsed("region_set")?,
            train_fraction: self.parsed("train_fraction")?,
            seed: self.parsed("seed")?,
        })
    }

    fn variants(&self) -> Result<Vec<VariantId>, CliError> {
        match self.require("variants")? {
            "all" => Ok(VariantId::ALL.to_vec()),
            list => list
                .split(',')
                .map(|v| v.trim().parse().map_err(|e: crate::coactivation::CoactivationError| CliError::Args(e.to_string())))
                .collect(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dca", version, about = "Dimensional coactivation fingerprints, probe training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit token statistics on a training-split manifest.
    Stats(Flags),
    /// Write a fingerprint file for every selected frame of a manifest.
    Fingerprint(Flags),
    /// Train the probe on fingerprints or on a training-split manifest.
    Train(Flags),
    /// Score a manifest or fingerprint file with a trained model.
    Eval(Flags),
    /// Generate a synthetic dataset directory.
    Synth(Flags),
    /// Train and evaluate every variant on one train/eval manifest.
    Ablate(Flags),
}

/// Flags mirror config keys with `_` spelled `-`.
#[derive(Debug, Args)]
struct Flags {
    /// Flat key=value config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<String>,
    #[arg(long)]
    stats: Option<String>,
    #[arg(long)]
    fingerprints: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    variants: Option<String>,
    #[arg(long)]
    region_set: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    seed_root: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    probe_seed: Option<String>,
    #[arg(long)]
    class_balanced: Option<String>,
    #[arg(long)]
    lbfgs_memory: Option<String>,
    #[arg(long)]
    n_resamples: Option<String>,
    #[arg(long)]
    bootstrap_seed: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    n_videos: Option<String>,
    #[arg(long)]
    frames_per_video: Option<String>,
    #[arg(long)]
    mean_scale: Option<String>,
    #[arg(long)]
    noise_scale: Option<String>,
    #[arg(long)]
    incoherence_mode: Option<String>,
    #[arg(long)]
    flip_fraction: Option<String>,
    #[arg(long)]
    train_fraction: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::with_defaults();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Args(format!("cannot read config {}: {e}", path.display())))?;
            cfg.parse_into(&text)?;
        }
        let flags = [
            ("manifest", &self.manifest),
            ("stats", &self.stats),
            ("fingerprints", &self.fingerprints),
            ("model", &self.model),
            ("out", &self.out),
            ("variant", &self.variant),
            ("variants", &self.variants),
            ("region_set", &self.region_set),
            ("k", &self.k),
            ("seed_root", &self.seed_root),
            ("frames", &self.frames),
            ("c", &self.c),
            ("max_iter", &self.max_iter),
            ("tolerance", &self.tolerance),
            ("probe_seed", &self.probe_seed),
            ("class_balanced", &self.class_balanced),
            ("lbfgs_memory", &self.lbfgs_memory),
            ("n_resamples", &self.n_resamples),
            ("bootstrap_seed", &self.bootstrap_seed),
            ("d", &self.d),
            ("n_videos", &self.n_videos),
            ("frames_per_video", &self.frames_per_video),
            ("mean_scale", &self.mean_scale),
            ("noise_scale", &self.noise_scale),
            ("incoherence_mode", &self.incoherence_mode),
            ("flip_fraction", &self.flip_fraction),
            ("train_fraction", &self.train_fraction),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

/// Fits and writes token statistics. The manifest must be training-only.
pub fn cmd_stats(cfg: &RunConfig) -> Result<String, CliError> {
    let (manifest, out) = (cfg.path("manifest")?, cfg.path("out")?);
    let manifest = Manifest::read(manifest).map_err(data)?;
    let stats = pipeline::fit_stats(&manifest)?;
    stats.write(&out).map_err(data)?;
    cfg.write_echo(&out)?;
    Ok(format!("wrote stats D={} to {}\n", stats.dim(), out.display()))
}

pub fn cmd_fingerprint(cfg: &RunConfig) -> Result<String, CliError> {
    let fp = cfg.fingerprint_config()?;
    let (manifest, stats, out) = (cfg.path("manifest")?, cfg.path("stats")?, cfg.path("out")?);
    let manifest = Manifest::read(manifest).map_err(data)?;
    let stats = NormStats::read(stats).map_err(data)?;
    let run = pipeline::fingerprint_source(&manifest, &stats, &fp)?;
    run.set.write(&out).map_err(data)?;
    cfg.write_echo(&out)?;
    Ok(format!(
        "wrote {} fingerprints of M={} to {} ({} frames, {} videos skipped)\n",
        run.set.len(),
        run.set.dim,
        out.display(),
        run.skipped_frames.len(),
        run.skipped_videos.len()
    ))
}

/// Trains from `fingerprints`, or from a training-only `manifest` plus `stats`.
pub fn cmd_train(cfg: &RunConfig) -> Result<String, CliError> {
    let probe = cfg.probe_config()?;
    let out = cfg.path("out")?;
    let fit = match (cfg.get("fingerprints"), cfg.get("manifest")) {
        (Some(path), None) => {
            let set = FingerprintSet::read(path).map_err(data)?;
            pipeline::train(&set, &probe)?
        }
        (None, Some(path)) => {
            let manifest = Manifest::read(path).map_err(data)?;
            let stats = NormStats::read(cfg.path("stats")?).map_err(data)?;
            pipeline::train_from_source(&manifest, &stats, &cfg.fingerprint_config()?, &probe)?.1
        }
        _ => return Err(CliError::Args("train needs exactly one of fingerprints or manifest".into())),
    };
    fit.model.write(&out).map_err(data)?;
    cfg.write_echo(&out)?;
    Ok(format!(
        "wrote model M={} to {} ({} iterations, stop: {})\n",
        fit.model.dim(),
        out.display(),
        fit.report.iterations,
        fit.report.stop.name()
    ))
}

/// Scores `fingerprints`, or a `manifest` plus `stats`; writes `<out>.txt` and `<out>.kv`.
///
/// Fingerprinting a manifest uses the model's variant and region set.
pub fn cmd_eval(cfg: &RunConfig) -> Result<String, CliError> {
    let bootstrap = cfg.bootstrap()?;
    let (model, out) = (cfg.path("model")?, cfg.path("out")?);
    let model = ProbeModel::read(model).map_err(data)?;
    let report = match (cfg.get("fingerprints"), cfg.get("manifest")) {
        (Some(path), None) => {
            let set = FingerprintSet::read(path).map_err(data)?;
            evaluate_fingerprints(&model, &set, bootstrap).map_err(data)?
        }
        (None, Some(path)) => {
            let manifest = Manifest::read(path).map_err(data)?;
            let stats = NormStats::read(cfg.path("stats")?).map_err(data)?;
            let mut fp = cfg.fingerprint_config()?;
            if let Some(v) = model.variant {
                fp.variant = v;
            }
            if let Some(r) = &model.region_set {
                fp.policy.region_set = r.clone();
            }
            pipeline::evaluate(&model, &manifest, &stats, &fp, bootstrap)?
        }
        _ => return Err(CliError::Args("eval needs exactly one of fingerprints or manifest".into())),
    };
    report.write(&out).map_err(data)?;
    cfg.write_echo(&out)?;
    Ok(report.to_table())
}

/// Writes a synthetic dataset under the `out` directory.
pub fn cmd_synth(cfg: &RunConfig) -> Result<String, CliError> {
    let config = cfg.synthetic()?;
    let out = cfg.path("out")?;
    let dataset = synth::generate(&config).map_err(CliError::Args)?;
    let written = dataset.write(&out).map_err(data)?;
    cfg.write_echo(&out.join("synth"))?;
    Ok(format!(
        "wrote {} videos; manifests {}, {}, {}\n",
        dataset.videos.len(),
        written.all.display(),
        written.train.display(),
        written.eval.display()
    ))
}

/// One row per variant; statistics come from `stats` or are fitted on the train split.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<String, CliError> {
    let base = cfg.fingerprint_config()?;
    let probe = cfg.probe_config()?;
    let bootstrap = cfg.bootstrap()?;
    let variants = cfg.variants()?;
    let (manifest, out) = (cfg.path("manifest")?, cfg.path("out")?);
    let manifest = Manifest::read(manifest).map_err(data)?;
    let stats = cfg.get("stats").map(NormStats::read).transpose().map_err(data)?;
    let rows = pipeline::ablate(&manifest, stats.as_ref(), &base, &probe, bootstrap, &variants)?;
    let table = pipeline::format_ablation_table(&rows);
    fs::write(&out, &table).map_err(data)?;
    cfg.write_echo(&out)?;
    Ok(table)
}

type CmdFn = fn(&RunConfig) -> Result<String, CliError>;

fn dispatch(cli: &Cli) -> (&Flags, CmdFn) {
    match &cli.command {
        Command::Stats(f) => (f, cmd_stats),
        Command::Fingerprint(f) => (f, cmd_fingerprint),
        Command::Train(f) => (f, cmd_train),
        Command::Eval(f) => (f, cmd_eval),
        Command::Synth(f) => (f, cmd_synth),
        Command::Ablate(f) => (f, cmd_ablate),
    }
}

/// Parses arguments and runs one subcommand, returning its stdout text.
pub fn execute<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Args(e.to_string()))?;
    let (flags, cmd) = dispatch(&cli);
    cmd(&flags.resolve()?)
}

/// Entry point of the `dca` binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ARGS } else { EXIT_OK };
        }
    };
    let (flags, cmd) = dispatch(&cli);
    match flags.resolve().and_then(|c| cmd(&c)) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("dca: {e}");
            e.exit_code()
        }
    }
}
