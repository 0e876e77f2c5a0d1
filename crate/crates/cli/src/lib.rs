//! Command-line front end: ingestion, splitting, training, evaluation,
//! density sweeps and stability summaries.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pnbm_core::data::{read_split, write_split};
use pnbm_core::evaluation::{
    density_sweep, inc_percent, render_table, repeat_protocol, DensitySlice, RepeatMode, STABILITY_BUDGET,
    STABILITY_TOL,
};
use pnbm_core::model::Checkpoint;
use pnbm_core::training::{train, ModelKind, TrainHistory};
use pnbm_core::{
    center, load_ratings, split, stability, Constraints, Error, EvalReport, ExperimentSpec, Predictor, RatingDataset,
    RatingFormat, RegForm, SimilarityLayers, Split, Variant, Workspace,
};
use serde::Serialize;

pub use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_EMPTY: i32 = 5;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// The command ran but produced nothing to report.
    Empty(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => e.fmt(f),
            Failure::Empty(msg) => f.write_str(msg),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(Error::Diverged { .. }) => EXIT_DIVERGED,
            Failure::Core(Error::Mismatch(_)) => EXIT_MISMATCH,
            Failure::Core(_) => EXIT_INPUT,
            Failure::Empty(_) => EXIT_EMPTY,
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Parser)]
#[command(name = "pnbm", version, about = "Neighborhood recommenders with learned item similarity")]
pub struct Cli {
    /// Worker threads for evaluation and repeats (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a ratings file and print its summary.
    Ingest(DataArgs),
    /// Split a ratings file and write train/valid/test manifests.
    Split {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a learned-similarity model and write history, checkpoint and config.
    Train(TrainArgs),
    /// Score a checkpoint, or run the repeat protocol over profiles.
    Evaluate(EvaluateArgs),
    /// Evaluate profiles on density slices of a dataset.
    Sweep(SweepArgs),
    /// Convergence epoch and plateau length of a training history.
    Stability(StabilityArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `tsv` or `double-colon`.
    #[arg(long, default_value = "tsv")]
    pub format: String,
}

impl DataArgs {
    fn load(&self) -> CmdResult<RatingDataset> {
        let format: RatingFormat = self.format.parse()?;
        Ok(load_ratings(&self.data, format)?)
    }
}

/// Overrides on top of a profile or config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// regsim, slim, pnbm, mpnbm, tanh-mpnbm, pcc or cos.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds both the split and the model.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// One value per layer, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub phi: Option<Vec<f64>>,
    /// `linear` or `tanh`.
    #[arg(long)]
    pub variant: Option<String>,
    /// `omega` (λΩΓ) or `omega-squared` (λΩ²Γ).
    #[arg(long)]
    pub reg_form: Option<String>,
    /// Prediction neighborhood size; 0 uses every rated item.
    #[arg(long)]
    pub k: Option<usize>,
}

impl ModelArgs {
    pub fn resolve(&self, default_profile: &str) -> CmdResult<ExperimentConfig> {
        let mut c = match (&self.config, &self.profile) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either --config or --profile, not both".into()).into());
            }
            (Some(path), None) => ExperimentConfig::load(path)?,
            (None, profile) => ExperimentConfig::from_profile(profile.as_deref().unwrap_or(default_profile))?,
        };
        self.apply(&mut c)?;
        Ok(c)
    }

    fn apply(&self, c: &mut ExperimentConfig) -> CmdResult<()> {
        if let Some(seed) = self.seed {
            c.seed = seed;
            c.split_seed = seed;
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.beta {
            c.beta = v;
        }
        if let Some(v) = &self.lambda {
            c.lambda = v.clone();
        }
        if let Some(v) = &self.phi {
            c.phi = v.clone();
        }
        if let Some(v) = &self.variant {
            c.variant = v.parse::<Variant>()?;
        }
        if let Some(v) = &self.reg_form {
            c.reg_form = v.parse::<RegForm>()?;
        }
        if let Some(k) = self.k {
            c.k = (k > 0).then_some(k);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    /// Use existing split manifests instead of splitting `--data`.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Training output directory (checkpoint.bin, split/, config.toml).
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Partition to score in checkpoint mode: `test` or `valid`.
    #[arg(long, default_value = "test")]
    pub on: String,
    /// Checkpoint of the model INC% is measured against.
    #[arg(long)]
    pub baseline_checkpoint: Option<PathBuf>,
    /// Dataset for the repeat protocol.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "tsv")]
    pub format: String,
    /// Profiles to compare in protocol mode, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub profiles: Option<Vec<String>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Baseline profile for INC% (protocol mode) or `pcc`/`cos` (checkpoint mode).
    #[arg(long)]
    pub baseline: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "pcc,mpnbm")]
    pub profiles: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub slices: usize,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    /// History CSV written by `train`.
    #[arg(long)]
    pub history: PathBuf,
    #[arg(long, default_value_t = STABILITY_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = STABILITY_BUDGET)]
    pub budget: usize,
    /// Curve to analyse: `test` or `valid`.
    #[arg(long, default_value = "test")]
    pub column: String,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Some(jobs) = cli.jobs {
        // a second call in one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let mut stdout = std::io::stdout().lock();
    match dispatch(&cli.command) {
        Ok(text) => {
            let _ = stdout.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> CmdResult<String> {
    match command {
        Command::Ingest(data) => cmd_ingest(data),
        Command::Split { data, seed, out } => cmd_split(data, *seed, out),
        Command::Train(args) => {
            let config = train_config(args)?;
            let summary = cmd_train(&config, &args.out)?;
            Ok(format!(
                "best_epoch={} valid_rmse={:.6} test_rmse={}\nwrote {}\n",
                summary.best_epoch,
                summary.valid_rmse,
                summary.test_rmse.map_or("-".into(), |v| format!("{v:.6}")),
                args.out.display()
            ))
        }
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Stability(args) => cmd_stability(args),
    }
}

pub fn cmd_ingest(data: &DataArgs) -> CmdResult<String> {
    let ds = data.load()?;
    Ok(format!(
        "users={} items={} ratings={} density={:.2}%\nscale_min={} scale_max={}\n",
        ds.num_users(),
        ds.num_items(),
        ds.len(),
        100.0 * ds.density(),
        ds.scale_min(),
        ds.scale_max()
    ))
}

pub fn cmd_split(data: &DataArgs, seed: u64, out: &Path) -> CmdResult<String> {
    let ds = data.load()?;
    let parts = split(&ds, &pnbm_core::SplitSpec::standard(seed))?;
    write_split(out, &parts)?;
    Ok(format!(
        "train={} valid={} test={}\nwrote {}\n",
        parts.train.len(),
        parts.valid.len(),
        parts.test.len(),
        out.display()
    ))
}

fn train_config(args: &TrainArgs) -> CmdResult<ExperimentConfig> {
    let mut config = args.model.resolve("mpnbm")?;
    if let Some(data) = &args.data {
        config.data = Some(data.clone());
    }
    if let Some(format) = &args.format {
        config.format = format.parse()?;
    }
    if let Some(split) = &args.split {
        config.split = Some(split.clone());
    }
    Ok(config)
}

fn load_split(config: &ExperimentConfig) -> CmdResult<Split> {
    if let Some(dir) = &config.split {
        return Ok(read_split(dir)?);
    }
    let Some(data) = &config.data else {
        return Err(Error::Config("no input: give --data or --split".into()).into());
    };
    let ds = load_ratings(data, config.format)?;
    Ok(split(&ds, &config.split_spec())?)
}

/// Fresh, initialized layers for a learned profile.
pub fn build_layers(
    config: &ExperimentConfig,
    constraints: &mut Constraints<'_>,
) -> CmdResult<SimilarityLayers> {
    let kind = config.kind()?;
    if !kind.is_learned() {
        return Err(Error::Config(format!(
            "profile `{kind}` has no trainable similarity; score it with `evaluate --data .. --profiles {kind}`"
        ))
        .into());
    }
    let plan = kind.layer_plan();
    if config.phi.len() != plan.len() {
        return Err(Error::Config(format!(
            "profile `{kind}` has {} layers, {} importance values given",
            plan.len(),
            config.phi.len()
        ))
        .into());
    }
    let spec = plan
        .iter()
        .zip(&config.phi)
        .map(|(&(omega, _), &phi)| (constraints.get(omega), phi))
        .collect();
    let mut layers = SimilarityLayers::new(config.variant, spec)?;
    layers.init_uniform(config.seed);
    Ok(layers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub best_epoch: usize,
    pub valid_rmse: f64,
    pub test_rmse: Option<f64>,
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult<()> {
    fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn create_dir(dir: &Path) -> CmdResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn history_bytes(history: &TrainHistory, timings: bool) -> Vec<u8> {
    let mut buf = Vec::new();
    history.write_csv(&mut buf, timings).expect("writing to memory");
    buf
}

/// Writes `config.toml`, `split/`, `history.csv` and `checkpoint.bin` under
/// `out`. On divergence the partial history is still written.
pub fn cmd_train(config: &ExperimentConfig, out: &Path) -> CmdResult<TrainSummary> {
    config.train_config().validate(config.phi.len().max(1))?;
    let parts = load_split(config)?;
    create_dir(out)?;
    write_file(&out.join("config.toml"), config.to_toml().as_bytes())?;
    write_split(out.join("split"), &parts)?;

    let view = center(&parts.train)?;
    let mut constraints = Constraints::new(&parts.train, &view);
    let layers = build_layers(config, &mut constraints)?;
    let work = Workspace::new(&view, config.variant)?;
    let history_path = out.join("history.csv");
    match train(layers, &work, &parts.valid, &parts.test, &config.train_config()) {
        Ok(outcome) => {
            write_file(&history_path, &history_bytes(&outcome.history, config.timings))?;
            outcome.best.checkpoint().save(out.join("checkpoint.bin"))?;
            let best = outcome.history.best().expect("at least one epoch");
            Ok(TrainSummary {
                best_epoch: outcome.history.best_epoch,
                valid_rmse: best.valid_rmse,
                test_rmse: best.test_rmse,
            })
        }
        Err(Error::Diverged { epoch, sample, history }) => {
            write_file(&history_path, &history_bytes(&history, config.timings))?;
            Err(Error::Diverged { epoch, sample, history }.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Result of scoring one checkpoint on one partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointReport {
    pub model: String,
    pub variant: Variant,
    pub partition: String,
    pub k: Option<usize>,
    pub rmse: f64,
    pub count: usize,
    pub clamped: usize,
    pub baseline: Option<String>,
    pub baseline_rmse: Option<f64>,
    pub inc_percent: Option<f64>,
}

impl CheckpointReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:>8} {:>8} {:>8} {:>8}", "model", "RMSE", "INC%", "count", "k");
        let _ = writeln!(
            s,
            "{:<14} {:>8.4} {:>8} {:>8} {:>8}",
            self.model,
            self.rmse,
            self.inc_percent.map_or("-".into(), |v| format!("{v:.2}")),
            self.count,
            self.k.map_or("all".into(), |k| k.to_string())
        );
        if let (Some(name), Some(rmse)) = (&self.baseline, self.baseline_rmse) {
            let _ = writeln!(s, "baseline {name}: RMSE {rmse:.4}");
        }
        s
    }
}

/// Rebuilds the similarity of a checkpoint over the training partition of
/// `parts`; the constraint matrices are recomputed from training data.
fn checkpoint_similarity(ckpt: &Checkpoint, parts: &Split) -> CmdResult<Vec<f64>> {
    if ckpt.dim != parts.train.num_items() {
        return Err(Error::Mismatch(format!(
            "checkpoint covers {} items, split has {}",
            ckpt.dim,
            parts.train.num_items()
        ))
        .into());
    }
    let view = center(&parts.train)?;
    let mut constraints = Constraints::new(&parts.train, &view);
    let omegas = ckpt.layers.iter().map(|l| constraints.get(l.omega)).collect();
    Ok(SimilarityLayers::from_checkpoint(ckpt, omegas)?.effective_matrix())
}

fn score(sim: &[f64], variant: Variant, parts: &Split, on: &RatingDataset, k: Option<usize>) -> CmdResult<(f64, usize, usize)> {
    let view = center(&parts.train)?;
    let work = Workspace::new(&view, variant)?;
    let report = pnbm_core::rmse(&Predictor::new(&work, sim, k), on)?;
    Ok((report.rmse, report.count, report.clamped))
}

/// Scores a checkpoint on the validation or test partition of its split.
pub fn evaluate_checkpoint(
    checkpoint: &Path,
    split_dir: &Path,
    on: &str,
    k: Option<usize>,
    baseline: Option<Baseline<'_>>,
    model_name: &str,
) -> CmdResult<CheckpointReport> {
    let parts = read_split(split_dir)?;
    let part = match on {
        "test" => &parts.test,
        "valid" => &parts.valid,
        other => return Err(Error::Config(format!("unknown partition `{other}`")).into()),
    };
    let ckpt = Checkpoint::load(checkpoint)?;
    let sim = checkpoint_similarity(&ckpt, &parts)?;
    let (rmse, count, clamped) = score(&sim, ckpt.variant, &parts, part, k)?;

    let base = match baseline {
        None => None,
        Some(Baseline::Checkpoint(path)) => {
            let b = Checkpoint::load(path)?;
            let sim = checkpoint_similarity(&b, &parts)?;
            Some((path.display().to_string(), score(&sim, b.variant, &parts, part, k)?.0))
        }
        Some(Baseline::Static(kind)) => {
            let view = center(&parts.train)?;
            let mut constraints = Constraints::new(&parts.train, &view);
            let model = pnbm_core::make_baseline(kind, &mut constraints, Variant::Linear, 0)?;
            Some((kind.name().to_string(), score(&model.similarity(), Variant::Linear, &parts, part, k)?.0))
        }
    };
    Ok(CheckpointReport {
        model: model_name.to_string(),
        variant: ckpt.variant,
        partition: on.to_string(),
        k,
        rmse,
        count,
        clamped,
        inc_percent: base.as_ref().map(|(_, b)| inc_percent(*b, rmse)),
        baseline_rmse: base.as_ref().map(|(_, b)| *b),
        baseline: base.map(|(name, _)| name),
    })
}

#[derive(Debug, Clone, Copy)]
pub enum Baseline<'a> {
    Checkpoint(&'a Path),
    /// A correlation model built on the same training partition.
    Static(ModelKind),
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult<String> {
    if args.data.is_some() {
        return evaluate_protocol(args);
    }
    let (checkpoint, split_dir, name) = match (&args.run, &args.checkpoint, &args.split) {
        (Some(run), None, None) => {
            let name = ExperimentConfig::load(&run.join("config.toml"))
                .map(|c| c.profile)
                .unwrap_or_else(|_| "checkpoint".into());
            (run.join("checkpoint.bin"), run.join("split"), name)
        }
        (None, Some(c), Some(s)) => (c.clone(), s.clone(), "checkpoint".to_string()),
        _ => {
            return Err(Error::Config(
                "give --run DIR, or --checkpoint with --split, or --data for the repeat protocol".into(),
            )
            .into())
        }
    };
    let k = match args.model.k {
        Some(0) => None,
        Some(k) => Some(k),
        None => Some(pnbm_core::training::DEFAULT_EVAL_K),
    };
    let baseline = match (&args.baseline_checkpoint, &args.baseline) {
        (Some(path), _) => Some(Baseline::Checkpoint(path)),
        (None, Some(name)) => {
            let kind: ModelKind = name.parse()?;
            if kind.is_learned() {
                return Err(Error::Config(format!(
                    "learned baseline `{kind}` needs a trained model: use --baseline-checkpoint"
                ))
                .into());
            }
            Some(Baseline::Static(kind))
        }
        (None, None) => None,
    };
    let report = evaluate_checkpoint(&checkpoint, &split_dir, &args.on, k, baseline, &name)?;
    let text = report.render();
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_file(&out.join("report.json"), to_json(&report).as_bytes())?;
        write_file(&out.join("report.txt"), text.as_bytes())?;
    }
    Ok(text)
}

fn protocol_specs(profiles: &[String], model: &ModelArgs) -> CmdResult<Vec<ExperimentSpec>> {
    profiles
        .iter()
        .map(|p| {
            let args = ModelArgs {
                profile: Some(p.clone()),
                config: None,
                ..model.clone()
            };
            let c = args.resolve(p)?;
            Ok(ExperimentSpec {
                kind: c.kind()?,
                config: c.train_config(),
                fractions: (c.train_frac, c.valid_frac, c.test_frac),
            })
        })
        .collect()
}

fn evaluate_protocol(args: &EvaluateArgs) -> CmdResult<String> {
    let data = DataArgs {
        data: args.data.clone().expect("protocol mode"),
        format: args.format.clone(),
    };
    let ds = data.load()?;
    let mut profiles = args.profiles.clone().unwrap_or_else(|| {
        vec![args.model.profile.clone().unwrap_or_else(|| "mpnbm".into())]
    });
    let baseline: ModelKind = args.baseline.as_deref().unwrap_or("regsim").parse()?;
    if !profiles.iter().any(|p| p.parse::<ModelKind>().ok() == Some(baseline)) {
        profiles.insert(0, baseline.name().to_string());
    }
    let specs = protocol_specs(&profiles, &args.model)?;
    let repeats = args.repeats.unwrap_or(5);
    let seed = args.model.seed.unwrap_or(0);
    let mut reports: Vec<EvalReport> = Vec::with_capacity(specs.len());
    for spec in &specs {
        reports.push(repeat_protocol(spec, &ds, repeats, seed, RepeatMode::Splits)?);
    }
    let base_rmse = reports
        .iter()
        .find(|r| r.model_kind == baseline)
        .map(|r| r.rmse)
        .expect("baseline was evaluated");
    let reports: Vec<EvalReport> = reports
        .into_iter()
        .map(|r| r.with_baseline(baseline.name(), base_rmse))
        .collect();
    let text = render_table(&reports);
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_file(&out.join("report.json"), to_json(&reports).as_bytes())?;
        write_file(&out.join("report.txt"), text.as_bytes())?;
    }
    Ok(text)
}

pub const SWEEP_CSV_HEADER: &str =
    "slice,min_user_ratings,max_user_ratings,users,items,ratings,density,model,rmse,inc_percent";

fn sweep_csv(slices: &[DensitySlice]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for slice in slices {
        for r in &slice.reports {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                slice.index,
                slice.min_user_ratings,
                slice.max_user_ratings,
                slice.users,
                slice.items,
                slice.ratings,
                slice.density,
                r.model_kind.name(),
                r.rmse,
                r.inc_percent.map(|v| v.to_string()).unwrap_or_default()
            );
        }
    }
    s
}

pub fn cmd_sweep(args: &SweepArgs) -> CmdResult<String> {
    let ds = args.data.load()?;
    let specs = protocol_specs(&args.profiles, &args.model)?;
    let seed = args.model.seed.unwrap_or(0);
    let mut outcome = density_sweep(&ds, args.slices, &specs, args.repeats, seed)?;
    let mut text = String::new();
    for (index, reason) in &outcome.skipped {
        eprintln!("warning: slice {index} skipped: {reason}");
    }
    if outcome.slices.is_empty() {
        return Err(Failure::Empty("every density slice was skipped".into()));
    }
    create_dir(&args.out)?;
    for slice in &mut outcome.slices {
        // INC% against the first listed profile
        let base = slice.reports[0].rmse;
        let name = slice.reports[0].model_kind.name();
        slice.reports = std::mem::take(&mut slice.reports)
            .into_iter()
            .map(|r| r.with_baseline(name, base))
            .collect();
        let _ = writeln!(
            text,
            "slice {}: users={} items={} ratings={} density={:.2}%",
            slice.index,
            slice.users,
            slice.items,
            slice.ratings,
            100.0 * slice.density
        );
        text.push_str(&render_table(&slice.reports));
        write_file(
            &args.out.join(format!("slice_{:02}.json", slice.index)),
            to_json(slice).as_bytes(),
        )?;
    }
    write_file(&args.out.join("sweep.csv"), sweep_csv(&outcome.slices).as_bytes())?;
    Ok(text)
}

pub fn cmd_stability(args: &StabilityArgs) -> CmdResult<String> {
    let file = fs::File::open(&args.history).map_err(|e| Error::Io {
        path: args.history.clone(),
        source: e,
    })?;
    let history = TrainHistory::read_csv(BufReader::new(file))?;
    let curve: Vec<f64> = match args.column.as_str() {
        "test" => history.rmse_curve(),
        "valid" => history.records.iter().map(|r| r.valid_rmse).collect(),
        other => return Err(Error::Config(format!("unknown column `{other}`")).into()),
    };
    let s = stability(&curve, args.tol, args.budget).ok_or_else(|| Failure::Empty("history is empty".into()))?;
    let zeta = if s.censored { format!(">={}", s.zeta) } else { s.zeta.to_string() };
    Ok(format!(
        "epsilon={} zeta={} censored={} converged={}\n",
        s.epsilon, zeta, s.censored, s.converged
    ))
}
