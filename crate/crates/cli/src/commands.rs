use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mirrormode::demos::{dataset_stats, DemoDataset, DemoHeader};
use mirrormode::engine::{GameConfig, Team};
use mirrormode::metrics::{read_metrics, write_metrics, MetricsRow, Report, SourceSummary};
use mirrormode::mirror::MirrorAgent;
use mirrormode::neural::load_checkpoint;
use mirrormode::play::ScriptedPolicy;
use mirrormode::sim::{evaluate, simulate};
use mirrormode::trainer::{train, TrainError, TrainerConfig, CHECKPOINT_FILE};

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Data(anyhow::Error),
    Numeric(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (CliError::Config(e) | CliError::Data(e) | CliError::Numeric(e)) = self;
        write!(f, "{e:#}")
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Config(e.into()),
            TrainError::Numeric { .. } => CliError::Numeric(e.into()),
            _ => CliError::Data(e.into()),
        }
    }
}

fn data(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Data(e.into())
}

fn config(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Config(e.into())
}

#[derive(Debug, Parser)]
#[command(name = "mirrormode", version, about = "Train, simulate, evaluate and serve Mirror Mode agents")]
pub struct Cli {
    /// Game rules as JSON; defaults to the built-in rule set.
    #[arg(long, global = true)]
    pub game_config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy against the standard enemy.
    Train(TrainArgs),
    /// Play scripted demonstrators against the standard enemy.
    Simulate(SimulateArgs),
    /// Play a scripted player against a trained model in Mirror Mode.
    Eval(EvalArgs),
    /// Summarize a demonstration file.
    DemoStats { demos: PathBuf },
    /// Compare metrics files.
    Report(ReportArgs),
    /// Run the local game service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "baseline")]
    pub preset: String,
    /// Full trainer config as JSON; overrides the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Field override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub demos: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    /// Print the resolved config and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub blue: ScriptedPolicy,
    /// Enemy controller; only the standard enemy is supported.
    #[arg(long, default_value = "standard")]
    pub red: String,
    #[arg(long, default_value_t = 5)]
    pub episodes: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Session name stamped on every record.
    #[arg(long, default_value = "sim")]
    pub session: String,
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint file or a training output directory.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub blue: ScriptedPolicy,
    #[arg(long, default_value_t = 20)]
    pub episodes: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample actions instead of taking the greedy choice.
    #[arg(long)]
    pub sample: bool,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Also write the comparison as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value = "models")]
    pub models: PathBuf,
    #[arg(long, default_value = "sessions")]
    pub data: PathBuf,
}

pub fn load_game_config(path: Option<&Path>) -> Result<GameConfig, CliError> {
    match path {
        None => Ok(GameConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).map_err(config)?;
            GameConfig::from_json(&text).with_context(|| format!("parsing {}", p.display())).map_err(config)
        }
    }
}

pub fn resolve_train_config(args: &TrainArgs) -> Result<TrainerConfig, CliError> {
    let base = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).map_err(config)?;
            TrainerConfig::from_json(&text)?
        }
        None => TrainerConfig::preset(&args.preset)?,
    };
    let mut pairs = args.overrides.clone();
    if let Some(s) = args.steps {
        pairs.push(format!("total_steps={s}"));
    }
    if let Some(s) = args.seed {
        pairs.push(format!("seed={s}"));
    }
    Ok(base.with_overrides(pairs.iter().map(String::as_str))?)
}

fn save_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), CliError> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display())).map_err(data)?;
    write_metrics(BufWriter::new(f), rows).map_err(data)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let game = load_game_config(cli.game_config.as_deref())?;
    match cli.command {
        Command::Train(args) => run_train(&game, &args, out),
        Command::Simulate(args) => run_simulate(&game, &args, out),
        Command::Eval(args) => run_eval(&game, &args, out),
        Command::DemoStats { demos } => run_demo_stats(&game, &demos, out),
        Command::Report(args) => run_report(&args, out),
        Command::Serve(args) => run_serve(game, args),
    }
}

fn run_train(game: &GameConfig, args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_train_config(args)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&cfg).expect("config serializes")).map_err(data)?;
    if args.dry_run {
        return Ok(());
    }
    if cfg.needs_demos() && args.demos.is_none() {
        return Err(config(anyhow::anyhow!("preset `{}` needs --demos", cfg.preset)));
    }
    let mut progress = |r: &mirrormode::trainer::LogRow| {
        eprintln!(
            "step {:>8}  reward {:>7.3}  gail {:.4}  bc {:.4}  win {:.2}  tie {:.2}",
            r.step, r.mean_cum_reward, r.gail_loss, r.bc_loss, r.win_rate, r.tie_rate
        );
    };
    let res = train(&cfg, game, args.demos.as_deref(), &args.out, &mut progress)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    writeln!(out, "checkpoint: {}", res.checkpoint.display()).map_err(data)?;
    writeln!(out, "log: {}", res.log.display()).map_err(data)?;
    writeln!(out, "repairs during training: {:?}", res.repairs).map_err(data)?;
    Ok(())
}

fn run_simulate(game: &GameConfig, args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.red != "standard" {
        return Err(config(anyhow::anyhow!("unsupported red controller `{}` (only `standard`)", args.red)));
    }
    let res = simulate(game, args.blue, args.episodes, args.seed, &args.session, args.record.is_some())
        .map_err(data)?;
    if let Some(p) = &args.record {
        let mut d = DemoDataset::new(DemoHeader::for_config(game));
        d.records = res.records;
        d.save(p).with_context(|| format!("writing {}", p.display())).map_err(data)?;
        writeln!(out, "demonstrations: {} records -> {}", d.records.len(), p.display()).map_err(data)?;
    }
    if let Some(p) = &args.metrics {
        save_metrics(p, &res.metrics)?;
        writeln!(out, "metrics: {} rows -> {}", res.metrics.len(), p.display()).map_err(data)?;
    }
    let b = res.totals.team(Team::Blue);
    writeln!(
        out,
        "{} episodes: blue wins {} red wins {} ties {}; blue movements {} attacks {}",
        res.totals.episodes,
        b.wins,
        res.totals.team(Team::Red).wins,
        res.totals.ties,
        b.movements,
        b.attacks
    )
    .map_err(data)
}

pub fn model_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(CHECKPOINT_FILE)
    } else {
        path.to_path_buf()
    }
}

fn run_eval(game: &GameConfig, args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = model_file(&args.model);
    let ck = load_checkpoint(&file).with_context(|| format!("loading {}", file.display())).map_err(data)?;
    let mut agent = MirrorAgent::new(ck, game, args.seed).map_err(config)?;
    agent.sample = args.sample;
    let label = args.model.display().to_string();
    let res = evaluate(game, &mut agent, args.blue, args.episodes, args.seed, &label).map_err(data)?;
    if let Some(p) = &args.metrics {
        save_metrics(p, &res.metrics)?;
    }
    let r = res.totals.team(Team::Red);
    writeln!(
        out,
        "{} episodes: agent wins {} player wins {} ties {}; agent movements {} attacks {}",
        res.totals.episodes,
        r.wins,
        res.totals.team(Team::Blue).wins,
        res.totals.ties,
        r.movements,
        r.attacks
    )
    .map_err(data)?;
    writeln!(out, "repairs: {}", serde_json::to_string(&res.repairs).expect("stats serialize")).map_err(data)
}

fn run_demo_stats(game: &GameConfig, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let d = DemoDataset::load(path).with_context(|| format!("loading {}", path.display())).map_err(data)?;
    let s = dataset_stats(&d);
    writeln!(out, "records:   {}", s.records).map_err(data)?;
    writeln!(out, "episodes:  {}", s.episodes).map_err(data)?;
    writeln!(out, "decisions: {}", s.decisions).map_err(data)?;
    for (t, n) in s.histogram() {
        writeln!(out, "  {t:?}: {n}").map_err(data)?;
    }
    writeln!(out, "blue records: {}  red records: {}", s.per_team[0], s.per_team[1]).map_err(data)?;
    for w in d.header.mismatches(game) {
        writeln!(out, "warning: {w}").map_err(data)?;
    }
    Ok(())
}

fn run_report(args: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut sources = Vec::new();
    for p in &args.files {
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("metrics").to_string();
        let f = File::open(p).with_context(|| format!("opening {}", p.display())).map_err(data)?;
        let rows = read_metrics(f, &name).map_err(data)?;
        sources.push(SourceSummary::from_rows(&name, &rows).map_err(data)?);
    }
    let report = Report::new(sources);
    write!(out, "{}", report.to_text()).map_err(data)?;
    if let Some(p) = &args.csv {
        std::fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display())).map_err(data)?;
    }
    Ok(())
}

fn run_serve(game: GameConfig, args: ServeArgs) -> Result<(), CliError> {
    let addr: std::net::SocketAddr =
        format!("{}:{}", args.host, args.port).parse().context("invalid host/port").map_err(config)?;
    let cfg = crate::service::ServiceConfig { game, models_dir: args.models, data_dir: args.data };
    let rt = tokio::runtime::Runtime::new().map_err(data)?;
    rt.block_on(crate::service::serve(cfg, addr)).map_err(config)
}
