//! The `nfe` command line: `train`, `eval`, `rules`, `check-w2` and `stats`.
//!
//! Settings resolve as flags over `--config` file over built-in defaults, and
//! every output starts with `# key=value` lines holding the resolved values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist1d::{w2_closed, w2_quadrature, Dist1D};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, RankMetrics};
use crate::flows::BaseDist;
use crate::kgstore::{KgDataset, Split, Vocab};
use crate::rules::{export_histogram, parse_rules, rule_stat, RuleKind};
use crate::scoring::ScoreVariant;
use crate::training::{
    load_checkpoint, save_checkpoint, Checkpoint, ModelState, NegativeMode, TrainConfig, Trainer,
};

#[derive(Debug, Parser)]
#[command(name = "nfe", version, about = "Normalizing-flow knowledge graph embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Train a model and write its best-validation checkpoint.
    Train,
    /// Filtered ranking metrics of a checkpoint on the test split.
    Eval,
    /// Rule residual summaries and histograms of a checkpoint.
    Rules,
    /// Closed-form Wasserstein distances against quadrature.
    CheckW2,
    /// Dataset summary, or a parsed metrics record.
    Stats,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Rules => "rules",
            Command::CheckW2 => "check-w2",
            Command::Stats => "stats",
        }
    }
}

#[derive(Debug, Default, Clone, Args)]
struct Flags {
    /// key=value settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    train: Option<PathBuf>,
    #[arg(long, global = true)]
    valid: Option<PathBuf>,
    #[arg(long, global = true)]
    test: Option<PathBuf>,
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// nfe1, nfe2u, nfe2n, nfe3, nfek, mu or sigma.
    #[arg(long, global = true)]
    variant: Option<String>,
    /// uniform or normal; defaults to the variant's natural base.
    #[arg(long, global = true)]
    base: Option<String>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    decay: Option<f64>,
    #[arg(long, global = true)]
    batch: Option<usize>,
    #[arg(long, global = true)]
    margin: Option<f64>,
    #[arg(long, global = true)]
    epochs: Option<u64>,
    #[arg(long = "inv-k-sq", global = true)]
    inv_k_sq: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; falls back to NFE_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `all` or `sampled:N`.
    #[arg(long, global = true)]
    negatives: Option<String>,
    #[arg(long = "validate-every", global = true)]
    validate_every: Option<u64>,
    /// Output file (train log, eval metrics, check-w2 report) or directory (rules).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Rule file for `rules`.
    #[arg(long, global = true)]
    rules: Option<PathBuf>,
    /// Metrics record for `stats`.
    #[arg(long, global = true)]
    metrics: Option<PathBuf>,
    #[arg(long, global = true)]
    bins: Option<usize>,
    /// Random pairs per family for `check-w2`.
    #[arg(long, global = true)]
    pairs: Option<usize>,
    /// Quadrature points for `check-w2`.
    #[arg(long = "quad-points", global = true)]
    quad_points: Option<usize>,
    /// Relative error bound for `check-w2`.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

const KEYS: [&str; 24] = [
    "train",
    "valid",
    "test",
    "checkpoint",
    "variant",
    "base",
    "dim",
    "lr",
    "decay",
    "batch",
    "margin",
    "epochs",
    "inv-k-sq",
    "seed",
    "threads",
    "negatives",
    "validate-every",
    "out",
    "rules",
    "metrics",
    "bins",
    "pairs",
    "quad-points",
    "tolerance",
];

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub config: Option<PathBuf>,
    pub train_path: Option<PathBuf>,
    pub valid_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub variant: ScoreVariant,
    pub base: BaseDist,
    pub dim: usize,
    pub train: TrainConfig,
    /// 0 means all cores.
    pub threads: usize,
    pub bins: usize,
    pub pairs: usize,
    pub quad_points: usize,
    pub tolerance: f64,
}

impl RunConfig {
    /// The resolved settings as `key=value` lines, in a fixed order.
    pub fn echo(&self) -> Vec<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let inv_k_sq = match self.variant {
            ScoreVariant::NfeK { inv_k_sq } => inv_k_sq.to_string(),
            _ => String::new(),
        };
        let t = &self.train;
        vec![
            format!("subcommand={}", self.subcommand),
            format!("config={}", path(&self.config)),
            format!("train={}", path(&self.train_path)),
            format!("valid={}", path(&self.valid_path)),
            format!("test={}", path(&self.test_path)),
            format!("checkpoint={}", path(&self.checkpoint)),
            format!("variant={}", self.variant.name()),
            format!("base={}", self.base.name()),
            format!("inv-k-sq={inv_k_sq}"),
            format!("dim={}", self.dim),
            format!("lr={}", t.learning_rate),
            format!("decay={}", t.decay_rate),
            format!("batch={}", t.batch_size),
            format!("margin={}", t.margin),
            format!("epochs={}", t.epochs),
            format!("seed={}", t.seed),
            format!("negatives={}", t.negative_mode),
            format!("validate-every={}", t.validate_every),
            format!("threads={}", self.threads),
            format!("out={}", path(&self.out)),
            format!("rules={}", path(&self.rules)),
            format!("metrics={}", path(&self.metrics)),
            format!("bins={}", self.bins),
            format!("pairs={}", self.pairs),
            format!("quad-points={}", self.quad_points),
            format!("tolerance={}", self.tolerance),
        ]
    }

    fn header(&self) -> String {
        self.echo().iter().map(|l| format!("# {l}\n")).collect()
    }
}

/// Reads `key = value` lines; `#` starts a comment and `_` in keys reads as `-`.
pub fn parse_config_file(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            msg,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(err(format!("unknown key '{}'", k.trim())));
        }
        out.push((key, v.trim().to_owned()));
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

fn parse_base(s: &str) -> Result<BaseDist> {
    match s {
        "uniform" => Ok(BaseDist::Uniform),
        "normal" => Ok(BaseDist::Normal),
        other => Err(Error::Config(format!("unknown base '{other}', expected uniform or normal"))),
    }
}

impl Flags {
    /// Fills fields still unset from a config file's entries.
    fn merge_file(&mut self, entries: &[(String, String)]) -> Result<()> {
        for (k, v) in entries {
            let v = v.as_str();
            let k = k.as_str();
            match k {
                "train" => fill(&mut self.train, PathBuf::from(v)),
                "valid" => fill(&mut self.valid, PathBuf::from(v)),
                "test" => fill(&mut self.test, PathBuf::from(v)),
                "checkpoint" => fill(&mut self.checkpoint, PathBuf::from(v)),
                "out" => fill(&mut self.out, PathBuf::from(v)),
                "rules" => fill(&mut self.rules, PathBuf::from(v)),
                "metrics" => fill(&mut self.metrics, PathBuf::from(v)),
                "variant" => fill(&mut self.variant, v.to_owned()),
                "base" => fill(&mut self.base, v.to_owned()),
                "negatives" => fill(&mut self.negatives, v.to_owned()),
                "dim" => fill(&mut self.dim, parse_value(k, v)?),
                "lr" => fill(&mut self.lr, parse_value(k, v)?),
                "decay" => fill(&mut self.decay, parse_value(k, v)?),
                "batch" => fill(&mut self.batch, parse_value(k, v)?),
                "margin" => fill(&mut self.margin, parse_value(k, v)?),
                "epochs" => fill(&mut self.epochs, parse_value(k, v)?),
                "inv-k-sq" => fill(&mut self.inv_k_sq, parse_value(k, v)?),
                "seed" => fill(&mut self.seed, parse_value(k, v)?),
                "threads" => fill(&mut self.threads, parse_value(k, v)?),
                "validate-every" => fill(&mut self.validate_every, parse_value(k, v)?),
                "bins" => fill(&mut self.bins, parse_value(k, v)?),
                "pairs" => fill(&mut self.pairs, parse_value(k, v)?),
                "quad-points" => fill(&mut self.quad_points, parse_value(k, v)?),
                "tolerance" => fill(&mut self.tolerance, parse_value(k, v)?),
                _ => unreachable!("keys are checked while parsing"),
            }
        }
        Ok(())
    }

    fn resolve(mut self, command: Command, env_threads: Option<&str>) -> Result<RunConfig> {
        if let Some(path) = self.config.clone() {
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
            self.merge_file(&parse_config_file(&text, &path)?)?;
        }
        let defaults = TrainConfig::default();
        let inv_k_sq = self.inv_k_sq.unwrap_or(1.0);
        let variant = ScoreVariant::parse(self.variant.as_deref().unwrap_or("nfe1"), inv_k_sq)?;
        if self.inv_k_sq.is_some() && !matches!(variant, ScoreVariant::NfeK { .. }) {
            log::warn!("--inv-k-sq only affects the nfek variant");
        }
        let base = match &self.base {
            Some(b) => parse_base(b)?,
            None => variant.oracle_base(),
        };
        if !variant.supports_base(base) {
            return Err(Error::Config(format!(
                "variant {} does not support base {}",
                variant.name(),
                base.name()
            )));
        }
        let threads = match (self.threads, env_threads) {
            (Some(n), _) => n,
            (None, Some(s)) if !s.trim().is_empty() => parse_value("NFE_THREADS", s.trim())?,
            _ => 0,
        };
        let train = TrainConfig {
            learning_rate: self.lr.unwrap_or(defaults.learning_rate),
            decay_rate: self.decay.unwrap_or(defaults.decay_rate),
            batch_size: self.batch.unwrap_or(defaults.batch_size),
            margin: self.margin.unwrap_or(defaults.margin),
            epochs: self.epochs.unwrap_or(defaults.epochs),
            seed: self.seed.unwrap_or(defaults.seed),
            negative_mode: match &self.negatives {
                Some(s) => NegativeMode::parse(s)?,
                None => defaults.negative_mode,
            },
            validate_every: self.validate_every.unwrap_or(defaults.validate_every),
        };
        train.validate()?;
        let dim = self.dim.unwrap_or(64);
        if dim == 0 {
            return Err(Error::Config("dim must be positive".into()));
        }
        Ok(RunConfig {
            subcommand: command.name(),
            config: self.config,
            train_path: self.train,
            valid_path: self.valid,
            test_path: self.test,
            checkpoint: self.checkpoint,
            out: self.out,
            rules: self.rules,
            metrics: self.metrics,
            variant,
            base,
            dim,
            train,
            threads,
            bins: self.bins.unwrap_or(20),
            pairs: self.pairs.unwrap_or(1000),
            quad_points: self.quad_points.unwrap_or(8192),
            tolerance: self.tolerance.unwrap_or(1e-6),
        })
    }
}

fn fill<T>(slot: &mut Option<T>, v: T) {
    if slot.is_none() {
        *slot = Some(v);
    }
}

/// Parses `args` (program name first) and resolves them against the config
/// file and defaults.
pub fn resolve_args<I, S>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    let env = std::env::var("NFE_THREADS").ok();
    cli.flags.resolve(cli.command, env.as_deref())
}

/// Entry point of the binary; returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let env = std::env::var("NFE_THREADS").ok();
    let result = cli
        .flags
        .resolve(cli.command, env.as_deref())
        .and_then(|cfg| with_threads(cfg.threads, || dispatch(cli.command, &cfg)));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<i32> {
    match command {
        Command::Train => cmd_train(cfg).map(|_| 0),
        Command::Eval => cmd_eval(cfg).map(|_| 0),
        Command::Rules => cmd_rules(cfg).map(|_| 0),
        Command::CheckW2 => {
            let report = w2_check(cfg.pairs, cfg.quad_points, cfg.train.seed, w2_closed)?;
            let text = format!("{}{}", cfg.header(), report.render(cfg.tolerance));
            emit(cfg.out.as_deref(), &text)?;
            Ok(if report.passes(cfg.tolerance) { 0 } else { 1 })
        }
        Command::Stats => cmd_stats(cfg).map(|_| 0),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(p) = out {
        fs::write(p, text).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
    }
    Ok(())
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn vocab_paths(checkpoint: &Path) -> (PathBuf, PathBuf) {
    let s = checkpoint.as_os_str().to_owned();
    let with = |suffix: &str| {
        let mut p = s.clone();
        p.push(suffix);
        PathBuf::from(p)
    };
    (with(".entities.tsv"), with(".relations.tsv"))
}

fn load_dataset(cfg: &RunConfig) -> Result<KgDataset> {
    let train = required(&cfg.train_path, "train")?;
    KgDataset::load(train, cfg.valid_path.as_deref(), cfg.test_path.as_deref())?.add_reciprocals()
}

/// Trains, writes the best checkpoint with its vocabularies, and the epoch
/// log (to `--out`, or `{checkpoint}.log.tsv`).
pub fn cmd_train(cfg: &RunConfig) -> Result<Checkpoint> {
    let ckpt_path = required(&cfg.checkpoint, "checkpoint")?;
    let ds = load_dataset(cfg)?;
    log::info!("{}", ds.summary());
    let model = ModelState::init(
        cfg.variant,
        cfg.base,
        cfg.dim,
        ds.num_entities(),
        ds.num_relations(),
        cfg.train.seed,
    )?;
    let mut trainer = Trainer::new(&ds, cfg.train.clone(), Checkpoint::fresh(model))?;
    trainer.run()?;
    let outcome = trainer.finish();

    save_checkpoint(ckpt_path, &outcome.best)?;
    let (ents, rels) = vocab_paths(ckpt_path);
    ds.entities().write_tsv(&ents)?;
    ds.relations().write_tsv(&rels)?;

    let mut text = cfg.header();
    let _ = writeln!(text, "# dataset {}", ds.summary());
    match outcome.best_valid_mrr {
        Some(m) => {
            let _ = writeln!(text, "# best_epoch={} best_valid_mrr={m}", outcome.best_epoch);
        }
        None => {
            let _ = writeln!(text, "# best_epoch={}", outcome.best_epoch);
        }
    }
    text.push_str("epoch\tloss\tvalid_mrr\n");
    for r in &outcome.log {
        let mrr = r.valid_mrr.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(text, "{}\t{}\t{}", r.epoch, r.loss, mrr);
    }
    let log_path = cfg.out.clone().unwrap_or_else(|| {
        let mut p = ckpt_path.as_os_str().to_owned();
        p.push(".log.tsv");
        PathBuf::from(p)
    });
    fs::write(&log_path, &text).map_err(|e| Error::io(format!("writing {}", log_path.display()), e))?;
    print!("{text}");
    Ok(outcome.best)
}

/// Loads a checkpoint and checks it against the dataset built from the
/// configured files, including the saved vocabularies when present.
fn load_matching(cfg: &RunConfig, ds: &KgDataset) -> Result<Checkpoint> {
    let ckpt_path = required(&cfg.checkpoint, "checkpoint")?;
    let ckpt = load_checkpoint(ckpt_path)?;
    ckpt.check_dataset(ds)?;
    let (ents, rels) = vocab_paths(ckpt_path);
    for (path, have, what) in [(ents, ds.entities(), "entity"), (rels, ds.relations(), "relation")] {
        if !path.exists() {
            log::warn!("no {what} vocabulary next to the checkpoint; trusting index order");
            continue;
        }
        let saved = Vocab::read_tsv(&path)?;
        if !saved.iter().eq(have.iter()) {
            return Err(Error::FormatVersionMismatch(format!(
                "{what} vocabulary in {} differs from the dataset",
                path.display()
            )));
        }
    }
    Ok(ckpt)
}

/// Filtered metrics on the test split (valid when no test file is given).
pub fn cmd_eval(cfg: &RunConfig) -> Result<RankMetrics> {
    let ds = load_dataset(cfg)?;
    let ckpt = load_matching(cfg, &ds)?;
    let split = if cfg.test_path.is_some() { Split::Test } else { Split::Valid };
    let metrics = evaluate(&ckpt.model, &ds, split)?;
    let mut text = cfg.header();
    let m = &ckpt.model;
    let _ = writeln!(
        text,
        "# model variant={} base={} dim={} epochs_done={}",
        m.variant.name(),
        m.base.name(),
        m.dim(),
        ckpt.epochs_done
    );
    let _ = writeln!(text, "# split={}", split.name());
    text.push_str(&metrics.to_record());
    emit(cfg.out.as_deref(), &text)?;
    Ok(metrics)
}

/// Writes one histogram file per rule line into `--out` and a `summary.tsv`.
pub fn cmd_rules(cfg: &RunConfig) -> Result<Vec<String>> {
    let ckpt_path = required(&cfg.checkpoint, "checkpoint")?;
    let rules_path = required(&cfg.rules, "rules")?;
    let text = fs::read_to_string(rules_path)
        .map_err(|e| Error::io(format!("reading {}", rules_path.display()), e))?;
    let specs = parse_rules(&text, rules_path)?;
    if specs.is_empty() {
        log::warn!("rule file {} lists no rules; nothing written", rules_path.display());
        return Ok(Vec::new());
    }
    let ckpt = load_checkpoint(ckpt_path)?;
    let (_, rel_path) = vocab_paths(ckpt_path);
    let rels = Vocab::read_tsv(&rel_path)?;
    if rels.len() != ckpt.model.num_relations() {
        return Err(Error::FormatVersionMismatch(format!(
            "{} lists {} relations, checkpoint has {}",
            rel_path.display(),
            rels.len(),
            ckpt.model.num_relations()
        )));
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;

    let mut lines = Vec::new();
    for spec in &specs {
        let flows = spec
            .relations
            .iter()
            .map(|name| {
                let i = rels
                    .index_of(name)
                    .ok_or_else(|| Error::Config(format!("unknown relation '{name}'")))?;
                ckpt.model.relation(i)
            })
            .collect::<Result<Vec<_>>>()?;
        let stat = rule_stat(spec.kind, &flows)?;
        let names: Vec<&str> = spec.relations.iter().map(String::as_str).collect();
        let file = dir.join(format!("{}_{}.tsv", spec.kind, names.join("-")));
        export_histogram(&stat, cfg.bins, &file)?;
        lines.push(stat.summary_line(&names));
    }

    let mut out = cfg.header();
    if specs.iter().any(|s| s.kind == RuleKind::Symmetry) {
        out.push_str("# symmetry residuals near 0 mean symmetric; bounded away from 0 mean antisymmetric\n");
    }
    for l in &lines {
        out.push_str(l);
        out.push('\n');
    }
    let summary = dir.join("summary.tsv");
    fs::write(&summary, &out).map_err(|e| Error::io(format!("writing {}", summary.display()), e))?;
    print!("{out}");
    Ok(lines)
}

fn cmd_stats(cfg: &RunConfig) -> Result<()> {
    let mut text = cfg.header();
    if let Some(path) = &cfg.metrics {
        let record = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let m = RankMetrics::parse_record(&record)?;
        text.push_str(&m.to_record());
    } else {
        let ds = load_dataset(cfg)?;
        let _ = writeln!(text, "{}", ds.summary());
    }
    emit(cfg.out.as_deref(), &text)
}

/// Largest relative error of a closed form against quadrature, per family.
#[derive(Debug, Clone, PartialEq)]
pub struct W2Report {
    pub pairs: usize,
    pub quad_points: usize,
    pub families: Vec<(&'static str, f64)>,
    /// Closed form at `U[0,1]` vs `U[2,3]`.
    pub anchor: f64,
}

impl W2Report {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.anchor == 4.0 && self.families.iter().all(|&(_, e)| e <= tolerance)
    }

    pub fn render(&self, tolerance: f64) -> String {
        let mut s = String::from("family\tpairs\tquad_points\tmax_rel_err\n");
        for (name, err) in &self.families {
            let _ = writeln!(s, "{name}\t{}\t{}\t{err:e}", self.pairs, self.quad_points);
        }
        let _ = writeln!(s, "anchor\tU[0,1]~U[2,3]\t{}", self.anchor);
        let _ = writeln!(s, "status={}", if self.passes(tolerance) { "ok" } else { "FAIL" });
        s
    }
}

fn random_pair(family: usize, rng: &mut ChaCha8Rng) -> Result<(Dist1D, Dist1D)> {
    let one = |rng: &mut ChaCha8Rng| -> Result<Dist1D> {
        let mu = rng.random_range(-3.0..3.0);
        let mut s = || rng.random_range(0.05..3.0);
        match family {
            0 => Dist1D::uniform_from_scale(mu, s()),
            1 => Dist1D::normal(mu, s()),
            2 => {
                let (a, b) = (s(), s());
                Dist1D::two_piece_uniform_from_scales(mu, a, b)
            }
            _ => {
                let (a, b) = (s(), s());
                Dist1D::two_piece_normal(mu, a, b)
            }
        }
    };
    Ok((one(rng)?, one(rng)?))
}

/// Compares `closed` with quadrature on `pairs` random same-family pairs of
/// each continuous family.
pub fn w2_check(
    pairs: usize,
    quad_points: usize,
    seed: u64,
    closed: impl Fn(&Dist1D, &Dist1D) -> Result<f64>,
) -> Result<W2Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["uniform", "normal", "two_piece_uniform", "two_piece_normal"];
    let mut families = Vec::new();
    for (f, name) in names.into_iter().enumerate() {
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let (p, q) = random_pair(f, &mut rng)?;
            let quad = w2_quadrature(&p, &q, quad_points)?;
            let err = (closed(&p, &q)? - quad).abs() / quad.max(1e-9);
            worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
        }
        families.push((name, worst));
    }
    let anchor = closed(&Dist1D::uniform(0.0, 1.0)?, &Dist1D::uniform(2.0, 3.0)?)?;
    Ok(W2Report {
        pairs,
        quad_points,
        families,
        anchor,
    })
}
