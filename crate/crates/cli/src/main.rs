mod config;
mod http;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use zebra_core::analysis::report::{emit_report, ReportInputs};
use zebra_core::analysis::{fit_difficulty, mean_frequencies, normalized_frequencies, AnalysisError};
use zebra_core::dataset::{
    dataset_dir_name, read_dataset, write_dataset, DatasetError, DatasetMeta, DatasetRecord,
    MANIFEST_FILE,
};
use zebra_core::eval::harness::{
    load_results, run_evaluation, HarnessConfig, HarnessError, OracleModel, ScramblerModel,
};
use zebra_core::eval::query::{ThreadSleeper, Transport};
use zebra_core::eval::stats::{compare_runs, Metric};
use zebra_core::eval::{aggregate, aggregate_by_size, EvalRecord, ResponseStatus};
use zebra_core::generator::{
    derive_reduced_variants, generate_batch, reduction_seed, rng_from_seed, GenerationConfig,
};
use zebra_core::theme::{builtin, load_theme, validate_for_size, ThemeError};
use zebra_core::{MetricSummaryF64, Size, ThemeConfig};

use config::FileConfig;

const EXIT_VALIDATION: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_ENDPOINT: u8 = 5;

#[derive(Parser)]
#[command(name = "zebra", version, about = "Generate and evaluate zebra-puzzle datasets")]
struct Cli {
    /// Root directory that relative input and output paths resolve against.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Replace existing outputs instead of refusing.
    #[arg(long, global = true)]
    overwrite: bool,
    /// Worker threads for generation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// JSON file with generation, endpoint and evaluation overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate datasets, one directory per size.
    Generate(GenerateArgs),
    /// Query a model (or a mock) on a dataset and score the answers.
    Evaluate(EvaluateArgs),
    /// Summaries, comparisons, clue frequencies and difficulties.
    Analyze(AnalyzeArgs),
    /// Check a theme bundle, optionally against puzzle sizes.
    ValidateTheme(ValidateArgs),
}

#[derive(Args)]
struct ThemeArgs {
    #[arg(long, default_value = "en")]
    lang: String,
    #[arg(long, default_value = "houses")]
    theme: String,
    /// Theme bundle on disk, instead of a built-in one.
    #[arg(long)]
    theme_file: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    theme: ThemeArgs,
    /// Puzzle size as objects x attributes, e.g. 4x5. Repeatable.
    #[arg(long = "size", required = true)]
    sizes: Vec<Size>,
    #[arg(long, default_value_t = 5)]
    herrings: usize,
    /// Puzzles per size.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Puzzles per size placed in the train split; the rest go to test.
    #[arg(long, default_value_t = 0)]
    train: usize,
    /// Also write variants keeping only this many herrings per puzzle.
    #[arg(long, value_delimiter = ',')]
    reduce_herrings: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MockKind {
    Oracle,
    Scrambler,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitChoice {
    All,
    Train,
    Test,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Results file; defaults to results/<dataset>.<model>.jsonl.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Answer with a built-in model instead of calling the endpoint.
    #[arg(long, value_enum)]
    mock: Option<MockKind>,
    #[arg(long, default_value_t = 0)]
    mock_seed: u64,
    #[arg(long, value_enum, default_value_t = SplitChoice::All)]
    split: SplitChoice,
    /// Requests in flight at once.
    #[arg(long)]
    concurrency: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Dataset directories, for clue frequencies and difficulties.
    #[arg(long = "dataset")]
    datasets: Vec<PathBuf>,
    /// Results file, optionally labelled as LABEL=PATH. The first run is
    /// the baseline for comparisons and difficulty fits.
    #[arg(long = "run")]
    runs: Vec<String>,
    #[arg(long, default_value = "report")]
    report: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    theme: ThemeArgs,
    #[arg(long = "size")]
    sizes: Vec<Size>,
}

enum Failure {
    Validation(anyhow::Error),
    Io(anyhow::Error),
    Endpoint(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Io(_) => EXIT_IO,
            Failure::Endpoint(_) => EXIT_ENDPOINT,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Io(e) | Failure::Endpoint(e) => e,
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } | DatasetError::Exists(_) => Failure::Io(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}

impl From<ThemeError> for Failure {
    fn from(e: ThemeError) -> Self {
        match e {
            ThemeError::Io { .. } => Failure::Io(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Io(e.into())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Io { .. } | AnalysisError::Csv(_) => Failure::Io(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}

trait Classify<T> {
    fn validation(self) -> Result<T, Failure>;
    fn io(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn validation(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Validation(e.into()))
    }

    fn io(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Io(e.into()))
    }
}

struct Ctx {
    out: PathBuf,
    overwrite: bool,
    jobs: usize,
    config: FileConfig,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out.join(p)
        }
    }
}

fn load_theme_args(args: &ThemeArgs, ctx: &Ctx) -> Result<ThemeConfig, Failure> {
    match &args.theme_file {
        Some(path) => Ok(load_theme(ctx.path(path))?),
        None => Ok(builtin(&args.lang, &args.theme)?),
    }
}

fn cmd_generate(args: &GenerateArgs, ctx: &Ctx) -> Result<(), Failure> {
    let theme = load_theme_args(&args.theme, ctx)?;
    if args.count == 0 {
        return Err(Failure::Validation(anyhow!("--count must be positive")));
    }
    if let Some(&keep) = args.reduce_herrings.iter().find(|&&k| k > args.herrings) {
        return Err(Failure::Validation(anyhow!(
            "cannot reduce to {keep} herrings, puzzles have {}",
            args.herrings
        )));
    }
    // Validate everything before the first write.
    let mut plans = Vec::new();
    for &size in &args.sizes {
        let findings = validate_for_size(&theme, size);
        if !findings.is_empty() {
            let text: Vec<String> = findings.iter().map(|f| format!("{}: {}", f.location, f.message)).collect();
            return Err(Failure::Validation(anyhow!(
                "theme {} cannot produce {size} puzzles:\n  {}",
                theme.tag(),
                text.join("\n  ")
            )));
        }
        let mut cfg = GenerationConfig::new(size, args.herrings, args.seed);
        ctx.config.generation.apply(&mut cfg);
        cfg.validate().validation()?;
        let mut variants = vec![args.herrings];
        variants.extend(args.reduce_herrings.iter().filter(|&&k| k != args.herrings));
        for &k in &variants {
            let dir = ctx.out.join(dataset_dir_name(&theme.language, &theme.theme, size, k));
            if dir.join(MANIFEST_FILE).exists() && !ctx.overwrite {
                return Err(DatasetError::Exists(dir).into());
            }
        }
        plans.push((cfg, variants));
    }

    let train = args.train.min(args.count);
    for (cfg, variants) in plans {
        let size = cfg.size;
        log::info!("generating {} puzzles of size {size}", args.count);
        let puzzles = generate_batch(&theme, &cfg, args.count, ctx.jobs).validation()?;
        for keep in variants {
            let chosen = if keep == args.herrings {
                puzzles.clone()
            } else {
                puzzles
                    .iter()
                    .map(|p| derive_reduced_variants(p, keep, &mut rng_from_seed(reduction_seed(p.seed, keep))))
                    .collect::<Result<Vec<_>, _>>()
                    .validation()?
            };
            let records = chosen
                .iter()
                .map(|p| DatasetRecord::from_puzzle(p, &theme))
                .collect::<Result<Vec<_>, _>>()?;
            let meta = DatasetMeta {
                language: theme.language.clone(),
                theme: theme.theme.clone(),
                size,
                n_red_herrings: keep,
                master_seed: args.seed,
            };
            let dir = ctx.out.join(dataset_dir_name(&theme.language, &theme.theme, size, keep));
            let manifest = write_dataset(&records, &meta, train, &dir, ctx.overwrite)?;
            println!("{}\t{} puzzles\t{}", dir.display(), manifest.total(), manifest.hash);
        }
    }
    Ok(())
}

fn print_summary(label: &str, summary: &MetricSummaryF64) {
    println!(
        "{label}: n={} a_puzzle={:.4}±{:.4} a_cell={:.4}±{:.4} a_best_cell={:.4}±{:.4}",
        summary.n_puzzles,
        summary.mean_a_puzzle,
        summary.se_a_puzzle,
        summary.mean_a_cell,
        summary.se_a_cell,
        summary.mean_a_best_cell,
        summary.se_a_best_cell
    );
}

fn cmd_evaluate(args: &EvaluateArgs, ctx: &Ctx) -> Result<(), Failure> {
    let dataset_dir = ctx.path(&args.dataset);
    let dataset = read_dataset(&dataset_dir)?;
    let records: Vec<DatasetRecord> = match args.split {
        SplitChoice::All => dataset.records().cloned().collect(),
        SplitChoice::Train => dataset.train.clone(),
        SplitChoice::Test => dataset.test.clone(),
    };
    let endpoint = &ctx.config.endpoint;
    let (transport, model): (Box<dyn Transport>, String) = match args.mock {
        Some(MockKind::Oracle) => (Box::new(OracleModel::new(&records)), "mock-oracle".into()),
        Some(MockKind::Scrambler) => (
            Box::new(ScramblerModel::new(&records, args.mock_seed)),
            "mock-scrambler".into(),
        ),
        None => {
            let token = std::env::var(&endpoint.token_env).map_err(|_| {
                Failure::Endpoint(anyhow!(
                    "environment variable {} with the API token is not set (use --mock for offline runs)",
                    endpoint.token_env
                ))
            })?;
            (
                Box::new(http::HttpTransport::new(endpoint.clone(), token)),
                endpoint.model.clone(),
            )
        }
    };
    let dir_name = dataset_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let results_path = match &args.results {
        Some(p) => ctx.path(p),
        None => ctx.out.join("results").join(format!("{dir_name}.{model}.jsonl")),
    };
    if ctx.overwrite && results_path.exists() {
        std::fs::remove_file(&results_path)
            .with_context(|| format!("removing {}", results_path.display()))
            .io()?;
    }
    let cfg = HarnessConfig {
        concurrency: args
            .concurrency
            .or(ctx.config.evaluation.concurrency)
            .unwrap_or(endpoint.max_in_flight),
        match_mode: ctx.config.evaluation.match_mode.unwrap_or_default(),
        ..HarnessConfig::default()
    };
    let results = run_evaluation(&records, transport.as_ref(), &ThreadSleeper, &cfg, Some(&results_path))?;
    println!("results: {}", results_path.display());
    if results.len() >= 2 {
        print_summary(&model, &aggregate::<f64>(&results).validation()?);
    }
    let failed = results.iter().filter(|r| r.status == ResponseStatus::QueryFailed).count();
    if failed > 0 {
        log::warn!("{failed} of {} queries failed and were scored as wrong", results.len());
    }
    if failed > 0 && failed == results.len() {
        return Err(Failure::Endpoint(anyhow!("every query failed; check the endpoint configuration")));
    }
    Ok(())
}

fn parse_run(spec: &str, ctx: &Ctx) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((label, path)) => (label.to_string(), ctx.path(Path::new(path))),
        None => {
            let path = ctx.path(Path::new(spec));
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (label, path)
        }
    }
}

fn cmd_analyze(args: &AnalyzeArgs, ctx: &Ctx) -> Result<(), Failure> {
    if args.datasets.is_empty() && args.runs.is_empty() {
        return Err(Failure::Validation(anyhow!("give at least one --dataset or --run")));
    }
    let mut runs: Vec<(String, Vec<EvalRecord>)> = Vec::new();
    for spec in &args.runs {
        let (label, path) = parse_run(spec, ctx);
        if !path.exists() {
            return Err(Failure::Io(anyhow!("{}: no such results file", path.display())));
        }
        let records = load_results(&path)?;
        if records.is_empty() {
            return Err(Failure::Validation(anyhow!("{}: no results", path.display())));
        }
        runs.push((label, records));
    }
    let mut summaries = Vec::new();
    for (label, records) in &runs {
        let by_size = aggregate_by_size::<f64>(records)
            .with_context(|| format!("run {label}"))
            .validation()?;
        for (size, s) in &by_size {
            print_summary(&format!("{label} {size}"), s);
        }
        summaries.push((label.clone(), by_size));
    }
    let mut comparisons = Vec::new();
    if let Some((base_label, base)) = summaries.first() {
        for (label, other) in &summaries[1..] {
            for metric in Metric::ALL {
                let cmp = compare_runs(base, other, metric)
                    .with_context(|| format!("comparing {label} with {base_label}"))
                    .validation()?;
                if metric == Metric::ACell {
                    println!(
                        "{label} - {base_label} ({}): mean delta {:.4}{}",
                        metric.name(),
                        cmp.mean_delta,
                        cmp.mean_delta_error.map(|e| format!(" ± {e:.4}")).unwrap_or_default()
                    );
                }
                comparisons.push((format!("{label} - {base_label}"), cmp));
            }
        }
    }

    let mut instances = Vec::new();
    for dir in &args.datasets {
        let dataset = read_dataset(&ctx.path(dir))?;
        instances.extend(dataset.records().map(DatasetRecord::to_instance));
    }
    let frequencies = if instances.is_empty() {
        Vec::new()
    } else {
        mean_frequencies::<f64>(&instances)?
    };

    let mut profiles = Vec::new();
    if let Some((label, base)) = runs.first() {
        let a_cell: HashMap<&str, f64> = base.iter().map(|r| (r.id.as_str(), r.a_cell)).collect();
        let mut groups: BTreeMap<(usize, usize), (Vec<_>, Vec<f64>)> = BTreeMap::new();
        for p in &instances {
            if let Some(&y) = a_cell.get(p.id.as_str()) {
                let g = groups.entry((p.size.n_objects(), p.size.n_attributes())).or_default();
                g.0.push(normalized_frequencies::<f64>(p)?);
                g.1.push(y);
            }
        }
        for ((n, m), (x, y)) in groups {
            let size = Size::new(n, m).expect("sizes come from datasets");
            match fit_difficulty(&x, &y) {
                Ok(profile) => profiles.push((size, profile)),
                Err(AnalysisError::NotIdentifiable(reason)) => {
                    log::warn!("{label} {size}: difficulties skipped, {reason}");
                    eprintln!("finding: {size}: difficulty fit not identifiable ({reason})");
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    let report_dir = ctx.path(&args.report);
    if report_dir.exists() && !ctx.overwrite {
        let non_empty = std::fs::read_dir(&report_dir).map(|mut d| d.next().is_some()).unwrap_or(false);
        if non_empty {
            return Err(Failure::Io(anyhow!(
                "{} already exists (pass --overwrite to replace it)",
                report_dir.display()
            )));
        }
    }
    let files = emit_report(
        &report_dir,
        &ReportInputs {
            summaries: &summaries,
            comparisons: &comparisons,
            frequencies: &frequencies,
            profiles: &profiles,
        },
    )?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_validate_theme(args: &ValidateArgs, ctx: &Ctx) -> Result<(), Failure> {
    let theme = match load_theme_args(&args.theme, ctx) {
        Err(Failure::Validation(e)) => {
            if let Some(ThemeError::Invalid(findings)) = e.downcast_ref::<ThemeError>() {
                for f in findings {
                    println!("{}: {}", f.location, f.message);
                }
            }
            return Err(Failure::Validation(e));
        }
        other => other?,
    };
    let mut problems = 0;
    for &size in &args.sizes {
        for f in validate_for_size(&theme, size) {
            println!("{size}: {}: {}", f.location, f.message);
            problems += 1;
        }
    }
    if problems > 0 {
        return Err(Failure::Validation(anyhow!("{problems} problem(s) in theme {}", theme.tag())));
    }
    println!("theme {} is valid", theme.tag());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let config = match FileConfig::load(cli.config.as_deref().map(|p| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            cli.out.join(p)
        }
    }).as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config: {e:#}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let ctx = Ctx {
        out: cli.out.clone(),
        overwrite: cli.overwrite,
        jobs: cli.jobs,
        config,
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a, &ctx),
        Command::Evaluate(a) => cmd_evaluate(a, &ctx),
        Command::Analyze(a) => cmd_analyze(a, &ctx),
        Command::ValidateTheme(a) => cmd_validate_theme(a, &ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
