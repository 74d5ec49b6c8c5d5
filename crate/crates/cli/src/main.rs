use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tropsvm::classifier::{
    evaluate, predict, score, train, ClassifierError, Strategy, TrainConfig, TrainedModel, DEFAULT_ETA,
};
use tropsvm::coalescent::{generate_dataset, SimConfig, DEFAULT_C_GRID};
use tropsvm::dataset::{parse_csv, LabeledDataset};
use tropsvm::hard::IndexAssignment;
use tropsvm::harness::{
    parse_label_file, parse_sweep_csv, run_sweep, summarize, summary_csv, write_label_file, Aggregation,
    HarnessError, SweepSpec, SweepStrategy,
};
use tropsvm::soft::SoftConfig;
use tropsvm::tropical::DEFAULT_TOL;

#[derive(Parser)]
#[command(name = "tropsvm", version, about = "Tropical support vector machines for ultrametric tree data")]
struct Cli {
    /// Log progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate gene trees under two random species trees.
    Simulate(SimulateArgs),
    /// Fit a classifier to a labeled ultrametric CSV.
    Train(TrainArgs),
    /// Write one predicted label per row of a CSV.
    Predict(PredictArgs),
    /// Score a model, or an external label file, against labeled data.
    Evaluate(EvaluateArgs),
    /// Accuracy over a grid of depth ratios and test proportions.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 5)]
    n_leaves: usize,
    #[arg(long, default_value_t = 10_000.0)]
    population: f64,
    /// Species depth divided by population size.
    #[arg(long, default_value_t = 10.0)]
    ratio_c: f64,
    #[arg(long, default_value_t = 100)]
    trees_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; metadata goes to `<out>.meta`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// hard_enumerate, soft_fixed or soft_enumerate.
    #[arg(long, default_value = "soft_fixed")]
    strategy: String,
    /// `i_P,j_P,i_Q,j_Q`, needed by soft_fixed.
    #[arg(long)]
    assignment: Option<String>,
    /// Depth ratio of the data; read from `<data>.meta` when omitted.
    #[arg(long)]
    ratio_c: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    tradeoff: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Label file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, required_unless_present = "labels", conflicts_with = "labels")]
    model: Option<PathBuf>,
    /// Predicted labels from elsewhere, one per row of `--data`.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_C_GRID.to_vec())]
    c_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.15, 0.20, 0.25])]
    proportions: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// `alg1`..`alg4`, optionally `algK=<assignment>` or
    /// `algK=best-closed-form:<case>`; repeat the flag for several.
    #[arg(long = "strategy", default_values_t = ["alg1".to_string(), "alg2".into(), "alg3".into(), "alg4".into()])]
    strategies: Vec<String>,
    /// best or mean, for the summary file.
    #[arg(long, default_value = "best")]
    aggregation: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    n_leaves: usize,
    #[arg(long, default_value_t = 10_000.0)]
    population: f64,
    #[arg(long, default_value_t = 100)]
    trees_per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    tradeoff: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write 0 in the wall-time column so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Skip runs already present in `--out`.
    #[arg(long)]
    resume: bool,
    /// Directory for per-cell train/test splits and models.
    #[arg(long)]
    artifacts: Option<PathBuf>,
    /// Row CSV; also writes `<out>.meta` and `<out>.summary.csv`.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Infeasible(m) => m,
        }
    }
}

impl From<ClassifierError> for Failure {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::NoFeasibleAssignment => Failure::Infeasible(e.to_string()),
            ClassifierError::UnknownStrategy(_) | ClassifierError::MissingAssignment(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Spec(_) => Failure::Usage(e.to_string()),
            HarnessError::Classifier(c) => c.into(),
            other => Failure::Data(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_dataset(path: &Path) -> Result<LabeledDataset, Failure> {
    LabeledDataset::from_csv(&read(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<TrainedModel, Failure> {
    TrainedModel::from_text(&read(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn simulate(a: SimulateArgs) -> Outcome {
    let cfg = SimConfig {
        n_leaves: a.n_leaves,
        population: a.population,
        ratio_c: a.ratio_c,
        trees_per_class: a.trees_per_class,
        seed: a.seed,
    };
    let sim = generate_dataset(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    write(&a.out, &sim.dataset.to_csv())?;
    write(&with_suffix(&a.out, ".meta"), &sim.metadata())
}

fn ratio_from_meta(data: &Path) -> Result<f64, Failure> {
    let meta = with_suffix(data, ".meta");
    let missing = || Failure::Usage(format!("--ratio-c not given and {} has no ratio_c", meta.display()));
    let text = fs::read_to_string(&meta).map_err(|_| missing())?;
    text.lines()
        .find_map(|l| l.strip_prefix("ratio_c="))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(missing)
}

fn train_cmd(a: TrainArgs) -> Outcome {
    let strategy: Strategy = a.strategy.parse()?;
    let assignment = a
        .assignment
        .as_deref()
        .map(str::parse::<IndexAssignment>)
        .transpose()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if !(a.eta > 0.0) {
        return Err(Failure::Usage("--eta must be positive".into()));
    }
    if let Some(w) = assignment.and_then(|x| SoftConfig::new(x).with_tradeoff(a.tradeoff).warning()) {
        eprintln!("warning: {w}");
    }
    let data = load_dataset(&a.data)?;
    let ratio_c = match a.ratio_c {
        Some(c) => c,
        None => ratio_from_meta(&a.data)?,
    };
    let cfg = TrainConfig {
        assignment,
        tradeoff: a.tradeoff,
        ratio_c,
        eta: a.eta,
        tol: a.tol,
    };
    let model = train(&data, strategy, &cfg)?;
    write(&a.out, &model.to_text())
}

fn predict_cmd(a: PredictArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let table = parse_csv(&read(&a.data)?).map_err(|e| Failure::Data(format!("{}: {e}", a.data.display())))?;
    let points = table
        .maps
        .iter()
        .map(|m| m.to_point())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Data(e.to_string()))?;
    let labels = predict(&points, &model)?;
    emit(a.out.as_deref(), &write_label_file(&labels))
}

fn evaluate_cmd(a: EvaluateArgs) -> Outcome {
    let data = load_dataset(&a.data)?;
    let report = match (&a.model, &a.labels) {
        (Some(m), _) => evaluate(&data, &load_model(m)?)?,
        (None, Some(l)) => {
            let labels = parse_label_file(&read(l)?).map_err(|e| Failure::Data(format!("{}: {e}", l.display())))?;
            score(data.labels(), &labels)?
        }
        (None, None) => unreachable!("clap requires one of --model and --labels"),
    };
    emit(a.out.as_deref(), &report.to_string())
}

fn sweep_cmd(a: SweepArgs) -> Outcome {
    let strategies = a
        .strategies
        .iter()
        .map(|s| SweepStrategy::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregation: Aggregation = a.aggregation.parse()?;
    let spec = SweepSpec {
        c_grid: a.c_grid,
        proportions: a.proportions,
        repeats: a.repeats,
        aggregation,
        strategies,
        base_seed: a.seed,
        n_leaves: a.n_leaves,
        population: a.population,
        trees_per_class: a.trees_per_class,
        tradeoff: a.tradeoff,
        eta: a.eta,
        tol: a.tol,
        timing: !a.no_timing,
    };
    spec.validate()?;
    if let Some(dir) = &a.artifacts {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    }
    let done = if a.resume && a.out.exists() {
        let text = read(&a.out)?;
        let rows = parse_sweep_csv(&text)?;
        // Rewrite without any half-written last line before appending.
        let mut clean = format!("{}\n", tropsvm::harness::SWEEP_HEADER);
        for r in &rows {
            clean.push_str(&r.to_csv_line());
            clean.push('\n');
        }
        write(&a.out, &clean)?;
        rows
    } else {
        Vec::new()
    };
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(!done.is_empty())
        .truncate(done.is_empty())
        .open(&a.out)
        .map_err(|e| Failure::Data(format!("{}: {e}", a.out.display())))?;
    let mut sink = BufWriter::new(file);
    let new_rows = run_sweep(&spec, &mut sink, done.is_empty(), &done, a.artifacts.as_deref())?;
    sink.flush().map_err(|e| Failure::Data(e.to_string()))?;
    write(&with_suffix(&a.out, ".meta"), &spec.metadata())?;
    let mut all = done;
    all.extend(new_rows);
    write(
        &with_suffix(&a.out, ".summary.csv"),
        &summary_csv(&summarize(&all, aggregation), aggregation),
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .init();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
