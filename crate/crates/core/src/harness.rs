//! Train/test splits and accuracy sweeps over simulated data.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::classifier::{evaluate, train, ClassifierError, Strategy, TrainConfig, TrainedModel, DEFAULT_ETA};
use crate::coalescent::{generate_dataset, tree_rng, SimConfig, SimError, DEFAULT_C_GRID};
use crate::dataset::{DataError, Label, LabeledDataset};
use crate::hard::{all_assignments, case_constants, Case, HardError, IndexAssignment};
use crate::tropical::DEFAULT_TOL;

pub const SWEEP_HEADER: &str = "C,proportion,strategy,repeat,accuracy,wall_time_s";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("sweep output: {0}")]
    Sink(#[from] io::Error),
    #[error("bad sweep CSV line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Hard(#[from] HardError),
}

/// Splits each class so that `floor(proportion · n_class)` of its rows go to
/// the test set. Returns `(train, test)` with rows in their original order.
pub fn stratified_split<R: Rng + ?Sized>(
    data: &LabeledDataset,
    proportion: f64,
    rng: &mut R,
) -> Result<(LabeledDataset, LabeledDataset), HarnessError> {
    if !(proportion > 0.0 && proportion < 1.0) {
        return Err(HarnessError::Spec(format!("proportion {proportion} outside (0, 1)")));
    }
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for label in [Label::P, Label::Q] {
        let mut rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels()[i] == label).collect();
        let k = (proportion * rows.len() as f64).floor() as usize;
        rows.shuffle(rng);
        test_rows.extend_from_slice(&rows[..k]);
        train_rows.extend_from_slice(&rows[k..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok((data.select(&train_rows)?, data.select(&test_rows)?))
}

/// How a sweep strategy picks its index assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AssignmentSource {
    Fixed(IndexAssignment),
    /// The assignment of the given case whose closed-form hard margin on the
    /// training data is largest (first in lexicographic order on ties).
    BestClosedForm(Case),
}

impl AssignmentSource {
    pub fn resolve(&self, train_data: &LabeledDataset) -> Result<IndexAssignment, HarnessError> {
        match *self {
            AssignmentSource::Fixed(a) => {
                a.check_dim(train_data.dim())?;
                Ok(a)
            }
            AssignmentSource::BestClosedForm(case) => {
                let p = train_data.class_points(Label::P);
                let q = train_data.class_points(Label::Q);
                let mut best: Option<(IndexAssignment, f64)> = None;
                for a in all_assignments(train_data.dim()).into_iter().filter(|a| a.case() == case) {
                    let z = case_constants(&p, &q, &a)?.margin();
                    if best.map_or(true, |(_, b)| z > b) {
                        best = Some((a, z));
                    }
                }
                best.map(|(a, _)| a)
                    .ok_or_else(|| HarnessError::Spec(format!("no case {case} assignment in dimension {}", train_data.dim())))
            }
        }
    }
}

impl fmt::Display for AssignmentSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssignmentSource::Fixed(a) => write!(f, "{a}"),
            AssignmentSource::BestClosedForm(case) => write!(f, "best-closed-form:{case}"),
        }
    }
}

impl FromStr for AssignmentSource {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(case) = s.strip_prefix("best-closed-form:") {
            return Ok(AssignmentSource::BestClosedForm(case.parse()?));
        }
        Ok(AssignmentSource::Fixed(s.parse()?))
    }
}

/// One classifier run per sweep cell, named in the CSV `strategy` column.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStrategy {
    pub name: String,
    pub source: AssignmentSource,
}

/// Representative assignment used by the sweep for each algorithm.
pub fn representative_assignment(algorithm: usize) -> Option<IndexAssignment> {
    let (i_p, j_p, i_q, j_q) = match algorithm {
        1 => (1, 2, 3, 4),
        2 => (1, 2, 3, 1),
        3 => (1, 2, 2, 1),
        4 => (1, 2, 3, 2),
        _ => return None,
    };
    Some(IndexAssignment::new(i_p, j_p, i_q, j_q).expect("distinct"))
}

impl SweepStrategy {
    /// `alg1` … `alg4` with the representative assignment, or
    /// `alg2=1,2,3,1` / `alg2=best-closed-form:2a` for an explicit source.
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        let (name, source) = match s.split_once('=') {
            Some((n, src)) => (n.trim(), Some(src.parse::<AssignmentSource>()?)),
            None => (s.trim(), None),
        };
        let alg = name
            .strip_prefix("alg")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|k| (1..=4).contains(k))
            .ok_or_else(|| HarnessError::Spec(format!("unknown strategy {name:?}, expected alg1 to alg4")))?;
        let source = match source {
            Some(src) => src,
            None => AssignmentSource::Fixed(representative_assignment(alg).expect("1 to 4")),
        };
        let case = match source {
            AssignmentSource::Fixed(a) => a.case(),
            AssignmentSource::BestClosedForm(c) => c,
        };
        if crate::classifier::algorithm_for(case) != alg {
            return Err(HarnessError::Spec(format!("{name} cannot use a case {case} assignment")));
        }
        Ok(SweepStrategy {
            name: name.to_string(),
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Best,
    Mean,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Best => "best",
            Aggregation::Mean => "mean",
        })
    }
}

impl FromStr for Aggregation {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "best" => Ok(Aggregation::Best),
            "mean" => Ok(Aggregation::Mean),
            other => Err(HarnessError::Spec(format!("unknown aggregation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub c_grid: Vec<f64>,
    pub proportions: Vec<f64>,
    pub repeats: usize,
    pub aggregation: Aggregation,
    pub strategies: Vec<SweepStrategy>,
    pub base_seed: u64,
    pub n_leaves: usize,
    pub population: f64,
    pub trees_per_class: usize,
    pub tradeoff: f64,
    pub eta: f64,
    pub tol: f64,
    /// Record wall time per training call; when false the column is 0.
    pub timing: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            c_grid: DEFAULT_C_GRID.to_vec(),
            proportions: vec![0.15, 0.20, 0.25],
            repeats: 10,
            aggregation: Aggregation::Best,
            strategies: (1..=4).map(|k| SweepStrategy::parse(&format!("alg{k}")).expect("valid")).collect(),
            base_seed: 0,
            n_leaves: 5,
            population: 10_000.0,
            trees_per_class: 100,
            tradeoff: 1.0,
            eta: DEFAULT_ETA,
            tol: DEFAULT_TOL,
            timing: true,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Spec(m));
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return bad("C grid must be non-empty and positive".into());
        }
        if self.proportions.is_empty() || self.proportions.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return bad("proportions must lie in (0, 1)".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.strategies.is_empty() {
            return bad("no strategies given".into());
        }
        if !(self.eta > 0.0) {
            return bad("eta must be positive".into());
        }
        let mut names = HashSet::new();
        for s in &self.strategies {
            if !names.insert(&s.name) {
                return bad(format!("strategy {} listed twice", s.name));
            }
        }
        self.sim_config(self.c_grid[0], 0).validate()?;
        Ok(())
    }

    fn sim_config(&self, c: f64, repeat: usize) -> SimConfig {
        SimConfig {
            n_leaves: self.n_leaves,
            population: self.population,
            ratio_c: c,
            trees_per_class: self.trees_per_class,
            seed: dataset_seed(self.base_seed, c, repeat),
        }
    }

    /// `key=value` lines describing the run.
    pub fn metadata(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "format=tropsvm-sweep-1\nbase_seed={}\nc_grid={}\nproportions={}\nrepeats={}\naggregation={}\n\
             n_leaves={}\npopulation={}\ntrees_per_class={}\ntradeoff={}\neta={}\ntol={}\ntiming={}\n",
            self.base_seed,
            join(&self.c_grid),
            join(&self.proportions),
            self.repeats,
            self.aggregation,
            self.n_leaves,
            self.population,
            self.trees_per_class,
            self.tradeoff,
            self.eta,
            self.tol,
            self.timing,
        );
        for s in &self.strategies {
            out.push_str(&format!("strategy.{}={}\n", s.name, s.source));
        }
        out
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Simulation seed for one `(C, repeat)` pair; proportions share the dataset.
pub fn dataset_seed(base: u64, c: f64, repeat: usize) -> u64 {
    splitmix(base ^ splitmix(c.to_bits() ^ splitmix(repeat as u64)))
}

/// Seed of the test-set draw for one cell.
pub fn split_seed(base: u64, c: f64, proportion: f64, repeat: usize) -> u64 {
    splitmix(dataset_seed(base, c, repeat) ^ splitmix(proportion.to_bits()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    pub proportion: f64,
    pub strategy: String,
    pub repeat: usize,
    pub accuracy: f64,
    pub wall_time_s: f64,
}

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6}",
            self.c, self.proportion, self.strategy, self.repeat, self.accuracy, self.wall_time_s
        )
    }

    fn key(&self) -> (u64, u64, String, usize) {
        (self.c.to_bits(), self.proportion.to_bits(), self.strategy.clone(), self.repeat)
    }
}

/// Parses a sweep CSV, tolerating a truncated final line.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SWEEP_HEADER => {}
        _ => {
            return Err(HarnessError::BadRow {
                line: 1,
                reason: format!("expected header {SWEEP_HEADER}"),
            })
        }
    }
    let complete = text.ends_with('\n');
    let all: Vec<(usize, &str)> = lines.collect();
    let mut rows = Vec::new();
    for (k, &(i, line)) in all.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let last = k + 1 == all.len();
        let bad = |reason: &str| HarnessError::BadRow {
            line: i + 1,
            reason: reason.to_string(),
        };
        let parsed = (|| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
            Ok(SweepRow {
                c: num(f[0])?,
                proportion: num(f[1])?,
                strategy: f[2].trim().to_string(),
                repeat: f[3].trim().parse().map_err(|_| bad("bad repeat"))?,
                accuracy: num(f[4])?,
                wall_time_s: num(f[5])?,
            })
        })();
        match parsed {
            Ok(r) if !(last && !complete) => rows.push(r),
            Ok(_) => {}
            Err(_) if last && !complete => {}
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Everything needed to re-run `evaluate` on one cell.
pub struct CellArtifacts<'a> {
    pub c: f64,
    pub proportion: f64,
    pub repeat: usize,
    pub train: &'a LabeledDataset,
    pub test: &'a LabeledDataset,
    pub models: Vec<(&'a str, &'a TrainedModel)>,
}

/// Base file name shared by a cell's artifacts.
pub fn cell_stem(c: f64, proportion: f64, repeat: usize) -> String {
    format!("C{c}_p{proportion}_r{repeat}")
}

/// Writes `<stem>.train.csv`, `<stem>.test.csv` and one model per strategy.
pub fn write_artifacts(dir: &Path, cell: &CellArtifacts<'_>) -> Result<(), HarnessError> {
    let stem = cell_stem(cell.c, cell.proportion, cell.repeat);
    let put = |name: String, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|source| HarnessError::Io { path, source })
    };
    put(format!("{stem}.train.csv"), cell.train.to_csv())?;
    put(format!("{stem}.test.csv"), cell.test.to_csv())?;
    for (name, m) in &cell.models {
        put(format!("{stem}.{name}.model"), m.to_text())?;
    }
    Ok(())
}

/// Runs the sweep in `(C, proportion, repeat, strategy)` order, writing one
/// CSV line per run to `sink` and flushing it immediately. Runs whose key is
/// in `done` are skipped. The header is written only when `write_header`.
pub fn run_sweep<W: Write>(
    spec: &SweepSpec,
    sink: &mut W,
    write_header: bool,
    done: &[SweepRow],
    artifacts: Option<&Path>,
) -> Result<Vec<SweepRow>, HarnessError> {
    spec.validate()?;
    let done: HashSet<_> = done.iter().map(SweepRow::key).collect();
    if write_header {
        writeln!(sink, "{SWEEP_HEADER}")?;
        sink.flush()?;
    }
    let mut rows = Vec::new();
    for &c in &spec.c_grid {
        for &proportion in &spec.proportions {
            for repeat in 0..spec.repeats {
                let pending: Vec<&SweepStrategy> = spec
                    .strategies
                    .iter()
                    .filter(|s| {
                        !done.contains(&(c.to_bits(), proportion.to_bits(), s.name.clone(), repeat))
                    })
                    .collect();
                if pending.is_empty() {
                    continue;
                }
                let sim = generate_dataset(&spec.sim_config(c, repeat))?;
                let mut rng = tree_rng(split_seed(spec.base_seed, c, proportion, repeat), 0);
                let (train_set, test_set) = stratified_split(&sim.dataset, proportion, &mut rng)?;
                let mut models = Vec::new();
                for s in pending {
                    let assignment = s.source.resolve(&train_set)?;
                    let cfg = TrainConfig {
                        assignment: Some(assignment),
                        tradeoff: spec.tradeoff,
                        ratio_c: c,
                        eta: spec.eta,
                        tol: spec.tol,
                    };
                    let start = Instant::now();
                    let model = train(&train_set, Strategy::SoftFixed, &cfg)?;
                    let elapsed = start.elapsed().as_secs_f64();
                    let report = evaluate(&test_set, &model)?;
                    let row = SweepRow {
                        c,
                        proportion,
                        strategy: s.name.clone(),
                        repeat,
                        accuracy: report.accuracy,
                        wall_time_s: if spec.timing { elapsed } else { 0.0 },
                    };
                    writeln!(sink, "{}", row.to_csv_line())?;
                    sink.flush()?;
                    log::info!("{} (assignment {})", row.to_csv_line(), assignment);
                    rows.push(row);
                    models.push((s.name.as_str(), model));
                }
                if let Some(dir) = artifacts {
                    write_artifacts(
                        dir,
                        &CellArtifacts {
                            c,
                            proportion,
                            repeat,
                            train: &train_set,
                            test: &test_set,
                            models: models.iter().map(|(n, m)| (*n, m)).collect(),
                        },
                    )?;
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub c: f64,
    pub proportion: f64,
    pub strategy: String,
    pub accuracy: f64,
    pub mean_wall_time_s: f64,
    pub runs: usize,
}

/// Aggregates rows per `(C, proportion, strategy)` in first-seen order.
pub fn summarize(rows: &[SweepRow], aggregation: Aggregation) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for r in rows {
        let slot = out
            .iter_mut()
            .find(|s| s.c == r.c && s.proportion == r.proportion && s.strategy == r.strategy);
        match slot {
            Some(s) => {
                s.accuracy = match aggregation {
                    Aggregation::Best => s.accuracy.max(r.accuracy),
                    Aggregation::Mean => s.accuracy + r.accuracy,
                };
                s.mean_wall_time_s += r.wall_time_s;
                s.runs += 1;
            }
            None => out.push(SummaryRow {
                c: r.c,
                proportion: r.proportion,
                strategy: r.strategy.clone(),
                accuracy: r.accuracy,
                mean_wall_time_s: r.wall_time_s,
                runs: 1,
            }),
        }
    }
    for s in &mut out {
        if aggregation == Aggregation::Mean {
            s.accuracy /= s.runs as f64;
        }
        s.mean_wall_time_s /= s.runs as f64;
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow], aggregation: Aggregation) -> String {
    let mut out = format!("C,proportion,strategy,{aggregation}_accuracy,mean_wall_time_s,runs\n");
    for s in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{}\n",
            s.c, s.proportion, s.strategy, s.accuracy, s.mean_wall_time_s, s.runs
        ));
    }
    out
}

/// Mean accuracy of one strategy at one `C`, over every proportion and repeat.
pub fn mean_accuracy(rows: &[SweepRow], c: f64, strategy: &str) -> Option<f64> {
    let xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.c == c && r.strategy == strategy)
        .map(|r| r.accuracy)
        .collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Reads one label per non-blank line (`P` or `Q`).
pub fn parse_label_file(text: &str) -> Result<Vec<Label>, DataError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

pub fn write_label_file(labels: &[Label]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}
