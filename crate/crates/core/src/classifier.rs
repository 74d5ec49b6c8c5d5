//! Sector-lookup classifiers built on a trained hyperplane.
//!
//! A test point `t` is labelled from `I* = argmax(ω + t) ∩ S`, where `S` is
//! the set of indices of the assignment. Each case has two fixed lookup
//! tables, one for depth ratios `C <= η` and one for `C > η`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

use crate::dataset::{DataError, Label, LabeledDataset};
use crate::hard::{all_assignments, enumerate_assignments, Case, HardError, IndexAssignment};
use crate::soft::{solve_soft, SoftConfig, SoftError, SoftOutcome};
use crate::tropical::{sector_membership, TropHyperplane, TropPoint, DEFAULT_TOL};

pub const DEFAULT_ETA: f64 = 4.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("lookup table {table} is broken: {reason}")]
    BrokenTable { table: String, reason: String },
    #[error("model has dimension {model} but the data has dimension {data}")]
    DimensionMismatch { model: usize, data: usize },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("no assignment separates the training classes with a positive hard margin; use a soft strategy")]
    NoFeasibleAssignment,
    #[error("strategy {0} needs an explicit assignment")]
    MissingAssignment(Strategy),
    #[error("soft-margin program is unbounded for trade-off {0}")]
    Unbounded(f64),
    #[error("bad model file: {0}")]
    BadModel(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Hard(#[from] HardError),
    #[error(transparent)]
    Soft(#[from] SoftError),
}

/// Which of the two lookup tables applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    /// `C <= η`
    Shallow,
    /// `C > η`
    Deep,
}

impl Regime {
    pub fn of(ratio_c: f64, eta: f64) -> Self {
        if ratio_c <= eta {
            Regime::Shallow
        } else {
            Regime::Deep
        }
    }
}

/// Lookup table as printed: role names for the index slots, and for each
/// regime the subsets sent to P and to Q.
struct TableText {
    name: &'static str,
    slots: &'static [&'static str],
    shallow_p: &'static [&'static [&'static str]],
    shallow_q: &'static [&'static [&'static str]],
    deep_p: &'static [&'static [&'static str]],
    deep_q: &'static [&'static [&'static str]],
}

const ALG1: TableText = TableText {
    name: "algorithm 1",
    slots: &["iP", "jP", "iQ", "jQ"],
    shallow_p: &[
        &["iP"],
        &["jP"],
        &["iP", "jP"],
        &["iP", "iQ"],
        &["jP", "iQ"],
        &["jP", "jQ"],
        &["jP", "iQ", "jQ"],
        &["iP", "jP", "iQ", "jQ"],
    ],
    shallow_q: &[
        &["iQ"],
        &["jQ"],
        &["iQ", "jQ"],
        &["iP", "jQ"],
        &["iP", "jP", "iQ"],
        &["iP", "jP", "jQ"],
        &["iP", "iQ", "jQ"],
        &[],
    ],
    deep_p: &[
        &["iP"],
        &["jP"],
        &["iP", "jP"],
        &["iP", "iQ"],
        &["jP", "jQ"],
        &["iP", "iQ", "jQ"],
        &["jP", "iQ", "jQ"],
        &["iP", "jP", "iQ", "jQ"],
    ],
    deep_q: &[
        &["iQ"],
        &["jQ"],
        &["iQ", "jQ"],
        &["iP", "jQ"],
        &["jP", "iQ"],
        &["iP", "jP", "iQ"],
        &["iP", "jP", "jQ"],
        &[],
    ],
};

const ALG2: TableText = TableText {
    name: "algorithm 2",
    slots: &["iP", "jP", "iQ"],
    shallow_p: &[&["iP"], &["jP"], &["iQ"], &["iQ", "jP"]],
    shallow_q: &[&["iP", "jP"], &["iP", "iQ"], &["iP", "iQ", "jP"], &[]],
    deep_p: &[&["iP"], &["iP", "jP"], &["iP", "iQ", "jP"], &[]],
    deep_q: &[&["jP"], &["iQ"], &["iP", "iQ"], &["iQ", "jP"]],
};

const ALG3: TableText = TableText {
    name: "algorithm 3",
    slots: &["k1", "k2"],
    shallow_p: &[&["k1"], &["k1", "k2"]],
    shallow_q: &[&["k2"], &[]],
    deep_p: &[&["k1"], &[]],
    deep_q: &[&["k2"], &["k1", "k2"]],
};

const ALG4: TableText = TableText {
    name: "algorithm 4",
    slots: &["iP", "iQ", "j"],
    shallow_p: &[&["iQ"], &["iP", "iQ"], &["iP", "j"], &["j"]],
    shallow_q: &[&["iP"], &["iQ", "j"], &["iP", "iQ", "j"], &[]],
    deep_p: &[&["iP"], &["iP", "iQ"], &["iP", "iQ", "j"], &[]],
    deep_q: &[&["iQ"], &["iP", "j"], &["iQ", "j"], &["j"]],
};

/// A checked table: label per subset bitmask of the slots.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    pub name: &'static str,
    pub slots: usize,
    shallow: Vec<Label>,
    deep: Vec<Label>,
}

impl LookupTable {
    fn load(text: &TableText) -> Result<Self, ClassifierError> {
        let broken = |reason: String| ClassifierError::BrokenTable {
            table: text.name.to_string(),
            reason,
        };
        let k = text.slots.len();
        let fill = |p_rows: &[&[&str]], q_rows: &[&[&str]], regime: &str| -> Result<Vec<Label>, ClassifierError> {
            let mut out: Vec<Option<Label>> = vec![None; 1 << k];
            for (rows, label) in [(p_rows, Label::P), (q_rows, Label::Q)] {
                for row in rows {
                    let mut mask = 0usize;
                    for role in *row {
                        let bit = text
                            .slots
                            .iter()
                            .position(|s| s == role)
                            .ok_or_else(|| broken(format!("unknown role {role}")))?;
                        mask |= 1 << bit;
                    }
                    if let Some(prev) = out[mask] {
                        return Err(broken(format!("{regime}: subset {row:?} listed twice ({prev} and {label})")));
                    }
                    out[mask] = Some(label);
                }
            }
            out.into_iter()
                .enumerate()
                .map(|(mask, l)| l.ok_or_else(|| broken(format!("{regime}: subset mask {mask:b} has no label"))))
                .collect()
        };
        let shallow = fill(text.shallow_p, text.shallow_q, "C <= eta")?;
        let deep = fill(text.deep_p, text.deep_q, "C > eta")?;
        Ok(LookupTable {
            name: text.name,
            slots: k,
            shallow,
            deep,
        })
    }

    /// Label of the subset `mask` of the slots.
    pub fn label(&self, regime: Regime, mask: usize) -> Label {
        match regime {
            Regime::Shallow => self.shallow[mask],
            Regime::Deep => self.deep[mask],
        }
    }

    /// Number of subsets sent to each label in a regime.
    pub fn counts(&self, regime: Regime) -> (usize, usize) {
        let v = match regime {
            Regime::Shallow => &self.shallow,
            Regime::Deep => &self.deep,
        };
        let p = v.iter().filter(|&&l| l == Label::P).count();
        (p, v.len() - p)
    }
}

/// The four tables, checked for totality and disjointness.
pub fn load_tables() -> Result<[LookupTable; 4], ClassifierError> {
    Ok([
        LookupTable::load(&ALG1)?,
        LookupTable::load(&ALG2)?,
        LookupTable::load(&ALG3)?,
        LookupTable::load(&ALG4)?,
    ])
}

fn tables() -> &'static [LookupTable; 4] {
    static TABLES: OnceLock<[LookupTable; 4]> = OnceLock::new();
    TABLES.get_or_init(|| load_tables().expect("lookup tables are total and disjoint"))
}

/// Algorithm number (1 to 4) used for a case.
pub fn algorithm_for(case: Case) -> usize {
    match case {
        Case::Case1 => 1,
        Case::Case2a | Case::Case2b => 2,
        Case::Case3 => 3,
        Case::Case4 => 4,
    }
}

/// Concrete index per slot of the case's table, and whether labels are
/// swapped. Case 2b reads the case-2a table with the classes exchanged.
fn slots_for(a: &IndexAssignment) -> (Vec<usize>, bool) {
    match a.case() {
        Case::Case1 => (vec![a.i_p, a.j_p, a.i_q, a.j_q], false),
        Case::Case2a => (vec![a.i_p, a.j_p, a.i_q], false),
        Case::Case2b => (vec![a.i_q, a.j_q, a.i_p], true),
        Case::Case3 => (vec![a.i_p, a.i_q], false),
        Case::Case4 => (vec![a.i_p, a.i_q, a.j_p], false),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Best hard margin over all constant assignments.
    HardEnumerate,
    /// Soft margin with a supplied assignment.
    SoftFixed,
    /// Best soft objective over all constant assignments.
    SoftEnumerate,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::HardEnumerate => "hard_enumerate",
            Strategy::SoftFixed => "soft_fixed",
            Strategy::SoftEnumerate => "soft_enumerate",
        })
    }
}

impl FromStr for Strategy {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "hard_enumerate" | "hard-enumerate" => Ok(Strategy::HardEnumerate),
            "soft_fixed" | "soft-fixed" | "soft_fixed_assignment" => Ok(Strategy::SoftFixed),
            "soft_enumerate" | "soft-enumerate" => Ok(Strategy::SoftEnumerate),
            other => Err(ClassifierError::UnknownStrategy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub omega: TropHyperplane,
    pub assignment: IndexAssignment,
    pub margin: f64,
    /// Soft-margin objective, equal to the margin for hard models.
    pub objective: f64,
    pub tradeoff: f64,
    /// Species-depth ratio `C` of the data, which selects the table.
    pub ratio_c: f64,
    pub eta: f64,
    /// Tolerance for ties in `argmax(ω + t)`.
    pub tol: f64,
    pub strategy: Strategy,
}

const MODEL_FORMAT: &str = "tropsvm-model-1";

impl TrainedModel {
    pub fn case(&self) -> Case {
        self.assignment.case()
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.ratio_c, self.eta)
    }

    /// Plain-text `key=value` serialization.
    pub fn to_text(&self) -> String {
        let omega: Vec<String> = self.omega.omega().iter().map(|w| w.to_string()).collect();
        format!(
            "format={MODEL_FORMAT}\ndim={}\nstrategy={}\nassignment={}\ncase={}\nmargin={}\nobjective={}\n\
             tradeoff={}\nratio_c={}\neta={}\ntol={}\nomega={}\n",
            self.dim(),
            self.strategy,
            self.assignment,
            self.case(),
            self.margin,
            self.objective,
            self.tradeoff,
            self.ratio_c,
            self.eta,
            self.tol,
            omega.join(","),
        )
    }

    pub fn from_text(text: &str) -> Result<Self, ClassifierError> {
        let bad = |m: String| ClassifierError::BadModel(m);
        let mut kv = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {line:?} is not key=value")))?;
            if kv.insert(k.trim(), v.trim()).is_some() {
                return Err(bad(format!("key {k} repeated")));
            }
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(format!("missing key {k}")));
        let num = |k: &str| -> Result<f64, ClassifierError> {
            get(k)?.parse::<f64>().map_err(|_| bad(format!("{k} is not a number")))
        };
        if get("format")? != MODEL_FORMAT {
            return Err(bad(format!("unsupported format {:?}", get("format")?)));
        }
        let dim: usize = get("dim")?.parse().map_err(|_| bad("dim is not an integer".into()))?;
        let omega: Vec<f64> = get("omega")?
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("omega has a non-numeric entry".into()))?;
        if omega.len() != dim {
            return Err(bad(format!("omega has {} entries but dim is {dim}", omega.len())));
        }
        let assignment: IndexAssignment = get("assignment")?.parse()?;
        assignment.check_dim(dim)?;
        let case: Case = get("case")?.parse()?;
        if case != assignment.case() {
            return Err(bad(format!("case {case} does not match assignment {assignment}")));
        }
        let model = TrainedModel {
            omega: TropHyperplane::new(omega).map_err(|e| bad(e.to_string()))?,
            assignment,
            margin: num("margin")?,
            objective: num("objective")?,
            tradeoff: num("tradeoff")?,
            ratio_c: num("ratio_c")?,
            eta: num("eta")?,
            tol: num("tol")?,
            strategy: get("strategy")?.parse()?,
        };
        if !(model.eta > 0.0) {
            return Err(bad("eta must be positive".into()));
        }
        if !(model.tol >= 0.0) {
            return Err(bad("tol must be non-negative".into()));
        }
        Ok(model)
    }
}

/// `I*` as concrete indices, ascending.
pub fn restricted_sector(t: &TropPoint, m: &TrainedModel) -> Result<Vec<usize>, ClassifierError> {
    if t.dim() != m.dim() {
        return Err(ClassifierError::DimensionMismatch {
            model: m.dim(),
            data: t.dim(),
        });
    }
    let s = sector_membership(t, &m.omega, m.tol).expect("dimensions checked");
    Ok(m.assignment.indices().into_iter().filter(|&k| s.contains(k)).collect())
}

pub fn assign_point(t: &TropPoint, m: &TrainedModel) -> Result<Label, ClassifierError> {
    let star = restricted_sector(t, m)?;
    let (slots, swapped) = slots_for(&m.assignment);
    let mask = slots
        .iter()
        .enumerate()
        .filter(|(_, idx)| star.contains(idx))
        .fold(0usize, |acc, (bit, _)| acc | (1 << bit));
    let table = &tables()[algorithm_for(m.case()) - 1];
    let label = table.label(m.regime(), mask);
    Ok(if swapped { label.other() } else { label })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub predictions: Vec<Label>,
    /// `confusion[truth][predicted]` with P = 0 and Q = 1.
    pub confusion: [[usize; 2]; 2],
    pub accuracy: f64,
}

impl PredictionReport {
    pub fn correct(&self) -> usize {
        self.confusion[0][0] + self.confusion[1][1]
    }

    pub fn total(&self) -> usize {
        self.predictions.len()
    }
}

impl fmt::Display for PredictionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.confusion;
        writeln!(f, "accuracy={}", self.accuracy)?;
        writeln!(f, "correct={}", self.correct())?;
        writeln!(f, "total={}", self.total())?;
        writeln!(f, "true_P_pred_P={}", c[0][0])?;
        writeln!(f, "true_P_pred_Q={}", c[0][1])?;
        writeln!(f, "true_Q_pred_P={}", c[1][0])?;
        writeln!(f, "true_Q_pred_Q={}", c[1][1])
    }
}

pub fn predict(points: &[TropPoint], m: &TrainedModel) -> Result<Vec<Label>, ClassifierError> {
    points.iter().map(|t| assign_point(t, m)).collect()
}

fn slot(l: Label) -> usize {
    match l {
        Label::P => 0,
        Label::Q => 1,
    }
}

/// Scores predicted labels against the truth.
pub fn score(truth: &[Label], predicted: &[Label]) -> Result<PredictionReport, ClassifierError> {
    if truth.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    if truth.len() != predicted.len() {
        return Err(DataError::LabelCount {
            what: "predictions",
            expected: truth.len(),
            got: predicted.len(),
        }
        .into());
    }
    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[slot(t)][slot(p)] += 1;
    }
    let correct = confusion[0][0] + confusion[1][1];
    Ok(PredictionReport {
        predictions: predicted.to_vec(),
        confusion,
        accuracy: correct as f64 / truth.len() as f64,
    })
}

pub fn evaluate(test: &LabeledDataset, m: &TrainedModel) -> Result<PredictionReport, ClassifierError> {
    if test.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let predicted = predict(&test.points(), m)?;
    score(test.labels(), &predicted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub assignment: Option<IndexAssignment>,
    pub tradeoff: f64,
    pub ratio_c: f64,
    pub eta: f64,
    pub tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            assignment: None,
            tradeoff: 1.0,
            ratio_c: 1.0,
            eta: DEFAULT_ETA,
            tol: DEFAULT_TOL,
        }
    }
}

pub fn train(data: &LabeledDataset, strategy: Strategy, cfg: &TrainConfig) -> Result<TrainedModel, ClassifierError> {
    data.require_both_classes()?;
    let p = data.class_points(Label::P);
    let q = data.class_points(Label::Q);
    let model = |omega, assignment, margin, objective| TrainedModel {
        omega,
        assignment,
        margin,
        objective,
        tradeoff: cfg.tradeoff,
        ratio_c: cfg.ratio_c,
        eta: cfg.eta,
        tol: cfg.tol,
        strategy,
    };
    match strategy {
        Strategy::HardEnumerate => {
            let best = enumerate_assignments(&p, &q)?.ok_or(ClassifierError::NoFeasibleAssignment)?;
            let z = best.margin.expect("feasible");
            Ok(model(best.omega.expect("constructed"), best.assignment, z, z))
        }
        Strategy::SoftFixed => {
            let a = cfg.assignment.ok_or(ClassifierError::MissingAssignment(strategy))?;
            let r = soft_solve(&p, &q, a, cfg.tradeoff)?;
            Ok(model(r.omega, a, r.z, r.objective))
        }
        Strategy::SoftEnumerate => {
            let mut best: Option<(IndexAssignment, crate::soft::SoftMarginResult)> = None;
            for a in all_assignments(data.dim()) {
                let r = soft_solve(&p, &q, a, cfg.tradeoff)?;
                if best.as_ref().map_or(true, |(_, b)| r.objective > b.objective + 1e-9) {
                    best = Some((a, r));
                }
            }
            let (a, r) = best.expect("at least one assignment for dim >= 3");
            Ok(model(r.omega, a, r.z, r.objective))
        }
    }
}

fn soft_solve(
    p: &[TropPoint],
    q: &[TropPoint],
    a: IndexAssignment,
    tradeoff: f64,
) -> Result<crate::soft::SoftMarginResult, ClassifierError> {
    match solve_soft(p, q, &SoftConfig::new(a).with_tradeoff(tradeoff))? {
        SoftOutcome::Optimal(r) => Ok(r),
        SoftOutcome::Unbounded => Err(ClassifierError::Unbounded(tradeoff)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phylo::DissimilarityMap;

    fn example_data() -> LabeledDataset {
        let rows: [[f64; 6]; 4] = [
            [4.0, 10.0, 20.0, 10.0, 20.0, 20.0],
            [8.0, 16.0, 20.0, 16.0, 20.0, 20.0],
            [2.0, 20.0, 20.0, 20.0, 20.0, 10.0],
            [6.0, 20.0, 20.0, 20.0, 20.0, 18.0],
        ];
        let maps = rows.iter().map(|r| DissimilarityMap::new(4, r.to_vec()).unwrap()).collect();
        LabeledDataset::new(maps, vec![Label::P, Label::P, Label::Q, Label::Q]).unwrap()
    }

    #[test]
    fn tables_are_total_and_disjoint() {
        let t = load_tables().unwrap();
        for (table, size) in t.iter().zip([16, 8, 4, 8]) {
            for regime in [Regime::Shallow, Regime::Deep] {
                let (p, q) = table.counts(regime);
                assert_eq!(p + q, size);
                assert_eq!(p, q);
            }
        }
    }

    #[test]
    fn broken_tables_are_rejected() {
        let dup = TableText {
            name: "dup",
            slots: &["k1", "k2"],
            shallow_p: &[&["k1"], &["k1", "k2"]],
            shallow_q: &[&["k1"], &[]],
            deep_p: &[&["k1"], &[]],
            deep_q: &[&["k2"], &["k1", "k2"]],
        };
        assert!(matches!(LookupTable::load(&dup), Err(ClassifierError::BrokenTable { .. })));
        let gap = TableText {
            name: "gap",
            slots: &["k1", "k2"],
            shallow_p: &[&["k1"]],
            shallow_q: &[&["k2"], &[]],
            deep_p: &[&["k1"], &[]],
            deep_q: &[&["k2"], &["k1", "k2"]],
        };
        assert!(matches!(LookupTable::load(&gap), Err(ClassifierError::BrokenTable { .. })));
    }

    #[test]
    fn example_model() {
        let data = example_data();
        let cfg = TrainConfig {
            assignment: Some(IndexAssignment::new(5, 6, 4, 2).unwrap()),
            ..TrainConfig::default()
        };
        let m = train(&data, Strategy::SoftFixed, &cfg).unwrap();
        assert!((m.margin - 2.0).abs() < 1e-9);
        let p1 = &data.points()[0];
        assert_eq!(restricted_sector(p1, &m).unwrap(), vec![5]);
        assert_eq!(assign_point(p1, &m).unwrap(), Label::P);
        let report = evaluate(&data, &m).unwrap();
        assert_eq!(report.accuracy, 1.0);
        let flipped = evaluate(&data.with_swapped_labels(), &m).unwrap();
        assert_eq!(flipped.accuracy, 0.0);
    }

    fn crossed_model(ratio_c: f64) -> TrainedModel {
        TrainedModel {
            omega: TropHyperplane::zero(3),
            assignment: IndexAssignment::new(2, 3, 3, 2).unwrap(),
            margin: 0.0,
            objective: 0.0,
            tradeoff: 1.0,
            ratio_c,
            eta: DEFAULT_ETA,
            tol: DEFAULT_TOL,
            strategy: Strategy::SoftFixed,
        }
    }

    #[test]
    fn crossed_case_tie_rows() {
        let tie = TropPoint::from_slice(&[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(assign_point(&tie, &crossed_model(1.0)).unwrap(), Label::P);
        assert_eq!(assign_point(&tie, &crossed_model(10.0)).unwrap(), Label::Q);
        let outside = TropPoint::from_slice(&[5.0, 1.0, 1.0]).unwrap();
        assert_eq!(assign_point(&outside, &crossed_model(1.0)).unwrap(), Label::Q);
        assert_eq!(assign_point(&outside, &crossed_model(10.0)).unwrap(), Label::P);
        assert_eq!(assign_point(&TropPoint::from_slice(&[0.0, 1.0]).unwrap(), &crossed_model(1.0)).unwrap_err(),
            ClassifierError::DimensionMismatch { model: 3, data: 2 });
    }

    #[test]
    fn mirrored_case_uses_swapped_table() {
        // 2b assignment (1,2,2,3) reads the 2a table through iP'=2, jP'=3, iQ'=1.
        let mut m = crossed_model(10.0);
        m.assignment = IndexAssignment::new(1, 2, 2, 3).unwrap();
        let at = |v: [f64; 3]| assign_point(&TropPoint::from_slice(&v).unwrap(), &m).unwrap();
        // {i_P} only: the 2a table's {iQ'} row, which is Q in the deep regime, swapped to P.
        assert_eq!(at([1.0, 0.0, 0.0]), Label::P);
        // {i_Q} only: the 2a table's {iP'} row (P), swapped to Q.
        assert_eq!(at([0.0, 1.0, 0.0]), Label::Q);
    }

    #[test]
    fn model_text_round_trip() {
        let data = example_data();
        let m = train(&data, Strategy::HardEnumerate, &TrainConfig::default()).unwrap();
        let text = m.to_text();
        assert_eq!(TrainedModel::from_text(&text).unwrap(), m);
        let wrong = if m.case() == Case::Case3 { "1" } else { "3" };
        assert!(TrainedModel::from_text(&text.replace("case=", &format!("case={wrong}\n#"))).is_err());
        assert!(TrainedModel::from_text(&text.replace("tropsvm-model-1", "tropsvm-model-9")).is_err());
        assert!(TrainedModel::from_text("format=tropsvm-model-1\n").is_err());
    }

    #[test]
    fn errors() {
        let data = example_data();
        assert_eq!(
            train(&data, Strategy::SoftFixed, &TrainConfig::default()),
            Err(ClassifierError::MissingAssignment(Strategy::SoftFixed))
        );
        let dup = data.select(&[0, 0]).unwrap();
        assert!(train(&dup, Strategy::HardEnumerate, &TrainConfig::default()).is_err());
        let same = LabeledDataset::new(vec![data.maps()[0].clone(); 2], vec![Label::P, Label::Q]).unwrap();
        assert_eq!(
            train(&same, Strategy::HardEnumerate, &TrainConfig::default()),
            Err(ClassifierError::NoFeasibleAssignment)
        );
        assert_eq!(score(&[], &[]), Err(ClassifierError::EmptyTestSet));
        assert_eq!("soft_enumerate".parse::<Strategy>().unwrap(), Strategy::SoftEnumerate);
    }
}
