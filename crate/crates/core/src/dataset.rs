//! Labeled ultrametric datasets and the CSV interchange format.
//!
//! ```text
//! n_leaves=4
//! P,0.6,1.8,2,1.8,2,2
//! Q,0.2,2,2,2,2,1
//! ```
//!
//! The label column is optional. A file has either a label on every row or
//! on none; rows are told apart by their field count (`d` or `d + 1`).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::phylo::{pair_count, DissimilarityMap, PhyloError};
use crate::tropical::TropPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    P,
    Q,
}

impl Label {
    pub fn other(self) -> Label {
        match self {
            Label::P => Label::Q,
            Label::Q => Label::P,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::P => "P",
            Label::Q => "Q",
        })
    }
}

impl FromStr for Label {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "P" | "p" => Ok(Label::P),
            "Q" | "q" => Ok(Label::Q),
            other => Err(DataError::BadLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("missing `n_leaves=<N>` header")]
    MissingHeader,
    #[error("bad header {0:?}")]
    BadHeader(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    FieldCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: {value:?} is not a number")]
    BadNumber { line: usize, value: String },
    #[error("label {0:?} is neither P nor Q")]
    BadLabel(String),
    #[error("line {line}: mixing labeled and unlabeled rows")]
    MixedLabels { line: usize },
    #[error("line {line}: {source}")]
    Map { line: usize, source: PhyloError },
    #[error("dataset has no {0} points")]
    EmptyClass(Label),
    #[error("dataset is empty")]
    Empty,
    #[error("{what}: expected {expected} labels, got {got}")]
    LabelCount { what: &'static str, expected: usize, got: usize },
    #[error("maps on {left} and {right} leaves cannot share a dataset")]
    LeafCountMismatch { left: usize, right: usize },
}

/// Contents of an ultrametric CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub n_leaves: usize,
    pub maps: Vec<DissimilarityMap>,
    pub labels: Option<Vec<Label>>,
}

pub fn parse_csv(text: &str) -> Result<CsvTable, DataError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or(DataError::MissingHeader)?;
    let n_leaves: usize = header
        .strip_prefix("n_leaves=")
        .ok_or(DataError::MissingHeader)?
        .trim()
        .parse()
        .map_err(|_| DataError::BadHeader(header.to_string()))?;
    if n_leaves < 2 {
        return Err(DataError::BadHeader(header.to_string()));
    }
    let d = pair_count(n_leaves);

    let mut maps = Vec::new();
    let mut labels = Vec::new();
    let mut labeled: Option<bool> = None;
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        let has_label = match fields.len() {
            n if n == d => false,
            n if n == d + 1 => true,
            found => return Err(DataError::FieldCount { line, expected: d, found }),
        };
        if *labeled.get_or_insert(has_label) != has_label {
            return Err(DataError::MixedLabels { line });
        }
        let numbers = if has_label {
            labels.push(fields[0].parse::<Label>()?);
            &fields[1..]
        } else {
            &fields[..]
        };
        let values = numbers
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| DataError::BadNumber {
                    line,
                    value: s.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        maps.push(DissimilarityMap::new(n_leaves, values).map_err(|source| DataError::Map { line, source })?);
    }
    Ok(CsvTable {
        n_leaves,
        maps,
        labels: if labeled == Some(true) { Some(labels) } else { None },
    })
}

/// Serializes maps, with a leading label column when `labels` is given.
///
/// Numbers use the shortest representation that parses back exactly.
pub fn write_csv(n_leaves: usize, maps: &[DissimilarityMap], labels: Option<&[Label]>) -> String {
    let mut out = format!("n_leaves={n_leaves}\n");
    for (k, m) in maps.iter().enumerate() {
        let mut fields: Vec<String> = Vec::with_capacity(m.values().len() + 1);
        if let Some(ls) = labels {
            fields.push(ls[k].to_string());
        }
        fields.extend(m.values().iter().map(|v| v.to_string()));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Ultrametrics with a class label each.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    n_leaves: usize,
    maps: Vec<DissimilarityMap>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(maps: Vec<DissimilarityMap>, labels: Vec<Label>) -> Result<Self, DataError> {
        let first = maps.first().ok_or(DataError::Empty)?;
        if maps.len() != labels.len() {
            return Err(DataError::LabelCount {
                what: "dataset",
                expected: maps.len(),
                got: labels.len(),
            });
        }
        let n_leaves = first.n_leaves();
        if let Some(m) = maps.iter().find(|m| m.n_leaves() != n_leaves) {
            return Err(DataError::LeafCountMismatch {
                left: n_leaves,
                right: m.n_leaves(),
            });
        }
        Ok(Self { n_leaves, maps, labels })
    }

    /// Builds from two classes, `P` rows first.
    pub fn from_classes(p: Vec<DissimilarityMap>, q: Vec<DissimilarityMap>) -> Result<Self, DataError> {
        let labels = std::iter::repeat(Label::P)
            .take(p.len())
            .chain(std::iter::repeat(Label::Q).take(q.len()))
            .collect();
        Self::new(p.into_iter().chain(q).collect(), labels)
    }

    pub fn from_csv(text: &str) -> Result<Self, DataError> {
        let table = parse_csv(text)?;
        let n = table.maps.len();
        let labels = table.labels.ok_or(DataError::LabelCount {
            what: "labeled dataset",
            expected: n,
            got: 0,
        })?;
        Self::new(table.maps, labels)
    }

    pub fn to_csv(&self) -> String {
        write_csv(self.n_leaves, &self.maps, Some(&self.labels))
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn dim(&self) -> usize {
        pair_count(self.n_leaves)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[DissimilarityMap] {
        &self.maps
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn points(&self) -> Vec<TropPoint> {
        self.maps
            .iter()
            .map(|m| TropPoint::from_slice(m.values()).expect("validated maps are finite"))
            .collect()
    }

    /// Points of one class, in file order.
    pub fn class_points(&self, label: Label) -> Vec<TropPoint> {
        self.maps
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == label)
            .map(|(m, _)| TropPoint::from_slice(m.values()).expect("validated maps are finite"))
            .collect()
    }

    /// Sub-dataset at the given row positions, in that order.
    pub fn select(&self, rows: &[usize]) -> Result<Self, DataError> {
        Self::new(
            rows.iter().map(|&r| self.maps[r].clone()).collect(),
            rows.iter().map(|&r| self.labels[r]).collect(),
        )
    }

    /// Copy with every label flipped.
    pub fn with_swapped_labels(&self) -> Self {
        Self {
            n_leaves: self.n_leaves,
            maps: self.maps.clone(),
            labels: self.labels.iter().map(|l| l.other()).collect(),
        }
    }

    pub fn require_both_classes(&self) -> Result<(), DataError> {
        for l in [Label::P, Label::Q] {
            if self.count(l) == 0 {
                return Err(DataError::EmptyClass(l));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "n_leaves=4\nP,0.6,1.8,2,1.8,2,2\n\n# comment\nQ,0.2,2,2,2,2,1\n";

    #[test]
    fn labeled_round_trip() {
        let ds = LabeledDataset::from_csv(SAMPLE).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 6);
        assert_eq!(ds.labels(), &[Label::P, Label::Q]);
        assert_eq!(ds.to_csv(), "n_leaves=4\nP,0.6,1.8,2,1.8,2,2\nQ,0.2,2,2,2,2,1\n");
        assert_eq!(LabeledDataset::from_csv(&ds.to_csv()).unwrap(), ds);
    }

    #[test]
    fn unlabeled_rows() {
        let t = parse_csv("n_leaves=3\n1,2,2\n0.5,0.5,0.25\n").unwrap();
        assert_eq!(t.maps.len(), 2);
        assert!(t.labels.is_none());
        assert!(LabeledDataset::from_csv("n_leaves=3\n1,2,2\n").is_err());
    }

    #[test]
    fn float_text_is_exact() {
        let v = vec![0.1 + 0.2, 1.0 / 3.0, 12345.678901234567];
        let m = DissimilarityMap::new(3, v.clone()).unwrap();
        let back = parse_csv(&write_csv(3, &[m], None)).unwrap();
        assert_eq!(back.maps[0].values(), &v[..]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(parse_csv(""), Err(DataError::MissingHeader));
        assert!(matches!(parse_csv("n_leaves=x\n"), Err(DataError::BadHeader(_))));
        assert_eq!(
            parse_csv("n_leaves=3\n1,2\n"),
            Err(DataError::FieldCount { line: 2, expected: 3, found: 2 })
        );
        assert!(matches!(parse_csv("n_leaves=3\n1,a,2\n"), Err(DataError::BadNumber { line: 2, .. })));
        assert_eq!(parse_csv("n_leaves=3\nP,1,2,2\n1,2,2\n"), Err(DataError::MixedLabels { line: 3 }));
        assert!(matches!(parse_csv("n_leaves=3\nR,1,2,2\n"), Err(DataError::BadLabel(_))));
        assert!(matches!(parse_csv("n_leaves=3\n1,-2,2\n"), Err(DataError::Map { line: 2, .. })));
    }

    #[test]
    fn class_views() {
        let ds = LabeledDataset::from_csv(SAMPLE).unwrap();
        assert_eq!(ds.class_points(Label::Q).len(), 1);
        assert!(ds.require_both_classes().is_ok());
        let only_p = ds.select(&[0]).unwrap();
        assert_eq!(only_p.require_both_classes(), Err(DataError::EmptyClass(Label::Q)));
        assert_eq!(ds.with_swapped_labels().labels(), &[Label::Q, Label::P]);
    }
}
