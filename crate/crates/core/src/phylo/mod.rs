//! Rooted phylogenetic trees and their dissimilarity maps.

mod newick;
mod ultrametric;

pub use newick::{parse_newick, parse_newick_with_labels, NewickError, NewickErrorKind};
pub use ultrametric::{is_ultrametric, ultrametric_to_tree, violating_triple};

use std::fmt;

use thiserror::Error;

use crate::tropical::{TropPoint, TropicalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhyloError {
    #[error("a dissimilarity map on {n} leaves needs {expected} values, got {got}")]
    WrongLength { n: usize, expected: usize, got: usize },
    #[error("dissimilarity maps need at least 2 leaves, got {0}")]
    TooFewLeaves(usize),
    #[error("entry {index} is negative or not finite ({value})")]
    InvalidEntry { index: usize, value: f64 },
    #[error("three-point condition fails on leaves ({0}, {1}, {2})")]
    NotUltrametric(usize, usize, usize),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error(transparent)]
    Tropical(#[from] TropicalError),
}

/// Number of leaf pairs, `C(n, 2)`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// 1-based flat position of the leaf pair `(i, j)`, `1 <= i < j <= n`, in the
/// order `(1,2), (1,3), …, (1,n), (2,3), …, (n-1,n)`.
pub fn pair_to_flat(i: usize, j: usize, n: usize) -> usize {
    assert!(1 <= i && i < j && j <= n, "pair ({i}, {j}) out of range for n = {n}");
    (i - 1) * (2 * n - i) / 2 + (j - i)
}

/// Inverse of [`pair_to_flat`].
pub fn flat_to_pair(k: usize, n: usize) -> (usize, usize) {
    assert!(k >= 1 && k <= pair_count(n), "flat index {k} out of range for n = {n}");
    let mut i = 1;
    let mut start = 0;
    loop {
        let row = n - i;
        if k <= start + row {
            return (i, i + (k - start));
        }
        start += row;
        i += 1;
    }
}

/// Pairwise leaf distances of an `n`-leaf tree, flattened in lexicographic
/// pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMap {
    n_leaves: usize,
    values: Vec<f64>,
}

impl DissimilarityMap {
    pub fn new(n_leaves: usize, values: Vec<f64>) -> Result<Self, PhyloError> {
        if n_leaves < 2 {
            return Err(PhyloError::TooFewLeaves(n_leaves));
        }
        let expected = pair_count(n_leaves);
        if values.len() != expected {
            return Err(PhyloError::WrongLength {
                n: n_leaves,
                expected,
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(PhyloError::InvalidEntry {
                index: index + 1,
                value,
            });
        }
        Ok(DissimilarityMap { n_leaves, values })
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Distance between leaves `i` and `j` (1-based, any order).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[pair_to_flat(a, b, self.n_leaves) - 1]
    }

    /// The map as a point of the tropical torus of dimension `C(n, 2)`.
    pub fn to_point(&self) -> Result<TropPoint, PhyloError> {
        Ok(TropPoint::from_slice(&self.values)?)
    }

    /// Largest entrywise difference to another map on the same leaves.
    pub fn max_abs_diff(&self, other: &DissimilarityMap) -> f64 {
        assert_eq!(self.n_leaves, other.n_leaves);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One node of a [`PhyloTree`].
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Length of the edge to the parent (0 for the root).
    pub length: f64,
    /// Leaf number in `1..=n` for leaves.
    pub leaf: Option<usize>,
}

/// Rooted tree with labelled leaves and non-negative branch lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    nodes: Vec<Node>,
    root: usize,
    /// `labels[k]` is the display name of leaf `k + 1`.
    labels: Vec<String>,
}

impl PhyloTree {
    /// Validates the structure: single root, leaves numbered `1..=n` exactly
    /// once, internal nodes with at least two children, lengths `>= 0`.
    pub fn from_nodes(nodes: Vec<Node>, root: usize, labels: Vec<String>) -> Result<Self, PhyloError> {
        let bad = |msg: String| Err(PhyloError::InvalidTree(msg));
        if root >= nodes.len() || nodes[root].parent.is_some() {
            return bad("root index is not a parentless node".into());
        }
        let n = labels.len();
        let mut seen = vec![false; n];
        for (idx, node) in nodes.iter().enumerate() {
            if !(node.length >= 0.0) || !node.length.is_finite() {
                return bad(format!("node {idx} has branch length {}", node.length));
            }
            if idx != root && node.parent.is_none() {
                return bad(format!("node {idx} is detached"));
            }
            match node.leaf {
                Some(l) => {
                    if !node.children.is_empty() {
                        return bad(format!("leaf {l} has children"));
                    }
                    if l == 0 || l > n || seen[l - 1] {
                        return bad(format!("leaf number {l} is out of range or repeated"));
                    }
                    seen[l - 1] = true;
                }
                None => {
                    if node.children.len() < 2 {
                        return bad(format!("internal node {idx} has fewer than two children"));
                    }
                }
            }
            for &c in &node.children {
                if nodes.get(c).and_then(|ch| ch.parent) != Some(idx) {
                    return bad(format!("child link {idx} -> {c} is inconsistent"));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("some leaf numbers are missing".into());
        }
        Ok(PhyloTree { nodes, root, labels })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_leaves(&self) -> usize {
        self.labels.len()
    }

    /// Distance from the root to every node.
    pub fn node_depths(&self) -> Vec<f64> {
        let mut depth = vec![0.0; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            for &c in &self.nodes[v].children {
                depth[c] = depth[v] + self.nodes[c].length;
                stack.push(c);
            }
        }
        depth
    }

    /// Root-to-leaf distance per leaf number (index `k` is leaf `k + 1`).
    pub fn leaf_depths(&self) -> Vec<f64> {
        let depth = self.node_depths();
        let mut out = vec![0.0; self.n_leaves()];
        for (idx, node) in self.nodes.iter().enumerate() {
            if let Some(l) = node.leaf {
                out[l - 1] = depth[idx];
            }
        }
        out
    }

    /// Largest root-to-leaf distance.
    pub fn height(&self) -> f64 {
        self.leaf_depths().into_iter().fold(0.0, f64::max)
    }

    pub fn is_equidistant(&self, tol: f64) -> bool {
        let d = self.leaf_depths();
        let h = self.height();
        d.iter().all(|x| (h - x).abs() <= tol)
    }

    /// Leaf numbers below each node.
    pub fn clades(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for v in self.postorder() {
            let node = &self.nodes[v];
            let mut leaves = match node.leaf {
                Some(l) => vec![l],
                None => Vec::new(),
            };
            for &c in &node.children {
                leaves.extend_from_slice(&out[c]);
            }
            leaves.sort_unstable();
            out[v] = leaves;
        }
        out
    }

    pub fn postorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
            } else {
                stack.push((v, true));
                for &c in self.nodes[v].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    /// Branch-length-free canonical string of the rooted, leaf-labelled
    /// topology; equal strings mean equal topologies.
    pub fn topology_key(&self) -> String {
        fn rec(t: &PhyloTree, v: usize) -> String {
            let node = &t.nodes[v];
            if let Some(l) = node.leaf {
                return l.to_string();
            }
            let mut parts: Vec<(usize, String)> = node
                .children
                .iter()
                .map(|&c| (min_leaf(t, c), rec(t, c)))
                .collect();
            parts.sort();
            let inner: Vec<String> = parts.into_iter().map(|(_, s)| s).collect();
            format!("({})", inner.join(","))
        }
        fn min_leaf(t: &PhyloTree, v: usize) -> usize {
            match t.nodes[v].leaf {
                Some(l) => l,
                None => t.nodes[v].children.iter().map(|&c| min_leaf(t, c)).min().unwrap(),
            }
        }
        rec(self, self.root)
    }

    /// Newick text using the display labels, terminated by `;`.
    pub fn to_newick(&self) -> String {
        fn rec(t: &PhyloTree, v: usize, out: &mut String) {
            let node = &t.nodes[v];
            match node.leaf {
                Some(l) => out.push_str(&t.labels[l - 1]),
                None => {
                    out.push('(');
                    for (k, &c) in node.children.iter().enumerate() {
                        if k > 0 {
                            out.push(',');
                        }
                        rec(t, c, out);
                    }
                    out.push(')');
                }
            }
            if v != t.root {
                out.push(':');
                out.push_str(&node.length.to_string());
            }
        }
        let mut s = String::new();
        rec(self, self.root, &mut s);
        s.push(';');
        s
    }
}

impl fmt::Display for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_newick())
    }
}

/// Path-length distances between all leaf pairs.
pub fn cophenetic(t: &PhyloTree) -> DissimilarityMap {
    let n = t.n_leaves();
    let depth = t.node_depths();
    let clades = t.clades();
    let mut values = vec![0.0; pair_count(n)];
    let mut leaf_depth = vec![0.0; n];
    for (idx, node) in t.nodes.iter().enumerate() {
        if let Some(l) = node.leaf {
            leaf_depth[l - 1] = depth[idx];
        }
    }
    // Leaves in different child clades of v have v as their last common ancestor.
    for (v, node) in t.nodes.iter().enumerate() {
        for (a, &ca) in node.children.iter().enumerate() {
            for &cb in &node.children[a + 1..] {
                for &i in &clades[ca] {
                    for &j in &clades[cb] {
                        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                        values[pair_to_flat(lo, hi, n) - 1] =
                            leaf_depth[i - 1] + leaf_depth[j - 1] - 2.0 * depth[v];
                    }
                }
            }
        }
    }
    DissimilarityMap::new(n, values).expect("cophenetic distances are non-negative")
}
