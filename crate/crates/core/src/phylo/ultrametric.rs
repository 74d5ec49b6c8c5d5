//! Three-point condition and equidistant-tree reconstruction.

use super::{DissimilarityMap, Node, PhyloError, PhyloTree};

/// First triple `i < j < k` whose largest distance is attained only once.
pub fn violating_triple(w: &DissimilarityMap, tol: f64) -> Option<(usize, usize, usize)> {
    let n = w.n_leaves();
    for i in 1..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                let vals = [w.get(i, j), w.get(i, k), w.get(j, k)];
                let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if vals.iter().filter(|&&v| v >= max - tol).count() < 2 {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

/// Whether every triple attains its maximum distance at least twice.
pub fn is_ultrametric(w: &DissimilarityMap, tol: f64) -> bool {
    violating_triple(w, tol).is_none()
}

/// Builds the equidistant tree whose cophenetic map is `w`.
///
/// Clusters are merged by single linkage at height `w_ij / 2`; clusters whose
/// linkage distance is within `tol` of the current minimum merge together,
/// producing a multifurcation.
pub fn ultrametric_to_tree(w: &DissimilarityMap, tol: f64) -> Result<PhyloTree, PhyloError> {
    if let Some((i, j, k)) = violating_triple(w, tol) {
        return Err(PhyloError::NotUltrametric(i, j, k));
    }
    let n = w.n_leaves();
    let mut nodes: Vec<Node> = (1..=n)
        .map(|l| Node {
            parent: None,
            children: Vec::new(),
            length: 0.0,
            leaf: Some(l),
        })
        .collect();
    let mut height = vec![0.0; n];
    // Active clusters: (node id, member leaves).
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|k| (k, vec![k + 1])).collect();
    let linkage = |a: &[usize], b: &[usize]| -> f64 {
        let mut best = f64::INFINITY;
        for &i in a {
            for &j in b {
                best = best.min(w.get(i, j));
            }
        }
        best
    };

    while clusters.len() > 1 {
        let c = clusters.len();
        let mut dist = vec![vec![0.0; c]; c];
        let mut min = f64::INFINITY;
        let mut seed = (0, 1);
        for a in 0..c {
            for b in a + 1..c {
                let d = linkage(&clusters[a].1, &clusters[b].1);
                dist[a][b] = d;
                dist[b][a] = d;
                if d < min {
                    min = d;
                    seed = (a, b);
                }
            }
        }
        // Connected component of the seed pair under "distance <= min + tol".
        let mut group = vec![seed.0];
        let mut in_group = vec![false; c];
        in_group[seed.0] = true;
        let mut cursor = 0;
        while cursor < group.len() {
            let a = group[cursor];
            for b in 0..c {
                if !in_group[b] && dist[a][b] <= min + tol {
                    in_group[b] = true;
                    group.push(b);
                }
            }
            cursor += 1;
        }
        group.sort_unstable();

        let id = nodes.len();
        let h = group
            .iter()
            .map(|&g| height[clusters[g].0])
            .fold(min / 2.0, f64::max);
        let mut members = Vec::new();
        let mut children = Vec::new();
        for &g in &group {
            let (child, ref leaves) = clusters[g];
            nodes[child].parent = Some(id);
            nodes[child].length = h - height[child];
            children.push(child);
            members.extend_from_slice(leaves);
        }
        nodes.push(Node {
            parent: None,
            children,
            length: 0.0,
            leaf: None,
        });
        height.push(h);
        let mut next: Vec<(usize, Vec<usize>)> = clusters
            .into_iter()
            .enumerate()
            .filter(|(k, _)| !in_group[*k])
            .map(|(_, cl)| cl)
            .collect();
        next.push((id, members));
        clusters = next;
    }

    let root = clusters[0].0;
    let labels = (1..=n).map(|k| k.to_string()).collect();
    PhyloTree::from_nodes(nodes, root, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phylo::cophenetic;

    fn map(v: &[f64]) -> DissimilarityMap {
        DissimilarityMap::new(4, v.to_vec()).unwrap()
    }

    #[test]
    fn three_point_examples() {
        assert!(is_ultrametric(&map(&[0.6, 1.8, 2.0, 1.8, 2.0, 2.0]), 1e-9));
        assert!(is_ultrametric(&map(&[0.2, 2.0, 2.0, 2.0, 2.0, 1.0]), 1e-9));
        assert!(is_ultrametric(&map(&[3.0; 6]), 0.0));
        let bad = map(&[0.6, 1.8, 2.0, 1.8, 2.0, 1.7]);
        assert!(!is_ultrametric(&bad, 1e-9));
        assert_eq!(violating_triple(&bad, 1e-9), Some((1, 3, 4)));
    }

    #[test]
    fn reconstructs_figure_tree() {
        let w = map(&[0.6, 1.8, 2.0, 1.8, 2.0, 2.0]);
        let t = ultrametric_to_tree(&w, 1e-9).unwrap();
        assert!(cophenetic(&t).max_abs_diff(&w) < 1e-12);
        assert!(t.is_equidistant(1e-12));
        assert_eq!(t.topology_key(), "(((1,2),3),4)");
    }

    #[test]
    fn equal_entries_give_a_star() {
        let w = map(&[4.0; 6]);
        let t = ultrametric_to_tree(&w, 1e-9).unwrap();
        assert_eq!(t.nodes()[t.root()].children.len(), 4);
        assert!((t.height() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_ultrametric() {
        let w = map(&[0.6, 1.8, 2.0, 1.8, 2.0, 1.7]);
        assert_eq!(
            ultrametric_to_tree(&w, 1e-9).unwrap_err(),
            PhyloError::NotUltrametric(1, 3, 4)
        );
    }
}
