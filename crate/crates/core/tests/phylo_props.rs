use std::collections::BTreeSet;

use proptest::prelude::*;
use tropsvm::coalescent::{coalescent_gene_tree, tree_rng, yule_species_tree};
use tropsvm::phylo::{
    cophenetic, flat_to_pair, is_ultrametric, pair_count, pair_to_flat, parse_newick, ultrametric_to_tree,
    DissimilarityMap, Node, PhyloTree,
};

/// Equidistant tree built by merging random groups of clusters at increasing
/// heights. `merges` holds (group size, height step, pick seeds).
fn agglomerative_tree(n: usize, merges: &[(usize, f64, Vec<usize>)]) -> PhyloTree {
    let mut nodes: Vec<Node> = (1..=n)
        .map(|l| Node {
            parent: None,
            children: vec![],
            length: 0.0,
            leaf: Some(l),
        })
        .collect();
    let mut height = vec![0.0; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut h = 0.0;
    let mut step = 0;
    while active.len() > 1 {
        let (size, dh, picks) = &merges[step % merges.len()];
        step += 1;
        h += dh;
        let size = (*size).clamp(2, active.len());
        let mut group = Vec::new();
        for k in 0..size {
            group.push(active.remove(picks[k] % active.len()));
        }
        let id = nodes.len();
        for &c in &group {
            nodes[c].parent = Some(id);
            nodes[c].length = h - height[c];
        }
        nodes.push(Node {
            parent: None,
            children: group,
            length: 0.0,
            leaf: None,
        });
        height.push(h);
        active.push(id);
    }
    PhyloTree::from_nodes(nodes, active[0], (1..=n).map(|k| k.to_string()).collect()).unwrap()
}

fn merge_plan() -> impl Strategy<Value = (usize, Vec<(usize, f64, Vec<usize>)>)> {
    (
        2usize..=9,
        prop::collection::vec((2usize..=3, 0.01f64..5.0, prop::collection::vec(0usize..100, 3)), 1..10),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn equidistant_trees_give_ultrametrics((n, plan) in merge_plan()) {
        let t = agglomerative_tree(n, &plan);
        let w = cophenetic(&t);
        prop_assert!(is_ultrametric(&w, 1e-12));
        let back = ultrametric_to_tree(&w, 1e-9).unwrap();
        prop_assert!(cophenetic(&back).max_abs_diff(&w) <= 1e-9);
        prop_assert!(back.is_equidistant(1e-9));
    }

    #[test]
    fn newick_text_round_trip((n, plan) in merge_plan()) {
        let t = agglomerative_tree(n, &plan);
        let again = parse_newick(&t.to_newick()).unwrap();
        prop_assert_eq!(cophenetic(&again), cophenetic(&t));
        prop_assert_eq!(again.topology_key(), t.topology_key());
    }
}

#[test]
fn flat_index_bijection() {
    for n in 2..=50 {
        let mut k = 0;
        for i in 1..=n {
            for j in i + 1..=n {
                k += 1;
                assert_eq!(pair_to_flat(i, j, n), k);
                assert_eq!(flat_to_pair(k, n), (i, j));
            }
        }
        assert_eq!(k, pair_count(n));
    }
    assert_eq!(flat_to_pair(5, 4), (2, 4));
}

#[test]
fn three_point_condition_examples() {
    let left = DissimilarityMap::new(4, vec![0.6, 1.8, 2.0, 1.8, 2.0, 2.0]).unwrap();
    let right = DissimilarityMap::new(4, vec![0.2, 2.0, 2.0, 2.0, 2.0, 1.0]).unwrap();
    assert!(is_ultrametric(&left, 1e-9));
    assert!(is_ultrametric(&right, 1e-9));
    let t = parse_newick("(((1:0.3,2:0.3):0.6,3:0.9):0.1,4:1.0);").unwrap();
    assert!(cophenetic(&t).max_abs_diff(&left) < 1e-12);
}

/// All rooted binary topologies on leaves `1..=n`, built by attaching leaf
/// `k` to every edge (including above the root) of each tree on `k - 1` leaves.
fn all_binary_topologies(n: usize) -> BTreeSet<String> {
    #[derive(Clone)]
    enum T {
        Leaf(usize),
        Pair(Box<T>, Box<T>),
    }
    fn attach(t: &T, k: usize) -> Vec<T> {
        let mut out = vec![T::Pair(Box::new(t.clone()), Box::new(T::Leaf(k)))];
        if let T::Pair(a, b) = t {
            for a2 in attach(a, k) {
                out.push(T::Pair(Box::new(a2), b.clone()));
            }
            for b2 in attach(b, k) {
                out.push(T::Pair(a.clone(), Box::new(b2)));
            }
        }
        out
    }
    fn key(t: &T) -> (usize, String) {
        match t {
            T::Leaf(l) => (*l, l.to_string()),
            T::Pair(a, b) => {
                let (mut x, mut y) = (key(a), key(b));
                if y < x {
                    std::mem::swap(&mut x, &mut y);
                }
                (x.0, format!("({},{})", x.1, y.1))
            }
        }
    }
    let mut trees = vec![T::Leaf(1)];
    for k in 2..=n {
        trees = trees.iter().flat_map(|t| attach(t, k)).collect();
    }
    trees.iter().map(|t| key(t).1).collect()
}

#[test]
fn four_leaf_topologies_number_fifteen() {
    let all = all_binary_topologies(4);
    assert_eq!(all.len(), 15);
    assert_eq!(all_binary_topologies(5).len(), 105);
    let mut rng = tree_rng(2024, 0);
    let seen: BTreeSet<String> = (0..3000)
        .map(|_| yule_species_tree(4, 1.0, &mut rng).topology_key())
        .collect();
    assert_eq!(seen, all);
}

#[test]
fn three_leaf_topologies_are_uniform() {
    let mut rng = tree_rng(99, 0);
    let draws = 10_000;
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..draws {
        *counts
            .entry(yule_species_tree(3, 2.0, &mut rng).topology_key())
            .or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 3);
    let chi2: f64 = counts
        .values()
        .map(|&c| {
            let e = draws as f64 / 3.0;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 99.9% quantile of chi-square with 2 degrees of freedom.
    assert!(chi2 < 13.8, "chi2 = {chi2}, counts {counts:?}");
    for &c in counts.values() {
        assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() <= 0.05);
    }
}

#[test]
fn pair_coalescence_time_matches_population() {
    let pop = 250.0;
    let depth = 10.0 * pop;
    let t = parse_newick(&format!("(1:{depth},2:{depth});")).unwrap();
    let draws = 10_000;
    let mut rng = tree_rng(17, 0);
    let mean: f64 = (0..draws)
        .map(|_| coalescent_gene_tree(&t, pop, &mut rng).values()[0] / 2.0 - depth)
        .sum::<f64>()
        / draws as f64;
    assert!((mean - pop).abs() <= 0.1 * pop, "mean wait {mean}");
}

#[test]
fn concordance_grows_with_depth_ratio() {
    let pop = 1000.0;
    let fraction = |ratio: f64| {
        let mut rng = tree_rng(5, 0);
        let species = yule_species_tree(5, pop * ratio, &mut rng);
        let key = species.topology_key();
        (0..500)
            .filter(|_| {
                let g = coalescent_gene_tree(&species, pop, &mut rng);
                ultrametric_to_tree(&g, 1e-9).unwrap().topology_key() == key
            })
            .count() as f64
            / 500.0
    };
    let shallow = fraction(0.2);
    let deep = fraction(10.0);
    assert!(deep > shallow, "C=10: {deep}, C=0.2: {shallow}");
}
