//! Two-class gene-tree datasets from the multispecies coalescent.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)` with one stream per
//! tree:
//!
//! | tree                              | stream         |
//! |-----------------------------------|----------------|
//! | species tree of class P / Q       | 0 / 1          |
//! | gene tree `k` (0-based) of P / Q  | 2 + 2k / 3 + 2k |
//!
//! so a tree's draws depend only on the seed, its class and its index.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::dataset::{Label, LabeledDataset};
use crate::phylo::{cophenetic, pair_count, pair_to_flat, DissimilarityMap, Node, PhyloTree};

/// Species-depth to population ratios of the reference experiment.
pub const DEFAULT_C_GRID: [f64; 12] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 2.4, 3.6, 4.8, 6.0, 8.0, 10.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_leaves: usize,
    pub population: f64,
    pub ratio_c: f64,
    pub trees_per_class: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_leaves: 5,
            population: 10_000.0,
            ratio_c: 1.0,
            trees_per_class: 100,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Species-tree height, `population * ratio_c`.
    pub fn depth(&self) -> f64 {
        self.population * self.ratio_c
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.n_leaves < 3 {
            return bad("n_leaves must be at least 3");
        }
        if !(self.population > 0.0 && self.population.is_finite()) {
            return bad("population must be positive");
        }
        if !(self.ratio_c > 0.0 && self.ratio_c.is_finite()) {
            return bad("ratio_c must be positive");
        }
        if self.trees_per_class == 0 {
            return bad("trees_per_class must be at least 1");
        }
        Ok(())
    }
}

/// Generator for one tree of a simulation.
pub fn tree_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// Random equidistant binary tree of height `depth`.
///
/// Starting from a split at the root, a uniformly chosen lineage splits after
/// each exponential wait (rate = number of lineages). The tips end one more
/// wait after the last split, leaf numbers are a uniform permutation, and all
/// lengths are scaled to reach `depth`.
pub fn yule_species_tree<R: Rng + ?Sized>(n_leaves: usize, depth: f64, rng: &mut R) -> PhyloTree {
    assert!(n_leaves >= 2, "a species tree needs at least 2 leaves");
    assert!(depth > 0.0 && depth.is_finite(), "depth must be positive");
    let mut nodes = vec![Node {
        parent: None,
        children: Vec::new(),
        length: 0.0,
        leaf: None,
    }];
    let mut split_time = vec![0.0];
    let mut active = vec![0usize];
    let mut t = 0.0;
    while active.len() < n_leaves {
        let k = active.len();
        if k > 1 {
            t += exp(rng, k as f64);
        }
        let v = active.remove(rng.gen_range(0..k));
        split_time[v] = t;
        for _ in 0..2 {
            let c = nodes.len();
            nodes.push(Node {
                parent: Some(v),
                children: Vec::new(),
                length: 0.0,
                leaf: None,
            });
            split_time.push(f64::NAN);
            nodes[v].children.push(c);
            active.push(c);
        }
    }
    let tips = t + exp(rng, n_leaves as f64);
    let scale = depth / tips;

    let mut numbers: Vec<usize> = (1..=n_leaves).collect();
    rand::seq::SliceRandom::shuffle(&mut numbers[..], rng);
    for (&v, &l) in active.iter().zip(&numbers) {
        nodes[v].leaf = Some(l);
    }
    for v in 1..nodes.len() {
        let p = nodes[v].parent.expect("non-root");
        let end = if nodes[v].leaf.is_some() { tips } else { split_time[v] };
        nodes[v].length = (end - split_time[p]) * scale;
    }
    let labels = (1..=n_leaves).map(|k| k.to_string()).collect();
    PhyloTree::from_nodes(nodes, 0, labels).expect("generator builds valid trees")
}

/// Gene-tree cophenetic map with one lineage sampled per species leaf.
///
/// Lineages entering a species branch coalesce at rate `k(k-1)/2 / population`
/// until the top of the branch; above the root they coalesce until one is left.
pub fn coalescent_gene_tree<R: Rng + ?Sized>(species: &PhyloTree, population: f64, rng: &mut R) -> DissimilarityMap {
    assert!(population > 0.0, "population must be positive");
    let n = species.n_leaves();
    let depth = species.node_depths();
    let h = species.height();
    let node_height = |v: usize| (h - depth[v]).max(0.0);
    let mut values = vec![0.0; pair_count(n)];
    let nodes = species.nodes();
    let mut outgoing: Vec<Vec<Vec<usize>>> = vec![Vec::new(); nodes.len()];

    for v in species.postorder() {
        let mut lineages: Vec<Vec<usize>> = match nodes[v].leaf {
            Some(l) => vec![vec![l]],
            None => nodes[v]
                .children
                .iter()
                .flat_map(|&c| std::mem::take(&mut outgoing[c]))
                .collect(),
        };
        let top = nodes[v].parent.map_or(f64::INFINITY, node_height);
        let mut t = node_height(v);
        while lineages.len() > 1 {
            let k = lineages.len();
            t += exp(rng, (k * (k - 1)) as f64 / 2.0 / population);
            if t >= top {
                break;
            }
            let a = rng.gen_range(0..k);
            let mut b = rng.gen_range(0..k - 1);
            if b >= a {
                b += 1;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let right = lineages.remove(hi);
            let mut left = lineages.remove(lo);
            for &i in &left {
                for &j in &right {
                    values[pair_to_flat(i.min(j), i.max(j), n) - 1] = 2.0 * t;
                }
            }
            left.extend(right);
            lineages.push(left);
        }
        outgoing[v] = lineages;
    }
    DissimilarityMap::new(n, values).expect("coalescent distances are finite")
}

/// A simulated dataset with the species trees it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub config: SimConfig,
    /// Species trees of classes P and Q.
    pub species: [PhyloTree; 2],
    pub dataset: LabeledDataset,
}

pub fn generate_dataset(cfg: &SimConfig) -> Result<Simulation, SimError> {
    cfg.validate()?;
    let depth = cfg.depth();
    let species = [0u64, 1].map(|c| yule_species_tree(cfg.n_leaves, depth, &mut tree_rng(cfg.seed, c)));
    let mut maps = Vec::with_capacity(2 * cfg.trees_per_class);
    let mut labels = Vec::with_capacity(2 * cfg.trees_per_class);
    for (c, label) in [(0u64, Label::P), (1, Label::Q)] {
        for k in 0..cfg.trees_per_class as u64 {
            let mut rng = tree_rng(cfg.seed, 2 + 2 * k + c);
            maps.push(coalescent_gene_tree(&species[c as usize], cfg.population, &mut rng));
            labels.push(label);
        }
    }
    let dataset = LabeledDataset::new(maps, labels).expect("simulated classes share a leaf count");
    Ok(Simulation {
        config: cfg.clone(),
        species,
        dataset,
    })
}

impl Simulation {
    /// Key/value sidecar describing how the data was generated.
    pub fn metadata(&self) -> String {
        let c = &self.config;
        format!(
            "format=tropsvm-sim-1\n\
             generator=ChaCha8Rng seed_from_u64(seed), stream per tree\n\
             n_leaves={}\npopulation={}\nratio_c={}\ndepth={}\ntrees_per_class={}\nseed={}\n\
             species_P={}\nspecies_Q={}\n",
            c.n_leaves,
            c.population,
            c.ratio_c,
            c.depth(),
            c.trees_per_class,
            c.seed,
            self.species[0].to_newick(),
            self.species[1].to_newick(),
        )
    }

    pub fn species_map(&self, label: Label) -> DissimilarityMap {
        cophenetic(&self.species[match label {
            Label::P => 0,
            Label::Q => 1,
        }])
    }
}
