//! Synthetic two-class point sets with a planted hyperplane.

use rand::Rng;

use crate::hard::{Case, IndexAssignment};
use crate::tropical::{TropHyperplane, TropPoint};

/// Shape of a planted instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSpec {
    pub dim: usize,
    pub n_per_class: usize,
    /// Smallest gap between the top two entries of `ω + ξ`.
    pub min_gap: f64,
    /// Largest such gap.
    pub max_gap: f64,
    /// Half-width of uniform noise added to every coordinate afterwards.
    pub noise: f64,
}

/// Random assignment of the requested case in dimension `dim`.
///
/// Needs `dim >= 4` for [`Case::Case1`] and `dim >= 3` for the others.
pub fn random_assignment<R: Rng + ?Sized>(rng: &mut R, dim: usize, case: Case) -> IndexAssignment {
    let mut idx: Vec<usize> = (1..=dim).collect();
    rand::seq::SliceRandom::shuffle(&mut idx[..], rng);
    let (a, b, c, e) = (idx[0], idx[1], idx[2], idx.get(3).copied().unwrap_or(0));
    let (i_p, j_p, i_q, j_q) = match case {
        Case::Case1 => (a, b, c, e),
        Case::Case2a => (a, b, c, a),
        Case::Case2b => (a, b, b, c),
        Case::Case3 => (a, b, b, a),
        Case::Case4 => (a, b, c, b),
    };
    let out = IndexAssignment::new(i_p, j_p, i_q, j_q).expect("distinct indices");
    debug_assert_eq!(out.case(), case);
    out
}

/// Random normal vector with entries in `[-5, 5]`.
pub fn random_omega<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> TropHyperplane {
    TropHyperplane::new((0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).expect("finite")
}

/// A point whose `ω + ξ` peaks at `i` with runner-up `j`.
pub fn planted_point<R: Rng + ?Sized>(
    rng: &mut R,
    omega: &TropHyperplane,
    i: usize,
    j: usize,
    spec: &PlantSpec,
) -> TropPoint {
    let dim = omega.dim();
    let top = rng.gen_range(0.0..10.0);
    let gap = if spec.max_gap > spec.min_gap {
        rng.gen_range(spec.min_gap..spec.max_gap)
    } else {
        spec.min_gap
    };
    let second = top - gap;
    let raw = (1..=dim)
        .map(|l| {
            let y = if l == i {
                top
            } else if l == j {
                second
            } else {
                second - rng.gen_range(0.0..5.0)
            };
            let jitter = if spec.noise > 0.0 {
                rng.gen_range(-spec.noise..spec.noise)
            } else {
                0.0
            };
            y - omega.omega()[l - 1] + jitter
        })
        .collect();
    TropPoint::new(raw).expect("finite")
}

/// Classes planted around `omega`: P points use `(i_P, j_P)` and Q points
/// `(i_Q, j_Q)`.
pub fn planted_classes<R: Rng + ?Sized>(
    rng: &mut R,
    omega: &TropHyperplane,
    a: &IndexAssignment,
    spec: &PlantSpec,
) -> (Vec<TropPoint>, Vec<TropPoint>) {
    let p = (0..spec.n_per_class)
        .map(|_| planted_point(rng, omega, a.i_p, a.j_p, spec))
        .collect();
    let q = (0..spec.n_per_class)
        .map(|_| planted_point(rng, omega, a.i_q, a.j_q, spec))
        .collect();
    (p, q)
}

/// Points with independent uniform coordinates in `[0, scale)`.
pub fn uniform_points<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize, scale: f64) -> Vec<TropPoint> {
    (0..n)
        .map(|_| TropPoint::new((0..dim).map(|_| rng.gen_range(0.0..scale)).collect()).expect("finite"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalescent::tree_rng;
    use crate::tropical::{dist_to_hyperplane, sector_membership};

    #[test]
    fn planted_points_sit_in_their_sector() {
        let mut rng = tree_rng(1, 0);
        let spec = PlantSpec {
            dim: 6,
            n_per_class: 5,
            min_gap: 0.5,
            max_gap: 2.0,
            noise: 0.0,
        };
        for case in [Case::Case1, Case::Case2a, Case::Case2b, Case::Case3, Case::Case4] {
            let a = random_assignment(&mut rng, 6, case);
            assert_eq!(a.case(), case);
            let w = random_omega(&mut rng, 6);
            let (p, q) = planted_classes(&mut rng, &w, &a, &spec);
            for x in &p {
                assert_eq!(sector_membership(x, &w, 1e-9).unwrap().first(), Some(a.i_p));
                assert!(dist_to_hyperplane(x, &w).unwrap() >= 0.5 - 1e-9);
            }
            for x in &q {
                assert_eq!(sector_membership(x, &w, 1e-9).unwrap().first(), Some(a.i_q));
            }
        }
    }
}
