//! Structural properties of the soft-margin programs.

use proptest::prelude::*;
use rand::Rng;
use tropsvm::coalescent::tree_rng;
use tropsvm::hard::{hard_feasible_and_margin, Case, IndexAssignment};
use tropsvm::lp::solve;
use tropsvm::soft::{
    build_soft_lp_general, solve_soft, solve_soft_full, solve_soft_general, verify_gamma_vanishing,
    zero_margin_witness, SoftConfig, SoftOutcome,
};
use tropsvm::synth::{planted_classes, random_assignment, random_omega, uniform_points, PlantSpec};
use tropsvm::tropical::{sector_membership, TropPoint};

const CASES: [Case; 5] = [Case::Case1, Case::Case2a, Case::Case2b, Case::Case3, Case::Case4];

fn instance(seed: u64, case: Case, dim: usize, n: usize) -> (Vec<TropPoint>, Vec<TropPoint>, IndexAssignment) {
    let mut rng = tree_rng(seed, 0);
    let a = random_assignment(&mut rng, dim, case);
    let (p, q) = if rng.gen_bool(0.5) {
        let spec = PlantSpec {
            dim,
            n_per_class: n,
            min_gap: 0.0,
            max_gap: 1.0,
            noise: 1.5,
        };
        let w = random_omega(&mut rng, dim);
        planted_classes(&mut rng, &w, &a, &spec)
    } else {
        (uniform_points(&mut rng, dim, n, 10.0), uniform_points(&mut rng, dim, n, 10.0))
    };
    (p, q, a)
}

/// Per-point index pairs with `i(p) != i(q)` for every p, q.
fn random_maps(seed: u64, dim: usize, n_p: usize, n_q: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut rng = tree_rng(seed, 1);
    let split = rng.gen_range(1..dim);
    let pick = |rng: &mut rand_chacha::ChaCha8Rng, lo: usize, hi: usize| {
        let i = rng.gen_range(lo..=hi);
        let mut j = rng.gen_range(1..dim);
        if j >= i {
            j += 1;
        }
        (i, j)
    };
    let mp = (0..n_p).map(|_| pick(&mut rng, 1, split)).collect();
    let mq = (0..n_q).map(|_| pick(&mut rng, split + 1, dim)).collect();
    (mp, mq)
}

fn dims() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (
        any::<u64>(),
        0usize..5,
        prop::sample::select(vec![4usize, 6, 10]),
        prop::sample::select(vec![1usize, 3, 10]),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn general_program_always_feasible_and_bounded((seed, _c, dim, n) in dims()) {
        let mut rng = tree_rng(seed, 0);
        let p = uniform_points(&mut rng, dim, n, 10.0);
        let q = uniform_points(&mut rng, dim, n + 1, 10.0);
        let (mp, mq) = random_maps(seed, dim, p.len(), q.len());
        let (lp, layout) = build_soft_lp_general(&p, &q, &mp, &mq, 1.0).unwrap();
        let tagged: Vec<(&TropPoint, (usize, usize))> =
            p.iter().zip(mp.iter().copied()).chain(q.iter().zip(mq.iter().copied())).collect();
        let witness = zero_margin_witness(&tagged, &layout, lp.num_vars());
        prop_assert!(lp.max_violation(&witness) <= 1e-12);
        let out = solve(&lp, 1e-9).unwrap();
        prop_assert!(out.is_optimal(), "verdict {:?}", out.verdict);
    }

    #[test]
    fn extraneous_slacks_vanish_and_reduced_program_agrees((seed, c, dim, n) in dims()) {
        let (p, q, a) = instance(seed, CASES[c], dim, n);
        let cfg = SoftConfig::new(a);
        let full = solve_soft_full(&p, &q, &cfg).unwrap();
        let full = full.optimal().expect("bounded");
        prop_assert!(verify_gamma_vanishing(&cfg, full, 1e-7));
        let reduced = solve_soft(&p, &q, &cfg).unwrap();
        let reduced = reduced.optimal().expect("bounded");
        prop_assert!((full.objective - reduced.objective).abs() <= 1e-6,
            "full {} vs reduced {}", full.objective, reduced.objective);
        prop_assert!(full.alpha.iter().chain(&full.beta).all(|&s| s >= 0.0));
        prop_assert!(full.z >= 0.0);
    }

    #[test]
    fn separable_data_has_no_hinge_loss((seed, c, dim, n) in dims()) {
        let mut rng = tree_rng(seed, 0);
        let a = random_assignment(&mut rng, dim, CASES[c]);
        let spec = PlantSpec { dim, n_per_class: n, min_gap: 0.2, max_gap: 2.0, noise: 0.0 };
        let w = random_omega(&mut rng, dim);
        let (p, q) = planted_classes(&mut rng, &w, &a, &spec);
        let hard = hard_feasible_and_margin(&p, &q, &a).unwrap().margin.unwrap();
        let soft = solve_soft(&p, &q, &SoftConfig::new(a)).unwrap();
        let soft = soft.optimal().unwrap();
        // At C = 1 the soft optimum can only exceed the hard margin by
        // trading slack one-for-one, which never pays off.
        prop_assert!(soft.objective >= hard - 1e-7);
        if soft.hinge_loss <= 1e-9 {
            prop_assert!((soft.z - hard).abs() <= 1e-6);
        }
    }

    #[test]
    fn hinge_loss_non_increasing_in_tradeoff((seed, c, dim, n) in dims()) {
        let (p, q, a) = instance(seed, CASES[c], dim, n);
        let mut last = f64::INFINITY;
        for t in [1.0, 2.0, 4.0, 8.0] {
            let r = solve_soft(&p, &q, &SoftConfig::new(a).with_tradeoff(t)).unwrap();
            let h = r.optimal().unwrap().hinge_loss;
            prop_assert!(h <= last + 1e-7, "hinge {} after {} at C={}", h, last, t);
            last = h;
        }
    }

    #[test]
    fn objective_respects_pairwise_bounds((seed, _c, dim, n) in dims()) {
        // j_P = j_Q: bound p_iP - p_j + q_j - q_iP for every p, q.
        let (p, q, a) = instance(seed, Case::Case4, dim, n);
        let obj = solve_soft(&p, &q, &SoftConfig::new(a)).unwrap().optimal().unwrap().objective;
        for x in &p {
            for y in &q {
                let bound = x.get(a.i_p) - x.get(a.j_p) + y.get(a.j_p) - y.get(a.i_p);
                prop_assert!(obj <= bound + 1e-7);
            }
        }
        // All four indices distinct: bound q_jQ - q_iP + p_iP - p_jQ.
        let (p, q, a) = instance(seed, Case::Case1, dim, n);
        let obj = solve_soft(&p, &q, &SoftConfig::new(a)).unwrap().optimal().unwrap().objective;
        for x in &p {
            for y in &q {
                let bound = y.get(a.j_q) - y.get(a.i_p) + x.get(a.i_p) - x.get(a.j_q);
                prop_assert!(obj <= bound + 1e-7);
            }
        }
    }
}

/// Points whose `ω* + ξ` peaks outside the class's two indices must pay a
/// positive runner-up slack on an index of the assignment.
#[test]
fn optimal_points_leave_their_sectors_only_through_slack() {
    let mut escaped = 0;
    for seed in 0..200u64 {
        let (p, q, a) = instance(seed, CASES[(seed % 5) as usize], 6, 3);
        let cfg = SoftConfig::new(a);
        let r = solve_soft_full(&p, &q, &cfg).unwrap();
        let r = r.optimal().unwrap();
        for (k, x) in p.iter().chain(&q).enumerate() {
            let (i, j) = a.pair(k < p.len());
            let top = sector_membership(x, &r.omega, 1e-7).unwrap();
            if top.contains(i) || top.contains(j) {
                continue;
            }
            escaped += 1;
            let paid: Vec<usize> = r.gamma[k].iter().filter(|(_, g)| *g > 1e-9).map(|(l, _)| *l).collect();
            assert!(top.indices().iter().all(|l| paid.contains(l)), "seed {seed}: top {top} paid {paid:?}");
            assert!(paid.iter().all(|l| a.indices().contains(l)));
        }
    }
    println!("{escaped} points outside the closed sectors of their class indices");
}

#[test]
fn planted_extraneous_slack_is_detected() {
    let p: Vec<TropPoint> = [[4.0, 10.0, 20.0, 10.0, 20.0, 20.0], [8.0, 16.0, 20.0, 16.0, 20.0, 20.0]]
        .iter()
        .map(|r| TropPoint::from_slice(r).unwrap())
        .collect();
    let q: Vec<TropPoint> = [[2.0, 20.0, 20.0, 20.0, 20.0, 10.0], [6.0, 20.0, 20.0, 20.0, 20.0, 18.0]]
        .iter()
        .map(|r| TropPoint::from_slice(r).unwrap())
        .collect();
    let a = IndexAssignment::new(5, 6, 4, 2).unwrap();
    let cfg = SoftConfig::new(a);
    let mp = vec![(5, 6); 2];
    let mq = vec![(4, 2); 2];
    let (lp, layout) = build_soft_lp_general(&p, &q, &mp, &mq, 1.0).unwrap();
    let best = solve_soft_full(&p, &q, &cfg).unwrap();
    let best = best.optimal().unwrap().clone();
    assert!(verify_gamma_vanishing(&cfg, &best, 1e-7));

    // Raise ω_1 and pay for it with γ_{ξ,1} on every point.
    let delta = 0.75;
    let mut x = best.x.clone();
    x[layout.omega[0]] += delta;
    for gs in &layout.gamma {
        for &(l, c) in gs {
            if l == 1 {
                x[c] += delta;
            }
        }
    }
    assert!(lp.max_violation(&x) <= 1e-9);
    assert!(lp.objective_value(&x) < best.objective - 1e-9);
    let mut planted = best.clone();
    for (k, gs) in layout.gamma.iter().enumerate() {
        for (m, &(l, c)) in gs.iter().enumerate() {
            planted.gamma[k][m] = (l, x[c]);
        }
    }
    assert!(!verify_gamma_vanishing(&cfg, &planted, 1e-7));
}

#[test]
fn single_class_program_is_unbounded() {
    let p = vec![TropPoint::from_slice(&[5.0, 5.0, 4.0, 3.0, 2.0, 1.0]).unwrap()];
    let (lp, _) = tropsvm::soft::build_soft_lp_unchecked(&p, &[(1, 2)], 1.0);
    assert!(solve(&lp, 1e-9).unwrap().is_unbounded());
}

#[test]
fn small_tradeoff_threshold_exists() {
    let mut rng = tree_rng(8, 0);
    let a = IndexAssignment::new(1, 2, 3, 4).unwrap();
    let p = uniform_points(&mut rng, 5, 4, 10.0);
    let q = uniform_points(&mut rng, 5, 4, 10.0);
    let (mp, mq) = (vec![(1, 2); 4], vec![(3, 4); 4]);
    let bounded = |t: f64| match solve_soft_general(&p, &q, &mp, &mq, t, 1e-9).unwrap() {
        SoftOutcome::Optimal(_) => true,
        SoftOutcome::Unbounded => false,
    };
    assert!(bounded(1.0));
    assert!(!bounded(0.01));
    let (mut lo, mut hi) = (0.01, 1.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if bounded(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Below the threshold everything is unbounded, above it everything is bounded.
    for t in [lo * 0.5, lo * 0.9] {
        assert!(!bounded(t));
    }
    for t in [hi * 1.1, hi * 2.0] {
        assert!(bounded(t));
    }
    println!("unbounded below trade-off {hi:.6}");
    let _ = a;
}
