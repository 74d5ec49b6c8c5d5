//! Soft-margin tropical SVM.
//!
//! Every hard-margin row gets a non-negative slack: `α_ξ` on the margin row,
//! `β_ξ` on the sector row and `γ_{ξ,l}` on each runner-up row. The program
//! maximizes `z - 𝒞·Σ(α + β + Σγ)` with `z >= 0` and `ω` free.
//!
//! With one index pair per class the optimal `γ_{ξ,l}` vanish for every `l`
//! outside the assignment's indices, so the per-case programs keep only the
//! slacks on indices of the assignment.

use log::warn;
use thiserror::Error;

use crate::hard::{check_classes, validate_maps, Case, HardError, IndexAssignment};
use crate::lp::{solve, LinearProgram, LpError, Verdict, VarBound};
use crate::tropical::{TropHyperplane, TropPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SoftError {
    #[error(transparent)]
    Input(#[from] HardError),
    #[error("trade-off must be positive and finite, got {0}")]
    BadTradeoff(f64),
    #[error(transparent)]
    Solver(#[from] LpError),
    #[error("soft-margin program reported infeasible, which cannot happen for valid input")]
    UnexpectedInfeasible,
    #[error("soft-margin program unbounded with trade-off {0} >= 1 and both classes non-empty")]
    UnexpectedUnbounded(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftConfig {
    /// Weight `𝒞` of the hinge loss.
    pub tradeoff: f64,
    pub assignment: IndexAssignment,
    /// Feasibility tolerance handed to the solver.
    pub tol: f64,
}

impl SoftConfig {
    pub fn new(assignment: IndexAssignment) -> Self {
        Self {
            tradeoff: 1.0,
            assignment,
            tol: 1e-9,
        }
    }

    pub fn with_tradeoff(mut self, tradeoff: f64) -> Self {
        self.tradeoff = tradeoff;
        self
    }

    fn check(&self) -> Result<(), SoftError> {
        if !(self.tradeoff > 0.0 && self.tradeoff.is_finite()) {
            return Err(SoftError::BadTradeoff(self.tradeoff));
        }
        Ok(())
    }

    /// A trade-off below 1 does not guarantee a bounded optimum.
    pub fn warning(&self) -> Option<String> {
        (self.tradeoff < 1.0).then(|| {
            format!(
                "trade-off {} is below 1; the soft-margin objective may be unbounded",
                self.tradeoff
            )
        })
    }
}

/// Column layout of a soft-margin program.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLayout {
    pub z: usize,
    /// `omega[k]` is the column of `ω_{k+1}`.
    pub omega: Vec<usize>,
    /// Per point, P first then Q.
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    /// Per point, `(l, column)` for each runner-up row that has a slack.
    pub gamma: Vec<Vec<(usize, usize)>>,
}

/// Builds the program for points with their own `(i, j)` pairs.
/// `slack_on(l)` decides which runner-up rows receive a `γ`.
fn build(
    points: &[(&TropPoint, (usize, usize), String)],
    dim: usize,
    tradeoff: f64,
    slack_on: impl Fn(usize) -> bool,
) -> (LinearProgram, SoftLayout) {
    let mut lp = LinearProgram::new();
    let z = lp.add_var("z", VarBound::NonNegative, 1.0);
    let omega: Vec<usize> = (1..=dim).map(|k| lp.add_var(format!("w{k}"), VarBound::Free, 0.0)).collect();
    let mut layout = SoftLayout {
        z,
        omega: omega.clone(),
        alpha: Vec::new(),
        beta: Vec::new(),
        gamma: Vec::new(),
    };
    for (x, (i, j), tag) in points {
        let (i, j) = (*i, *j);
        let (wi, wj) = (omega[i - 1], omega[j - 1]);
        let (xi, xj) = (x.get(i), x.get(j));
        let a = lp.add_var(format!("a_{tag}"), VarBound::NonNegative, -tradeoff);
        let b = lp.add_var(format!("b_{tag}"), VarBound::NonNegative, -tradeoff);
        lp.add_row(format!("margin_{tag}"), &[(z, 1.0), (wj, 1.0), (wi, -1.0), (a, -1.0)], xi - xj);
        lp.add_row(format!("sector_{tag}"), &[(wj, 1.0), (wi, -1.0), (b, -1.0)], xi - xj);
        let mut gammas = Vec::new();
        for l in (1..=dim).filter(|&l| l != i && l != j) {
            let rhs = xj - x.get(l);
            let name = format!("second_{tag}_{l}");
            if slack_on(l) {
                let g = lp.add_var(format!("g_{tag}_{l}"), VarBound::NonNegative, -tradeoff);
                lp.add_row(name, &[(omega[l - 1], 1.0), (wj, -1.0), (g, -1.0)], rhs);
                gammas.push((l, g));
            } else {
                lp.add_row(name, &[(omega[l - 1], 1.0), (wj, -1.0)], rhs);
            }
        }
        layout.alpha.push(a);
        layout.beta.push(b);
        layout.gamma.push(gammas);
    }
    (lp, layout)
}

fn tagged<'a>(
    p: &'a [TropPoint],
    q: &'a [TropPoint],
    maps_p: &[(usize, usize)],
    maps_q: &[(usize, usize)],
) -> Vec<(&'a TropPoint, (usize, usize), String)> {
    let mut out = Vec::with_capacity(p.len() + q.len());
    for (k, (x, m)) in p.iter().zip(maps_p).enumerate() {
        out.push((x, *m, format!("P{}", k + 1)));
    }
    for (k, (x, m)) in q.iter().zip(maps_q).enumerate() {
        out.push((x, *m, format!("Q{}", k + 1)));
    }
    out
}

/// The full slack program for per-point index pairs.
pub fn build_soft_lp_general(
    p: &[TropPoint],
    q: &[TropPoint],
    maps_p: &[(usize, usize)],
    maps_q: &[(usize, usize)],
    tradeoff: f64,
) -> Result<(LinearProgram, SoftLayout), SoftError> {
    let dim = check_classes(p, q)?;
    validate_maps(dim, p.len(), q.len(), maps_p, maps_q)?;
    Ok(build(&tagged(p, q, maps_p, maps_q), dim, tradeoff, |_| true))
}

/// The full slack program without the non-empty-class check. Only useful
/// for exhibiting single-class behaviour.
#[doc(hidden)]
pub fn build_soft_lp_unchecked(
    points: &[TropPoint],
    maps: &[(usize, usize)],
    tradeoff: f64,
) -> (LinearProgram, SoftLayout) {
    let dim = points[0].dim();
    build(&tagged(points, &[], maps, &[]), dim, tradeoff, |_| true)
}

fn constant_maps(p: &[TropPoint], q: &[TropPoint], a: &IndexAssignment) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    (vec![(a.i_p, a.j_p); p.len()], vec![(a.i_q, a.j_q); q.len()])
}

/// The reduced program for a constant assignment: runner-up slacks exist only
/// for indices of the assignment. `𝒞 = 1` reproduces the four published
/// case programs (case 2b mirrors 2a with the classes swapped).
pub fn build_soft_lp_case(
    p: &[TropPoint],
    q: &[TropPoint],
    cfg: &SoftConfig,
) -> Result<(LinearProgram, SoftLayout), SoftError> {
    cfg.check()?;
    let dim = check_classes(p, q)?;
    let a = cfg.assignment;
    a.check_dim(dim)?;
    let (mp, mq) = constant_maps(p, q, &a);
    let keep = a.indices();
    Ok(build(&tagged(p, q, &mp, &mq), dim, cfg.tradeoff, |l| keep.contains(&l)))
}

/// Number of `γ` columns in the reduced program of a case.
pub fn case_gamma_count(case: Case, n_p: usize, n_q: usize) -> usize {
    match case {
        Case::Case1 => 2 * (n_p + n_q),
        Case::Case2a | Case::Case2b | Case::Case4 => n_p + n_q,
        Case::Case3 => 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftMarginResult {
    pub objective: f64,
    pub z: f64,
    pub omega: TropHyperplane,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Per point, `(l, γ_{ξ,l})` for the slacked runner-up rows.
    pub gamma: Vec<Vec<(usize, f64)>>,
    pub hinge_loss: f64,
    /// Primal solution in the program's column order.
    pub x: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SoftOutcome {
    Optimal(SoftMarginResult),
    /// Only reachable with `𝒞 < 1`.
    Unbounded,
}

impl SoftOutcome {
    pub fn optimal(&self) -> Option<&SoftMarginResult> {
        match self {
            SoftOutcome::Optimal(r) => Some(r),
            SoftOutcome::Unbounded => None,
        }
    }
}

fn run(lp: &LinearProgram, layout: &SoftLayout, tradeoff: f64, tol: f64) -> Result<SoftOutcome, SoftError> {
    let out = solve(lp, tol)?;
    match out.verdict {
        Verdict::Infeasible => Err(SoftError::UnexpectedInfeasible),
        Verdict::Unbounded { .. } if tradeoff >= 1.0 => Err(SoftError::UnexpectedUnbounded(tradeoff)),
        Verdict::Unbounded { .. } => Ok(SoftOutcome::Unbounded),
        Verdict::Optimal { x, value, .. } => {
            let pos = |c: usize| x[c].max(0.0);
            let alpha: Vec<f64> = layout.alpha.iter().map(|&c| pos(c)).collect();
            let beta: Vec<f64> = layout.beta.iter().map(|&c| pos(c)).collect();
            let gamma: Vec<Vec<(usize, f64)>> = layout
                .gamma
                .iter()
                .map(|gs| gs.iter().map(|&(l, c)| (l, pos(c))).collect())
                .collect();
            let hinge_loss = alpha.iter().sum::<f64>()
                + beta.iter().sum::<f64>()
                + gamma.iter().flatten().map(|(_, g)| g).sum::<f64>();
            let omega = TropHyperplane::new(layout.omega.iter().map(|&c| x[c]).collect()).expect("finite solution");
            Ok(SoftOutcome::Optimal(SoftMarginResult {
                objective: value,
                z: pos(layout.z),
                omega,
                alpha,
                beta,
                gamma,
                hinge_loss,
                x,
                iterations: out.iterations,
            }))
        }
    }
}

/// Solves the reduced program of a constant assignment.
pub fn solve_soft(p: &[TropPoint], q: &[TropPoint], cfg: &SoftConfig) -> Result<SoftOutcome, SoftError> {
    if let Some(w) = cfg.warning() {
        warn!("{w}");
    }
    let (lp, layout) = build_soft_lp_case(p, q, cfg)?;
    run(&lp, &layout, cfg.tradeoff, cfg.tol)
}

/// Solves the full program for per-point index pairs.
pub fn solve_soft_general(
    p: &[TropPoint],
    q: &[TropPoint],
    maps_p: &[(usize, usize)],
    maps_q: &[(usize, usize)],
    tradeoff: f64,
    tol: f64,
) -> Result<SoftOutcome, SoftError> {
    if !(tradeoff > 0.0 && tradeoff.is_finite()) {
        return Err(SoftError::BadTradeoff(tradeoff));
    }
    let (lp, layout) = build_soft_lp_general(p, q, maps_p, maps_q, tradeoff)?;
    run(&lp, &layout, tradeoff, tol)
}

/// Solves the full program with the constant maps of `cfg.assignment`.
pub fn solve_soft_full(p: &[TropPoint], q: &[TropPoint], cfg: &SoftConfig) -> Result<SoftOutcome, SoftError> {
    let (mp, mq) = constant_maps(p, q, &cfg.assignment);
    solve_soft_general(p, q, &mp, &mq, cfg.tradeoff, cfg.tol)
}

/// Whether every `γ` on an index outside the assignment is at most `tol`.
pub fn verify_gamma_vanishing(cfg: &SoftConfig, result: &SoftMarginResult, tol: f64) -> bool {
    let keep = cfg.assignment.indices();
    result
        .gamma
        .iter()
        .flatten()
        .all(|&(l, g)| keep.contains(&l) || g <= tol)
}

/// The always-feasible point `z = 0`, `ω = 0` with every slack equal to the
/// violation of its row, in the column order of `layout`.
pub fn zero_margin_witness(
    points: &[(&TropPoint, (usize, usize))],
    layout: &SoftLayout,
    n_cols: usize,
) -> Vec<f64> {
    let mut x = vec![0.0; n_cols];
    for (k, (pt, (i, j))) in points.iter().enumerate() {
        let (xi, xj) = (pt.get(*i), pt.get(*j));
        x[layout.alpha[k]] = (xj - xi).max(0.0);
        x[layout.beta[k]] = (xj - xi).max(0.0);
        for &(l, c) in &layout.gamma[k] {
            x[c] = (pt.get(l) - xj).max(0.0);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hard::solve_hard;

    fn pts(rows: &[&[f64]]) -> Vec<TropPoint> {
        rows.iter().map(|r| TropPoint::from_slice(r).unwrap()).collect()
    }

    fn example() -> (Vec<TropPoint>, Vec<TropPoint>, IndexAssignment) {
        let p = pts(&[&[4.0, 10.0, 20.0, 10.0, 20.0, 20.0], &[8.0, 16.0, 20.0, 16.0, 20.0, 20.0]]);
        let q = pts(&[&[2.0, 20.0, 20.0, 20.0, 20.0, 10.0], &[6.0, 20.0, 20.0, 20.0, 20.0, 18.0]]);
        (p, q, IndexAssignment::new(5, 6, 4, 2).unwrap())
    }

    fn nonneg_count(lp: &LinearProgram) -> usize {
        lp.bounds().iter().filter(|b| **b == VarBound::NonNegative).count()
    }

    #[test]
    fn example_soft_equals_hard() {
        let (p, q, a) = example();
        let cfg = SoftConfig::new(a);
        let (lp, _) = build_soft_lp_case(&p, &q, &cfg).unwrap();
        // z, 2n α, 2n β and 4n γ with n = 2.
        assert_eq!(nonneg_count(&lp), 8 * 2 + 1);
        let r = solve_soft(&p, &q, &cfg).unwrap();
        let r = r.optimal().unwrap();
        assert!((r.objective - 2.0).abs() < 1e-9);
        assert!((r.z - 2.0).abs() < 1e-9);
        assert!(r.hinge_loss < 1e-9);
        assert_eq!(solve_hard(&p, &q, &a).unwrap().margin, Some(2.0));
    }

    #[test]
    fn case_program_sizes() {
        let p = pts(&[&[0.0, 1.0, 0.0]]);
        let q = pts(&[&[0.0, 0.0, 1.0]]);
        let cfg = SoftConfig::new(IndexAssignment::new(2, 3, 3, 2).unwrap());
        let (lp, layout) = build_soft_lp_case(&p, &q, &cfg).unwrap();
        assert_eq!(nonneg_count(&lp), 4 + 1);
        assert_eq!(lp.num_vars(), 4 + 1 + 3);
        assert!(layout.gamma.iter().all(|g| g.is_empty()));
        for (a, case) in [
            ((1, 2, 3, 1), Case::Case2a),
            ((1, 2, 2, 3), Case::Case2b),
            ((1, 3, 2, 3), Case::Case4),
        ] {
            let x = pts(&[&[0.0, 1.0, 2.0, 3.0], &[1.0, 0.0, 2.0, 1.0]]);
            let cfg = SoftConfig::new(IndexAssignment::new(a.0, a.1, a.2, a.3).unwrap());
            let (lp, _) = build_soft_lp_case(&x, &x, &cfg).unwrap();
            assert_eq!(nonneg_count(&lp), 6 * 2 + 1, "{case}");
            assert_eq!(case_gamma_count(case, 2, 2), 4);
        }
    }

    #[test]
    fn general_program_size() {
        let (p, q, a) = example();
        let maps_p = vec![(a.i_p, a.j_p); 2];
        let maps_q = vec![(a.i_q, a.j_q); 2];
        let (lp, _) = build_soft_lp_general(&p, &q, &maps_p, &maps_q, 1.0).unwrap();
        let (d, n) = (6, 2);
        assert_eq!(lp.num_vars(), 2 * d * n + d + 1);
        assert_eq!(lp.num_rows(), 2 * n * d);
    }

    #[test]
    fn single_class_unbounded() {
        let p = pts(&[&[5.0, 5.0, 4.0, 3.0, 2.0, 1.0]]);
        let (lp, _) = build_soft_lp_unchecked(&p, &[(1, 2)], 1.0);
        assert!(solve(&lp, 1e-9).unwrap().is_unbounded());
    }

    #[test]
    fn identical_points_have_zero_margin() {
        let x = pts(&[&[0.0, 2.0, 1.0, 3.0]]);
        let cfg = SoftConfig::new(IndexAssignment::new(4, 2, 2, 4).unwrap());
        let r = solve_soft(&x, &x, &cfg).unwrap();
        assert!(r.optimal().unwrap().z.abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let (p, q, a) = example();
        assert_eq!(
            solve_soft(&p, &q, &SoftConfig::new(a).with_tradeoff(0.0)),
            Err(SoftError::BadTradeoff(0.0))
        );
        assert!(matches!(
            solve_soft(&p, &[], &SoftConfig::new(a)),
            Err(SoftError::Input(HardError::EmptyClass("Q")))
        ));
        assert!(SoftConfig::new(a).with_tradeoff(0.5).warning().is_some());
        assert!(SoftConfig::new(a).warning().is_none());
    }
}
