//! Hard-margin tropical SVM.
//!
//! A point `ξ` with index pair `(i, j)` sits at distance at least `z` from
//! `H_ω` inside sector `i` when
//!
//! ```text
//! z + ξ_j + ω_j - ξ_i - ω_i <= 0
//!     ξ_j + ω_j - ξ_i - ω_i <= 0
//!     ξ_l + ω_l - ξ_j - ω_j <= 0   for every l != i, j
//! ```
//!
//! With one index pair per class the optimal `z` has a closed form in each of
//! the five equality patterns of `(i_P, j_P, i_Q, j_Q)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lp::{LinearProgram, VarBound};
use crate::tropical::{TropHyperplane, TropPoint};

/// Slack allowed on the closed-form feasibility inequalities.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HardError {
    #[error("invalid index assignment: {0}")]
    InvalidAssignment(String),
    #[error("index {index} is outside 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("class {0} is empty")]
    EmptyClass(&'static str),
    #[error("points of dimension {left} and {right} cannot be mixed")]
    DimensionMismatch { left: usize, right: usize },
    #[error("the assignment admits no feasible hyperplane")]
    Infeasible,
    #[error("{expected} index pairs expected, got {got}")]
    MapCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    /// `i_P, j_P, i_Q, j_Q` pairwise distinct.
    Case1,
    /// `i_P = j_Q`, `i_Q != j_P`.
    Case2a,
    /// `i_Q = j_P`, `i_P != j_Q`.
    Case2b,
    /// `i_P = j_Q` and `i_Q = j_P`.
    Case3,
    /// `j_P = j_Q`.
    Case4,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Case1 => "1",
            Case::Case2a => "2a",
            Case::Case2b => "2b",
            Case::Case3 => "3",
            Case::Case4 => "4",
        })
    }
}

impl FromStr for Case {
    type Err = HardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "1" => Case::Case1,
            "2a" => Case::Case2a,
            "2b" => Case::Case2b,
            "3" => Case::Case3,
            "4" => Case::Case4,
            other => return Err(HardError::InvalidAssignment(format!("unknown case {other:?}"))),
        })
    }
}

/// Sector indices (1-based) shared by every point of a class: `i` is where
/// `ω + ξ` is largest, `j` the runner-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexAssignment {
    pub i_p: usize,
    pub j_p: usize,
    pub i_q: usize,
    pub j_q: usize,
}

impl IndexAssignment {
    pub fn new(i_p: usize, j_p: usize, i_q: usize, j_q: usize) -> Result<Self, HardError> {
        let a = Self { i_p, j_p, i_q, j_q };
        if [i_p, j_p, i_q, j_q].contains(&0) {
            return Err(HardError::InvalidAssignment("indices are 1-based".into()));
        }
        if i_p == j_p || i_q == j_q {
            return Err(HardError::InvalidAssignment(format!("{a}: i and j of a class must differ")));
        }
        if i_p == i_q {
            return Err(HardError::InvalidAssignment(format!("{a}: i_P and i_Q must differ")));
        }
        Ok(a)
    }

    pub fn case(&self) -> Case {
        let cross_p = self.i_p == self.j_q;
        let cross_q = self.i_q == self.j_p;
        match (cross_p, cross_q) {
            (true, true) => Case::Case3,
            (true, false) => Case::Case2a,
            (false, true) => Case::Case2b,
            (false, false) if self.j_p == self.j_q => Case::Case4,
            (false, false) => Case::Case1,
        }
    }

    /// Distinct indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        let mut v = vec![self.i_p, self.j_p, self.i_q, self.j_q];
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn check_dim(&self, dim: usize) -> Result<(), HardError> {
        match [self.i_p, self.j_p, self.i_q, self.j_q].into_iter().find(|&k| k > dim) {
            Some(index) => Err(HardError::IndexOutOfRange { index, dim }),
            None => Ok(()),
        }
    }

    /// Index pair `(i, j)` of the given class (`true` for P).
    pub fn pair(&self, is_p: bool) -> (usize, usize) {
        if is_p {
            (self.i_p, self.j_p)
        } else {
            (self.i_q, self.j_q)
        }
    }
}

impl fmt::Display for IndexAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.i_p, self.j_p, self.i_q, self.j_q)
    }
}

impl FromStr for IndexAssignment {
    type Err = HardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| HardError::InvalidAssignment(format!("{s:?} is not four comma-separated indices")))?;
        match parts[..] {
            [a, b, c, d] => Self::new(a, b, c, d),
            _ => Err(HardError::InvalidAssignment(format!("{s:?} is not four comma-separated indices"))),
        }
    }
}

pub(crate) fn check_classes(p: &[TropPoint], q: &[TropPoint]) -> Result<usize, HardError> {
    let first = p.first().ok_or(HardError::EmptyClass("P"))?;
    if q.is_empty() {
        return Err(HardError::EmptyClass("Q"));
    }
    let dim = first.dim();
    if let Some(x) = p.iter().chain(q).find(|x| x.dim() != dim) {
        return Err(HardError::DimensionMismatch {
            left: dim,
            right: x.dim(),
        });
    }
    Ok(dim)
}

/// Hard-margin program for per-point index pairs (`maps_p[k]` belongs to
/// `p[k]`). Variable 0 is `z`, variable `k` is `ω_k`.
pub fn build_hard_lp_with_maps(
    p: &[TropPoint],
    q: &[TropPoint],
    maps_p: &[(usize, usize)],
    maps_q: &[(usize, usize)],
) -> Result<LinearProgram, HardError> {
    let dim = check_classes(p, q)?;
    validate_maps(dim, p.len(), q.len(), maps_p, maps_q)?;
    let mut lp = LinearProgram::new();
    let z = lp.add_var("z", VarBound::Free, 1.0);
    let w: Vec<usize> = (1..=dim).map(|k| lp.add_var(format!("w{k}"), VarBound::Free, 0.0)).collect();
    let classes = [("P", p, maps_p), ("Q", q, maps_q)];
    for (name, points, maps) in classes {
        for (k, (x, &(i, j))) in points.iter().zip(maps).enumerate() {
            let (xi, xj) = (x.get(i), x.get(j));
            let tag = format!("{name}{}", k + 1);
            lp.add_row(format!("margin_{tag}"), &[(z, 1.0), (w[j - 1], 1.0), (w[i - 1], -1.0)], xi - xj);
            lp.add_row(format!("sector_{tag}"), &[(w[j - 1], 1.0), (w[i - 1], -1.0)], xi - xj);
            for l in (1..=dim).filter(|&l| l != i && l != j) {
                lp.add_row(
                    format!("second_{tag}_{l}"),
                    &[(w[l - 1], 1.0), (w[j - 1], -1.0)],
                    xj - x.get(l),
                );
            }
        }
    }
    Ok(lp)
}

pub(crate) fn validate_maps(
    dim: usize,
    n_p: usize,
    n_q: usize,
    maps_p: &[(usize, usize)],
    maps_q: &[(usize, usize)],
) -> Result<(), HardError> {
    for (maps, n) in [(maps_p, n_p), (maps_q, n_q)] {
        if maps.len() != n {
            return Err(HardError::MapCount {
                expected: n,
                got: maps.len(),
            });
        }
        for &(i, j) in maps {
            for index in [i, j] {
                if index == 0 || index > dim {
                    return Err(HardError::IndexOutOfRange { index, dim });
                }
            }
            if i == j {
                return Err(HardError::InvalidAssignment(format!("pair ({i}, {j}) repeats an index")));
            }
        }
    }
    for &(ip, _) in maps_p {
        if maps_q.iter().any(|&(iq, _)| iq == ip) {
            return Err(HardError::InvalidAssignment(format!(
                "index {ip} is the sector of points in both classes"
            )));
        }
    }
    Ok(())
}

/// Hard-margin program with a constant index pair per class.
pub fn build_hard_lp(p: &[TropPoint], q: &[TropPoint], a: &IndexAssignment) -> Result<LinearProgram, HardError> {
    let dim = check_classes(p, q)?;
    a.check_dim(dim)?;
    build_hard_lp_with_maps(p, q, &vec![(a.i_p, a.j_p); p.len()], &vec![(a.i_q, a.j_q); q.len()])
}

fn min_over(points: &[TropPoint], f: impl Fn(&TropPoint) -> f64) -> f64 {
    points.iter().map(f).fold(f64::INFINITY, f64::min)
}

fn max_over(points: &[TropPoint], f: impl Fn(&TropPoint) -> f64) -> f64 {
    points.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Class-wide extreme coordinate gaps that decide feasibility and margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseConstants {
    /// `a = min_p(p_iP - p_jP)`, `b = min_p(p_jP - p_iQ)`, `c = min_p(p_jP - p_jQ)`,
    /// `d = min_q(q_iQ - q_jQ)`, `e = min_q(q_jQ - q_iP)`, `f = min_q(q_jQ - q_jP)`.
    Case1 { a: f64, b: f64, c: f64, d: f64, e: f64, f: f64 },
    /// For 2a: `a_prime = min_p(p_iP - p_jP)`, `a = min over P ∪ Q of (ξ_iP - ξ_jP)`,
    /// `b = min_p(p_jP - p_iQ)`, `c = min_q(q_iQ - q_iP)`. Case 2b swaps the roles
    /// of the classes.
    Case2 { a_prime: f64, a: f64, b: f64, c: f64 },
    /// `a = min_p(p_k1 - p_k2)`, `b = min_q(q_k2 - q_k1)`.
    Case3 { a: f64, b: f64 },
    /// `min_p_ip = min_p(p_iP - p_j)`, `max_q_ip = max_q(q_iP - q_j)`,
    /// `min_q_iq = min_q(q_iQ - q_j)`, `max_p_iq = max_p(p_iQ - p_j)`.
    Case4 { min_p_ip: f64, max_q_ip: f64, min_q_iq: f64, max_p_iq: f64 },
}

pub fn case_constants(p: &[TropPoint], q: &[TropPoint], a: &IndexAssignment) -> Result<CaseConstants, HardError> {
    let dim = check_classes(p, q)?;
    a.check_dim(dim)?;
    let IndexAssignment { i_p, j_p, i_q, j_q } = *a;
    let gap = |x: &TropPoint, s: usize, t: usize| x.get(s) - x.get(t);
    Ok(match a.case() {
        Case::Case1 => CaseConstants::Case1 {
            a: min_over(p, |x| gap(x, i_p, j_p)),
            b: min_over(p, |x| gap(x, j_p, i_q)),
            c: min_over(p, |x| gap(x, j_p, j_q)),
            d: min_over(q, |x| gap(x, i_q, j_q)),
            e: min_over(q, |x| gap(x, j_q, i_p)),
            f: min_over(q, |x| gap(x, j_q, j_p)),
        },
        Case::Case2a => {
            let a_prime = min_over(p, |x| gap(x, i_p, j_p));
            CaseConstants::Case2 {
                a_prime,
                a: a_prime.min(min_over(q, |x| gap(x, i_p, j_p))),
                b: min_over(p, |x| gap(x, j_p, i_q)),
                c: min_over(q, |x| gap(x, i_q, i_p)),
            }
        }
        Case::Case2b => {
            let a_prime = min_over(q, |x| gap(x, i_q, j_q));
            CaseConstants::Case2 {
                a_prime,
                a: a_prime.min(min_over(p, |x| gap(x, i_q, j_q))),
                b: min_over(q, |x| gap(x, j_q, i_p)),
                c: min_over(p, |x| gap(x, i_p, i_q)),
            }
        }
        Case::Case3 => CaseConstants::Case3 {
            a: min_over(p, |x| gap(x, i_p, i_q)),
            b: min_over(q, |x| gap(x, i_q, i_p)),
        },
        Case::Case4 => CaseConstants::Case4 {
            min_p_ip: min_over(p, |x| gap(x, i_p, j_p)),
            max_q_ip: max_over(q, |x| gap(x, i_p, j_p)),
            min_q_iq: min_over(q, |x| gap(x, i_q, j_q)),
            max_p_iq: max_over(p, |x| gap(x, i_q, j_q)),
        },
    })
}

impl CaseConstants {
    /// Whether the hard-margin program is feasible.
    pub fn feasible(&self) -> bool {
        let t = FEASIBILITY_TOL;
        match *self {
            CaseConstants::Case1 { a, b, c, d, e, f } => (-f).max(-a - e) <= (d + b).min(c) + t,
            CaseConstants::Case2 { a, b, c, .. } => a + b + c >= -t,
            CaseConstants::Case3 { a, b } => -a <= b + t,
            CaseConstants::Case4 {
                min_p_ip,
                max_q_ip,
                min_q_iq,
                max_p_iq,
            } => max_q_ip <= min_p_ip + t && max_p_iq <= min_q_iq + t,
        }
    }

    /// Optimal margin, meaningful only when feasible.
    pub fn margin(&self) -> f64 {
        match *self {
            CaseConstants::Case1 { a, b, c, d, e, f } => (a + c + e).min(d + b + f).min(0.5 * (a + b + d + e)),
            CaseConstants::Case2 { a_prime, a, b, c } => (a + b + c).min(0.5 * (a_prime + b + c)),
            CaseConstants::Case3 { a, b } => 0.5 * (a + b),
            CaseConstants::Case4 {
                min_p_ip,
                max_q_ip,
                min_q_iq,
                max_p_iq,
            } => (min_p_ip - max_q_ip).min(min_q_iq - max_p_iq),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardMarginResult {
    pub assignment: IndexAssignment,
    pub feasible: bool,
    /// Optimal margin when feasible.
    pub margin: Option<f64>,
    pub omega: Option<TropHyperplane>,
    pub constants: CaseConstants,
}

/// Closed-form feasibility and optimal margin (no ω).
pub fn hard_feasible_and_margin(
    p: &[TropPoint],
    q: &[TropPoint],
    a: &IndexAssignment,
) -> Result<HardMarginResult, HardError> {
    let constants = case_constants(p, q, a)?;
    let feasible = constants.feasible();
    Ok(HardMarginResult {
        assignment: *a,
        feasible,
        margin: feasible.then(|| constants.margin().max(0.0)),
        omega: None,
        constants,
    })
}

/// A normal vector that attains the closed-form margin.
///
/// The coordinates on the assignment's indices follow the optimality
/// argument of each case; every other `ω_l` is set to the largest value the
/// runner-up constraints allow.
pub fn construct_omega(
    p: &[TropPoint],
    q: &[TropPoint],
    result: &HardMarginResult,
) -> Result<TropHyperplane, HardError> {
    if !result.feasible {
        return Err(HardError::Infeasible);
    }
    let dim = check_classes(p, q)?;
    let a = result.assignment;
    a.check_dim(dim)?;
    let case = a.case();
    let IndexAssignment { i_p, j_p, i_q, j_q } = a;
    let mut omega = vec![f64::NAN; dim];
    let mut set = |k: usize, v: f64| omega[k - 1] = v;
    match result.constants {
        CaseConstants::Case1 { a, b, c, d, e, f } => {
            // x = ω_jP - ω_jQ trades the P margin A + E - x against the Q
            // margin x + B + D. Clamping the balance point lands on x = -C,
            // x = F or the midpoint, matching the three terms of the margin.
            let lo = (-c).max(-b - d);
            let hi = f.min(a + e);
            let x = (0.5 * (a + e - b - d)).clamp(lo, hi.max(lo));
            set(j_q, 0.0);
            set(j_p, x);
            set(i_p, e);
            set(i_q, x + b);
        }
        CaseConstants::Case2 { a_prime, a: a_all, b, c } => {
            // u = ω_i - ω_j of the class whose i is the other's j; v closes
            // the triangle through the remaining index with u + v = B.
            let u = (0.5 * (b + c - a_prime)).max(-a_all);
            let v = b - u;
            if case == Case::Case2a {
                set(i_p, 0.0);
                set(j_p, -u);
                set(i_q, v);
            } else {
                set(i_q, 0.0);
                set(j_q, -u);
                set(i_p, v);
            }
        }
        CaseConstants::Case3 { a, b } => {
            set(i_q, 0.0);
            set(i_p, 0.5 * (b - a));
        }
        CaseConstants::Case4 { max_q_ip, max_p_iq, .. } => {
            set(j_p, 0.0);
            set(i_p, -max_q_ip);
            set(i_q, -max_p_iq);
        }
    }
    let maps = p.iter().map(|x| (x, j_p)).chain(q.iter().map(|x| (x, j_q)));
    let pinned: Vec<f64> = omega.clone();
    let mut free: Vec<f64> = vec![f64::INFINITY; dim];
    for (x, j) in maps {
        let base = pinned[j - 1] + x.get(j);
        for l in 0..dim {
            if pinned[l].is_nan() {
                free[l] = free[l].min(base - x.coords()[l]);
            }
        }
    }
    for l in 0..dim {
        if omega[l].is_nan() {
            omega[l] = free[l];
        }
    }
    Ok(TropHyperplane::new(omega).expect("finite by construction"))
}

/// Closed form plus a witness ω when feasible.
pub fn solve_hard(p: &[TropPoint], q: &[TropPoint], a: &IndexAssignment) -> Result<HardMarginResult, HardError> {
    let mut r = hard_feasible_and_margin(p, q, a)?;
    if r.feasible {
        r.omega = Some(construct_omega(p, q, &r)?);
    }
    Ok(r)
}

/// Largest violation of the hard-margin rows at `(z, ω)`.
pub fn hard_residual(
    p: &[TropPoint],
    q: &[TropPoint],
    a: &IndexAssignment,
    z: f64,
    omega: &TropHyperplane,
) -> Result<f64, HardError> {
    let lp = build_hard_lp(p, q, a)?;
    let mut x = vec![z];
    x.extend_from_slice(omega.omega());
    Ok(lp.max_violation(&x))
}

/// Every valid constant-per-class assignment for dimension `dim`, in
/// lexicographic order of `(i_P, j_P, i_Q, j_Q)`.
pub fn all_assignments(dim: usize) -> Vec<IndexAssignment> {
    let mut out = Vec::new();
    for i_p in 1..=dim {
        for j_p in 1..=dim {
            for i_q in 1..=dim {
                for j_q in 1..=dim {
                    if let Ok(a) = IndexAssignment::new(i_p, j_p, i_q, j_q) {
                        out.push(a);
                    }
                }
            }
        }
    }
    out
}

/// Feasible assignment with the largest margin (earliest in lexicographic
/// order on ties), with its ω.
///
/// `None` when no assignment reaches a margin above [`FEASIBILITY_TOL`]: a
/// zero-margin solution puts points on the hyperplane and separates nothing.
pub fn enumerate_assignments(p: &[TropPoint], q: &[TropPoint]) -> Result<Option<HardMarginResult>, HardError> {
    let dim = check_classes(p, q)?;
    let mut best: Option<HardMarginResult> = None;
    for a in all_assignments(dim) {
        let r = hard_feasible_and_margin(p, q, &a)?;
        if let Some(z) = r.margin.filter(|&z| z > FEASIBILITY_TOL) {
            if best.as_ref().and_then(|b| b.margin).map_or(true, |bz| z > bz) {
                best = Some(r);
            }
        }
    }
    match best {
        Some(mut r) => {
            r.omega = Some(construct_omega(p, q, &r)?);
            Ok(Some(r))
        }
        None => Ok(None),
    }
}
