//! Dense two-phase simplex for small linear programs.
//!
//! Programs are stated as `maximize cᵀx subject to a_iᵀx <= b_i`, with each
//! variable either free or sign-restricted (`x_j >= 0`). The solver returns a
//! verdict together with a certificate: primal values and dual multipliers
//! when optimal, an improving ray when unbounded.
//!
//! Pricing is Dantzig's largest reduced cost; after a run of degenerate pivots
//! the solver falls back to Bland's smallest-index rule until the objective
//! moves again, which rules out cycling. Every choice is deterministic.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    Free,
    NonNegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse coefficients `(variable, value)`; a variable appears at most once.
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    bounds: Vec<VarBound>,
    names: Vec<String>,
    rows: Vec<Constraint>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint {row} references variable {var}, but the program has {nvars} variables")]
    UnknownVariable { row: usize, var: usize, nvars: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, name: impl Into<String>, bound: VarBound, objective: f64) -> usize {
        self.objective.push(objective);
        self.bounds.push(bound);
        self.names.push(name.into());
        self.objective.len() - 1
    }

    /// Adds `Σ coeff·x <= rhs`. Repeated variables are summed.
    pub fn add_row(&mut self, name: impl Into<String>, coeffs: &[(usize, f64)], rhs: f64) {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for &(v, c) in coeffs {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(entry) => entry.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        merged.sort_by_key(|&(v, _)| v);
        self.rows.push(Constraint {
            coeffs: merged,
            rhs,
            name: name.into(),
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self) -> &[VarBound] {
        &self.bounds
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation over all rows and sign bounds at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|r| row_activity(r, x) - r.rhs)
            .fold(0.0_f64, f64::max);
        let signs = self
            .bounds
            .iter()
            .zip(x)
            .filter(|(b, _)| **b == VarBound::NonNegative)
            .map(|(_, v)| -v)
            .fold(0.0_f64, f64::max);
        rows.max(signs)
    }

    fn validate(&self) -> Result<(), LpError> {
        let nvars = self.num_vars();
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::NonFinite(format!("objective of {}", self.names[j])));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() || r.coeffs.iter().any(|(_, c)| !c.is_finite()) {
                return Err(LpError::NonFinite(format!("row {}", r.name)));
            }
            if let Some(&(var, _)) = r.coeffs.iter().find(|(v, _)| *v >= nvars) {
                return Err(LpError::UnknownVariable { row: i, var, nvars });
            }
        }
        Ok(())
    }
}

fn row_activity(r: &Constraint, x: &[f64]) -> f64 {
    r.coeffs.iter().map(|&(v, c)| c * x[v]).sum()
}

fn fmt_term(f: &mut fmt::Formatter<'_>, c: f64, name: &str) -> fmt::Result {
    if c < 0.0 {
        write!(f, " - {} {}", -c, name)
    } else {
        write!(f, " + {} {}", c, name)
    }
}

/// Plain-text dump in an LP-file-like layout:
///
/// ```text
/// maximize
///   obj: + 1 z
/// subject to
///   m_p1: + 1 z - 1 w5 + 1 w6 <= 0
/// bounds
///   z free
///   alpha_p1 >= 0
/// end
/// ```
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "maximize")?;
        write!(f, "  obj:")?;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                fmt_term(f, c, &self.names[j])?;
            }
        }
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for r in &self.rows {
            write!(f, "  {}:", r.name)?;
            for &(v, c) in &r.coeffs {
                fmt_term(f, c, &self.names[v])?;
            }
            writeln!(f, " <= {}", r.rhs)?;
        }
        writeln!(f, "bounds")?;
        for (name, b) in self.names.iter().zip(&self.bounds) {
            match b {
                VarBound::Free => writeln!(f, "  {name} free")?,
                VarBound::NonNegative => writeln!(f, "  {name} >= 0")?,
            }
        }
        writeln!(f, "end")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Allowed primal violation per row, relative to the row's scale.
    pub feasibility_tol: f64,
    /// Reduced costs above this value count as improving.
    pub optimality_tol: f64,
    /// Pivot cap; `0` means `50·(rows + columns)`.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            max_iterations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Optimal {
        x: Vec<f64>,
        value: f64,
        /// One non-negative multiplier per row; `Aᵀy` matches `c` on free
        /// variables and dominates it on sign-restricted ones.
        duals: Vec<f64>,
    },
    Infeasible,
    /// `ray` keeps every row satisfied when added to a feasible point and
    /// strictly increases the objective.
    Unbounded { ray: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub verdict: Verdict,
    pub iterations: usize,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self.verdict, Verdict::Optimal { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self.verdict, Verdict::Infeasible)
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self.verdict, Verdict::Unbounded { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match &self.verdict {
            Verdict::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn solution(&self) -> Option<&[f64]> {
        match &self.verdict {
            Verdict::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

/// Solves with default tolerances except the feasibility tolerance.
pub fn solve(lp: &LinearProgram, tol: f64) -> Result<LpOutcome, LpError> {
    solve_with(
        lp,
        &SolverOptions {
            feasibility_tol: tol,
            ..SolverOptions::default()
        },
    )
}

const PIVOT_EPS: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;

/// Column origin in the standard-form tableau.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    /// `+x_j` (or the positive part of a free variable).
    Plus(usize),
    /// Negative part of a free variable.
    Minus(usize),
    Slack(usize),
    Artificial(usize),
}

struct Tableau {
    rows: usize,
    cols: usize,
    width: usize,
    /// `rows + 1` lines of `cols + 1` entries; the last line is the objective
    /// (reduced costs, value in the last slot negated) and the last column the
    /// right-hand side.
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.cols]
    }

    fn obj_row(&self) -> &[f64] {
        let start = self.rows * self.width;
        &self.data[start..start + self.width]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        {
            let row = &mut self.data[pr * w..(pr + 1) * w];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[pc] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        let nz: Vec<usize> = (0..w).filter(|&c| pivot_row[c] != 0.0).collect();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for &c in &nz {
                row[c] -= factor * pivot_row[c];
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs the simplex loop on the current objective line. Returns the
    /// unbounded entering column if one is found.
    fn optimize(
        &mut self,
        opts: &SolverOptions,
        iterations: &mut usize,
        cap: usize,
    ) -> Result<Option<usize>, LpError> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let obj = self.obj_row();
            let mut enter = None;
            let mut best = opts.optimality_tol;
            for c in 0..self.cols {
                if !self.enterable[c] || obj[c] <= opts.optimality_tol {
                    continue;
                }
                if bland {
                    enter = Some(c);
                    break;
                }
                if obj[c] > best {
                    best = obj[c];
                    enter = Some(c);
                }
            }
            let Some(pc) = enter else {
                return Ok(None);
            };

            // Ratio test; ties go to the smallest basic column index.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if ratio < lratio && !tie
                            || tie && self.basis[r] < self.basis[lr]
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return Ok(Some(pc));
            };

            if *iterations >= cap {
                return Err(LpError::IterationLimit(cap));
            }
            *iterations += 1;
            if ratio * self.obj_row()[pc] <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

/// Solves `lp`; see the module docs for the contract.
pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let n = lp.num_vars();

    // Rows with identical coefficient vectors keep only the tightest bound.
    let mut kept: Vec<usize> = Vec::new();
    let mut by_pattern: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
    for (i, r) in lp.rows.iter().enumerate() {
        let key: Vec<(usize, u64)> = r.coeffs.iter().map(|&(v, c)| (v, c.to_bits())).collect();
        match by_pattern.get(&key) {
            Some(&k) => {
                if r.rhs < lp.rows[kept[k]].rhs {
                    kept[k] = i;
                }
            }
            None => {
                by_pattern.insert(key, kept.len());
                kept.push(i);
            }
        }
    }
    // Empty rows are either trivially satisfied or a contradiction.
    let mut active: Vec<usize> = Vec::with_capacity(kept.len());
    for &i in &kept {
        let r = &lp.rows[i];
        if r.coeffs.is_empty() {
            if r.rhs < -opts.feasibility_tol {
                return Ok(LpOutcome {
                    verdict: Verdict::Infeasible,
                    iterations: 0,
                });
            }
        } else {
            active.push(i);
        }
    }

    let mut columns: Vec<Column> = Vec::new();
    let mut plus_col = vec![0usize; n];
    let mut minus_col = vec![usize::MAX; n];
    for j in 0..n {
        plus_col[j] = columns.len();
        columns.push(Column::Plus(j));
        if lp.bounds[j] == VarBound::Free {
            minus_col[j] = columns.len();
            columns.push(Column::Minus(j));
        }
    }
    let m = active.len();
    let slack_base = columns.len();
    for k in 0..m {
        columns.push(Column::Slack(k));
    }
    // Row scale and sign: transformed row = sign·scale·(original row).
    let mut scale = vec![1.0; m];
    let mut sign = vec![1.0; m];
    for (k, &i) in active.iter().enumerate() {
        let r = &lp.rows[i];
        let mx = r.coeffs.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
        scale[k] = 1.0 / mx;
        if r.rhs < 0.0 {
            sign[k] = -1.0;
        }
    }
    let art_rows: Vec<usize> = (0..m).filter(|&k| sign[k] < 0.0).collect();
    for &k in &art_rows {
        columns.push(Column::Artificial(k));
    }
    let cols = columns.len();
    let width = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        width,
        data: vec![0.0; (m + 1) * width],
        basis: vec![0; m],
        enterable: columns
            .iter()
            .map(|c| !matches!(c, Column::Artificial(_)))
            .collect(),
    };
    for (k, &i) in active.iter().enumerate() {
        let r = &lp.rows[i];
        let f = sign[k] * scale[k];
        let base = k * width;
        for &(v, c) in &r.coeffs {
            t.data[base + plus_col[v]] = f * c;
            if minus_col[v] != usize::MAX {
                t.data[base + minus_col[v]] = -f * c;
            }
        }
        t.data[base + slack_base + k] = sign[k];
        t.data[base + cols] = f * r.rhs;
        t.basis[k] = slack_base + k;
    }
    for (a, &k) in art_rows.iter().enumerate() {
        let col = slack_base + m + a;
        t.data[k * width + col] = 1.0;
        t.basis[k] = col;
    }

    // Phase-1 infeasibility is judged relative to the data's magnitude.
    let rhs_scale = (0..m).map(|k| t.data[k * width + cols].abs()).fold(1.0, f64::max);
    let cap = if opts.max_iterations == 0 {
        50 * (m + cols)
    } else {
        opts.max_iterations
    };
    let mut iterations = 0usize;

    if !art_rows.is_empty() {
        // Phase 1: maximize -Σ artificials, written in reduced-cost form.
        let obj = m * width;
        for &k in &art_rows {
            for c in 0..width {
                t.data[obj + c] += t.data[k * width + c];
            }
        }
        for a in 0..art_rows.len() {
            t.data[obj + slack_base + m + a] = 0.0;
        }
        if t.optimize(opts, &mut iterations, cap)?.is_some() {
            return Err(LpError::NumericalBreakdown(
                "phase 1 reported an unbounded direction".into(),
            ));
        }
        let infeas = t.data[obj + cols];
        if infeas > opts.feasibility_tol * rhs_scale {
            return Ok(LpOutcome {
                verdict: Verdict::Infeasible,
                iterations,
            });
        }
        // Drive artificials out of the basis where possible.
        for r in 0..m {
            if !matches!(columns[t.basis[r]], Column::Artificial(_)) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for c in 0..slack_base + m {
                let a = t.at(r, c).abs();
                if a > 1e-9 && best.map_or(true, |(_, b)| a > b) {
                    best = Some((c, a));
                }
            }
            if let Some((c, _)) = best {
                t.pivot(r, c);
            }
        }
        for c in 0..width {
            t.data[obj + c] = 0.0;
        }
    }

    // Phase 2 objective in reduced-cost form: r_j = c_j - c_Bᵀ B⁻¹ A_j.
    let col_cost = |c: usize| -> f64 {
        match columns[c] {
            Column::Plus(j) => lp.objective[j],
            Column::Minus(j) => -lp.objective[j],
            _ => 0.0,
        }
    };
    {
        let obj = m * width;
        for c in 0..cols {
            t.data[obj + c] = col_cost(c);
        }
        t.data[obj + cols] = 0.0;
        for r in 0..m {
            let cb = col_cost(t.basis[r]);
            if cb != 0.0 {
                for c in 0..width {
                    t.data[obj + c] -= cb * t.data[r * width + c];
                }
            }
        }
    }

    let unbounded = t.optimize(opts, &mut iterations, cap)?;

    let extract = |t: &Tableau| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for r in 0..m {
            let v = t.rhs(r);
            match columns[t.basis[r]] {
                Column::Plus(j) => x[j] += v,
                Column::Minus(j) => x[j] -= v,
                _ => {}
            }
        }
        x
    };

    if let Some(pc) = unbounded {
        let mut ray = vec![0.0; n];
        match columns[pc] {
            Column::Plus(j) => ray[j] += 1.0,
            Column::Minus(j) => ray[j] -= 1.0,
            _ => {}
        }
        for r in 0..m {
            let a = t.at(r, pc);
            match columns[t.basis[r]] {
                Column::Plus(j) => ray[j] -= a,
                Column::Minus(j) => ray[j] += a,
                _ => {}
            }
        }
        let gain = lp.objective_value(&ray);
        let worst = lp
            .rows
            .iter()
            .map(|r| row_activity(r, &ray) / (1.0 + r.coeffs.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max)))
            .fold(0.0_f64, f64::max);
        if gain <= 0.0 || worst > 1e-6 {
            return Err(LpError::NumericalBreakdown(format!(
                "unbounded ray check failed (gain {gain:e}, violation {worst:e})"
            )));
        }
        return Ok(LpOutcome {
            verdict: Verdict::Unbounded { ray },
            iterations,
        });
    }

    let x = extract(&t);
    // Residual check on the original rows, relative to each row's scale.
    for r in &lp.rows {
        let mx = r
            .coeffs
            .iter()
            .map(|(_, c)| c.abs())
            .fold(r.rhs.abs(), f64::max)
            .max(1.0);
        let viol = row_activity(r, &x) - r.rhs;
        if viol > opts.feasibility_tol * mx {
            return Err(LpError::NumericalBreakdown(format!(
                "row {} violated by {viol:e} at the reported optimum",
                r.name
            )));
        }
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if *b == VarBound::NonNegative && x[j] < -opts.feasibility_tol {
            return Err(LpError::NumericalBreakdown(format!(
                "variable {} is negative ({:e}) at the reported optimum",
                lp.names[j], x[j]
            )));
        }
    }

    // Dual multipliers: y_k = -scale_k · (reduced cost of slack k).
    let mut duals = vec![0.0; lp.rows.len()];
    let objrow = t.obj_row();
    for (k, &i) in active.iter().enumerate() {
        duals[i] = (-objrow[slack_base + k] * sign[k] * sign[k] * scale[k]).max(0.0);
    }
    let value = lp.objective_value(&x);
    let dual_value: f64 = lp.rows.iter().zip(&duals).map(|(r, y)| r.rhs * y).sum();
    let gap = dual_value - value;
    if gap.abs() > 1e-6 * (1.0 + value.abs()) {
        log::warn!("duality gap {gap:e} at reported optimum {value}");
    }
    Ok(LpOutcome {
        verdict: Verdict::Optimal { x, value, duals },
        iterations,
    })
}
