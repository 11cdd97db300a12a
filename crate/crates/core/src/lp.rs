//! Dense two-phase primal simplex with Bland's rule.
//!
//! The same tableau code runs over `f64` (decisions at tolerance `tau_lp`) or
//! over exact rationals. Inputs are `f64`; in exact mode every coefficient is
//! converted to the rational number it represents, so the answer is exact
//! for the LP as given.
//!
//! Strict inequalities are not accepted by [`solve`]. They enter only through
//! [`max_slack_feasible`], which maximizes a common margin `eps` in `[0, 1]`.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

pub const DEFAULT_LP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("constraint {index} has {found} coefficients, program has {expected} variables")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    #[default]
    Float,
    ExactRational,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub arithmetic: Arithmetic,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_LP_TOLERANCE,
            arithmetic: Arithmetic::Float,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        Self {
            arithmetic: Arithmetic::ExactRational,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    sense: Sense,
    eqs: Vec<(Vec<f64>, f64)>,
    ineqs: Vec<(Vec<f64>, Inequality, f64)>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Feasibility program in `n_vars` nonnegative variables (zero objective).
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            sense: Sense::Min,
            eqs: Vec::new(),
            ineqs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn set_objective(&mut self, c: Vec<f64>, sense: Sense) -> &mut Self {
        self.objective = c;
        self.sense = sense;
        self
    }

    pub fn minimize(mut self, c: Vec<f64>) -> Self {
        self.set_objective(c, Sense::Min);
        self
    }

    pub fn maximize(mut self, c: Vec<f64>) -> Self {
        self.set_objective(c, Sense::Max);
        self
    }

    pub fn add_eq(&mut self, a: Vec<f64>, b: f64) -> &mut Self {
        self.eqs.push((a, b));
        self
    }

    pub fn add_ineq(&mut self, a: Vec<f64>, dir: Inequality, b: f64) -> &mut Self {
        self.ineqs.push((a, dir, b));
        self
    }

    pub fn eq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.add_eq(a, b);
        self
    }

    pub fn le(mut self, a: Vec<f64>, b: f64) -> Self {
        self.add_ineq(a, Inequality::Le, b);
        self
    }

    pub fn ge(mut self, a: Vec<f64>, b: f64) -> Self {
        self.add_ineq(a, Inequality::Ge, b);
        self
    }

    /// Bounds of variable `i`; use infinities for free directions.
    pub fn set_bounds(&mut self, i: usize, lower: f64, upper: f64) -> &mut Self {
        self.bounds[i] = (lower, upper);
        self
    }

    pub fn bounded(mut self, i: usize, lower: f64, upper: f64) -> Self {
        self.set_bounds(i, lower, upper);
        self
    }

    pub fn equalities(&self) -> &[(Vec<f64>, f64)] {
        &self.eqs
    }

    pub fn inequalities(&self) -> &[(Vec<f64>, Inequality, f64)] {
        &self.ineqs
    }

    pub fn var_bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn check(&self) -> Result<(), LpError> {
        if self.objective.len() != self.n_vars {
            return Err(LpError::DimensionMismatch {
                index: usize::MAX,
                expected: self.n_vars,
                found: self.objective.len(),
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        let rows = self
            .eqs
            .iter()
            .map(|(a, b)| (a, *b))
            .chain(self.ineqs.iter().map(|(a, _, b)| (a, *b)));
        for (index, (a, b)) in rows.enumerate() {
            if a.len() != self.n_vars {
                return Err(LpError::DimensionMismatch {
                    index,
                    expected: self.n_vars,
                    found: a.len(),
                });
            }
            if !b.is_finite() || a.iter().any(|c| !c.is_finite()) {
                return Err(LpError::NonFinite("constraint"));
            }
        }
        if self
            .bounds
            .iter()
            .any(|(lo, hi)| lo.is_nan() || hi.is_nan() || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY)
        {
            return Err(LpError::NonFinite("variable bounds"));
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in &self.eqs {
            worst = worst.max((dot(a, x) - b).abs());
        }
        for (a, dir, b) in &self.ineqs {
            let v = dot(a, x);
            worst = worst.max(match dir {
                Inequality::Le => v - b,
                Inequality::Ge => b - v,
            });
        }
        for (xi, (lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xi).max(xi - hi);
        }
        worst
    }

    #[cfg(debug_assertions)]
    fn rhs_scale(&self) -> f64 {
        self.eqs
            .iter()
            .map(|(_, b)| b.abs())
            .chain(self.ineqs.iter().map(|(_, _, b)| b.abs()))
            .fold(1.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, solution: Vec<f64> },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal { .. } => LpStatus::Optimal,
            LpOutcome::Infeasible => LpStatus::Infeasible,
            LpOutcome::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn solution(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { solution, .. } => Some(solution),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

/// Solve `lp`.
pub fn solve(lp: &LinearProgram, config: &SolverConfig) -> Result<LpOutcome, LpError> {
    let mut stages = solve_lexicographic(lp, &[], config)?;
    Ok(stages.remove(0))
}

/// Optimize `lp`'s objective, then each of `secondary` in turn over the
/// optimal face of the previous stage.
///
/// Returns one outcome per stage that was reached: a single `Infeasible` or
/// `Unbounded` entry stops the sequence.
pub fn solve_lexicographic(
    lp: &LinearProgram,
    secondary: &[(Vec<f64>, Sense)],
    config: &SolverConfig,
) -> Result<Vec<LpOutcome>, LpError> {
    lp.check()?;
    for (c, _) in secondary {
        if c.len() != lp.n_vars {
            return Err(LpError::DimensionMismatch {
                index: usize::MAX,
                expected: lp.n_vars,
                found: c.len(),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
    }
    if lp.bounds.iter().any(|(lo, hi)| lo > hi) {
        return Ok(vec![LpOutcome::Infeasible]);
    }
    let stages = match config.arithmetic {
        Arithmetic::Float => run::<f64>(lp, secondary, config.tolerance)?,
        Arithmetic::ExactRational => run::<BigRational>(lp, secondary, config.tolerance)?,
    };
    #[cfg(debug_assertions)]
    for stage in &stages {
        if let LpOutcome::Optimal { solution, .. } = stage {
            let violation = lp.max_violation(solution);
            debug_assert!(
                violation <= config.tolerance * lp.rhs_scale(),
                "LP solution violates constraints by {violation}"
            );
        }
    }
    Ok(stages)
}

/// Scalar field used by the tableau.
trait Scalar: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_pos(&self, tol: f64) -> bool;
    fn is_neg(&self, tol: f64) -> bool;
    fn is_exactly_zero(&self) -> bool;
    fn lt(&self, o: &Self, tol: f64) -> bool;
    /// Flush round-off; no-op for exact types.
    fn clean(&mut self) {}
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self, tol: f64) -> bool {
        *self > tol
    }
    fn is_neg(&self, tol: f64) -> bool {
        *self < -tol
    }
    fn is_exactly_zero(&self) -> bool {
        *self == 0.0
    }
    fn lt(&self, o: &Self, tol: f64) -> bool {
        *self < *o - tol
    }
    fn clean(&mut self) {
        if self.abs() < 1e-14 {
            *self = 0.0;
        }
    }
}

/// The rational value of the shortest decimal that round-trips to `x`, so
/// that inputs like `0.3` and `0.7` sum to exactly one.
fn decimal_rational(x: f64) -> BigRational {
    assert!(x.is_finite(), "finite coefficient");
    let text = format!("{x:e}");
    let (mantissa, exponent) = text.split_once('e').expect("exponent form");
    let exponent: i64 = exponent.parse().expect("integer exponent");
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let shift = exponent - frac_part.len() as i64;
    let mut numer = format!("{int_part}{frac_part}");
    let mut denom = String::from("1");
    if shift >= 0 {
        numer.push_str(&"0".repeat(shift as usize));
    } else {
        denom.push_str(&"0".repeat((-shift) as usize));
    }
    format!("{numer}/{denom}").parse().expect("decimal literal")
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_f64(x: f64) -> Self {
        decimal_rational(x)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self, _tol: f64) -> bool {
        self.is_positive()
    }
    fn is_neg(&self, _tol: f64) -> bool {
        self.is_negative()
    }
    fn is_exactly_zero(&self) -> bool {
        self.is_zero()
    }
    fn lt(&self, o: &Self, _tol: f64) -> bool {
        self < o
    }
}

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + s`
    Shift(usize, f64),
    /// `x = hi - s`
    Mirror(usize, f64),
    /// `x = s+ - s-`
    Split(usize, usize),
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    cost: Vec<T>,
    cost_rhs: T,
    allowed: Vec<bool>,
    tol: f64,
    iterations: usize,
    max_iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn n_cols(&self) -> usize {
        self.allowed.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_exactly_zero() {
                *v = v.div(&p);
            }
        }
        self.rhs[r] = self.rhs[r].div(&p);
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_exactly_zero() {
                continue;
            }
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !pv.is_exactly_zero() {
                    *v = v.sub(&f.mul(pv));
                    v.clean();
                }
            }
            self.rows[i][c] = T::zero();
            self.rhs[i] = self.rhs[i].sub(&f.mul(&pivot_rhs));
            self.rhs[i].clean();
        }
        let f = self.cost[c].clone();
        if !f.is_exactly_zero() {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                if !pv.is_exactly_zero() {
                    *v = v.sub(&f.mul(pv));
                    v.clean();
                }
            }
            self.cost[c] = T::zero();
            self.cost_rhs = self.cost_rhs.sub(&f.mul(&pivot_rhs));
        }
        self.basis[r] = c;
    }

    /// Reduced costs of `c` for the current basis; `cost_rhs` holds `-c_B x_B`.
    fn set_cost(&mut self, c: &[T]) {
        let mut cost: Vec<T> = c.to_vec();
        let mut rhs = T::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b].clone();
            if cb.is_exactly_zero() {
                continue;
            }
            for (v, t) in cost.iter_mut().zip(&self.rows[i]) {
                if !t.is_exactly_zero() {
                    *v = v.sub(&cb.mul(t));
                }
            }
            rhs = rhs.sub(&cb.mul(&self.rhs[i]));
        }
        for &b in &self.basis {
            cost[b] = T::zero();
        }
        self.cost = cost;
        self.cost_rhs = rhs;
    }

    /// Minimize the current cost row with Bland's rule.
    fn optimize(&mut self) -> Result<Step, LpError> {
        loop {
            let entering = (0..self.n_cols()).find(|&j| self.allowed[j] && self.cost[j].is_neg(self.tol));
            let Some(c) = entering else {
                return Ok(Step::Optimal);
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_pos(self.tol) {
                    continue;
                }
                let ratio = self.rhs[i].div(a);
                let better = match &leave {
                    None => true,
                    Some((best_i, best)) => {
                        ratio.lt(best, self.tol)
                            || (!best.lt(&ratio, self.tol) && self.basis[i] < self.basis[*best_i])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Step::Unbounded);
            };
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            self.pivot(r, c);
        }
    }

    /// Bar nonbasic columns with positive reduced cost: they are zero on every
    /// optimal solution of the current stage.
    fn restrict_to_optimal_face(&mut self) {
        for j in 0..self.n_cols() {
            if self.allowed[j] && !self.basis.contains(&j) && self.cost[j].is_pos(self.tol) {
                self.allowed[j] = false;
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        self.rows.remove(r);
        self.rhs.remove(r);
        self.basis.remove(r);
    }
}

fn run<T: Scalar>(
    lp: &LinearProgram,
    secondary: &[(Vec<f64>, Sense)],
    tol: f64,
) -> Result<Vec<LpOutcome>, LpError> {
    // Standard-form columns for the original variables.
    let mut maps = Vec::with_capacity(lp.n_vars);
    let mut n_std = 0;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo.is_finite() {
            maps.push(VarMap::Shift(n_std, lo));
            if hi.is_finite() {
                upper_rows.push((n_std, hi - lo));
            }
            n_std += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror(n_std, hi));
            n_std += 1;
        } else {
            maps.push(VarMap::Split(n_std, n_std + 1));
            n_std += 2;
        }
    }

    // Rows as (coefficients over std columns, relation, rhs).
    enum Rel {
        Eq,
        Le,
        Ge,
    }
    let mut raw: Vec<(Vec<T>, Rel, T)> = Vec::new();
    let translate = |a: &[f64], b: f64| -> (Vec<T>, T) {
        let mut row = vec![T::zero(); n_std];
        let mut rhs = T::from_f64(b);
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let av = T::from_f64(ai);
            match maps[i] {
                VarMap::Shift(c, lo) => {
                    row[c] = row[c].add(&av);
                    rhs = rhs.sub(&av.mul(&T::from_f64(lo)));
                }
                VarMap::Mirror(c, hi) => {
                    row[c] = row[c].sub(&av);
                    rhs = rhs.sub(&av.mul(&T::from_f64(hi)));
                }
                VarMap::Split(p, n) => {
                    row[p] = row[p].add(&av);
                    row[n] = row[n].sub(&av);
                }
            }
        }
        (row, rhs)
    };
    for (a, b) in &lp.eqs {
        let (row, rhs) = translate(a, *b);
        raw.push((row, Rel::Eq, rhs));
    }
    for (a, dir, b) in &lp.ineqs {
        let (row, rhs) = translate(a, *b);
        raw.push((row, if *dir == Inequality::Le { Rel::Le } else { Rel::Ge }, rhs));
    }
    for &(c, width) in &upper_rows {
        let mut row = vec![T::zero(); n_std];
        row[c] = T::one();
        raw.push((row, Rel::Le, T::from_f64(width)));
    }

    let m = raw.len();
    let n_slack = raw.iter().filter(|r| !matches!(r.1, Rel::Eq)).count();
    // Decide which rows need an artificial column.
    let mut needs_art = Vec::with_capacity(m);
    for (_, rel, rhs) in &raw {
        let negate = rhs.is_neg(0.0);
        let slack_usable = match rel {
            Rel::Eq => false,
            Rel::Le => !negate,
            Rel::Ge => negate,
        };
        needs_art.push(!slack_usable);
    }
    let n_art = needs_art.iter().filter(|x| **x).count();
    let n_cols = n_std + n_slack + n_art;
    let art_start = n_std + n_slack;

    let mut rows = Vec::with_capacity(m);
    let mut rhs_col = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack = n_std;
    let mut art = art_start;
    for (i, (coef, rel, rhs)) in raw.into_iter().enumerate() {
        let mut row = coef;
        row.resize(n_cols, T::zero());
        let slack_col = match rel {
            Rel::Eq => None,
            Rel::Le => {
                row[slack] = T::one();
                Some(slack)
            }
            Rel::Ge => {
                row[slack] = T::one().neg();
                Some(slack)
            }
        };
        if slack_col.is_some() {
            slack += 1;
        }
        let mut rhs = rhs;
        if rhs.is_neg(0.0) {
            for v in row.iter_mut() {
                if !v.is_exactly_zero() {
                    *v = v.neg();
                }
            }
            rhs = rhs.neg();
        }
        if needs_art[i] {
            row[art] = T::one();
            basis.push(art);
            art += 1;
        } else {
            basis.push(slack_col.expect("slack basis"));
        }
        rows.push(row);
        rhs_col.push(rhs);
    }

    let mut tab = Tableau {
        rows,
        rhs: rhs_col,
        basis,
        cost: vec![T::zero(); n_cols],
        cost_rhs: T::zero(),
        allowed: vec![true; n_cols],
        tol,
        iterations: 0,
        max_iterations: 1000 + 200 * (m + n_cols),
    };

    // Phase 1.
    if n_art > 0 {
        let mut c1 = vec![T::zero(); n_cols];
        for v in c1.iter_mut().skip(art_start) {
            *v = T::one();
        }
        tab.set_cost(&c1);
        tab.optimize()?;
        let infeasibility = tab.cost_rhs.neg();
        if infeasibility.is_pos(tol) {
            return Ok(vec![LpOutcome::Infeasible]);
        }
        // Drive artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                let col = (0..art_start).find(|&j| {
                    let v = &tab.rows[r][j];
                    v.is_pos(tol) || v.is_neg(tol)
                });
                match col {
                    Some(j) => {
                        tab.pivot(r, j);
                        r += 1;
                    }
                    None => tab.remove_row(r),
                }
            } else {
                r += 1;
            }
        }
        for a in tab.allowed.iter_mut().skip(art_start) {
            *a = false;
        }
    }

    let std_cost = |c: &[f64], sense: Sense| -> Vec<T> {
        let mut out = vec![T::zero(); n_cols];
        for (i, &ci) in c.iter().enumerate() {
            let v = T::from_f64(if sense == Sense::Max { -ci } else { ci });
            match maps[i] {
                VarMap::Shift(col, _) => out[col] = v,
                VarMap::Mirror(col, _) => out[col] = v.neg(),
                VarMap::Split(p, n) => {
                    out[n] = v.neg();
                    out[p] = v;
                }
            }
        }
        out
    };

    let objectives = std::iter::once((lp.objective.as_slice(), lp.sense))
        .chain(secondary.iter().map(|(c, s)| (c.as_slice(), *s)));
    let mut outcomes = Vec::new();
    for (stage, (c, sense)) in objectives.enumerate() {
        if stage > 0 {
            tab.restrict_to_optimal_face();
        }
        tab.set_cost(&std_cost(c, sense));
        match tab.optimize()? {
            Step::Unbounded => {
                outcomes.push(LpOutcome::Unbounded);
                return Ok(outcomes);
            }
            Step::Optimal => {
                let mut x_std = vec![T::zero(); n_cols];
                for (i, &b) in tab.basis.iter().enumerate() {
                    x_std[b] = tab.rhs[i].clone();
                }
                let x: Vec<T> = maps
                    .iter()
                    .map(|m| match *m {
                        VarMap::Shift(col, lo) => T::from_f64(lo).add(&x_std[col]),
                        VarMap::Mirror(col, hi) => T::from_f64(hi).sub(&x_std[col]),
                        VarMap::Split(p, n) => x_std[p].sub(&x_std[n]),
                    })
                    .collect();
                let value = c
                    .iter()
                    .zip(&x)
                    .fold(T::zero(), |acc, (ci, xi)| acc.add(&T::from_f64(*ci).mul(xi)));
                outcomes.push(LpOutcome::Optimal {
                    value: value.to_f64(),
                    solution: x.iter().map(Scalar::to_f64).collect(),
                });
            }
        }
    }
    Ok(outcomes)
}

/// A system mixing equalities, strict and weak inequalities, for
/// [`max_slack_feasible`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrictSystem {
    pub n_vars: usize,
    pub eqs: Vec<(Vec<f64>, f64)>,
    pub strict: Vec<(Vec<f64>, Inequality, f64)>,
    pub weak: Vec<(Vec<f64>, Inequality, f64)>,
    /// Per-variable bounds; empty means all variables nonnegative.
    pub bounds: Vec<(f64, f64)>,
}

impl StrictSystem {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            ..Self::default()
        }
    }

    /// The slack program: variables `(v, eps)`, strict rows tightened by
    /// `eps`, `eps` in `[0, 1]`, maximizing `eps`.
    fn slack_program(&self) -> LinearProgram {
        let n = self.n_vars + 1;
        let widen = |a: &[f64], extra: f64| {
            let mut row = a.to_vec();
            row.push(extra);
            row
        };
        let mut objective = vec![0.0; n];
        objective[self.n_vars] = 1.0;
        let mut lp = LinearProgram::new(n).maximize(objective);
        for (a, b) in &self.eqs {
            lp.add_eq(widen(a, 0.0), *b);
        }
        for (a, dir, b) in &self.weak {
            lp.add_ineq(widen(a, 0.0), *dir, *b);
        }
        for (a, dir, b) in &self.strict {
            let row = match dir {
                Inequality::Le => widen(a, 1.0),
                Inequality::Ge => widen(a, -1.0),
            };
            lp.add_ineq(row, *dir, *b);
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            lp.set_bounds(i, lo, hi);
        }
        lp.set_bounds(self.n_vars, 0.0, 1.0);
        lp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackOutcome {
    /// Whether some point satisfies every strict inequality with margin
    /// greater than `tau_lp`.
    pub feasible_with_interior: bool,
    /// The maximizing point, or `None` when even the closure is empty.
    pub witness: Option<Vec<f64>>,
    /// Optimal margin (0 when the closure is empty).
    pub slack: f64,
}

fn slack_outcome(outcome: &LpOutcome, n_vars: usize, tol: f64) -> SlackOutcome {
    match outcome {
        LpOutcome::Optimal { solution, .. } => {
            let slack = solution[n_vars];
            SlackOutcome {
                feasible_with_interior: slack > tol,
                witness: Some(solution[..n_vars].to_vec()),
                slack,
            }
        }
        _ => SlackOutcome {
            feasible_with_interior: false,
            witness: None,
            slack: 0.0,
        },
    }
}

/// Decide whether the strict system has a point, by maximizing a common
/// margin on its strict inequalities.
pub fn max_slack_feasible(system: &StrictSystem, config: &SolverConfig) -> Result<SlackOutcome, LpError> {
    let lp = system.slack_program();
    let outcome = solve(&lp, config)?;
    Ok(slack_outcome(&outcome, system.n_vars, config.tolerance))
}

/// Optimize `objective` over the closure of `system` (strict rows relaxed to
/// weak), then maximize the strict margin over the optimal face.
///
/// The first element is the closure optimum (in the original variables); the
/// second says whether that optimum is reached at a point satisfying the
/// strict rows strictly.
pub fn optimize_with_face_slack(
    system: &StrictSystem,
    objective: &[f64],
    sense: Sense,
    config: &SolverConfig,
) -> Result<(LpOutcome, SlackOutcome), LpError> {
    let mut lp = system.slack_program();
    let mut primary = objective.to_vec();
    primary.push(0.0);
    let mut slack_objective = vec![0.0; system.n_vars];
    slack_objective.push(1.0);
    lp.set_objective(primary, sense);
    let stages = solve_lexicographic(&lp, &[(slack_objective, Sense::Max)], config)?;
    let first = match &stages[0] {
        LpOutcome::Optimal { value, solution } => LpOutcome::Optimal {
            value: *value,
            solution: solution[..system.n_vars].to_vec(),
        },
        other => other.clone(),
    };
    let slack = stages
        .get(1)
        .map(|s| slack_outcome(s, system.n_vars, config.tolerance))
        .unwrap_or(SlackOutcome {
            feasible_with_interior: false,
            witness: None,
            slack: 0.0,
        });
    Ok((first, slack))
}
