//! Rationalizability test and sharp bounds on counterfactual demand.
//!
//! Every bound is the optimum of a linear program over type weights `nu`:
//! `nu >= 0`, `sum(nu) = 1`, and the observed rows of the augmented matrix
//! reproduce the observed probabilities. The objective weights the
//! counterfactual patch probabilities `A*_0 nu` by per-patch coefficients
//! (indicators, functional infima or suprema). Only patch probabilities are
//! identified; the distribution of demand within a counterfactual patch is
//! unrestricted, which is what makes per-patch infima and suprema sharp.

use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::lp::{self, LinearProgram, LpError, LpOutcome, Sense, SolverConfig};
use crate::model::{validate_blocks, AugmentedSystem, Block, DemandProbabilities, ModelError, RationalMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("observed probabilities are not rationalizable (l1 residual {l1_residual})")]
    InfeasibleObservables { l1_residual: f64 },
    #[error("vector has {found} entries, expected {expected}")]
    Misaligned { expected: usize, found: usize },
    #[error("lower coefficient exceeds upper coefficient at counterfactual patch {0}")]
    CoefficientOrder(usize),
    #[error("event refers to row {0}, outside the counterfactual block")]
    EventOutOfRange(usize),
    #[error("event inner set is not contained in its outer set")]
    EventNotNested,
    #[error("counterfactual distribution is invalid: {0}")]
    InvalidCounterfactual(String),
    #[error("grid is not strictly increasing at position {0}")]
    GridNotIncreasing(usize),
    #[error("bound LP ended with status {0:?}")]
    UnexpectedStatus(lp::LpStatus),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attainability {
    /// Some distribution consistent with the data reaches the bound.
    Attained,
    /// Not decided; the bound may only be approached.
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub lower: f64,
    pub upper: f64,
    pub lower_attainable: Attainability,
    pub upper_attainable: Attainability,
    /// Type weights reaching the lower bound.
    pub witness_lower: Vec<f64>,
    pub witness_upper: Vec<f64>,
}

/// Pointwise c.d.f. bounds on a grid. The curves are not themselves
/// distributions in general.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfEnvelope {
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalizabilityVerdict {
    pub rationalizable: bool,
    /// Mixing weights over the columns of `A` when rationalizable.
    pub witness: Option<Vec<f64>>,
    /// `min ||A nu - pi||_1` over the simplex (0 when rationalizable up to
    /// round-off).
    pub l1_residual: f64,
}

/// Test whether `pi = A nu` for some `nu >= 0`.
pub fn test_rationalizable(
    matrix: &RationalMatrix,
    pi: &DemandProbabilities,
    config: &SolverConfig,
) -> Result<RationalizabilityVerdict, BoundsError> {
    if pi.len() != matrix.n_rows() {
        return Err(BoundsError::Misaligned {
            expected: matrix.n_rows(),
            found: pi.len(),
        });
    }
    let rows: Vec<usize> = (0..matrix.n_rows()).collect();
    let pi = validate_blocks(pi, matrix.rows().blocks(), config.tolerance)?;
    let lp = mixture_program(matrix, matrix.rows().blocks(), &pi.values);
    match lp::solve(&lp, config)? {
        LpOutcome::Optimal { solution, .. } => {
            let fitted = matrix.apply(&solution);
            let l1_residual = fitted.iter().zip(&pi.values).map(|(a, b)| (a - b).abs()).sum();
            Ok(RationalizabilityVerdict {
                rationalizable: true,
                witness: Some(solution),
                l1_residual,
            })
        }
        LpOutcome::Infeasible => Ok(RationalizabilityVerdict {
            rationalizable: false,
            witness: None,
            l1_residual: l1_residual(matrix, &rows, &pi.values, config)?,
        }),
        LpOutcome::Unbounded => Err(BoundsError::UnexpectedStatus(lp::LpStatus::Unbounded)),
    }
}

/// `sum_{h : A[r][h] = 1} nu_h = target[r]` for each selected row.
fn row_equations(matrix: &RationalMatrix, rows: &[usize], target: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let mut eqs: Vec<(Vec<f64>, f64)> = target.iter().map(|&b| (vec![0.0; matrix.n_types()], b)).collect();
    let first = rows.first().copied().unwrap_or(0);
    for h in 0..matrix.n_types() {
        for r in matrix.column_rows(h) {
            if rows.contains(&r) {
                eqs[r - first].0[h] = 1.0;
            }
        }
    }
    eqs
}

/// Feasible set `{nu >= 0, sum(nu) = 1, A_r nu = target_r}` over the rows of
/// `blocks`. The last row of each block is implied by the others and the
/// simplex constraint, and is left out so that block sums that are one only
/// up to round-off do not make exact arithmetic infeasible.
fn mixture_program(matrix: &RationalMatrix, blocks: &[Block], target: &[f64]) -> LinearProgram {
    let rows: Vec<usize> = blocks.iter().flat_map(|b| b.start..b.start + b.len.saturating_sub(1)).collect();
    let base = blocks.first().map_or(0, |b| b.start);
    let h = matrix.n_types();
    let mut lp = LinearProgram::new(h);
    for &r in &rows {
        let a = (0..h).map(|c| if matrix.get(r, c) { 1.0 } else { 0.0 }).collect();
        lp.add_eq(a, target[r - base]);
    }
    lp.add_eq(vec![1.0; h], 1.0);
    lp
}

/// `min ||A_rows nu - target||_1` subject to `nu` in the simplex.
fn l1_residual(matrix: &RationalMatrix, rows: &[usize], target: &[f64], config: &SolverConfig) -> Result<f64, BoundsError> {
    let h = matrix.n_types();
    let m = rows.len();
    let n = h + 2 * m;
    let mut objective = vec![0.0; n];
    for c in objective.iter_mut().skip(h) {
        *c = 1.0;
    }
    let mut lp = LinearProgram::new(n).minimize(objective);
    for (i, (mut a, b)) in row_equations(matrix, rows, target).into_iter().enumerate() {
        a.resize(n, 0.0);
        a[h + i] = 1.0;
        a[h + m + i] = -1.0;
        lp.add_eq(a, b);
    }
    let mut simplex = vec![1.0; h];
    simplex.resize(n, 0.0);
    lp.add_eq(simplex, 1.0);
    match lp::solve(&lp, config)? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        other => Err(BoundsError::UnexpectedStatus(other.status())),
    }
}

/// Feasible set `{nu >= 0, sum nu = 1, A*_1 nu = pi1}` with a zero objective.
fn observed_program(aug: &AugmentedSystem, pi1: &DemandProbabilities) -> LinearProgram {
    mixture_program(aug.matrix(), aug.observed_blocks(), &pi1.values)
}

fn checked_observed(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
) -> Result<DemandProbabilities, BoundsError> {
    let expected = aug.rows_1().len();
    if pi1.len() != expected {
        return Err(BoundsError::Misaligned {
            expected,
            found: pi1.len(),
        });
    }
    Ok(validate_blocks(pi1, aug.observed_blocks(), aug.system().tolerance())?)
}

/// Fails with `InfeasibleObservables` unless the observed block admits a
/// consistent mixture of types.
pub fn check_observables(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    config: &SolverConfig,
) -> Result<Vec<f64>, BoundsError> {
    let pi1 = checked_observed(aug, pi1)?;
    match lp::solve(&observed_program(aug, &pi1), config)? {
        LpOutcome::Optimal { solution, .. } => Ok(solution),
        LpOutcome::Infeasible => {
            let rows: Vec<usize> = aug.rows_1().collect();
            let l1_residual = l1_residual(aug.matrix(), &rows, &pi1.values, config)?;
            Err(BoundsError::InfeasibleObservables { l1_residual })
        }
        LpOutcome::Unbounded => Err(BoundsError::UnexpectedStatus(lp::LpStatus::Unbounded)),
    }
}

/// Objective over type weights from per-patch coefficients on block 0.
fn type_objective(aug: &AugmentedSystem, coefficients: &[f64]) -> Vec<f64> {
    (0..aug.matrix().n_types())
        .map(|h| coefficients[aug.counterfactual_choice(h)])
        .collect()
}

struct Extremes {
    lower: f64,
    upper: f64,
    witness_lower: Vec<f64>,
    witness_upper: Vec<f64>,
}

/// `min lo . A*_0 nu` and `max hi . A*_0 nu` over the observed feasible set.
fn extremes(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    lo: &[f64],
    hi: &[f64],
    config: &SolverConfig,
) -> Result<Extremes, BoundsError> {
    check_observables(aug, pi1, config)?;
    let pi1 = checked_observed(aug, pi1)?;
    let base = observed_program(aug, &pi1);
    let run = |coefficients: &[f64], sense: Sense| -> Result<(f64, Vec<f64>), BoundsError> {
        let mut lp = base.clone();
        lp.set_objective(type_objective(aug, coefficients), sense);
        match lp::solve(&lp, config)? {
            LpOutcome::Optimal { value, solution } => Ok((value, solution)),
            other => Err(BoundsError::UnexpectedStatus(other.status())),
        }
    };
    let (lower, witness_lower) = run(lo, Sense::Min)?;
    let (upper, witness_upper) = run(hi, Sense::Max)?;
    Ok(Extremes {
        lower,
        upper,
        witness_lower,
        witness_upper,
    })
}

/// Whether `pi0` on the counterfactual patches is jointly consistent with
/// the observed `pi1`.
pub fn feasible_pi0(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    pi0: &[f64],
    config: &SolverConfig,
) -> Result<bool, BoundsError> {
    check_observables(aug, pi1, config)?;
    let n0 = aug.rows_0().len();
    if pi0.len() != n0 {
        return Err(BoundsError::Misaligned {
            expected: n0,
            found: pi0.len(),
        });
    }
    let tol = aug.system().tolerance();
    if pi0.iter().any(|v| !(*v >= -tol && *v <= 1.0 + tol)) {
        return Err(BoundsError::InvalidCounterfactual("entries must lie in [0, 1]".into()));
    }
    let sum: f64 = pi0.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(BoundsError::InvalidCounterfactual(format!("entries sum to {sum}")));
    }
    let pi1 = checked_observed(aug, pi1)?;
    let mut lp = observed_program(aug, &pi1);
    let rows: Vec<usize> = aug.rows_0().collect();
    for (a, b) in row_equations(aug.matrix(), &rows[..n0 - 1], &pi0[..n0 - 1]) {
        lp.add_eq(a, b);
    }
    Ok(lp::solve(&lp, config)?.is_optimal())
}

/// An event on the counterfactual budget, given by the counterfactual
/// patches (rows of block 0) it contains and those it meets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// Union of whole patches.
    Patches(Vec<usize>),
    /// Patches contained in the event, and patches meeting it.
    Resolved { inner: Vec<usize>, outer: Vec<usize> },
}

impl Event {
    fn sets(&self) -> (&[usize], &[usize]) {
        match self {
            Event::Patches(p) => (p, p),
            Event::Resolved { inner, outer } => (inner, outer),
        }
    }
}

fn indicator(n: usize, members: &[usize]) -> Result<Vec<f64>, BoundsError> {
    let mut v = vec![0.0; n];
    for &i in members {
        if i >= n {
            return Err(BoundsError::EventOutOfRange(i));
        }
        v[i] = 1.0;
    }
    Ok(v)
}

/// Sharp bounds on the probability that counterfactual demand falls in
/// `event`. Both bounds are attained: conditional demand inside a patch can
/// be placed anywhere in the patch.
pub fn counterfactual_event_bounds(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    event: &Event,
    config: &SolverConfig,
) -> Result<BoundResult, BoundsError> {
    let n0 = aug.rows_0().len();
    let (inner, outer) = event.sets();
    let lo = indicator(n0, inner)?;
    let hi = indicator(n0, outer)?;
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return Err(BoundsError::EventNotNested);
    }
    let e = extremes(aug, pi1, &lo, &hi, config)?;
    Ok(BoundResult {
        lower: e.lower,
        upper: e.upper,
        lower_attainable: Attainability::Attained,
        upper_attainable: Attainability::Attained,
        witness_lower: e.witness_lower,
        witness_upper: e.witness_upper,
    })
}

/// Per-patch infimum and supremum of a function on the counterfactual
/// patches, with optional flags saying whether each is attained in the patch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatchFunctional {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub lo_attained: Option<Vec<bool>>,
    pub hi_attained: Option<Vec<bool>>,
}

impl PatchFunctional {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self {
            lo,
            hi,
            ..Self::default()
        }
    }
}

/// Sharp bounds on `E g(y)` at the counterfactual budget from per-patch
/// bounds of `g`.
///
/// A bound is reported `Attained` only when every patch carrying positive
/// probability under the optimal weights attains its extremum.
pub fn counterfactual_functional_bounds(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    g: &PatchFunctional,
    config: &SolverConfig,
) -> Result<BoundResult, BoundsError> {
    let n0 = aug.rows_0().len();
    for v in [&g.lo, &g.hi] {
        if v.len() != n0 {
            return Err(BoundsError::Misaligned {
                expected: n0,
                found: v.len(),
            });
        }
    }
    for flags in [&g.lo_attained, &g.hi_attained].into_iter().flatten() {
        if flags.len() != n0 {
            return Err(BoundsError::Misaligned {
                expected: n0,
                found: flags.len(),
            });
        }
    }
    if let Some(i) = (0..n0).find(|&i| g.lo[i] > g.hi[i]) {
        return Err(BoundsError::CoefficientOrder(i));
    }
    let e = extremes(aug, pi1, &g.lo, &g.hi, config)?;
    let tol = aug.system().tolerance();
    let attainability = |flags: &Option<Vec<bool>>, nu: &[f64]| match flags {
        None => Attainability::Unknown,
        Some(flags) => {
            let mass = counterfactual_probabilities(aug, nu);
            if mass.iter().zip(flags).all(|(m, ok)| *m <= tol || *ok) {
                Attainability::Attained
            } else {
                Attainability::Unknown
            }
        }
    };
    Ok(BoundResult {
        lower: e.lower,
        upper: e.upper,
        lower_attainable: attainability(&g.lo_attained, &e.witness_lower),
        upper_attainable: attainability(&g.hi_attained, &e.witness_upper),
        witness_lower: e.witness_lower,
        witness_upper: e.witness_upper,
    })
}

/// Per-patch infima and suprema of `z . y` on the counterfactual patches.
pub fn linear_patch_functional(
    aug: &AugmentedSystem,
    z: &[f64],
    config: &SolverConfig,
) -> Result<PatchFunctional, BoundsError> {
    let mut g = PatchFunctional {
        lo_attained: Some(Vec::new()),
        hi_attained: Some(Vec::new()),
        ..PatchFunctional::default()
    };
    for patch in aug.counterfactual_patches() {
        let r = geometry::extremize_linear(z, patch, config)?;
        g.lo.push(r.inf_value);
        g.hi.push(r.sup_value);
        g.lo_attained.as_mut().unwrap().push(r.inf_attained);
        g.hi_attained.as_mut().unwrap().push(r.sup_attained);
    }
    Ok(g)
}

/// Sharp bounds on `E z . y` at the counterfactual budget.
pub fn counterfactual_mean_bounds(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    z: &[f64],
    config: &SolverConfig,
) -> Result<BoundResult, BoundsError> {
    let g = linear_patch_functional(aug, z, config)?;
    counterfactual_functional_bounds(aug, pi1, &g, config)
}

/// Indicator coefficients for `Pr(z . y <= t)`: a patch counts toward the
/// lower bound when it lies wholly in `{z . y <= t}` and toward the upper
/// bound when it meets that set.
///
/// When `t` is within tolerance of a patch infimum, the patch meets the set
/// iff it contains a minimizer of `z . y`.
pub fn cdf_coefficients(g: &PatchFunctional, t: f64, tol: f64) -> (Vec<f64>, Vec<f64>) {
    let attained = g.lo_attained.as_deref();
    let lower = g.hi.iter().map(|&m| if m <= t + tol { 1.0 } else { 0.0 }).collect();
    let upper = g
        .lo
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let meets = if m < t - tol {
                true
            } else if m > t + tol {
                false
            } else {
                attained.is_none_or(|a| a[i])
            };
            if meets {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    (lower, upper)
}

/// Pointwise sharp bounds on `Pr(z . y <= t)` for each `t` of `grid`.
pub fn counterfactual_cdf_bounds(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    z: &[f64],
    grid: &[f64],
    config: &SolverConfig,
) -> Result<CdfEnvelope, BoundsError> {
    if let Some(i) = grid.windows(2).position(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(BoundsError::GridNotIncreasing(i + 1));
    }
    let g = linear_patch_functional(aug, z, config)?;
    let tol = aug.system().tolerance();
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for &t in grid {
        let (lo, hi) = cdf_coefficients(&g, t, tol);
        let e = extremes(aug, pi1, &lo, &hi, config)?;
        lower.push(e.lower);
        upper.push(e.upper);
    }
    Ok(CdfEnvelope {
        grid: grid.to_vec(),
        lower,
        upper,
    })
}

/// Whether `value` is reached by a consistent counterfactual distribution
/// that, within each type, places conditional demand at a point valued
/// either `lo` or `hi` of the chosen patch. Every value between the lower and
/// upper bound of the matching functional passes: mixtures of consistent
/// distributions are consistent.
pub fn value_attainable(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    lo: &[f64],
    hi: &[f64],
    value: f64,
    config: &SolverConfig,
) -> Result<bool, BoundsError> {
    check_observables(aug, pi1, config)?;
    let pi1 = checked_observed(aug, pi1)?;
    let h = aug.matrix().n_types();
    let single = observed_program(aug, &pi1);
    let mut lp = LinearProgram::new(2 * h);
    for (a, b) in single.equalities() {
        let doubled: Vec<f64> = a.iter().chain(a.iter()).copied().collect();
        lp.add_eq(doubled, *b);
    }
    let target: Vec<f64> = type_objective(aug, lo)
        .into_iter()
        .chain(type_objective(aug, hi))
        .collect();
    lp.add_eq(target, value);
    Ok(lp::solve(&lp, config)?.is_optimal())
}

/// `A*_0 nu`: counterfactual patch probabilities implied by type weights.
pub fn counterfactual_probabilities(aug: &AugmentedSystem, nu: &[f64]) -> Vec<f64> {
    let all = aug.matrix().apply(nu);
    all[aug.rows_0()].to_vec()
}

/// `A*_1 nu`: observed patch probabilities implied by type weights.
pub fn observed_probabilities(aug: &AugmentedSystem, nu: &[f64]) -> DemandProbabilities {
    let all = aug.matrix().apply(nu);
    DemandProbabilities::exact(all[aug.rows_1()].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Budget, BudgetSystem};
    use crate::rational::{self, DEFAULT_MAX_TYPES};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn two_budgets() -> BudgetSystem {
        BudgetSystem::new(
            2,
            vec![
                Budget::new("b1", vec![1.0, 2.0]).unwrap(),
                Budget::new("b2", vec![2.0, 1.0]).unwrap(),
            ],
        )
        .unwrap()
    }

    fn worked() -> AugmentedSystem {
        let sys = two_budgets()
            .with_counterfactual(Budget::new("b0", vec![1.2, 1.2]).unwrap())
            .unwrap();
        rational::build_augmented(&sys, &cfg(), DEFAULT_MAX_TYPES).unwrap()
    }

    fn worked_pi1() -> DemandProbabilities {
        DemandProbabilities::exact(vec![0.5, 0.3, 0.2, 0.3, 0.4, 0.3])
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn rationalizable_example_has_unique_witness() {
        for config in [cfg(), SolverConfig::exact()] {
            let a = rational::rational_matrix(&two_budgets(), &config, DEFAULT_MAX_TYPES).unwrap();
            let pi = DemandProbabilities::exact(vec![0.5, 0.5, 0.3, 0.7]);
            let v = test_rationalizable(&a, &pi, &config).unwrap();
            assert!(v.rationalizable);
            let nu = v.witness.unwrap();
            for (got, want) in nu.iter().zip([0.5, 0.3, 0.2]) {
                assert!(close(*got, want), "{nu:?}");
            }
            assert!(v.l1_residual < 1e-12);
        }
    }

    #[test]
    fn exact_mode_tolerates_rounded_block_sums() {
        let aug = worked();
        let third = 0.333333333333;
        let pi1 = DemandProbabilities::exact(vec![third, third, third, 0.3, 0.4, 0.3]);
        assert!(check_observables(&aug, &pi1, &cfg()).is_ok());
        assert!(check_observables(&aug, &pi1, &SolverConfig::exact()).is_ok());
        let a = rational::rational_matrix(&two_budgets(), &cfg(), DEFAULT_MAX_TYPES).unwrap();
        let pi = DemandProbabilities::exact(vec![0.1 + 0.2, 0.7, 0.5, 0.5]);
        assert!(test_rationalizable(&a, &pi, &SolverConfig::exact()).unwrap().rationalizable);
    }

    #[test]
    fn non_rationalizable_example_has_positive_residual() {
        let a = rational::rational_matrix(&two_budgets(), &cfg(), DEFAULT_MAX_TYPES).unwrap();
        let pi = DemandProbabilities::exact(vec![0.6, 0.4, 0.5, 0.5]);
        let v = test_rationalizable(&a, &pi, &cfg()).unwrap();
        assert!(!v.rationalizable);
        assert!(v.witness.is_none());
        // Best simplex fit leaves 0.1 unexplained on two rows.
        assert!(close(v.l1_residual, 0.2), "{}", v.l1_residual);
    }

    #[test]
    fn single_column_is_rationalizable_by_unit_weight() {
        let a = rational::rational_matrix(&two_budgets(), &cfg(), DEFAULT_MAX_TYPES).unwrap();
        for h in 0..a.n_types() {
            let pi: Vec<f64> = a.to_dense().iter().map(|row| f64::from(row[h])).collect();
            let v = test_rationalizable(&a, &DemandProbabilities::exact(pi), &cfg()).unwrap();
            let nu = v.witness.unwrap();
            for (k, w) in nu.iter().enumerate() {
                assert!(close(*w, if k == h { 1.0 } else { 0.0 }));
            }
        }
    }

    #[test]
    fn misaligned_pi_is_an_error() {
        let a = rational::rational_matrix(&two_budgets(), &cfg(), DEFAULT_MAX_TYPES).unwrap();
        let pi = DemandProbabilities::exact(vec![1.0, 0.0]);
        assert!(matches!(
            test_rationalizable(&a, &pi, &cfg()),
            Err(BoundsError::Misaligned { expected: 4, found: 2 })
        ));
    }

    #[test]
    fn whole_budget_event_is_certain() {
        let aug = worked();
        let r = counterfactual_event_bounds(&aug, &worked_pi1(), &Event::Patches(vec![0, 1, 2]), &cfg()).unwrap();
        assert!(close(r.lower, 1.0) && close(r.upper, 1.0));
    }

    #[test]
    fn constant_functional_is_one() {
        let aug = worked();
        let g = PatchFunctional::new(vec![1.0; 3], vec![1.0; 3]);
        let r = counterfactual_functional_bounds(&aug, &worked_pi1(), &g, &cfg()).unwrap();
        assert!(close(r.lower, 1.0) && close(r.upper, 1.0));
        assert_eq!(r.lower_attainable, Attainability::Unknown);
    }

    #[test]
    fn indicator_functional_matches_event() {
        let aug = worked();
        for i in 0..3 {
            let mut ind = vec![0.0; 3];
            ind[i] = 1.0;
            let g = PatchFunctional::new(ind.clone(), ind);
            let f = counterfactual_functional_bounds(&aug, &worked_pi1(), &g, &cfg()).unwrap();
            let e = counterfactual_event_bounds(&aug, &worked_pi1(), &Event::Patches(vec![i]), &cfg()).unwrap();
            assert_eq!((f.lower, f.upper), (e.lower, e.upper));
        }
    }

    #[test]
    fn budget_identity_mean_is_one() {
        let aug = worked();
        let r = counterfactual_mean_bounds(&aug, &worked_pi1(), &[1.2, 1.2], &cfg()).unwrap();
        assert!(close(r.lower, 1.0) && close(r.upper, 1.0));
        assert_eq!(r.lower_attainable, Attainability::Attained);
    }

    #[test]
    fn coefficient_order_checked() {
        let aug = worked();
        let g = PatchFunctional::new(vec![0.0, 2.0, 0.0], vec![1.0, 1.0, 1.0]);
        assert_eq!(
            counterfactual_functional_bounds(&aug, &worked_pi1(), &g, &cfg()),
            Err(BoundsError::CoefficientOrder(1))
        );
    }

    #[test]
    fn infeasible_observables_reported_everywhere() {
        let aug = worked();
        // All mass on the two WARP-violating extreme patches.
        let pi1 = DemandProbabilities::exact(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let err = counterfactual_event_bounds(&aug, &pi1, &Event::Patches(vec![0]), &cfg()).unwrap_err();
        assert!(matches!(err, BoundsError::InfeasibleObservables { l1_residual } if l1_residual > 0.0));
        assert!(matches!(
            counterfactual_mean_bounds(&aug, &pi1, &[1.0, 0.0], &cfg()),
            Err(BoundsError::InfeasibleObservables { .. })
        ));
        assert!(matches!(
            counterfactual_cdf_bounds(&aug, &pi1, &[1.0, 0.0], &[0.2], &cfg()),
            Err(BoundsError::InfeasibleObservables { .. })
        ));
        assert!(matches!(
            feasible_pi0(&aug, &pi1, &[1.0, 0.0, 0.0], &cfg()),
            Err(BoundsError::InfeasibleObservables { .. })
        ));
    }

    #[test]
    fn feasible_pi0_accepts_implied_and_rejects_excess() {
        let aug = worked();
        let nu = check_observables(&aug, &worked_pi1(), &cfg()).unwrap();
        let pi0 = counterfactual_probabilities(&aug, &nu);
        assert!(feasible_pi0(&aug, &worked_pi1(), &pi0, &cfg()).unwrap());
        let r = counterfactual_event_bounds(&aug, &worked_pi1(), &Event::Patches(vec![1]), &cfg()).unwrap();
        if r.upper < 1.0 - 1e-6 {
            let excess = (r.upper + 1.0) / 2.0;
            let rest = (1.0 - excess) / 2.0;
            assert!(!feasible_pi0(&aug, &worked_pi1(), &[rest, excess, rest], &cfg()).unwrap());
        }
    }

    #[test]
    fn grid_must_increase() {
        let aug = worked();
        assert_eq!(
            counterfactual_cdf_bounds(&aug, &worked_pi1(), &[1.0, 0.0], &[0.2, 0.2], &cfg()),
            Err(BoundsError::GridNotIncreasing(1))
        );
    }

    #[test]
    fn cdf_extremes_and_monotonicity() {
        let aug = worked();
        let grid: Vec<f64> = (-2..=12).map(|i| f64::from(i) * 0.1).collect();
        let env = counterfactual_cdf_bounds(&aug, &worked_pi1(), &[1.0, 0.0], &grid, &cfg()).unwrap();
        assert_eq!((env.lower[0], env.upper[0]), (0.0, 0.0));
        let last = grid.len() - 1;
        assert!(close(env.lower[last], 1.0) && close(env.upper[last], 1.0));
        for i in 0..grid.len() {
            assert!(env.lower[i] <= env.upper[i] + 1e-9);
            if i > 0 {
                assert!(env.lower[i] >= env.lower[i - 1] - 1e-9);
                assert!(env.upper[i] >= env.upper[i - 1] - 1e-9);
            }
        }
    }

    #[test]
    fn boundary_coefficient_agrees_with_hyperplane_test() {
        let aug = worked();
        let z = [1.0, 0.0];
        let g = linear_patch_functional(&aug, &z, &cfg()).unwrap();
        for (i, patch) in aug.counterfactual_patches().iter().enumerate() {
            let meets = geometry::hyperplane_meets_patch(patch, &z, g.lo[i], &cfg()).unwrap();
            assert_eq!(meets, g.lo_attained.as_ref().unwrap()[i]);
        }
    }

    #[test]
    fn midpoint_of_event_bound_is_attainable() {
        let aug = worked();
        let r = counterfactual_event_bounds(&aug, &worked_pi1(), &Event::Patches(vec![1]), &cfg()).unwrap();
        let ind = [0.0, 1.0, 0.0];
        let mid = (r.lower + r.upper) / 2.0;
        assert!(value_attainable(&aug, &worked_pi1(), &ind, &ind, mid, &cfg()).unwrap());
        assert!(!value_attainable(&aug, &worked_pi1(), &ind, &ind, r.upper + 0.01, &cfg()).unwrap());
    }
}
