//! Brute-force reference implementations for cross-checking the main
//! pipeline on small instances.
//!
//! Nothing here uses the type enumeration or the bound LPs: types come from
//! an odometer over all patch combinations with an exhaustive cycle search,
//! bounds from enumerating the basic solutions of the observed system, and
//! patch coverage from random sampling on each budget.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::lp::SolverConfig;
use crate::model::{AugmentedSystem, BudgetSystem, DemandProbabilities, ModelError, RationalMatrix, Sign, SignVector, VectorRepresentation};

pub const MAX_COMBINATIONS: u128 = 10_000_000;
pub const MAX_VERTEX_TYPES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{size} patch combinations exceed the oracle cap of {cap}")]
    TooManyCombinations { size: u128, cap: u128 },
    #[error("{types} types exceed the vertex enumeration cap of {cap}")]
    TooManyTypes { types: usize, cap: usize },
    #[error("objective has {found} entries, expected {expected}")]
    Misaligned { expected: usize, found: usize },
    #[error("observed system has no nonnegative solution")]
    Infeasible,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// All rational types, found by trying every patch combination.
pub fn brute_force_types(rep: &VectorRepresentation) -> Result<RationalMatrix, OracleError> {
    let sizes: Vec<usize> = rep.blocks().iter().map(|b| b.len).collect();
    let size = sizes.iter().map(|&s| s as u128).product::<u128>();
    if size > MAX_COMBINATIONS {
        return Err(OracleError::TooManyCombinations {
            size,
            cap: MAX_COMBINATIONS,
        });
    }
    let mut columns = Vec::new();
    if sizes.iter().all(|&s| s > 0) {
        let mut digits = vec![0usize; sizes.len()];
        loop {
            if consistent(rep, &digits) {
                columns.push(digits.clone());
            }
            let mut i = digits.len();
            loop {
                if i == 0 {
                    return Ok(RationalMatrix::new(rep.clone(), columns)?);
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < sizes[i] {
                    break;
                }
                digits[i] = 0;
            }
        }
    }
    Ok(RationalMatrix::new(rep.clone(), columns)?)
}

/// No directed cycle of revealed preference passes through a strict edge.
fn consistent(rep: &VectorRepresentation, digits: &[usize]) -> bool {
    let n = digits.len();
    let patches: Vec<_> = digits
        .iter()
        .enumerate()
        .map(|(b, &i)| &rep.block_patches(b)[i])
        .collect();
    let homes: Vec<usize> = patches.iter().map(|p| p.home()).collect();
    // weight[a][b]: 0 none, 1 weak, 2 strict; choice a is revealed preferred
    // to choice b when b was affordable on a's budget.
    let mut weight = vec![vec![0u8; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                weight[a][b] = match patches[b].sign().get(homes[a]) {
                    Sign::Below => 2,
                    Sign::On => 1,
                    Sign::Above => 0,
                };
            }
        }
    }
    (0..n).all(|start| {
        let mut on_path = vec![false; n];
        on_path[start] = true;
        !strict_cycle_from(&weight, start, start, false, &mut on_path)
    })
}

/// Walks every simple path from `start` through nodes numbered above it.
fn strict_cycle_from(weight: &[Vec<u8>], start: usize, at: usize, strict: bool, on_path: &mut [bool]) -> bool {
    for next in 0..weight.len() {
        let w = weight[at][next];
        if w == 0 {
            continue;
        }
        let strict = strict || w == 2;
        if next == start {
            if strict {
                return true;
            }
        } else if next > start && !on_path[next] {
            on_path[next] = true;
            let found = strict_cycle_from(weight, start, next, strict, on_path);
            on_path[next] = false;
            if found {
                return true;
            }
        }
    }
    false
}

/// Every vertex of `{nu >= 0 : A*_1 nu = pi1, sum(nu) = 1}`.
///
/// Each vertex is a basic solution, so it suffices to solve the system on
/// every set of `rank` columns and keep the nonnegative solutions.
pub fn feasible_vertices(aug: &AugmentedSystem, pi1: &DemandProbabilities) -> Result<Vec<Vec<f64>>, OracleError> {
    let matrix = aug.matrix();
    let h = matrix.n_types();
    if h > MAX_VERTEX_TYPES {
        return Err(OracleError::TooManyTypes {
            types: h,
            cap: MAX_VERTEX_TYPES,
        });
    }
    let rows_1 = aug.rows_1();
    if pi1.len() != rows_1.len() {
        return Err(OracleError::Misaligned {
            expected: rows_1.len(),
            found: pi1.len(),
        });
    }
    let mut system: Vec<Vec<f64>> = rows_1
        .clone()
        .zip(&pi1.values)
        .map(|(r, &b)| {
            let mut row: Vec<f64> = (0..h).map(|c| if matrix.get(r, c) { 1.0 } else { 0.0 }).collect();
            row.push(b);
            row
        })
        .collect();
    let mut ones = vec![1.0; h];
    ones.push(1.0);
    system.push(ones);

    let tol = 1e-9;
    let (reduced, rank) = row_reduce(system, h, tol);
    if reduced[rank..].iter().any(|row| row[h].abs() > tol) {
        return Err(OracleError::Infeasible);
    }
    let reduced = &reduced[..rank];

    let mut vertices = Vec::new();
    let mut subset: Vec<usize> = (0..rank).collect();
    loop {
        if let Some(x) = solve_subset(reduced, &subset, h, tol) {
            if x.iter().all(|&v| v >= -tol) {
                let mut nu = vec![0.0; h];
                for (&c, &v) in subset.iter().zip(&x) {
                    nu[c] = v.max(0.0);
                }
                let seen = vertices
                    .iter()
                    .any(|w: &Vec<f64>| w.iter().zip(&nu).all(|(a, b)| (a - b).abs() <= tol));
                if !seen {
                    vertices.push(nu);
                }
            }
        }
        if !next_subset(&mut subset, h) {
            break;
        }
    }
    if vertices.is_empty() {
        return Err(OracleError::Infeasible);
    }
    Ok(vertices)
}

/// Extremum of `objective . A*_0 nu` over the vertices of the observed
/// feasible set. `maximize` selects the sense.
pub fn vertex_enumerate_bounds(
    aug: &AugmentedSystem,
    pi1: &DemandProbabilities,
    objective: &[f64],
    maximize: bool,
) -> Result<f64, OracleError> {
    let vertices = feasible_vertices(aug, pi1)?;
    vertex_extremum(aug, &vertices, objective, maximize)
}

/// As `vertex_enumerate_bounds`, reusing precomputed vertices.
pub fn vertex_extremum(
    aug: &AugmentedSystem,
    vertices: &[Vec<f64>],
    objective: &[f64],
    maximize: bool,
) -> Result<f64, OracleError> {
    let rows_0 = aug.rows_0();
    if objective.len() != rows_0.len() {
        return Err(OracleError::Misaligned {
            expected: rows_0.len(),
            found: objective.len(),
        });
    }
    let matrix = aug.matrix();
    let values = vertices.iter().map(|nu| {
        let mut v = 0.0;
        for (c, &w) in nu.iter().enumerate() {
            for (i, &o) in objective.iter().enumerate() {
                if matrix.get(rows_0.start + i, c) {
                    v += o * w;
                }
            }
        }
        v
    });
    let best = if maximize {
        values.fold(f64::NEG_INFINITY, f64::max)
    } else {
        values.fold(f64::INFINITY, f64::min)
    };
    Ok(best)
}

/// Gauss-Jordan elimination on the first `n` columns of an augmented
/// matrix. Returns the reduced rows (pivot rows first) and the rank.
fn row_reduce(mut m: Vec<Vec<f64>>, n: usize, tol: f64) -> (Vec<Vec<f64>>, usize) {
    let mut rank = 0;
    for col in 0..n {
        let Some(pivot) = (rank..m.len()).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())) else {
            break;
        };
        if m[pivot][col].abs() <= tol {
            continue;
        }
        m.swap(rank, pivot);
        let p = m[rank][col];
        for v in m[rank].iter_mut() {
            *v /= p;
        }
        for r in 0..m.len() {
            if r != rank {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..=n {
                        m[r][c] -= f * m[rank][c];
                    }
                }
            }
        }
        rank += 1;
    }
    (m, rank)
}

/// Solves the square system on the chosen columns; `None` when singular.
fn solve_subset(rows: &[Vec<f64>], subset: &[usize], n: usize, tol: f64) -> Option<Vec<f64>> {
    let k = subset.len();
    let square: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| subset.iter().map(|&c| row[c]).chain([row[n]]).collect())
        .collect();
    let (reduced, rank) = row_reduce(square, k, tol);
    (rank == k).then(|| reduced.iter().map(|row| row[k]).collect())
}

/// Advances to the next `k`-subset of `0..n` in lexicographic order.
fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    pub samples_per_budget: usize,
    /// Sampled sign vectors absent from the enumerated patches, by budget id.
    pub extraneous: Vec<(String, SignVector)>,
    /// Enumerated full-dimensional patches that no sample hit.
    pub missing: Vec<(String, SignVector)>,
}

impl CoverReport {
    pub fn is_clean(&self) -> bool {
        self.extraneous.is_empty() && self.missing.is_empty()
    }
}

/// Samples `n` points uniformly on every budget plane and compares their
/// sign vectors with the enumerated patches.
///
/// Points within ten tolerances of another budget plane are redrawn, so
/// every sample lands in the relative interior of a full-dimensional patch.
pub fn sample_patch_cover(system: &BudgetSystem, n: usize, seed: u64) -> Result<CoverReport, OracleError> {
    let rep = geometry::vector_representation(system, &SolverConfig::default())?;
    let planes = system.planes();
    let tol = system.tolerance();
    let k = system.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CoverReport {
        samples_per_budget: n,
        extraneous: Vec::new(),
        missing: Vec::new(),
    };
    for (b, block) in rep.blocks().iter().enumerate() {
        let patches = rep.block_patches(b);
        let Some(home) = patches.first().map(|p| p.home()) else {
            continue;
        };
        let prices = planes[home].prices();
        let mut seen = BTreeSet::new();
        for _ in 0..n {
            let signs = loop {
                let w: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = w.iter().sum();
                let y: Vec<f64> = w.iter().zip(prices).map(|(wi, pi)| wi / total / pi).collect();
                let values: Vec<f64> = planes.iter().map(|p| p.expenditure(&y) - 1.0).collect();
                let near = values.iter().enumerate().any(|(j, v)| j != home && v.abs() <= 10.0 * tol);
                if !near {
                    break values
                        .iter()
                        .enumerate()
                        .map(|(j, &v)| {
                            if j == home {
                                Sign::On
                            } else if v < 0.0 {
                                Sign::Below
                            } else {
                                Sign::Above
                            }
                        })
                        .collect::<Vec<_>>();
                }
            };
            seen.insert(SignVector::new(signs)?);
        }
        let enumerated: BTreeSet<&SignVector> = patches.iter().map(|p| p.sign()).collect();
        for s in &seen {
            if !enumerated.contains(s) {
                report.extraneous.push((block.id.clone(), s.clone()));
            }
        }
        for p in patches {
            if p.dimension() + 1 == k && !seen.contains(p.sign()) {
                report.missing.push((block.id.clone(), p.sign().clone()));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{self, Event};
    use crate::model::Budget;
    use crate::rational::{self, DEFAULT_MAX_TYPES};

    fn budget(id: &str, p: &[f64]) -> Budget {
        Budget::new(id, p.to_vec()).unwrap()
    }

    fn two_budgets() -> BudgetSystem {
        BudgetSystem::new(2, vec![budget("b1", &[1.0, 2.0]), budget("b2", &[2.0, 1.0])]).unwrap()
    }

    fn worked() -> AugmentedSystem {
        let sys = two_budgets().with_counterfactual(budget("b0", &[1.2, 1.2])).unwrap();
        rational::build_augmented(&sys, &SolverConfig::default(), DEFAULT_MAX_TYPES).unwrap()
    }

    fn worked_pi1() -> DemandProbabilities {
        DemandProbabilities::exact(vec![0.5, 0.3, 0.2, 0.3, 0.4, 0.3])
    }

    #[test]
    fn brute_force_matches_on_two_budgets() {
        let rep = geometry::vector_representation(&two_budgets(), &SolverConfig::default()).unwrap();
        let brute = brute_force_types(&rep).unwrap();
        assert_eq!(brute.columns(), [vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn brute_force_matches_augmented() {
        let aug = worked();
        let brute = brute_force_types(aug.rep()).unwrap();
        assert_eq!(brute.columns(), aug.matrix().columns());
    }

    #[test]
    fn single_budget_has_one_type_per_patch() {
        let sys = BudgetSystem::new(2, vec![budget("b1", &[1.0, 2.0])]).unwrap();
        let rep = geometry::vector_representation(&sys, &SolverConfig::default()).unwrap();
        assert_eq!(brute_force_types(&rep).unwrap().columns(), [vec![0]]);
    }

    #[test]
    fn subsets_enumerate_binomially() {
        let mut s = vec![0, 1];
        let mut count = 1;
        while next_subset(&mut s, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(s, [3, 4]);
    }

    #[test]
    fn all_ones_objective_is_one() {
        let aug = worked();
        for maximize in [false, true] {
            let v = vertex_enumerate_bounds(&aug, &worked_pi1(), &[1.0; 3], maximize).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn middle_patch_matches_event_bounds() {
        let aug = worked();
        let ind = [0.0, 1.0, 0.0];
        let lo = vertex_enumerate_bounds(&aug, &worked_pi1(), &ind, false).unwrap();
        let hi = vertex_enumerate_bounds(&aug, &worked_pi1(), &ind, true).unwrap();
        let r = bounds::counterfactual_event_bounds(&aug, &worked_pi1(), &Event::Patches(vec![1]), &SolverConfig::default()).unwrap();
        assert!((r.lower - lo).abs() < 1e-9 && (r.upper - hi).abs() < 1e-9, "{r:?} vs [{lo}, {hi}]");
    }

    #[test]
    fn no_observations_single_patch() {
        let sys = BudgetSystem::new(2, vec![]).unwrap().with_counterfactual(budget("b0", &[1.0, 2.0])).unwrap();
        let aug = rational::build_augmented(&sys, &SolverConfig::default(), DEFAULT_MAX_TYPES).unwrap();
        let pi1 = DemandProbabilities::exact(vec![]);
        assert_eq!(vertex_enumerate_bounds(&aug, &pi1, &[0.7], true).unwrap(), 0.7);
    }

    #[test]
    fn infeasible_observations_rejected() {
        let aug = worked();
        let pi1 = DemandProbabilities::exact(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(feasible_vertices(&aug, &pi1), Err(OracleError::Infeasible));
    }

    #[test]
    fn cover_two_budgets_is_clean_and_deterministic() {
        let report = sample_patch_cover(&two_budgets(), 10_000, 7).unwrap();
        assert!(report.is_clean(), "{report:?}");
        assert_eq!(report, sample_patch_cover(&two_budgets(), 10_000, 7).unwrap());
    }

    #[test]
    fn cover_single_budget() {
        let sys = BudgetSystem::new(3, vec![budget("b1", &[1.0, 2.0, 3.0])]).unwrap();
        let report = sample_patch_cover(&sys, 100, 1).unwrap();
        assert!(report.is_clean());
    }
}
