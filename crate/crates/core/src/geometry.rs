//! Patch partition of a budget arrangement and linear queries on patches.

use thiserror::Error;

use crate::lp::{self, Inequality, LpError, LpOutcome, Sense, SolverConfig, StrictSystem};
use crate::model::{
    build_vector_representation, Budget, BudgetSystem, LinearConstraint, ModelError, Patch, Relation, Sign,
    SignVector, VectorRepresentation,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("point lies on no budget plane")]
    NotOnAnyBudget,
    #[error("point has {found} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point has negative coordinate {0}")]
    NegativeCoordinate(f64),
    #[error("extremization LP did not reach an optimum ({0:?})")]
    NotOptimal(lp::LpStatus),
}

/// Enumerate every patch of every budget plane of `system`, in canonical
/// order (by budget position, then by sign vector with `- < 0 < +`).
///
/// For each home budget the sign of every other plane is chosen depth-first;
/// a partial pattern whose region has no relative interior prunes all its
/// extensions. Lower-dimensional patches are kept only when the system asks
/// for them.
pub fn enumerate_patches(system: &BudgetSystem, config: &SolverConfig) -> Result<Vec<Patch>, GeometryError> {
    let planes = system.planes();
    let mut out = Vec::new();
    for home in 0..planes.len() {
        let mut signs = vec![None; planes.len()];
        signs[home] = Some(Sign::On);
        let others: Vec<usize> = (0..planes.len()).filter(|&k| k != home).collect();
        search(system, &planes, config, home, &others, 0, &mut signs, &mut out)?;
    }
    Ok(out)
}

/// Patches of `system` as a vector representation.
pub fn vector_representation(
    system: &BudgetSystem,
    config: &SolverConfig,
) -> Result<VectorRepresentation, GeometryError> {
    let patches = enumerate_patches(system, config)?;
    Ok(build_vector_representation(patches, system)?)
}

#[allow(clippy::too_many_arguments)]
fn search(
    system: &BudgetSystem,
    planes: &[&Budget],
    config: &SolverConfig,
    home: usize,
    order: &[usize],
    depth: usize,
    signs: &mut Vec<Option<Sign>>,
    out: &mut Vec<Patch>,
) -> Result<(), GeometryError> {
    let on_normals: Vec<&[f64]> = planes
        .iter()
        .zip(signs.iter())
        .filter(|(_, s)| **s == Some(Sign::On))
        .map(|(b, _)| b.prices())
        .collect();
    let rank = rank(&on_normals, system.tolerance());
    if !system.keep_null_patches() && rank > 1 {
        return Ok(());
    }
    let region = region_system(planes, signs, system.dim());
    let slack = lp::max_slack_feasible(&region, config)?;
    if !slack.feasible_with_interior {
        return Ok(());
    }
    if depth == order.len() {
        let sign = SignVector::new(signs.iter().map(|s| s.expect("complete pattern")).collect())?;
        let point = slack.witness.expect("feasible region has a witness");
        out.push(Patch::new(home, sign, system.dim() - rank, planes, point));
        return Ok(());
    }
    let k = order[depth];
    for s in [Sign::Below, Sign::On, Sign::Above] {
        signs[k] = Some(s);
        search(system, planes, config, home, order, depth + 1, signs, out)?;
    }
    signs[k] = None;
    Ok(())
}

/// `{y >= 0 : On rows equal, Below/Above rows strict}` for a (partial) pattern.
fn region_system(planes: &[&Budget], signs: &[Option<Sign>], dim: usize) -> StrictSystem {
    let mut sys = StrictSystem::new(dim);
    for (b, s) in planes.iter().zip(signs) {
        let a = b.prices().to_vec();
        match s {
            Some(Sign::On) => sys.eqs.push((a, 1.0)),
            Some(Sign::Below) => sys.strict.push((a, Inequality::Le, 1.0)),
            Some(Sign::Above) => sys.strict.push((a, Inequality::Ge, 1.0)),
            None => {}
        }
    }
    sys
}

fn patch_system(patch: &Patch) -> StrictSystem {
    let mut sys = StrictSystem::new(patch.ambient_dim());
    for c in patch.closure() {
        push_constraint(&mut sys, c);
    }
    sys
}

fn push_constraint(sys: &mut StrictSystem, c: &LinearConstraint) {
    let a = c.normal.clone();
    match c.relation {
        Relation::Eq => sys.eqs.push((a, c.rhs)),
        Relation::Le => sys.strict.push((a, Inequality::Le, c.rhs)),
        Relation::Ge => sys.strict.push((a, Inequality::Ge, c.rhs)),
    }
}

/// Row rank by Gaussian elimination with partial pivoting; pivots below
/// `tol` (relative to the row's largest entry) count as zero.
pub(crate) fn rank(rows: &[&[f64]], tol: f64) -> usize {
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let scale = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if scale > 0.0 {
                r.iter().map(|v| v / scale).collect()
            } else {
                r.to_vec()
            }
        })
        .collect();
    let n_cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..n_cols {
        let Some(pivot) = (rank..m.len()).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())) else {
            break;
        };
        if m[pivot][col].abs() <= tol {
            continue;
        }
        m.swap(rank, pivot);
        for i in rank + 1..m.len() {
            let f = m[i][col] / m[rank][col];
            for j in col..n_cols {
                m[i][j] -= f * m[rank][j];
            }
        }
        rank += 1;
    }
    rank
}

/// Sign vector of a bundle plus the positions of all planes it lies on.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub sign: SignVector,
    pub homes: Vec<usize>,
}

/// Classify `y` against every plane of `system` at the system tolerance.
pub fn classify_point(y: &[f64], system: &BudgetSystem) -> Result<Classification, GeometryError> {
    if y.len() != system.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: system.dim(),
            found: y.len(),
        });
    }
    if let Some(&v) = y.iter().find(|v| **v < 0.0) {
        return Err(GeometryError::NegativeCoordinate(v));
    }
    let signs: Vec<Sign> = system
        .planes()
        .iter()
        .map(|b| Sign::classify(b.expenditure(y), system.tolerance()))
        .collect();
    let homes: Vec<usize> = signs
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Sign::On)
        .map(|(k, _)| k)
        .collect();
    if homes.is_empty() {
        return Err(GeometryError::NotOnAnyBudget);
    }
    Ok(Classification {
        sign: SignVector::new(signs)?,
        homes,
    })
}

/// Infimum and supremum of a linear functional over a patch.
///
/// Values are closure extrema, which coincide with the extrema over the
/// patch itself. The `*_attained` flags say whether the patch (not just its
/// closure) contains a maximizer/minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremizationResult {
    pub inf_value: f64,
    pub sup_value: f64,
    pub inf_attained: bool,
    pub sup_attained: bool,
    pub inf_witness: Vec<f64>,
    pub sup_witness: Vec<f64>,
}

pub fn extremize_linear(z: &[f64], patch: &Patch, config: &SolverConfig) -> Result<ExtremizationResult, GeometryError> {
    if z.len() != patch.ambient_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: patch.ambient_dim(),
            found: z.len(),
        });
    }
    let sys = patch_system(patch);
    let side = |sense| -> Result<(f64, bool, Vec<f64>), GeometryError> {
        let (opt, slack) = lp::optimize_with_face_slack(&sys, z, sense, config)?;
        match opt {
            LpOutcome::Optimal { value, solution } => {
                let witness = slack.witness.unwrap_or(solution);
                Ok((value, slack.feasible_with_interior, witness))
            }
            other => Err(GeometryError::NotOptimal(other.status())),
        }
    };
    let (inf_value, inf_attained, inf_witness) = side(Sense::Min)?;
    let (sup_value, sup_attained, sup_witness) = side(Sense::Max)?;
    Ok(ExtremizationResult {
        inf_value,
        sup_value: sup_value.max(inf_value),
        inf_attained,
        sup_attained,
        inf_witness,
        sup_witness,
    })
}

/// Whether the patch itself meets the hyperplane `{z.y = t}`.
pub fn hyperplane_meets_patch(
    patch: &Patch,
    z: &[f64],
    t: f64,
    config: &SolverConfig,
) -> Result<bool, GeometryError> {
    if z.len() != patch.ambient_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: patch.ambient_dim(),
            found: z.len(),
        });
    }
    let mut sys = patch_system(patch);
    sys.eqs.push((z.to_vec(), t));
    Ok(lp::max_slack_feasible(&sys, config)?.feasible_with_interior)
}

/// Vertices of a patch closure, sorted lexicographically. Tries every set
/// of `K` active constraints, so it is meant for small `K`.
pub fn closure_vertices(patch: &Patch, tol: f64) -> Vec<Vec<f64>> {
    let k = patch.ambient_dim();
    let mut rows: Vec<(Vec<f64>, f64)> = patch.closure().iter().map(|c| (c.normal.clone(), c.rhs)).collect();
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        rows.push((e, 0.0));
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..k).collect();
    if rows.len() < k {
        return vertices;
    }
    loop {
        if let Some(y) = solve_square(&rows, &subset, tol) {
            if patch.closure_contains(&y, tol) && !vertices.iter().any(|v| v.iter().zip(&y).all(|(a, b)| (a - b).abs() <= tol)) {
                vertices.push(y);
            }
        }
        let Some(i) = (0..k).rev().find(|&i| subset[i] < rows.len() - k + i) else {
            break;
        };
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    for v in &mut vertices {
        for x in v.iter_mut() {
            if x.abs() <= tol {
                *x = 0.0;
            }
        }
    }
    vertices.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    vertices
}

fn solve_square(rows: &[(Vec<f64>, f64)], subset: &[usize], tol: f64) -> Option<Vec<f64>> {
    let k = subset.len();
    let mut m: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.iter().copied().chain([rows[i].1]).collect()).collect();
    for col in 0..k {
        let pivot = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() <= tol {
            return None;
        }
        m.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| m[i][k] / m[i][i]).collect())
}
