//! Rational demand types: patch selections (one per budget) whose revealed
//! preference graph has no cycle through a strict edge.
//!
//! For a selection, budget `j` is revealed preferred to budget `k` when the
//! patch chosen on `k` is affordable at `j`'s prices: weakly when that patch
//! lies on plane `j` (sign `0` at `j`), strictly when it lies below it (sign
//! `-`). Only signs matter, never coordinates. A selection is rational iff no
//! strongly connected component contains a strict edge; cycles made purely of
//! weak edges are ties and are allowed.

use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::lp::SolverConfig;
use crate::model::{AugmentedSystem, BudgetSystem, ModelError, RationalMatrix, Sign, VectorRepresentation};

/// Default cap on the number of enumerated types.
pub const DEFAULT_MAX_TYPES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RationalError {
    #[error("more than {cap} rational types; raise the cap to continue")]
    ColumnLimitExceeded { cap: usize },
    #[error("assignment covers {found} of {expected} budgets")]
    IncompleteAssignment { expected: usize, found: usize },
    #[error("assignment selects patch {index} in block {block}, which has {len} patches")]
    PatchOutOfRange { block: usize, index: usize, len: usize },
    #[error("system has no counterfactual budget")]
    MissingCounterfactual,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One candidate column: a block-local patch index per budget, possibly
/// partial during search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchAssignment {
    pub chosen: Vec<Option<usize>>,
}

impl PatchAssignment {
    pub fn complete(chosen: Vec<usize>) -> Self {
        Self {
            chosen: chosen.into_iter().map(Some).collect(),
        }
    }
}

/// Revealed preference relation among budgets induced by an assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceGraph {
    pub n_nodes: usize,
    pub weak_edges: Vec<(usize, usize)>,
    pub strict_edges: Vec<(usize, usize)>,
}

impl PreferenceGraph {
    /// Edges among the assigned budgets only.
    pub fn from_assignment(rep: &VectorRepresentation, chosen: &[Option<usize>]) -> Self {
        let mut weak_edges = Vec::new();
        let mut strict_edges = Vec::new();
        for (k, choice) in chosen.iter().enumerate() {
            let Some(i) = choice else { continue };
            let patch = &rep.block_patches(k)[*i];
            for (j, other) in chosen.iter().enumerate() {
                if j == k || other.is_none() {
                    continue;
                }
                match patch.sign().get(j) {
                    Sign::On => weak_edges.push((j, k)),
                    Sign::Below => strict_edges.push((j, k)),
                    Sign::Above => {}
                }
            }
        }
        Self {
            n_nodes: chosen.len(),
            weak_edges,
            strict_edges,
        }
    }

    /// Whether some strongly connected component contains a strict edge.
    pub fn has_strict_cycle(&self) -> bool {
        if self.strict_edges.is_empty() {
            return false;
        }
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(u, v) in self.weak_edges.iter().chain(&self.strict_edges) {
            adj[u].push(v);
        }
        let comp = tarjan_scc(&adj);
        self.strict_edges.iter().any(|&(u, v)| comp[u] == comp[v])
    }
}

/// Component id per node.
fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<usize> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        next_comp: usize,
    }

    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next_index);
        s.low[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for &w in &s.adj[v] {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            loop {
                let w = s.stack.pop().expect("stack holds v");
                s.on_stack[w] = false;
                s.comp[w] = s.next_comp;
                if w == v {
                    break;
                }
            }
            s.next_comp += 1;
        }
    }

    let n = adj.len();
    let mut s = State {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![usize::MAX; n],
        next_index: 0,
        next_comp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}

/// GARP at patch level for a complete assignment.
pub fn is_rational(assignment: &PatchAssignment, rep: &VectorRepresentation) -> Result<bool, RationalError> {
    let found = assignment.chosen.iter().filter(|c| c.is_some()).count();
    if assignment.chosen.len() != rep.n_blocks() || found != rep.n_blocks() {
        return Err(RationalError::IncompleteAssignment {
            expected: rep.n_blocks(),
            found,
        });
    }
    for (block, c) in assignment.chosen.iter().enumerate() {
        let index = c.expect("complete");
        let len = rep.blocks()[block].len;
        if index >= len {
            return Err(RationalError::PatchOutOfRange { block, index, len });
        }
    }
    Ok(!PreferenceGraph::from_assignment(rep, &assignment.chosen).has_strict_cycle())
}

/// All rational types of `rep`, in canonical column order.
///
/// Budgets are assigned depth-first in block order; a partial assignment
/// whose induced graph already has a strict cycle is abandoned.
pub fn enumerate_types(rep: &VectorRepresentation, max_types: usize) -> Result<RationalMatrix, RationalError> {
    let mut chosen = vec![None; rep.n_blocks()];
    let mut columns = Vec::new();
    extend(rep, 0, &mut chosen, &mut columns, max_types)?;
    Ok(RationalMatrix::new(rep.clone(), columns)?)
}

fn extend(
    rep: &VectorRepresentation,
    block: usize,
    chosen: &mut Vec<Option<usize>>,
    columns: &mut Vec<Vec<usize>>,
    max_types: usize,
) -> Result<(), RationalError> {
    if block == rep.n_blocks() {
        if columns.len() == max_types {
            return Err(RationalError::ColumnLimitExceeded { cap: max_types });
        }
        columns.push(chosen.iter().map(|c| c.expect("complete")).collect());
        return Ok(());
    }
    for i in 0..rep.blocks()[block].len {
        chosen[block] = Some(i);
        if !PreferenceGraph::from_assignment(rep, chosen).has_strict_cycle() {
            extend(rep, block + 1, chosen, columns, max_types)?;
        }
    }
    chosen[block] = None;
    Ok(())
}

/// Patches and rational types of `system` in one call.
pub fn rational_matrix(
    system: &BudgetSystem,
    config: &SolverConfig,
    max_types: usize,
) -> Result<RationalMatrix, RationalError> {
    let rep = geometry::vector_representation(system, config)?;
    enumerate_types(&rep, max_types)
}

/// Patches and types of the counterfactual-augmented system, with the row
/// split and the map from unrefined observed patches to their refinements.
pub fn build_augmented(
    system: &BudgetSystem,
    config: &SolverConfig,
    max_types: usize,
) -> Result<AugmentedSystem, RationalError> {
    if system.counterfactual().is_none() {
        return Err(RationalError::MissingCounterfactual);
    }
    let matrix = rational_matrix(system, config, max_types)?;
    let observed = geometry::vector_representation(&system.observed_only(), config)?;
    let rep = matrix.rows();
    let refinement_map = (0..observed.len())
        .map(|row| {
            let block = observed.block_of_row(row);
            let sign = observed.patch(row).sign().signs();
            rep.blocks()[block + 1]
                .range()
                .filter(|&r| &rep.patch(r).sign().signs()[1..] == sign)
                .collect()
        })
        .collect();
    Ok(AugmentedSystem::new(system.clone(), matrix, observed, refinement_map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Budget;

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

    fn augmented() -> BudgetSystem {
        two_budgets()
            .with_counterfactual(Budget::new("b0", vec![1.2, 1.2]).unwrap())
            .unwrap()
    }

    #[test]
    fn warp_violation_detected() {
        let rep = geometry::vector_representation(&two_budgets(), &cfg()).unwrap();
        // (0-) on budget 1 and (-0) on budget 2: each strictly cheaper at the other's prices.
        assert!(!is_rational(&PatchAssignment::complete(vec![0, 0]), &rep).unwrap());
        // (0+) and (+0): no edges.
        assert!(is_rational(&PatchAssignment::complete(vec![1, 1]), &rep).unwrap());
        let g = PreferenceGraph::from_assignment(&rep, &[Some(1), Some(1)]);
        assert!(g.weak_edges.is_empty() && g.strict_edges.is_empty());
    }

    #[test]
    fn single_budget_always_rational() {
        let sys = BudgetSystem::new(2, vec![Budget::new("b", vec![1.0, 3.0]).unwrap()]).unwrap();
        let a = rational_matrix(&sys, &cfg(), DEFAULT_MAX_TYPES).unwrap();
        assert_eq!(a.n_types(), 1);
        assert_eq!(a.to_dense(), vec![vec![1]]);
    }

    #[test]
    fn incomplete_assignment_rejected() {
        let rep = geometry::vector_representation(&two_budgets(), &cfg()).unwrap();
        let partial = PatchAssignment {
            chosen: vec![Some(0), None],
        };
        assert!(matches!(
            is_rational(&partial, &rep),
            Err(RationalError::IncompleteAssignment { .. })
        ));
    }

    #[test]
    fn two_budget_types() {
        let a = rational_matrix(&two_budgets(), &cfg(), DEFAULT_MAX_TYPES).unwrap();
        assert_eq!(a.n_types(), 3);
        assert_eq!(a.columns(), &[vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn column_cap_enforced() {
        assert_eq!(
            rational_matrix(&two_budgets(), &cfg(), 2),
            Err(RationalError::ColumnLimitExceeded { cap: 2 })
        );
    }

    #[test]
    fn weak_cycle_is_allowed_strict_cycle_is_not() {
        let g = PreferenceGraph {
            n_nodes: 3,
            weak_edges: vec![(0, 1), (1, 2), (2, 0)],
            strict_edges: vec![],
        };
        assert!(!g.has_strict_cycle());
        let g = PreferenceGraph {
            n_nodes: 3,
            weak_edges: vec![(0, 1), (1, 2)],
            strict_edges: vec![(2, 0)],
        };
        assert!(g.has_strict_cycle());
        let g = PreferenceGraph {
            n_nodes: 3,
            weak_edges: vec![(0, 1)],
            strict_edges: vec![(1, 2)],
        };
        assert!(!g.has_strict_cycle());
    }

    #[test]
    fn augmented_refinement_map() {
        let aug = build_augmented(&augmented(), &cfg(), DEFAULT_MAX_TYPES).unwrap();
        assert_eq!(aug.rows_0(), 0..3);
        assert_eq!(aug.rows_1(), 3..9);
        let obs = aug.unrefined();
        let row = obs.find(0, &"0+".parse().unwrap()).unwrap();
        let children: Vec<String> = aug.refinement_map()[row]
            .iter()
            .map(|&r| aug.rep().patch(r).sign().to_string())
            .collect();
        assert_eq!(children, ["-0+", "+0+"]);
        let row = obs.find(0, &"0-".parse().unwrap()).unwrap();
        assert_eq!(aug.refinement_map()[row].len(), 1);
    }

    #[test]
    fn disjoint_counterfactual_leaves_observed_patches_unchanged() {
        let sys = two_budgets()
            .with_counterfactual(Budget::new("b0", vec![10.0, 10.0]).unwrap())
            .unwrap();
        let aug = build_augmented(&sys, &cfg(), DEFAULT_MAX_TYPES).unwrap();
        assert_eq!(aug.rep().blocks()[0].len, 1);
        assert_eq!(aug.unrefined().len(), aug.rows_1().len());
        for (row, children) in aug.refinement_map().iter().enumerate() {
            assert_eq!(children, &vec![aug.rows_1().start + row]);
        }
    }

    #[test]
    fn augmented_types_project_onto_observed_types() {
        let aug = build_augmented(&augmented(), &cfg(), DEFAULT_MAX_TYPES).unwrap();
        let observed = enumerate_types(aug.unrefined(), DEFAULT_MAX_TYPES).unwrap();
        let mut parent = vec![usize::MAX; aug.rep().len()];
        for (orig, children) in aug.refinement_map().iter().enumerate() {
            for &c in children {
                parent[c] = orig;
            }
        }
        let mut projected: Vec<Vec<usize>> = (0..aug.matrix().n_types())
            .map(|h| {
                aug.matrix()
                    .column_rows(h)
                    .skip(1)
                    .enumerate()
                    .map(|(b, r)| parent[r] - aug.unrefined().blocks()[b].start)
                    .collect()
            })
            .collect();
        projected.sort();
        projected.dedup();
        assert_eq!(projected, observed.columns());
    }

    #[test]
    fn missing_counterfactual_is_an_error() {
        assert_eq!(
            build_augmented(&two_budgets(), &cfg(), DEFAULT_MAX_TYPES),
            Err(RationalError::MissingCounterfactual)
        );
    }
}
