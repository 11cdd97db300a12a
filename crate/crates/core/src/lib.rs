//! Nonparametric random utility analysis of demand on linear budgets.
//!
//! Given the distribution of demand on finitely many observed budgets, the
//! crate partitions the budget planes into patches, enumerates the finitely
//! many rational demand types, tests whether the observed choice
//! probabilities are a mixture of those types, and computes sharp bounds on
//! demand at an unobserved budget: event probabilities, expectations of
//! functionals, and pointwise c.d.f. envelopes.
//!
//! ```
//! use rumcf::model::{Budget, BudgetSystem, DemandProbabilities};
//! use rumcf::{lp::SolverConfig, rational, bounds};
//!
//! let system = BudgetSystem::new(2, vec![
//!     Budget::new("b1", vec![1.0, 2.0]).unwrap(),
//!     Budget::new("b2", vec![2.0, 1.0]).unwrap(),
//! ]).unwrap();
//! let cfg = SolverConfig::default();
//! let matrix = rational::rational_matrix(&system, &cfg, rational::DEFAULT_MAX_TYPES).unwrap();
//! assert_eq!(matrix.n_types(), 3);
//! let pi = DemandProbabilities::exact(vec![0.5, 0.5, 0.3, 0.7]);
//! let verdict = bounds::test_rationalizable(&matrix, &pi, &cfg).unwrap();
//! assert!(verdict.rationalizable);
//! ```

pub mod bounds;
pub mod geometry;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod rational;
