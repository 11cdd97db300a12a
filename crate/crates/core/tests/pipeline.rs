use rumcf::bounds::{self, Attainability, BoundsError, Event};
use rumcf::geometry;
use rumcf::lp::SolverConfig;
use rumcf::model::{Budget, BudgetSystem, DemandProbabilities};
use rumcf::oracle;
use rumcf::rational::{self, RationalError, DEFAULT_MAX_TYPES};

fn budget(id: &str, p: &[f64]) -> Budget {
    Budget::new(id, p.to_vec()).unwrap()
}

fn observed() -> BudgetSystem {
    BudgetSystem::new(2, vec![budget("b1", &[1.0, 2.0]), budget("b2", &[2.0, 1.0])]).unwrap()
}

fn worked() -> BudgetSystem {
    observed().with_counterfactual(budget("b0", &[1.2, 1.2])).unwrap()
}

fn pi1() -> DemandProbabilities {
    DemandProbabilities::exact(vec![0.5, 0.3, 0.2, 0.3, 0.4, 0.3])
}

#[test]
fn worked_example_in_exact_arithmetic() {
    let cfg = SolverConfig::exact();
    let aug = rational::build_augmented(&worked(), &cfg, DEFAULT_MAX_TYPES).unwrap();
    let labels: Vec<String> = aug.rows_0().map(|r| aug.rep().row_label(r)).collect();
    assert_eq!(labels, ["b0:0-+", "b0:0+-", "b0:0++"]);

    let r = bounds::counterfactual_event_bounds(&aug, &pi1(), &Event::Patches(vec![2]), &cfg).unwrap();
    let float = bounds::counterfactual_event_bounds(&aug, &pi1(), &Event::Patches(vec![2]), &SolverConfig::default()).unwrap();
    assert_eq!((r.lower, r.upper), (float.lower, float.upper));

    let vertices = oracle::feasible_vertices(&aug, &pi1()).unwrap();
    let ind = [0.0, 0.0, 1.0];
    let lo = oracle::vertex_extremum(&aug, &vertices, &ind, false).unwrap();
    let hi = oracle::vertex_extremum(&aug, &vertices, &ind, true).unwrap();
    assert!((lo - r.lower).abs() < 1e-12 && (hi - r.upper).abs() < 1e-12);
}

#[test]
fn mean_bounds_match_oracle_and_are_attained() {
    let cfg = SolverConfig::default();
    let aug = rational::build_augmented(&worked(), &cfg, DEFAULT_MAX_TYPES).unwrap();
    let z = [1.0, 0.0];
    let r = bounds::counterfactual_mean_bounds(&aug, &pi1(), &z, &cfg).unwrap();
    let g = bounds::linear_patch_functional(&aug, &z, &cfg).unwrap();
    let lo = oracle::vertex_enumerate_bounds(&aug, &pi1(), &g.lo, false).unwrap();
    let hi = oracle::vertex_enumerate_bounds(&aug, &pi1(), &g.hi, true).unwrap();
    assert!((r.lower - lo).abs() < 1e-7 && (r.upper - hi).abs() < 1e-7);
    // The middle patch (0++) carries at least half the mass and its
    // extrema sit at the excluded crossing points.
    assert!(!g.lo_attained.as_ref().unwrap()[2] && !g.hi_attained.as_ref().unwrap()[2]);
    assert_eq!(r.lower_attainable, Attainability::Unknown);
    assert_eq!(r.upper_attainable, Attainability::Unknown);
    assert!(r.lower < r.upper);
}

#[test]
fn cdf_midpoint_matches_oracle() {
    let cfg = SolverConfig::default();
    let aug = rational::build_augmented(&worked(), &cfg, DEFAULT_MAX_TYPES).unwrap();
    let z = [1.0, 0.0];
    let g = bounds::linear_patch_functional(&aug, &z, &cfg).unwrap();
    let lo = g.lo.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = g.hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t = (lo + hi) / 2.0;
    let env = bounds::counterfactual_cdf_bounds(&aug, &pi1(), &z, &[t], &cfg).unwrap();
    let (clo, chi) = bounds::cdf_coefficients(&g, t, 1e-9);
    let want_lo = oracle::vertex_enumerate_bounds(&aug, &pi1(), &clo, false).unwrap();
    let want_hi = oracle::vertex_enumerate_bounds(&aug, &pi1(), &chi, true).unwrap();
    assert!((env.lower[0] - want_lo).abs() < 1e-7);
    assert!((env.upper[0] - want_hi).abs() < 1e-7);
}

#[test]
fn midpoints_assemble_into_a_feasible_counterfactual() {
    let cfg = SolverConfig::default();
    let aug = rational::build_augmented(&worked(), &cfg, DEFAULT_MAX_TYPES).unwrap();
    let mids: Vec<f64> = (0..3)
        .map(|i| {
            let r = bounds::counterfactual_event_bounds(&aug, &pi1(), &Event::Patches(vec![i]), &cfg).unwrap();
            (r.lower + r.upper) / 2.0
        })
        .collect();
    assert!((mids.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(bounds::feasible_pi0(&aug, &pi1(), &mids, &cfg).unwrap());
    let out_of_range = [1.0, 0.0, 0.0];
    let r = bounds::counterfactual_event_bounds(&aug, &pi1(), &Event::Patches(vec![0]), &cfg).unwrap();
    assert_eq!(bounds::feasible_pi0(&aug, &pi1(), &out_of_range, &cfg).unwrap(), r.upper >= 1.0 - 1e-9);
}

#[test]
fn empty_observation_bounds_are_trivial() {
    let cfg = SolverConfig::default();
    let sys = BudgetSystem::new(2, vec![]).unwrap().with_counterfactual(budget("b0", &[1.0, 2.0])).unwrap();
    let aug = rational::build_augmented(&sys, &cfg, DEFAULT_MAX_TYPES).unwrap();
    let pi1 = DemandProbabilities::exact(vec![]);
    let r = bounds::counterfactual_mean_bounds(&aug, &pi1, &[1.0, 0.0], &cfg).unwrap();
    assert!((r.lower - 0.0).abs() < 1e-12 && (r.upper - 1.0).abs() < 1e-12);
    let r = bounds::counterfactual_mean_bounds(&aug, &pi1, &[1.0, 2.0], &cfg).unwrap();
    assert!((r.lower - 1.0).abs() < 1e-12 && (r.upper - 1.0).abs() < 1e-12);
}

#[test]
fn null_patches_enlarge_the_representation() {
    let cfg = SolverConfig::default();
    let with_null = observed().with_keep_null_patches(true);
    let rep = geometry::vector_representation(&with_null, &cfg).unwrap();
    assert_eq!(rep.len(), 6);
    let a = rational::rational_matrix(&with_null, &cfg, DEFAULT_MAX_TYPES).unwrap();
    assert_eq!(a, oracle::brute_force_types(&rep).unwrap());
    // Both choosing the crossing point is consistent.
    let crossing: Vec<usize> = (0..2)
        .map(|b| rep.block_patches(b).iter().position(|p| p.sign().to_string().contains("00")).unwrap())
        .collect();
    assert!(a.columns().contains(&crossing));
}

#[test]
fn type_cap_is_enforced() {
    let err = rational::rational_matrix(&observed(), &SolverConfig::default(), 2).unwrap_err();
    assert!(matches!(err, RationalError::ColumnLimitExceeded { cap: 2 }));
}

#[test]
fn unnormalized_block_is_rejected() {
    let cfg = SolverConfig::default();
    let aug = rational::build_augmented(&worked(), &cfg, DEFAULT_MAX_TYPES).unwrap();
    let bad = DemandProbabilities::exact(vec![0.5, 0.3, 0.3, 0.3, 0.4, 0.3]);
    let err = bounds::counterfactual_event_bounds(&aug, &bad, &Event::Patches(vec![0]), &cfg).unwrap_err();
    assert!(matches!(err, BoundsError::Model(_)), "{err:?}");
}
