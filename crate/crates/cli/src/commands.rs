use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rumcf::bounds::{self, Attainability, BoundResult, BoundsError, Event, PatchFunctional};
use rumcf::geometry;
use rumcf::model::{AugmentedSystem, DemandProbabilities, RationalMatrix, Sign, SignVector, VectorRepresentation};
use rumcf::oracle;
use rumcf::rational;
use serde_json::{json, Map, Value};

use crate::input::{self, Loaded, Overrides, PiFile, Tie};
use crate::Query;

/// What to print and the process exit code.
pub struct Report {
    pub text: String,
    pub code: u8,
    pub message: Option<String>,
}

impl Report {
    fn json(value: Value) -> Self {
        Self::json_with_code(value, 0)
    }

    fn json_with_code(value: Value, code: u8) -> Self {
        let mut text = serde_json::to_string_pretty(&value).expect("serializable");
        text.push('\n');
        Self {
            text,
            code,
            message: None,
        }
    }
}

/// Rounds to 12 significant digits.
fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x.abs();
    }
    format!("{x:.11e}").parse().expect("float literal")
}

fn num(x: f64) -> Value {
    json!(round12(x))
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn augmented(loaded: &Loaded) -> Result<AugmentedSystem> {
    if loaded.system.counterfactual().is_none() {
        bail!("the system file has no counterfactual budget");
    }
    Ok(rational::build_augmented(&loaded.system, &loaded.config, loaded.max_types)?)
}

pub fn patches(system: &Path, overrides: &Overrides) -> Result<Report> {
    let loaded = input::load_system(system, overrides)?;
    let rep = geometry::vector_representation(&loaded.system, &loaded.config)?;
    let k = loaded.system.dim();
    let tol = loaded.system.tolerance();
    let list: Vec<Value> = (0..rep.len())
        .map(|row| {
            let p = rep.patch(row);
            let block = &rep.blocks()[rep.block_of_row(row)];
            let mut entry = json!({
                "id": rep.row_label(row),
                "budget": block.id,
                "sign": p.sign().to_string(),
                "dimension": p.dimension(),
                "point": nums(p.interior_point()),
            });
            if k <= 3 {
                let vertices: Vec<Value> = geometry::closure_vertices(p, tol).iter().map(|v| nums(v)).collect();
                entry["vertices"] = Value::Array(vertices);
            }
            entry
        })
        .collect();
    let order: Vec<&str> = loaded.system.planes().iter().map(|b| b.id()).collect();
    Ok(Report::json(json!({ "K": k, "sign_order": order, "patches": list })))
}

pub fn ingest(system: &Path, observations: &Path, overrides: &Overrides) -> Result<Report> {
    let loaded = input::load_system(system, overrides)?;
    let sys = &loaded.system;
    let rep = geometry::vector_representation(sys, &loaded.config)?;
    let planes = sys.planes();
    let tol = sys.tolerance();
    let offset = usize::from(sys.counterfactual().is_some());
    let observed = input::load_observations(observations, sys.dim())?;

    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for b in &rep.blocks()[offset..] {
        counts.insert(b.id.clone(), b.range().map(|r| (rep.patch(r).sign().to_string(), 0)).collect());
    }
    let mut ties = Vec::new();
    for obs in &observed {
        let Some(index) = sys.observed().iter().position(|b| b.id() == obs.budget) else {
            bail!("{}:{}: unknown observed budget '{}'", observations.display(), obs.line, obs.budget);
        };
        let home = index + offset;
        let budget = planes[home];
        let spent = budget.expenditure(&obs.y);
        if (spent - 1.0).abs() > tol || obs.y.iter().any(|v| *v < -tol) {
            bail!(
                "{}:{}: bundle {:?} is not on budget '{}' (p.y = {})",
                observations.display(),
                obs.line,
                obs.y,
                obs.budget,
                round12(spent)
            );
        }
        let signs: Vec<Sign> = planes
            .iter()
            .enumerate()
            .map(|(j, b)| if j == home { Sign::On } else { Sign::classify(b.expenditure(&obs.y), tol) })
            .collect();
        let sign = SignVector::new(signs)?;
        let on_other = sign.on_positions().any(|j| j != home);
        let block = home;
        match rep.find(block, &sign) {
            Some(_) if !on_other || sys.keep_null_patches() => {
                *counts.get_mut(&obs.budget).unwrap().get_mut(&sign.to_string()).unwrap() += 1;
            }
            _ => ties.push(Tie {
                line: obs.line,
                budget: obs.budget.clone(),
                sign: sign.to_string(),
            }),
        }
    }
    let mut probabilities = BTreeMap::new();
    for (id, cell) in &counts {
        let total: usize = cell.values().sum();
        if total == 0 {
            bail!("budget '{id}' has no classified observations");
        }
        probabilities.insert(
            id.clone(),
            cell.iter().map(|(s, &c)| (s.clone(), round12(c as f64 / total as f64))).collect(),
        );
    }
    let n_ties = ties.len();
    let file = PiFile {
        probabilities,
        counts: Some(counts),
        ties,
    };
    let mut report = Report::json(serde_json::to_value(&file)?);
    if n_ties > 0 {
        report.message = Some(format!("{n_ties} observation(s) on a second budget plane were left out; see \"ties\""));
    }
    Ok(report)
}

/// Refined patches of observed block `b` of `aug` that split the unrefined
/// patch with sign `coarse`.
fn refined_names(aug: &AugmentedSystem, b: usize, coarse: &str) -> Vec<String> {
    let Ok(sign) = coarse.parse::<SignVector>() else {
        return Vec::new();
    };
    let Some(row) = aug.unrefined().find(b, &sign) else {
        return Vec::new();
    };
    aug.refinement_map()[row].iter().map(|&r| aug.rep().row_label(r)).collect()
}

/// Observed probabilities at refined granularity.
fn refined_pi(aug: &AugmentedSystem, file: &PiFile, tol: f64) -> Result<DemandProbabilities> {
    let coarse = |b: usize, sign: &str| refined_names(aug, b, sign);
    file.resolve(aug.rep(), aug.observed_blocks(), tol, Some(&coarse))
}

pub fn test(system: &Path, pi: &Path, witness: bool, overrides: &Overrides) -> Result<Report> {
    let loaded = input::load_system(system, overrides)?;
    let file = input::load_pi(pi)?;
    let tol = loaded.system.tolerance();
    let observed = loaded.system.observed_only();
    let matrix = rational::rational_matrix(&observed, &loaded.config, loaded.max_types)?;
    let refined = loaded.system.counterfactual().is_some() && file.sign_len() == Some(loaded.system.n_planes());
    let values = if refined {
        // Sum the refined patches back into the patches they split.
        let aug = augmented(&loaded)?;
        let fine = refined_pi(&aug, &file, tol)?;
        let start = aug.rows_1().start;
        aug.refinement_map()
            .iter()
            .map(|rows| rows.iter().map(|r| fine.values[r - start]).sum())
            .collect()
    } else {
        file.resolve(matrix.rows(), matrix.rows().blocks(), tol, None)?.values
    };
    let verdict = bounds::test_rationalizable(&matrix, &DemandProbabilities::exact(values), &loaded.config)?;
    let mut out = json!({
        "rationalizable": verdict.rationalizable,
        "l1_residual": num(verdict.l1_residual),
        "n_types": matrix.n_types(),
    });
    if let (true, Some(nu)) = (witness, &verdict.witness) {
        out["witness"] = type_weights(&matrix, nu);
    }
    Ok(Report::json_with_code(out, if verdict.rationalizable { 0 } else { 1 }))
}

/// Types with positive weight, each listed by its chosen patches.
fn type_weights(matrix: &RationalMatrix, nu: &[f64]) -> Value {
    let rep = matrix.rows();
    let list = nu
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 1e-12)
        .map(|(h, &w)| {
            let labels: Vec<String> = matrix.column_rows(h).map(|r| rep.row_label(r)).collect();
            json!({ "weight": num(w), "type": labels })
        })
        .collect();
    Value::Array(list)
}

/// Resolves counterfactual patch ids (`b0:0+-` or `0+-`) to block-0 rows.
fn counterfactual_rows(aug: &AugmentedSystem, ids: &[String]) -> Result<Vec<usize>> {
    let rep = aug.rep();
    let block = &rep.blocks()[0];
    ids.iter()
        .map(|id| {
            if let Some((budget, _)) = id.rsplit_once(':') {
                if budget != block.id {
                    bail!("'{id}' is not a patch of the counterfactual budget '{}'", block.id);
                }
            }
            let sign = input::strip_id(id);
            sign.parse::<SignVector>()
                .ok()
                .and_then(|s| rep.find(0, &s))
                .ok_or_else(|| {
                    let known: Vec<String> = aug.rows_0().map(|r| rep.row_label(r)).collect();
                    anyhow!("unknown counterfactual patch '{id}'; counterfactual patches are {}", known.join(", "))
                })
        })
        .collect()
}

fn attainability(a: Attainability) -> Value {
    match a {
        Attainability::Attained => json!(true),
        Attainability::Unknown => json!("unknown"),
    }
}

fn bound_json(aug: &AugmentedSystem, query: Value, r: &BoundResult, witness: bool) -> Value {
    let mut out = json!({
        "query": query,
        "status": "optimal",
        "lower": num(r.lower),
        "upper": num(r.upper),
        "lower_attainable": attainability(r.lower_attainable),
        "upper_attainable": attainability(r.upper_attainable),
    });
    if witness {
        out["witness"] = json!({
            "lower": type_weights(aug.matrix(), &r.witness_lower),
            "upper": type_weights(aug.matrix(), &r.witness_upper),
        });
    }
    out
}

/// Per-patch values keyed by counterfactual patch id.
fn load_patch_values(path: &Path, aug: &AugmentedSystem) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let map: BTreeMap<String, f64> =
        serde_json::from_str(&text).with_context(|| format!("malformed patch value file {}", path.display()))?;
    let mut values = vec![None; aug.rows_0().len()];
    for (id, v) in map {
        let row = counterfactual_rows(aug, std::slice::from_ref(&id))?[0];
        values[row] = Some(v);
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| anyhow!("{}: no value for patch {}", path.display(), aug.rep().row_label(i))))
        .collect()
}

pub fn bounds(system: &Path, pi: &Path, query: &Query, witness: bool, overrides: &Overrides) -> Result<Report> {
    let loaded = input::load_system(system, overrides)?;
    let aug = augmented(&loaded)?;
    let pi1 = refined_pi(&aug, &input::load_pi(pi)?, loaded.system.tolerance())?;
    let cfg = &loaded.config;
    let k = loaded.system.dim();
    let check_z = |z: &[f64]| {
        if z.len() == k {
            Ok(())
        } else {
            Err(anyhow!("--z has {} entries, expected {k}", z.len()))
        }
    };
    let result = match query {
        Query::Prob { patches } => {
            let rows = counterfactual_rows(&aug, patches)?;
            let labels: Vec<String> = rows.iter().map(|&r| aug.rep().row_label(r)).collect();
            bounds::counterfactual_event_bounds(&aug, &pi1, &Event::Patches(rows), cfg)
                .map(|r| bound_json(&aug, json!({ "kind": "prob", "patches": labels }), &r, witness))
        }
        Query::Mean { z } => {
            check_z(z)?;
            bounds::counterfactual_mean_bounds(&aug, &pi1, z, cfg)
                .map(|r| bound_json(&aug, json!({ "kind": "mean", "z": nums(z) }), &r, witness))
        }
        Query::Functional { glo, ghi } => {
            let g = PatchFunctional::new(load_patch_values(glo, &aug)?, load_patch_values(ghi, &aug)?);
            bounds::counterfactual_functional_bounds(&aug, &pi1, &g, cfg)
                .map(|r| bound_json(&aug, json!({ "kind": "functional" }), &r, witness))
        }
        Query::Cdf { z, grid, tsv } => {
            check_z(z)?;
            match bounds::counterfactual_cdf_bounds(&aug, &pi1, z, grid, cfg) {
                Ok(env) if *tsv => {
                    let mut text = String::from("t\tlower\tupper\n");
                    for i in 0..env.grid.len() {
                        text += &format!("{}\t{}\t{}\n", round12(env.grid[i]), round12(env.lower[i]), round12(env.upper[i]));
                    }
                    return Ok(Report {
                        text,
                        code: 0,
                        message: None,
                    });
                }
                other => other.map(|env| {
                    json!({
                        "query": { "kind": "cdf", "z": nums(z) },
                        "status": "optimal",
                        "grid": nums(&env.grid),
                        "lower": nums(&env.lower),
                        "upper": nums(&env.upper),
                    })
                }),
            }
        }
    };
    match result {
        Ok(value) => Ok(Report::json(value)),
        Err(BoundsError::InfeasibleObservables { l1_residual }) => {
            let mut report = Report::json_with_code(
                json!({ "status": "infeasible_observables", "l1_residual": num(l1_residual) }),
                3,
            );
            report.message = Some(format!(
                "observed probabilities are not consistent with any mixture of rational types (l1 residual {})",
                round12(l1_residual)
            ));
            Ok(report)
        }
        Err(e) => Err(e.into()),
    }
}

fn labels(rep: &VectorRepresentation, rows: std::ops::Range<usize>) -> Vec<String> {
    rows.map(|r| rep.row_label(r)).collect()
}

pub fn matrix(system: &Path, overrides: &Overrides) -> Result<Report> {
    let loaded = input::load_system(system, overrides)?;
    let (matrix, split) = if loaded.system.counterfactual().is_some() {
        let aug = augmented(&loaded)?;
        let split = (aug.rows_0(), aug.rows_1());
        (aug.matrix().clone(), Some(split))
    } else {
        (rational::rational_matrix(&loaded.system, &loaded.config, loaded.max_types)?, None)
    };
    let rep = matrix.rows();
    let entries: Vec<Value> = (0..matrix.n_types())
        .flat_map(|h| matrix.column_rows(h).map(move |r| json!([r, h, 1])))
        .collect();
    let columns: Vec<Value> = (0..matrix.n_types())
        .map(|h| json!(matrix.column_rows(h).map(|r| rep.row_label(r)).collect::<Vec<_>>()))
        .collect();
    let mut out = Map::new();
    out.insert("n_rows".into(), json!(matrix.n_rows()));
    out.insert("n_types".into(), json!(matrix.n_types()));
    out.insert("rows".into(), json!(labels(rep, 0..rep.len())));
    if let Some((rows_0, rows_1)) = split {
        out.insert("rows_0".into(), json!(labels(rep, rows_0)));
        out.insert("rows_1".into(), json!(labels(rep, rows_1)));
    }
    out.insert("columns".into(), Value::Array(columns));
    out.insert("entries".into(), Value::Array(entries));
    Ok(Report::json(Value::Object(out)))
}

pub fn oracle_types(system: &Path, overrides: &Overrides) -> Result<Report> {
    let loaded = input::load_system(system, overrides)?;
    let rep = geometry::vector_representation(&loaded.system, &loaded.config)?;
    let fast = rational::enumerate_types(&rep, loaded.max_types)?;
    let brute = oracle::brute_force_types(&rep)?;
    let agree = fast.columns() == brute.columns();
    let out = json!({
        "n_types": fast.n_types(),
        "n_types_brute_force": brute.n_types(),
        "agree": agree,
    });
    Ok(Report::json_with_code(out, if agree { 0 } else { 1 }))
}

pub fn oracle_cover(system: &Path, samples: usize, seed: u64, overrides: &Overrides) -> Result<Report> {
    if samples == 0 {
        bail!("--samples must be at least 1");
    }
    let loaded = input::load_system(system, overrides)?;
    let report = oracle::sample_patch_cover(&loaded.system, samples, seed)?;
    let names = |list: &[(String, SignVector)]| -> Vec<String> { list.iter().map(|(id, s)| format!("{id}:{s}")).collect() };
    let out = json!({
        "samples_per_budget": report.samples_per_budget,
        "seed": seed,
        "missing": names(&report.missing),
        "extraneous": names(&report.extraneous),
        "clean": report.is_clean(),
    });
    Ok(Report::json_with_code(out, if report.is_clean() { 0 } else { 1 }))
}

pub fn oracle_vertex(system: &Path, pi: &Path, patches: &[String], overrides: &Overrides) -> Result<Report> {
    let loaded = input::load_system(system, overrides)?;
    let aug = augmented(&loaded)?;
    let pi1 = refined_pi(&aug, &input::load_pi(pi)?, loaded.system.tolerance())?;
    let rows = counterfactual_rows(&aug, patches)?;
    let objective: Vec<f64> = (0..aug.rows_0().len()).map(|i| if rows.contains(&i) { 1.0 } else { 0.0 }).collect();
    let vertices = oracle::feasible_vertices(&aug, &pi1)?;
    let lower = oracle::vertex_extremum(&aug, &vertices, &objective, false)?;
    let upper = oracle::vertex_extremum(&aug, &vertices, &objective, true)?;
    let labels: Vec<String> = rows.iter().map(|&r| aug.rep().row_label(r)).collect();
    Ok(Report::json(json!({
        "patches": labels,
        "n_vertices": vertices.len(),
        "lower": num(lower),
        "upper": num(upper),
    })))
}
