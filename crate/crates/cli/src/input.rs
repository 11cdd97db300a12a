//! System, probability and observation files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rumcf::lp::{Arithmetic, SolverConfig};
use rumcf::model::{
    validate_blocks, Block, Budget, BudgetSystem, DemandProbabilities, ProbabilitySource, SignVector,
    VectorRepresentation,
};
use rumcf::rational::DEFAULT_MAX_TYPES;
use serde::{Deserialize, Serialize};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[serde(rename = "K")]
    k: usize,
    budgets: Vec<BudgetEntry>,
    #[serde(default)]
    counterfactual: Option<CounterfactualEntry>,
    #[serde(default)]
    options: Options,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetEntry {
    id: String,
    p: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CounterfactualEntry {
    #[serde(default = "counterfactual_id")]
    id: String,
    p: Vec<f64>,
}

fn counterfactual_id() -> String {
    "b0".into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Options {
    tolerance: Option<f64>,
    keep_null_patches: Option<bool>,
    arithmetic: Option<ArithmeticName>,
    max_types: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ArithmeticName {
    Float,
    Exact,
}

/// Command-line overrides of the file options.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub keep_null_patches: bool,
    pub exact: bool,
    pub max_types: Option<usize>,
}

pub struct Loaded {
    pub system: BudgetSystem,
    pub config: SolverConfig,
    pub max_types: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn load_system(path: &Path, overrides: &Overrides) -> Result<Loaded> {
    let file: SystemFile =
        serde_json::from_str(&read(path)?).with_context(|| format!("malformed system file {}", path.display()))?;
    let budgets = file
        .budgets
        .into_iter()
        .enumerate()
        .map(|(i, b)| Budget::new(b.id, b.p).with_context(|| format!("budgets[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let mut system = BudgetSystem::new(file.k, budgets)?;
    if let Some(cf) = file.counterfactual {
        let budget = Budget::new(cf.id, cf.p).context("counterfactual")?;
        system = system.with_counterfactual(budget)?;
    }
    if let Some(tol) = overrides.tolerance.or(file.options.tolerance) {
        system = system.with_tolerance(tol)?;
    }
    let keep = overrides.keep_null_patches || file.options.keep_null_patches.unwrap_or(false);
    system = system.with_keep_null_patches(keep);
    let exact = overrides.exact || matches!(file.options.arithmetic, Some(ArithmeticName::Exact));
    let config = SolverConfig {
        arithmetic: if exact { Arithmetic::ExactRational } else { Arithmetic::Float },
        ..SolverConfig::default()
    };
    let max_types = overrides.max_types.or(file.options.max_types).unwrap_or(DEFAULT_MAX_TYPES);
    Ok(Loaded {
        system,
        config,
        max_types,
    })
}

/// Probabilities keyed by budget id, then by sign string.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct PiFile {
    pub probabilities: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<String, BTreeMap<String, usize>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ties: Vec<Tie>,
}

/// An observation left out of the counts because it lies on a second plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tie {
    pub line: u64,
    pub budget: String,
    pub sign: String,
}

pub fn load_pi(path: &Path) -> Result<PiFile> {
    serde_json::from_str(&read(path)?).with_context(|| format!("malformed probability file {}", path.display()))
}

impl PiFile {
    /// Length of the sign strings used, if any entry exists.
    pub fn sign_len(&self) -> Option<usize> {
        self.probabilities
            .values()
            .flat_map(|m| m.keys())
            .next()
            .map(|k| strip_id(k).chars().count())
    }

    /// Probabilities aligned with `blocks` of `rep`. Entries missing from the
    /// file are zero; unknown budgets or signs are errors. `coarse` names,
    /// for a sign string one plane short, the refined patches that replace it.
    pub fn resolve(
        &self,
        rep: &VectorRepresentation,
        blocks: &[Block],
        tol: f64,
        coarse: Option<&dyn Fn(usize, &str) -> Vec<String>>,
    ) -> Result<DemandProbabilities> {
        for id in self.probabilities.keys() {
            if !blocks.iter().any(|b| &b.id == id) {
                bail!("probability file names unknown budget '{id}'");
            }
        }
        let base = blocks.first().map_or(0, |b| b.start);
        let mut values = vec![0.0; blocks.iter().map(|b| b.len).sum()];
        let mut totals = Vec::new();
        for (b, block) in blocks.iter().enumerate() {
            let block_index = rep.blocks().iter().position(|x| x == block).expect("block of rep");
            let entries = self
                .probabilities
                .get(&block.id)
                .ok_or_else(|| anyhow!("no probabilities for budget '{}'", block.id))?;
            for (key, &p) in entries {
                let sign = strip_id(key);
                let row = sign
                    .parse::<SignVector>()
                    .ok()
                    .filter(|s| s.len() == rep.patches()[block.start].sign().len())
                    .and_then(|s| rep.find(block_index, &s));
                match row {
                    Some(row) => values[row - base] = p,
                    None => match coarse.map(|f| f(b, sign)).filter(|r| !r.is_empty()) {
                        Some(refined) => bail!(
                            "'{}:{sign}' is a patch of the unrefined system; with a counterfactual, supply probabilities for the refined patches {}",
                            block.id,
                            refined.join(", ")
                        ),
                        None => {
                            let known: Vec<String> = block.range().map(|r| rep.row_label(r)).collect();
                            bail!("no patch '{}:{sign}'; patches of this budget are {}", block.id, known.join(", "))
                        }
                    },
                }
            }
            if let Some(counts) = &self.counts {
                totals.push(counts.get(&block.id).map_or(0, |m| m.values().sum()));
            }
        }
        let source = if self.counts.is_some() {
            ProbabilitySource::EmpiricalCounts(totals)
        } else {
            ProbabilitySource::Exact
        };
        Ok(validate_blocks(&DemandProbabilities { values, source }, blocks, tol)?)
    }
}

/// Accepts both `"<id>:<sign>"` and bare `"<sign>"`.
pub fn strip_id(key: &str) -> &str {
    key.rsplit_once(':').map_or(key, |(_, s)| s)
}

pub struct Observation {
    pub line: u64,
    pub budget: String,
    pub y: Vec<f64>,
}

pub fn load_observations(path: &Path, k: usize) -> Result<Vec<Observation>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let width = reader.headers()?.len();
    if width != k + 1 {
        bail!("{}: header has {width} columns, expected budget_id and {k} quantities", path.display());
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("malformed row in {}", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        let budget = record[0].to_string();
        let y = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(i, v)| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| anyhow!("{}:{line}: y_{} = '{v}' is not a number", path.display(), i + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Observation { line, budget, y });
    }
    Ok(out)
}
