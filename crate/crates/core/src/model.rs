//! Domain vocabulary: budgets, sign vectors, patches, vector representations,
//! demand probabilities and rational demand matrices.
//!
//! Budgets are indexed by *position* in the plane list returned by
//! [`BudgetSystem::planes`]. When a counterfactual budget is present it sits
//! at position 0 and the observed budgets follow in input order; otherwise
//! the observed budgets start at position 0. [`BudgetSystem::budget_number`]
//! maps a position to the conventional number (0 for the counterfactual,
//! 1..=J for observed budgets).

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

/// Default tolerance for sign decisions and probability checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("budget `{id}` has an empty price vector")]
    EmptyPrices { id: String },
    #[error("budget `{id}`: price {index} is {value}; prices must be finite and strictly positive")]
    InvalidPrice { id: String, index: usize, value: f64 },
    #[error("budget `{id}` has {found} prices, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate budget id `{0}`")]
    DuplicateId(String),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("invalid sign vector: {0}")]
    InvalidSign(String),
    #[error("patch has sign vector of length {found}, system has {expected} budgets")]
    SignLength { expected: usize, found: usize },
    #[error("budget {number} (`{id}`) has no patches")]
    EmptyBlock { number: usize, id: String },
    #[error("probability vector has {found} entries, representation has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("entry {index} in block of budget {number} (`{id}`) is negative: {value}")]
    NegativeProbability {
        number: usize,
        id: String,
        index: usize,
        value: f64,
    },
    #[error("entry {index} in block of budget {number} (`{id}`) is out of range: {value}")]
    ProbabilityOutOfRange {
        number: usize,
        id: String,
        index: usize,
        value: f64,
    },
    #[error("block of budget {number} (`{id}`) sums to {sum}, expected 1")]
    BlockSum { number: usize, id: String, sum: f64 },
    #[error("column {column} is malformed: {reason}")]
    MalformedColumn { column: usize, reason: String },
}

/// A linear budget `{y >= 0 : p.y = 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    id: String,
    prices: Vec<f64>,
}

impl Budget {
    pub fn new(id: impl Into<String>, prices: Vec<f64>) -> Result<Self, ModelError> {
        let id = id.into();
        if prices.is_empty() {
            return Err(ModelError::EmptyPrices { id });
        }
        if let Some((index, &value)) = prices
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(ModelError::InvalidPrice { id, index, value });
        }
        Ok(Self { id, prices })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn dim(&self) -> usize {
        self.prices.len()
    }

    /// Expenditure `p.y` of a bundle at these prices.
    pub fn expenditure(&self, y: &[f64]) -> f64 {
        dot(&self.prices, y)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Observed budgets, an optional counterfactual, and the numerical options
/// shared by every computation on them.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSystem {
    dim: usize,
    budgets: Vec<Budget>,
    counterfactual: Option<Budget>,
    tolerance: f64,
    keep_null_patches: bool,
}

impl BudgetSystem {
    /// Observed budgets in `dim` goods. `budgets` may be empty.
    pub fn new(dim: usize, budgets: Vec<Budget>) -> Result<Self, ModelError> {
        let system = Self {
            dim,
            budgets,
            counterfactual: None,
            tolerance: DEFAULT_TOLERANCE,
            keep_null_patches: false,
        };
        system.check()?;
        Ok(system)
    }

    pub fn with_counterfactual(mut self, budget: Budget) -> Result<Self, ModelError> {
        self.counterfactual = Some(budget);
        self.check()?;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self, ModelError> {
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(ModelError::InvalidTolerance(tolerance));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn with_keep_null_patches(mut self, keep: bool) -> Self {
        self.keep_null_patches = keep;
        self
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.dim == 0 {
            return Err(ModelError::EmptyPrices { id: String::new() });
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in self.planes() {
            if b.dim() != self.dim {
                return Err(ModelError::DimensionMismatch {
                    id: b.id.clone(),
                    expected: self.dim,
                    found: b.dim(),
                });
            }
            if !seen.insert(b.id.as_str()) {
                return Err(ModelError::DuplicateId(b.id.clone()));
            }
        }
        Ok(())
    }

    /// Number of goods `K`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observed(&self) -> &[Budget] {
        &self.budgets
    }

    pub fn counterfactual(&self) -> Option<&Budget> {
        self.counterfactual.as_ref()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn keep_null_patches(&self) -> bool {
        self.keep_null_patches
    }

    /// All budget planes in analysis order: counterfactual first when present.
    pub fn planes(&self) -> Vec<&Budget> {
        self.counterfactual.iter().chain(self.budgets.iter()).collect()
    }

    pub fn n_planes(&self) -> usize {
        self.budgets.len() + usize::from(self.counterfactual.is_some())
    }

    /// Conventional budget number of the plane at `position`.
    pub fn budget_number(&self, position: usize) -> usize {
        if self.counterfactual.is_some() {
            position
        } else {
            position + 1
        }
    }

    /// The same system with the counterfactual removed.
    pub fn observed_only(&self) -> Self {
        Self {
            counterfactual: None,
            ..self.clone()
        }
    }

    /// The same system with observed budget `index` (0-based into
    /// [`Self::observed`]) removed.
    pub fn without_observed(&self, index: usize) -> Self {
        let mut budgets = self.budgets.clone();
        budgets.remove(index);
        Self {
            budgets,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Below,
    On,
    Above,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Below => '-',
            Sign::On => '0',
            Sign::Above => '+',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '-' => Some(Sign::Below),
            '0' => Some(Sign::On),
            '+' => Some(Sign::Above),
            _ => None,
        }
    }

    /// Classify `value - 1` at tolerance `tol`.
    pub fn classify(value: f64, tol: f64) -> Self {
        if (value - 1.0).abs() <= tol {
            Sign::On
        } else if value < 1.0 {
            Sign::Below
        } else {
            Sign::Above
        }
    }
}

/// Per-budget position of a set of bundles relative to every budget plane.
///
/// Ordering is lexicographic with `Below < On < Above`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignVector(Vec<Sign>);

impl SignVector {
    pub fn new(signs: Vec<Sign>) -> Result<Self, ModelError> {
        if !signs.contains(&Sign::On) {
            return Err(ModelError::InvalidSign(format!(
                "`{}` lies on no budget plane",
                signs.iter().map(|s| s.symbol()).collect::<String>()
            )));
        }
        Ok(Self(signs))
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, position: usize) -> Sign {
        self.0[position]
    }

    /// Positions whose entry is `On`.
    pub fn on_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Sign::On)
            .map(|(k, _)| k)
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for SignVector {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let signs = s
            .chars()
            .map(|c| {
                Sign::from_symbol(c)
                    .ok_or_else(|| ModelError::InvalidSign(format!("unexpected character `{c}` in `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(signs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// `normal . y  (relation)  rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub normal: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn holds(&self, y: &[f64], tol: f64) -> bool {
        let v = dot(&self.normal, y);
        match self.relation {
            Relation::Eq => (v - self.rhs).abs() <= tol,
            Relation::Le => v <= self.rhs + tol,
            Relation::Ge => v >= self.rhs - tol,
        }
    }
}

/// One cell of the budget arrangement, listed under `home`.
///
/// The closure holds one constraint per budget plane, aligned with the sign
/// vector; `y >= 0` is implicit. The patch itself is the closure with the
/// `Le`/`Ge` constraints made strict.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    home: usize,
    sign: SignVector,
    dimension: usize,
    closure: Vec<LinearConstraint>,
    interior_point: Vec<f64>,
}

impl Patch {
    pub(crate) fn new(
        home: usize,
        sign: SignVector,
        dimension: usize,
        planes: &[&Budget],
        interior_point: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(sign.get(home), Sign::On);
        let closure = planes
            .iter()
            .zip(sign.signs())
            .map(|(b, s)| LinearConstraint {
                normal: b.prices.clone(),
                relation: match s {
                    Sign::Below => Relation::Le,
                    Sign::On => Relation::Eq,
                    Sign::Above => Relation::Ge,
                },
                rhs: 1.0,
            })
            .collect();
        Self {
            home,
            sign,
            dimension,
            closure,
            interior_point,
        }
    }

    /// Position of the budget this patch is listed under.
    pub fn home(&self) -> usize {
        self.home
    }

    pub fn sign(&self) -> &SignVector {
        &self.sign
    }

    /// Affine dimension of the closure.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn ambient_dim(&self) -> usize {
        self.interior_point.len()
    }

    pub fn closure(&self) -> &[LinearConstraint] {
        &self.closure
    }

    /// A point of the patch that satisfies every strict constraint strictly.
    pub fn interior_point(&self) -> &[f64] {
        &self.interior_point
    }

    pub fn equalities(&self) -> impl Iterator<Item = &LinearConstraint> {
        self.closure.iter().filter(|c| c.relation == Relation::Eq)
    }

    /// Constraints that hold strictly on the patch (its `Below`/`Above` entries).
    pub fn strict_constraints(&self) -> impl Iterator<Item = &LinearConstraint> {
        self.closure.iter().filter(|c| c.relation != Relation::Eq)
    }

    /// Membership in the patch itself (strict constraints strict beyond `tol`).
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        y.iter().all(|v| *v >= -tol)
            && self.closure.iter().all(|c| {
                let v = dot(&c.normal, y);
                match c.relation {
                    Relation::Eq => (v - c.rhs).abs() <= tol,
                    Relation::Le => v < c.rhs - tol,
                    Relation::Ge => v > c.rhs + tol,
                }
            })
    }

    /// Membership in the closure, within `tol`.
    pub fn closure_contains(&self, y: &[f64], tol: f64) -> bool {
        y.iter().all(|v| *v >= -tol) && self.closure.iter().all(|c| c.holds(y, tol))
    }
}

/// Contiguous block of a vector representation belonging to one budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub number: usize,
    pub id: String,
    pub start: usize,
    pub len: usize,
}

impl Block {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

/// Patches listed budget by budget, each block in canonical sign order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorRepresentation {
    patches: Vec<Patch>,
    blocks: Vec<Block>,
    dim: usize,
}

impl VectorRepresentation {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.start).collect()
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn patch(&self, row: usize) -> &Patch {
        &self.patches[row]
    }

    pub fn block_patches(&self, block: usize) -> &[Patch] {
        &self.patches[self.blocks[block].range()]
    }

    pub fn block_of_row(&self, row: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.range().contains(&row))
            .expect("row out of range")
    }

    /// Global row of the patch with `sign` in `block`.
    pub fn find(&self, block: usize, sign: &SignVector) -> Option<usize> {
        let b = &self.blocks[block];
        self.patches[b.range()]
            .binary_search_by(|p| p.sign.cmp(sign))
            .ok()
            .map(|i| b.start + i)
    }

    /// `<budget id>:<sign string>`, the external name of a row.
    pub fn row_label(&self, row: usize) -> String {
        let block = &self.blocks[self.block_of_row(row)];
        format!("{}:{}", block.id, self.patches[row].sign)
    }
}

/// Sort patches into canonical order and record block boundaries.
pub fn build_vector_representation(
    mut patches: Vec<Patch>,
    system: &BudgetSystem,
) -> Result<VectorRepresentation, ModelError> {
    let planes = system.planes();
    for p in &patches {
        if p.sign.len() != planes.len() {
            return Err(ModelError::SignLength {
                expected: planes.len(),
                found: p.sign.len(),
            });
        }
        if p.ambient_dim() != system.dim() {
            return Err(ModelError::DimensionMismatch {
                id: planes[p.home].id.clone(),
                expected: system.dim(),
                found: p.ambient_dim(),
            });
        }
    }
    patches.sort_by(|a, b| a.home.cmp(&b.home).then_with(|| a.sign.cmp(&b.sign)));
    patches.dedup_by(|a, b| a.home == b.home && a.sign == b.sign);

    let mut blocks = Vec::with_capacity(planes.len());
    let mut start = 0;
    for (position, budget) in planes.iter().enumerate() {
        let len = patches[start..]
            .iter()
            .take_while(|p| p.home == position)
            .count();
        if len == 0 {
            return Err(ModelError::EmptyBlock {
                number: system.budget_number(position),
                id: budget.id.clone(),
            });
        }
        blocks.push(Block {
            number: system.budget_number(position),
            id: budget.id.clone(),
            start,
            len,
        });
        start += len;
    }
    Ok(VectorRepresentation {
        patches,
        blocks,
        dim: system.dim(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbabilitySource {
    Exact,
    /// Sample sizes per block.
    EmpiricalCounts(Vec<usize>),
}

/// Choice probabilities aligned with a vector representation (or a
/// contiguous run of its blocks).
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProbabilities {
    pub values: Vec<f64>,
    pub source: ProbabilitySource,
}

impl DemandProbabilities {
    pub fn exact(values: Vec<f64>) -> Self {
        Self {
            values,
            source: ProbabilitySource::Exact,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Check `pi` against `rep` and return a copy with each block rescaled to sum
/// to exactly one.
pub fn validate_probabilities(
    pi: &DemandProbabilities,
    rep: &VectorRepresentation,
    tol: f64,
) -> Result<DemandProbabilities, ModelError> {
    validate_blocks(pi, rep.blocks(), tol)
}

/// As [`validate_probabilities`], against an explicit block list. Block
/// starts are taken relative to the first block.
pub fn validate_blocks(
    pi: &DemandProbabilities,
    blocks: &[Block],
    tol: f64,
) -> Result<DemandProbabilities, ModelError> {
    let base = blocks.first().map_or(0, |b| b.start);
    let expected: usize = blocks.iter().map(|b| b.len).sum();
    if pi.values.len() != expected {
        return Err(ModelError::LengthMismatch {
            expected,
            found: pi.values.len(),
        });
    }
    let mut values = pi.values.clone();
    for b in blocks {
        let range = (b.start - base)..(b.start - base + b.len);
        for i in range.clone() {
            let v = values[i];
            if v < 0.0 {
                return Err(ModelError::NegativeProbability {
                    number: b.number,
                    id: b.id.clone(),
                    index: i,
                    value: v,
                });
            }
            if !v.is_finite() || v > 1.0 + tol {
                return Err(ModelError::ProbabilityOutOfRange {
                    number: b.number,
                    id: b.id.clone(),
                    index: i,
                    value: v,
                });
            }
        }
        let sum: f64 = values[range.clone()].iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(ModelError::BlockSum {
                number: b.number,
                id: b.id.clone(),
                sum,
            });
        }
        for v in &mut values[range] {
            *v /= sum;
        }
    }
    Ok(DemandProbabilities {
        values,
        source: pi.source.clone(),
    })
}

/// Binary matrix whose columns are rational types: one selected patch per
/// block. A column is stored as the block-local index chosen in each block.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    rows: VectorRepresentation,
    columns: Vec<Vec<usize>>,
}

impl RationalMatrix {
    /// Columns are sorted into canonical (lexicographic) order and
    /// deduplicated.
    pub fn new(rows: VectorRepresentation, mut columns: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        for (h, col) in columns.iter().enumerate() {
            if col.len() != rows.n_blocks() {
                return Err(ModelError::MalformedColumn {
                    column: h,
                    reason: format!("{} selections for {} blocks", col.len(), rows.n_blocks()),
                });
            }
            if let Some((block, &i)) = col
                .iter()
                .enumerate()
                .find(|(b, i)| **i >= rows.blocks()[*b].len)
            {
                return Err(ModelError::MalformedColumn {
                    column: h,
                    reason: format!("patch {i} out of range in block {block}"),
                });
            }
        }
        columns.sort();
        columns.dedup();
        Ok(Self { rows, columns })
    }

    pub fn rows(&self) -> &VectorRepresentation {
        &self.rows
    }

    /// `H`, the number of types.
    pub fn n_types(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    /// Block-local selections of column `h`.
    pub fn column(&self, h: usize) -> &[usize] {
        &self.columns[h]
    }

    /// Global rows set to one in column `h`, in block order.
    pub fn column_rows(&self, h: usize) -> impl Iterator<Item = usize> + '_ {
        self.columns[h]
            .iter()
            .zip(self.rows.blocks())
            .map(|(i, b)| b.start + i)
    }

    pub fn get(&self, row: usize, h: usize) -> bool {
        let block = self.rows.block_of_row(row);
        self.columns[h][block] + self.rows.blocks()[block].start == row
    }

    /// Dense 0/1 matrix, rows by columns.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.n_types()]; self.n_rows()];
        for h in 0..self.n_types() {
            for r in self.column_rows(h) {
                dense[r][h] = 1;
            }
        }
        dense
    }

    /// `A nu`.
    pub fn apply(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        for (h, w) in nu.iter().enumerate() {
            for r in self.column_rows(h) {
                out[r] += w;
            }
        }
        out
    }
}

/// The counterfactual-augmented system with its type matrix split into
/// counterfactual rows (block 0) and observed rows (blocks 1..=J).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    system: BudgetSystem,
    matrix: RationalMatrix,
    observed: VectorRepresentation,
    refinement_map: Vec<Vec<usize>>,
}

impl AugmentedSystem {
    pub(crate) fn new(
        system: BudgetSystem,
        matrix: RationalMatrix,
        observed: VectorRepresentation,
        refinement_map: Vec<Vec<usize>>,
    ) -> Self {
        Self {
            system,
            matrix,
            observed,
            refinement_map,
        }
    }

    pub fn system(&self) -> &BudgetSystem {
        &self.system
    }

    pub fn matrix(&self) -> &RationalMatrix {
        &self.matrix
    }

    pub fn rep(&self) -> &VectorRepresentation {
        self.matrix.rows()
    }

    /// Counterfactual rows: the whole of block 0.
    pub fn rows_0(&self) -> Range<usize> {
        self.rep().blocks()[0].range()
    }

    /// Observed rows: blocks 1..=J.
    pub fn rows_1(&self) -> Range<usize> {
        self.rows_0().end..self.rep().len()
    }

    pub fn counterfactual_patches(&self) -> &[Patch] {
        self.rep().block_patches(0)
    }

    /// Blocks of the observed rows.
    pub fn observed_blocks(&self) -> &[Block] {
        &self.rep().blocks()[1..]
    }

    /// Vector representation of the observed system before refinement.
    pub fn unrefined(&self) -> &VectorRepresentation {
        &self.observed
    }

    /// For each row of [`Self::unrefined`], the augmented rows it splits into.
    pub fn refinement_map(&self) -> &[Vec<usize>] {
        &self.refinement_map
    }

    /// Counterfactual row selected by type `h`, as a block-0 local index.
    pub fn counterfactual_choice(&self, h: usize) -> usize {
        self.matrix.column(h)[0]
    }
}
