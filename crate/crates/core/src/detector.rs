//! Tree-search detectors over the triangular real system `Y = R x + N`.
//!
//! Positions are searched from the last row of `R` upwards. A partial path
//! fixed at positions `i+1..n` gives position `i` the residual
//! `Y_i - sum_{j>i} R_ij x_j`; a child value `v` adds `(residual - R_ii v)^2`
//! to the parent's PED. Every such evaluation is one expanded node.
//!
//! * [`se_kbest_detect`] orders each parent's children with Schnorr-Euchner
//!   enumeration and builds the next K-list by distributed sorting: a pool
//!   holds the best unconsumed child of every parent, the pool minimum moves
//!   to the K-list and is replaced by the next child of the same parent.
//! * [`conventional_kbest_detect`] expands every parent to all `sqrt(M)`
//!   children and sorts globally.
//! * [`ml_detect`] enumerates all `M^N_T` vectors.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::modem::{compute_llrs, hard_demodulate, BitFrame, Constellation, ScoredPath};
use crate::numerics::RealSystem;
use crate::{Error, Result};

/// Default cap on `M^N_T` for exhaustive search.
pub const DEFAULT_ML_BUDGET: u64 = 10_000_000;

/// Index of the level nearest to `center`. Equidistant centers resolve to
/// the smaller level; centers beyond the lattice saturate at its boundary.
pub fn first_child(center: f64, levels: &[f64]) -> usize {
    debug_assert!(!levels.is_empty());
    let last = levels.len() - 1;
    // Start from the uniform-grid guess, then settle with exact distances so
    // the answer agrees with a comparison sort of |center - level|.
    let span = levels[last] - levels[0];
    let guess = if span > 0.0 {
        ((center - levels[0]) / span * last as f64).round()
    } else {
        0.0
    };
    let mut idx = guess.clamp(0.0, last as f64) as usize;
    let dist = |i: usize| (center - levels[i]).abs();
    while idx > 0 && dist(idx - 1) <= dist(idx) {
        idx -= 1;
    }
    while idx < last && dist(idx + 1) < dist(idx) {
        idx += 1;
    }
    idx
}

/// Schnorr-Euchner enumeration state for one parent at one level.
///
/// After [`SeEnumerator::first`], [`SeEnumerator::next_child`] walks outward
/// from the first child, each time taking whichever unvisited neighbour on
/// either side is closer to the center (the smaller level on ties).
#[derive(Debug, Clone)]
pub struct SeEnumerator<'a> {
    levels: &'a [f64],
    center: f64,
    first: usize,
    /// Unvisited indices below are `0..below`.
    below: usize,
    /// Unvisited indices above are `above..len`.
    above: usize,
    emitted: usize,
}

impl<'a> SeEnumerator<'a> {
    pub fn new(center: f64, levels: &'a [f64]) -> Self {
        let first = first_child(center, levels);
        Self {
            levels,
            center,
            first,
            below: first,
            above: first + 1,
            emitted: 1,
        }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn first(&self) -> usize {
        self.first
    }

    /// Children handed out so far, the first child included.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn next_child(&mut self) -> Option<usize> {
        let low = self.below.checked_sub(1);
        let high = (self.above < self.levels.len()).then_some(self.above);
        let pick = match (low, high) {
            (None, None) => return None,
            (Some(l), None) => l,
            (None, Some(h)) => h,
            (Some(l), Some(h)) => {
                if (self.center - self.levels[l]).abs() <= (self.center - self.levels[h]).abs() {
                    l
                } else {
                    h
                }
            }
        };
        if pick < self.first {
            self.below -= 1;
        } else {
            self.above += 1;
        }
        self.emitted += 1;
        Some(pick)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SeKbest,
    ConventionalKbest,
    Ml,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::SeKbest => "se_kbest",
            Algorithm::ConventionalKbest => "conventional_kbest",
            Algorithm::Ml => "ml",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "se_kbest" | "se-kbest" | "se" => Ok(Algorithm::SeKbest),
            "conventional_kbest" | "conventional-kbest" | "conventional" => {
                Ok(Algorithm::ConventionalKbest)
            }
            "ml" => Ok(Algorithm::Ml),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// K-list width; ignored by ML.
    pub k: usize,
    pub algorithm: Algorithm,
    pub sorted_qrd: bool,
    pub llr_enabled: bool,
    pub ml_budget: u64,
}

impl DetectorConfig {
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        Self {
            k,
            algorithm,
            sorted_qrd: false,
            llr_enabled: false,
            ml_budget: DEFAULT_ML_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 && self.algorithm != Algorithm::Ml {
            return Err(Error::Config("K must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub hard_bits: BitFrame,
    pub llrs: Option<Vec<f64>>,
    /// PED evaluations performed for this frame.
    pub nodes_expanded: u64,
    /// Surviving full paths in natural stacking order, ascending PED.
    pub final_candidates: Vec<ScoredPath>,
}

impl DetectionResult {
    pub fn best(&self) -> &ScoredPath {
        &self.final_candidates[0]
    }
}

/// Runs the configured detector and, if enabled, max-log LLRs with noise
/// variance `sigma2`.
pub fn detect(
    sys: &RealSystem,
    c: &Constellation,
    cfg: &DetectorConfig,
    sigma2: f64,
) -> Result<DetectionResult> {
    cfg.validate()?;
    let mut result = match cfg.algorithm {
        Algorithm::SeKbest => se_kbest_detect(sys, c, cfg.k)?,
        Algorithm::ConventionalKbest => conventional_kbest_detect(sys, c, cfg.k)?,
        Algorithm::Ml => ml_detect(sys, c, cfg.ml_budget)?,
    };
    if cfg.llr_enabled {
        result.llrs = Some(compute_llrs(&result.final_candidates, sigma2, c)?);
    }
    Ok(result)
}

/// A partial path; `symbols[t]` is the lattice index at position `n - 1 - t`.
#[derive(Debug, Clone)]
struct Partial {
    ped: f64,
    symbols: Vec<u16>,
}

/// Pool entry ordered by PED, then by parent index.
#[derive(Debug, Clone, Copy)]
struct PoolEntry {
    ped: f64,
    parent: usize,
    child: usize,
}

impl PartialEq for PoolEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PoolEntry {}

impl PartialOrd for PoolEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PoolEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ped
            .total_cmp(&other.ped)
            .then(self.parent.cmp(&other.parent))
            .then(self.child.cmp(&other.child))
    }
}

/// Per-position view of the triangular system shared by the tree searches.
struct Tree<'a> {
    sys: &'a RealSystem,
    levels: &'a [f64],
    n: usize,
}

impl<'a> Tree<'a> {
    fn new(sys: &'a RealSystem, c: &'a Constellation) -> Result<Self> {
        let n = sys.levels();
        if sys.r.rows() != n || sys.y_rot.len() != n || n % 2 != 0 {
            return Err(Error::Dimension(format!(
                "triangular system with R {}x{} and Y of length {}",
                sys.r.rows(),
                n,
                sys.y_rot.len()
            )));
        }
        Ok(Self {
            sys,
            levels: c.pam_levels(),
            n,
        })
    }

    /// `Y_i - sum_{j>i} R_ij x_j` for a path fixed below position `pos`.
    fn residual(&self, pos: usize, symbols: &[u16]) -> f64 {
        let row = self.sys.r.row(pos);
        let fixed: f64 = symbols
            .iter()
            .enumerate()
            .map(|(t, &s)| row[self.n - 1 - t] * self.levels[usize::from(s)])
            .sum();
        self.sys.y_rot[pos] - fixed
    }

    fn diag(&self, pos: usize) -> f64 {
        self.sys.r[(pos, pos)]
    }

    fn increment(&self, residual: f64, diag: f64, child: usize) -> f64 {
        let e = residual - diag * self.levels[child];
        e * e
    }

    fn extend(parent: &Partial, child: usize, ped: f64) -> Partial {
        let mut symbols = Vec::with_capacity(parent.symbols.len() + 1);
        symbols.extend_from_slice(&parent.symbols);
        symbols.push(child as u16);
        Partial { ped, symbols }
    }

    fn finish(&self, list: Vec<Partial>, c: &Constellation, nodes: u64) -> Result<DetectionResult> {
        let final_candidates: Vec<ScoredPath> = list
            .into_iter()
            .map(|p| {
                let detection_order: Vec<f64> = p
                    .symbols
                    .iter()
                    .rev()
                    .map(|&s| self.levels[usize::from(s)])
                    .collect();
                ScoredPath {
                    symbols: self.sys.unpermute(&detection_order),
                    ped: p.ped,
                }
            })
            .collect();
        let hard_bits = hard_demodulate(&final_candidates[0].symbols, c)?;
        Ok(DetectionResult {
            hard_bits,
            llrs: None,
            nodes_expanded: nodes,
            final_candidates,
        })
    }
}

/// Schnorr-Euchner K-best with distributed sorting.
pub fn se_kbest_detect(sys: &RealSystem, c: &Constellation, k: usize) -> Result<DetectionResult> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let tree = Tree::new(sys, c)?;
    let mut nodes = 0u64;
    let mut list = vec![Partial {
        ped: 0.0,
        symbols: Vec::new(),
    }];

    for pos in (0..tree.n).rev() {
        let diag = tree.diag(pos);
        let mut streams = Vec::with_capacity(list.len());
        let mut pool = BinaryHeap::with_capacity(list.len());
        for (parent, p) in list.iter().enumerate() {
            let residual = tree.residual(pos, &p.symbols);
            let e = SeEnumerator::new(residual / diag, tree.levels);
            let child = e.first();
            nodes += 1;
            pool.push(Reverse(PoolEntry {
                ped: p.ped + tree.increment(residual, diag, child),
                parent,
                child,
            }));
            streams.push((e, residual));
        }

        let mut next = Vec::with_capacity(k);
        while next.len() < k {
            let Some(Reverse(best)) = pool.pop() else {
                break;
            };
            next.push(Tree::extend(&list[best.parent], best.child, best.ped));
            if next.len() == k {
                break;
            }
            let (e, residual) = &mut streams[best.parent];
            if let Some(child) = e.next_child() {
                nodes += 1;
                pool.push(Reverse(PoolEntry {
                    ped: list[best.parent].ped + tree.increment(*residual, diag, child),
                    parent: best.parent,
                    child,
                }));
            }
        }
        list = next;
    }
    tree.finish(list, c, nodes)
}

/// K-best with full expansion and a global sort per level.
pub fn conventional_kbest_detect(
    sys: &RealSystem,
    c: &Constellation,
    k: usize,
) -> Result<DetectionResult> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let tree = Tree::new(sys, c)?;
    let mut nodes = 0u64;
    let mut list = vec![Partial {
        ped: 0.0,
        symbols: Vec::new(),
    }];

    for pos in (0..tree.n).rev() {
        let diag = tree.diag(pos);
        let mut children = Vec::with_capacity(list.len() * tree.levels.len());
        for (parent, p) in list.iter().enumerate() {
            let residual = tree.residual(pos, &p.symbols);
            for child in 0..tree.levels.len() {
                nodes += 1;
                children.push(PoolEntry {
                    ped: p.ped + tree.increment(residual, diag, child),
                    parent,
                    child,
                });
            }
        }
        children.sort_unstable();
        list = children
            .into_iter()
            .take(k)
            .map(|e| Tree::extend(&list[e.parent], e.child, e.ped))
            .collect();
    }
    tree.finish(list, c, nodes)
}

/// Number of candidate vectors `M^N_T` when it fits in a `u128`.
pub fn ml_candidates(order: usize, n_t: usize) -> Option<u128> {
    (order as u128).checked_pow(u32::try_from(n_t).ok()?)
}

/// Exhaustive minimisation of `||Y - R x||^2`.
pub fn ml_detect(sys: &RealSystem, c: &Constellation, budget: u64) -> Result<DetectionResult> {
    let tree = Tree::new(sys, c)?;
    let n_t = tree.n / 2;
    let within = ml_candidates(c.order(), n_t).is_some_and(|count| count <= u128::from(budget));
    if !within {
        return Err(Error::BudgetExceeded {
            order: c.order(),
            n_t,
            budget,
        });
    }
    let mut search = MlSearch {
        tree: &tree,
        path: Vec::with_capacity(tree.n),
        best: None,
        leaves: 0,
    };
    search.descend(tree.n - 1, 0.0);
    let best = search.best.expect("lattice is non-empty");
    let leaves = search.leaves;
    tree.finish(vec![best], c, leaves)
}

struct MlSearch<'t, 'a> {
    tree: &'t Tree<'a>,
    path: Vec<u16>,
    best: Option<Partial>,
    leaves: u64,
}

impl MlSearch<'_, '_> {
    fn descend(&mut self, pos: usize, ped: f64) {
        let residual = self.tree.residual(pos, &self.path);
        let diag = self.tree.diag(pos);
        for child in 0..self.tree.levels.len() {
            let total = ped + self.tree.increment(residual, diag, child);
            self.path.push(child as u16);
            if pos == 0 {
                self.leaves += 1;
                if self.best.as_ref().is_none_or(|b| total < b.ped) {
                    self.best = Some(Partial {
                        ped: total,
                        symbols: self.path.clone(),
                    });
                }
            } else {
                self.descend(pos - 1, total);
            }
            self.path.pop();
        }
    }
}

/// Node count of a detector from its closed-form complexity expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complexity {
    /// Exact count when it fits in a `u128`.
    pub exact: Option<u128>,
    pub log10: f64,
}

/// Closed-form node counts: `M^N_T` for ML, `K sqrt(M) 2N_T` for
/// conventional K-best and `(2K - 1) 2N_T` for Schnorr-Euchner K-best.
pub fn complexity_formula(algorithm: Algorithm, order: usize, n_t: usize, k: usize) -> Complexity {
    let side = (order as f64).sqrt().round() as u128;
    let (k, n_t_u) = (k as u128, n_t as u128);
    match algorithm {
        Algorithm::Ml => Complexity {
            exact: ml_candidates(order, n_t),
            log10: n_t as f64 * (order as f64).log10(),
        },
        Algorithm::ConventionalKbest => exact_complexity(k * side * 2 * n_t_u),
        Algorithm::SeKbest => exact_complexity((2 * k).saturating_sub(1) * 2 * n_t_u),
    }
}

pub(crate) fn exact_complexity(count: u128) -> Complexity {
    Complexity {
        exact: Some(count),
        log10: (count as f64).log10(),
    }
}
