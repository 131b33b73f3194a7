//! Exact rational computations on the walk: absorbing-chain exit laws at a
//! fixed level, the first-step system behind the jump-chain transition
//! probabilities, and Green functions / Martin kernels of the walk killed at
//! a finite radius.
//!
//! The level-`N` absorbing chain is encoded as the symmetric integer matrix
//! `A = diag(deg) - Adj` over the transient states `|x| < N`. Scaling each
//! harmonic equation by `deg(x)` keeps the system integer so the
//! fraction-free solver applies directly.

pub mod solver;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::GasketError;
use crate::geometry::{degree, neighbors, words_of_length, words_up_to_length};
use crate::symbolic::{GasketConfig, Word};
use crate::symmetry::{act_word, Permutation};

/// Default cap on transient-state counts for the exact single-solve path.
pub const EXIT_SOLVER_BUDGET: usize = 20_000;

/// Default cap for the dense exact inversion behind the Green table.
pub const GREEN_SOLVER_BUDGET: usize = 800;

/// Exact distribution over the words of one fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDist {
    level: usize,
    entries: Vec<(Word, BigRational)>,
}

impl ExactDist {
    fn new(level: usize, entries: Vec<(Word, BigRational)>) -> ExactDist {
        let total: BigRational = entries.iter().map(|(_, p)| p.clone()).sum();
        assert!(total.is_one(), "exit probabilities must sum to 1");
        assert!(entries.iter().all(|(_, p)| !p.is_negative()));
        ExactDist { level, entries }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Entries sorted by word.
    pub fn entries(&self) -> &[(Word, BigRational)] {
        &self.entries
    }

    pub fn prob(&self, w: &Word) -> BigRational {
        self.entries
            .binary_search_by(|(word, _)| word.cmp(w))
            .map(|i| self.entries[i].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    /// Total mass of a set of words.
    pub fn mass<'a>(&self, words: impl IntoIterator<Item = &'a Word>) -> BigRational {
        words.into_iter().map(|w| self.prob(w)).sum()
    }

    /// The image distribution under a symmetry: mass of `w` moves to `gw`.
    pub fn pushforward(&self, g: &Permutation) -> ExactDist {
        let mut entries: Vec<(Word, BigRational)> = self
            .entries
            .iter()
            .map(|(w, p)| (act_word(g, w), p.clone()))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        ExactDist::new(self.level, entries)
    }

    pub fn is_uniform(&self) -> bool {
        let n = BigInt::from(self.entries.len() as u64);
        let u = BigRational::new(BigInt::one(), n);
        self.entries.iter().all(|(_, p)| *p == u)
    }
}

/// Transient-state index for the chain killed at `level`: all words of
/// length `< level` in level-ordered lexicographic order.
struct StateIndex {
    words: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl StateIndex {
    fn new(level: usize, cfg: &GasketConfig, budget: usize) -> Result<StateIndex, GasketError> {
        let words = words_up_to_length(level - 1, cfg);
        if words.len() > budget {
            return Err(GasketError::SolverBudget {
                states: words.len(),
                budget,
            });
        }
        let index = words
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
        Ok(StateIndex { words, index })
    }

    fn len(&self) -> usize {
        self.words.len()
    }
}

/// `diag(deg) - Adj` restricted to the transient states. Symmetric and
/// strictly diagonally dominant (every state has at least one absorbing
/// neighbor within the truncation, or leads to one).
fn killed_laplacian(states: &StateIndex, cfg: &GasketConfig) -> Vec<Vec<BigInt>> {
    let n = states.len();
    let mut a = vec![vec![BigInt::zero(); n]; n];
    for (i, w) in states.words.iter().enumerate() {
        a[i][i] = BigInt::from(degree(w, cfg) as u64);
        for nb in neighbors(w, cfg).flatten() {
            if let Some(&j) = states.index.get(&nb) {
                a[i][j] = BigInt::from(-1);
            }
        }
    }
    a
}

/// Exact law of the walk's first entrance to level `N`, started at `start`.
///
/// Solves `A z = e_start`; the exit probability of a boundary word is the
/// sum of `z` over its transient neighbors.
pub fn exit_distribution(
    start: &Word,
    level: usize,
    cfg: &GasketConfig,
) -> Result<ExactDist, GasketError> {
    exit_distribution_with_budget(start, level, cfg, EXIT_SOLVER_BUDGET)
}

pub fn exit_distribution_with_budget(
    start: &Word,
    level: usize,
    cfg: &GasketConfig,
    budget: usize,
) -> Result<ExactDist, GasketError> {
    if start.len() >= level {
        return Err(GasketError::StartTooDeep {
            len: start.len(),
            bound: level - 1,
        });
    }
    let states = StateIndex::new(level, cfg, budget)?;
    let a = killed_laplacian(&states, cfg);
    let mut rhs = vec![BigInt::zero(); states.len()];
    rhs[states.index[start]] = BigInt::one();
    let z = solver::solve_integer_system(a, &rhs)?;

    let mut entries = Vec::new();
    for w in words_of_length(level, cfg) {
        let mut p = BigRational::zero();
        for nb in neighbors(&w, cfg).flatten() {
            if let Some(&j) = states.index.get(&nb) {
                p += &z[j];
            }
        }
        entries.push((w, p));
    }
    Ok(ExactDist::new(level, entries))
}

/// The first-step system behind the jump-chain transition law at level 1:
/// unknowns `(q_root, q_0, ..., q_d)` with
/// `q_root = Σ_j q_j/(d+1)` and
/// `q_j = 1/(2d+2) + q_root/(2d+2) + Σ_{l≠j} q_l/(2d+2)`.
pub fn first_step_system(cfg: &GasketConfig) -> Result<Vec<BigRational>, GasketError> {
    let d = cfg.d();
    let n = d + 2;
    let over_children = BigRational::new(BigInt::one(), BigInt::from((d + 1) as u64));
    let over_deg = BigRational::new(BigInt::one(), BigInt::from((2 * d + 2) as u64));

    let mut a = vec![vec![BigRational::zero(); n]; n];
    let mut b = vec![BigRational::zero(); n];
    // Row 0: q_root - Σ_j q_j/(d+1) = 0.
    a[0][0] = BigRational::one();
    for j in 0..=d {
        a[0][1 + j] = -over_children.clone();
    }
    // Row 1+j: q_j - q_root/(2d+2) - Σ_{l≠j} q_l/(2d+2) = 1/(2d+2).
    for j in 0..=d {
        a[1 + j][1 + j] = BigRational::one();
        a[1 + j][0] = -over_deg.clone();
        for l in 0..=d {
            if l != j {
                a[1 + j][1 + l] = -over_deg.clone();
            }
        }
        b[1 + j] = over_deg.clone();
    }
    solver::solve_rational_system(a, b)
}

/// Exact Green function of the walk killed on first reaching `radius`:
/// `G_R(x, y)` for all `|x|, |y| < R`.
pub struct TruncatedGreen {
    radius: usize,
    words: Vec<Word>,
    index: HashMap<Word, usize>,
    inverse_rows: Vec<Vec<BigInt>>,
    row_denoms: Vec<BigInt>,
    degrees: Vec<u64>,
}

impl TruncatedGreen {
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Transient states, level-ordered lexicographic.
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// `G_R(x, y)`, or `None` when either word is outside the truncation.
    pub fn value(&self, x: &Word, y: &Word) -> Option<BigRational> {
        let i = *self.index.get(x)?;
        let j = *self.index.get(y)?;
        Some(BigRational::new(
            &self.inverse_rows[i][j] * BigInt::from(self.degrees[j]),
            self.row_denoms[i].clone(),
        ))
    }

    /// `K_R(x, y) = G_R(x, y) / G_R(root, y)`.
    pub fn martin_kernel(&self, x: &Word, y: &Word) -> Option<BigRational> {
        let g = self.value(x, y)?;
        let base = self.value(&Word::root(), y)?;
        if base.is_zero() {
            return None;
        }
        Some(g / base)
    }

    /// Exact reversibility residual check `deg(x)G(x,y) == deg(y)G(y,x)`,
    /// via cross-multiplied integer comparison.
    pub fn is_reversible(&self) -> bool {
        let n = self.words.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // deg_i * deg_j * inv[i][j]/den_i == deg_j * deg_i * inv[j][i]/den_j
                let lhs = &self.inverse_rows[i][j] * &self.row_denoms[j];
                let rhs = &self.inverse_rows[j][i] * &self.row_denoms[i];
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }
}

pub fn truncated_green(radius: usize, cfg: &GasketConfig) -> Result<TruncatedGreen, GasketError> {
    truncated_green_with_budget(radius, cfg, GREEN_SOLVER_BUDGET)
}

pub fn truncated_green_with_budget(
    radius: usize,
    cfg: &GasketConfig,
    budget: usize,
) -> Result<TruncatedGreen, GasketError> {
    assert!(radius >= 1, "radius must be at least 1");
    let states = StateIndex::new(radius, cfg, budget)?;
    let a = killed_laplacian(&states, cfg);
    let (inverse_rows, row_denoms) = solver::invert_integer_matrix(a)?;
    let degrees = states.words.iter().map(|w| degree(w, cfg) as u64).collect();
    Ok(TruncatedGreen {
        radius,
        index: states.index,
        words: states.words,
        inverse_rows,
        row_denoms,
        degrees,
    })
}

/// `K_R(x, y) = G_R(x, y) / G_R(root, y)` for the walk killed at `radius`.
///
/// Convenience form that builds the whole killed-chain table; when several
/// kernels at one radius are needed, build [`truncated_green`] once and use
/// its method instead.
pub fn martin_kernel(
    radius: usize,
    x: &Word,
    y: &Word,
    cfg: &GasketConfig,
) -> Result<BigRational, GasketError> {
    let green = truncated_green(radius, cfg)?;
    green
        .martin_kernel(x, y)
        .ok_or(GasketError::StartTooDeep {
            len: x.len().max(y.len()),
            bound: radius - 1,
        })
}

/// One source row of the killed Green function computed in `f64` by
/// Gauss-Seidel sweeps; the fallback for state spaces past the exact budget.
#[derive(Debug, Clone)]
pub struct ApproxGreenRow {
    pub source: Word,
    pub values: Vec<(Word, f64)>,
    pub residual: f64,
    pub sweeps: usize,
}

pub fn truncated_green_row_approx(
    radius: usize,
    source: &Word,
    cfg: &GasketConfig,
    tolerance: f64,
    max_sweeps: usize,
    budget: usize,
) -> Result<ApproxGreenRow, GasketError> {
    let states = StateIndex::new(radius, cfg, budget)?;
    let n = states.len();
    let src = *states
        .index
        .get(source)
        .ok_or(GasketError::StartTooDeep {
            len: source.len(),
            bound: radius - 1,
        })?;
    let degs: Vec<f64> = states
        .words
        .iter()
        .map(|w| degree(w, cfg) as f64)
        .collect();
    let adj: Vec<Vec<usize>> = states
        .words
        .iter()
        .map(|w| {
            neighbors(w, cfg)
                .flatten()
                .into_iter()
                .filter_map(|nb| states.index.get(&nb).copied())
                .collect()
        })
        .collect();
    // Solve A v = e_src, A = diag(deg) - Adj.
    let mut v = vec![0.0f64; n];
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < max_sweeps && residual > tolerance {
        for i in 0..n {
            let s: f64 = adj[i].iter().map(|&j| v[j]).sum();
            let b = if i == src { 1.0 } else { 0.0 };
            v[i] = (b + s) / degs[i];
        }
        sweeps += 1;
        if sweeps % 8 == 0 || sweeps == max_sweeps {
            residual = (0..n)
                .map(|i| {
                    let s: f64 = adj[i].iter().map(|&j| v[j]).sum();
                    let b = if i == src { 1.0 } else { 0.0 };
                    (degs[i] * v[i] - s - b).abs()
                })
                .fold(0.0, f64::max);
        }
    }
    let values = states
        .words
        .iter()
        .enumerate()
        .map(|(j, w)| (w.clone(), v[j] * degs[j]))
        .collect();
    Ok(ApproxGreenRow {
        source: source.clone(),
        values,
        residual,
        sweeps,
    })
}
