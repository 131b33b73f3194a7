//! Exact oracles for the folded-walk law.
//!
//! These compute folded-prefix probabilities without enumerating paths and
//! without the path-level fold: the walk between jump times is an absorbing
//! excursion inside the skip set `{Y} ∪ {root} ∪ N_Y`, solved exactly, and
//! the `(jump value, reflection product)` pair evolves by small dynamic
//! programs. Together with exhaustive path enumeration pushed through the
//! real fold, this pins the folded law with zero tolerance at any horizon.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::exact::solver::solve_rational_system;
use crate::geometry::neighbors;
use crate::symbolic::{neighbor_set, parity, GasketConfig, Word};
use crate::symmetry::{act_word, all_elements, Permutation};

use super::{deg_zero, fold_path};

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The skip set of a jump value: the value itself, the root, and the
/// parity-changing neighbor set.
fn skip_set(y: &Word, cfg: &GasketConfig) -> Vec<Word> {
    let mut s = vec![y.clone(), Word::root()];
    s.extend(neighbor_set(y, cfg).expect("jump values are never the root"));
    s
}

/// The reference law: `P(W_0..W_m = z) = ∏_{k<m} 1/deg_0(z_k)` for the
/// simple random walk on the induced subgraph `0X` started at `0`.
pub fn srw_prefix_probability(z: &[Word], cfg: &GasketConfig) -> BigRational {
    assert!(!z.is_empty());
    if z[0].symbols() != [0] {
        return BigRational::zero();
    }
    let mut p = BigRational::one();
    for pair in z.windows(2) {
        let nbrs: Vec<Word> = neighbors(&pair[0], cfg)
            .flatten()
            .into_iter()
            .filter(|nb| nb.in_subtree(0))
            .collect();
        if !nbrs.contains(&pair[1]) {
            return BigRational::zero();
        }
        p *= ratio(1, deg_zero(&pair[0], cfg).expect("0X word") as u64);
    }
    p
}

/// All paths of the induced subgraph `0X` that start at `0`, of length
/// between 1 and `max_len` positions.
pub fn zero_subtree_paths_from_zero(max_len: usize, cfg: &GasketConfig) -> Vec<Vec<Word>> {
    let start = Word::from_symbols_unchecked(vec![0]);
    let mut out = Vec::new();
    let mut path = vec![start];
    extend_zero_paths(&mut path, max_len, cfg, &mut out);
    out
}

fn extend_zero_paths(
    path: &mut Vec<Word>,
    max_len: usize,
    cfg: &GasketConfig,
    out: &mut Vec<Vec<Word>>,
) {
    out.push(path.clone());
    if path.len() == max_len {
        return;
    }
    let nbrs: Vec<Word> = neighbors(path.last().unwrap(), cfg)
        .flatten()
        .into_iter()
        .filter(|nb| nb.in_subtree(0))
        .collect();
    for nb in nbrs {
        path.push(nb);
        extend_zero_paths(path, max_len, cfg, out);
        path.pop();
    }
}

/// Value of the fold transition out of a skip-set excursion: the walk left
/// the excursion at `u`; returns the updated reflection product and the
/// folded value of the new jump state.
fn fold_transition(
    y: &Word,
    g: &Permutation,
    u: &Word,
    cfg: &GasketConfig,
) -> (Permutation, Word) {
    let i = parity(y);
    let j = parity(u);
    let g2 = if i == j {
        g.clone()
    } else {
        g.compose(&Permutation::transposition(i, j, cfg))
    };
    let z_tilde = act_word(&g2, u);
    (g2, z_tilde)
}

/// Exact `P(Z̃_0..Z̃_m = z)` for the walk started at the root, with no
/// horizon: absorbing excursion systems solved backward over the fold index.
pub fn folded_prefix_probability(z: &[Word], cfg: &GasketConfig) -> BigRational {
    assert!(!z.is_empty());
    if z[0].symbols() != [0] {
        return BigRational::zero();
    }
    let m = z.len() - 1;
    let group = all_elements(cfg);
    let alphabet = cfg.alphabet_size() as u64;

    // fresh_value[g] = P(success | arrived at Y_k = g^{-1} z_k with product g).
    let mut next: HashMap<Permutation, BigRational> = group
        .iter()
        .map(|g| (g.clone(), BigRational::one()))
        .collect();
    for k in (0..m).rev() {
        let mut table = HashMap::new();
        for g in &group {
            let y = act_word(&g.inverse(), &z[k]);
            let value = excursion_success_probability(&y, g, &z[k + 1], &next, cfg);
            table.insert(g.clone(), value);
        }
        next = table;
    }

    let mut total = BigRational::zero();
    for i in cfg.symbols() {
        let g0 = Permutation::transposition(0, i, cfg);
        let contribution = if m == 0 {
            BigRational::one()
        } else {
            next[&g0].clone()
        };
        total += ratio(1, alphabet) * contribution;
    }
    total
}

/// Solves the absorbing excursion inside the skip set of `y`: returns the
/// probability, starting fresh at `y`, of the excursion outcome valued by
/// `out_value` at each exit vertex.
fn excursion_value(
    y: &Word,
    cfg: &GasketConfig,
    out_value: impl Fn(&Word) -> BigRational,
) -> BigRational {
    let skip = skip_set(y, cfg);
    let n = skip.len();
    let pos = |w: &Word| skip.iter().position(|s| s == w);

    let mut a = vec![vec![BigRational::zero(); n]; n];
    let mut b = vec![BigRational::zero(); n];
    for (row, w) in skip.iter().enumerate() {
        a[row][row] = BigRational::one();
        let nbrs = neighbors(w, cfg).flatten();
        let step = ratio(1, nbrs.len() as u64);
        for u in &nbrs {
            match pos(u) {
                Some(col) => a[row][col] -= &step,
                None => b[row] += &step * out_value(u),
            }
        }
    }
    let v = solve_rational_system(a, b).expect("excursion chains are absorbing");
    v[0].clone() // skip[0] is the fresh state y
}

/// Probability, starting fresh at `y` with reflection product `g`, that the
/// next accepted jump folds onto `target` and the remaining fold succeeds
/// (per `next_values`).
fn excursion_success_probability(
    y: &Word,
    g: &Permutation,
    target: &Word,
    next_values: &HashMap<Permutation, BigRational>,
    cfg: &GasketConfig,
) -> BigRational {
    excursion_value(y, cfg, |u| {
        let (g2, z_tilde) = fold_transition(y, g, u, cfg);
        if z_tilde == *target {
            next_values[&g2].clone()
        } else {
            BigRational::zero()
        }
    })
}

/// Exact law of the next jump value: the exit distribution of the skip-set
/// excursion started fresh at `y`.
pub fn jump_exit_distribution(y: &Word, cfg: &GasketConfig) -> Vec<(Word, BigRational)> {
    let skip = skip_set(y, cfg);
    let mut targets: std::collections::BTreeSet<Word> = std::collections::BTreeSet::new();
    for w in &skip {
        for u in neighbors(w, cfg).flatten() {
            if !skip.contains(&u) {
                targets.insert(u);
            }
        }
    }
    targets
        .into_iter()
        .map(|t| {
            let p = excursion_value(y, cfg, |u| {
                if *u == t {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            });
            (t, p)
        })
        // Exits reachable only from unvisited skip states carry no mass.
        .filter(|(_, p)| !p.is_zero())
        .collect()
}

/// Exact censored probability `P(Z̃_0..Z̃_m = z, T_m <= horizon)` via a
/// forward dynamic program over `(fold index, reflection product, walk
/// position)` states.
pub fn censored_prefix_probability(
    z: &[Word],
    horizon: usize,
    cfg: &GasketConfig,
) -> BigRational {
    assert!(!z.is_empty());
    if z[0].symbols() != [0] || horizon == 0 {
        return BigRational::zero();
    }
    let m = z.len() - 1;
    let alphabet = cfg.alphabet_size() as u64;
    if m == 0 {
        // T_0 = 1 from the root, and the fold always opens at 0.
        return BigRational::one();
    }

    type State = (usize, Permutation, Word);
    let mut mass: HashMap<State, BigRational> = HashMap::new();
    for i in cfg.symbols() {
        let g0 = Permutation::transposition(0, i, cfg);
        let y0 = Word::from_symbols_unchecked(vec![i]);
        *mass.entry((0, g0, y0)).or_insert_with(BigRational::zero) += ratio(1, alphabet);
    }

    let mut success = BigRational::zero();
    for _n in 2..=horizon {
        let mut fresh: HashMap<State, BigRational> = HashMap::new();
        for ((k, g, w), p) in &mass {
            let y = act_word(&g.inverse(), &z[*k]);
            let skip = skip_set(&y, cfg);
            let nbrs = neighbors(w, cfg).flatten();
            let step = ratio(1, nbrs.len() as u64);
            for u in nbrs {
                let share = p * &step;
                if skip.contains(&u) {
                    *fresh
                        .entry((*k, g.clone(), u))
                        .or_insert_with(BigRational::zero) += share;
                } else {
                    let (g2, z_tilde) = fold_transition(&y, g, &u, cfg);
                    if z_tilde == z[*k + 1] {
                        if *k + 1 == m {
                            success += share;
                        } else {
                            *fresh
                                .entry((*k + 1, g2, u))
                                .or_insert_with(BigRational::zero) += share;
                        }
                    }
                }
            }
        }
        mass = fresh;
    }
    success
}

/// Exhaustive enumeration of every walk path from the root of exactly
/// `horizon` steps, pushed through the real fold: returns the exact mass of
/// every realized folded prefix of length at most `max_prefix`.
pub fn enumerate_folded_prefix_masses(
    horizon: usize,
    max_prefix: usize,
    cfg: &GasketConfig,
) -> HashMap<Vec<Word>, BigRational> {
    let mut masses = HashMap::new();
    let mut path = vec![Word::root()];
    enumerate_rec(&mut path, 1, horizon, max_prefix, cfg, &mut masses);
    masses
}

fn enumerate_rec(
    path: &mut Vec<Word>,
    denominator: u64,
    horizon: usize,
    max_prefix: usize,
    cfg: &GasketConfig,
    masses: &mut HashMap<Vec<Word>, BigRational>,
) {
    if path.len() == horizon + 1 {
        let folded = fold_path(path, cfg).folded_values();
        let share = ratio(1, denominator);
        for len in 1..=folded.len().min(max_prefix) {
            *masses
                .entry(folded[..len].to_vec())
                .or_insert_with(BigRational::zero) += &share;
        }
        return;
    }
    let nbrs = neighbors(path.last().unwrap(), cfg).flatten();
    let deg = nbrs.len() as u64;
    for nb in nbrs {
        path.push(nb);
        enumerate_rec(path, denominator * deg, horizon, max_prefix, cfg, masses);
        path.pop();
    }
}
