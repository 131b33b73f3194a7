//! The reflection coupling: time-change the walk into the jump chain `Y_k`,
//! track parity changes and the running product of reflections, and fold the
//! walk onto the subtree `0X`.
//!
//! The fold skips visits to the root and to the previous jump state's
//! parity-changing neighbor set, accepts the first exit as the next jump
//! value, and composes a reflection whenever the accepted value changes
//! parity. The folded sequence is a simple random walk on `0X`.

#[cfg(any(test, feature = "oracles"))]
pub mod oracle;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::GasketError;
use crate::geometry::neighbors;
use crate::measures::CellHistogram;
use crate::symbolic::{neighbor_set, parity, GasketConfig, Word};
use crate::symmetry::{act_word, Permutation};
use crate::walk::{histogram_over_streams, SimulationSpec};

/// One row of a coupling trace; jump-chain fields are present exactly at
/// the stopping times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub n: usize,
    pub z: Word,
    pub k: Option<usize>,
    pub y: Option<Word>,
    pub l: Option<usize>,
    pub g: Option<Permutation>,
    pub z_tilde: Option<Word>,
}

/// Per-step record of a folded walk, mirroring the jump chain, parity
/// bookkeeping, and folded values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingTrace {
    pub rows: Vec<TraceRow>,
}

impl CouplingTrace {
    /// The realized `(T_k, Y_k)` sequence.
    pub fn y_chain(&self) -> Vec<(usize, Word)> {
        self.rows
            .iter()
            .filter(|r| r.k.is_some())
            .map(|r| (r.n, r.y.clone().expect("y present at stopping times")))
            .collect()
    }

    /// The folded values in jump order.
    pub fn folded_values(&self) -> Vec<Word> {
        self.rows
            .iter()
            .filter_map(|r| r.z_tilde.clone())
            .collect()
    }

    pub fn reflection_products(&self) -> Vec<Permutation> {
        self.rows.iter().filter_map(|r| r.g.clone()).collect()
    }
}

/// Incremental fold state; feed walk positions in order.
struct FoldState<'a> {
    cfg: &'a GasketConfig,
    current: Option<Word>,
    skip: Vec<Word>,
    g: Permutation,
    k: usize,
    parity_changes: usize,
}

/// Jump-chain data produced when a walk position is accepted as the next
/// `Y_k`; skipped positions produce nothing.
struct FoldStep {
    k: usize,
    l: usize,
    g: Permutation,
    z_tilde: Word,
}

impl<'a> FoldState<'a> {
    fn new(cfg: &'a GasketConfig) -> FoldState<'a> {
        FoldState {
            cfg,
            current: None,
            skip: Vec::new(),
            g: Permutation::identity(cfg),
            k: 0,
            parity_changes: 0,
        }
    }

    fn feed(&mut self, z: &Word) -> Option<FoldStep> {
        match &self.current {
            None => {
                if z.is_root() {
                    return None;
                }
                // T_0: the first non-root position.
                self.g = Permutation::transposition(0, parity(z), self.cfg);
                self.accept(z.clone(), 0)
            }
            Some(y) => {
                if z == y || z.is_root() || self.skip.contains(z) {
                    return None;
                }
                let i = parity(y);
                let j = parity(z);
                if j != i {
                    let r = Permutation::transposition(i, j, self.cfg);
                    debug_assert_ne!(
                        act_word(&r, z),
                        *y,
                        "reflected jump must not stand still"
                    );
                    self.g = self.g.compose(&r);
                    self.parity_changes += 1;
                }
                let k = self.k + 1;
                self.accept(z.clone(), k)
            }
        }
    }

    fn accept(&mut self, y: Word, k: usize) -> Option<FoldStep> {
        let z_tilde = act_word(&self.g, &y);
        debug_assert_eq!(parity(&z_tilde), 0, "folded values stay in 0X");
        self.skip = neighbor_set(&y, self.cfg)
            .expect("jump values are never the root")
            .into_iter()
            .collect();
        self.current = Some(y);
        self.k = k;
        Some(FoldStep {
            k,
            l: self.parity_changes,
            g: self.g.clone(),
            z_tilde,
        })
    }
}

/// Folds a walk path given as its position sequence. Consecutive positions
/// must be adjacent in `(X, E)`.
pub fn fold_path(steps: &[Word], cfg: &GasketConfig) -> CouplingTrace {
    debug_assert!(
        steps
            .windows(2)
            .all(|p| crate::geometry::adjacent_combinatorial(&p[0], &p[1])),
        "fold input must be a walk path"
    );
    let mut state = FoldState::new(cfg);
    let mut rows = Vec::with_capacity(steps.len());
    for (n, z) in steps.iter().enumerate() {
        let row = match state.feed(z) {
            Some(s) => TraceRow {
                n,
                z: z.clone(),
                k: Some(s.k),
                y: Some(z.clone()),
                l: Some(s.l),
                g: Some(s.g),
                z_tilde: Some(s.z_tilde),
            },
            None => TraceRow {
                n,
                z: z.clone(),
                k: None,
                y: None,
                l: None,
                g: None,
                z_tilde: None,
            },
        };
        rows.push(row);
    }
    CouplingTrace { rows }
}

/// Folds a recorded walk.
pub fn fold(path: &crate::walk::WalkPath, cfg: &GasketConfig) -> CouplingTrace {
    fold_path(&path.steps, cfg)
}

/// The realized `(T_k, Y_k)` sequence of a recorded walk.
pub fn extract_y_chain(
    path: &crate::walk::WalkPath,
    cfg: &GasketConfig,
) -> Vec<(usize, Word)> {
    fold(path, cfg).y_chain()
}

/// Runs the base walk until the folded walk first reaches word length
/// `level`; returns that folded vertex.
pub fn folded_walk_endpoint(
    start: &Word,
    level: usize,
    rng: &mut ChaCha8Rng,
    cfg: &GasketConfig,
    step_cap: u64,
) -> Result<Word, GasketError> {
    assert!(level >= 1, "folded exit level must be at least 1");
    let mut state = FoldState::new(cfg);
    let mut position = start.clone();
    if let Some(step) = state.feed(&position) {
        if step.z_tilde.len() == level {
            return Ok(step.z_tilde);
        }
    }
    let mut taken = 0u64;
    loop {
        if taken >= step_cap {
            return Err(GasketError::StepCapExceeded {
                cap: step_cap,
                target: level,
            });
        }
        position = crate::walk::step(&position, rng, cfg);
        taken += 1;
        if let Some(step) = state.feed(&position) {
            if step.z_tilde.len() == level {
                return Ok(step.z_tilde);
            }
        }
    }
}

/// Deep-run estimator of the level-`level` cell containing the folded
/// walk's limit, by analogy with the plain-walk estimator.
pub fn folded_limit_cell_estimate(
    start: &Word,
    level: usize,
    burn: usize,
    rng: &mut ChaCha8Rng,
    cfg: &GasketConfig,
    step_cap: u64,
) -> Result<Word, GasketError> {
    let deep = folded_walk_endpoint(start, level + burn, rng, cfg, step_cap)?;
    Ok(deep.prefix(level))
}

/// Histogram of folded limit cells over independent walks.
pub fn folded_limit_cell_histogram(
    spec: &SimulationSpec,
) -> Result<CellHistogram, GasketError> {
    histogram_over_streams(spec, |rng| {
        folded_limit_cell_estimate(
            &spec.start,
            spec.level,
            spec.burn,
            rng,
            &spec.cfg,
            spec.step_cap,
        )
    })
}

/// Degree within the induced subgraph `0X`.
pub fn deg_zero(w: &Word, cfg: &GasketConfig) -> Result<usize, GasketError> {
    if !w.in_subtree(0) {
        return Err(GasketError::NotInZeroSubtree(w.to_string()));
    }
    Ok(neighbors(w, cfg)
        .flatten()
        .into_iter()
        .filter(|nb| nb.in_subtree(0))
        .count())
}

/// One uniform step of the simple random walk on the induced subgraph
/// `0X`: the reference chain that the folded walk must match in law.
pub fn step_in_zero_subtree<R: Rng>(
    w: &Word,
    rng: &mut R,
    cfg: &GasketConfig,
) -> Result<Word, GasketError> {
    if !w.in_subtree(0) {
        return Err(GasketError::NotInZeroSubtree(w.to_string()));
    }
    let nbrs: Vec<Word> = neighbors(w, cfg)
        .flatten()
        .into_iter()
        .filter(|nb| nb.in_subtree(0))
        .collect();
    let idx = rng.gen_range(0..nbrs.len());
    Ok(nbrs[idx].clone())
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::geometry::{degree, words_up_to_length};
    use crate::walk::{run_to_level, RngSpec, DEFAULT_STEP_CAP};

    fn cfg(d: usize) -> GasketConfig {
        GasketConfig::new(d).unwrap()
    }

    fn w(s: &str, d: usize) -> Word {
        Word::parse(s, &cfg(d)).unwrap()
    }

    fn path_of(words: &[&str], d: usize) -> Vec<Word> {
        words.iter().map(|s| w(s, d)).collect()
    }

    /// The worked d=1 sample path: parity changes at the jumps into `10`
    /// and back into `01`, with the folded walk crossing through `011`.
    #[test]
    fn golden_trace_d1() {
        let c = cfg(1);
        let steps = path_of(&["-", "0", "-", "1", "10", "100", "011", "01", "00"], 1);
        let trace = fold_path(&steps, &c);

        let y = trace.y_chain();
        assert_eq!(
            y,
            vec![
                (1, w("0", 1)),
                (4, w("10", 1)),
                (5, w("100", 1)),
                (7, w("01", 1)),
                (8, w("00", 1)),
            ]
        );
        assert_eq!(
            trace.folded_values(),
            path_of(&["0", "01", "011", "01", "00"], 1)
        );
        let id = Permutation::identity(&c);
        let r01 = Permutation::transposition(0, 1, &c);
        assert_eq!(
            trace.reflection_products(),
            vec![id.clone(), r01.clone(), r01, id.clone(), id]
        );
        let ls: Vec<usize> = trace.rows.iter().filter_map(|r| r.l).collect();
        assert_eq!(ls, vec![0, 1, 1, 2, 2]);
    }

    #[test]
    fn y_chain_without_skips() {
        let c = cfg(1);
        let trace = fold_path(&path_of(&["-", "0", "00"], 1), &c);
        assert_eq!(
            trace.y_chain(),
            vec![(1, w("0", 1)), (2, w("00", 1))]
        );
    }

    #[test]
    fn y_chain_skips_neighbor_set_and_returns() {
        // Visits to 1 ∈ N_0 and the return to 0 are both skipped.
        let c = cfg(1);
        let trace = fold_path(&path_of(&["-", "0", "1", "0", "00"], 1), &c);
        assert_eq!(
            trace.y_chain(),
            vec![(1, w("0", 1)), (4, w("00", 1))]
        );
    }

    #[test]
    fn fold_without_parity_change_keeps_identity() {
        let c = cfg(1);
        let trace = fold_path(&path_of(&["-", "0", "00", "000"], 1), &c);
        assert_eq!(trace.folded_values(), path_of(&["0", "00", "000"], 1));
        assert!(trace.reflection_products().iter().all(|g| g.is_identity()));
    }

    #[test]
    fn fold_with_initial_reflection_flips_letterwise() {
        let c = cfg(1);
        let trace = fold_path(&path_of(&["-", "1", "10", "100"], 1), &c);
        assert_eq!(trace.folded_values(), path_of(&["0", "01", "011"], 1));
        let r01 = Permutation::transposition(0, 1, &c);
        assert!(trace.reflection_products().iter().all(|g| *g == r01));
    }

    #[test]
    fn folded_values_stay_in_zero_subtree_and_stay_adjacent() {
        for d in 1..=2 {
            let c = cfg(d);
            for seed in 0..30 {
                let mut rng = RngSpec::new(500 + seed, 0).stream();
                let path = run_to_level(&Word::root(), 5, &mut rng, &c, DEFAULT_STEP_CAP).unwrap();
                let folded = fold(&path, &c).folded_values();
                assert!(!folded.is_empty());
                for v in &folded {
                    assert_eq!(parity(v), 0);
                }
                for pair in folded.windows(2) {
                    assert!(
                        crate::geometry::adjacent_combinatorial(&pair[0], &pair[1]),
                        "folded jump {} -> {} not an edge",
                        pair[0],
                        pair[1]
                    );
                    assert!(pair[0].in_subtree(0) && pair[1].in_subtree(0));
                }
            }
        }
    }

    #[test]
    fn general_start_folds_from_its_own_reflection() {
        let c = cfg(1);
        let trace = fold_path(&path_of(&["10", "100"], 1), &c);
        // T_0 = 0 for a non-root start.
        assert_eq!(trace.y_chain()[0], (0, w("10", 1)));
        assert_eq!(trace.folded_values(), path_of(&["01", "011"], 1));
    }

    #[test]
    fn subgraph_degree_matches_full_degree_through_the_isomorphism() {
        for d in 1..=3 {
            let c = cfg(d);
            for word in words_up_to_length(4, &c) {
                let lifted = {
                    let mut v = vec![0u8];
                    v.extend_from_slice(word.symbols());
                    Word::from_symbols_unchecked(v)
                };
                assert_eq!(
                    deg_zero(&lifted, &c).unwrap(),
                    degree(&word, &c),
                    "word {}",
                    word
                );
            }
        }
        assert!(deg_zero(&w("1", 1), &cfg(1)).is_err());
    }

    #[test]
    fn folded_endpoint_at_level_one_is_always_zero() {
        let c = cfg(2);
        for seed in 0..20 {
            let mut rng = RngSpec::new(seed, 0).stream();
            let got =
                folded_walk_endpoint(&Word::root(), 1, &mut rng, &c, DEFAULT_STEP_CAP).unwrap();
            assert_eq!(got, w("0", 2));
        }
    }

    #[test]
    fn folded_exit_matches_relabeled_exact_law_d1() {
        // Through 0X ≅ X, the folded exit law at level 3 from 0 is the
        // plain exit law at level 2 from the root, relabeled w -> 0w.
        let c = cfg(1);
        let exact = crate::exact::exit_distribution(&Word::root(), 2, &c).unwrap();
        let walks = 100_000u64;
        let spec = SimulationSpec::new(c, Word::root(), 3, 0, walks).with_seed(314);
        let hist = folded_limit_cell_histogram(&spec).unwrap();
        for (word, p) in exact.entries() {
            let mut lifted = vec![0u8];
            lifted.extend_from_slice(word.symbols());
            let lifted = Word::from_symbols_unchecked(lifted);
            let expect = {
                let num: f64 = p.numer().to_string().parse().unwrap();
                let den: f64 = p.denom().to_string().parse().unwrap();
                num / den
            };
            let got = hist.fraction(&lifted);
            let se = (expect * (1.0 - expect) / walks as f64).sqrt();
            assert!(
                (got - expect).abs() <= 4.0 * se,
                "{lifted}: {got} vs {expect}"
            );
        }
    }

    /// Direct simulation of the reference chain on 0X: its exit law at
    /// level 2 is uniform, the target the folded walk is compared against.
    #[test]
    fn reference_walk_on_zero_subtree_exits_uniformly() {
        let c = cfg(2);
        let start = w("0", 2);
        let walks = 30_000u64;
        let mut counts: HashMap<Word, u64> = HashMap::new();
        for i in 0..walks {
            let mut rng = RngSpec::new(606, i).stream();
            let mut pos = start.clone();
            while pos.len() != 2 {
                pos = step_in_zero_subtree(&pos, &mut rng, &c).unwrap();
            }
            *counts.entry(pos).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 3);
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / walks as f64).sqrt();
        for (word, n) in counts {
            let got = n as f64 / walks as f64;
            assert!((got - p).abs() <= 4.0 * se, "{word}: {got}");
        }
    }

    #[test]
    fn folded_exit_uniform_at_level_two_d2() {
        let c = cfg(2);
        let walks = 90_000u64;
        let spec = SimulationSpec::new(c, Word::root(), 2, 0, walks).with_seed(2718);
        let hist = folded_limit_cell_histogram(&spec).unwrap();
        let expect = 1.0 / 3.0;
        let se = (expect * (1.0 - expect) / walks as f64).sqrt();
        for s in ["00", "01", "02"] {
            let got = hist.fraction(&w(s, 2));
            assert!((got - expect).abs() <= 4.0 * se, "{s}: {got}");
        }
        assert_eq!(hist.total(), walks);
    }
}
