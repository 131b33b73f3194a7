//! Seeded simple-random-walk simulation on `(X, E)`, level-hitting stopping
//! times, and the deep-run estimator of the limit cell.
//!
//! Randomness is counter-based: every walk draws from its own ChaCha stream
//! keyed by `(master_seed, stream_index)`, so merged histograms are
//! bit-identical regardless of worker count or scheduling order.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::GasketError;
use crate::measures::CellHistogram;
use crate::symbolic::{GasketConfig, Word};

/// Default per-walk step cap; exceeded only on pathological configurations.
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

/// A reproducible stream address: `(master_seed, stream_index)` selects an
/// independent ChaCha stream, with the step counter as the block position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> RngSpec {
        RngSpec {
            master_seed,
            stream_index,
        }
    }

    pub fn stream(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut s = self.master_seed;
        for chunk in seed.chunks_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A recorded walk: `steps[0]` is the start, consecutive entries adjacent.
#[derive(Debug, Clone)]
pub struct WalkPath {
    pub start: Word,
    pub steps: Vec<Word>,
    pub seed: u64,
    pub d: usize,
}

impl WalkPath {
    pub fn endpoint(&self) -> &Word {
        self.steps.last().expect("paths contain at least the start")
    }

    /// Checks the adjacency invariant along the whole path.
    pub fn is_valid(&self) -> bool {
        self.steps.first() == Some(&self.start)
            && self
                .steps
                .windows(2)
                .all(|p| crate::geometry::adjacent_combinatorial(&p[0], &p[1]))
    }
}

/// Degree of the vertex held in `buf`, without allocating.
fn degree_of_buf(buf: &[u8], d: usize) -> usize {
    let n = buf.len();
    if n == 0 {
        return d + 1;
    }
    let last = buf[n - 1];
    let run = buf.iter().rev().take_while(|&&t| t == last).count();
    // parent + children + siblings + optional suffix-exchange partner
    1 + (d + 1) + d + usize::from(run < n)
}

/// Moves `buf` to its neighbor at position `idx` in the canonical order
/// (parent, children by symbol, horizontal sorted lexicographically).
/// Must agree index-for-index with `NeighborList::flatten`.
fn step_to_index(buf: &mut Vec<u8>, idx: usize, d: usize) {
    let n = buf.len();
    if n == 0 {
        debug_assert!(idx <= d);
        buf.push(idx as u8);
        return;
    }
    if idx == 0 {
        buf.pop();
        return;
    }
    if idx <= d + 1 {
        buf.push((idx - 1) as u8);
        return;
    }
    // Horizontal block.
    let h = idx - (d + 2);
    let last = buf[n - 1];
    let run = buf.iter().rev().take_while(|&&t| t == last).count();
    let partner_first = run < n && last < buf[n - 1 - run];
    let sibling_rank = |t: usize| -> u8 {
        let t = t as u8;
        if t < last {
            t
        } else {
            t + 1
        }
    };
    if partner_first {
        if h == 0 {
            apply_partner(buf, run);
        } else {
            buf[n - 1] = sibling_rank(h - 1);
        }
    } else if h < d {
        buf[n - 1] = sibling_rank(h);
    } else {
        debug_assert!(run < n);
        apply_partner(buf, run);
    }
}

/// In-place suffix exchange: `w·i·j^r -> w·j·i^r`.
fn apply_partner(buf: &mut [u8], run: usize) {
    let n = buf.len();
    let i = buf[n - 1 - run];
    let j = buf[n - 1];
    buf[n - 1 - run] = j;
    for t in buf[n - run..].iter_mut() {
        *t = i;
    }
}

/// One step of the simple random walk: a uniformly random neighbor of `x`.
pub fn step<R: Rng>(x: &Word, rng: &mut R, cfg: &GasketConfig) -> Word {
    let mut buf = x.symbols().to_vec();
    let deg = degree_of_buf(&buf, cfg.d());
    let idx = rng.gen_range(0..deg);
    step_to_index(&mut buf, idx, cfg.d());
    Word::from_symbols_unchecked(buf)
}

/// Runs the walk from `start` until it first reaches word length `level`,
/// recording the full path.
pub fn run_to_level(
    start: &Word,
    level: usize,
    rng: &mut ChaCha8Rng,
    cfg: &GasketConfig,
    step_cap: u64,
) -> Result<WalkPath, GasketError> {
    if start.len() > level {
        return Err(GasketError::StartTooDeep {
            len: start.len(),
            bound: level,
        });
    }
    let d = cfg.d();
    let mut buf = start.symbols().to_vec();
    let mut steps = vec![start.clone()];
    let mut taken = 0u64;
    while buf.len() != level {
        if taken >= step_cap {
            return Err(GasketError::StepCapExceeded {
                cap: step_cap,
                target: level,
            });
        }
        let deg = degree_of_buf(&buf, d);
        let idx = rng.gen_range(0..deg);
        step_to_index(&mut buf, idx, d);
        let next = Word::from_symbols_unchecked(buf.clone());
        debug_assert!(crate::geometry::adjacent_combinatorial(
            steps.last().unwrap(),
            &next
        ));
        steps.push(next);
        taken += 1;
    }
    Ok(WalkPath {
        start: start.clone(),
        steps,
        seed: 0,
        d,
    })
}

/// Endpoint of the walk at its first visit to `level`, without recording
/// the path.
pub fn endpoint_at_level(
    start: &Word,
    level: usize,
    rng: &mut ChaCha8Rng,
    cfg: &GasketConfig,
    step_cap: u64,
) -> Result<Word, GasketError> {
    if start.len() > level {
        return Err(GasketError::StartTooDeep {
            len: start.len(),
            bound: level,
        });
    }
    let d = cfg.d();
    let mut buf = start.symbols().to_vec();
    let mut taken = 0u64;
    while buf.len() != level {
        if taken >= step_cap {
            return Err(GasketError::StepCapExceeded {
                cap: step_cap,
                target: level,
            });
        }
        let deg = degree_of_buf(&buf, d);
        let idx = rng.gen_range(0..deg);
        step_to_index(&mut buf, idx, d);
        taken += 1;
    }
    Ok(Word::from_symbols_unchecked(buf))
}

/// The deep-run estimator of the level-`level` cell containing the walk's
/// limit point: the length-`level` prefix of the first visit to
/// `level + burn`. Estimator bias vanishes geometrically in `burn`.
pub fn limit_cell_estimate(
    start: &Word,
    level: usize,
    burn: usize,
    rng: &mut ChaCha8Rng,
    cfg: &GasketConfig,
    step_cap: u64,
) -> Result<Word, GasketError> {
    let deep = endpoint_at_level(start, level + burn, rng, cfg, step_cap)?;
    Ok(deep.prefix(level))
}

/// Parameters for a batch of independent walks.
#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub cfg: GasketConfig,
    pub start: Word,
    pub level: usize,
    pub burn: usize,
    pub walks: u64,
    pub master_seed: u64,
    /// First stream index; lets disjoint batches share a master seed.
    pub stream_offset: u64,
    pub step_cap: u64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl SimulationSpec {
    pub fn new(cfg: GasketConfig, start: Word, level: usize, burn: usize, walks: u64) -> Self {
        SimulationSpec {
            cfg,
            start,
            level,
            burn,
            walks,
            master_seed: 0,
            stream_offset: 0,
            step_cap: DEFAULT_STEP_CAP,
            jobs: None,
        }
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn with_jobs(mut self, jobs: Option<usize>) -> Self {
        self.jobs = jobs;
        self
    }

    pub fn with_stream_offset(mut self, offset: u64) -> Self {
        self.stream_offset = offset;
        self
    }
}

/// Runs `spec.walks` independent walks and histograms an endpoint statistic.
/// The result is independent of worker count: walk `i` always consumes
/// stream `stream_offset + i`.
pub(crate) fn histogram_over_streams<F>(
    spec: &SimulationSpec,
    per_walk: F,
) -> Result<CellHistogram, GasketError>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Word, GasketError> + Sync,
{
    let run = || -> Result<HashMap<Word, u64>, GasketError> {
        (0..spec.walks)
            .into_par_iter()
            .try_fold(HashMap::new, |mut acc: HashMap<Word, u64>, i| {
                let mut rng =
                    RngSpec::new(spec.master_seed, spec.stream_offset + i).stream();
                let word = per_walk(&mut rng)?;
                *acc.entry(word).or_insert(0) += 1;
                Ok(acc)
            })
            .try_reduce(HashMap::new, |mut a, b| {
                for (w, c) in b {
                    *a.entry(w).or_insert(0) += c;
                }
                Ok(a)
            })
    };
    let counts = match spec.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    }?;
    Ok(CellHistogram::from_counts(spec.level, counts))
}

/// Histogram of the limit-cell estimator over independent walks.
pub fn limit_cell_histogram(spec: &SimulationSpec) -> Result<CellHistogram, GasketError> {
    histogram_over_streams(spec, |rng| {
        limit_cell_estimate(
            &spec.start,
            spec.level,
            spec.burn,
            rng,
            &spec.cfg,
            spec.step_cap,
        )
    })
}

/// Burn-stability diagnostic: total-variation distance between the
/// limit-cell histograms at `burn` and `burn + 5`, on independent streams.
pub fn burn_stability(
    spec: &SimulationSpec,
) -> Result<(f64, CellHistogram, CellHistogram), GasketError> {
    let base = limit_cell_histogram(spec)?;
    let mut deeper_spec = spec.clone();
    deeper_spec.burn = spec.burn + 5;
    deeper_spec.stream_offset = spec.stream_offset + spec.walks;
    let deeper = limit_cell_histogram(&deeper_spec)?;
    let tv = crate::measures::total_variation(&base, &deeper)?;
    Ok((tv, base, deeper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{degree, neighbors, words_up_to_length};

    fn cfg(d: usize) -> GasketConfig {
        GasketConfig::new(d).unwrap()
    }

    fn w(s: &str, d: usize) -> Word {
        Word::parse(s, &cfg(d)).unwrap()
    }

    /// The in-place sampler must agree index-for-index with the neighbor
    /// oracle's canonical order.
    #[test]
    fn sampler_matches_neighbor_list() {
        for d in 1..=3 {
            let c = cfg(d);
            for word in words_up_to_length(4, &c) {
                let flat = neighbors(&word, &c).flatten();
                assert_eq!(flat.len(), degree_of_buf(word.symbols(), d));
                for (idx, expect) in flat.iter().enumerate() {
                    let mut buf = word.symbols().to_vec();
                    step_to_index(&mut buf, idx, d);
                    assert_eq!(
                        Word::from_symbols_unchecked(buf),
                        *expect,
                        "word {} index {}",
                        word,
                        idx
                    );
                }
            }
        }
    }

    #[test]
    fn step_from_root_is_uniform_over_children() {
        let c = cfg(2);
        let mut rng = RngSpec::new(7, 0).stream();
        let mut counts = [0u64; 3];
        let trials = 300_000;
        for _ in 0..trials {
            let next = step(&Word::root(), &mut rng, &c);
            counts[next.first().unwrap() as usize] += 1;
        }
        let expect = trials as f64 / 3.0;
        let sigma = (trials as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn step_from_level_one_hits_each_of_four_neighbors() {
        // d=1: deg(j) = 2d+2 = 4.
        let c = cfg(1);
        let x = w("1", 1);
        assert_eq!(degree(&x, &c), 4);
        let mut rng = RngSpec::new(11, 0).stream();
        let mut counts: HashMap<Word, u64> = HashMap::new();
        let trials = 1_000_000u64;
        for _ in 0..trials {
            *counts.entry(step(&x, &mut rng, &c)).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 4);
        let expect = trials as f64 / 4.0;
        let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
        for (_, n) in counts {
            assert!((n as f64 - expect).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn step_from_interior_word_is_uniform_over_five() {
        let c = cfg(1);
        let x = w("10", 1);
        assert_eq!(degree(&x, &c), 5);
        let mut rng = RngSpec::new(13, 0).stream();
        let mut counts: HashMap<Word, u64> = HashMap::new();
        let trials = 1_000_000u64;
        for _ in 0..trials {
            *counts.entry(step(&x, &mut rng, &c)).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 5);
        let sigma = (trials as f64 * 0.2 * 0.8).sqrt();
        for (_, n) in counts {
            assert!((n as f64 - trials as f64 * 0.2).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn run_to_level_one_takes_single_step() {
        let c = cfg(2);
        let mut rng = RngSpec::new(3, 0).stream();
        let path = run_to_level(&Word::root(), 1, &mut rng, &c, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(path.steps.len(), 2);
        assert_eq!(path.endpoint().len(), 1);
        assert!(path.is_valid());
    }

    #[test]
    fn run_to_level_accepts_start_at_target_level() {
        let c = cfg(1);
        let start = w("01", 1);
        let mut rng = RngSpec::new(3, 1).stream();
        let path = run_to_level(&start, 2, &mut rng, &c, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(path.steps, vec![start]);
        assert!(run_to_level(&w("011", 1), 2, &mut rng, &c, DEFAULT_STEP_CAP).is_err());
    }

    #[test]
    fn step_cap_triggers() {
        let c = cfg(1);
        let mut rng = RngSpec::new(5, 0).stream();
        let err = endpoint_at_level(&Word::root(), 40, &mut rng, &c, 10).unwrap_err();
        match err {
            GasketError::StepCapExceeded { cap, target } => {
                assert_eq!(cap, 10);
                assert_eq!(target, 40);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn identical_seeds_give_identical_paths() {
        let c = cfg(2);
        let mk = || {
            let mut rng = RngSpec::new(42, 9).stream();
            run_to_level(&Word::root(), 6, &mut rng, &c, DEFAULT_STEP_CAP).unwrap()
        };
        let a = mk();
        let b = mk();
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn histogram_independent_of_worker_count() {
        let c = cfg(2);
        let spec = SimulationSpec::new(c, Word::root(), 2, 3, 20_000).with_seed(1234);
        let h1 = limit_cell_histogram(&spec.clone().with_jobs(Some(1))).unwrap();
        let h4 = limit_cell_histogram(&spec.clone().with_jobs(Some(4))).unwrap();
        let hdefault = limit_cell_histogram(&spec).unwrap();
        assert_eq!(h1, h4);
        assert_eq!(h1, hdefault);
    }

    #[test]
    fn exit_histogram_from_root_is_uniform() {
        let c = cfg(2);
        let walks = 90_000u64;
        let spec = SimulationSpec::new(c, Word::root(), 2, 0, walks).with_seed(404);
        let hist = limit_cell_histogram(&spec).unwrap();
        let p = 1.0 / 9.0;
        let se = (p * (1.0 - p) / walks as f64).sqrt();
        for word in crate::geometry::words_of_length(2, &c) {
            assert!((hist.fraction(&word) - p).abs() <= 4.0 * se, "{word}");
        }
    }

    #[test]
    fn exit_histogram_matches_exact_law_from_interior_start() {
        // start=0, N=2, d=1: exact law (7/20, 7/20, 3/20, 3/20).
        let c = cfg(1);
        let spec = SimulationSpec::new(c, w("0", 1), 2, 0, 200_000).with_seed(99);
        let hist = limit_cell_histogram(&spec).unwrap();
        let exact = crate::exact::exit_distribution(&w("0", 1), 2, &c).unwrap();
        for (word, p) in exact.entries() {
            let expect = {
                let num: f64 = p.numer().to_string().parse().unwrap();
                let den: f64 = p.denom().to_string().parse().unwrap();
                num / den
            };
            let got = hist.fraction(word);
            let se = (expect * (1.0 - expect) / spec.walks as f64).sqrt();
            assert!(
                (got - expect).abs() <= 4.0 * se,
                "{}: {} vs {}",
                word,
                got,
                expect
            );
        }
    }

    #[test]
    fn limit_cell_estimator_is_burn_stable() {
        let c = cfg(1);
        let spec = SimulationSpec::new(c, Word::root(), 2, 10, 50_000).with_seed(7);
        let (tv, _, _) = burn_stability(&spec).unwrap();
        // Two independent 50k-sample multinomials on 4 cells.
        assert!(tv < 0.02, "tv = {tv}");
    }

    /// Pushing every simulated endpoint through a symmetry matches a direct
    /// simulation, statistically.
    #[test]
    fn symmetry_pushforward_of_endpoints() {
        let c = cfg(2);
        let g = crate::symmetry::Permutation::transposition(0, 2, &c);
        let walks = 100_000u64;
        let direct = limit_cell_histogram(
            &SimulationSpec::new(c, Word::root(), 2, 0, walks).with_seed(21),
        )
        .unwrap();
        let moved_counts: HashMap<Word, u64> = limit_cell_histogram(
            &SimulationSpec::new(c, Word::root(), 2, 0, walks).with_seed(22),
        )
        .unwrap()
        .counts()
        .iter()
        .map(|(w_, n)| (crate::symmetry::act_word(&g, w_), *n))
        .collect();
        let moved = CellHistogram::from_counts(2, moved_counts);
        let tv = crate::measures::total_variation(&direct, &moved).unwrap();
        assert!(tv < 0.02, "tv = {tv}");
    }
}
