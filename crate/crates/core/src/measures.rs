//! Cell-level measure machinery: the self-similar reference measure, cell
//! histograms from simulation, and exact/statistical verifiers for the
//! group-invariance identity, the self-similar identity, and the shift
//! identity for non-root starts.
//!
//! Measures are represented at cell resolution only: a `CellSet` is a union
//! of same-level cells, a `CellHistogram` an empirical distribution over
//! them. Statistical comparisons use 4-standard-error bounds; with the
//! comparison counts used here the family-wise false-alarm rate stays far
//! below 1e-2 (Bonferroni), and raw z-scores and p-values are reported.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::Serialize;

use crate::error::GasketError;
use crate::exact::{exit_distribution, ExactDist};
use crate::symbolic::{GasketConfig, Word};
use crate::symmetry::{act_word, all_elements, stabilizer_of_zero, Permutation};
use crate::walk::{limit_cell_histogram, RngSpec, SimulationSpec};

/// A union of same-level cells, up to measure-zero overlaps at dyadic
/// points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    level: usize,
    members: BTreeSet<Word>,
}

impl CellSet {
    pub fn new(level: usize, members: BTreeSet<Word>) -> Result<CellSet, GasketError> {
        for m in &members {
            if m.len() != level {
                return Err(GasketError::MemberLength {
                    member: m.to_string(),
                    got: m.len(),
                    expected: level,
                });
            }
        }
        Ok(CellSet { level, members })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn members(&self) -> &BTreeSet<Word> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.members.contains(w)
    }

    /// Letterwise image under a symmetry.
    pub fn apply(&self, g: &Permutation) -> CellSet {
        CellSet {
            level: self.level,
            members: self.members.iter().map(|w| act_word(g, w)).collect(),
        }
    }

    pub fn is_invariant_under(&self, perms: &[Permutation]) -> bool {
        perms.iter().all(|g| self.apply(g) == *self)
    }

    /// Exact reference mass: `|members| / (d+1)^level`.
    pub fn mu_mass(&self, cfg: &GasketConfig) -> BigRational {
        BigRational::from(BigInt::from(self.members.len() as u64))
            * mu_cell_mass_at_level(self.level, cfg)
    }
}

/// Letterwise image of a cell set; free-function form of [`CellSet::apply`].
pub fn apply_group(set: &CellSet, g: &Permutation) -> CellSet {
    set.apply(g)
}

/// The reference measure of a single cell: `(d+1)^{-|x|}`.
pub fn mu_cell_mass(x: &Word, cfg: &GasketConfig) -> BigRational {
    mu_cell_mass_at_level(x.len(), cfg)
}

fn mu_cell_mass_at_level(level: usize, cfg: &GasketConfig) -> BigRational {
    BigRational::new(
        BigInt::one(),
        BigInt::from(cfg.alphabet_size() as u64).pow(level as u32),
    )
}

/// Adjacent transpositions; they generate the full symmetry group, so
/// invariance checks only need them.
fn group_generators(cfg: &GasketConfig) -> Vec<Permutation> {
    (0..cfg.d())
        .map(|i| Permutation::transposition(i as u8, i as u8 + 1, cfg))
        .collect()
}

fn stabilizer_generators(cfg: &GasketConfig) -> Vec<Permutation> {
    (1..cfg.d())
        .map(|i| Permutation::transposition(i as u8, i as u8 + 1, cfg))
        .collect()
}

/// Symmetrizes a set of 0-cells under the stabilizer of 0.
pub fn symmetrize_under_stabilizer(set: &CellSet, cfg: &GasketConfig) -> CellSet {
    let mut members = BTreeSet::new();
    for g in stabilizer_of_zero(cfg) {
        members.extend(set.members.iter().map(|w| act_word(&g, w)));
    }
    CellSet {
        level: set.level,
        members,
    }
}

/// The self-similar unfolding of a stabilizer-invariant set of 0-cells:
/// the shift preimage (leading 0 stripped) and the union of its reflected
/// copies across all `R_{0i}`.
///
/// With `symmetrize`, a non-invariant input is replaced by its stabilizer
/// orbit first; otherwise non-invariant input is rejected, matching the
/// hypothesis of the identity.
pub fn unfold_selfsimilar(
    set: &CellSet,
    cfg: &GasketConfig,
    symmetrize: bool,
) -> Result<(CellSet, CellSet), GasketError> {
    for m in &set.members {
        if !m.in_subtree(0) {
            return Err(GasketError::NotInZeroSubtree(m.to_string()));
        }
    }
    let set = if set.is_invariant_under(&stabilizer_generators(cfg)) {
        set.clone()
    } else if symmetrize {
        symmetrize_under_stabilizer(set, cfg)
    } else {
        return Err(GasketError::NotStabilizerInvariant);
    };

    let preimage_members: BTreeSet<Word> = set
        .members
        .iter()
        .map(|w| w.strip_first().expect("members are non-root"))
        .collect();
    let preimage = CellSet {
        level: set.level - 1,
        members: preimage_members,
    };

    let mut union_members = BTreeSet::new();
    for i in cfg.symbols() {
        let r = Permutation::transposition(0, i, cfg);
        union_members.extend(set.members.iter().map(|w| act_word(&r, w)));
    }
    let union_image = CellSet {
        level: set.level,
        members: union_members,
    };
    Ok((preimage, union_image))
}

/// The two set-algebra conclusions of the unfolding: the reflected union is
/// invariant under the whole group, and its trace on the 0-cells is the
/// original set.
pub fn reflection_union_identity_holds(set: &CellSet, cfg: &GasketConfig) -> bool {
    let Ok((_, union)) = unfold_selfsimilar(set, cfg, false) else {
        return false;
    };
    if !union.is_invariant_under(&group_generators(cfg)) {
        return false;
    }
    let trace: BTreeSet<Word> = union
        .members
        .iter()
        .filter(|w| w.in_subtree(0))
        .cloned()
        .collect();
    trace == *set.members()
}

/// Orbits of the 0-cells at `level` under the stabilizer of 0, each orbit
/// sorted, orbits ordered by their minimum.
pub fn stabilizer_orbits_of_zero_cells(level: usize, cfg: &GasketConfig) -> Vec<Vec<Word>> {
    assert!(level >= 1);
    let stab = stabilizer_of_zero(cfg);
    let mut seen: BTreeSet<Word> = BTreeSet::new();
    let mut orbits = Vec::new();
    for tail in crate::geometry::words_of_length(level - 1, cfg) {
        let mut symbols = vec![0u8];
        symbols.extend_from_slice(tail.symbols());
        let w = Word::from_symbols_unchecked(symbols);
        if seen.contains(&w) {
            continue;
        }
        let orbit: BTreeSet<Word> = stab.iter().map(|g| act_word(g, &w)).collect();
        seen.extend(orbit.iter().cloned());
        orbits.push(orbit.into_iter().collect());
    }
    orbits
}

/// Every stabilizer-invariant set of 0-cells at `level`, enumerated as
/// unions of orbits. Exponential in the orbit count; intended for small
/// levels.
pub fn all_invariant_zero_sets(level: usize, cfg: &GasketConfig) -> Vec<CellSet> {
    let orbits = stabilizer_orbits_of_zero_cells(level, cfg);
    let k = orbits.len();
    assert!(k < 26, "too many orbits to enumerate ({k})");
    let mut out = Vec::with_capacity(1 << k);
    for mask in 0u64..(1 << k) {
        let mut members = BTreeSet::new();
        for (i, orbit) in orbits.iter().enumerate() {
            if mask & (1 << i) != 0 {
                members.extend(orbit.iter().cloned());
            }
        }
        out.push(CellSet { level, members });
    }
    out
}

/// Empirical distribution over the cells of one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellHistogram {
    level: usize,
    counts: BTreeMap<Word, u64>,
    total: u64,
}

impl CellHistogram {
    pub fn from_counts(level: usize, counts: impl IntoIterator<Item = (Word, u64)>) -> Self {
        let counts: BTreeMap<Word, u64> = counts.into_iter().collect();
        let total = counts.values().sum();
        CellHistogram {
            level,
            counts,
            total,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<Word, u64> {
        &self.counts
    }

    pub fn count(&self, w: &Word) -> u64 {
        self.counts.get(w).copied().unwrap_or(0)
    }

    pub fn fraction(&self, w: &Word) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(w) as f64 / self.total as f64
        }
    }

    /// Empirical mass of a predicate over cells.
    pub fn mass_where<F: Fn(&Word) -> bool>(&self, pred: F) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let hits: u64 = self
            .counts
            .iter()
            .filter(|(w, _)| pred(w))
            .map(|(_, c)| *c)
            .sum();
        hits as f64 / self.total as f64
    }

    pub fn mass_of(&self, set: &CellSet) -> f64 {
        self.mass_where(|w| set.contains(w))
    }
}

/// Total-variation distance between two same-level histograms.
pub fn total_variation(a: &CellHistogram, b: &CellHistogram) -> Result<f64, GasketError> {
    if a.level != b.level {
        return Err(GasketError::LevelMismatch(a.level, b.level));
    }
    let mut words: BTreeSet<&Word> = a.counts.keys().collect();
    words.extend(b.counts.keys());
    Ok(words
        .into_iter()
        .map(|w| (a.fraction(w) - b.fraction(w)).abs())
        .sum::<f64>()
        / 2.0)
}

/// Total-variation distance between a histogram and an exact law.
pub fn total_variation_to_exact(
    a: &CellHistogram,
    exact: &ExactDist,
) -> Result<f64, GasketError> {
    if a.level != exact.level() {
        return Err(GasketError::LevelMismatch(a.level, exact.level()));
    }
    let mut acc = 0.0;
    let mut seen: BTreeSet<&Word> = BTreeSet::new();
    for (w, p) in exact.entries() {
        seen.insert(w);
        acc += (a.fraction(w) - rational_to_f64(p)).abs();
    }
    for w in a.counts.keys() {
        if !seen.contains(w) {
            acc += a.fraction(w);
        }
    }
    Ok(acc / 2.0)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// One statistical comparison row of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub lhs: String,
    pub rhs: String,
    pub estimate_lhs: f64,
    pub estimate_rhs: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
    pub pass: bool,
}

impl Comparison {
    /// A 4-standard-error band; when the standard error vanishes the
    /// estimates must agree exactly.
    fn evaluate(lhs: String, rhs: String, p1: f64, p2: f64, se: f64) -> Comparison {
        let diff = p1 - p2;
        let (z, pass) = if se == 0.0 {
            (if diff == 0.0 { 0.0 } else { f64::INFINITY }, diff == 0.0)
        } else {
            (diff / se, diff.abs() <= 4.0 * se)
        };
        Comparison {
            lhs,
            rhs,
            estimate_lhs: p1,
            estimate_rhs: p2,
            se,
            z,
            p_value: two_sided_p(z),
            pass,
        }
    }
}

fn two_sided_p(z: f64) -> f64 {
    if !z.is_finite() {
        return 0.0;
    }
    // Abramowitz–Stegun 7.1.26 for erf.
    let x = z.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erfc = poly * (-x * x).exp();
    erfc.min(1.0)
}

/// Verification report; `comparisons` follows the documented schema.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub identity: String,
    pub d: usize,
    pub level: usize,
    pub walks: u64,
    pub seed: u64,
    pub exact_pass: bool,
    pub comparisons: Vec<Comparison>,
    pub passed: bool,
}

impl VerifyReport {
    fn finish(mut self) -> VerifyReport {
        self.passed = self.exact_pass && self.comparisons.iter().all(|c| c.pass);
        self
    }
}

/// Parameters shared by the statistical verifiers.
#[derive(Debug, Clone)]
pub struct VerifySpec {
    pub cfg: GasketConfig,
    pub level: usize,
    pub walks: u64,
    pub master_seed: u64,
    pub burn: usize,
    pub sample_sets: usize,
    pub jobs: Option<usize>,
}

impl VerifySpec {
    pub fn new(cfg: GasketConfig, level: usize, walks: u64, master_seed: u64) -> VerifySpec {
        VerifySpec {
            cfg,
            level,
            walks,
            master_seed,
            burn: 15,
            sample_sets: 10,
            jobs: None,
        }
    }
}

/// Stream index reserved for sampling cell sets, away from walk streams.
const SET_SAMPLING_STREAM: u64 = u64::MAX;

fn sample_subsets(
    words: &[Word],
    count: usize,
    seed: u64,
    level: usize,
) -> Vec<CellSet> {
    let mut rng = RngSpec::new(seed, SET_SAMPLING_STREAM).stream();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let members: BTreeSet<Word> = words
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .cloned()
            .collect();
        if members.is_empty() || members.len() == words.len() {
            continue;
        }
        out.push(CellSet { level, members });
    }
    out
}

fn describe(set: &CellSet) -> String {
    if set.len() <= 8 {
        let names: Vec<String> = set.members.iter().map(|w| w.to_string()).collect();
        format!("{{{}}}", names.join(","))
    } else {
        format!("{{{} cells @L{}}}", set.len(), set.level)
    }
}

/// Standard error of the difference of two masses estimated from the same
/// sample: `Var(1_A - 1_B) = p_A + p_B - 2 p_{A∩B} - (p_A - p_B)^2`.
fn paired_se(hist: &CellHistogram, a: &CellSet, b: &CellSet) -> (f64, f64, f64) {
    let pa = hist.mass_of(a);
    let pb = hist.mass_of(b);
    let pboth = hist.mass_where(|w| a.contains(w) && b.contains(w));
    let var = (pa + pb - 2.0 * pboth - (pa - pb) * (pa - pb)).max(0.0);
    (pa, pb, (var / hist.total() as f64).sqrt())
}

fn two_sample_se(p1: f64, n1: u64, p2: f64, n2: u64) -> f64 {
    (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt()
}

/// Group-invariance verifier: exact equality of the exit law with every
/// group pushforward, plus sampled statistical comparisons of the limit
/// measure on cell sets against their group images.
pub fn verify_group_invariance(spec: &VerifySpec) -> Result<VerifyReport, GasketError> {
    let cfg = &spec.cfg;
    let group = all_elements(cfg);

    let exact = exit_distribution(&Word::root(), spec.level, cfg)?;
    let exact_pass = group.iter().all(|g| exact.pushforward(g) == exact);

    let hist = limit_cell_histogram(
        &SimulationSpec::new(*cfg, Word::root(), spec.level, spec.burn, spec.walks)
            .with_seed(spec.master_seed)
            .with_jobs(spec.jobs),
    )?;
    let words = crate::geometry::words_of_length(spec.level, cfg);
    let sets = sample_subsets(&words, spec.sample_sets, spec.master_seed, spec.level);

    let mut comparisons = Vec::new();
    for (si, b) in sets.iter().enumerate() {
        for g in &group {
            let gb = b.apply(g);
            let (p1, p2, se) = paired_se(&hist, b, &gb);
            comparisons.push(Comparison::evaluate(
                format!("nu(B{si}={})", describe(b)),
                format!("nu({g}·B{si}={})", describe(&gb)),
                p1,
                p2,
                se,
            ));
        }
    }

    Ok(VerifyReport {
        identity: "group".to_string(),
        d: cfg.d(),
        level: spec.level,
        walks: spec.walks,
        seed: spec.master_seed,
        exact_pass,
        comparisons,
        passed: false,
    }
    .finish())
}

/// Self-similar identity verifier: set-algebra conclusions exactly on each
/// sampled invariant set, the shift-preimage versus reflected-union masses
/// from one sample, and the folded-walk transfer against the plain walk.
pub fn verify_selfsimilar(spec: &VerifySpec) -> Result<VerifyReport, GasketError> {
    let cfg = &spec.cfg;
    assert!(spec.level >= 1, "self-similar identity needs level >= 1");

    // Sample stabilizer-invariant unions of 0-cell orbits.
    let orbits = stabilizer_orbits_of_zero_cells(spec.level, cfg);
    let mut rng = RngSpec::new(spec.master_seed, SET_SAMPLING_STREAM).stream();
    let mut sets = Vec::with_capacity(spec.sample_sets);
    while sets.len() < spec.sample_sets {
        let members: BTreeSet<Word> = orbits
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .flat_map(|o| o.iter().cloned())
            .collect();
        if members.is_empty() {
            continue;
        }
        sets.push(CellSet {
            level: spec.level,
            members,
        });
    }

    let mut exact_pass = true;
    for b in &sets {
        exact_pass &= reflection_union_identity_holds(b, cfg);
    }
    // Exact anchor: cell masses satisfy the unfolded identity.
    for n in 1..=spec.level {
        let lhs = mu_cell_mass_at_level(n - 1, cfg);
        let rhs = BigRational::from(BigInt::from(cfg.alphabet_size() as u64))
            * mu_cell_mass_at_level(n, cfg);
        exact_pass &= lhs == rhs;
    }

    let hist = limit_cell_histogram(
        &SimulationSpec::new(*cfg, Word::root(), spec.level, spec.burn, spec.walks)
            .with_seed(spec.master_seed)
            .with_jobs(spec.jobs),
    )?;
    let folded = crate::coupling::folded_limit_cell_histogram(
        &SimulationSpec::new(*cfg, Word::root(), spec.level, spec.burn, spec.walks)
            .with_seed(spec.master_seed)
            .with_stream_offset(spec.walks)
            .with_jobs(spec.jobs),
    )?;

    let mut comparisons = Vec::new();
    for (si, b) in sets.iter().enumerate() {
        let (pre, union) = unfold_selfsimilar(b, cfg, false)?;
        // One-sample comparison: the preimage event is read off the cell
        // prefix, the union event off the cell itself.
        let pre_mass = hist.mass_where(|w| pre.contains(&w.prefix(spec.level - 1)));
        let union_mass = hist.mass_of(&union);
        let joint = hist.mass_where(|w| {
            pre.contains(&w.prefix(spec.level - 1)) && union.contains(w)
        });
        let var = (pre_mass + union_mass
            - 2.0 * joint
            - (pre_mass - union_mass) * (pre_mass - union_mass))
            .max(0.0);
        let se = (var / hist.total() as f64).sqrt();
        comparisons.push(Comparison::evaluate(
            format!("nu(S0^-1 B{si}), B{si}={}", describe(b)),
            format!("nu(∪R0i B{si})"),
            pre_mass,
            union_mass,
            se,
        ));

        // Folded transfer: the folded limit lies in B iff the plain limit
        // lies in the shift preimage.
        let folded_mass = folded.mass_of(b);
        let se2 = two_sample_se(folded_mass, folded.total(), pre_mass, hist.total());
        comparisons.push(Comparison::evaluate(
            format!("P(folded limit ∈ B{si})"),
            format!("nu(F0^-1 B{si})"),
            folded_mass,
            pre_mass,
            se2,
        ));
    }

    Ok(VerifyReport {
        identity: "selfsimilar".to_string(),
        d: cfg.d(),
        level: spec.level,
        walks: spec.walks,
        seed: spec.master_seed,
        exact_pass,
        comparisons,
        passed: false,
    }
    .finish())
}

/// Shift-identity verifier for a start `x` in the 0-subtree: compares the
/// shifted-start measure of the shift preimage against the original-start
/// measure of the reflected union, on sampled invariant sets.
pub fn verify_shift_identity(
    start: &Word,
    spec: &VerifySpec,
) -> Result<VerifyReport, GasketError> {
    let cfg = &spec.cfg;
    if !start.in_subtree(0) {
        return Err(GasketError::NotInZeroSubtree(start.to_string()));
    }
    assert!(spec.level >= 1);
    let shifted = start.strip_first()?;

    let orbits = stabilizer_orbits_of_zero_cells(spec.level, cfg);
    let mut rng = RngSpec::new(spec.master_seed, SET_SAMPLING_STREAM).stream();
    let mut sets = Vec::with_capacity(spec.sample_sets);
    while sets.len() < spec.sample_sets {
        let members: BTreeSet<Word> = orbits
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .flat_map(|o| o.iter().cloned())
            .collect();
        if members.is_empty() {
            continue;
        }
        sets.push(CellSet {
            level: spec.level,
            members,
        });
    }

    let mut exact_pass = true;
    for b in &sets {
        exact_pass &= reflection_union_identity_holds(b, cfg);
    }

    // Walks from the shifted start, read at level-1 resolution.
    let shifted_hist = limit_cell_histogram(
        &SimulationSpec::new(*cfg, shifted.clone(), spec.level - 1, spec.burn, spec.walks)
            .with_seed(spec.master_seed)
            .with_jobs(spec.jobs),
    )?;
    // Walks from the original start, read at level resolution.
    let start_hist = limit_cell_histogram(
        &SimulationSpec::new(*cfg, start.clone(), spec.level, spec.burn, spec.walks)
            .with_seed(spec.master_seed)
            .with_stream_offset(spec.walks)
            .with_jobs(spec.jobs),
    )?;

    let mut comparisons = Vec::new();
    for (si, b) in sets.iter().enumerate() {
        let (pre, union) = unfold_selfsimilar(b, cfg, false)?;
        let lhs = shifted_hist.mass_of(&pre);
        let rhs = start_hist.mass_of(&union);
        let se = two_sample_se(lhs, shifted_hist.total(), rhs, start_hist.total());
        comparisons.push(Comparison::evaluate(
            format!("nu_[{shifted}](S0^-1 B{si}), B{si}={}", describe(b)),
            format!("nu_[{start}](∪R0i B{si})"),
            lhs,
            rhs,
            se,
        ));
    }

    Ok(VerifyReport {
        identity: "shift".to_string(),
        d: cfg.d(),
        level: spec.level,
        walks: spec.walks,
        seed: spec.master_seed,
        exact_pass,
        comparisons,
        passed: false,
    }
    .finish())
}

/// Runs the mass induction mechanically: starting from mass 1 at the root
/// and using only the group-invariance and self-similar identities at cell
/// level, derives the unique cell masses level by level.
///
/// Panics if the identities ever pin a class to two different values; the
/// returned maps contain the derived masses, which tests compare against
/// `(d+1)^{-n}`.
pub fn derive_cell_masses(
    cfg: &GasketConfig,
    max_level: usize,
) -> Vec<HashMap<Word, BigRational>> {
    let group = all_elements(cfg);
    let stab = stabilizer_of_zero(cfg);
    let mut levels: Vec<HashMap<Word, BigRational>> = Vec::with_capacity(max_level + 1);
    let mut current = HashMap::new();
    current.insert(Word::root(), BigRational::one());
    levels.push(current);

    for m in 0..max_level {
        let mut next: HashMap<Word, BigRational> = HashMap::new();
        for x in crate::geometry::words_of_length(m, cfg) {
            // A'_d-orbit of x: the shift preimage of the invariant set.
            let pre_orbit: BTreeSet<Word> = stab.iter().map(|g| act_word(g, &x)).collect();
            let lhs: BigRational = pre_orbit.iter().map(|w| levels[m][w].clone()).sum();

            // Full-group orbit of 0x: the reflected union of the invariant
            // set, all of whose members share one mass by group invariance.
            let zero_x = {
                let mut v = vec![0u8];
                v.extend_from_slice(x.symbols());
                Word::from_symbols_unchecked(v)
            };
            let full_orbit: BTreeSet<Word> =
                group.iter().map(|g| act_word(g, &zero_x)).collect();
            let mass = lhs / BigRational::from(BigInt::from(full_orbit.len() as u64));
            for w in full_orbit {
                if let Some(prev) = next.get(&w) {
                    assert_eq!(
                        *prev, mass,
                        "identities assign conflicting masses at level {}",
                        m + 1
                    );
                } else {
                    next.insert(w, mass.clone());
                }
            }
        }
        assert_eq!(
            next.len(),
            cfg.alphabet_size().pow((m + 1) as u32),
            "every level-{} cell must receive a mass",
            m + 1
        );
        levels.push(next);
    }
    levels
}
