//! Words over the alphabet `{0, ..., d}`, their tree structure, parity, the
//! parity-changing neighbor sets, and exact dyadic-barycentric geometry of
//! cells and dyadic points.
//!
//! All geometry lives in barycentric coordinates over the simplex vertices
//! `p_0, ..., p_d`: a point is a vector of nonnegative integer numerators
//! summing to `2^level`. The contraction toward vertex `i` acts as
//! `b -> (b + e_i) / 2`, which keeps every comparison an exact integer
//! comparison. No floating point enters adjacency decisions.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::GasketError;

/// Largest supported dimension; symbols are stored as `u8`.
pub const MAX_DIMENSION: usize = 255;

/// Deepest barycentric level representable with `u128` numerators.
pub const MAX_BARY_LEVEL: u32 = 120;

/// Parameters of the d-dimensional gasket: alphabet `{0, ..., d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasketConfig {
    d: usize,
}

impl GasketConfig {
    pub fn new(d: usize) -> Result<Self, GasketError> {
        if !(1..=MAX_DIMENSION).contains(&d) {
            return Err(GasketError::InvalidDimension {
                got: d,
                max: MAX_DIMENSION,
            });
        }
        Ok(GasketConfig { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of symbols, `d + 1`.
    pub fn alphabet_size(&self) -> usize {
        self.d + 1
    }

    /// Hausdorff dimension `log(d+1) / log 2`. Informational only.
    pub fn hausdorff_dim(&self) -> f64 {
        ((self.d + 1) as f64).ln() / std::f64::consts::LN_2
    }

    pub fn symbols(&self) -> impl Iterator<Item = u8> + Clone {
        0..=(self.d as u8)
    }

    pub fn check_symbol(&self, symbol: u8) -> Result<(), GasketError> {
        if (symbol as usize) > self.d {
            Err(GasketError::SymbolOutOfRange {
                symbol,
                max: self.d as u8,
            })
        } else {
            Ok(())
        }
    }
}

/// A vertex of the Sierpinski graph: a finite word over `{0, ..., d}`.
/// The empty word is the root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<u8>);

impl Word {
    /// The root (empty word).
    pub fn root() -> Word {
        Word(Vec::new())
    }

    pub fn from_symbols(symbols: Vec<u8>, cfg: &GasketConfig) -> Result<Word, GasketError> {
        for &s in &symbols {
            cfg.check_symbol(s)?;
        }
        Ok(Word(symbols))
    }

    /// Constructs without validating symbols against a config; callers must
    /// guarantee every symbol is `<= d`.
    pub fn from_symbols_unchecked(symbols: Vec<u8>) -> Word {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn first(&self) -> Option<u8> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// The child word `x·i`.
    pub fn child(&self, symbol: u8) -> Word {
        let mut v = self.0.clone();
        v.push(symbol);
        Word(v)
    }

    /// Length-`n` prefix.
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    /// Drops the leading symbol; used for the shift on `0X`.
    pub fn strip_first(&self) -> Result<Word, GasketError> {
        if self.is_root() {
            return Err(GasketError::RootNotAllowed("strip_first"));
        }
        Ok(Word(self.0[1..].to_vec()))
    }

    /// True iff the word lies in the subtree `iX` (first symbol `i`).
    pub fn in_subtree(&self, i: u8) -> bool {
        self.first() == Some(i)
    }

    /// The constant word `i^n`.
    pub fn repeated(symbol: u8, n: usize) -> Word {
        Word(vec![symbol; n])
    }

    pub fn is_constant(&self) -> bool {
        match self.0.first() {
            None => true,
            Some(&s) => self.0.iter().all(|&t| t == s),
        }
    }

    /// Parses the text encoding: `-` or `ϑ` for the root; digit strings for
    /// d <= 9; comma-separated symbols otherwise.
    pub fn parse(input: &str, cfg: &GasketConfig) -> Result<Word, GasketError> {
        let s = input.trim();
        if s == "-" || s == "ϑ" {
            return Ok(Word::root());
        }
        if s.is_empty() {
            return Err(GasketError::WordParse {
                input: input.to_string(),
                reason: "empty (use `-` for the root)".to_string(),
            });
        }
        let symbols: Result<Vec<u8>, GasketError> = if s.contains(',') {
            s.split(',')
                .map(|part| {
                    part.trim().parse::<u8>().map_err(|e| GasketError::WordParse {
                        input: input.to_string(),
                        reason: format!("bad symbol `{part}`: {e}"),
                    })
                })
                .collect()
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|v| v as u8)
                        .ok_or_else(|| GasketError::WordParse {
                            input: input.to_string(),
                            reason: format!("`{c}` is not a digit"),
                        })
                })
                .collect()
        };
        Word::from_symbols(symbols?, cfg)
    }

    /// Text encoding: root is `-`; digits for d <= 9, comma-separated beyond.
    pub fn encode(&self, cfg: &GasketConfig) -> String {
        if self.is_root() {
            return "-".to_string();
        }
        if cfg.d() <= 9 {
            self.0.iter().map(|s| char::from(b'0' + s)).collect()
        } else {
            self.0
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return write!(f, "-");
        }
        if self.0.iter().all(|&s| s <= 9) {
            for s in &self.0 {
                write!(f, "{}", s)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({})", self)
    }
}

/// Drops the last symbol of `x`. The root has no ancestor.
pub fn ancestor(x: &Word) -> Result<Word, GasketError> {
    if x.is_root() {
        return Err(GasketError::RootNotAllowed("ancestor"));
    }
    Ok(Word(x.0[..x.0.len() - 1].to_vec()))
}

/// The parity of a word: its first symbol, with the root assigned 0.
pub fn parity(x: &Word) -> u8 {
    x.first().unwrap_or(0)
}

/// The parity-changing horizontal neighbor set of `x`:
/// all other length-1 words when `|x| = 1`; the single suffix-flipped word
/// `j i^{m-1}` when `x = i j^{m-1}` with `i != j`; empty otherwise.
pub fn neighbor_set(x: &Word, cfg: &GasketConfig) -> Result<BTreeSet<Word>, GasketError> {
    if x.is_root() {
        return Err(GasketError::RootNotAllowed("neighbor_set"));
    }
    let s = x.symbols();
    let mut out = BTreeSet::new();
    if s.len() == 1 {
        for j in cfg.symbols() {
            if j != s[0] {
                out.insert(Word(vec![j]));
            }
        }
        return Ok(out);
    }
    let i = s[0];
    let j = s[1];
    if i != j && s[1..].iter().all(|&t| t == j) {
        let mut flipped = vec![j];
        flipped.extend(std::iter::repeat_n(i, s.len() - 1));
        out.insert(Word(flipped));
    }
    Ok(out)
}

/// Exact barycentric point over `(p_0, ..., p_d)`: numerators over `2^level`,
/// kept canonical (not all numerators even unless `level == 0`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaryPoint {
    nums: Vec<u128>,
    level: u32,
}

impl BaryPoint {
    /// Canonicalizes on construction. Numerators must sum to `2^level`.
    pub fn new(nums: Vec<u128>, level: u32) -> Result<BaryPoint, GasketError> {
        if level > MAX_BARY_LEVEL {
            return Err(GasketError::LevelTooDeep(level, MAX_BARY_LEVEL));
        }
        let sum: u128 = nums.iter().sum();
        assert_eq!(
            sum,
            1u128 << level,
            "barycentric numerators must sum to 2^level"
        );
        let mut p = BaryPoint { nums, level };
        p.canonicalize();
        Ok(p)
    }

    /// The simplex vertex `p_i` in a `(d+1)`-coordinate system.
    pub fn vertex(i: u8, cfg: &GasketConfig) -> BaryPoint {
        let mut nums = vec![0u128; cfg.alphabet_size()];
        nums[i as usize] = 1;
        BaryPoint { nums, level: 0 }
    }

    pub fn numerators(&self) -> &[u128] {
        &self.nums
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    fn canonicalize(&mut self) {
        while self.level > 0 && self.nums.iter().all(|&n| n % 2 == 0) {
            for n in &mut self.nums {
                *n /= 2;
            }
            self.level -= 1;
        }
    }

    /// Applies the contraction toward vertex `i`: `b -> (b + e_i) / 2`.
    pub fn apply_map(&self, i: u8) -> Result<BaryPoint, GasketError> {
        if self.level + 1 > MAX_BARY_LEVEL {
            return Err(GasketError::LevelTooDeep(self.level + 1, MAX_BARY_LEVEL));
        }
        let mut nums = self.nums.clone();
        nums[i as usize] += 1u128 << self.level;
        let mut p = BaryPoint {
            nums,
            level: self.level + 1,
        };
        p.canonicalize();
        Ok(p)
    }

    /// Exact midpoint of two points.
    pub fn midpoint(a: &BaryPoint, b: &BaryPoint) -> Result<BaryPoint, GasketError> {
        let level = a.level.max(b.level);
        if level + 1 > MAX_BARY_LEVEL {
            return Err(GasketError::LevelTooDeep(level + 1, MAX_BARY_LEVEL));
        }
        let sa = 1u128 << (level - a.level);
        let sb = 1u128 << (level - b.level);
        let nums: Vec<u128> = a
            .nums
            .iter()
            .zip(&b.nums)
            .map(|(&x, &y)| x * sa + y * sb)
            .collect();
        let mut p = BaryPoint {
            nums,
            level: level + 1,
        };
        p.canonicalize();
        Ok(p)
    }

    /// Exact rational coordinates, for export.
    pub fn to_rationals(&self) -> Vec<BigRational> {
        let den = BigInt::from(1u128 << self.level);
        self.nums
            .iter()
            .map(|&n| BigRational::new(BigInt::from(n), den.clone()))
            .collect()
    }
}

impl fmt::Debug for BaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})/2^{}", self.nums, self.level)
    }
}

/// The dyadic point `p_x = F_{i_1...i_{n-1}}(p_{i_n})`; undefined at the root.
pub fn dyadic_point(x: &Word, cfg: &GasketConfig) -> Result<BaryPoint, GasketError> {
    if x.is_root() {
        return Err(GasketError::RootNotAllowed("dyadic_point"));
    }
    let s = x.symbols();
    let mut p = BaryPoint::vertex(s[s.len() - 1], cfg);
    for &i in s[..s.len() - 1].iter().rev() {
        p = p.apply_map(i)?;
    }
    Ok(p)
}

/// The `d+1` vertices of the cell `K_x`, exact with denominator `2^{|x|}`.
///
/// All vertices share the base sum `B = Σ_k 2^{n-1-k} e_{i_k}`; vertex `j`
/// is `(B + e_j) / 2^n`.
pub fn cell_vertices(x: &Word, cfg: &GasketConfig) -> Result<BTreeSet<BaryPoint>, GasketError> {
    let n = x.len();
    if n as u32 > MAX_BARY_LEVEL {
        return Err(GasketError::LevelTooDeep(n as u32, MAX_BARY_LEVEL));
    }
    let mut base = vec![0u128; cfg.alphabet_size()];
    for (k, &i) in x.symbols().iter().enumerate() {
        base[i as usize] += 1u128 << (n - 1 - k);
    }
    let mut out = BTreeSet::new();
    for j in cfg.symbols() {
        let mut nums = base.clone();
        nums[j as usize] += 1;
        out.insert(BaryPoint::new(nums, n as u32)?);
    }
    Ok(out)
}

/// The projection point `ι(x)`: the barycenter of `K_x`, as exact rationals.
/// Deterministic and invariant under every simplex symmetry.
pub fn projection_point(x: &Word, cfg: &GasketConfig) -> Result<Vec<BigRational>, GasketError> {
    let verts = cell_vertices(x, cfg)?;
    let m = cfg.alphabet_size();
    let mut acc = vec![BigRational::from(BigInt::from(0)); m];
    for v in &verts {
        for (a, r) in acc.iter_mut().zip(v.to_rationals()) {
            *a += r;
        }
    }
    let count = BigRational::from(BigInt::from(m as u64));
    Ok(acc.into_iter().map(|a| a / count.clone()).collect())
}
