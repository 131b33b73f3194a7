//! The symmetry group of the gasket, represented purely as permutations of
//! the alphabet: transposition reflections `R_ij`, the stabilizer of symbol
//! 0, and the actions on words and barycentric points.
//!
//! Composition convention: `(g ∘ h)(i) = g(h(i))`.

use std::fmt;

use crate::error::GasketError;
use crate::symbolic::{BaryPoint, GasketConfig, Word};

/// A permutation of `{0, ..., d}`, stored as its image vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<u8>,
}

impl Permutation {
    pub fn identity(cfg: &GasketConfig) -> Permutation {
        Permutation {
            images: (0..cfg.alphabet_size() as u8).collect(),
        }
    }

    /// Validates that `images` is a bijection of `{0, ..., len-1}`.
    pub fn from_images(images: Vec<u8>) -> Result<Permutation, GasketError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if (i as usize) >= n || seen[i as usize] {
                return Err(GasketError::NotAPermutation(images));
            }
            seen[i as usize] = true;
        }
        Ok(Permutation { images })
    }

    /// The reflection `R_ij` swapping symbols `i` and `j`; `R_ii` is the
    /// identity.
    pub fn transposition(i: u8, j: u8, cfg: &GasketConfig) -> Permutation {
        let mut g = Permutation::identity(cfg);
        g.images.swap(i as usize, j as usize);
        g
    }

    pub fn apply(&self, symbol: u8) -> u8 {
        self.images[symbol as usize]
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i as u8 == v)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            images: other.images.iter().map(|&i| self.apply(i)).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0u8; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            images[v as usize] = i as u8;
        }
        Permutation { images }
    }

    /// One-line serialization: the image vector, digits for alphabets up to
    /// 10 symbols, comma-separated beyond.
    pub fn encode(&self) -> String {
        if self.images.iter().all(|&i| i <= 9) {
            self.images.iter().map(|i| char::from(b'0' + i)).collect()
        } else {
            self.images
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }

    pub fn parse(s: &str, cfg: &GasketConfig) -> Result<Permutation, GasketError> {
        let images: Result<Vec<u8>, GasketError> = if s.contains(',') {
            s.split(',')
                .map(|part| {
                    part.trim().parse::<u8>().map_err(|e| GasketError::WordParse {
                        input: s.to_string(),
                        reason: format!("bad image `{part}`: {e}"),
                    })
                })
                .collect()
        } else {
            s.trim()
                .chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|v| v as u8)
                        .ok_or_else(|| GasketError::WordParse {
                            input: s.to_string(),
                            reason: format!("`{c}` is not a digit"),
                        })
                })
                .collect()
        };
        let images = images?;
        if images.len() != cfg.alphabet_size() {
            return Err(GasketError::NotAPermutation(images));
        }
        Permutation::from_images(images)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm({})", self.encode())
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

/// Letterwise action on words; fixes the root.
pub fn act_word(g: &Permutation, x: &Word) -> Word {
    Word::from_symbols_unchecked(x.symbols().iter().map(|&s| g.apply(s)).collect())
}

/// Action on barycentric points: coordinate `i` moves to slot `g(i)`.
pub fn act_point(g: &Permutation, b: &BaryPoint) -> BaryPoint {
    let nums = b.numerators();
    let mut out = vec![0u128; nums.len()];
    for (i, &n) in nums.iter().enumerate() {
        out[g.apply(i as u8) as usize] = n;
    }
    BaryPoint::new(out, b.level()).expect("permuting numerators preserves the sum")
}

/// All `(d+1)!` elements of the symmetry group, in lexicographic order of
/// their image vectors.
pub fn all_elements(cfg: &GasketConfig) -> Vec<Permutation> {
    let symbols: Vec<u8> = cfg.symbols().collect();
    let mut out = Vec::new();
    permute_into(&symbols, &mut Vec::new(), &mut out);
    out
}

/// The stabilizer of symbol 0: all `d!` permutations fixing 0, in
/// lexicographic order.
pub fn stabilizer_of_zero(cfg: &GasketConfig) -> Vec<Permutation> {
    let rest: Vec<u8> = cfg.symbols().skip(1).collect();
    let mut tails = Vec::new();
    permute_into(&rest, &mut Vec::new(), &mut tails);
    tails
        .into_iter()
        .map(|g| {
            let mut images = vec![0u8];
            images.extend(g.images);
            Permutation { images }
        })
        .collect()
}

fn permute_into(pool: &[u8], acc: &mut Vec<u8>, out: &mut Vec<Permutation>) {
    if pool.is_empty() {
        out.push(Permutation {
            images: acc.clone(),
        });
        return;
    }
    for (i, &s) in pool.iter().enumerate() {
        let mut rest = pool.to_vec();
        rest.remove(i);
        acc.push(s);
        permute_into(&rest, acc, out);
        acc.pop();
    }
}

/// The reflection product `G_p = R_{0,a_0} ∘ R_{a_0,a_1} ∘ ... ∘ R_{a_{p-1},a_p}`
/// for the parity sequence `a_0, ..., a_p`. Consecutive parities must differ
/// beyond the first entry.
pub fn random_reflection_product(
    parities: &[u8],
    cfg: &GasketConfig,
) -> Result<Permutation, GasketError> {
    if parities.is_empty() {
        return Err(GasketError::EmptyParitySequence);
    }
    for &a in parities {
        cfg.check_symbol(a)?;
    }
    for (idx, pair) in parities.windows(2).enumerate() {
        if pair[0] == pair[1] {
            return Err(GasketError::ParityRepeat(idx + 1));
        }
    }
    let mut g = Permutation::transposition(0, parities[0], cfg);
    for pair in parities.windows(2) {
        g = g.compose(&Permutation::transposition(pair[0], pair[1], cfg));
    }
    Ok(g)
}
