//! Edge structure of the augmented rooted tree `(X, E)`: vertical edges to
//! ancestors/children, horizontal edges between same-level words whose cells
//! meet, vertex degrees, and a lazy neighbor oracle.
//!
//! Horizontal adjacency has two implementations. The combinatorial one uses
//! the suffix-exchange rule (`x = w·i·j^k`, `y = w·j·i^k`, `i != j`); the
//! geometric one intersects exact cell-vertex sets and is the normative
//! definition. Their equivalence is checked exhaustively in tests.

use crate::symbolic::{ancestor, cell_vertices, GasketConfig, Word};

/// Complete neighbor record of a vertex, in canonical order:
/// parent, then children by symbol, then horizontal neighbors sorted
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborList {
    pub vertex: Word,
    pub parent: Option<Word>,
    pub children: Vec<Word>,
    pub horizontal: Vec<Word>,
}

impl NeighborList {
    pub fn degree(&self) -> usize {
        usize::from(self.parent.is_some()) + self.children.len() + self.horizontal.len()
    }

    /// All neighbors in the canonical order used by the walk sampler.
    pub fn flatten(&self) -> Vec<Word> {
        let mut out = Vec::with_capacity(self.degree());
        if let Some(p) = &self.parent {
            out.push(p.clone());
        }
        out.extend(self.children.iter().cloned());
        out.extend(self.horizontal.iter().cloned());
        out
    }

    /// Neighbor at position `index` in the canonical order.
    pub fn get(&self, index: usize) -> Option<&Word> {
        let mut i = index;
        if let Some(p) = &self.parent {
            if i == 0 {
                return Some(p);
            }
            i -= 1;
        }
        if i < self.children.len() {
            return Some(&self.children[i]);
        }
        i -= self.children.len();
        self.horizontal.get(i)
    }
}

/// True iff `(x, y)` is an edge, decided purely on word structure:
/// vertical when one is the ancestor of the other, horizontal by the
/// suffix-exchange rule.
pub fn adjacent_combinatorial(x: &Word, y: &Word) -> bool {
    if x == y {
        return false;
    }
    let (xs, ys) = (x.symbols(), y.symbols());
    if xs.len().abs_diff(ys.len()) == 1 {
        let (short, long) = if xs.len() < ys.len() { (xs, ys) } else { (ys, xs) };
        return &long[..short.len()] == short;
    }
    if xs.len() != ys.len() || xs.is_empty() {
        return false;
    }
    // Horizontal: after the common prefix, x = i·j^k and y = j·i^k.
    let t = xs.iter().zip(ys).position(|(a, b)| a != b).unwrap();
    let (i, j) = (xs[t], ys[t]);
    xs[t + 1..].iter().all(|&s| s == j) && ys[t + 1..].iter().all(|&s| s == i)
}

/// Same contract as [`adjacent_combinatorial`], but horizontal edges are
/// decided by exact cell geometry: distinct same-level cells are adjacent
/// iff their vertex sets intersect.
pub fn adjacent_geometric(x: &Word, y: &Word, cfg: &GasketConfig) -> bool {
    if x == y {
        return false;
    }
    let (xs, ys) = (x.symbols(), y.symbols());
    if xs.len().abs_diff(ys.len()) == 1 {
        let (short, long) = if xs.len() < ys.len() { (xs, ys) } else { (ys, xs) };
        return &long[..short.len()] == short;
    }
    if xs.len() != ys.len() {
        return false;
    }
    let vx = cell_vertices(x, cfg).expect("cell depth within barycentric range");
    let vy = cell_vertices(y, cfg).expect("cell depth within barycentric range");
    vx.intersection(&vy).next().is_some()
}

/// Horizontal neighbors of `x`: the `d` sibling words plus, unless `x` is a
/// constant word, the unique suffix-exchange partner across the nearest
/// dyadic point. Sorted lexicographically.
fn horizontal_neighbors(x: &Word, cfg: &GasketConfig) -> Vec<Word> {
    let s = x.symbols();
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let mut out: Vec<Word> = Vec::with_capacity(cfg.d() + 1);
    let last = s[n - 1];
    for j in cfg.symbols() {
        if j != last {
            let mut v = s.to_vec();
            v[n - 1] = j;
            out.push(Word::from_symbols_unchecked(v));
        }
    }
    // Maximal constant suffix run of length r < n yields the partner
    // w·j·i^r for x = w·i·j^r.
    let r = s.iter().rev().take_while(|&&t| t == last).count();
    if r < n {
        let i = s[n - r - 1];
        let mut v = s[..n - r - 1].to_vec();
        v.push(last);
        v.extend(std::iter::repeat_n(i, r));
        out.push(Word::from_symbols_unchecked(v));
    }
    out.sort();
    out
}

/// The lazy neighbor oracle: parent, children, and horizontal neighbors of
/// `x`, computed in `O(|x|·d)` without materializing the graph.
pub fn neighbors(x: &Word, cfg: &GasketConfig) -> NeighborList {
    let parent = ancestor(x).ok();
    let children = cfg.symbols().map(|i| x.child(i)).collect();
    NeighborList {
        vertex: x.clone(),
        parent,
        children,
        horizontal: horizontal_neighbors(x, cfg),
    }
}

/// Degree of `x` in `(X, E)` without building the neighbor list.
pub fn degree(x: &Word, cfg: &GasketConfig) -> usize {
    let d = cfg.d();
    let n = x.len();
    if n == 0 {
        return d + 1; // root: children only
    }
    // parent + children + siblings + optional suffix-exchange partner
    1 + (d + 1) + d + usize::from(!x.is_constant())
}

/// All words of exactly length `n`, in lexicographic order.
pub fn words_of_length(n: usize, cfg: &GasketConfig) -> Vec<Word> {
    let mut out = vec![Word::root()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * cfg.alphabet_size());
        for w in &out {
            for i in cfg.symbols() {
                next.push(w.child(i));
            }
        }
        out = next;
    }
    out
}

/// All words of length at most `n`, level by level, lexicographic within
/// each level.
pub fn words_up_to_length(n: usize, cfg: &GasketConfig) -> Vec<Word> {
    let mut out = Vec::new();
    for k in 0..=n {
        out.extend(words_of_length(k, cfg));
    }
    out
}

/// Edge kind for graph export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Vertical,
    Horizontal,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::Vertical => "v",
            EdgeKind::Horizontal => "h",
        }
    }
}

/// Every edge of the level-`<= n` truncation, each undirected edge once:
/// vertical edges as (parent, child), horizontal edges with `src < dst`.
/// Deterministic order: by source level, then source, then kind, then target.
pub fn edges_up_to_level(n: usize, cfg: &GasketConfig) -> Vec<(Word, Word, EdgeKind)> {
    let mut out = Vec::new();
    for w in words_up_to_length(n, cfg) {
        if w.len() < n {
            for i in cfg.symbols() {
                out.push((w.clone(), w.child(i), EdgeKind::Vertical));
            }
        }
        for h in horizontal_neighbors(&w, cfg) {
            if w < h {
                out.push((w.clone(), h, EdgeKind::Horizontal));
            }
        }
    }
    out
}
