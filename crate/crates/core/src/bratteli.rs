//! Paths on the layered (Bratteli-style) diagram of a rank-`k` graph.
//!
//! The infinite path space of a rank-`k` graph is realised on a layered
//! diagram: every level carries a copy of the vertex set, and the edges from
//! level `n` down to level `n-1` are the colour-`c(n)` edges of the graph,
//! where the colour sequence `c(1), c(2), ...` cycles through
//! `1, 2, ..., k` ("rainbow order").  A graph morphism of arbitrary degree
//! factors uniquely into rainbow order, so finite paths on the diagram are
//! in bijection with the morphisms of the graph whose degrees are the
//! "staircase" vectors `(q+1, ..., q+1, q, ..., q)`.
//!
//! Paths are encoded as a root vertex plus one `(range, source, mult)`
//! triple per level; parallel edges are told apart by the multiplicity
//! index `mult < A_c(range, source)`.  Enumeration is always in
//! lexicographic order of those triples, level by level, which gives two
//! properties the rest of the crate leans on:
//!
//! * determinism — the `i`-th path of a given length is a stable identifier;
//! * nesting — all extensions of a fixed path occupy a contiguous index
//!   block at every deeper level, in the same relative order.
//!
//! A [`ColorOrder`] other than the default rainbow one describes diagrams
//! whose level colours follow a scaled pattern (`J_1` levels of colour 1,
//! then `J_2` of colour 2, ...); the wavelet machinery uses this to build
//! decompositions adapted to anisotropic scaling.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_integer::Integer;

use crate::error::KgsError;
use crate::kgraph::KGraph;

/// Default cap on the number of paths an enumeration may materialise.
pub const DEFAULT_MAX_PATHS: u128 = 10_000_000;

/// Colour of `level` (1-based) in rainbow order.
pub fn color_of_level(k: usize, level: usize) -> usize {
    assert!(level >= 1, "levels are 1-based");
    ((level - 1) % k) + 1
}

/// Periodic assignment of colours to diagram levels.
///
/// `rainbow(k)` is the plain `1, 2, ..., k` cycle; `from_exponents(&[2, 1])`
/// is `1, 1, 2` repeating, and so on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorOrder {
    seq: Vec<usize>,
}

impl ColorOrder {
    pub fn rainbow(k: usize) -> Self {
        assert!(k >= 1);
        ColorOrder {
            seq: (1..=k).collect(),
        }
    }

    /// `j[i]` consecutive levels of colour `i+1`, repeating.  Every entry
    /// must be positive.
    pub fn from_exponents(j: &[usize]) -> Self {
        assert!(!j.is_empty() && j.iter().all(|&e| e > 0), "exponents must be positive");
        let mut seq = Vec::with_capacity(j.iter().sum());
        for (i, &e) in j.iter().enumerate() {
            seq.extend(std::iter::repeat(i + 1).take(e));
        }
        ColorOrder { seq }
    }

    /// Length of one colour period.
    pub fn period(&self) -> usize {
        self.seq.len()
    }

    /// Colour of `level` (1-based).
    pub fn color_at(&self, level: usize) -> usize {
        assert!(level >= 1, "levels are 1-based");
        self.seq[(level - 1) % self.seq.len()]
    }

    /// Number of levels of each colour among the first `len` levels, as a
    /// vector indexed by colour-1.
    pub fn degree_of_len(&self, k: usize, len: usize) -> Vec<usize> {
        let mut deg = vec![0usize; k];
        let (q, t) = (len / self.seq.len(), len % self.seq.len());
        for &c in &self.seq {
            deg[c - 1] += q;
        }
        for &c in &self.seq[..t] {
            deg[c - 1] += 1;
        }
        deg
    }
}

/// A single diagram edge, with its level and derived colour spelled out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BrattEdge {
    /// Level of the edge (1-based); it connects level `level` up to
    /// `level - 1`.
    pub level: usize,
    /// Colour in `1..=k`, determined by the level.
    pub color: usize,
    /// Vertex at level `level - 1` (the range of the edge).
    pub range_vertex: usize,
    /// Vertex at level `level` (the source of the edge).
    pub source_vertex: usize,
    /// Which of the `A_color(range, source)` parallel edges this is.
    pub mult: u64,
}

/// A finite path on the layered diagram: a root vertex at level 0 plus one
/// `(range, source, mult)` triple per level.
///
/// The range of the whole path is the root; the source is the deepest
/// vertex reached.  Junctions always match: the range of each triple equals
/// the source of the one before it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinitePath {
    root: usize,
    edges: Vec<(usize, usize, u64)>,
}

impl FinitePath {
    /// The length-0 path sitting at a single vertex.
    pub fn vertex(v: usize) -> Self {
        FinitePath {
            root: v,
            edges: Vec::new(),
        }
    }

    /// Build from a root and raw triples, checking the junction chain.
    pub fn new(root: usize, edges: Vec<(usize, usize, u64)>) -> Result<Self, KgsError> {
        let mut expect = root;
        for (i, &(r, s, _)) in edges.iter().enumerate() {
            if r != expect {
                return Err(KgsError::BadPath {
                    reason: format!(
                        "edge {i} has range {r} but the previous vertex is {expect}"
                    ),
                });
            }
            expect = s;
        }
        Ok(FinitePath { root, edges })
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Range vertex (level 0).
    pub fn range(&self) -> usize {
        self.root
    }

    /// Source vertex (deepest level).
    pub fn source(&self) -> usize {
        self.edges.last().map_or(self.root, |&(_, s, _)| s)
    }

    /// Raw `(range, source, mult)` triples, one per level.
    pub fn triples(&self) -> &[(usize, usize, u64)] {
        &self.edges
    }

    /// Edge at position `i` (0-based), with level and colour filled in for
    /// a rank-`k` rainbow diagram.
    pub fn edge(&self, i: usize, k: usize) -> BrattEdge {
        let (r, s, m) = self.edges[i];
        BrattEdge {
            level: i + 1,
            color: color_of_level(k, i + 1),
            range_vertex: r,
            source_vertex: s,
            mult: m,
        }
    }

    /// Initial segment with `len` edges.
    pub fn prefix(&self, len: usize) -> FinitePath {
        assert!(len <= self.len());
        FinitePath {
            root: self.root,
            edges: self.edges[..len].to_vec(),
        }
    }

    /// Remaining path after dropping the first `drop` edges, re-rooted at
    /// the vertex reached there.  Only meaningful as a rainbow path when
    /// `drop` is a multiple of `k`, which callers must ensure.
    pub fn suffix_from(&self, drop: usize) -> FinitePath {
        assert!(drop <= self.len());
        let root = if drop == 0 {
            self.root
        } else {
            self.edges[drop - 1].1
        };
        FinitePath {
            root,
            edges: self.edges[drop..].to_vec(),
        }
    }

    /// Whether `prefix` is an initial segment of `self` (including equality
    /// of roots for length-0 prefixes).
    pub fn starts_with(&self, prefix: &FinitePath) -> bool {
        self.root == prefix.root
            && prefix.len() <= self.len()
            && self.edges[..prefix.len()] == prefix.edges[..]
    }

    /// Check vertex bounds and multiplicity bounds against a graph, with
    /// the given level colouring.
    pub fn validate_in(&self, g: &KGraph, order: &ColorOrder) -> Result<(), KgsError> {
        let n = g.num_vertices();
        if self.root >= n {
            return Err(KgsError::BadPath {
                reason: format!("root vertex {} out of range (graph has {n} vertices)", self.root),
            });
        }
        for (i, &(r, s, m)) in self.edges.iter().enumerate() {
            if s >= n {
                return Err(KgsError::BadPath {
                    reason: format!("edge {i} source vertex {s} out of range"),
                });
            }
            let c = order.color_at(i + 1);
            let count = g.adjacency(c).get(r, s);
            if m >= count {
                return Err(KgsError::BadPath {
                    reason: format!(
                        "edge {i} multiplicity {m} out of range: A_{c}({r},{s}) = {count}"
                    ),
                });
            }
        }
        Ok(())
    }

    /// Check against the standard rainbow colouring.
    pub fn validate_against(&self, g: &KGraph) -> Result<(), KgsError> {
        self.validate_in(g, &ColorOrder::rainbow(g.k()))
    }
}

/// Compact text form: `root:(r,s,m)/(r,s,m)/...`; a bare `root:` is the
/// length-0 path.
impl fmt::Display for FinitePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.root)?;
        for (i, &(r, s, m)) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            write!(f, "({r},{s},{m})")?;
        }
        Ok(())
    }
}

impl FromStr for FinitePath {
    type Err = KgsError;

    fn from_str(text: &str) -> Result<Self, KgsError> {
        let bad = |reason: String| KgsError::BadPath { reason };
        let (root_part, edge_part) = match text.split_once(':') {
            Some((a, b)) => (a, b),
            None => (text, ""),
        };
        let root: usize = root_part
            .trim()
            .parse()
            .map_err(|_| bad(format!("cannot parse root vertex from {root_part:?}")))?;
        let mut edges = Vec::new();
        for chunk in edge_part.split('/').filter(|c| !c.trim().is_empty()) {
            let inner = chunk
                .trim()
                .strip_prefix('(')
                .and_then(|c| c.strip_suffix(')'))
                .ok_or_else(|| bad(format!("edge {chunk:?} is not of the form (r,s,m)")))?;
            let fields: Vec<&str> = inner.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(bad(format!("edge {chunk:?} must have three fields")));
            }
            let r = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad range in edge {chunk:?}")))?;
            let s = fields[1]
                .parse()
                .map_err(|_| bad(format!("bad source in edge {chunk:?}")))?;
            let m = fields[2]
                .parse()
                .map_err(|_| bad(format!("bad multiplicity in edge {chunk:?}")))?;
            edges.push((r, s, m));
        }
        FinitePath::new(root, edges)
    }
}

/// Degree vector of a rainbow path of length `len` on a rank-`k` graph:
/// `len = q*k + t` corresponds to `t` colours used `q+1` times and the rest
/// `q` times.
pub fn degree(g: &KGraph, p: &FinitePath) -> Vec<usize> {
    ColorOrder::rainbow(g.k()).degree_of_len(g.k(), p.len())
}

/// Join `lambda` (whose length must be a multiple of `k`, so colours line
/// up) with `eta` starting at the source of `lambda`.
pub fn concat(g: &KGraph, lambda: &FinitePath, eta: &FinitePath) -> Result<FinitePath, KgsError> {
    let k = g.k();
    if lambda.len() % k != 0 {
        return Err(KgsError::NotRainbowMultiple {
            len: lambda.len(),
            k,
        });
    }
    if lambda.source() != eta.range() {
        return Err(KgsError::SourceRangeMismatch {
            source_vertex: lambda.source(),
            range_vertex: eta.range(),
        });
    }
    let mut edges = lambda.edges.clone();
    edges.extend_from_slice(&eta.edges);
    Ok(FinitePath {
        root: lambda.root,
        edges,
    })
}

/// Number of length-`n` paths, by level-ordered matrix products in exact
/// 128-bit arithmetic.  `root`/`source` restrict the endpoints; `None` sums
/// over all vertices.  Equals the `(root, source)` entry of
/// `A_c(1) * A_c(2) * ... * A_c(n)`.
pub fn count_paths_in(
    g: &KGraph,
    order: &ColorOrder,
    n: usize,
    root: Option<usize>,
    source: Option<usize>,
) -> Result<u128, KgsError> {
    let nv = g.num_vertices();
    let overflow = || KgsError::CountOverflow { len: n };
    let mut u: Vec<u128> = match root {
        Some(r) => {
            let mut v = vec![0u128; nv];
            v[r] = 1;
            v
        }
        None => vec![1u128; nv],
    };
    for level in 1..=n {
        let a = g.adjacency(order.color_at(level));
        let mut next = vec![0u128; nv];
        for (b, slot) in next.iter_mut().enumerate() {
            let mut acc: u128 = 0;
            for (v, &uv) in u.iter().enumerate() {
                let c = a.get(v, b) as u128;
                if c != 0 && uv != 0 {
                    acc = acc
                        .checked_add(uv.checked_mul(c).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
            }
            *slot = acc;
        }
        u = next;
    }
    match source {
        Some(b) => Ok(u[b]),
        None => u
            .iter()
            .try_fold(0u128, |acc, &v| acc.checked_add(v))
            .ok_or_else(overflow),
    }
}

/// Rainbow-order path count; see [`count_paths_in`].
pub fn count_paths(
    g: &KGraph,
    n: usize,
    root: Option<usize>,
    source: Option<usize>,
) -> Result<u128, KgsError> {
    count_paths_in(g, &ColorOrder::rainbow(g.k()), n, root, source)
}

/// Enumerate all length-`n` paths (optionally restricted to one root), in
/// lexicographic order of `(range, source, mult)` triples level by level.
/// Fails with [`KgsError::DepthTooLarge`] if the count exceeds `cap`.
pub fn enumerate_paths_in(
    g: &KGraph,
    order: &ColorOrder,
    n: usize,
    root: Option<usize>,
    cap: u128,
) -> Result<Vec<FinitePath>, KgsError> {
    let count = count_paths_in(g, order, n, root, None)?;
    if count > cap {
        return Err(KgsError::DepthTooLarge {
            len: n,
            count,
            cap,
        });
    }
    let roots: Vec<usize> = match root {
        Some(r) => vec![r],
        None => (0..g.num_vertices()).collect(),
    };
    let mut paths: Vec<FinitePath> = roots.into_iter().map(FinitePath::vertex).collect();
    for level in 1..=n {
        let a = g.adjacency(order.color_at(level));
        let mut next = Vec::with_capacity(paths.len());
        for p in &paths {
            let from = p.source();
            for to in 0..g.num_vertices() {
                for m in 0..a.get(from, to) {
                    let mut edges = p.edges.clone();
                    edges.push((from, to, m));
                    next.push(FinitePath {
                        root: p.root,
                        edges,
                    });
                }
            }
        }
        paths = next;
    }
    Ok(paths)
}

/// Rainbow-order enumeration with the default cap; see
/// [`enumerate_paths_in`].
pub fn enumerate_paths(
    g: &KGraph,
    n: usize,
    root: Option<usize>,
) -> Result<Vec<FinitePath>, KgsError> {
    enumerate_paths_in(g, &ColorOrder::rainbow(g.k()), n, root, DEFAULT_MAX_PATHS)
}

/// All length-`len` paths of a diagram in enumeration order, with reverse
/// lookup and per-root index blocks.  This is the indexing backbone for
/// step functions: coefficients are always stored in this order.
#[derive(Debug, Clone)]
pub struct PathTable {
    len: usize,
    paths: Vec<FinitePath>,
    index: HashMap<FinitePath, usize>,
    root_blocks: Vec<Range<usize>>,
}

impl PathTable {
    /// Build the table for paths of length `len` under the given level
    /// colouring.
    pub fn build(
        g: &KGraph,
        order: &ColorOrder,
        len: usize,
        cap: u128,
    ) -> Result<Self, KgsError> {
        let paths = enumerate_paths_in(g, order, len, None, cap)?;
        let index: HashMap<FinitePath, usize> = paths
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let mut root_blocks = Vec::with_capacity(g.num_vertices());
        let mut start = 0usize;
        for v in 0..g.num_vertices() {
            let end = paths[start..]
                .iter()
                .position(|p| p.range() != v)
                .map_or(paths.len(), |off| start + off);
            root_blocks.push(start..end);
            start = end;
        }
        Ok(PathTable {
            len,
            paths,
            index,
            root_blocks,
        })
    }

    pub fn len_paths(&self) -> usize {
        self.paths.len()
    }

    /// Path length (number of edges) of every entry.
    pub fn path_len(&self) -> usize {
        self.len
    }

    pub fn paths(&self) -> &[FinitePath] {
        &self.paths
    }

    pub fn path(&self, i: usize) -> &FinitePath {
        &self.paths[i]
    }

    pub fn index_of(&self, p: &FinitePath) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Contiguous index range of the paths rooted at `v`.
    pub fn root_block(&self, v: usize) -> Range<usize> {
        self.root_blocks[v].clone()
    }

    /// For every path in `self`, the index of its length-`shallower.len`
    /// prefix in `shallower`.  The result is non-decreasing, which is the
    /// "extensions form contiguous blocks" property.
    pub fn prefix_map(&self, shallower: &PathTable) -> Vec<usize> {
        assert!(shallower.len <= self.len);
        self.paths
            .iter()
            .map(|p| {
                shallower
                    .index_of(&p.prefix(shallower.len))
                    .expect("prefix of an enumerated path is enumerated")
            })
            .collect()
    }

    /// Contiguous block of indices in `deeper` whose paths extend each path
    /// of `self`: `result[i]` is the block of extensions of `self.path(i)`.
    pub fn child_blocks(&self, deeper: &PathTable) -> Vec<Range<usize>> {
        let pm = deeper.prefix_map(self);
        let mut blocks = vec![0usize..0; self.paths.len()];
        let mut at = 0usize;
        for i in 0..self.paths.len() {
            let start = at;
            while at < pm.len() && pm[at] == i {
                at += 1;
            }
            blocks[i] = start..at;
        }
        debug_assert_eq!(at, pm.len(), "prefix map must be sorted by prefix index");
        blocks
    }
}

/// An eventually periodic infinite path: a finite prefix followed by an
/// endlessly repeated cycle.
///
/// Both pieces must have lengths divisible by `k` so that the colour
/// sequence of the cycle keeps lining up on every repetition, and the cycle
/// must loop at the source vertex of the prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LazyInfinitePath {
    prefix: FinitePath,
    cycle: FinitePath,
}

impl LazyInfinitePath {
    pub fn new(g: &KGraph, prefix: FinitePath, cycle: FinitePath) -> Result<Self, KgsError> {
        let k = g.k();
        if prefix.len() % k != 0 {
            return Err(KgsError::NotRainbowMultiple {
                len: prefix.len(),
                k,
            });
        }
        if cycle.is_empty() || cycle.len() % k != 0 {
            return Err(KgsError::NotRainbowMultiple {
                len: cycle.len(),
                k,
            });
        }
        if cycle.range() != prefix.source() {
            return Err(KgsError::SourceRangeMismatch {
                source_vertex: prefix.source(),
                range_vertex: cycle.range(),
            });
        }
        if cycle.source() != cycle.range() {
            return Err(KgsError::SourceRangeMismatch {
                source_vertex: cycle.source(),
                range_vertex: cycle.range(),
            });
        }
        prefix.validate_against(g)?;
        cycle.validate_against(g)?;
        Ok(LazyInfinitePath { prefix, cycle })
    }

    pub fn prefix_part(&self) -> &FinitePath {
        &self.prefix
    }

    pub fn cycle_part(&self) -> &FinitePath {
        &self.cycle
    }

    /// Root vertex of the infinite path.
    pub fn range(&self) -> usize {
        self.prefix.range()
    }

    /// Edge triple at `level` (1-based).
    fn triple_at(&self, level: usize) -> (usize, usize, u64) {
        debug_assert!(level >= 1);
        if level <= self.prefix.len() {
            self.prefix.edges[level - 1]
        } else {
            let off = (level - self.prefix.len() - 1) % self.cycle.len();
            self.cycle.edges[off]
        }
    }

    /// Finite initial segment with `len` edges.
    pub fn truncate(&self, len: usize) -> FinitePath {
        let mut edges = Vec::with_capacity(len);
        for level in 1..=len {
            edges.push(self.triple_at(level));
        }
        FinitePath {
            root: self.prefix.root,
            edges,
        }
    }
}

/// Longest common initial segment of two infinite paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommonPrefix {
    /// The paths are identical.
    Equal,
    /// The paths start at different roots and share nothing.
    Disjoint,
    /// The longest shared initial segment; for distinct paths with the same
    /// root but different first edges this is the length-0 path at the root.
    Path(FinitePath),
}

/// Compare two eventually periodic paths.  Because both are periodic after
/// their prefixes, agreement up to `max(prefix lengths) + lcm(cycle
/// lengths)` levels already implies equality, so the comparison is finite.
pub fn common_prefix(x: &LazyInfinitePath, y: &LazyInfinitePath) -> CommonPrefix {
    if x.range() != y.range() {
        return CommonPrefix::Disjoint;
    }
    let bound = x.prefix.len().max(y.prefix.len()) + x.cycle.len().lcm(&y.cycle.len());
    for level in 1..=bound {
        if x.triple_at(level) != y.triple_at(level) {
            return CommonPrefix::Path(x.truncate(level - 1));
        }
    }
    CommonPrefix::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_vertex_2_3() -> KGraph {
        // one vertex, two colours: 2 loops of colour 1, 3 loops of colour 2
        KGraph::from_adjacency(vec![vec![vec![2]], vec![vec![3]]]).unwrap()
    }

    fn two_vertex_full() -> KGraph {
        KGraph::from_adjacency(vec![vec![vec![1, 1], vec![1, 1]]]).unwrap()
    }

    #[test]
    fn counts_match_staircase_products() {
        let g = single_vertex_2_3();
        // length n = 2q + t paths number 6^q * 2^t
        let expect = [1u128, 2, 6, 12, 36, 72, 216];
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(count_paths(&g, n, None, None).unwrap(), e);
        }
    }

    #[test]
    fn count_length_zero_is_vertex_indicator() {
        let g = two_vertex_full();
        assert_eq!(count_paths(&g, 0, Some(0), Some(0)).unwrap(), 1);
        assert_eq!(count_paths(&g, 0, Some(0), Some(1)).unwrap(), 0);
        assert_eq!(count_paths(&g, 0, None, None).unwrap(), 2);
    }

    #[test]
    fn enumeration_is_lexicographic_and_counts_agree() {
        let g = single_vertex_2_3();
        for n in 0..=5 {
            let paths = enumerate_paths(&g, n, None).unwrap();
            assert_eq!(paths.len() as u128, count_paths(&g, n, None, None).unwrap());
            let mut sorted = paths.clone();
            sorted.sort_by(|a, b| a.triples().cmp(b.triples()));
            assert_eq!(paths, sorted, "enumeration must be in lexicographic order");
            // no duplicates
            let mut dedup = paths.clone();
            dedup.dedup();
            assert_eq!(paths.len(), dedup.len());
        }
        // explicit spot check at length 2: colour-2 multiplicities vary fastest
        let paths = enumerate_paths(&g, 2, None).unwrap();
        let as_text: Vec<String> = paths.iter().map(|p| p.to_string()).collect();
        assert_eq!(
            as_text,
            vec![
                "0:(0,0,0)/(0,0,0)",
                "0:(0,0,0)/(0,0,1)",
                "0:(0,0,0)/(0,0,2)",
                "0:(0,0,1)/(0,0,0)",
                "0:(0,0,1)/(0,0,1)",
                "0:(0,0,1)/(0,0,2)",
            ]
        );
    }

    #[test]
    fn degree_is_the_staircase_vector() {
        let g = KGraph::from_adjacency(vec![
            vec![vec![2]],
            vec![vec![2]],
            vec![vec![2]],
        ])
        .unwrap();
        let p = enumerate_paths(&g, 7, None).unwrap().remove(0);
        assert_eq!(degree(&g, &p), vec![3, 2, 2]);
    }

    #[test]
    fn concat_requires_full_periods_and_matching_vertices() {
        let g = single_vertex_2_3();
        let p1 = enumerate_paths(&g, 1, None).unwrap().remove(0);
        let p2 = enumerate_paths(&g, 2, None).unwrap().remove(0);
        let err = concat(&g, &p1, &p2).unwrap_err();
        assert!(matches!(err, KgsError::NotRainbowMultiple { len: 1, k: 2 }));
        let joined = concat(&g, &p2, &p2).unwrap();
        assert_eq!(joined.len(), 4);
        assert_eq!(joined.prefix(2), p2);

        // two components joined at mismatched vertices
        let h = two_vertex_full();
        let at0 = FinitePath::new(0, vec![(0, 0, 0)]).unwrap();
        let at1 = FinitePath::new(1, vec![(1, 1, 0)]).unwrap();
        let err = concat(&h, &at0, &at1).unwrap_err();
        assert!(matches!(
            err,
            KgsError::SourceRangeMismatch { source_vertex: 0, range_vertex: 1 }
        ));
    }

    #[test]
    fn display_parse_round_trip() {
        let p = FinitePath::new(1, vec![(1, 0, 2), (0, 1, 0)]).unwrap();
        let text = p.to_string();
        assert_eq!(text, "1:(1,0,2)/(0,1,0)");
        let back: FinitePath = text.parse().unwrap();
        assert_eq!(back, p);
        let v: FinitePath = "3:".parse().unwrap();
        assert_eq!(v, FinitePath::vertex(3));
        assert!("1:(1,0)".parse::<FinitePath>().is_err());
        // junction mismatch is rejected at parse time
        assert!("0:(0,1,0)/(0,1,0)".parse::<FinitePath>().is_err());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = single_vertex_2_3();
        let err = enumerate_paths_in(&g, &ColorOrder::rainbow(2), 4, None, 10).unwrap_err();
        assert!(matches!(err, KgsError::DepthTooLarge { count: 36, cap: 10, .. }));
    }

    #[test]
    fn path_table_blocks_are_contiguous_and_nested() {
        let g = two_vertex_full();
        let order = ColorOrder::rainbow(1);
        let t1 = PathTable::build(&g, &order, 1, DEFAULT_MAX_PATHS).unwrap();
        let t2 = PathTable::build(&g, &order, 2, DEFAULT_MAX_PATHS).unwrap();
        let pm = t2.prefix_map(&t1);
        let mut sorted = pm.clone();
        sorted.sort_unstable();
        assert_eq!(pm, sorted, "children of each path must be contiguous");
        let blocks = t1.child_blocks(&t2);
        let total: usize = blocks.iter().map(|b| b.len()).sum();
        assert_eq!(total, t2.len_paths());
        for (i, b) in blocks.iter().enumerate() {
            for j in b.clone() {
                assert!(t2.path(j).starts_with(t1.path(i)));
            }
        }
        // root blocks partition the enumeration
        assert_eq!(t2.root_block(0).end, t2.root_block(1).start);
        assert_eq!(t2.root_block(1).end, t2.len_paths());
    }

    #[test]
    fn color_order_exponents_expand() {
        let order = ColorOrder::from_exponents(&[2, 1]);
        assert_eq!(order.period(), 3);
        let colors: Vec<usize> = (1..=6).map(|l| order.color_at(l)).collect();
        assert_eq!(colors, vec![1, 1, 2, 1, 1, 2]);
        assert_eq!(order.degree_of_len(2, 4), vec![3, 1]);
    }

    #[test]
    fn infinite_paths_compare_by_eventual_agreement() {
        let g = two_vertex_full();
        let loop0 = FinitePath::new(0, vec![(0, 0, 0)]).unwrap();
        let to1 = FinitePath::new(0, vec![(0, 1, 0)]).unwrap();
        let loop1 = FinitePath::new(1, vec![(1, 1, 0)]).unwrap();

        // same path described with different prefix splits
        let x = LazyInfinitePath::new(&g, FinitePath::vertex(0), loop0.clone()).unwrap();
        let x2 = LazyInfinitePath::new(
            &g,
            loop0.clone(),
            loop0.clone(),
        )
        .unwrap();
        assert_eq!(common_prefix(&x, &x2), CommonPrefix::Equal);

        // same root, different first edge: meet at the root vertex
        let y = LazyInfinitePath::new(&g, to1.clone(), loop1.clone()).unwrap();
        assert_eq!(
            common_prefix(&x, &y),
            CommonPrefix::Path(FinitePath::vertex(0))
        );

        // different roots share nothing
        let z = LazyInfinitePath::new(&g, FinitePath::vertex(1), loop1).unwrap();
        assert_eq!(common_prefix(&x, &z), CommonPrefix::Disjoint);

        // agreement over one full cycle before diverging
        let xy = LazyInfinitePath::new(
            &g,
            concat(&g, &loop0, &loop0).unwrap(),
            FinitePath::new(0, vec![(0, 1, 0), (1, 0, 0)]).unwrap(),
        )
        .unwrap();
        match common_prefix(&x, &xy) {
            CommonPrefix::Path(p) => assert_eq!(p.len(), 2),
            other => panic!("expected a length-2 meet, got {other:?}"),
        }
    }

    #[test]
    fn infinite_path_rejects_bad_shapes() {
        let g = single_vertex_2_3();
        let one = FinitePath::new(0, vec![(0, 0, 0)]).unwrap();
        // cycle of length 1 on a rank-2 graph is not a full colour period
        assert!(matches!(
            LazyInfinitePath::new(&g, FinitePath::vertex(0), one).unwrap_err(),
            KgsError::NotRainbowMultiple { len: 1, k: 2 }
        ));
        // multiplicity out of range is caught
        let bad = FinitePath::new(0, vec![(0, 0, 0), (0, 0, 3)]).unwrap();
        assert!(matches!(
            LazyInfinitePath::new(&g, FinitePath::vertex(0), bad).unwrap_err(),
            KgsError::BadPath { .. }
        ));
    }
}
