//! Trees without leaves: explicit finite trees, b-ary trees and trees grown to
//! hit a target level size `⌊exp(βn + c·n^{1/3})⌋`.
//!
//! Vertices are addressed by `(depth, index)` with indices in canonical
//! (breadth-first) order. Uniform layouts never store vertices: a level's
//! child ranges follow from two integers, so arbitrary vertices can be
//! visited without materializing the level.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};

/// Default cap on the number of vertices in a single level.
pub const DEFAULT_LEVEL_BUDGET: u64 = 10_000_000;

/// Vertex address: the child ranks along the path from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexId(Vec<u32>);

impl VertexId {
    pub fn root() -> Self {
        VertexId(Vec::new())
    }

    pub fn from_path(path: Vec<u32>) -> Self {
        VertexId(path)
    }

    pub fn path(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, rank: u32) -> Self {
        let mut p = self.0.clone();
        p.push(rank);
        VertexId(p)
    }

    pub fn parent(&self) -> Option<Self> {
        let (_, head) = self.0.split_last()?;
        Some(VertexId(head.to_vec()))
    }

    /// Greatest common ancestor (longest common prefix).
    pub fn meet(&self, other: &VertexId) -> VertexId {
        let k = self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count();
        VertexId(self.0[..k].to_vec())
    }

    /// Whether `self` lies on the path from the root to `other`.
    pub fn is_ancestor_of(&self, other: &VertexId) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

/// Finite tree read from a parent list, with all leaves at the same depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitTree {
    /// `offsets[n][i]..offsets[n][i+1]` are the children (at level n+1) of
    /// vertex i of level n.
    offsets: Vec<Vec<u64>>,
    /// Original ids, level by level in canonical order.
    ids: Vec<Vec<u64>>,
}

impl ExplicitTree {
    /// Builds from `(id, parent)` pairs; exactly one vertex has no parent.
    /// Children are ordered by id.
    pub fn from_parents(pairs: &[(u64, Option<u64>)]) -> Result<Self> {
        let mut children: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        let mut root = None;
        let mut seen = std::collections::HashSet::new();
        for &(id, parent) in pairs {
            if !seen.insert(id) {
                return Err(Error::InvalidTree(format!("vertex {id} listed twice")));
            }
            match parent {
                None => {
                    if root.replace(id).is_some() {
                        return Err(Error::InvalidTree("more than one root".into()));
                    }
                }
                Some(p) => children.entry(p).or_default().push(id),
            }
        }
        let root = root.ok_or_else(|| Error::InvalidTree("no root".into()))?;
        for list in children.values_mut() {
            list.sort_unstable();
        }
        let mut ids = vec![vec![root]];
        let mut offsets = Vec::new();
        let mut visited = 1usize;
        loop {
            let level = ids.last().unwrap();
            let mut off = Vec::with_capacity(level.len() + 1);
            let mut next = Vec::new();
            off.push(0u64);
            for v in level {
                if let Some(c) = children.get(v) {
                    next.extend_from_slice(c);
                }
                off.push(next.len() as u64);
            }
            if next.is_empty() {
                break;
            }
            if off.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidTree(format!("leaf at depth {} before the last level", ids.len() - 1)));
            }
            visited += next.len();
            offsets.push(off);
            ids.push(next);
        }
        if visited != pairs.len() {
            return Err(Error::InvalidTree("some vertices are not connected to the root".into()));
        }
        if offsets.is_empty() {
            return Err(Error::InvalidTree("tree has no edges".into()));
        }
        Ok(ExplicitTree { offsets, ids })
    }

    /// Builds from the child counts of each level, in canonical order.
    pub fn from_degrees(levels: &[Vec<u64>]) -> Result<Self> {
        let mut pairs = vec![(0u64, None)];
        let mut prev: Vec<u64> = vec![0];
        let mut next_id = 1u64;
        for degrees in levels {
            if degrees.len() != prev.len() {
                return Err(Error::InvalidTree("degree list does not match level size".into()));
            }
            let mut cur = Vec::new();
            for (&p, &d) in prev.iter().zip(degrees) {
                for _ in 0..d {
                    pairs.push((next_id, Some(p)));
                    cur.push(next_id);
                    next_id += 1;
                }
            }
            prev = cur;
        }
        Self::from_parents(&pairs)
    }

    /// A single path with `n` edges.
    pub fn path(n: usize) -> Result<Self> {
        Self::from_degrees(&vec![vec![1]; n])
    }

    /// Parses `id parent_id` lines; the root's line has no parent, `-`, `-1`
    /// or its own id as parent. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let bad = || Error::Config(format!("tree line {}: `{line}`", lineno + 1));
            let id: u64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let parent = match it.next() {
                None | Some("-") | Some("-1") => None,
                Some(p) => {
                    let p: u64 = p.parse().map_err(|_| bad())?;
                    (p != id).then_some(p)
                }
            };
            if it.next().is_some() {
                return Err(bad());
            }
            pairs.push((id, parent));
        }
        Self::from_parents(&pairs)
    }

    pub fn height(&self) -> usize {
        self.offsets.len()
    }

    /// Original id of the vertex `(depth, index)`.
    pub fn id(&self, depth: usize, index: u64) -> u64 {
        self.ids[depth][index as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeKind {
    Explicit(ExplicitTree),
    Bary { b: u32 },
    GrowthTarget { beta: f64, c: f64 },
}

/// Description of a tree truncated at `max_depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    pub kind: TreeKind,
    pub max_depth: usize,
}

impl TreeSpec {
    pub fn bary(b: u32, max_depth: usize) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidTree(format!("b-ary trees need b >= 2, got {b}")));
        }
        Ok(TreeSpec { kind: TreeKind::Bary { b }, max_depth })
    }

    /// Tree with `|Γ_n| = max(1, ⌊exp(βn + c·n^{1/3})⌋)`.
    pub fn growth_target(beta: f64, c: f64, max_depth: usize) -> Result<Self> {
        if !(beta >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidTree(format!("growth target needs beta >= 0 and finite c, got ({beta}, {c})")));
        }
        let spec = TreeSpec { kind: TreeKind::GrowthTarget { beta, c }, max_depth };
        // every vertex needs a child: level sizes may not shrink
        let mut prev = 1u128;
        for n in 1..=max_depth {
            let cur = match spec.growth_count(n) {
                Ok(v) => v,
                Err(Error::CountOverflow(_)) => break,
                Err(e) => return Err(e),
            };
            if cur < prev {
                return Err(Error::InvalidTree(format!("level {n} is smaller than level {}", n - 1)));
            }
            prev = cur;
        }
        Ok(spec)
    }

    pub fn explicit(tree: ExplicitTree) -> Self {
        let max_depth = tree.height();
        TreeSpec { kind: TreeKind::Explicit(tree), max_depth }
    }

    fn check_depth(&self, n: usize) -> Result<()> {
        if n > self.max_depth {
            return Err(Error::DepthExceeded { requested: n, max: self.max_depth });
        }
        Ok(())
    }

    /// Exact `|Γ_n|`.
    pub fn growth_count(&self, n: usize) -> Result<u128> {
        self.check_depth(n)?;
        if n == 0 {
            return Ok(1);
        }
        match &self.kind {
            TreeKind::Explicit(t) => Ok(t.ids[n].len() as u128),
            TreeKind::Bary { b } => (*b as u128).checked_pow(n as u32).ok_or(Error::CountOverflow(n)),
            TreeKind::GrowthTarget { beta, c } => {
                let v = growth_exponent(*beta, *c, n).exp().floor();
                if v >= u128::MAX as f64 {
                    return Err(Error::CountOverflow(n));
                }
                Ok((v as u128).max(1))
            }
        }
    }

    /// `ln |Γ_n|`, finite even when the count overflows integers.
    pub fn ln_growth_count(&self, n: usize) -> Result<f64> {
        self.check_depth(n)?;
        if n == 0 {
            return Ok(0.0);
        }
        match &self.kind {
            TreeKind::Bary { b } => Ok(n as f64 * (*b as f64).ln()),
            TreeKind::GrowthTarget { beta, c } => {
                let x = growth_exponent(*beta, *c, n);
                // past e^40 the floor changes the log by less than 1e-17
                Ok(if x > 40.0 { x } else { x.exp().floor().max(1.0).ln() })
            }
            TreeKind::Explicit(_) => Ok((self.growth_count(n)? as f64).ln()),
        }
    }

    /// Child counts of the level-(n−1) vertices, in canonical order.
    pub fn level_degrees(&self, n: usize) -> Result<Vec<u64>> {
        if n == 0 {
            return Err(Error::InvalidTree("level 0 has no parent level".into()));
        }
        let tree = Tree::new(self.clone(), n, DEFAULT_LEVEL_BUDGET)?;
        Ok(tree.level_degrees(n))
    }

    /// Short description for reports.
    pub fn describe(&self) -> String {
        match &self.kind {
            TreeKind::Explicit(t) => format!("explicit(height={})", t.height()),
            TreeKind::Bary { b } => format!("bary(b={b};depth={})", self.max_depth),
            TreeKind::GrowthTarget { beta, c } => format!("growth(beta={beta};c={c};depth={})", self.max_depth),
        }
    }
}

fn growth_exponent(beta: f64, c: f64, n: usize) -> f64 {
    let n = n as f64;
    beta * n + c * n.cbrt()
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    /// `q` children each, the first `r` parents get one more.
    Even { q: u64, r: u64 },
    Offsets(Vec<u64>),
}

/// A tree truncated at a fixed depth, with O(1)-per-level storage for
/// uniform layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    spec: TreeSpec,
    sizes: Vec<u64>,
    /// `layouts[n]` maps level n to level n+1.
    layouts: Vec<Layout>,
}

impl Tree {
    /// Lays out levels `0..=depth`, failing if any level exceeds `budget`.
    pub fn new(spec: TreeSpec, depth: usize, budget: u64) -> Result<Self> {
        spec.check_depth(depth)?;
        let mut sizes = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            let size = match spec.growth_count(n) {
                Ok(s) => s,
                Err(Error::CountOverflow(level)) => {
                    return Err(Error::Budget { level, size: u128::MAX, budget })
                }
                Err(e) => return Err(e),
            };
            if size > budget as u128 {
                return Err(Error::Budget { level: n, size, budget });
            }
            sizes.push(size as u64);
        }
        let mut layouts = Vec::with_capacity(depth);
        for n in 0..depth {
            let layout = match &spec.kind {
                TreeKind::Explicit(t) => Layout::Offsets(t.offsets[n].clone()),
                _ => {
                    let (p, c) = (sizes[n], sizes[n + 1]);
                    if c < p {
                        return Err(Error::InvalidTree(format!("level {} shrinks", n + 1)));
                    }
                    Layout::Even { q: c / p, r: c % p }
                }
            };
            layouts.push(layout);
        }
        Ok(Tree { spec, sizes, layouts })
    }

    /// Lays out the whole spec with the default budget.
    pub fn from_spec(spec: TreeSpec) -> Result<Self> {
        let depth = spec.max_depth;
        Self::new(spec, depth, DEFAULT_LEVEL_BUDGET)
    }

    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.layouts.len()
    }

    pub fn level_size(&self, n: usize) -> u64 {
        self.sizes[n]
    }

    /// Indices (at level n+1) of the children of vertex `i` of level n.
    #[inline]
    pub fn children(&self, n: usize, i: u64) -> Range<u64> {
        match &self.layouts[n] {
            Layout::Even { q, r } => {
                let start = i * q + i.min(*r);
                start..start + q + (i < *r) as u64
            }
            Layout::Offsets(off) => off[i as usize]..off[i as usize + 1],
        }
    }

    /// Index (at level n−1) of the parent of vertex `j` of level n.
    #[inline]
    pub fn parent(&self, n: usize, j: u64) -> u64 {
        match &self.layouts[n - 1] {
            Layout::Even { q, r } => {
                let big = r * (q + 1);
                if j < big {
                    j / (q + 1)
                } else {
                    r + (j - big) / q
                }
            }
            Layout::Offsets(off) => (off.partition_point(|&o| o <= j) - 1) as u64,
        }
    }

    /// Child counts of the level-(n−1) vertices.
    pub fn level_degrees(&self, n: usize) -> Vec<u64> {
        (0..self.sizes[n - 1]).map(|i| {
            let r = self.children(n - 1, i);
            r.end - r.start
        }).collect()
    }

    /// Path address of `(n, j)`.
    pub fn vertex(&self, n: usize, mut j: u64) -> VertexId {
        let mut path = vec![0u32; n];
        for d in (1..=n).rev() {
            let p = self.parent(d, j);
            path[d - 1] = (j - self.children(d - 1, p).start) as u32;
            j = p;
        }
        VertexId(path)
    }

    /// Level index of a path address.
    pub fn index_of(&self, v: &VertexId) -> Result<u64> {
        if v.depth() > self.depth() {
            return Err(Error::DepthExceeded { requested: v.depth(), max: self.depth() });
        }
        let mut i = 0u64;
        for (n, &rank) in v.path().iter().enumerate() {
            let ch = self.children(n, i);
            if rank as u64 >= ch.end - ch.start {
                return Err(Error::InvalidVertex(format!("{v}: rank {rank} at depth {} out of range", n + 1)));
            }
            i = ch.start + rank as u64;
        }
        Ok(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_count_examples() {
        assert_eq!(TreeSpec::bary(2, 10).unwrap().growth_count(10).unwrap(), 1024);
        let g = TreeSpec::growth_target(0.0871715, 0.2, 30).unwrap();
        assert_eq!(g.growth_count(27).unwrap(), 19);
        assert_eq!(g.growth_count(0).unwrap(), 1);
        assert!(matches!(g.growth_count(31), Err(Error::DepthExceeded { .. })));
    }

    #[test]
    fn level_degree_examples() {
        assert_eq!(TreeSpec::bary(3, 2).unwrap().level_degrees(2).unwrap(), vec![3, 3, 3]);
        let spec = TreeSpec { kind: TreeKind::GrowthTarget { beta: 3f64.ln() / 2.0 + 1e-9, c: 0.0 }, max_depth: 2 };
        let t = Tree::new(spec, 2, 100).unwrap();
        assert_eq!((t.level_size(1), t.level_size(2)), (1, 3));
        let ex = ExplicitTree::from_degrees(&[vec![2], vec![2, 1]]).unwrap();
        assert_eq!(TreeSpec::explicit(ex).level_degrees(2).unwrap(), vec![2, 1]);
    }

    #[test]
    fn two_then_three_assigns_larger_first() {
        // floor(e^1) = 2, floor(e^{2^{1/3}}) = 3
        let spec = TreeSpec::growth_target(0.0, 1.0, 2).unwrap();
        assert_eq!((spec.growth_count(1).unwrap(), spec.growth_count(2).unwrap()), (2, 3));
        assert_eq!(spec.level_degrees(2).unwrap(), vec![2, 1]);
    }

    #[test]
    fn degrees_sum_to_counts() {
        let specs = [
            TreeSpec::bary(2, 20).unwrap(),
            TreeSpec::growth_target(0.0871715, 0.2, 40).unwrap(),
            TreeSpec::growth_target(0.25, 0.5, 40).unwrap(),
            TreeSpec::growth_target(0.0, 0.0, 40).unwrap(),
        ];
        for spec in specs {
            let tree = Tree::new(spec.clone(), spec.max_depth, DEFAULT_LEVEL_BUDGET).unwrap();
            for n in 1..=spec.max_depth {
                let deg = tree.level_degrees(n);
                assert_eq!(deg.iter().sum::<u64>() as u128, spec.growth_count(n).unwrap());
                let (lo, hi) = (deg.iter().min().unwrap(), deg.iter().max().unwrap());
                assert!(*lo >= 1 && hi - lo <= 1);
                assert!(deg.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn negative_offset_clamps_to_one() {
        let spec = TreeSpec::growth_target(0.1, -1.0, 30).unwrap();
        assert_eq!(spec.growth_count(1).unwrap(), 1);
        assert!(TreeSpec::growth_target(-0.1, 0.0, 3).is_err());
    }

    #[test]
    fn growth_counts_nondecreasing() {
        for (beta, c) in [(0.05, 0.0), (0.0871715, 0.2816), (0.3, 1.0), (1e-3, 3.0)] {
            let spec = TreeSpec::growth_target(beta, c, 200).unwrap();
            let counts: Vec<u128> = (1..=200).map(|n| spec.growth_count(n).unwrap()).collect();
            assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn parent_inverts_children() {
        let spec = TreeSpec::growth_target(0.3, 0.4, 12).unwrap();
        let tree = Tree::from_spec(spec).unwrap();
        for n in 0..tree.depth() {
            for i in 0..tree.level_size(n) {
                for j in tree.children(n, i) {
                    assert_eq!(tree.parent(n + 1, j), i);
                }
            }
        }
        for j in 0..tree.level_size(12) {
            let v = tree.vertex(12, j);
            assert_eq!(tree.index_of(&v).unwrap(), j);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let spec = TreeSpec::bary(10, 9).unwrap();
        assert!(matches!(Tree::new(spec, 9, DEFAULT_LEVEL_BUDGET), Err(Error::Budget { level: 8, .. })));
    }

    #[test]
    fn meet_examples() {
        let s = VertexId::from_path(vec![0, 1, 1]);
        assert_eq!(s.meet(&s), s);
        assert_eq!(VertexId::root().meet(&s), VertexId::root());
        assert_eq!(s.meet(&VertexId::from_path(vec![0, 1, 0, 1])), VertexId::from_path(vec![0, 1]));
    }

    #[test]
    fn parses_parent_lists() {
        let t = ExplicitTree::parse("# tree\n10\n11 10\n12 10\n13 11\n14 12\n15 12\n").unwrap();
        assert_eq!(t.height(), 2);
        let spec = TreeSpec::explicit(t.clone());
        assert_eq!(spec.level_degrees(2).unwrap(), vec![1, 2]);
        assert_eq!(t.id(2, 2), 15);
        assert!(ExplicitTree::parse("0\n1 0\n2 0\n3 1\n").is_err(), "leaf above the last level");
        assert!(ExplicitTree::parse("0\n1 5\n").is_err());
        assert!(ExplicitTree::parse("0 -\n1 0\n").is_ok());
    }

    #[test]
    fn materialization_is_deterministic() {
        let spec = TreeSpec::growth_target(0.2, 0.3, 15).unwrap();
        let a = Tree::from_spec(spec.clone()).unwrap();
        let b = Tree::from_spec(spec).unwrap();
        assert_eq!(a, b);
        for n in 1..=15 {
            assert_eq!(a.level_degrees(n), b.level_degrees(n));
        }
    }

    #[test]
    fn ln_count_matches_and_survives_overflow() {
        let b = TreeSpec::bary(2, 100).unwrap();
        assert!((b.ln_growth_count(100).unwrap() / 100.0 - 2f64.ln()).abs() < 1e-15);
        let g = TreeSpec::growth_target(0.0871715, 0.2, 1000).unwrap();
        assert!(g.growth_count(1000).is_err());
        let d = g.ln_growth_count(1000).unwrap() / 1000.0;
        assert!((d - (0.0871715 + 0.2 * 1000f64.powf(-2.0 / 3.0))).abs() < 1e-12);
    }
}
