//! I.i.d. environments on a tree and the induced electrical network.
//!
//! `X(σ)` is a pure function of `(seed, path of σ)`: each vertex key is a
//! hash of its parent's key and its child rank, pushed through the law's
//! inverse CDF. Nothing about the environment is stored; traversals carry
//! keys and partial sums down the tree. Edge `(σ′, σ)` has conductance
//! `e^{S(σ)}` with `S(σ)` the sum of `X` along the path from the root.

use crate::env_model::EnvDistribution;
use crate::error::{Error, Result};
use crate::seed::{child_key, root_key, unit_pair};
use crate::tree_model::{Tree, VertexId};

/// Above this |S| the conductance recursion switches to log-domain arithmetic.
pub const LINEAR_S_LIMIT: f64 = 500.0;

/// A vertex reached by a traversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub depth: usize,
    pub index: u64,
    pub key: u64,
    /// S(σ); zero at the root.
    pub s: f64,
    /// min over ρ < τ ≤ σ of S(τ); +∞ at the root.
    pub min_s: f64,
}

/// Running `ln Σ e^{a_i}`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogSumExp {
    #[inline]
    pub fn add(&mut self, a: f64) {
        if a == f64::NEG_INFINITY {
            return;
        }
        if a <= self.max {
            self.sum += (a - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - a).exp() + 1.0;
            self.max = a;
        }
    }

    pub fn ln(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// An environment sampled on a tree: `(tree, law, seed)`.
#[derive(Debug, Clone)]
pub struct EnvSample {
    tree: Tree,
    dist: EnvDistribution,
    seed: u64,
    /// Prescribed X values by level, replacing the hashed draws.
    fixed: Option<Vec<Vec<f64>>>,
}

struct LinearOverflow;

impl EnvSample {
    pub fn new(tree: Tree, dist: EnvDistribution, seed: u64) -> Self {
        EnvSample { tree, dist, seed, fixed: None }
    }

    /// Environment with prescribed `X` values: `values[n-1][j]` is X at
    /// vertex `j` of level `n`.
    pub fn with_values(tree: Tree, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != tree.depth() {
            return Err(Error::InvalidVertex("one value list per level is required".into()));
        }
        for (n, v) in values.iter().enumerate() {
            if v.len() as u64 != tree.level_size(n + 1) {
                return Err(Error::InvalidVertex(format!("level {} needs {} values", n + 1, tree.level_size(n + 1))));
            }
        }
        let mut padded = vec![vec![0.0]];
        padded.extend(values);
        Ok(EnvSample { tree, dist: EnvDistribution::constant(0.0)?, seed: 0, fixed: Some(padded) })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn dist(&self) -> &EnvDistribution {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn root(&self) -> Node {
        Node { depth: 0, index: 0, key: root_key(self.seed), s: 0.0, min_s: f64::INFINITY }
    }

    /// X at a vertex given its level coordinates and key.
    #[inline]
    pub fn x_at(&self, depth: usize, index: u64, key: u64) -> f64 {
        match &self.fixed {
            Some(v) => v[depth][index as usize],
            None => {
                let (a, b) = unit_pair(key);
                self.dist.from_uniforms(a, b)
            }
        }
    }

    /// The child of `node` with the given rank; `j` is its level index.
    #[inline]
    pub fn child_node(&self, node: &Node, rank: u32, j: u64) -> Node {
        let key = child_key(node.key, rank);
        let s = node.s + self.x_at(node.depth + 1, j, key);
        Node { depth: node.depth + 1, index: j, key, s, min_s: node.min_s.min(s) }
    }

    /// Children of `node` in canonical order.
    pub fn children(&self, node: &Node) -> impl Iterator<Item = Node> + '_ {
        let node = *node;
        let range = if node.depth < self.tree.depth() { self.tree.children(node.depth, node.index) } else { 0..0 };
        let start = range.start;
        range.map(move |j| self.child_node(&node, (j - start) as u32, j))
    }

    /// Nodes along the path from the root to `v`, root included.
    pub fn path_nodes(&self, v: &VertexId) -> Result<Vec<Node>> {
        self.tree.index_of(v)?;
        let mut nodes = vec![self.root()];
        for &rank in v.path() {
            let cur = *nodes.last().unwrap();
            let j = self.tree.children(cur.depth, cur.index).start + rank as u64;
            nodes.push(self.child_node(&cur, rank, j));
        }
        Ok(nodes)
    }

    pub fn node(&self, v: &VertexId) -> Result<Node> {
        Ok(*self.path_nodes(v)?.last().unwrap())
    }

    /// X(σ) for σ ≠ ρ.
    pub fn x_value(&self, v: &VertexId) -> Result<f64> {
        let nodes = self.path_nodes(v)?;
        match nodes.len() {
            1 => Err(Error::InvalidVertex("the root carries no increment".into())),
            k => Ok(nodes[k - 1].s - nodes[k - 2].s),
        }
    }

    /// S(σ) = Σ_{ρ<τ≤σ} X(τ); zero at the root.
    pub fn s_value(&self, v: &VertexId) -> Result<f64> {
        Ok(self.node(v)?.s)
    }

    /// U(σ) = min_{ρ<τ≤σ} e^{S(τ)}.
    pub fn u_value(&self, v: &VertexId) -> Result<f64> {
        if v.is_root() {
            return Err(Error::InvalidVertex("U is undefined at the root".into()));
        }
        Ok(self.node(v)?.min_s.exp())
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidVertex("level must be at least 1".into()));
        }
        if n > self.tree.depth() {
            return Err(Error::DepthExceeded { requested: n, max: self.tree.depth() });
        }
        Ok(())
    }

    /// All vertices of level `n`, breadth first.
    pub fn level_nodes(&self, n: usize) -> Result<Vec<Node>> {
        if n > self.tree.depth() {
            return Err(Error::DepthExceeded { requested: n, max: self.tree.depth() });
        }
        let mut level = vec![self.root()];
        for _ in 0..n {
            level = level.iter().flat_map(|v| self.children(v)).collect();
        }
        Ok(level)
    }

    /// Depth-first visit of every vertex with depth in `1..=max_depth`.
    /// `f` returns whether to descend below the vertex.
    pub fn for_each_node(&self, max_depth: usize, mut f: impl FnMut(&Node) -> bool) {
        fn rec(env: &EnvSample, node: &Node, max_depth: usize, f: &mut dyn FnMut(&Node) -> bool) {
            for child in env.children(node) {
                if f(&child) && child.depth < max_depth {
                    rec(env, &child, max_depth, f);
                }
            }
        }
        let max_depth = max_depth.min(self.tree.depth());
        if max_depth > 0 {
            rec(self, &self.root(), max_depth, &mut f);
        }
    }

    /// `ln U_n` for each target level, in one traversal.
    pub fn ln_bottleneck_stats(&self, levels: &[usize]) -> Result<Vec<f64>> {
        let Some(&deepest) = levels.iter().max() else { return Ok(Vec::new()) };
        for &n in levels {
            self.check_level(n)?;
        }
        let mut acc = vec![LogSumExp::default(); deepest + 1];
        self.for_each_node(deepest, |node| {
            acc[node.depth].add(node.min_s);
            true
        });
        Ok(levels.iter().map(|&n| acc[n].ln()).collect())
    }

    /// Bottleneck statistic U_n = Σ_{|σ|=n} U(σ).
    pub fn bottleneck_stat(&self, n: usize) -> Result<f64> {
        Ok(self.ln_bottleneck_stats(&[n])?[0].exp())
    }

    /// `ln C(ρ ↔ Γ_n)` for each target level, in one traversal.
    pub fn ln_effective_conductances(&self, levels: &[usize]) -> Result<Vec<f64>> {
        for &n in levels {
            self.check_level(n)?;
        }
        let mut targets: Vec<usize> = levels.to_vec();
        targets.sort_unstable();
        targets.dedup();
        let Some(&deepest) = targets.last() else { return Ok(Vec::new()) };
        let k = targets.len();
        let mut buf = vec![0.0; (deepest + 1) * k];
        let root = self.root();
        let ln_values: Vec<f64> = if self.linear_safe(deepest) {
            match self.conductance_linear(&root, &targets, &mut buf) {
                Ok(()) => buf[..k].iter().map(|c| c.ln()).collect(),
                Err(LinearOverflow) => {
                    self.conductance_log(&root, &targets, &mut buf);
                    buf[..k].to_vec()
                }
            }
        } else {
            self.conductance_log(&root, &targets, &mut buf);
            buf[..k].to_vec()
        };
        Ok(levels.iter().map(|n| ln_values[targets.binary_search(n).unwrap()]).collect())
    }

    /// Effective conductance from ρ to Γ_n, with edge conductances e^{S(σ)}.
    pub fn effective_conductance(&self, n: usize) -> Result<f64> {
        Ok(self.ln_effective_conductances(&[n])?[0].exp())
    }

    fn linear_safe(&self, depth: usize) -> bool {
        match (&self.fixed, self.dist.max_abs()) {
            (None, Some(m)) => m * depth as f64 <= LINEAR_S_LIMIT,
            // unbounded laws: attempt linear and fall back on overflow
            _ => true,
        }
    }

    /// Series-parallel recursion in the linear domain. `buf[d*k + t]` holds
    /// C(v → Γ_{targets[t]}) for the vertex currently open at depth d.
    fn conductance_linear(&self, node: &Node, targets: &[usize], buf: &mut [f64]) -> std::result::Result<(), LinearOverflow> {
        let k = targets.len();
        let d = node.depth;
        let deepest = *targets.last().unwrap();
        buf[d * k..(d + 1) * k].fill(0.0);
        for child in self.children(node) {
            if child.s.abs() > LINEAR_S_LIMIT {
                return Err(LinearOverflow);
            }
            let g = child.s.exp();
            if child.depth < deepest {
                self.conductance_linear(&child, targets, buf)?;
            }
            for t in 0..k {
                let target = targets[t];
                if target < child.depth {
                    continue;
                }
                let contrib = if target == child.depth {
                    g
                } else {
                    let c = buf[(d + 1) * k + t];
                    if c == 0.0 { 0.0 } else { g * c / (g + c) }
                };
                buf[d * k + t] += contrib;
            }
        }
        Ok(())
    }

    /// Same recursion on `ln C`.
    fn conductance_log(&self, node: &Node, targets: &[usize], buf: &mut [f64]) {
        let k = targets.len();
        let d = node.depth;
        let deepest = *targets.last().unwrap();
        buf[d * k..(d + 1) * k].fill(f64::NEG_INFINITY);
        for child in self.children(node) {
            if child.depth < deepest {
                self.conductance_log(&child, targets, buf);
            }
            for t in 0..k {
                let target = targets[t];
                if target < child.depth {
                    continue;
                }
                let contrib = if target == child.depth {
                    child.s
                } else {
                    let lc = buf[(d + 1) * k + t];
                    if lc == f64::NEG_INFINITY { lc } else { child.s + lc - log_add(child.s, lc) }
                };
                buf[d * k + t] = log_add(buf[d * k + t], contrib);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree_model::{ExplicitTree, TreeSpec, DEFAULT_LEVEL_BUDGET};

    fn path_env(xs: &[f64]) -> EnvSample {
        let tree = Tree::from_spec(TreeSpec::explicit(ExplicitTree::path(xs.len()).unwrap())).unwrap();
        EnvSample::with_values(tree, xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn const_env(spec: TreeSpec, x: f64) -> EnvSample {
        let tree = Tree::from_spec(spec).unwrap();
        EnvSample::new(tree, EnvDistribution::constant(x).unwrap(), 1)
    }

    #[test]
    fn s_and_u_on_a_path() {
        let env = path_env(&[1.0, -2.0, 3.0]);
        let v = |n| VertexId::from_path(vec![0; n]);
        let s: Vec<f64> = (1..=3).map(|n| env.s_value(&v(n)).unwrap()).collect();
        assert_eq!(s, vec![1.0, -1.0, 2.0]);
        assert_eq!(env.u_value(&v(3)).unwrap(), (-1.0f64).exp());
        assert_eq!(env.s_value(&VertexId::root()).unwrap(), 0.0);
        assert!(env.u_value(&VertexId::root()).is_err());
    }

    #[test]
    fn deterministic_increments() {
        let env = const_env(TreeSpec::bary(2, 6).unwrap(), -0.5);
        let v = VertexId::from_path(vec![1, 0, 1, 1]);
        assert_eq!(env.s_value(&v).unwrap(), -2.0);
        assert_eq!(env.u_value(&v).unwrap(), (-2.0f64).exp());
    }

    #[test]
    fn s_telescopes() {
        let spec = TreeSpec::growth_target(0.5, 0.5, 16).unwrap();
        let tree = Tree::from_spec(spec).unwrap();
        let env = EnvSample::new(tree.clone(), EnvDistribution::gaussian(-0.3, 1.0).unwrap(), 42);
        let mut checked = 0;
        for n in [3, 9, 16] {
            for j in 0..tree.level_size(n) {
                let v = tree.vertex(n, j);
                let x = env.x_value(&v).unwrap();
                let s = env.s_value(&v).unwrap();
                let sp = env.s_value(&v.parent().unwrap()).unwrap();
                assert_eq!(s - sp, x);
                assert!(env.u_value(&v).unwrap() <= s.exp());
                checked += 1;
            }
        }
        assert!(checked >= 10_000);
    }

    #[test]
    fn star_bottleneck_and_conductance() {
        let xs = vec![0.3, -1.2, 0.0, 2.0];
        let tree = Tree::from_spec(TreeSpec::explicit(ExplicitTree::from_degrees(&[vec![4]]).unwrap())).unwrap();
        let env = EnvSample::with_values(tree, vec![xs.clone()]).unwrap();
        let expect: f64 = xs.iter().map(|x| x.exp()).sum();
        assert!((env.bottleneck_stat(1).unwrap() - expect).abs() < 1e-12);
        assert!((env.effective_conductance(1).unwrap() - expect).abs() < 1e-12);
        let unit = EnvSample::with_values(env.tree().clone(), vec![vec![0.0; 4]]).unwrap();
        assert!((unit.effective_conductance(1).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn series_path() {
        let env = path_env(&[0.0; 7]);
        for n in 1..=7 {
            assert!((env.effective_conductance(n).unwrap() - 1.0 / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_environment_bottleneck() {
        let beta0 = 0.4;
        let env = const_env(TreeSpec::bary(3, 8).unwrap(), -beta0);
        for n in 1..=8 {
            let expect = 3f64.powi(n as i32) * (-beta0 * n as f64).exp();
            assert!((env.bottleneck_stat(n).unwrap() / expect - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bottleneck_matches_leaf_enumeration() {
        let tree = Tree::from_spec(TreeSpec::bary(2, 6).unwrap()).unwrap();
        for seed in 0..10 {
            let env = EnvSample::new(tree.clone(), EnvDistribution::gaussian(-0.2, 1.0).unwrap(), seed);
            let mut brute = 0.0;
            for j in 0..64 {
                let v = tree.vertex(6, j);
                let min = (1..=6).map(|d| env.s_value(&VertexId::from_path(v.path()[..d].to_vec())).unwrap()).fold(f64::INFINITY, f64::min);
                brute += min.exp();
            }
            let fast = env.bottleneck_stat(6).unwrap();
            assert!((fast - brute).abs() <= 1e-12 * brute);
        }
    }

    #[test]
    fn multi_target_matches_single() {
        let tree = Tree::from_spec(TreeSpec::growth_target(0.2, 0.4, 12).unwrap()).unwrap();
        let env = EnvSample::new(tree, EnvDistribution::plus_minus_one(0.4).unwrap(), 9);
        let all = env.ln_effective_conductances(&[12, 3, 7]).unwrap();
        for (i, n) in [12, 3, 7].into_iter().enumerate() {
            let one = env.ln_effective_conductances(&[n]).unwrap()[0];
            assert!((all[i] - one).abs() < 1e-12);
        }
        let u = env.ln_bottleneck_stats(&[3, 12]).unwrap();
        assert!((u[0] - env.bottleneck_stat(3).unwrap().ln()).abs() < 1e-12);
    }

    #[test]
    fn log_domain_matches_linear() {
        let tree = Tree::from_spec(TreeSpec::bary(2, 9).unwrap()).unwrap();
        let env = EnvSample::new(tree, EnvDistribution::gaussian(0.1, 2.0).unwrap(), 5);
        let targets = [4usize, 9];
        let k = targets.len();
        let mut lin = vec![0.0; 10 * k];
        assert!(env.conductance_linear(&env.root(), &targets, &mut lin).is_ok());
        let mut log = vec![0.0; 10 * k];
        env.conductance_log(&env.root(), &targets, &mut log);
        for t in 0..k {
            assert!((lin[t].ln() - log[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_environment_uses_log_domain() {
        let env = path_env(&[-400.0, -400.0, 900.0]);
        let c = env.ln_effective_conductances(&[3]).unwrap()[0];
        // resistances e^{400}, e^{800}, e^{-100}: dominated by e^{800}
        assert!((c + 800.0).abs() < 1e-9);
    }

    #[test]
    fn rayleigh_monotone_and_bottleneck_bound() {
        let spec = TreeSpec::growth_target(0.0871715, 0.5, 20).unwrap();
        let tree = Tree::new(spec, 20, DEFAULT_LEVEL_BUDGET).unwrap();
        let levels: Vec<usize> = (1..=20).collect();
        for seed in 0..20 {
            let env = EnvSample::new(tree.clone(), EnvDistribution::plus_minus_one(0.3).unwrap(), seed);
            let c = env.ln_effective_conductances(&levels).unwrap();
            let u = env.ln_bottleneck_stats(&levels).unwrap();
            for n in 0..20 {
                assert!(c[n] <= u[n] + 1e-9);
                if n > 0 {
                    assert!(c[n] <= c[n - 1] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_environment() {
        let tree = Tree::from_spec(TreeSpec::bary(3, 7).unwrap()).unwrap();
        let a = EnvSample::new(tree.clone(), EnvDistribution::gaussian(0.0, 1.0).unwrap(), 11);
        let b = EnvSample::new(tree, EnvDistribution::gaussian(0.0, 1.0).unwrap(), 11);
        assert_eq!(a.effective_conductance(7).unwrap().to_bits(), b.effective_conductance(7).unwrap().to_bits());
        assert_eq!(a.level_nodes(5).unwrap(), b.level_nodes(5).unwrap());
    }
}
