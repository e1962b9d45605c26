//! Gauges, φ-energy and capacity of tree boundaries.
//!
//! Capacity is the reciprocal of the minimal energy
//! `I(μ) = ΣΣ φ(|ξ∧η|)^{-1} μ(ξ)μ(η)` over probability measures on the
//! boundary of the truncated tree. Writing `ψ = 1/φ`, the energy splits by
//! level as `ψ(0) + Σ_j (ψ(j) − ψ(j−1)) Σ_{|v|=j} M(v)²` with `M(v)` the
//! mass below `v`, so one pass over the tree evaluates it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::random_env::LogSumExp;
use crate::tree_model::{Tree, TreeKind, TreeSpec, DEFAULT_LEVEL_BUDGET};

/// Nonincreasing positive weight on meet depths.
#[derive(Debug, Clone, PartialEq)]
pub enum Gauge {
    /// φ(n) = e^{−kn}
    Exponential { k: f64 },
    /// φ(n) = e^{−βn − c·n^{1/3}}
    Critical { beta: f64, c: f64 },
    /// φ(n) = values[n]
    Table(Vec<f64>),
}

impl Gauge {
    pub fn ln_phi(&self, n: usize) -> Result<f64> {
        let x = n as f64;
        match self {
            Gauge::Exponential { k } => Ok(-k * x),
            Gauge::Critical { beta, c } => Ok(-beta * x - c * x.cbrt()),
            Gauge::Table(v) => v
                .get(n)
                .map(|p| p.ln())
                .ok_or_else(|| Error::InvalidGauge(format!("table has no entry for n = {n}"))),
        }
    }

    pub fn phi(&self, n: usize) -> Result<f64> {
        Ok(self.ln_phi(n)?.exp())
    }

    /// Checks positivity and monotonicity on `0..=n_max`.
    pub fn validate(&self, n_max: usize) -> Result<()> {
        let mut prev = f64::INFINITY;
        for n in 0..=n_max {
            let l = self.ln_phi(n)?;
            if l.is_nan() || l == f64::NEG_INFINITY || l == f64::INFINITY {
                return Err(Error::InvalidGauge(format!("phi({n}) is not a positive finite number")));
            }
            if l > prev + 1e-15 * prev.abs().max(1.0) {
                return Err(Error::InvalidGauge(format!("phi increases at n = {n}")));
            }
            prev = l;
        }
        Ok(())
    }

    /// Parses `gauge=exponential k=..`, `gauge=critical beta=.. c=..` or
    /// `gauge=table values=a,b,..`.
    pub fn from_block(block: &BTreeMap<String, String>) -> Result<Self> {
        let num = |k: &str| -> Result<f64> {
            block
                .get(k)
                .ok_or_else(|| Error::Config(format!("gauge block is missing `{k}`")))?
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("gauge `{k}` is not a number")))
        };
        let kind = block.get("gauge").or_else(|| block.get("kind")).map(|s| s.trim().to_string());
        match kind.as_deref() {
            Some("exponential") => Ok(Gauge::Exponential { k: num("k")? }),
            Some("critical") => Ok(Gauge::Critical { beta: num("beta")?, c: num("c")? }),
            Some("table") => {
                let values = block
                    .get("values")
                    .ok_or_else(|| Error::Config("gauge table needs `values`".into()))?
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad gauge value `{v}`"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Gauge::Table(values))
            }
            Some(other) => Err(Error::Config(format!("unknown gauge `{other}`"))),
            None => Err(Error::Config("gauge block is missing `gauge`".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Convergent => "convergent",
            Verdict::Divergent => "divergent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub partial_sum: f64,
    /// Geometric mean ratio of consecutive terms over the last quarter.
    pub tail_ratio: f64,
    pub verdict: Verdict,
}

/// Tail ratios within this distance of 1 are inconclusive.
pub const RATIO_BAND: f64 = 1e-3;

/// Partial sum of `Σ_{n=1}^{N} φ(n)^{-1} |Γ_n|^{-1}`, whose finiteness is
/// equivalent to positive capacity for spherically symmetric trees.
pub fn spherical_capacity_series(spec: &TreeSpec, gauge: &Gauge, n_terms: usize) -> Result<SeriesResult> {
    if matches!(spec.kind, TreeKind::Explicit(_)) {
        return Err(Error::InvalidTree("capacity series needs a b-ary or growth-target tree".into()));
    }
    if n_terms == 0 {
        return Err(Error::InvalidGauge("need at least one term".into()));
    }
    gauge.validate(n_terms)?;
    let ln_term = |n: usize| -> Result<f64> { Ok(-gauge.ln_phi(n)? - spec.ln_growth_count(n)?) };
    let mut sum = LogSumExp::default();
    for n in 1..=n_terms {
        sum.add(ln_term(n)?);
    }
    let m = (n_terms / 4).max(1).min(n_terms - 1);
    let tail_ratio = if m == 0 {
        f64::NAN
    } else {
        ((ln_term(n_terms)? - ln_term(n_terms - m)?) / m as f64).exp()
    };
    let verdict = if tail_ratio < 1.0 - RATIO_BAND {
        Verdict::Convergent
    } else if tail_ratio > 1.0 + RATIO_BAND {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    };
    Ok(SeriesResult { partial_sum: sum.ln().exp(), tail_ratio, verdict })
}

/// Growth-rate estimate `(1/N) ln |Γ_N|`.
pub fn dimension_estimate(spec: &TreeSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidTree("dimension needs N >= 1".into()));
    }
    Ok(spec.ln_growth_count(n)? / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergySolver {
    /// Exact optimum: each vertex splits its mass among children in
    /// proportion to `1/(Δψ + E(child))`.
    Recursive,
    /// Accelerated projected gradient on the simplex, stopped on the duality gap.
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub capacity: f64,
    pub energy: f64,
    /// Optimal (or final iterate) measure on level `depth`.
    pub measure: Vec<f64>,
    pub iterations: usize,
}

/// Energy increments: `psi[j] = 1/φ(j)` and `dpsi[j] = psi[j] − psi[j−1]`.
fn kernel(gauge: &Gauge, depth: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    gauge.validate(depth)?;
    let psi: Vec<f64> = (0..=depth).map(|j| gauge.phi(j).map(|p| 1.0 / p)).collect::<Result<_>>()?;
    let mut dpsi = vec![0.0; depth + 1];
    for j in 1..=depth {
        dpsi[j] = (psi[j] - psi[j - 1]).max(0.0);
    }
    Ok((psi, dpsi))
}

/// φ-energy of a probability vector on level `depth`, via subtree masses.
pub fn energy(tree: &Tree, gauge: &Gauge, depth: usize, measure: &[f64]) -> Result<f64> {
    let (psi, dpsi) = kernel(gauge, depth)?;
    if measure.len() as u64 != tree.level_size(depth) {
        return Err(Error::InvalidGauge("measure length does not match the level".into()));
    }
    Ok(energy_with(tree, &psi, &dpsi, depth, measure))
}

fn subtree_masses(tree: &Tree, depth: usize, measure: &[f64]) -> Vec<Vec<f64>> {
    let mut masses = vec![Vec::new(); depth + 1];
    masses[depth] = measure.to_vec();
    for d in (0..depth).rev() {
        masses[d] = (0..tree.level_size(d))
            .map(|i| tree.children(d, i).map(|j| masses[d + 1][j as usize]).sum())
            .collect();
    }
    masses
}

fn energy_with(tree: &Tree, psi: &[f64], dpsi: &[f64], depth: usize, measure: &[f64]) -> f64 {
    let masses = subtree_masses(tree, depth, measure);
    let mut e = psi[0] * masses[0][0] * masses[0][0];
    for j in 1..=depth {
        e += dpsi[j] * masses[j].iter().map(|m| m * m).sum::<f64>();
    }
    e
}

/// ∇I(μ) in O(V): `2 (ψ(0) M(ρ) + Σ_j Δψ(j) M(v_j(ξ)))`.
fn gradient(tree: &Tree, psi: &[f64], dpsi: &[f64], depth: usize, measure: &[f64]) -> Vec<f64> {
    let masses = subtree_masses(tree, depth, measure);
    let mut acc = vec![2.0 * psi[0] * masses[0][0]];
    for j in 1..=depth {
        acc = (0..tree.level_size(j))
            .map(|i| acc[tree.parent(j, i) as usize] + 2.0 * dpsi[j] * masses[j][i as usize])
            .collect();
    }
    acc
}

/// Capacity of the boundary of the tree truncated at `depth`.
pub fn finite_capacity(spec: &TreeSpec, gauge: &Gauge, depth: usize) -> Result<CapacityResult> {
    finite_capacity_with(spec, gauge, depth, EnergySolver::Recursive)
}

pub fn finite_capacity_with(spec: &TreeSpec, gauge: &Gauge, depth: usize, solver: EnergySolver) -> Result<CapacityResult> {
    if depth == 0 {
        return Err(Error::InvalidTree("capacity needs depth >= 1".into()));
    }
    let tree = Tree::new(spec.clone(), depth, DEFAULT_LEVEL_BUDGET)?;
    let (psi, dpsi) = kernel(gauge, depth)?;
    let (measure, iterations) = match solver {
        EnergySolver::Recursive => (recursive_optimum(&tree, &dpsi, depth), 0),
        EnergySolver::ProjectedGradient => projected_gradient(&tree, &psi, &dpsi, depth),
    };
    let energy = energy_with(&tree, &psi, &dpsi, depth, &measure);
    Ok(CapacityResult { capacity: 1.0 / energy, energy, measure, iterations })
}

fn recursive_optimum(tree: &Tree, dpsi: &[f64], depth: usize) -> Vec<f64> {
    // sub[d][i]: minimal energy below vertex i of level d for unit mass,
    // excluding the levels at or above d
    let mut sub: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    sub[depth] = vec![0.0; tree.level_size(depth) as usize];
    for d in (0..depth).rev() {
        sub[d] = (0..tree.level_size(d))
            .map(|i| {
                let mut conductance = 0.0;
                for j in tree.children(d, i) {
                    let r = dpsi[d + 1] + sub[d + 1][j as usize];
                    if r == 0.0 {
                        return 0.0;
                    }
                    conductance += 1.0 / r;
                }
                1.0 / conductance
            })
            .collect();
    }
    let mut mass = vec![1.0];
    for d in 0..depth {
        let mut next = vec![0.0; tree.level_size(d + 1) as usize];
        for i in 0..tree.level_size(d) {
            let ch = tree.children(d, i);
            let weights: Vec<f64> = ch.clone().map(|j| dpsi[d + 1] + sub[d + 1][j as usize]).collect();
            let zeros = weights.iter().filter(|&&w| w == 0.0).count();
            let m = mass[i as usize];
            for (j, w) in ch.zip(&weights) {
                next[j as usize] = if zeros > 0 {
                    if *w == 0.0 { m / zeros as f64 } else { 0.0 }
                } else {
                    m * (1.0 / w) * sub[d][i as usize]
                };
            }
        }
        mass = next;
    }
    mass
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

const GAP_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200_000;

fn projected_gradient(tree: &Tree, psi: &[f64], dpsi: &[f64], depth: usize) -> (Vec<f64>, usize) {
    let m = tree.level_size(depth) as usize;
    // row sums of the nonnegative kernel bound its top eigenvalue
    let ones = vec![1.0; m];
    let lipschitz = gradient(tree, psi, dpsi, depth, &ones).into_iter().fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let mut x = vec![1.0 / m as f64; m];
    let mut y = x.clone();
    let mut t = 1.0_f64;
    for it in 0..MAX_ITERATIONS {
        let gx = gradient(tree, psi, dpsi, depth, &x);
        let gap = x.iter().zip(&gx).map(|(a, g)| a * g).sum::<f64>() - gx.iter().copied().fold(f64::INFINITY, f64::min);
        if gap < GAP_TOL {
            return (x, it);
        }
        let gy = gradient(tree, psi, dpsi, depth, &y);
        let mut next: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - step * g).collect();
        project_simplex(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        y = next.iter().zip(&x).map(|(n, o)| n + momentum * (n - o)).collect();
        x = next;
        t = t_next;
    }
    (x, MAX_ITERATIONS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree_model::ExplicitTree;

    fn exp_gauge(k: f64) -> Gauge {
        Gauge::Exponential { k }
    }

    #[test]
    fn series_examples() {
        let b3 = TreeSpec::bary(3, 600).unwrap();
        let r = spherical_capacity_series(&b3, &exp_gauge(1.0), 600).unwrap();
        let e = std::f64::consts::E;
        assert!((r.partial_sum - e / (3.0 - e)).abs() < 1e-9);
        assert_eq!(r.verdict, Verdict::Convergent);
        let b2 = TreeSpec::bary(2, 200).unwrap();
        assert_eq!(spherical_capacity_series(&b2, &exp_gauge(1.0), 200).unwrap().verdict, Verdict::Divergent);
        let flat = spherical_capacity_series(&b2, &exp_gauge(0.0), 200).unwrap();
        assert!((flat.partial_sum - 1.0).abs() < 1e-12);
        assert_eq!(flat.verdict, Verdict::Convergent);
    }

    #[test]
    fn verdict_tracks_log_b() {
        for b in [2u32, 3, 4] {
            let spec = TreeSpec::bary(b, 400).unwrap();
            for k in [0.5, 0.7, 1.0, 1.2, 1.4] {
                let v = spherical_capacity_series(&spec, &exp_gauge(k), 400).unwrap().verdict;
                let expect = if k < (b as f64).ln() { Verdict::Convergent } else { Verdict::Divergent };
                assert_eq!(v, expect, "b={b} k={k}");
            }
        }
    }

    #[test]
    fn explicit_trees_rejected_by_series() {
        let spec = TreeSpec::explicit(ExplicitTree::path(3).unwrap());
        assert!(spherical_capacity_series(&spec, &exp_gauge(0.1), 3).is_err());
    }

    #[test]
    fn single_path_capacity() {
        let spec = TreeSpec::explicit(ExplicitTree::path(5).unwrap());
        let g = exp_gauge(0.3);
        let r = finite_capacity(&spec, &g, 5).unwrap();
        assert!((r.capacity - g.phi(5).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn binary_depth_one() {
        let spec = TreeSpec::bary(2, 1).unwrap();
        let g = Gauge::Table(vec![1.0, 0.25]);
        let r = finite_capacity(&spec, &g, 1).unwrap();
        let expect = 1.0 / (0.5 * 4.0 + 0.5 * 1.0);
        assert!((r.capacity - expect).abs() < 1e-14);
        // brute force over (t, 1-t)
        let best = (0..=1000)
            .map(|i| {
                let t = i as f64 / 1000.0;
                4.0 * (t * t + (1.0 - t) * (1.0 - t)) + 2.0 * t * (1.0 - t)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((1.0 / best - expect).abs() < 1e-12);
    }

    #[test]
    fn three_leaf_tree_matches_simplex_grid() {
        // root -> {a, b}; a -> {l0, l1}; b -> {l2}
        let spec = TreeSpec::explicit(ExplicitTree::from_degrees(&[vec![2], vec![2, 1]]).unwrap());
        let g = Gauge::Table(vec![1.0, 0.6, 0.25]);
        let exact = finite_capacity(&spec, &g, 2).unwrap().capacity;
        let psi = [1.0, 1.0 / 0.6, 4.0];
        // kernel by meet depth: l0,l1 meet at depth 1; l2 meets them at the root
        let k = [[psi[2], psi[1], psi[0]], [psi[1], psi[2], psi[0]], [psi[0], psi[0], psi[2]]];
        let steps = 1000;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let m = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                let mut e = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        e += k[a][b] * m[a] * m[b];
                    }
                }
                best = best.min(e);
            }
        }
        assert!((exact - 1.0 / best).abs() < 1e-5, "{exact} vs {}", 1.0 / best);
    }

    #[test]
    fn bary_capacity_is_uniform_energy() {
        // on a b-ary tree the uniform measure is optimal, giving
        // ψ(0) + Σ_j Δψ(j)/b^j
        let spec = TreeSpec::bary(3, 10).unwrap();
        let g = exp_gauge(0.8);
        let r = finite_capacity(&spec, &g, 10).unwrap();
        let psi = |j: usize| 1.0 / g.phi(j).unwrap();
        let expect = psi(0) + (1..=10).map(|j| (psi(j) - psi(j - 1)) / 3f64.powi(j as i32)).sum::<f64>();
        assert!((r.energy - expect).abs() < 1e-12 * expect);
        let first = r.measure[0];
        assert!(r.measure.iter().all(|m| (m - first).abs() < 1e-15));
    }

    #[test]
    fn solvers_agree() {
        let ex = ExplicitTree::from_degrees(&[vec![3], vec![1, 2, 3], vec![2, 1, 1, 3, 1, 1]]).unwrap();
        let spec = TreeSpec::explicit(ex);
        for g in [exp_gauge(0.4), exp_gauge(1.5), Gauge::Critical { beta: 0.2, c: 0.8 }] {
            let a = finite_capacity_with(&spec, &g, 3, EnergySolver::Recursive).unwrap();
            let b = finite_capacity_with(&spec, &g, 3, EnergySolver::ProjectedGradient).unwrap();
            assert!((a.energy - b.energy).abs() < 1e-9 * a.energy, "{} vs {}", a.energy, b.energy);
            assert!(b.iterations < MAX_ITERATIONS);
        }
    }

    #[test]
    fn capacity_nonincreasing_in_depth() {
        let ex = ExplicitTree::from_degrees(&[
            vec![2],
            vec![1, 3],
            vec![2, 1, 1, 2],
            vec![1; 6],
            vec![2, 1, 1, 1, 2, 1],
            vec![1; 8],
            vec![3, 1, 1, 1, 1, 1, 1, 2],
            vec![1; 11],
        ])
        .unwrap();
        let spec = TreeSpec::explicit(ex);
        for g in [exp_gauge(0.2), exp_gauge(0.9), Gauge::Critical { beta: 0.1, c: 0.5 }] {
            let caps: Vec<f64> = (1..=8).map(|d| finite_capacity(&spec, &g, d).unwrap().capacity).collect();
            assert!(caps.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{caps:?}");
        }
    }

    #[test]
    fn bary_capacity_stabilizes_or_decays() {
        let spec = TreeSpec::bary(2, 16).unwrap();
        let g = exp_gauge(0.1);
        let c12 = finite_capacity(&spec, &g, 12).unwrap().capacity;
        let c16 = finite_capacity(&spec, &g, 16).unwrap().capacity;
        assert!((c12 - c16).abs() / c12 < 1e-3);
        let g = exp_gauge(1.0);
        let caps: Vec<f64> = [4, 8, 12, 16].iter().map(|&d| finite_capacity(&spec, &g, d).unwrap().capacity).collect();
        assert!(caps.windows(2).all(|w| w[1] < 0.5 * w[0]), "{caps:?}");
    }

    #[test]
    fn dimension_examples() {
        assert!((dimension_estimate(&TreeSpec::bary(2, 100).unwrap(), 100).unwrap() - 2f64.ln()).abs() < 1e-15);
        let g = TreeSpec::growth_target(0.0871715, 0.2, 1000).unwrap();
        let d = dimension_estimate(&g, 1000).unwrap();
        assert!((d - 0.08917).abs() < 1e-5);
        assert!(d > 0.0871715);
        let path = TreeSpec::growth_target(0.0, 0.0, 50).unwrap();
        assert_eq!(dimension_estimate(&path, 50).unwrap(), 0.0);
    }

    #[test]
    fn gauge_validation() {
        assert!(Gauge::Table(vec![1.0, 2.0]).validate(1).is_err());
        assert!(Gauge::Table(vec![1.0, 0.0]).validate(1).is_err());
        assert!(Gauge::Table(vec![1.0]).validate(2).is_err());
        assert!(Gauge::Critical { beta: 0.1, c: 0.3 }.validate(100).is_ok());
    }

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5, 0.5];
        project_simplex(&mut v);
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let mut w = vec![2.0, 0.0, -1.0];
        project_simplex(&mut w);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
    }
}
