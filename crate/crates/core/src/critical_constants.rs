//! Constants and surrogates for the critical growth regime
//! `|Γ_n| ≈ exp(βn + c·n^{1/3})`.
//!
//! - large-deviation bounds for the walk `S_n` in terms of `(β, λ0)`;
//! - the threshold `c1` below which a tree of that size is recurrent;
//! - `c2`, the gauge exponent used for the transience half;
//! - survivor sets of paths kept inside the band `[c|τ|^{1/3}/10, c|τ|^{1/3}]`,
//!   with a Paley–Zygmund lower bound on their survival;
//! - an empirical Harnack constant for conditioned tube probabilities.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::env_model::{push_profile, EnvDistribution, PushProfile};
use crate::error::{Error, Result};
use crate::random_env::{EnvSample, Node};
use crate::tree_model::{Tree, TreeSpec};
use crate::tube_estimates::{tube_ln_prob_exact_from, tube_prob_mc_from, Effort, TubeMethod, TubeSpec, BOUNDARY_TOL};

/// Largest survivor frontier held in memory.
pub const POPULATION_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdBounds {
    /// Bound on `P(S_n ≥ u)`.
    pub tail: f64,
    /// Bound on `E e^{S_n} 1{S_n ≤ y}`.
    pub truncated_mgf: f64,
    /// Bound on `E e^{S_n} 1{S_n ≤ y}` plus the tail term `e^y P(S_n ≥ y)`.
    pub combined: f64,
}

/// Exponential bounds for the walk with increments of the profiled law.
pub fn ld_bounds(profile: &PushProfile, n: usize, u: f64, y: f64) -> LdBounds {
    let (b, l0, n) = (profile.beta, profile.lambda0, n as f64);
    let tail = (-b * n - l0 * u).exp();
    if l0 >= 1.0 {
        return LdBounds { tail, truncated_mgf: f64::INFINITY, combined: f64::INFINITY };
    }
    let base = ((1.0 - l0) * y - b * n).exp();
    LdBounds { tail, truncated_mgf: base / (1.0 - l0), combined: (1.0 + 1.0 / (1.0 - l0)) * base }
}

fn require_critical(profile: &PushProfile) -> Result<()> {
    if profile.degenerate || !profile.top_heavy || !(profile.tilted_variance > 0.0) {
        return Err(Error::Degenerate(format!(
            "critical constants need an interior minimizer and positive tilted variance (lambda0 = {}, V = {})",
            profile.lambda0, profile.tilted_variance
        )));
    }
    Ok(())
}

/// Left side of the smallness condition on c:
/// `c + 2λ0 c/(1−λ0) − (π²/8)·3V/(2c/λ0 + 2c/(1−λ0))²`.
pub fn smallness_margin(profile: &PushProfile, c: f64) -> f64 {
    let l0 = profile.lambda0;
    let d = 2.0 * c / l0 + 2.0 * c / (1.0 - l0);
    c + 2.0 * l0 * c / (1.0 - l0) - PI * PI / 8.0 * 3.0 * profile.tilted_variance / (d * d)
}

/// Supremum of the c > 0 with negative smallness margin, by bisection.
pub fn c1_critical(profile: &PushProfile) -> Result<f64> {
    require_critical(profile)?;
    let mut hi = 1.0;
    while smallness_margin(profile, hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::SearchFailed("smallness margin never turns positive".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if smallness_margin(profile, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `[(3π²V/8) / (D²(1 + 2λ0/(1−λ0)))]^{1/3}` with `D = 2/λ0 + 2/(1−λ0)`.
pub fn c1_closed_form(profile: &PushProfile) -> Result<f64> {
    require_critical(profile)?;
    let l0 = profile.lambda0;
    let d = 2.0 / l0 + 2.0 / (1.0 - l0);
    Ok((3.0 * PI * PI * profile.tilted_variance / 8.0 / (d * d * (1.0 + 2.0 * l0 / (1.0 - l0)))).cbrt())
}

/// `M + 2cλ0 + (π²/8)·3V/(0.9c)²`, with `M` the Harnack constant.
pub fn c2_constant(profile: &PushProfile, c: f64, m: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Degenerate("c must be positive".into()));
    }
    Ok(m + 2.0 * c * profile.lambda0 + PI * PI / 8.0 * 3.0 * profile.tilted_variance / (0.9 * c).powi(2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalReport {
    pub profile: PushProfile,
    pub c1: f64,
    pub c: f64,
    /// Survivor band multipliers `(c/10, c)`.
    pub band: (f64, f64),
    pub notes: Vec<String>,
}

impl CriticalReport {
    pub fn c2(&self, c: f64, m: f64) -> Result<f64> {
        c2_constant(&self.profile, c, m)
    }
}

pub fn critical_report(dist: &EnvDistribution, c: f64) -> Result<CriticalReport> {
    let profile = push_profile(dist)?;
    let c1 = c1_critical(&profile)?;
    let mut notes = vec!["the Harnack constant M is an input to c2; ratio_harnack estimates it".to_string()];
    if c < c1 {
        notes.push(format!("c = {c} lies below c1 = {c1:.6}: growth at this rate is in the recurrent regime"));
    }
    Ok(CriticalReport { profile, c1, c, band: (c / 10.0, c), notes })
}

/// Band `[c k^{1/3}/10, c k^{1/3}]` on the walk, active for k > `from`.
fn survivor_band(c: f64, from: usize) -> impl Fn(usize, f64) -> bool {
    move |k: usize, s: f64| {
        if k <= from {
            return true;
        }
        let top = c * (k as f64).cbrt();
        let tol = BOUNDARY_TOL * top.abs().max(1.0);
        s >= top / 10.0 - tol && s <= top + tol
    }
}

/// Smallest L with band width `0.9c(L+1)^{1/3}` at least the lattice span,
/// so the band holds a reachable lattice point from level L+1 on. Zero for
/// continuous laws.
pub fn default_band_start(dist: &EnvDistribution, c: f64) -> usize {
    let span = match dist.as_lattice().and_then(|l| l.span()) {
        Some((_, h)) if h > 0.0 => h,
        _ => return 0,
    };
    if !(c > 0.0) {
        return 0;
    }
    let need = (span / (0.9 * c)).powi(3);
    let mut l = (need - 1.0).max(0.0).floor() as usize;
    while 0.9 * c * ((l + 1) as f64).cbrt() < span * (1.0 - 1e-12) {
        l += 1;
    }
    while l > 0 && 0.9 * c * (l as f64).cbrt() >= span * (1.0 - 1e-12) {
        l -= 1;
    }
    l
}

/// `|W ∩ Γ_n|`: vertices of level n whose ancestors τ with |τ| > L all
/// satisfy `c|τ|^{1/3}/10 ≤ S(τ) ≤ c|τ|^{1/3}`. Dead vertices are never
/// expanded.
pub fn survivor_count(env: &EnvSample, c: f64, l: usize, n: usize) -> Result<u64> {
    if n > env.tree().depth() {
        return Err(Error::DepthExceeded { requested: n, max: env.tree().depth() });
    }
    let alive = survivor_band(c, l);
    let mut frontier: Vec<Node> = vec![env.root()];
    for level in 1..=n {
        let mut next = Vec::new();
        for v in &frontier {
            for child in env.children(v) {
                if alive(level, child.s) {
                    next.push(child);
                    if next.len() > POPULATION_CAP {
                        return Err(Error::PopulationOverflow { level, size: next.len(), cap: POPULATION_CAP });
                    }
                }
            }
        }
        if next.is_empty() {
            return Ok(0);
        }
        frontier = next;
    }
    Ok(frontier.len() as u64)
}

/// Survivor counts for one environment per seed.
pub fn survivor_counts(spec: &TreeSpec, dist: &EnvDistribution, c: f64, l: usize, n: usize, seeds: &[u64]) -> Result<Vec<u64>> {
    let tree = Tree::new(spec.clone(), n, u64::MAX)?;
    seeds
        .par_iter()
        .map(|&s| survivor_count(&EnvSample::new(tree.clone(), dist.clone(), s), c, l, n))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Relative gap between the tree's growth exponent and the law's push, if
/// they disagree by more than 1e-6.
pub fn beta_mismatch(spec: &TreeSpec, dist: &EnvDistribution) -> Option<f64> {
    let tree_beta = match spec.kind {
        crate::tree_model::TreeKind::GrowthTarget { beta, .. } => beta,
        crate::tree_model::TreeKind::Bary { b } => (b as f64).ln(),
        crate::tree_model::TreeKind::Explicit(_) => return None,
    };
    let beta = push_profile(dist).ok()?.beta;
    let gap = (tree_beta - beta).abs() / beta.abs().max(1e-300);
    (gap > 1e-6).then_some(gap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoment {
    /// `(E W)² / E W²`, a lower bound on `P(W > 0)`.
    pub bound: f64,
    /// Jackknife standard error of `bound`.
    pub stderr: f64,
    /// Observed fraction of nonzero counts.
    pub nonempty: f64,
}

fn pz_ratio(counts: &[f64]) -> f64 {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let second = counts.iter().map(|c| c * c).sum::<f64>() / n;
    if second == 0.0 { 0.0 } else { mean * mean / second }
}

pub fn second_moment_bound(counts: &[u64]) -> Result<SecondMoment> {
    if counts.len() < 2 {
        return Err(Error::Estimate("second moment bound needs at least two replicates".into()));
    }
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let bound = pz_ratio(&xs);
    let n = xs.len();
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            let rest: Vec<f64> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &x)| x).collect();
            pz_ratio(&rest)
        })
        .collect();
    let mean_loo = loo.iter().sum::<f64>() / n as f64;
    let stderr = ((n as f64 - 1.0) / n as f64 * loo.iter().map(|t| (t - mean_loo).powi(2)).sum::<f64>()).sqrt();
    let nonempty = counts.iter().filter(|&&c| c > 0).count() as f64 / n as f64;
    Ok(SecondMoment { bound, stderr, nonempty })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarnackMethod {
    /// Lattice dynamic programming.
    Exact,
    Splitting(Effort),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackEstimate {
    /// `ln(sup_y P_y / inf_y P_y) / k^{1/3}`.
    pub m_emp: f64,
    pub stderr: f64,
    /// `(y, ln P_y, stderr)` per grid point.
    pub points: Vec<(f64, f64, f64)>,
}

/// Start values for the walk at time k inside `[ck^{1/3}/10, ck^{1/3}]`:
/// the reachable lattice points for lattice laws, otherwise `points`
/// evenly spaced values.
pub fn harnack_grid(dist: &EnvDistribution, c: f64, k: usize, points: usize) -> Vec<f64> {
    let top = c * (k as f64).cbrt();
    let bottom = top / 10.0;
    match dist.as_lattice().and_then(|l| l.span()) {
        Some((a, h)) if h > 0.0 => {
            let base = k as f64 * a;
            let lo = ((bottom - base) / h - BOUNDARY_TOL).ceil() as i64;
            let hi = ((top - base) / h + BOUNDARY_TOL).floor() as i64;
            (lo..=hi).map(|m| base + h * m as f64).collect()
        }
        _ => {
            let p = points.max(2);
            (0..p).map(|i| bottom + (top - bottom) * i as f64 / (p - 1) as f64).collect()
        }
    }
}

/// Empirical Harnack constant: spread of `ln P(stay in the band on k < j ≤ n | S_k = y)`
/// across `y_grid`, scaled by `k^{1/3}`.
pub fn ratio_harnack(dist: &EnvDistribution, c: f64, k: usize, n: usize, y_grid: &[f64], method: HarnackMethod, seed: u64) -> Result<HarnackEstimate> {
    if dist.mean().abs() > 1e-8 {
        return Err(Error::Degenerate(format!("harnack ratios need a mean-zero law, mean is {}", dist.mean())));
    }
    if k == 0 || n < k {
        return Err(Error::Degenerate("need 1 <= k <= n".into()));
    }
    if y_grid.is_empty() {
        return Err(Error::Estimate("empty start grid".into()));
    }
    let spec = TubeSpec::cube_root(c / 10.0, c)?;
    let points: Vec<(f64, f64, f64)> = y_grid
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if n == k {
                return Ok((y, 0.0, 0.0));
            }
            match method {
                HarnackMethod::Exact => Ok((y, tube_ln_prob_exact_from(dist, &spec, k, y, n)?, 0.0)),
                HarnackMethod::Splitting(effort) => {
                    let seed_i = crate::seed::derive_seed(seed, &[crate::seed::label("harnack"), i as u64]);
                    let e = tube_prob_mc_from(dist, &spec, k, y, n, effort, TubeMethod::Splitting, seed_i)?;
                    Ok((y, e.ln_estimate, e.stderr))
                }
            }
        })
        .collect::<Result<_>>()?;
    let (mut lo, mut hi) = (0usize, 0usize);
    for (i, p) in points.iter().enumerate() {
        if p.1 < points[lo].1 {
            lo = i;
        }
        if p.1 > points[hi].1 {
            hi = i;
        }
    }
    if points[lo].1 == f64::NEG_INFINITY {
        return Err(Error::Estimate(format!("conditioned probability is zero from y = {}", points[lo].0)));
    }
    let scale = (k as f64).cbrt();
    let m_emp = (points[hi].1 - points[lo].1) / scale;
    let stderr = (points[hi].2.powi(2) + points[lo].2.powi(2)).sqrt() / scale;
    Ok(HarnackEstimate { m_emp, stderr, points })
}

/// Whether some path from the root to level n keeps `S ≥ threshold`
/// throughout. Subtrees are pruned as soon as S drops below.
pub fn high_path_exists(env: &EnvSample, n: usize, threshold: f64) -> Result<bool> {
    if n > env.tree().depth() {
        return Err(Error::DepthExceeded { requested: n, max: env.tree().depth() });
    }
    if n == 0 {
        return Ok(0.0 >= threshold);
    }
    let mut stack: Vec<Node> = vec![env.root()];
    while let Some(v) = stack.pop() {
        for child in env.children(&v) {
            if child.s >= threshold {
                if child.depth == n {
                    return Ok(true);
                }
                stack.push(child);
            }
        }
    }
    Ok(false)
}

/// `−2c n^{1/3}/(1−λ0)`.
pub fn small_prob_threshold(profile: &PushProfile, c: f64, n: usize) -> f64 {
    -2.0 * c * (n as f64).cbrt() / (1.0 - profile.lambda0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallProbRow {
    pub n: usize,
    pub threshold: f64,
    /// Fraction of seeds with a path staying above the threshold.
    pub fraction: f64,
    pub seeds: usize,
}

/// Fraction of environments in which some path to level n keeps
/// `min S ≥ −2c n^{1/3}/(1−λ0)`, for each n.
pub fn small_prob_experiment(spec: &TreeSpec, dist: &EnvDistribution, c: f64, n_list: &[usize], seeds: &[u64], budget: u64) -> Result<Vec<SmallProbRow>> {
    let profile = push_profile(dist)?;
    if profile.lambda0 >= 1.0 {
        return Err(Error::Degenerate("threshold undefined for lambda0 = 1".into()));
    }
    let depth = n_list.iter().copied().max().unwrap_or(0);
    let tree = Tree::new(spec.clone(), depth, budget)?;
    n_list
        .iter()
        .map(|&n| {
            let threshold = small_prob_threshold(&profile, c, n);
            let hits = seeds
                .par_iter()
                .map(|&s| high_path_exists(&EnvSample::new(tree.clone(), dist.clone(), s), n, threshold))
                .collect::<Vec<_>>()
                .into_iter()
                .collect::<Result<Vec<bool>>>()?;
            let fraction = hits.iter().filter(|&&h| h).count() as f64 / seeds.len().max(1) as f64;
            Ok(SmallProbRow { n, threshold, fraction, seeds: seeds.len() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::tilt;
    use crate::tree_model::ExplicitTree;

    fn pm(p: f64) -> EnvDistribution {
        EnvDistribution::plus_minus_one(p).unwrap()
    }

    fn binom_tail(n: usize, p: f64, u: f64) -> f64 {
        // P(S_n ≥ u) for ±1 steps with P(+1) = p
        let mut total = 0.0;
        for k in 0..=n {
            if 2.0 * k as f64 - n as f64 >= u - 1e-12 {
                let lc = ln_choose(n, k);
                total += (lc + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp();
            }
        }
        total
    }

    fn ln_choose(n: usize, k: usize) -> f64 {
        (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
    }

    #[test]
    fn ld_examples() {
        let prof = push_profile(&pm(0.3)).unwrap();
        let b = ld_bounds(&prof, 10, 0.0, 0.0);
        assert!((b.tail - (-10.0 * -(2.0 * 0.21f64.sqrt()).ln()).exp()).abs() < 1e-12);
        assert!((b.tail - 0.41823).abs() < 1e-4);
        assert!((binom_tail(10, 0.3, 0.0) - 0.150268).abs() < 1e-6);
        assert!(binom_tail(10, 0.3, 0.0) <= b.tail);
        assert_eq!(ld_bounds(&prof, 0, 0.0, 0.0).tail, 1.0);
        assert!(ld_bounds(&prof, 5, -1e4, 0.0).tail == f64::INFINITY);
        for n in 1..=30 {
            for u in -5..=10 {
                let b = ld_bounds(&prof, n, u as f64, u as f64);
                assert!(binom_tail(n, 0.3, u as f64) <= b.tail * (1.0 + 1e-12));
                let diff = b.combined - b.truncated_mgf;
                let expect = ((1.0 - prof.lambda0) * u as f64 - prof.beta * n as f64).exp();
                assert!((diff - expect).abs() <= 1e-12 * expect);
            }
        }
    }

    #[test]
    fn ld_endpoint_is_infinite() {
        let prof = push_profile(&EnvDistribution::constant(-1.0).unwrap()).unwrap();
        let b = ld_bounds(&prof, 3, 0.0, 0.0);
        assert!(b.truncated_mgf.is_infinite() && b.combined.is_infinite());
    }

    #[test]
    fn c1_examples() {
        let prof = push_profile(&pm(0.3)).unwrap();
        let c1 = c1_critical(&prof).unwrap();
        assert!((c1 - 0.28162).abs() < 1e-4);
        assert!((c1 - c1_closed_form(&prof).unwrap()).abs() < 1e-8);
        assert!(smallness_margin(&prof, 0.99 * c1) < 0.0);
        assert!(smallness_margin(&prof, 1.01 * c1) > 0.0);
        let g = push_profile(&EnvDistribution::gaussian(-1.0, 2.0).unwrap()).unwrap();
        assert!((c1_critical(&g).unwrap() - 0.33782).abs() < 1e-5);
        let mut near = g;
        near.lambda0 = 1.0 - 1e-9;
        assert!(c1_closed_form(&near).unwrap() < 1e-2);
        assert!(c1_critical(&push_profile(&pm(0.05)).unwrap()).is_err());
    }

    #[test]
    fn c2_examples() {
        let mut prof = push_profile(&EnvDistribution::gaussian(-1.0, 2.0).unwrap()).unwrap();
        prof.tilted_variance = 1.0;
        let c2 = c2_constant(&prof, 1.0, 0.0).unwrap();
        assert!((c2 - 5.5693).abs() < 1e-4);
        assert!((c2_constant(&prof, 1.0, 2.5).unwrap() - c2 - 2.5).abs() < 1e-12);
        let big = c2_constant(&prof, 30.0, 0.0).unwrap();
        assert!((big - 30.0).abs() / big < 0.01);
        assert!(c2_constant(&prof, 0.0, 0.0).is_err());
    }

    #[test]
    fn report_fields() {
        let r = critical_report(&pm(0.3), 0.1).unwrap();
        assert_eq!(r.band, (0.01, 0.1));
        assert!(r.c1 > 0.0);
        assert!((r.c2(1.0, 0.0).unwrap() - c2_constant(&r.profile, 1.0, 0.0).unwrap()).abs() == 0.0);
    }

    fn brute_survivors(env: &EnvSample, c: f64, l: usize, n: usize) -> u64 {
        let alive = survivor_band(c, l);
        env.level_nodes(n)
            .unwrap()
            .iter()
            .filter(|leaf| {
                let v = env.tree().vertex(n, leaf.index);
                env.path_nodes(&v).unwrap()[1..].iter().all(|t| alive(t.depth, t.s))
            })
            .count() as u64
    }

    #[test]
    fn survivors_match_enumeration() {
        let tree = Tree::new(TreeSpec::bary(2, 8).unwrap(), 8, 1_000).unwrap();
        for seed in 0..20 {
            let env = EnvSample::new(tree.clone(), pm(0.3), seed);
            for (c, l) in [(2.0, 0), (3.0, 2), (1.0, 1)] {
                assert_eq!(survivor_count(&env, c, l, 8).unwrap(), brute_survivors(&env, c, l, 8));
            }
        }
    }

    #[test]
    fn survivor_edge_cases() {
        let tree = Tree::new(TreeSpec::bary(3, 5).unwrap(), 5, 1_000).unwrap();
        let zero = EnvSample::new(tree.clone(), EnvDistribution::constant(0.0).unwrap(), 1);
        assert_eq!(survivor_count(&zero, 1.0, 0, 5).unwrap(), 0);
        let env = EnvSample::new(tree, pm(0.3), 1);
        assert_eq!(survivor_count(&env, 1.0, 5, 5).unwrap(), 243);
    }

    #[test]
    fn default_start_puts_a_lattice_point_in_band() {
        for c in [0.1, 0.28, 1.0, 3.0] {
            let l = default_band_start(&pm(0.3), c);
            assert!(0.9 * c * ((l + 1) as f64).cbrt() >= 2.0 - 1e-9);
            assert!(l == 0 || 0.9 * c * (l as f64).cbrt() < 2.0);
        }
        assert_eq!(default_band_start(&EnvDistribution::gaussian(0.0, 1.0).unwrap(), 0.1), 0);
    }

    #[test]
    fn second_moment_examples() {
        let r = second_moment_bound(&[0, 2]).unwrap();
        assert!((r.bound - 0.5).abs() < 1e-15 && r.nonempty == 0.5);
        assert_eq!(second_moment_bound(&[4, 4, 4]).unwrap().bound, 1.0);
        assert_eq!(second_moment_bound(&[0, 0, 0]).unwrap().bound, 0.0);
        assert!(second_moment_bound(&[3]).is_err());
        let r = second_moment_bound(&[0, 1, 5, 2, 0, 7]).unwrap();
        assert!(r.bound <= r.nonempty && r.stderr > 0.0);
    }

    #[test]
    fn harnack_trivial_and_exact() {
        let tilted = tilt(&pm(0.3)).unwrap();
        let grid = harnack_grid(&tilted, 3.0, 8, 5);
        assert_eq!(grid, vec![2.0, 4.0, 6.0]);
        let same = ratio_harnack(&tilted, 3.0, 8, 8, &grid, HarnackMethod::Exact, 0).unwrap();
        assert_eq!(same.m_emp, 0.0);
        let exact = ratio_harnack(&tilted, 3.0, 8, 40, &grid, HarnackMethod::Exact, 0).unwrap();
        let mc = ratio_harnack(&tilted, 3.0, 8, 40, &grid, HarnackMethod::Splitting(Effort { population: 2_000, replicates: 20 }), 4).unwrap();
        assert!(exact.m_emp > 0.0);
        assert!((mc.m_emp - exact.m_emp).abs() < 3.0 * mc.stderr, "{} vs {} ± {}", mc.m_emp, exact.m_emp, mc.stderr);
        assert!(ratio_harnack(&pm(0.3), 3.0, 8, 40, &grid, HarnackMethod::Exact, 0).is_err());
    }

    #[test]
    fn high_path_examples() {
        let tree = Tree::new(TreeSpec::bary(2, 6).unwrap(), 6, 1_000).unwrap();
        let down = EnvSample::new(tree, EnvDistribution::constant(-0.5).unwrap(), 1);
        assert!(!high_path_exists(&down, 6, -2.0).unwrap());
        assert!(high_path_exists(&down, 4, -2.0).unwrap());
        let path = Tree::new(TreeSpec::explicit(ExplicitTree::path(30).unwrap()), 30, 10).unwrap();
        for s in 0..10 {
            let env = EnvSample::new(path.clone(), pm(0.5), s);
            assert!(high_path_exists(&env, 30, -60.0).unwrap());
        }
    }

    #[test]
    fn small_prob_runs() {
        let d = pm(0.3);
        let beta = push_profile(&d).unwrap().beta;
        let spec = TreeSpec::growth_target(beta, 0.1, 64).unwrap();
        let seeds: Vec<u64> = (0..20).collect();
        let rows = small_prob_experiment(&spec, &d, 0.1, &[8, 27, 64], &seeds, 1_000_000).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.fraction)));
        assert!(beta_mismatch(&spec, &d).is_none());
        assert!(beta_mismatch(&TreeSpec::bary(2, 3).unwrap(), &d).is_some());
    }
}
