//! Confinement ("tube") probabilities for random-walk paths.
//!
//! A tube is a pair of boundaries `g(k) ≤ S_k ≤ f(k)`, checked at every
//! step `k = 1..=n` with weak inequalities. Probabilities are returned as
//! natural logs because the interesting ones are tiny.

use std::f64::consts::PI;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;

use crate::env_model::{float_gcd, EnvDistribution};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, label, stream};

/// Slack on boundary comparisons, relative to max(1, |bound|).
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Largest number of lattice states held at one step by the exact DP.
pub const STATE_LIMIT: usize = 1_000_000;
/// Target drop in predicted ln P between splitting checkpoints.
pub const STAGE_DECREMENT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum TubeSpec {
    Constant { lower: f64, upper: f64 },
    /// `c1·(k+shift)^{1/3} ≤ S_k ≤ c2·(k+shift)^{1/3}`
    CubeRoot { c1: f64, c2: f64, shift: f64 },
    /// Bounds for `k = 1..=len`.
    Tabulated { lower: Vec<f64>, upper: Vec<f64> },
}

impl TubeSpec {
    pub fn constant(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || upper <= lower {
            return Err(Error::InvalidTube(format!("need lower < upper, got [{lower}, {upper}]")));
        }
        Ok(TubeSpec::Constant { lower, upper })
    }

    /// `|S_k| ≤ half_width`.
    pub fn symmetric(half_width: f64) -> Result<Self> {
        Self::constant(-half_width, half_width)
    }

    pub fn cube_root(c1: f64, c2: f64) -> Result<Self> {
        Self::cube_root_shifted(c1, c2, 0.0)
    }

    pub fn cube_root_shifted(c1: f64, c2: f64, shift: f64) -> Result<Self> {
        if !(c2 > c1) || !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidTube(format!("need c1 < c2, got {c1}, {c2}")));
        }
        if !(shift >= 0.0) {
            return Err(Error::InvalidTube("shift must be nonnegative".into()));
        }
        Ok(TubeSpec::CubeRoot { c1, c2, shift })
    }

    pub fn tabulated(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidTube("bound tables must be nonempty and of equal length".into()));
        }
        let t = TubeSpec::Tabulated { lower, upper };
        t.validate(t.horizon().unwrap())?;
        Ok(t)
    }

    /// Longest horizon the tube is defined for.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            TubeSpec::Tabulated { lower, .. } => Some(lower.len()),
            _ => None,
        }
    }

    pub fn lower(&self, k: usize) -> f64 {
        match self {
            TubeSpec::Constant { lower, .. } => *lower,
            TubeSpec::CubeRoot { c1, shift, .. } => c1 * (k as f64 + shift).cbrt(),
            TubeSpec::Tabulated { lower, .. } => lower[k - 1],
        }
    }

    pub fn upper(&self, k: usize) -> f64 {
        match self {
            TubeSpec::Constant { upper, .. } => *upper,
            TubeSpec::CubeRoot { c2, shift, .. } => c2 * (k as f64 + shift).cbrt(),
            TubeSpec::Tabulated { upper, .. } => upper[k - 1],
        }
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper(k) - self.lower(k)
    }

    /// Checks `f(k) > g(k)` for `1 ≤ k ≤ n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(h) = self.horizon() {
            if n > h {
                return Err(Error::InvalidTube(format!("tube is tabulated up to {h}, not {n}")));
            }
        }
        for k in 1..=n {
            if !(self.width(k) > 0.0) {
                return Err(Error::InvalidTube(format!("tube is empty at k = {k}")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, k: usize, s: f64) -> bool {
        let (g, f) = (self.lower(k), self.upper(k));
        s >= g - BOUNDARY_TOL * g.abs().max(1.0) && s <= f + BOUNDARY_TOL * f.abs().max(1.0)
    }
}

/// Predicted `ln P`: `−(π²/8)·V·Σ_{k=1}^{n} (f(k)−g(k))^{−2}`.
pub fn theoretical_tube_rate(spec: &TubeSpec, v: f64, n: usize) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::InvalidTube("variance must be positive".into()));
    }
    spec.validate(n)?;
    Ok(-PI * PI / 8.0 * v * inverse_square_widths(spec, 0, n))
}

/// Confinement cost from the principal Dirichlet eigenvalue of a band of
/// width w, `π²V/(2w²)` per step, summed over `from < k ≤ to`.
pub fn eigenvalue_tube_rate(spec: &TubeSpec, v: f64, from: usize, to: usize) -> f64 {
    -PI * PI / 2.0 * v * inverse_square_widths(spec, from, to)
}

fn inverse_square_widths(spec: &TubeSpec, from: usize, to: usize) -> f64 {
    (from + 1..=to).map(|k| spec.width(k).powi(-2)).sum()
}

/// `P_x(|B_t| ≤ 1 for all t ≤ L)` from the eigenfunction series.
pub fn brownian_confinement(x: f64, l: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    if l <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut k = 1.0_f64;
    loop {
        let term = 4.0 / (k * PI) * (-k * k * PI * PI * l / 8.0).exp();
        sum += term * (k * PI * (x + 1.0) / 2.0).sin();
        if k > 1.0 && term <= 1e-17 * sum.abs() {
            break;
        }
        k += 2.0;
    }
    sum.clamp(0.0, 1.0)
}

/// Integer step law: `X = a + h·j`.
struct LatticeSteps {
    offset: f64,
    span: f64,
    steps: Vec<(i64, f64)>,
    jmin: i64,
    jmax: i64,
}

impl LatticeSteps {
    fn new(dist: &EnvDistribution) -> Result<Self> {
        let lat = dist
            .as_lattice()
            .ok_or_else(|| Error::InvalidTube("exact tube probabilities need a lattice law".into()))?;
        let (offset, span) = lat.span().ok_or_else(|| Error::InvalidTube("lattice has no rational span".into()))?;
        let span = if span > 0.0 { span } else { 1.0 };
        let steps: Vec<(i64, f64)> = lat.support().map(|(x, p)| (((x - offset) / span).round() as i64, p)).collect();
        let jmin = steps.iter().map(|s| s.0).min().unwrap();
        let jmax = steps.iter().map(|s| s.0).max().unwrap();
        Ok(LatticeSteps { offset, span, steps, jmin, jmax })
    }

    fn value(&self, k: usize, m: i64) -> f64 {
        k as f64 * self.offset + self.span * m as f64
    }

    /// Index range of lattice states inside the tube at step k.
    fn band(&self, spec: &TubeSpec, k: usize) -> (f64, f64) {
        let (g, f) = (spec.lower(k), spec.upper(k));
        let base = k as f64 * self.offset;
        let lo = ((g - base) / self.span - BOUNDARY_TOL * g.abs().max(1.0) / self.span).ceil();
        let hi = ((f - base) / self.span + BOUNDARY_TOL * f.abs().max(1.0) / self.span).floor();
        (lo, hi)
    }
}

/// Exact `P(g(k) ≤ S_k ≤ f(k), 1 ≤ k ≤ n)` for a lattice law.
pub fn tube_prob_exact_lattice(dist: &EnvDistribution, spec: &TubeSpec, n: usize) -> Result<f64> {
    Ok(tube_ln_prob_exact(dist, spec, n)?.exp())
}

pub fn tube_ln_prob_exact(dist: &EnvDistribution, spec: &TubeSpec, n: usize) -> Result<f64> {
    tube_ln_prob_exact_from(dist, spec, 0, 0.0, n)
}

/// `ln P(g(k) ≤ S_k ≤ f(k), start < k ≤ n | S_start = s)`. `s` is snapped
/// to the nearest lattice point reachable at `start`.
pub fn tube_ln_prob_exact_from(dist: &EnvDistribution, spec: &TubeSpec, start: usize, s: f64, n: usize) -> Result<f64> {
    spec.validate(n)?;
    if n < start {
        return Err(Error::InvalidTube("horizon precedes the start".into()));
    }
    let lat = LatticeSteps::new(dist)?;
    let m0 = ((s - start as f64 * lat.offset) / lat.span).round() as i64;
    let (mut lo, mut hi) = (m0, m0);
    let mut mass = vec![1.0];
    let mut ln_scale = 0.0;
    for k in start + 1..=n {
        let (blo, bhi) = lat.band(spec, k);
        let nlo = ((lo + lat.jmin) as f64).max(blo);
        let nhi = ((hi + lat.jmax) as f64).min(bhi);
        if nhi < nlo {
            return Ok(f64::NEG_INFINITY);
        }
        let (nlo, nhi) = (nlo as i64, nhi as i64);
        let states = (nhi - nlo + 1) as usize;
        if states > STATE_LIMIT {
            return Err(Error::StateExplosion { states, limit: STATE_LIMIT });
        }
        let mut next = vec![0.0; states];
        for (i, &p) in mass.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let m = lo + i as i64;
            for &(j, q) in &lat.steps {
                let t = m + j;
                if t >= nlo && t <= nhi {
                    next[(t - nlo) as usize] += p * q;
                }
            }
        }
        let total: f64 = next.iter().sum();
        if total == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        ln_scale += total.ln();
        for p in &mut next {
            *p /= total;
        }
        mass = next;
        lo = nlo;
        hi = nhi;
    }
    Ok(ln_scale)
}

/// `ln P(stay in the tube on start < k ≤ n | S_start = y)` for every
/// lattice point `y` in the tube at `start` that is reachable from 0.
pub fn survival_profile(dist: &EnvDistribution, spec: &TubeSpec, start: usize, n: usize) -> Result<Vec<(f64, f64)>> {
    spec.validate(n)?;
    if start == 0 || n < start {
        return Err(Error::InvalidTube("need 1 <= start <= n".into()));
    }
    let lat = LatticeSteps::new(dist)?;
    let range = |k: usize| -> Result<(i64, i64)> {
        let (blo, bhi) = lat.band(spec, k);
        let lo = (k as f64 * lat.jmin as f64).max(blo);
        let hi = (k as f64 * lat.jmax as f64).min(bhi);
        if hi < lo {
            return Ok((0, -1));
        }
        if hi - lo + 1.0 > STATE_LIMIT as f64 {
            return Err(Error::StateExplosion { states: (hi - lo + 1.0).min(usize::MAX as f64) as usize, limit: STATE_LIMIT });
        }
        Ok((lo as i64, hi as i64))
    };
    let (mut lo, mut hi) = range(n)?;
    let mut h = vec![1.0; (hi - lo + 1).max(0) as usize];
    let mut ln_scale = 0.0;
    for k in (start..n).rev() {
        let (nlo, nhi) = range(k)?;
        let mut prev = vec![0.0; (nhi - nlo + 1).max(0) as usize];
        for (i, slot) in prev.iter_mut().enumerate() {
            let m = nlo + i as i64;
            *slot = lat
                .steps
                .iter()
                .map(|&(j, q)| {
                    let t = m + j;
                    if t >= lo && t <= hi { q * h[(t - lo) as usize] } else { 0.0 }
                })
                .sum();
        }
        let top = prev.iter().copied().fold(0.0, f64::max);
        if top > 0.0 {
            ln_scale += top.ln();
            for p in &mut prev {
                *p /= top;
            }
        }
        h = prev;
        lo = nlo;
        hi = nhi;
    }
    Ok(h.iter().enumerate().map(|(i, &p)| (lat.value(start, lo + i as i64), p.ln() + ln_scale)).collect())
}

/// Per-step decay rate of confinement to `[lower, upper]`: the log of the
/// top eigenvalue of the killed transition kernel, by power iteration.
pub fn band_decay_rate(dist: &EnvDistribution, lower: f64, upper: f64) -> Result<f64> {
    let lat = dist
        .as_lattice()
        .ok_or_else(|| Error::InvalidTube("band decay rate needs a lattice law".into()))?;
    // the grid generated by the atoms themselves contains every S_k
    let mut unit = 0.0;
    for (x, _) in lat.support() {
        unit = float_gcd(unit, x).ok_or_else(|| Error::InvalidTube("lattice has no rational span".into()))?;
    }
    if unit == 0.0 {
        return Ok(if lower <= 0.0 && upper >= 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    let steps: Vec<(i64, f64)> = lat.support().map(|(x, p)| ((x / unit).round() as i64, p)).collect();
    let lo = (lower / unit - BOUNDARY_TOL).ceil() as i64;
    let hi = (upper / unit + BOUNDARY_TOL).floor() as i64;
    if hi < lo {
        return Err(Error::InvalidTube("band holds no lattice point".into()));
    }
    let states = (hi - lo + 1) as usize;
    if states > STATE_LIMIT {
        return Err(Error::StateExplosion { states, limit: STATE_LIMIT });
    }
    let step = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; states];
        for (i, &p) in v.iter().enumerate() {
            for &(j, q) in &steps {
                let t = i as i64 + j;
                if t >= 0 && (t as usize) < states {
                    out[t as usize] += p * q;
                }
            }
        }
        out
    };
    let mut v = vec![1.0 / states as f64; states];
    let mut rate = f64::NAN;
    for _ in 0..1_000_000 {
        // two steps at a time so period-2 chains converge
        let w = step(&step(&v));
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let r = 0.5 * total.ln();
        v = w.into_iter().map(|p| p / total).collect();
        if (r - rate).abs() < 1e-15 {
            return Ok(r);
        }
        rate = r;
    }
    Ok(rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TubeMethod {
    Naive,
    Splitting,
}

impl TubeMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TubeMethod::Naive => "naive",
            TubeMethod::Splitting => "splitting",
        }
    }
}

/// Simulation effort. Naive sampling runs `population·replicates` paths;
/// splitting runs `replicates` independent particle systems of size
/// `population`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Effort {
    pub population: usize,
    pub replicates: usize,
}

impl Default for Effort {
    fn default() -> Self {
        Effort { population: 1_000, replicates: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeEstimate {
    pub ln_estimate: f64,
    /// Standard error of `ln_estimate`.
    pub stderr: f64,
    pub method: TubeMethod,
    pub stages: usize,
    /// Mean over replicates of the per-stage delta-method stderr.
    pub stage_stderr: f64,
}

/// Monte Carlo estimate of `ln P(g(k) ≤ S_k ≤ f(k), 1 ≤ k ≤ n)`.
pub fn tube_prob_mc(dist: &EnvDistribution, spec: &TubeSpec, n: usize, effort: Effort, method: TubeMethod, seed: u64) -> Result<TubeEstimate> {
    tube_prob_mc_from(dist, spec, 0, 0.0, n, effort, method, seed)
}

/// As [`tube_prob_mc`], for paths started from `S_start = s`.
#[allow(clippy::too_many_arguments)]
pub fn tube_prob_mc_from(
    dist: &EnvDistribution,
    spec: &TubeSpec,
    start: usize,
    s: f64,
    n: usize,
    effort: Effort,
    method: TubeMethod,
    seed: u64,
) -> Result<TubeEstimate> {
    spec.validate(n)?;
    if n <= start {
        return Err(Error::InvalidTube("horizon must exceed the start".into()));
    }
    if effort.population == 0 || effort.replicates == 0 {
        return Err(Error::Estimate("effort must be positive".into()));
    }
    match method {
        TubeMethod::Naive => naive(dist, spec, start, s, n, effort, seed),
        TubeMethod::Splitting => splitting(dist, spec, start, s, n, effort, seed),
    }
}

/// Advances `s` from step `from` to `to`; false if it leaves the tube.
#[inline]
fn survive<R: Rng + ?Sized>(dist: &EnvDistribution, spec: &TubeSpec, s: &mut f64, from: usize, to: usize, rng: &mut R) -> bool {
    for k in from + 1..=to {
        *s += dist.sample(rng);
        if !spec.contains(k, *s) {
            return false;
        }
    }
    true
}

fn naive(dist: &EnvDistribution, spec: &TubeSpec, start: usize, s: f64, n: usize, effort: Effort, seed: u64) -> Result<TubeEstimate> {
    let tag = label("tube-naive");
    let hits: u64 = (0..effort.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, &[tag, r]);
            (0..effort.population).filter(|_| survive(dist, spec, &mut s.clone(), start, n, &mut rng)).count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    if hits == 0 {
        return Err(Error::Extinction { stage: 0, checkpoint: n });
    }
    let total = (effort.population * effort.replicates) as f64;
    let p = hits as f64 / total;
    let stderr = ((1.0 - p) / (total * p)).sqrt();
    Ok(TubeEstimate { ln_estimate: p.ln(), stderr, method: TubeMethod::Naive, stages: 1, stage_stderr: stderr })
}

/// Checkpoints `start < k_1 < … < k_J = n` with predicted ln-decrement
/// near [`STAGE_DECREMENT`] per stage. The per-step prediction is the
/// confinement eigenvalue of a drifted Brownian motion,
/// `μ²/(2V) + π²V/(2w²)`.
pub fn splitting_checkpoints(spec: &TubeSpec, mean: f64, v: f64, start: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let drift = if v > 0.0 { mean * mean / (2.0 * v) } else { 0.0 };
    for k in start + 1..=n {
        acc += drift + PI * PI / 2.0 * v * spec.width(k).powi(-2);
        if acc >= STAGE_DECREMENT && k < n {
            out.push(k);
            acc = 0.0;
        }
    }
    out.push(n);
    out
}

struct Replicate {
    ln_p: f64,
    delta_var: f64,
}

fn splitting(dist: &EnvDistribution, spec: &TubeSpec, start: usize, s: f64, n: usize, effort: Effort, seed: u64) -> Result<TubeEstimate> {
    let checkpoints = splitting_checkpoints(spec, dist.mean(), dist.variance(), start, n);
    let tag = label("tube-split");
    let m = effort.population;
    let reps: Vec<Result<Replicate>> = (0..effort.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, &[tag, r]);
            let mut particles = vec![s; m];
            let mut ln_p = 0.0;
            let mut delta_var = 0.0;
            let mut from = start;
            for (stage, &to) in checkpoints.iter().enumerate() {
                let survivors: Vec<f64> = particles
                    .iter()
                    .filter_map(|&x| {
                        let mut y = x;
                        survive(dist, spec, &mut y, from, to, &mut rng).then_some(y)
                    })
                    .collect();
                if survivors.is_empty() {
                    return Err(Error::Extinction { stage, checkpoint: to });
                }
                let q = survivors.len() as f64 / m as f64;
                ln_p += q.ln();
                delta_var += (1.0 - q) / (m as f64 * q);
                if to < n {
                    particles = resample(&survivors, m, &mut rng);
                }
                from = to;
            }
            Ok(Replicate { ln_p, delta_var })
        })
        .collect();
    let reps: Vec<Replicate> = reps.into_iter().collect::<Result<_>>()?;
    let r = reps.len() as f64;
    let top = reps.iter().map(|x| x.ln_p).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = reps.iter().map(|x| (x.ln_p - top).exp()).collect();
    let mean = w.iter().sum::<f64>() / r;
    let stage_stderr = reps.iter().map(|x| x.delta_var.sqrt()).sum::<f64>() / r;
    let stderr = if reps.len() > 1 {
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt() / mean
    } else {
        stage_stderr
    };
    Ok(TubeEstimate { ln_estimate: top + mean.ln(), stderr, method: TubeMethod::Splitting, stages: checkpoints.len(), stage_stderr })
}

/// Residual resampling of equally weighted survivors back to `m` particles.
fn resample<R: Rng + ?Sized>(survivors: &[f64], m: usize, rng: &mut R) -> Vec<f64> {
    let s = survivors.len();
    let copies = m / s;
    let mut out = Vec::with_capacity(m);
    for &x in survivors {
        out.extend(std::iter::repeat_n(x, copies));
    }
    for i in sample_indices(rng, s, m - copies * s) {
        out.push(survivors[i]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub ln_estimate: f64,
    pub stderr: f64,
    /// `ln_estimate / n^{1/3}`.
    pub normalized: f64,
    /// `−(π²/8)·3V/(c2−c1)²`.
    pub predicted: f64,
    /// Exact `ln P / n^{1/3}` for lattice laws.
    pub exact_normalized: Option<f64>,
}

/// Normalized log tube probabilities for the band `c1·k^{1/3} ≤ S_k ≤ c2·k^{1/3}`.
pub fn cuberoot_rate_experiment(dist: &EnvDistribution, c1: f64, c2: f64, n_list: &[usize], effort: Effort, seed: u64) -> Result<Vec<RateRow>> {
    if dist.mean().abs() > 1e-8 {
        return Err(Error::InvalidTube(format!("rate experiment needs a mean-zero law, mean is {}", dist.mean())));
    }
    let spec = TubeSpec::cube_root(c1, c2)?;
    let v = dist.variance();
    let predicted = -PI * PI / 8.0 * 3.0 * v / (c2 - c1).powi(2);
    let tag = label("rate");
    n_list
        .iter()
        .map(|&n| {
            let scale = (n as f64).cbrt();
            let est = tube_prob_mc(dist, &spec, n, effort, TubeMethod::Splitting, derive_seed(seed, &[tag, n as u64]))?;
            let exact_normalized = match dist.as_lattice() {
                Some(_) => Some(tube_ln_prob_exact(dist, &spec, n)? / scale),
                None => None,
            };
            Ok(RateRow { n, ln_estimate: est.ln_estimate, stderr: est.stderr, normalized: est.ln_estimate / scale, predicted, exact_normalized })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm1() -> EnvDistribution {
        EnvDistribution::plus_minus_one(0.5).unwrap()
    }

    fn band2() -> TubeSpec {
        TubeSpec::symmetric(2.0 + 1e-6).unwrap()
    }

    #[test]
    fn constant_band_rate_formula() {
        let spec = TubeSpec::symmetric(5.0).unwrap();
        let r = theoretical_tube_rate(&spec, 2.0, 30).unwrap();
        assert!((r + PI * PI / 8.0 * 2.0 * 30.0 / 100.0).abs() < 1e-12);
    }

    #[test]
    fn cube_root_rate_examples() {
        let spec = TubeSpec::cube_root(0.0, 1.0).unwrap();
        let r = theoretical_tube_rate(&spec, 1.0, 1000).unwrap();
        assert!((r + 34.00).abs() < 0.01, "{r}");
        let n = 1_000_000;
        let slope = theoretical_tube_rate(&spec, 1.0, n).unwrap() / (n as f64).cbrt();
        let limit = -PI * PI / 8.0 * 3.0;
        assert!(((slope - limit) / limit).abs() < 0.01);
    }

    #[test]
    fn brownian_examples() {
        assert!((brownian_confinement(0.0, 2.0) - 0.10798).abs() < 1e-5);
        assert_eq!(brownian_confinement(0.3, 0.0), 1.0);
        assert_eq!(brownian_confinement(1.5, 3.0), 0.0);
        let far = brownian_confinement(0.0, 40.0);
        let lead = 4.0 / PI * (-PI * PI * 40.0 / 8.0).exp();
        assert!((far / lead - 1.0).abs() < 1e-12, "{far} {lead}");
        for x in [-0.7, 0.0, 0.4] {
            let limit = 4.0 / PI * (PI * (x + 1.0) / 2.0).sin();
            let scaled = |l: f64| brownian_confinement(x, l) * (PI * PI * l / 8.0).exp();
            assert!((scaled(20.0) - limit).abs() < 1e-6);
            assert!((1..=20).all(|l| scaled(l as f64) < 2.0));
        }
    }

    #[test]
    fn dp_matches_path_enumeration() {
        assert!((tube_prob_exact_lattice(&pm1(), &band2(), 4).unwrap() - 0.75).abs() < 1e-15);
        let dist = EnvDistribution::lattice(&[(-1.0, 0.2), (0.0, 0.3), (2.0, 0.5)]).unwrap();
        let spec = TubeSpec::constant(-1.5, 2.5).unwrap();
        let atoms = [(-1.0, 0.2), (0.0, 0.3), (2.0, 0.5)];
        let mut total = 0.0;
        for a in atoms {
            for b in atoms {
                for c in atoms {
                    let path = [a.0, a.0 + b.0, a.0 + b.0 + c.0];
                    if path.iter().all(|s| (-1.5..=2.5).contains(s)) {
                        total += a.1 * b.1 * c.1;
                    }
                }
            }
        }
        assert!((tube_prob_exact_lattice(&dist, &spec, 3).unwrap() - total).abs() < 1e-15);
        assert_eq!(tube_prob_exact_lattice(&dist, &spec, 1).unwrap(), 1.0);
        let narrow = TubeSpec::constant(-1.5, 1.0).unwrap();
        assert!((tube_prob_exact_lattice(&dist, &narrow, 1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_atoms_count() {
        let spec = TubeSpec::symmetric(2.0).unwrap();
        assert!((tube_prob_exact_lattice(&pm1(), &spec, 4).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn dp_decay_matches_transfer_matrix() {
        let rate = band_decay_rate(&pm1(), -2.0, 2.0).unwrap();
        assert!((rate - (PI / 6.0).cos().ln()).abs() < 1e-12);
        let a = tube_ln_prob_exact(&pm1(), &band2(), 400).unwrap();
        let b = tube_ln_prob_exact(&pm1(), &band2(), 800).unwrap();
        assert!(((b - a) / 400.0 - rate).abs() < 1e-10);
    }

    #[test]
    fn dp_monotone_in_horizon() {
        let spec = TubeSpec::cube_root_shifted(-1.0, 2.0, 1.0).unwrap();
        let dist = EnvDistribution::plus_minus_one(0.4).unwrap();
        let v: Vec<f64> = (1..60).map(|n| tube_ln_prob_exact(&dist, &spec, n).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-13), "{v:?}");
    }

    #[test]
    fn dp_start_and_profile_agree() {
        let spec = TubeSpec::cube_root_shifted(-2.0, 3.0, 2.0).unwrap();
        let dist = EnvDistribution::lattice(&[(-1.0, 0.4), (0.0, 0.2), (1.0, 0.4)]).unwrap();
        let profile = survival_profile(&dist, &spec, 10, 50).unwrap();
        assert!(!profile.is_empty());
        for &(y, lp) in &profile {
            let direct = tube_ln_prob_exact_from(&dist, &spec, 10, y, 50).unwrap();
            assert!((direct - lp).abs() < 1e-10, "{y}: {direct} vs {lp}");
        }
    }

    #[test]
    fn state_explosion_reported() {
        let spec = TubeSpec::constant(-1e7, 1e7).unwrap();
        // a unit span with atoms a million apart
        let dist = EnvDistribution::lattice(&[(-1e6, 0.3), (1.0, 0.4), (1e6, 0.3)]).unwrap();
        let err = tube_ln_prob_exact(&dist, &spec, 3).unwrap_err();
        assert!(matches!(err, Error::StateExplosion { .. }));
        let wide = EnvDistribution::lattice(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let err = survival_profile(&wide, &TubeSpec::constant(-3e6, 3e6).unwrap(), 3_000_000, 3_000_001);
        assert!(matches!(err, Err(Error::StateExplosion { .. })));
    }

    #[test]
    fn splitting_matches_exact_case() {
        let est = tube_prob_mc(&pm1(), &band2(), 4, Effort::default(), TubeMethod::Splitting, 3).unwrap();
        assert!((est.ln_estimate - 0.75f64.ln()).abs() < 3.0 * est.stderr);
    }

    #[test]
    fn naive_single_step() {
        let dist = EnvDistribution::lattice(&[(-1.0, 0.2), (0.0, 0.3), (2.0, 0.5)]).unwrap();
        let spec = TubeSpec::constant(-1.5, 1.0).unwrap();
        let est = tube_prob_mc(&dist, &spec, 1, Effort { population: 2_000, replicates: 10 }, TubeMethod::Naive, 8).unwrap();
        let p: f64 = 0.5;
        let se = (p * (1.0 - p) / 20_000.0).sqrt();
        assert!((est.ln_estimate.exp() - p).abs() < 3.0 * se);
    }

    #[test]
    fn splitting_reaches_small_probabilities() {
        let exact = tube_ln_prob_exact(&pm1(), &band2(), 150).unwrap();
        assert!(exact < -20.0);
        let est = tube_prob_mc(&pm1(), &band2(), 150, Effort { population: 500, replicates: 30 }, TubeMethod::Splitting, 21).unwrap();
        assert!((est.ln_estimate - exact).abs() < 3.0 * est.stderr, "{} vs {exact} ± {}", est.ln_estimate, est.stderr);
        assert!(est.stages > 5);
    }

    #[test]
    fn extinction_is_an_error() {
        let est = tube_prob_mc(&pm1(), &band2(), 60, Effort { population: 1, replicates: 1 }, TubeMethod::Naive, 1);
        assert!(matches!(est, Err(Error::Extinction { .. })));
    }

    #[test]
    fn checkpoints_cover_horizon() {
        let spec = TubeSpec::cube_root(0.0, 5.0).unwrap();
        let cps = splitting_checkpoints(&spec, 0.0, 1.0, 0, 1000);
        assert_eq!(*cps.last().unwrap(), 1000);
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
        let predicted = eigenvalue_tube_rate(&spec, 1.0, 0, 1000);
        assert!((cps.len() as f64 - (-predicted / STAGE_DECREMENT)).abs() <= 1.0);
    }

    #[test]
    fn wide_band_is_certain() {
        let rows = cuberoot_rate_experiment(&pm1(), -500.0, 500.0, &[200], Effort { population: 100, replicates: 5 }, 4).unwrap();
        assert!(rows[0].ln_estimate.abs() < 1e-12);
    }

    #[test]
    fn mc_is_deterministic() {
        let e = Effort { population: 200, replicates: 4 };
        let a = tube_prob_mc(&pm1(), &band2(), 40, e, TubeMethod::Splitting, 5).unwrap();
        let b = tube_prob_mc(&pm1(), &band2(), 40, e, TubeMethod::Splitting, 5).unwrap();
        assert_eq!(a, b);
    }
}
