//! Increment laws for the environment, their moment generating function,
//! the backward push and the mean-zero tilted law.
//!
//! Three representations are supported: finite lattice laws (exact sums),
//! Gaussians (closed forms) and tabulated densities on a uniform grid
//! (trapezoid quadrature with an attached error estimate).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Total mass must match 1 to this tolerance.
pub const MASS_TOL: f64 = 1e-12;
/// Distance from 0 or 1 under which a minimizer counts as an endpoint.
pub const ENDPOINT_TOL: f64 = 1e-8;
/// Bisection stops once the bracket is narrower than this.
pub const SEARCH_TOL: f64 = 1e-13;
/// Step past lambda0 used to check finiteness of the MGF.
const FINITE_PROBE: f64 = 1e-3;
/// A tabulated integrand still this large (relative) at a grid edge is
/// treated as having an unresolved, possibly divergent tail.
const EDGE_TAIL_TOL: f64 = 1e-6;

/// Finite lattice law: strictly increasing atoms with their masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    values: Vec<f64>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl Lattice {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Atoms with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied()).filter(|&(_, p)| p > 0.0)
    }

    /// Offset `a` and span `h` with every atom in `a + h·Z`, if the atom
    /// differences are commensurate (to 1e-9 relative).
    pub fn span(&self) -> Option<(f64, f64)> {
        let support: Vec<f64> = self.support().map(|(x, _)| x).collect();
        let base = support[0];
        let mut h = 0.0_f64;
        for &x in &support[1..] {
            h = float_gcd(h, x - base)?;
        }
        Some((base, h))
    }
}

pub(crate) fn float_gcd(a: f64, b: f64) -> Option<f64> {
    let scale = a.abs().max(b.abs()).max(1.0);
    let (mut a, mut b) = (a.abs(), b.abs());
    for _ in 0..200 {
        if b <= 1e-9 * scale {
            return Some(a);
        }
        let r = a % b;
        a = b;
        b = if r > b - 1e-9 * scale { 0.0 } else { r };
    }
    None
}

/// Density tabulated on the grid `x0 + i·step`, integrated by the trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    x0: f64,
    step: f64,
    density: Vec<f64>,
    /// Cumulative trapezoid mass at each grid point.
    cdf: Vec<f64>,
}

impl Tabulated {
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    fn x(&self, i: usize) -> f64 {
        self.x0 + self.step * i as f64
    }

    /// Trapezoid integral of `g(x)·density(x)` and a Richardson error estimate.
    fn integrate(&self, g: impl Fn(f64) -> f64) -> (f64, f64) {
        let m = self.density.len();
        let vals: Vec<f64> = (0..m).map(|i| self.density[i] * g(self.x(i))).collect();
        let trap = |stride: usize, end: usize| {
            let mut s = 0.0;
            let mut i = 0;
            while i + stride <= end {
                s += 0.5 * (vals[i] + vals[i + stride]) * self.step * stride as f64;
                i += stride;
            }
            s
        };
        let fine = trap(1, m - 1);
        let even_end = (m - 1) / 2 * 2;
        let mut coarse = trap(2, even_end);
        if even_end < m - 1 {
            coarse += 0.5 * (vals[m - 2] + vals[m - 1]) * self.step;
        }
        let edge = vals[0].abs().max(vals[m - 1].abs());
        if !fine.is_finite() || edge * self.step > EDGE_TAIL_TOL * fine.abs().max(f64::MIN_POSITIVE) {
            return (f64::INFINITY, f64::INFINITY);
        }
        (fine, (fine - coarse).abs() / 3.0)
    }

    /// Inverse of the piecewise-quadratic trapezoid CDF.
    fn quantile(&self, u: f64) -> f64 {
        let total = *self.cdf.last().unwrap();
        let target = u * total;
        let cell = match self.cdf.partition_point(|&c| c <= target) {
            0 => 0,
            i => (i - 1).min(self.density.len() - 2),
        };
        let (f0, f1) = (self.density[cell], self.density[cell + 1]);
        let need = target - self.cdf[cell];
        let h = self.step;
        // mass over [0, t] within the cell: f0 t + (f1 - f0) t^2 / (2h)
        let a = (f1 - f0) / (2.0 * h);
        let t = if a.abs() < 1e-300 {
            if f0 > 0.0 { need / f0 } else { 0.5 * h }
        } else {
            let disc = (f0 * f0 + 4.0 * a * need).max(0.0);
            (-f0 + disc.sqrt()) / (2.0 * a)
        };
        self.x(cell) + t.clamp(0.0, h)
    }
}

/// Law of the i.i.d. increment X.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvDistribution {
    Lattice(Lattice),
    Gaussian { mean: f64, var: f64 },
    Tabulated(Tabulated),
}

impl EnvDistribution {
    /// Lattice law from `(value, probability)` pairs.
    pub fn lattice(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("lattice law needs at least one atom".into()));
        }
        if atoms.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidDistribution("lattice values must be strictly increasing".into()));
        }
        if atoms.iter().any(|&(x, p)| !x.is_finite() || !(p >= 0.0)) {
            return Err(Error::InvalidDistribution("lattice probabilities must be nonnegative".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("lattice mass {total} differs from 1")));
        }
        if atoms.iter().all(|a| a.1 == 0.0) {
            return Err(Error::InvalidDistribution("lattice law has no positive atom".into()));
        }
        let values = atoms.iter().map(|a| a.0).collect();
        let probs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let mut cdf: Vec<f64> = probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        Ok(EnvDistribution::Lattice(Lattice { values, probs, cdf }))
    }

    /// X = +1 with probability `p`, -1 otherwise.
    pub fn plus_minus_one(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!("p = {p} outside [0, 1]")));
        }
        Self::lattice(&[(-1.0, 1.0 - p), (1.0, p)])
    }

    /// Deterministic X ≡ value.
    pub fn constant(value: f64) -> Result<Self> {
        Self::lattice(&[(value, 1.0)])
    }

    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        if !mean.is_finite() || !(var > 0.0) || !var.is_finite() {
            return Err(Error::InvalidDistribution(format!("gaussian needs finite mean and var > 0, got ({mean}, {var})")));
        }
        Ok(EnvDistribution::Gaussian { mean, var })
    }

    /// Tabulated density on `x0 + i·step`; its trapezoid mass must be 1.
    pub fn tabulated(x0: f64, step: f64, density: Vec<f64>) -> Result<Self> {
        if density.len() < 3 || !(step > 0.0) || !x0.is_finite() {
            return Err(Error::InvalidDistribution("tabulated law needs >= 3 grid points and step > 0".into()));
        }
        if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidDistribution("tabulated densities must be finite and nonnegative".into()));
        }
        let mut cdf = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * step;
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("tabulated mass {acc} differs from 1")));
        }
        Ok(EnvDistribution::Tabulated(Tabulated { x0, step, density, cdf }))
    }

    /// Tabulates `f` on `cells + 1` points over `[lo, hi]` and renormalizes.
    pub fn tabulated_from_fn(lo: f64, hi: f64, cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if cells < 2 || !(hi > lo) {
            return Err(Error::InvalidDistribution("need hi > lo and at least two cells".into()));
        }
        let step = (hi - lo) / cells as f64;
        let raw: Vec<f64> = (0..=cells).map(|i| f(lo + step * i as f64)).collect();
        let mass: f64 = raw.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidDistribution("density has no mass on the grid".into()));
        }
        let mut density: Vec<f64> = raw.iter().map(|d| d / mass).collect();
        // absorb the last ulp of rounding into the interior so the mass check holds
        let fix: f64 = density.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
        for d in &mut density {
            *d /= fix;
        }
        Self::tabulated(lo, step, density)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EnvDistribution::Lattice(_) => "lattice",
            EnvDistribution::Gaussian { .. } => "gaussian",
            EnvDistribution::Tabulated(_) => "tabulated",
        }
    }

    pub fn as_lattice(&self) -> Option<&Lattice> {
        match self {
            EnvDistribution::Lattice(l) => Some(l),
            _ => None,
        }
    }

    /// The value if X is deterministic.
    pub fn point_mass(&self) -> Option<f64> {
        match self {
            EnvDistribution::Lattice(l) => {
                let mut s = l.support();
                let first = s.next()?;
                s.next().is_none().then_some(first.0)
            }
            _ => None,
        }
    }

    /// E e^{λX}; `f64::INFINITY` when it diverges.
    pub fn mgf(&self, lambda: f64) -> f64 {
        self.mgf_with_error(lambda).0
    }

    /// E e^{λX} with a quadrature error estimate (zero for exact forms).
    pub fn mgf_with_error(&self, lambda: f64) -> (f64, f64) {
        match self {
            EnvDistribution::Lattice(l) => {
                let v: f64 = l.support().map(|(x, p)| p * (lambda * x).exp()).sum();
                (if v.is_finite() { v } else { f64::INFINITY }, 0.0)
            }
            EnvDistribution::Gaussian { mean, var } => {
                let v = (lambda * mean + 0.5 * lambda * lambda * var).exp();
                (v, 0.0)
            }
            EnvDistribution::Tabulated(t) => t.integrate(|x| (lambda * x).exp()),
        }
    }

    /// d/dλ E e^{λX} = E[X e^{λX}].
    pub fn mgf_derivative(&self, lambda: f64) -> f64 {
        match self {
            EnvDistribution::Lattice(l) => l.support().map(|(x, p)| p * x * (lambda * x).exp()).sum(),
            EnvDistribution::Gaussian { mean, var } => (mean + lambda * var) * self.mgf(lambda),
            EnvDistribution::Tabulated(t) => t.integrate(|x| x * (lambda * x).exp()).0,
        }
    }

    /// Mean and variance of the law reweighted by e^{λx}.
    pub fn reweighted_moments(&self, lambda: f64) -> (f64, f64) {
        match self {
            EnvDistribution::Lattice(l) => {
                let w: Vec<(f64, f64)> = l.support().map(|(x, p)| (x, p * (lambda * x).exp())).collect();
                let z: f64 = w.iter().map(|a| a.1).sum();
                let mean = w.iter().map(|&(x, q)| x * q).sum::<f64>() / z;
                let var = w.iter().map(|&(x, q)| (x - mean).powi(2) * q).sum::<f64>() / z;
                (mean, var)
            }
            EnvDistribution::Gaussian { mean, var } => (mean + lambda * var, *var),
            EnvDistribution::Tabulated(t) => {
                let z = t.integrate(|x| (lambda * x).exp()).0;
                let mean = t.integrate(|x| x * (lambda * x).exp()).0 / z;
                let var = t.integrate(|x| (x - mean).powi(2) * (lambda * x).exp()).0 / z;
                (mean, var)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.reweighted_moments(0.0).0
    }

    pub fn variance(&self) -> f64 {
        self.reweighted_moments(0.0).1
    }

    /// Maps two uniforms in [0, 1) to a variate; the second is used only by
    /// the Gaussian (Box–Muller) transform.
    #[inline]
    pub fn from_uniforms(&self, u1: f64, u2: f64) -> f64 {
        match self {
            EnvDistribution::Lattice(l) => {
                let i = l.cdf.partition_point(|&c| c <= u1).min(l.values.len() - 1);
                l.values[i]
            }
            EnvDistribution::Gaussian { mean, var } => {
                let r = (-2.0 * (1.0 - u1).ln()).sqrt();
                mean + var.sqrt() * r * (2.0 * PI * u2).cos()
            }
            EnvDistribution::Tabulated(t) => t.quantile(u1),
        }
    }

    /// One variate from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.random();
        let u2: f64 = match self {
            EnvDistribution::Gaussian { .. } => rng.random(),
            _ => 0.0,
        };
        self.from_uniforms(u1, u2)
    }

    /// Largest |x| in the support, if bounded.
    pub fn max_abs(&self) -> Option<f64> {
        match self {
            EnvDistribution::Lattice(l) => l.support().map(|(x, _)| x.abs()).reduce(f64::max),
            EnvDistribution::Gaussian { .. } => None,
            EnvDistribution::Tabulated(t) => Some(t.x0.abs().max(t.x(t.density.len() - 1).abs())),
        }
    }

    /// Short description for reports.
    pub fn describe(&self) -> String {
        match self {
            EnvDistribution::Lattice(l) => {
                let atoms: Vec<String> = l.support().map(|(x, p)| format!("{x}:{p}")).collect();
                format!("lattice({})", atoms.join(" "))
            }
            EnvDistribution::Gaussian { mean, var } => format!("gaussian(mean={mean} var={var})"),
            EnvDistribution::Tabulated(t) => format!("tabulated(x0={} step={} cells={})", t.x0, t.step, t.density.len()),
        }
    }

    /// Parses a `key=value` block: `kind=lattice` with `atoms=-1:0.7,1:0.3`,
    /// `kind=gaussian` with `mean`/`var`, or `kind=tabulated` with `x0`,
    /// `step` and a comma-separated `density` (renormalized).
    pub fn from_block(block: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| {
            block.get(k).ok_or_else(|| Error::Config(format!("distribution block is missing `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?.trim().parse::<f64>().map_err(|_| Error::Config(format!("`{k}` is not a number")))
        };
        match get("kind")?.trim() {
            "lattice" => {
                let atoms = get("atoms")?
                    .split(',')
                    .map(|a| {
                        let (v, p) = a.split_once(':').ok_or_else(|| Error::Config(format!("bad atom `{a}`")))?;
                        let v = v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad atom value `{v}`")))?;
                        let p = p.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad atom mass `{p}`")))?;
                        Ok((v, p))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::lattice(&atoms)
            }
            "gaussian" => Self::gaussian(num("mean")?, num("var")?),
            "tabulated" => {
                let density = get("density")?
                    .split(',')
                    .map(|d| d.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad density `{d}`"))))
                    .collect::<Result<Vec<_>>>()?;
                let (x0, step) = (num("x0")?, num("step")?);
                let mass: f64 = density.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
                if !(mass > 0.0) {
                    return Err(Error::InvalidDistribution("tabulated density has no mass".into()));
                }
                let density = density.iter().map(|d| d / mass).collect::<Vec<_>>();
                let fix: f64 = density.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
                Self::tabulated(x0, step, density.into_iter().map(|d| d / fix).collect())
            }
            other => Err(Error::Config(format!("unknown distribution kind `{other}`"))),
        }
    }
}

/// Quantities derived from the MGF on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushProfile {
    /// Backward push −ln min E e^{λX}.
    pub beta: f64,
    /// Minimizer of the MGF over [0, 1].
    pub lambda0: f64,
    pub top_heavy: bool,
    /// Variance of the law reweighted by e^{λ0 x}.
    pub tilted_variance: f64,
    pub mgf_min: f64,
    /// X is a point mass; the MGF is monotone and lambda0 is an endpoint.
    pub degenerate: bool,
    /// lambda0 fell within [`ENDPOINT_TOL`] of 0 or 1 without being exactly there.
    pub near_endpoint: bool,
    /// Quadrature error on `mgf_min` (zero for lattice and Gaussian laws).
    pub quadrature_error: f64,
}

/// Minimizes the MGF over [0, 1] and classifies top-heaviness.
///
/// The minimizer is located by bisection on the sign of the MGF derivative,
/// which brackets the argmin of a convex function without the precision loss
/// of comparing nearly equal function values.
pub fn push_profile(dist: &EnvDistribution) -> Result<PushProfile> {
    for lambda in [0.0, 1.0] {
        if !dist.mgf(lambda).is_finite() {
            return Err(Error::MgfDivergent { lambda });
        }
    }
    let (lambda0, degenerate) = match dist.point_mass() {
        Some(v) if v < 0.0 => (1.0, true),
        Some(_) => (0.0, true),
        None => (argmin_on_unit_interval(dist)?, false),
    };
    let (mgf_min, quadrature_error) = dist.mgf_with_error(lambda0);
    let beta = -mgf_min.ln();
    let interior = lambda0 > ENDPOINT_TOL && lambda0 < 1.0 - ENDPOINT_TOL;
    let near_endpoint = !interior && lambda0 != 0.0 && lambda0 != 1.0;
    let top_heavy = !degenerate && interior && dist.mgf(lambda0 + FINITE_PROBE).is_finite();
    let tilted_variance = dist.reweighted_moments(lambda0).1;
    Ok(PushProfile {
        beta,
        lambda0,
        top_heavy,
        tilted_variance,
        mgf_min,
        degenerate,
        near_endpoint,
        quadrature_error,
    })
}

fn argmin_on_unit_interval(dist: &EnvDistribution) -> Result<f64> {
    let d0 = dist.mgf_derivative(0.0);
    let d1 = dist.mgf_derivative(1.0);
    if d0.is_nan() || d1.is_nan() {
        return Err(Error::SearchFailed("MGF derivative is not a number".into()));
    }
    if d0 >= 0.0 {
        return Ok(0.0);
    }
    if d1 <= 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        if hi - lo < SEARCH_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        let d = dist.mgf_derivative(mid);
        if d.is_nan() {
            return Err(Error::SearchFailed(format!("derivative undefined at {mid}")));
        }
        if d < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::SearchFailed("bracket did not shrink".into()))
}

/// Closed-form (lambda0, beta) for N(mean, var): λ0 = clamp(−mean/var, 0, 1).
pub fn gaussian_closed_form(mean: f64, var: f64) -> (f64, f64) {
    let lambda0 = (-mean / var).clamp(0.0, 1.0);
    (lambda0, -(lambda0 * mean + 0.5 * lambda0 * lambda0 * var))
}

/// The looser sufficient condition `drift < 2·variance` quoted for Gaussian
/// laws N(−drift, var). Reported next to the exact classification, which
/// requires drift < var.
pub fn gaussian_loose_top_heavy(mean: f64, var: f64) -> bool {
    -mean < 2.0 * var
}

/// The mean-zero law dμ′/dμ(x) = e^{λ0 x + β}.
pub fn tilt(dist: &EnvDistribution) -> Result<EnvDistribution> {
    let profile = push_profile(dist)?;
    if !profile.top_heavy {
        return Err(Error::EndpointTilt { lambda0: profile.lambda0 });
    }
    let l0 = profile.lambda0;
    match dist {
        EnvDistribution::Lattice(l) => {
            let weights: Vec<f64> = l.values.iter().zip(&l.probs).map(|(x, p)| p * (l0 * x).exp()).collect();
            let z: f64 = weights.iter().sum();
            let atoms: Vec<(f64, f64)> = l.values.iter().copied().zip(weights.iter().map(|w| w / z)).collect();
            EnvDistribution::lattice(&atoms)
        }
        EnvDistribution::Gaussian { mean, var } => EnvDistribution::gaussian(mean + l0 * var, *var),
        EnvDistribution::Tabulated(t) => {
            let raw: Vec<f64> = (0..t.density.len()).map(|i| t.density[i] * (l0 * t.x(i)).exp()).collect();
            let z: f64 = raw.windows(2).map(|w| 0.5 * (w[0] + w[1]) * t.step).sum();
            let density: Vec<f64> = raw.iter().map(|d| d / z).collect();
            let fix: f64 = density.windows(2).map(|w| 0.5 * (w[0] + w[1]) * t.step).sum();
            EnvDistribution::tabulated(t.x0, t.step, density.into_iter().map(|d| d / fix).collect())
        }
    }
}
