//! The random walk driven by an environment's conductances.
//!
//! From σ the walk moves to its parent with weight `e^{S(σ)}` and to a
//! child τ with weight `e^{S(τ)}`. Weights are normalized in the log
//! domain, so deep or extreme environments do not overflow.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::random_env::{EnvSample, Node};
use crate::seed::{label, stream};
use crate::tree_model::VertexId;

pub const DEFAULT_DEPTH_CAP: usize = 1_000;
pub const DEFAULT_STEP_CAP: u64 = 10_000_000;
/// Largest replicate count accepted by [`escape_probability_mc`].
pub const REPLICATE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub position: VertexId,
    pub steps: u64,
    pub returns_to_root: u64,
    pub max_depth_reached: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkOutcome {
    pub state: WalkState,
    /// Stopped because the step cap ran out.
    pub step_capped: bool,
    /// Stopped on reaching the depth cap.
    pub depth_capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkCaps {
    pub max_steps: u64,
    pub max_depth: usize,
}

impl Default for WalkCaps {
    fn default() -> Self {
        WalkCaps { max_steps: DEFAULT_STEP_CAP, max_depth: DEFAULT_DEPTH_CAP }
    }
}

/// Neighbours of σ with their transition probabilities, parent first.
pub fn transition_probs(env: &EnvSample, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
    let nodes = env.path_nodes(v)?;
    let here = *nodes.last().unwrap();
    let mut out: Vec<(VertexId, f64)> = Vec::new();
    let mut logw: Vec<f64> = Vec::new();
    if let Some(p) = v.parent() {
        out.push((p, 0.0));
        logw.push(here.s);
    }
    for (rank, child) in env.children(&here).enumerate() {
        out.push((v.child(rank as u32), 0.0));
        logw.push(child.s);
    }
    if out.is_empty() {
        return Err(Error::InvalidVertex("vertex has no neighbours".into()));
    }
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logw.iter().map(|w| (w - m).exp()).sum();
    for (slot, w) in out.iter_mut().zip(&logw) {
        slot.1 = (w - m).exp() / total;
    }
    Ok(out)
}

/// Reusable buffers for stepping.
struct Stepper {
    children: Vec<Node>,
    cumulative: Vec<f64>,
}

enum Move {
    Up,
    Down(usize),
}

impl Stepper {
    fn new() -> Self {
        Stepper { children: Vec::new(), cumulative: Vec::new() }
    }

    fn step<R: Rng + ?Sized>(&mut self, env: &EnvSample, here: &Node, rng: &mut R) -> Option<Move> {
        self.children.clear();
        self.children.extend(env.children(here));
        let has_parent = here.depth > 0;
        let mut m = if has_parent { here.s } else { f64::NEG_INFINITY };
        for c in &self.children {
            m = m.max(c.s);
        }
        if m == f64::NEG_INFINITY {
            return None;
        }
        self.cumulative.clear();
        let mut acc = 0.0;
        if has_parent {
            acc += (here.s - m).exp();
            self.cumulative.push(acc);
        }
        for c in &self.children {
            acc += (c.s - m).exp();
            self.cumulative.push(acc);
        }
        let u = rng.random::<f64>() * acc;
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        Some(match (has_parent, k) {
            (true, 0) => Move::Up,
            (true, k) => Move::Down(k - 1),
            (false, k) => Move::Down(k),
        })
    }
}

/// Runs the walk from `start` until a cap is hit. The depth cap is clamped
/// to the tree depth.
pub fn simulate_walk<R: Rng + ?Sized>(env: &EnvSample, start: &VertexId, caps: WalkCaps, rng: &mut R) -> Result<WalkOutcome> {
    let max_depth = caps.max_depth.min(env.tree().depth());
    let mut path = env.path_nodes(start)?;
    let mut ranks: Vec<u32> = start.path().to_vec();
    let mut stepper = Stepper::new();
    let mut steps = 0u64;
    let mut returns = 0u64;
    let mut deepest = start.depth();
    let mut depth_capped = start.depth() >= max_depth;
    while !depth_capped && steps < caps.max_steps {
        let here = *path.last().unwrap();
        match stepper.step(env, &here, rng) {
            None => break,
            Some(Move::Up) => {
                path.pop();
                ranks.pop();
                if path.len() == 1 {
                    returns += 1;
                }
            }
            Some(Move::Down(k)) => {
                path.push(stepper.children[k]);
                ranks.push(k as u32);
                deepest = deepest.max(path.len() - 1);
            }
        }
        steps += 1;
        depth_capped = path.len() > max_depth;
    }
    Ok(WalkOutcome {
        state: WalkState { position: VertexId::from_path(ranks), steps, returns_to_root: returns, max_depth_reached: deepest },
        step_capped: !depth_capped && steps >= caps.max_steps,
        depth_capped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub replicates: u64,
    /// Walks that ran out of steps; counted as non-escapes.
    pub truncated: u64,
}

enum Excursion {
    Escaped,
    Returned,
    Truncated,
}

fn excursion<R: Rng + ?Sized>(env: &EnvSample, n: usize, max_steps: u64, stepper: &mut Stepper, rng: &mut R) -> Excursion {
    let mut path = vec![env.root()];
    for _ in 0..max_steps {
        let here = *path.last().unwrap();
        match stepper.step(env, &here, rng) {
            None => return Excursion::Returned,
            Some(Move::Up) => {
                path.pop();
                if path.len() == 1 {
                    return Excursion::Returned;
                }
            }
            Some(Move::Down(k)) => {
                path.push(stepper.children[k]);
                if path.len() > n {
                    return Excursion::Escaped;
                }
            }
        }
    }
    Excursion::Truncated
}

/// Fraction of walks from ρ that reach level `n` before returning to ρ.
/// Replicate `r` draws from the stream `(seed, r)`.
pub fn escape_probability_mc(env: &EnvSample, n: usize, replicates: u64, seed: u64) -> Result<EscapeEstimate> {
    escape_probability_mc_capped(env, n, replicates, seed, DEFAULT_STEP_CAP)
}

pub fn escape_probability_mc_capped(env: &EnvSample, n: usize, replicates: u64, seed: u64, max_steps: u64) -> Result<EscapeEstimate> {
    if n == 0 {
        return Err(Error::InvalidVertex("escape level must be at least 1".into()));
    }
    if n > env.tree().depth() {
        return Err(Error::DepthExceeded { requested: n, max: env.tree().depth() });
    }
    if replicates == 0 {
        return Err(Error::Estimate("need at least one replicate".into()));
    }
    if replicates > REPLICATE_BUDGET {
        return Err(Error::Budget { level: n, size: replicates as u128, budget: REPLICATE_BUDGET });
    }
    let tag = label("escape");
    let outcomes: Vec<(u64, u64)> = (0..replicates)
        .into_par_iter()
        .map_init(Stepper::new, |stepper, r| {
            let mut rng = stream(seed, &[tag, r]);
            match excursion(env, n, max_steps, stepper, &mut rng) {
                Excursion::Escaped => (1, 0),
                Excursion::Returned => (0, 0),
                Excursion::Truncated => (0, 1),
            }
        })
        .collect();
    let hits: u64 = outcomes.iter().map(|o| o.0).sum();
    let truncated: u64 = outcomes.iter().map(|o| o.1).sum();
    let p = hits as f64 / replicates as f64;
    Ok(EscapeEstimate { estimate: p, stderr: (p * (1.0 - p) / replicates as f64).sqrt(), replicates, truncated })
}

/// Network prediction for the escape probability: `C(ρ ↔ Γ_n)` divided
/// by the total conductance at the root.
pub fn escape_prediction(env: &EnvSample, n: usize) -> Result<f64> {
    let ln_c = env.ln_effective_conductances(&[n])?[0];
    let mut root = crate::random_env::LogSumExp::default();
    for c in env.children(&env.root()) {
        root.add(c.s);
    }
    Ok((ln_c - root.ln()).exp())
}
