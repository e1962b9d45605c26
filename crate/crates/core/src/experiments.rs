//! Experiment dispatcher behind the `rwre` binary.
//!
//! A run is described by an [`ExperimentConfig`]: a distribution block, an
//! optional tree/gauge/tube block, a parameter block and an explicit master
//! seed. Every random stream is derived from the master seed and a key of
//! (experiment, c, seed index), so results do not depend on scheduling.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{parse_f64, parse_list, parse_u64, Block, Config};
use crate::critical_constants::{
    c1_critical, c2_constant, default_band_start, harnack_grid, ratio_harnack, second_moment_bound, small_prob_experiment, survivor_count,
    HarnackMethod,
};
use crate::env_model::{gaussian_loose_top_heavy, push_profile, tilt, EnvDistribution};
use crate::error::{Error, Result};
use crate::gauge_capacity::{dimension_estimate, finite_capacity, spherical_capacity_series, Gauge, Verdict};
use crate::random_env::EnvSample;
use crate::report::{Params, ReportRow};
use crate::seed::{derive_seed, label, real_tag};
use crate::tree_model::{ExplicitTree, Tree, TreeKind, TreeSpec, DEFAULT_LEVEL_BUDGET};
use crate::tube_estimates::{
    cuberoot_rate_experiment, theoretical_tube_rate, tube_ln_prob_exact, tube_prob_mc, Effort, TubeMethod, TubeSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Push,
    TiltCheck,
    Capacity,
    Conductance,
    Bottleneck,
    Tube,
    Rate,
    Survivors,
    SmallProb,
    Harnack,
    Phase,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::Push,
        Command::TiltCheck,
        Command::Capacity,
        Command::Conductance,
        Command::Bottleneck,
        Command::Tube,
        Command::Rate,
        Command::Survivors,
        Command::SmallProb,
        Command::Harnack,
        Command::Phase,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Push => "push",
            Command::TiltCheck => "tilt-check",
            Command::Capacity => "capacity",
            Command::Conductance => "conductance",
            Command::Bottleneck => "bottleneck",
            Command::Tube => "tube",
            Command::Rate => "rate",
            Command::Survivors => "survivors",
            Command::SmallProb => "smallprob",
            Command::Harnack => "harnack",
            Command::Phase => "phase",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub dist_file: Option<PathBuf>,
    pub c_list: Option<String>,
    pub n_list: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Option<Command>,
    pub master_seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Largest level a tree may materialize.
    pub budget: u64,
    config: Config,
}

const PARAMS: &str = "params";

impl ExperimentConfig {
    pub fn from_config(config: Config) -> Result<Self> {
        let root = |k: &str| config.get("", k).or_else(|| config.get(PARAMS, k));
        let experiment = root("experiment").map(Command::parse).transpose()?;
        let master_seed = root("master_seed").map(|v| parse_u64("master_seed", v)).transpose()?;
        let budget = match root("budget") {
            Some(v) => parse_u64("budget", v)?,
            None => DEFAULT_LEVEL_BUDGET,
        };
        let out = root("out").map(PathBuf::from);
        let cfg = ExperimentConfig { experiment, master_seed, out, budget, config };
        cfg.check_budget()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_config(Config::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config(Config::load(path)?)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.master_seed = Some(s);
        }
        if let Some(b) = o.budget {
            self.budget = b;
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        if let Some(path) = &o.dist_file {
            let dist = Config::load(path)?;
            let block = dist
                .section("distribution")
                .or_else(|| dist.section("dist"))
                .or_else(|| dist.section(""))
                .ok_or_else(|| Error::Config(format!("{} holds no distribution block", path.display())))?;
            for (k, v) in block.clone() {
                self.config.set("distribution", &k, v);
            }
        }
        if let Some(c) = &o.c_list {
            self.config.set(PARAMS, "c_list", c.clone());
        }
        if let Some(n) = &o.n_list {
            self.config.set(PARAMS, "n_list", n.clone());
        }
        self.check_budget()
    }

    fn check_budget(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("`budget` must be positive".into()));
        }
        Ok(())
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<String>) {
        self.config.set(PARAMS, key, value);
    }

    fn param(&self, key: &str) -> Option<&str> {
        self.config.get(PARAMS, key).or_else(|| self.config.get("", key))
    }

    fn block(&self, names: &[&str]) -> Option<&Block> {
        names.iter().find_map(|n| self.config.section(n))
    }

    pub fn seed(&self) -> Result<u64> {
        self.master_seed
            .ok_or_else(|| Error::Config("missing `master_seed`: set it in the config or pass --seed".into()))
    }

    pub fn dist(&self) -> Result<EnvDistribution> {
        let block = self
            .block(&["distribution", "dist"])
            .ok_or_else(|| Error::Config("missing [distribution] block".into()))?;
        EnvDistribution::from_block(block)
    }

    fn f64_param(&self, key: &str) -> Result<Option<f64>> {
        self.param(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn req_f64(&self, key: &str) -> Result<f64> {
        self.f64_param(key)?.ok_or_else(|| Error::Config(format!("missing `{key}`")))
    }

    fn usize_param(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.param(key).map(|v| parse_u64(key, v)).transpose()?.map_or(default, |v| v as usize))
    }

    pub fn n_list(&self) -> Result<Vec<usize>> {
        let v: Vec<usize> = parse_list("n_list", self.param("n_list").ok_or_else(|| Error::Config("missing `n_list`".into()))?)?;
        if v.is_empty() || v.contains(&0) {
            return Err(Error::Config("`n_list` must hold positive integers".into()));
        }
        Ok(v)
    }

    pub fn c_list(&self) -> Result<Vec<f64>> {
        let v: Vec<f64> = parse_list("c_list", self.param("c_list").ok_or_else(|| Error::Config("missing `c_list`".into()))?)?;
        if v.is_empty() {
            return Err(Error::Config("`c_list` is empty".into()));
        }
        Ok(v)
    }

    fn effort(&self) -> Result<Effort> {
        let d = Effort::default();
        let e = Effort { population: self.usize_param("population", d.population)?, replicates: self.usize_param("replicates", d.replicates)? };
        if e.population == 0 || e.replicates == 0 {
            return Err(Error::Config("`population` and `replicates` must be positive".into()));
        }
        Ok(e)
    }

    fn seed_count(&self, default: usize) -> Result<usize> {
        let s = self.usize_param("seeds", default)?;
        if s == 0 {
            return Err(Error::Config("`seeds` must be positive".into()));
        }
        Ok(s)
    }

    /// Tree from the [tree] block; growth-target trees accept `beta = auto`
    /// for the push of the configured law. Without a block, a growth-target
    /// tree with `β(dist)` and the given `c` is used.
    pub fn tree(&self, depth: usize, default_c: Option<f64>) -> Result<TreeSpec> {
        let Some(block) = self.block(&["tree"]) else {
            let c = default_c.ok_or_else(|| Error::Config("missing [tree] block".into()))?;
            return TreeSpec::growth_target(push_profile(&self.dist()?)?.beta, c, depth);
        };
        let get = |k: &str| block.get(k).map(String::as_str);
        let depth = match get("depth") {
            Some(v) => (parse_u64("depth", v)? as usize).max(depth),
            None => depth,
        };
        match get("kind").map(str::trim) {
            Some("bary") => TreeSpec::bary(parse_u64("b", get("b").ok_or_else(|| Error::Config("b-ary tree needs `b`".into()))?)? as u32, depth),
            Some("growth-target") | Some("growth") => {
                let beta = match get("beta").map(str::trim) {
                    None | Some("auto") => push_profile(&self.dist()?)?.beta,
                    Some(v) => parse_f64("beta", v)?,
                };
                let c = match get("c") {
                    Some(v) => parse_f64("c", v)?,
                    None => default_c.ok_or_else(|| Error::Config("growth-target tree needs `c`".into()))?,
                };
                TreeSpec::growth_target(beta, c, depth)
            }
            Some("explicit") => {
                let file = get("file").ok_or_else(|| Error::Config("explicit tree needs `file`".into()))?;
                let text = std::fs::read_to_string(file).map_err(|e| Error::Config(format!("cannot read {file}: {e}")))?;
                Ok(TreeSpec::explicit(ExplicitTree::parse(&text)?))
            }
            Some(other) => Err(Error::Config(format!("unknown tree kind `{other}`"))),
            None => Err(Error::Config("tree block is missing `kind`".into())),
        }
    }

    fn gauge(&self) -> Result<Gauge> {
        Gauge::from_block(self.block(&["gauge"]).ok_or_else(|| Error::Config("missing [gauge] block".into()))?)
    }

    fn tube(&self) -> Result<TubeSpec> {
        let block = self.block(&["tube"]).ok_or_else(|| Error::Config("missing [tube] block".into()))?;
        let num = |k: &str| -> Result<f64> { parse_f64(k, block.get(k).ok_or_else(|| Error::Config(format!("tube block is missing `{k}`")))?) };
        match block.get("kind").map(|s| s.trim()) {
            Some("constant") => match block.get("half_width") {
                Some(h) => TubeSpec::symmetric(parse_f64("half_width", h)?),
                None => TubeSpec::constant(num("lower")?, num("upper")?),
            },
            Some("cuberoot") | Some("cube-root") => {
                let shift = match block.get("shift") {
                    Some(v) => parse_f64("shift", v)?,
                    None => 0.0,
                };
                TubeSpec::cube_root_shifted(num("c1")?, num("c2")?, shift)
            }
            Some(other) => Err(Error::Config(format!("unknown tube kind `{other}`"))),
            None => Err(Error::Config("tube block is missing `kind`".into())),
        }
    }

    /// The configured law, tilted to mean zero unless `tilt = false`.
    fn mean_zero_dist(&self) -> Result<EnvDistribution> {
        let d = self.dist()?;
        match self.param("tilt").map(str::trim) {
            Some("false") | Some("no") => Ok(d),
            _ if d.mean().abs() <= 1e-8 => Ok(d),
            _ => tilt(&d),
        }
    }
}

/// Exit status for a failed run: 2 for budget overflows, 3 for bad
/// configuration or inputs, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_budget() {
        return 2;
    }
    match e {
        Error::Config(_)
        | Error::InvalidDistribution(_)
        | Error::InvalidTree(_)
        | Error::InvalidGauge(_)
        | Error::InvalidTube(_)
        | Error::InvalidVertex(_)
        | Error::DepthExceeded { .. } => 3,
        _ => 1,
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let cmd = cfg.experiment.ok_or_else(|| Error::Config("missing `experiment`".into()))?;
    run_command(cmd, cfg)
}

pub fn run_command(cmd: Command, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let master = cfg.seed()?;
    match cmd {
        Command::Push => push_rows(cfg, master),
        Command::TiltCheck => tilt_rows(cfg, master),
        Command::Capacity => capacity_rows(cfg, master),
        Command::Conductance => network_rows(cfg, master, false),
        Command::Bottleneck => network_rows(cfg, master, true),
        Command::Tube => tube_rows(cfg, master),
        Command::Rate => rate_rows(cfg, master),
        Command::Survivors => survivor_rows(cfg, master),
        Command::SmallProb => smallprob_rows(cfg, master),
        Command::Harnack => harnack_rows(cfg, master),
        Command::Phase => {
            let dist = cfg.dist()?;
            phase_experiment(&dist, &cfg.c_list()?, &cfg.n_list()?, cfg.seed_count(50)?, master, cfg.budget)
        }
    }
}

fn flag(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

fn push_rows(cfg: &ExperimentConfig, master: u64) -> Result<Vec<ReportRow>> {
    let dist = cfg.dist()?;
    let p = push_profile(&dist)?;
    let params = Params::new().with("dist", dist.describe());
    let row = |m: &str, v: f64| ReportRow::new("push", params.clone(), m, v, master);
    let mut rows = vec![
        row("beta", p.beta),
        row("lambda0", p.lambda0),
        row("top_heavy", flag(p.top_heavy)),
        row("tilted_variance", p.tilted_variance),
        row("mgf_min", p.mgf_min).with_stderr(p.quadrature_error),
        row("degenerate", flag(p.degenerate)),
        row("near_endpoint", flag(p.near_endpoint)),
    ];
    if let EnvDistribution::Gaussian { mean, var } = dist {
        rows.push(row("loose_top_heavy", flag(gaussian_loose_top_heavy(mean, var))));
    }
    Ok(rows)
}

fn tilt_rows(cfg: &ExperimentConfig, master: u64) -> Result<Vec<ReportRow>> {
    let dist = cfg.dist()?;
    let t = tilt(&dist)?;
    let params = Params::new().with("dist", dist.describe());
    let mut rows = vec![
        ReportRow::new("tilt-check", params.clone(), "tilted_mean", t.mean(), master),
        ReportRow::new("tilt-check", params.clone(), "tilted_variance", t.variance(), master),
    ];
    if let Some(l) = t.as_lattice() {
        for (x, p) in l.values().iter().zip(l.probs()) {
            rows.push(ReportRow::new("tilt-check", params.clone().real("x", *x), "tilted_mass", *p, master));
        }
    }
    Ok(rows)
}

fn capacity_rows(cfg: &ExperimentConfig, master: u64) -> Result<Vec<ReportRow>> {
    let n_list = cfg.n_list()?;
    let depth = *n_list.iter().max().unwrap();
    let spec = cfg.tree(depth, None)?;
    let gauge = cfg.gauge()?;
    let base = Params::new().with("tree", spec.describe()).with("gauge", format!("{gauge:?}").replace(',', ""));
    let mut rows = Vec::new();
    for &n in &n_list {
        let t = Instant::now();
        let r = finite_capacity(&spec, &gauge, n)?;
        rows.push(ReportRow::new("capacity", base.clone().with("n", n), "capacity", r.capacity, master).timed(t.elapsed().as_secs_f64()));
    }
    if !matches!(spec.kind, TreeKind::Explicit(_)) {
        let terms = cfg.usize_param("series_terms", depth)?;
        let s = spherical_capacity_series(&spec, &gauge, terms)?;
        let p = base.clone().with("terms", terms);
        let verdict = match s.verdict {
            Verdict::Convergent => 1.0,
            Verdict::Divergent => -1.0,
            Verdict::Inconclusive => 0.0,
        };
        rows.push(ReportRow::new("capacity", p.clone(), "series_partial_sum", s.partial_sum, master));
        rows.push(ReportRow::new("capacity", p.clone(), "series_tail_ratio", s.tail_ratio, master));
        rows.push(ReportRow::new("capacity", p.with("verdict", s.verdict.as_str()), "series_verdict", verdict, master));
        rows.push(ReportRow::new("capacity", base.with("n", depth), "dimension", dimension_estimate(&spec, depth)?, master));
    }
    Ok(rows)
}

fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

fn network_rows(cfg: &ExperimentConfig, master: u64, bottleneck: bool) -> Result<Vec<ReportRow>> {
    let name = if bottleneck { "bottleneck" } else { "conductance" };
    let dist = cfg.dist()?;
    let n_list = cfg.n_list()?;
    let depth = *n_list.iter().max().unwrap();
    let c = cfg.f64_param("c")?;
    let spec = cfg.tree(depth, c)?;
    let tree = Tree::new(spec.clone(), depth, cfg.budget)?;
    let seeds = cfg.seed_count(10)?;
    let tag = label(name);
    let cells: Vec<_> = (0..seeds as u64)
        .into_par_iter()
        .map(|i| {
            let t = Instant::now();
            let seed = derive_seed(master, &[tag, i]);
            let env = EnvSample::new(tree.clone(), dist.clone(), seed);
            let ln_c = env.ln_effective_conductances(&n_list)?;
            let ln_u = if bottleneck { env.ln_bottleneck_stats(&n_list)? } else { Vec::new() };
            Ok((seed, ln_c, ln_u, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let base = Params::new().with("dist", dist.describe()).with("tree", spec.describe());
    let mut rows = Vec::new();
    for (j, &n) in n_list.iter().enumerate() {
        let p = base.clone().with("n", n);
        for (i, (seed, ln_c, ln_u, wall)) in cells.iter().enumerate() {
            let q = p.clone().with("seed_index", i);
            rows.push(ReportRow::new(name, q.clone(), "ln_effective_conductance", ln_c[j], *seed).timed(*wall));
            if bottleneck {
                rows.push(ReportRow::new(name, q.clone(), "ln_bottleneck", ln_u[j], *seed).timed(*wall));
                let holds = ln_c[j] <= ln_u[j] + 1e-9;
                rows.push(ReportRow::new(name, q, "bound_holds", flag(holds), *seed).timed(*wall));
            }
        }
        let col = |k: usize| -> Vec<f64> { cells.iter().map(|c| if k == 0 { c.1[j] } else { c.2[j] }).collect() };
        rows.push(ReportRow::new(name, p.clone().with("seeds", seeds), "median_ln_effective_conductance", median(&col(0)), master));
        if bottleneck {
            rows.push(ReportRow::new(name, p.with("seeds", seeds), "median_ln_bottleneck", median(&col(1)), master));
        }
    }
    Ok(rows)
}

fn tube_rows(cfg: &ExperimentConfig, master: u64) -> Result<Vec<ReportRow>> {
    let dist = cfg.dist()?;
    let spec = cfg.tube()?;
    let effort = cfg.effort()?;
    let method = match cfg.param("method").map(str::trim) {
        None | Some("splitting") => TubeMethod::Splitting,
        Some("naive") => TubeMethod::Naive,
        Some(other) => return Err(Error::Config(format!("unknown method `{other}`"))),
    };
    let tag = label("tube");
    let mut rows = Vec::new();
    for n in cfg.n_list()? {
        let seed = derive_seed(master, &[tag, n as u64]);
        let p = Params::new()
            .with("dist", dist.describe())
            .with("tube", format!("{spec:?}").replace(',', ""))
            .with("n", n)
            .with("method", method.as_str())
            .with("population", effort.population)
            .with("replicates", effort.replicates);
        let t = Instant::now();
        let est = tube_prob_mc(&dist, &spec, n, effort, method, seed)?;
        let wall = t.elapsed().as_secs_f64();
        rows.push(ReportRow::new("tube", p.clone(), "ln_p", est.ln_estimate, seed).with_stderr(est.stderr).timed(wall));
        rows.push(ReportRow::new("tube", p.clone(), "stages", est.stages as f64, seed));
        let v = dist.variance();
        if v > 0.0 {
            rows.push(ReportRow::new("tube", p.clone(), "predicted_ln_p", theoretical_tube_rate(&spec, v, n)?, seed));
        }
        if dist.as_lattice().is_some() {
            match tube_ln_prob_exact(&dist, &spec, n) {
                Ok(x) => rows.push(ReportRow::new("tube", p, "exact_ln_p", x, seed)),
                Err(Error::StateExplosion { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rows)
}

fn rate_rows(cfg: &ExperimentConfig, master: u64) -> Result<Vec<ReportRow>> {
    let dist = cfg.mean_zero_dist()?;
    let (c1, c2) = match cfg.block(&["tube"]) {
        Some(b) => (
            parse_f64("c1", b.get("c1").ok_or_else(|| Error::Config("tube block is missing `c1`".into()))?)?,
            parse_f64("c2", b.get("c2").ok_or_else(|| Error::Config("tube block is missing `c2`".into()))?)?,
        ),
        None => (cfg.req_f64("c1")?, cfg.req_f64("c2")?),
    };
    let effort = cfg.effort()?;
    let t = Instant::now();
    let table = cuberoot_rate_experiment(&dist, c1, c2, &cfg.n_list()?, effort, master)?;
    let wall = t.elapsed().as_secs_f64();
    let mut rows = Vec::new();
    for r in table {
        let p = Params::new().with("dist", dist.describe()).real("c1", c1).real("c2", c2).with("n", r.n);
        let scale = (r.n as f64).cbrt();
        rows.push(ReportRow::new("rate", p.clone(), "normalized_rate", r.normalized, master).with_stderr(r.stderr / scale).timed(wall));
        rows.push(ReportRow::new("rate", p.clone(), "ln_p", r.ln_estimate, master).with_stderr(r.stderr));
        rows.push(ReportRow::new("rate", p.clone(), "predicted_rate", r.predicted, master));
        if let Some(x) = r.exact_normalized {
            rows.push(ReportRow::new("rate", p, "exact_normalized_rate", x, master));
        }
    }
    Ok(rows)
}

fn survivor_rows(cfg: &ExperimentConfig, master: u64) -> Result<Vec<ReportRow>> {
    let dist = cfg.dist()?;
    let n_list = cfg.n_list()?;
    let depth = *n_list.iter().max().unwrap();
    let c = cfg.req_f64("c")?;
    let spec = cfg.tree(depth, Some(c))?;
    let l = cfg.usize_param("band_start", default_band_start(&dist, c))?;
    let seeds = cfg.seed_count(20)?;
    let tree = Tree::new(spec.clone(), depth, u64::MAX)?;
    let tag = label("survivors");
    let cells: Vec<_> = (0..seeds as u64)
        .into_par_iter()
        .map(|i| {
            let t = Instant::now();
            let seed = derive_seed(master, &[tag, real_tag(c), i]);
            let env = EnvSample::new(tree.clone(), dist.clone(), seed);
            let counts = n_list.iter().map(|&n| survivor_count(&env, c, l, n)).collect::<Result<Vec<_>>>()?;
            Ok((seed, counts, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let base = Params::new().with("dist", dist.describe()).with("tree", spec.describe()).real("c", c).with("band_start", l);
    let mut rows = Vec::new();
    for (j, &n) in n_list.iter().enumerate() {
        let p = base.clone().with("n", n);
        for (i, (seed, counts, wall)) in cells.iter().enumerate() {
            rows.push(ReportRow::new("survivors", p.clone().with("seed_index", i), "survivors", counts[j] as f64, *seed).timed(*wall));
        }
        let counts: Vec<u64> = cells.iter().map(|c| c.1[j]).collect();
        if counts.len() >= 2 {
            let sm = second_moment_bound(&counts)?;
            rows.push(ReportRow::new("survivors", p.clone(), "second_moment_bound", sm.bound, master).with_stderr(sm.stderr));
            rows.push(ReportRow::new("survivors", p, "nonempty_fraction", sm.nonempty, master));
        }
    }
    Ok(rows)
}

fn smallprob_rows(cfg: &ExperimentConfig, master: u64) -> Result<Vec<ReportRow>> {
    let dist = cfg.dist()?;
    let n_list = cfg.n_list()?;
    let c = cfg.req_f64("c")?;
    let spec = cfg.tree(*n_list.iter().max().unwrap(), Some(c))?;
    let tag = label("smallprob");
    let seeds: Vec<u64> = (0..cfg.seed_count(200)? as u64).map(|i| derive_seed(master, &[tag, real_tag(c), i])).collect();
    let t = Instant::now();
    let table = small_prob_experiment(&spec, &dist, c, &n_list, &seeds, cfg.budget)?;
    let wall = t.elapsed().as_secs_f64();
    Ok(table
        .into_iter()
        .map(|r| {
            let p = Params::new()
                .with("dist", dist.describe())
                .with("tree", spec.describe())
                .real("c", c)
                .with("n", r.n)
                .real("threshold", r.threshold)
                .with("seeds", r.seeds);
            let se = (r.fraction * (1.0 - r.fraction) / r.seeds as f64).sqrt();
            ReportRow::new("smallprob", p, "high_path_fraction", r.fraction, master).with_stderr(se).timed(wall)
        })
        .collect())
}

fn harnack_method(cfg: &ExperimentConfig, dist: &EnvDistribution) -> Result<HarnackMethod> {
    match cfg.param("method").map(str::trim) {
        Some("exact") => Ok(HarnackMethod::Exact),
        Some("splitting") => Ok(HarnackMethod::Splitting(cfg.effort()?)),
        None if dist.as_lattice().is_some() => Ok(HarnackMethod::Exact),
        None => Ok(HarnackMethod::Splitting(cfg.effort()?)),
        Some(other) => Err(Error::Config(format!("unknown method `{other}`"))),
    }
}

fn harnack_rows(cfg: &ExperimentConfig, master: u64) -> Result<Vec<ReportRow>> {
    let dist = cfg.mean_zero_dist()?;
    let c = cfg.req_f64("c")?;
    let horizon = cfg.usize_param("n", 0)?;
    let k_list: Vec<usize> = match cfg.param("k_list") {
        Some(v) => parse_list("k_list", v)?,
        None => cfg.n_list()?,
    };
    let method = harnack_method(cfg, &dist)?;
    let points = cfg.usize_param("grid_points", 5)?;
    let tag = label("harnack");
    let mut rows = Vec::new();
    for k in k_list {
        let n = if horizon == 0 { 2 * k } else { horizon };
        let grid = harnack_grid(&dist, c, k, points);
        let seed = derive_seed(master, &[tag, real_tag(c), k as u64]);
        let p = Params::new().with("dist", dist.describe()).real("c", c).with("k", k).with("n", n).with("grid", grid.len());
        let t = Instant::now();
        let est = ratio_harnack(&dist, c, k, n, &grid, method, seed)?;
        rows.push(ReportRow::new("harnack", p, "harnack_m", est.m_emp, seed).with_stderr(est.stderr).timed(t.elapsed().as_secs_f64()));
    }
    Ok(rows)
}

/// Per-(c, n) medians over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub c: f64,
    pub n: usize,
    pub median_ln_bottleneck: f64,
    pub median_ln_conductance: f64,
    pub median_survivors: f64,
}

/// Growth-target trees with `β = β(dist)` and each `c`: bottleneck
/// statistic, effective conductance and survivor counts per level, with the
/// reference constants `c1` and `c2`.
pub fn phase_experiment(dist: &EnvDistribution, c_list: &[f64], n_list: &[usize], seeds: usize, master: u64, budget: u64) -> Result<Vec<ReportRow>> {
    Ok(phase_run(dist, c_list, n_list, seeds, master, budget)?.0)
}

/// As [`phase_experiment`], also returning the per-(c, n) medians.
pub fn phase_run(dist: &EnvDistribution, c_list: &[f64], n_list: &[usize], seeds: usize, master: u64, budget: u64) -> Result<(Vec<ReportRow>, Vec<PhaseSummary>)> {
    if c_list.is_empty() {
        return Err(Error::Config("`c_list` is empty".into()));
    }
    if n_list.is_empty() || seeds == 0 {
        return Err(Error::Config("phase needs a nonempty `n_list` and at least one seed".into()));
    }
    let profile = push_profile(dist)?;
    if !profile.top_heavy {
        return Err(Error::Degenerate("phase experiment needs a top-heavy law".into()));
    }
    let c1 = c1_critical(&profile)?;
    let tilted = tilt(dist)?;
    let depth = *n_list.iter().max().unwrap();
    let k_ref = *n_list.iter().min().unwrap();
    let tag = label("phase");
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &c in c_list {
        let spec = TreeSpec::growth_target(profile.beta, c, depth)?;
        let tree = Tree::new(spec.clone(), depth, budget)?;
        let l = default_band_start(dist, c);
        let cells: Vec<_> = (0..seeds as u64)
            .into_par_iter()
            .map(|i| {
                let t = Instant::now();
                let seed = derive_seed(master, &[tag, real_tag(c), i]);
                let env = EnvSample::new(tree.clone(), dist.clone(), seed);
                let ln_u = env.ln_bottleneck_stats(n_list)?;
                let ln_c = env.ln_effective_conductances(n_list)?;
                let surv = n_list.iter().map(|&n| survivor_count(&env, c, l, n)).collect::<Result<Vec<_>>>()?;
                Ok((seed, ln_u, ln_c, surv, t.elapsed().as_secs_f64()))
            })
            .collect::<Result<_>>()?;
        let base = Params::new().with("dist", dist.describe()).with("tree", spec.describe()).real("c", c);
        rows.push(ReportRow::new("phase", base.clone(), "c1", c1, master));
        let harnack = if c > 0.0 {
            let grid = harnack_grid(&tilted, c, k_ref, 5);
            let method = if tilted.as_lattice().is_some() { HarnackMethod::Exact } else { HarnackMethod::Splitting(Effort::default()) };
            let seed = derive_seed(master, &[tag, real_tag(c), label("harnack")]);
            if grid.is_empty() || depth == k_ref {
                None
            } else {
                ratio_harnack(&tilted, c, k_ref, depth, &grid, method, seed).ok()
            }
        } else {
            None
        };
        let m = harnack.as_ref().map_or(0.0, |h| h.m_emp);
        if let Some(h) = &harnack {
            rows.push(ReportRow::new("phase", base.clone().with("k", k_ref).with("n", depth), "harnack_m", h.m_emp, master).with_stderr(h.stderr));
        }
        if c > 0.0 {
            let src = if harnack.is_some() { "empirical" } else { "zero" };
            rows.push(ReportRow::new("phase", base.clone().with("m_source", src).real("m", m), "c2", c2_constant(&profile, c, m)?, master));
        }
        for (j, &n) in n_list.iter().enumerate() {
            let p = base.clone().with("n", n).with("band_start", l);
            for (i, (seed, ln_u, ln_c, surv, wall)) in cells.iter().enumerate() {
                let q = p.clone().with("seed_index", i);
                rows.push(ReportRow::new("phase", q.clone(), "ln_bottleneck", ln_u[j], *seed).timed(*wall));
                rows.push(ReportRow::new("phase", q.clone(), "ln_effective_conductance", ln_c[j], *seed).timed(*wall));
                rows.push(ReportRow::new("phase", q, "survivors", surv[j] as f64, *seed).timed(*wall));
            }
            let s = PhaseSummary {
                c,
                n,
                median_ln_bottleneck: median(&cells.iter().map(|x| x.1[j]).collect::<Vec<_>>()),
                median_ln_conductance: median(&cells.iter().map(|x| x.2[j]).collect::<Vec<_>>()),
                median_survivors: median(&cells.iter().map(|x| x.3[j] as f64).collect::<Vec<_>>()),
            };
            let p = p.with("seeds", seeds);
            rows.push(ReportRow::new("phase", p.clone(), "median_ln_bottleneck", s.median_ln_bottleneck, master));
            rows.push(ReportRow::new("phase", p.clone(), "median_ln_effective_conductance", s.median_ln_conductance, master));
            rows.push(ReportRow::new("phase", p, "median_survivors", s.median_survivors, master));
            summary.push(s);
        }
    }
    Ok((rows, summary))
}
