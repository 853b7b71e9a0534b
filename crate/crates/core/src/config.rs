//! Scenario configuration files.
//!
//! A scenario is a flat TOML document: one key per model constant or
//! simulation control, `sources` as a list of coordinate tuples, and an
//! optional `[[population]]` array describing the initial condition. See the
//! files under `scenarios/` for complete examples.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AgentState, ForceParams, Label, Mode, Propulsion, RateSpec, SimParams, SourceSpec, SwarmState,
};
use crate::rng::{step_rng, Phase};
use crate::topology::SearchBackend;
use crate::vector::Vector;

/// Relative tolerance of the mesoscopic constraint `rho* dt = eps`.
pub const MESO_CONSTRAINT_TOL: f64 = 1e-12;

/// A per-axis value: either one number for every axis or an explicit tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

impl AxisValue {
    fn resolve(&self, dim: usize, what: &str) -> Result<Vector> {
        match self {
            AxisValue::Uniform(v) => Ok(Vector::splat(dim, *v)),
            AxisValue::PerAxis(c) if c.len() == dim => Ok(Vector::from_slice(c).expect("dim <= 3")),
            AxisValue::PerAxis(c) => Err(Error::Config(format!(
                "{what} has {} components, expected {dim}",
                c.len()
            ))),
        }
    }
}

/// One Gaussian group of the initial population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationGroup {
    /// Share of the agents in this group.
    pub fraction: f64,
    pub label: Label,
    pub position_mean: AxisValue,
    pub position_std: AxisValue,
    pub velocity_mean: AxisValue,
    pub velocity_std: AxisValue,
}

impl PopulationGroup {
    /// Followers at `N(500, 25^2)` per axis with `N(0, 1)` velocities.
    pub fn default_followers() -> Self {
        PopulationGroup {
            fraction: 1.0,
            label: Label::Follower,
            position_mean: AxisValue::Uniform(500.0),
            position_std: AxisValue::Uniform(25.0),
            velocity_mean: AxisValue::Uniform(0.0),
            velocity_std: AxisValue::Uniform(1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateFamily {
    Constant,
    Density,
    Target,
}

/// Order of the label update relative to the kinematic update in one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelOrder {
    /// Kinematics first (with the old labels), then labels switch.
    #[default]
    After,
    /// Labels switch first; kinematics use the new labels.
    Before,
}

/// How often a mesoscopic agent interacts in one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionMode {
    /// Every agent interacts once per step; requires `rho* dt = eps`.
    #[default]
    Always,
    /// Interaction with probability `rho* dt / eps <= 1`.
    Bernoulli,
}

/// Where density-dependent rates measure concentrations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityEstimate {
    /// Over the step's neighbor subsample (mesoscopic only).
    #[default]
    Subsample,
    /// Over the whole ensemble.
    Exact,
}

fn default_snapshot_every() -> u64 {
    100
}

/// Every tunable of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub dim: usize,
    pub n_particles: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sub: Option<usize>,
    pub rho_star: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_final: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,

    pub c_rep: f64,
    pub c_ali: f64,
    pub c_att: f64,
    pub c_v: f64,
    #[serde(default)]
    pub c_src: f64,
    #[serde(default)]
    pub c_ctr: f64,
    pub s: f64,
    pub r_bar: f64,
    pub r_under: f64,
    pub eps_sig: f64,

    pub rates: RateFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_fl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_lf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_lo: Option<f64>,

    #[serde(default)]
    pub sources: Vec<Vec<f64>>,

    #[serde(default)]
    pub label_order: LabelOrder,
    #[serde(default)]
    pub propulsion: Propulsion,
    #[serde(default)]
    pub collision: CollisionMode,
    #[serde(default)]
    pub density_estimate: DensityEstimate,
    #[serde(default)]
    pub search: SearchBackend,

    #[serde(default)]
    pub population: Vec<PopulationGroup>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn force_params(&self) -> ForceParams {
        ForceParams {
            c_rep: self.c_rep,
            c_ali: self.c_ali,
            c_att: self.c_att,
            c_v: self.c_v,
            c_src: self.c_src,
            c_ctr: self.c_ctr,
            s: self.s,
            r_bar: self.r_bar,
            r_under: self.r_under,
            eps_sig: self.eps_sig,
        }
    }

    pub fn set_force_params(&mut self, p: &ForceParams) {
        self.c_rep = p.c_rep;
        self.c_ali = p.c_ali;
        self.c_att = p.c_att;
        self.c_v = p.c_v;
        self.c_src = p.c_src;
        self.c_ctr = p.c_ctr;
        self.s = p.s;
        self.r_bar = p.r_bar;
        self.r_under = p.r_under;
        self.eps_sig = p.eps_sig;
    }

    pub fn source_spec(&self) -> Result<SourceSpec> {
        let positions = self
            .sources
            .iter()
            .enumerate()
            .map(|(k, s)| {
                if s.len() != self.dim {
                    return Err(Error::Config(format!(
                        "source {k} has {} components, expected {}",
                        s.len(),
                        self.dim
                    )));
                }
                Ok(Vector::from_slice(s).expect("dim <= 3"))
            })
            .collect::<Result<_>>()?;
        Ok(SourceSpec { positions })
    }

    pub fn rate_spec(&self) -> Result<RateSpec> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("rates = {:?} requires `{name}`", self.rates)))
        };
        Ok(match self.rates {
            RateFamily::Constant => RateSpec::Constant {
                q_fl: need(self.q_fl, "q_fl")?,
                q_lf: need(self.q_lf, "q_lf")?,
            },
            RateFamily::Density => RateSpec::DensityDependent {
                q_f: need(self.q_f, "q_f")?,
                q_l: need(self.q_l, "q_l")?,
                delta: need(self.delta, "delta")?,
            },
            RateFamily::Target => {
                let t = self
                    .target
                    .as_ref()
                    .ok_or_else(|| Error::Config("rates = target requires `target`".into()))?;
                if t.len() != self.dim {
                    return Err(Error::Config(format!(
                        "target has {} components, expected {}",
                        t.len(),
                        self.dim
                    )));
                }
                RateSpec::TargetOriented {
                    target: Vector::from_slice(t).expect("dim <= 3"),
                    alpha_hi: need(self.alpha_hi, "alpha_hi")?,
                    alpha_lo: need(self.alpha_lo, "alpha_lo")?,
                }
            }
        })
    }

    /// Simulation controls; call on a validated config.
    pub fn sim_params(&self) -> SimParams {
        SimParams {
            rho_star: self.rho_star,
            n_particles: self.n_particles,
            n_sub: self.n_sub.unwrap_or(self.n_particles),
            eps_scale: self.eps_scale.unwrap_or(0.0),
            dt: self.dt.unwrap_or(0.0),
            t_final: self.t_final,
            seed: self.seed,
            mode: self.mode,
        }
    }

    /// Population groups, falling back to the default follower cloud.
    pub fn groups(&self) -> Vec<PopulationGroup> {
        if self.population.is_empty() {
            vec![PopulationGroup::default_followers()]
        } else {
            self.population.clone()
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Checks a parsed config and fills mode-dependent defaults: the subsample
/// size defaults to the whole population, and in mesoscopic mode a missing
/// `dt` is derived as `eps / rho*`.
pub fn validate_config(cfg: ScenarioConfig) -> Result<ScenarioConfig> {
    let mut cfg = cfg;
    if !(1..=3).contains(&cfg.dim) {
        return Err(config_err(format!(
            "dim must be 1, 2 or 3, got {}",
            cfg.dim
        )));
    }
    if cfg.n_particles == 0 {
        return Err(config_err("n_particles must be positive"));
    }
    if !(cfg.rho_star > 0.0 && cfg.rho_star <= 1.0) {
        return Err(config_err(format!(
            "rho_star must lie in (0, 1], got {}",
            cfg.rho_star
        )));
    }
    let n_sub = cfg.n_sub.unwrap_or(cfg.n_particles);
    if n_sub == 0 || n_sub > cfg.n_particles {
        return Err(config_err(format!(
            "n_sub must lie in 1..={}, got {n_sub}",
            cfg.n_particles
        )));
    }
    cfg.n_sub = Some(n_sub);
    if !(cfg.t_final >= 0.0 && cfg.t_final.is_finite()) {
        return Err(config_err("t_final must be finite and non-negative"));
    }
    if cfg.snapshot_every == 0 {
        return Err(config_err("snapshot_every must be positive"));
    }
    cfg.force_params().validate().map_err(Error::Config)?;
    cfg.source_spec()?;

    match cfg.mode {
        Mode::Micro => {
            let dt = cfg
                .dt
                .ok_or_else(|| config_err("micro mode requires `dt`"))?;
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_err(format!("dt must be positive, got {dt}")));
            }
            let m = cfg.sim_params().micro_neighbors();
            if m < 1 || m + 1 > cfg.n_particles {
                return Err(config_err(format!(
                    "round(rho_star * n_particles) = {m} must lie in 1..={}",
                    cfg.n_particles.saturating_sub(1)
                )));
            }
        }
        Mode::Meso => {
            let eps = cfg
                .eps_scale
                .ok_or_else(|| config_err("meso mode requires `eps_scale`"))?;
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(config_err(format!("eps_scale must be positive, got {eps}")));
            }
            let dt = *cfg.dt.get_or_insert(eps / cfg.rho_star);
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_err(format!("dt must be positive, got {dt}")));
            }
            let product = cfg.rho_star * dt;
            let tol = MESO_CONSTRAINT_TOL * eps;
            match cfg.collision {
                CollisionMode::Always if (product - eps).abs() > tol => {
                    return Err(config_err(format!(
                        "meso mode needs rho_star * dt = eps_scale, got {product} vs {eps}"
                    )));
                }
                CollisionMode::Bernoulli if product > eps + tol => {
                    return Err(config_err(format!(
                        "bernoulli collisions need rho_star * dt <= eps_scale, got {product} > {eps}"
                    )));
                }
                _ => {}
            }
            let sp = cfg.sim_params();
            if sp.subsample_k() < 1 {
                return Err(config_err("ceil(rho_star * n_sub) must be at least 1"));
            }
            if cfg.search == SearchBackend::Line && cfg.dim != 1 {
                return Err(config_err("search = \"line\" requires dim = 1"));
            }
        }
    }

    match cfg.rate_spec()? {
        RateSpec::Constant { q_fl, q_lf } => {
            if !(q_fl >= 0.0 && q_lf >= 0.0) {
                return Err(config_err("q_fl and q_lf must be non-negative"));
            }
        }
        RateSpec::DensityDependent { q_f, q_l, delta } => {
            if !(q_f >= 0.0 && q_l >= 0.0) {
                return Err(config_err("q_f and q_l must be non-negative"));
            }
            if !(delta > 0.0) {
                return Err(config_err("delta must be positive"));
            }
        }
        RateSpec::TargetOriented {
            alpha_hi, alpha_lo, ..
        } => {
            let in_range = |a: f64| (-1.0..=1.0).contains(&a);
            if !(in_range(alpha_hi) && in_range(alpha_lo)) {
                return Err(config_err("alpha thresholds must lie in [-1, 1]"));
            }
            if alpha_lo > alpha_hi {
                return Err(config_err("alpha_lo must not exceed alpha_hi"));
            }
        }
    }

    let groups = cfg.groups();
    let total: f64 = groups.iter().map(|g| g.fraction).sum();
    if groups.iter().any(|g| !(g.fraction >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(config_err(format!(
            "population fractions must be non-negative and sum to 1, got {total}"
        )));
    }
    for (k, g) in groups.iter().enumerate() {
        g.position_mean
            .resolve(cfg.dim, &format!("population[{k}].position_mean"))?;
        g.velocity_mean
            .resolve(cfg.dim, &format!("population[{k}].velocity_mean"))?;
        for (what, std) in [
            ("position_std", &g.position_std),
            ("velocity_std", &g.velocity_std),
        ] {
            let v = std.resolve(cfg.dim, &format!("population[{k}].{what}"))?;
            if v.0.iter().any(|c| !(*c >= 0.0)) {
                return Err(config_err(format!(
                    "population[{k}].{what} must be non-negative"
                )));
            }
        }
    }
    Ok(cfg)
}

/// Splits `n` agents over groups by largest remainder, so counts sum to `n`.
fn group_counts(n: usize, fractions: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut missing = n - counts.iter().sum::<usize>().min(n);
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = raw[a] - raw[a].floor();
        let rb = raw[b] - raw[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().cycle().take(missing.min(order.len() * 2)) {
        if missing == 0 {
            break;
        }
        counts[g] += 1;
        missing -= 1;
    }
    counts
}

/// Samples the initial ensemble. Agent `i` draws from its own init stream,
/// and group membership follows contiguous id ranges in group order.
pub fn initial_state(cfg: &ScenarioConfig) -> Result<SwarmState> {
    let groups = cfg.groups();
    let counts = group_counts(
        cfg.n_particles,
        &groups.iter().map(|g| g.fraction).collect::<Vec<_>>(),
    );
    let dim = cfg.dim;
    let mut agents = Vec::with_capacity(cfg.n_particles);
    for (g, &count) in groups.iter().zip(&counts) {
        let pm = g.position_mean.resolve(dim, "position_mean")?;
        let ps = g.position_std.resolve(dim, "position_std")?;
        let vm = g.velocity_mean.resolve(dim, "velocity_mean")?;
        let vs = g.velocity_std.resolve(dim, "velocity_std")?;
        for _ in 0..count {
            let i = agents.len();
            let mut rng = step_rng(cfg.seed, 0, Phase::Init, i as u64);
            let mut x = Vector::ZERO;
            let mut v = Vector::ZERO;
            for a in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                x[a] = pm[a] + ps[a] * z;
            }
            for a in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                v[a] = vm[a] + vs[a] * z;
            }
            agents.push(AgentState::new(x, v, g.label));
        }
    }
    Ok(SwarmState::new(dim, agents))
}
