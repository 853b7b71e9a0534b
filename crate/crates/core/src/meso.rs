//! Mesoscopic model: the asymptotic Nanbu particle method.
//!
//! One step:
//!
//! 1. draw a uniform subsample of `N_c` agents (one per step) and index it;
//! 2. every agent picks one partner uniformly among its `ceil(rho* N_c)`
//!    nearest subsample members and applies `v' = v + eps * F(i, j)`;
//! 3. positions advance with the pre-step velocity over `dt = eps / rho*`;
//! 4. labels switch.
//!
//! All reads come from the time-n state, and every random draw is addressed
//! by `(seed, step, phase, agent)`.

use rand::seq::index;
use rand::Rng;

use crate::config::{validate_config, CollisionMode, DensityEstimate, LabelOrder, ScenarioConfig};
use crate::dynamics::Dynamics;
use crate::error::{Error, NeighborError, Result};
use crate::forces::{leader_pull, partner_force};
use crate::micro::drive;
use crate::model::{subsample_k, AgentState, Mode, SimParams, SwarmState};
use crate::par;
use crate::rng::{step_rng, Phase};
use crate::snapshot::SnapshotSink;
use crate::topology::{Exhaustive, KdTree, LineIndex, NeighborSearch, SearchBackend, Subsample};
use crate::transitions::{draw_labels, DensityReference, RateEvaluator};

/// Switches of the mesoscopic step that are not model constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MesoOptions {
    pub collision: CollisionMode,
    pub density: DensityEstimate,
    pub search: SearchBackend,
}

impl MesoOptions {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        MesoOptions {
            collision: cfg.collision,
            density: cfg.density_estimate,
            search: cfg.search,
        }
    }
}

/// The step's subsample: `n_sub` distinct agent ids, drawn uniformly.
pub fn draw_subsample(n: usize, n_sub: usize, seed: u64, step: u64) -> Vec<usize> {
    if n_sub >= n {
        return (0..n).collect();
    }
    let mut rng = step_rng(seed, step, Phase::Subsample, 0);
    let mut ids = index::sample(&mut rng, n, n_sub).into_vec();
    ids.sort_unstable();
    ids
}

/// Number of partners available to `agent` in a subsample of `len` members.
fn ball_size(k: usize, len: usize, in_subsample: bool) -> usize {
    if in_subsample {
        k.min(len - 1)
    } else {
        k.min(len)
    }
}

/// One Nanbu step. `sim.dt` is the transport step; the interaction strength
/// is `sim.eps_scale`.
pub fn nanbu_step(
    state: &SwarmState,
    dynamics: &Dynamics,
    sim: &SimParams,
    opts: &MesoOptions,
) -> Result<SwarmState> {
    let n = state.len();
    if n == 0 {
        return Err(NeighborError::EmptyIndex.into());
    }
    let n_sub = sim.n_sub.min(n);
    let ids = draw_subsample(n, n_sub, dynamics.seed, state.step);
    match opts.search {
        SearchBackend::KdTree => step_with(
            state,
            dynamics,
            sim,
            opts,
            Subsample::new(state, ids, KdTree::build)?,
        ),
        SearchBackend::Line => step_with(
            state,
            dynamics,
            sim,
            opts,
            Subsample::new(state, ids, LineIndex::build)?,
        ),
        SearchBackend::Exhaustive => step_with(
            state,
            dynamics,
            sim,
            opts,
            Subsample::new(state, ids, Exhaustive::build)?,
        ),
    }
}

fn step_with<S: NeighborSearch>(
    state: &SwarmState,
    dynamics: &Dynamics,
    sim: &SimParams,
    opts: &MesoOptions,
    sub: Subsample<S>,
) -> Result<SwarmState> {
    let n = state.len();
    let k = subsample_k(sim.rho_star, sub.len());
    if k == 0 || k > sub.len() {
        return Err(NeighborError::KOutOfRange {
            k,
            available: sub.len(),
        }
        .into());
    }
    let in_sub = |i: usize| sub.ids().binary_search(&i).is_ok();

    let eval = RateEvaluator {
        spec: &dynamics.rates,
        state,
        params: &dynamics.params,
        density: match opts.density {
            DensityEstimate::Subsample => DensityReference::Subset(sub.ids()),
            DensityEstimate::Exact => DensityReference::All,
        },
    };
    let rates = par::try_map_indexed(n, |i| -> Result<_, NeighborError> {
        let kb = ball_size(k, sub.len(), in_sub(i));
        if eval.needs_neighbors() && kb > 0 {
            let ball = sub.ball(i, state.agents[i].position, kb)?;
            Ok(eval.rates(i, Some(&ball), sub.len()))
        } else {
            Ok(eval.rates(i, None, sub.len()))
        }
    })?;
    let labels = draw_labels(state, &rates, sim.dt, dynamics.seed);

    let relabelled;
    let source = match dynamics.label_order {
        LabelOrder::After => state,
        LabelOrder::Before => {
            let mut s = state.clone();
            for (a, &l) in s.agents.iter_mut().zip(&labels) {
                a.label = l;
            }
            relabelled = s;
            &relabelled
        }
    };

    let eps = sim.eps_scale;
    let p_collide = match opts.collision {
        CollisionMode::Always => 1.0,
        CollisionMode::Bernoulli => (sim.rho_star * sim.dt / eps).min(1.0),
    };
    let x_c = source.center_of_mass();
    let step = state.step;
    let seed = dynamics.seed;
    let agents = par::try_map_indexed(n, |i| -> Result<AgentState, NeighborError> {
        let a = &source.agents[i];
        let mut v = a.velocity;
        let kb = ball_size(k, sub.len(), in_sub(i));
        if kb > 0 {
            let mut rng = step_rng(seed, step, Phase::Interaction, i as u64);
            let collide = p_collide >= 1.0 || rng.random::<f64>() < p_collide;
            if collide {
                let j = sub.sample_partner(i, a.position, kb, &mut rng)?;
                let p = &dynamics.params;
                let f = partner_force(a, &source.agents[j], p)
                    + leader_pull(a, p, &dynamics.sources, x_c);
                v = dynamics.advance_velocity(a, f, eps);
            }
        }
        Ok(AgentState::new(
            a.position + sim.dt * a.velocity,
            v,
            labels[i],
        ))
    })?;

    let next = SwarmState {
        dim: state.dim,
        agents,
        time: state.time + sim.dt,
        step: step + 1,
    };
    if let Some(agent) = next.first_non_finite() {
        return Err(Error::NonFinite {
            step: next.step,
            agent,
        });
    }
    Ok(next)
}

/// Runs a mesoscopic scenario from `initial`.
pub fn run_meso_from(
    cfg: &ScenarioConfig,
    initial: SwarmState,
    sink: &mut dyn SnapshotSink,
) -> Result<SwarmState> {
    if cfg.mode != Mode::Meso {
        return Err(Error::Config("run_meso needs mode = \"meso\"".into()));
    }
    let dynamics = Dynamics::from_config(cfg)?;
    let sim = cfg.sim_params();
    let opts = MesoOptions::from_config(cfg);
    drive(
        initial,
        sim.n_steps(),
        cfg.snapshot_every,
        sim.dt,
        sink,
        |s| nanbu_step(s, &dynamics, &sim, &opts),
    )
}

/// Validates `cfg`, samples its initial state and runs it to `t_final`.
pub fn run_meso(cfg: &ScenarioConfig, sink: &mut dyn SnapshotSink) -> Result<SwarmState> {
    let cfg = validate_config(cfg.clone())?;
    let initial = crate::config::initial_state(&cfg)?;
    run_meso_from(&cfg, initial, sink)
}

/// Runs either simulator according to `cfg.mode`.
pub fn run(cfg: &ScenarioConfig, sink: &mut dyn SnapshotSink) -> Result<SwarmState> {
    match cfg.mode {
        Mode::Micro => crate::micro::run_micro(cfg, sink),
        Mode::Meso => run_meso(cfg, sink),
    }
}
