//! Microscopic model: forward Euler on the N-agent system.
//!
//! Every agent averages repulsion (and, for followers, alignment and
//! attraction) over its `M` nearest neighbors; leaders add self-propulsion,
//! source attraction and centre-of-mass attraction. Updates are simultaneous:
//! all forces read the time-n state, and positions advance with the pre-step
//! velocity.

use crate::config::{validate_config, LabelOrder, ScenarioConfig};
use crate::dynamics::Dynamics;
use crate::error::{Error, NeighborError, Result};
use crate::forces::{leader_pull, partner_force};
use crate::model::{AgentState, Mode, SwarmState};
use crate::par;
use crate::snapshot::SnapshotSink;
use crate::topology::{KdTree, NeighborList, NeighborSearch};
use crate::transitions::{draw_labels, DensityReference, RateEvaluator};
use crate::vector::Vector;

fn neighbor_lists(state: &SwarmState, m: usize) -> Result<Vec<NeighborList>> {
    let n = state.len();
    if m + 1 > n.max(1) {
        return Err(NeighborError::KOutOfRange {
            k: m,
            available: n.saturating_sub(1),
        }
        .into());
    }
    if m == 0 {
        return Ok(vec![NeighborList::default(); n]);
    }
    let tree = KdTree::build(&state.positions(), state.dim)?;
    Ok(par::try_map_indexed(n, |i| {
        tree.knn(state.agents[i].position, m, Some(i))
    })?)
}

fn drawn_labels(
    state: &SwarmState,
    neighbors: &[NeighborList],
    m: usize,
    dynamics: &Dynamics,
    dt: f64,
) -> Vec<crate::model::Label> {
    let eval = RateEvaluator {
        spec: &dynamics.rates,
        state,
        params: &dynamics.params,
        density: DensityReference::All,
    };
    let rates = par::map_indexed(state.len(), |i| eval.rates(i, Some(&neighbors[i]), m));
    draw_labels(state, &rates, dt, dynamics.seed)
}

/// Force on agent `i` per unit time, self-propulsion excluded.
fn acceleration(
    state: &SwarmState,
    i: usize,
    neighbors: &NeighborList,
    dynamics: &Dynamics,
    x_c: Vector,
) -> Vector {
    let a = &state.agents[i];
    let mut sum = Vector::ZERO;
    for nb in neighbors.iter() {
        sum += partner_force(a, &state.agents[nb.id], &dynamics.params);
    }
    let avg = if neighbors.is_empty() {
        Vector::ZERO
    } else {
        (1.0 / neighbors.len() as f64) * sum
    };
    avg + leader_pull(a, &dynamics.params, &dynamics.sources, x_c)
}

/// One forward-Euler step with `m` nearest neighbors per agent.
///
/// `m = 0` drops the neighbor sum entirely (a lone agent). Labels switch
/// after the kinematic update unless `dynamics.label_order` says otherwise;
/// rates always read the time-n state.
pub fn micro_step(
    state: &SwarmState,
    dynamics: &Dynamics,
    m: usize,
    dt: f64,
) -> Result<SwarmState> {
    let neighbors = neighbor_lists(state, m)?;
    let labels = drawn_labels(state, &neighbors, m, dynamics, dt);

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

    let x_c = source.center_of_mass();
    let agents = par::map_indexed(source.len(), |i| {
        let a = &source.agents[i];
        let acc = acceleration(source, i, &neighbors[i], dynamics, x_c);
        let v = dynamics.advance_velocity(a, acc, dt);
        AgentState::new(a.position + dt * a.velocity, v, labels[i])
    });
    let next = SwarmState {
        dim: state.dim,
        agents,
        time: state.time + dt,
        step: state.step + 1,
    };
    if let Some(agent) = next.first_non_finite() {
        return Err(Error::NonFinite {
            step: next.step,
            agent,
        });
    }
    Ok(next)
}

/// Advances `state` for `n_steps`, emitting at step 0, every `every` steps
/// and at the final step. Times are `step * dt`.
pub(crate) fn drive<F>(
    mut state: SwarmState,
    n_steps: u64,
    every: u64,
    dt: f64,
    sink: &mut dyn SnapshotSink,
    mut step: F,
) -> Result<SwarmState>
where
    F: FnMut(&SwarmState) -> Result<SwarmState>,
{
    sink.emit(&state)?;
    let start = state.step;
    for k in 1..=n_steps {
        state = step(&state)?;
        state.time = state.step as f64 * dt;
        if k % every.max(1) == 0 || k == n_steps {
            sink.emit(&state)?;
        }
        debug_assert_eq!(state.step, start + k);
    }
    Ok(state)
}

/// Runs a microscopic scenario from `initial`.
pub fn run_micro_from(
    cfg: &ScenarioConfig,
    initial: SwarmState,
    sink: &mut dyn SnapshotSink,
) -> Result<SwarmState> {
    if cfg.mode != Mode::Micro {
        return Err(Error::Config("run_micro needs mode = \"micro\"".into()));
    }
    let dynamics = Dynamics::from_config(cfg)?;
    let sim = cfg.sim_params();
    let m = sim.micro_neighbors();
    drive(
        initial,
        sim.n_steps(),
        cfg.snapshot_every,
        sim.dt,
        sink,
        |s| micro_step(s, &dynamics, m, sim.dt),
    )
}

/// Validates `cfg`, samples its initial state and runs it to `t_final`.
pub fn run_micro(cfg: &ScenarioConfig, sink: &mut dyn SnapshotSink) -> Result<SwarmState> {
    let cfg = validate_config(cfg.clone())?;
    let initial = crate::config::initial_state(&cfg)?;
    run_micro_from(&cfg, initial, sink)
}
