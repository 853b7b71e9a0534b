//! Browser bindings: a steppable 2D microscopic swarm, a neighbor-search cost
//! comparison and a label-fraction relaxation curve.

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

use topoflock::config::initial_state;
use topoflock::dynamics::Dynamics;
use topoflock::harness::bench::{exhaustive_sweep, tree_sweep, uniform_points};
use topoflock::harness::cluster_count;
use topoflock::micro::micro_step;
use topoflock::transitions::{constant_rates, stationary_fractions, switch_labels};
use topoflock::{validate_config, AgentState, Label, ScenarioConfig, SwarmState, Vector};

const PLANAR: &str = include_str!("../../core/scenarios/planar_no_food_micro.toml");

/// Errors reach JavaScript as thrown strings.
fn js_err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Two-dimensional microscopic swarm with constant switching rates.
#[wasm_bindgen]
pub struct Simulation {
    state: SwarmState,
    dynamics: Dynamics,
    m: usize,
    dt: f64,
}

#[wasm_bindgen]
impl Simulation {
    /// Default planar parameters with `n` agents, topological mass `rho_star`
    /// and rates `q_fl`, `q_lf` (zero disables switching).
    #[wasm_bindgen(constructor)]
    pub fn new(
        n: usize,
        rho_star: f64,
        q_fl: f64,
        q_lf: f64,
        seed: u64,
    ) -> Result<Simulation, String> {
        let mut cfg = ScenarioConfig::from_toml(PLANAR).map_err(js_err)?;
        cfg.n_particles = n;
        cfg.rho_star = rho_star;
        cfg.q_fl = Some(q_fl);
        cfg.q_lf = Some(q_lf);
        cfg.seed = seed;
        let cfg = validate_config(cfg).map_err(js_err)?;
        let sim = cfg.sim_params();
        Ok(Simulation {
            state: initial_state(&cfg).map_err(js_err)?,
            dynamics: Dynamics::from_config(&cfg).map_err(js_err)?,
            m: sim.micro_neighbors(),
            dt: sim.dt,
        })
    }

    /// Advances `steps` forward-Euler steps.
    pub fn step(&mut self, steps: u32) -> Result<(), String> {
        for _ in 0..steps {
            self.state =
                micro_step(&self.state, &self.dynamics, self.m, self.dt).map_err(js_err)?;
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.state.step as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    /// Interleaved `x0, y0, x1, y1, ...`.
    pub fn positions(&self) -> Vec<f64> {
        self.state
            .agents
            .iter()
            .flat_map(|a| [a.position[0], a.position[1]])
            .collect()
    }

    /// Interleaved `vx0, vy0, ...`.
    pub fn velocities(&self) -> Vec<f64> {
        self.state
            .agents
            .iter()
            .flat_map(|a| [a.velocity[0], a.velocity[1]])
            .collect()
    }

    /// 1 for leaders, 0 for followers.
    pub fn labels(&self) -> Vec<u8> {
        self.state
            .agents
            .iter()
            .map(|a| u8::from(a.label.is_leader()))
            .collect()
    }

    pub fn leader_fraction(&self) -> f64 {
        self.state.label_fractions().1
    }

    pub fn clusters(&self, link_radius: f64) -> usize {
        cluster_count(&self.state, link_radius)
    }
}

/// Distance evaluations of one k-nearest sweep over `n` uniform points:
/// `[exhaustive, tree, k, n_sub]` for a tree on a `p`% subsample.
#[wasm_bindgen]
pub fn knn_cost(n: usize, rho_star: f64, p: f64, seed: u64) -> Result<Vec<f64>, String> {
    if n < 2 || !(rho_star > 0.0 && rho_star <= 1.0) || !(p > 0.0 && p <= 100.0) {
        return Err("need n >= 2, rho* in (0, 1] and p in (0, 100]".into());
    }
    let points = uniform_points(n, 2, seed);
    let ex = exhaustive_sweep(&points, 2, rho_star).map_err(js_err)?;
    let tree = tree_sweep(&points, 2, rho_star, p, seed).map_err(js_err)?;
    Ok(vec![
        ex.distance_evaluations as f64,
        tree.distance_evaluations as f64,
        tree.k as f64,
        tree.n_sub as f64,
    ])
}

/// Leader fraction of `n` agents switching at constant rates, all starting as
/// followers. Returns `steps + 1` rows of `[time, simulated, rate_equation]`,
/// flattened, where the last column solves the mean-field rate equation.
#[wasm_bindgen]
pub fn label_relaxation(
    n: usize,
    q_fl: f64,
    q_lf: f64,
    dt: f64,
    steps: u32,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let (leader_inf, _) = stationary_fractions(q_fl, q_lf).map_err(js_err)?;
    if n == 0 || !(dt > 0.0) || dt * q_fl.max(q_lf) > 1.0 {
        return Err("need n >= 1, dt > 0 and dt * rate <= 1".into());
    }
    let rates = constant_rates(q_fl, q_lf);
    let mut state = SwarmState::new(
        1,
        vec![AgentState::new(Vector::ZERO, Vector::ZERO, Label::Follower); n],
    );
    let mut out = Vec::with_capacity(3 * (steps as usize + 1));
    for k in 0..=steps {
        let t = k as f64 * dt;
        let mean_field = leader_inf * (1.0 - (-(q_fl + q_lf) * t).exp());
        out.extend([t, state.label_fractions().1, mean_field]);
        state = switch_labels(&state, |_| rates, dt, seed);
        state.step += 1;
    }
    Ok(out)
}
