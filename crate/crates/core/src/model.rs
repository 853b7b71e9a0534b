//! Agent and swarm state plus the model constants shared by both simulators.

use serde::{Deserialize, Serialize};

use crate::vector::Vector;

/// Leadership status of an agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Follower,
    Leader,
}

impl Label {
    /// Numeric label: 0 for followers, 1 for leaders.
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Follower => 0,
            Label::Leader => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Follower),
            1 => Some(Label::Leader),
            _ => None,
        }
    }

    pub fn is_leader(self) -> bool {
        self == Label::Leader
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Follower => Label::Leader,
            Label::Leader => Label::Follower,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub position: Vector,
    pub velocity: Vector,
    pub label: Label,
}

impl AgentState {
    pub fn new(position: Vector, velocity: Vector, label: Label) -> Self {
        AgentState {
            position,
            velocity,
            label,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite()
    }
}

/// The full ensemble at one time level. The agent index is the agent id.
#[derive(Clone, Debug, PartialEq)]
pub struct SwarmState {
    pub dim: usize,
    pub agents: Vec<AgentState>,
    pub time: f64,
    pub step: u64,
}

impl SwarmState {
    pub fn new(dim: usize, agents: Vec<AgentState>) -> Self {
        SwarmState {
            dim,
            agents,
            time: 0.0,
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn positions(&self) -> Vec<Vector> {
        self.agents.iter().map(|a| a.position).collect()
    }

    /// `(followers, leaders)` counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let leaders = self.agents.iter().filter(|a| a.label.is_leader()).count();
        (self.agents.len() - leaders, leaders)
    }

    /// `(follower fraction, leader fraction)`; the two always sum to one.
    pub fn label_fractions(&self) -> (f64, f64) {
        let (_, l) = self.label_counts();
        let leader = l as f64 / self.agents.len() as f64;
        (1.0 - leader, leader)
    }

    /// Centre of mass of the whole swarm, both labels included.
    pub fn center_of_mass(&self) -> Vector {
        let n = self.agents.len() as f64;
        let sum: Vector = self.agents.iter().map(|a| a.position).sum();
        (1.0 / n) * sum
    }

    pub fn mean_velocity(&self) -> Vector {
        let n = self.agents.len() as f64;
        let sum: Vector = self.agents.iter().map(|a| a.velocity).sum();
        (1.0 / n) * sum
    }

    /// Index of the first agent carrying a NaN or infinite component.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.agents.iter().position(|a| !a.is_finite())
    }
}

/// Coefficients of the interaction kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceParams {
    pub c_rep: f64,
    pub c_ali: f64,
    pub c_att: f64,
    pub c_v: f64,
    pub c_src: f64,
    pub c_ctr: f64,
    /// Squared characteristic speed of the self-propulsion term.
    pub s: f64,
    /// Perception radius of the sources.
    pub r_bar: f64,
    /// Activation radius of the centre-of-mass attraction.
    pub r_under: f64,
    /// Width of the sigmoid perception function.
    pub eps_sig: f64,
}

impl ForceParams {
    /// The two-dimensional parameter row used by the reference scenarios,
    /// with sources and centre attraction switched off.
    pub fn planar_default() -> Self {
        ForceParams {
            c_rep: 100.0,
            c_ali: 12.0,
            c_att: 0.7,
            c_v: 5.0,
            c_src: 0.0,
            c_ctr: 0.0,
            s: 10.0,
            r_bar: 200.0,
            r_under: 1.0,
            eps_sig: 200.0,
        }
    }

    /// The three-dimensional parameter row of the reference scenarios.
    pub fn spatial_default() -> Self {
        ForceParams {
            r_bar: 350.0,
            r_under: 20.0,
            eps_sig: 150.0,
            ..Self::planar_default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let coeffs = [
            ("c_rep", self.c_rep),
            ("c_ali", self.c_ali),
            ("c_att", self.c_att),
            ("c_v", self.c_v),
            ("c_src", self.c_src),
            ("c_ctr", self.c_ctr),
            ("r_bar", self.r_bar),
            ("r_under", self.r_under),
        ];
        for (name, v) in coeffs {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!(
                    "{name} must be a finite non-negative number, got {v}"
                ));
            }
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(format!("s must be positive, got {}", self.s));
        }
        if !(self.eps_sig.is_finite() && self.eps_sig > 0.0) {
            return Err(format!("eps_sig must be positive, got {}", self.eps_sig));
        }
        Ok(())
    }
}

/// Fixed attraction targets (nests, food).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SourceSpec {
    pub positions: Vec<Vector>,
}

impl SourceSpec {
    pub fn none() -> Self {
        SourceSpec::default()
    }
}

/// Transition-rate family driving label switches.
#[derive(Clone, Debug, PartialEq)]
pub enum RateSpec {
    Constant {
        q_fl: f64,
        q_lf: f64,
    },
    DensityDependent {
        q_f: f64,
        q_l: f64,
        delta: f64,
    },
    TargetOriented {
        target: Vector,
        alpha_hi: f64,
        alpha_lo: f64,
    },
}

impl RateSpec {
    /// No switching at all.
    pub fn frozen() -> Self {
        RateSpec::Constant {
            q_fl: 0.0,
            q_lf: 0.0,
        }
    }
}

/// Time integration of the leaders' self-propulsion term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propulsion {
    /// Part of the explicit velocity update like every other term.
    #[default]
    Explicit,
    /// Exact flow of the speed relaxation over the step, applied after the
    /// explicit update of the remaining terms. Stable for any speed.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Micro,
    Meso,
}

/// Simulation controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    /// Topological mass in (0, 1].
    pub rho_star: f64,
    pub n_particles: usize,
    /// Subsample size used by the mesoscopic neighbor search.
    pub n_sub: usize,
    /// Grazing parameter (interaction strength of one binary encounter).
    pub eps_scale: f64,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl SimParams {
    /// Neighbor count of the microscopic model, `round(rho* N)`.
    pub fn micro_neighbors(&self) -> usize {
        (self.rho_star * self.n_particles as f64).round() as usize
    }

    /// Neighbor count inside the subsample, `ceil(rho* N_c)`.
    pub fn subsample_k(&self) -> usize {
        subsample_k(self.rho_star, self.n_sub)
    }

    /// Number of steps needed to reach `t_final`.
    pub fn n_steps(&self) -> u64 {
        if self.t_final <= 0.0 || self.dt <= 0.0 {
            return 0;
        }
        (self.t_final / self.dt).round() as u64
    }
}

/// `ceil(rho* n)`, computed with a small guard so that exact products such as
/// `0.35 * 100` do not round up to the next integer.
pub fn subsample_k(rho_star: f64, n: usize) -> usize {
    let raw = rho_star * n as f64;
    let nearest = raw.round();
    if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) {
        nearest as usize
    } else {
        raw.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_partition() {
        let a = |l| AgentState::new(Vector::ZERO, Vector::ZERO, l);
        let s = SwarmState::new(
            2,
            vec![a(Label::Leader), a(Label::Follower), a(Label::Follower)],
        );
        let (f, l) = s.label_fractions();
        assert_eq!(f + l, 1.0);
        assert_eq!(s.label_counts(), (2, 1));
    }

    #[test]
    fn subsample_k_rounding() {
        assert_eq!(subsample_k(0.35, 100), 35);
        assert_eq!(subsample_k(0.04, 100), 4);
        assert_eq!(subsample_k(0.01, 150), 2);
        assert_eq!(subsample_k(1.0, 7), 7);
        assert_eq!(subsample_k(0.01, 10_000), 100);
    }

    #[test]
    fn table_rows_validate() {
        assert!(ForceParams::planar_default().validate().is_ok());
        assert!(ForceParams::spatial_default().validate().is_ok());
        let bad = ForceParams {
            eps_sig: 0.0,
            ..ForceParams::planar_default()
        };
        assert!(bad.validate().is_err());
    }
}
