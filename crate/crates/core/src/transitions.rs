//! Stochastic label switching.
//!
//! Rates are evaluated on the pre-step state and converted to per-step
//! switching probabilities `dt * rate`. Each agent draws from its own
//! [`Phase::Labels`] stream, so the outcome is independent of processing
//! order and worker count.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::Rng;

use crate::error::{Error, Result};
use crate::forces::{alignment, attraction, self_propulsion};
use crate::model::{ForceParams, Label, RateSpec, SwarmState};
use crate::par;
use crate::rng::{step_rng, Phase};
use crate::topology::NeighborList;
use crate::vector::Vector;

/// Transition rates of one agent, per unit time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePair {
    /// Follower to leader.
    pub pi_fl: f64,
    /// Leader to follower.
    pub pi_lf: f64,
}

impl RatePair {
    pub const ZERO: RatePair = RatePair {
        pi_fl: 0.0,
        pi_lf: 0.0,
    };

    /// Rate of leaving `label`.
    pub fn leaving(&self, label: Label) -> f64 {
        match label {
            Label::Follower => self.pi_fl,
            Label::Leader => self.pi_lf,
        }
    }
}

pub fn constant_rates(q_fl: f64, q_lf: f64) -> RatePair {
    RatePair {
        pi_fl: q_fl,
        pi_lf: q_lf,
    }
}

/// Normalised Gaussian concentration of agents labelled `which` around `x`:
/// `(1 / N_which) sum exp(-|x - x_j|^2 / delta^2)`, zero when no agent carries
/// the label. `among` restricts the sum to a subset of agent ids.
pub fn density_concentration(
    state: &SwarmState,
    among: Option<&[usize]>,
    x: Vector,
    which: Label,
    delta: f64,
) -> f64 {
    let inv_d2 = 1.0 / (delta * delta);
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut visit = |j: usize| {
        let a = &state.agents[j];
        if a.label == which {
            count += 1;
            sum += (-x.dist_sq(a.position) * inv_d2).exp();
        }
    };
    match among {
        Some(ids) => ids.iter().copied().for_each(&mut visit),
        None => (0..state.len()).for_each(&mut visit),
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).min(1.0)
    }
}

/// Density-dependent rates from the follower and leader concentrations.
pub fn density_rates(d_follower: f64, d_leader: f64, q_f: f64, q_l: f64) -> RatePair {
    RatePair {
        pi_fl: q_l * (1.0 - d_leader),
        pi_lf: q_f * (1.0 - d_follower),
    }
}

/// Cosine of the angle between the target direction and the directional
/// functional `S(v_i) - X_c - V_c`, where `X_c` and `V_c` average attraction and
/// alignment over the neighbors with empirical weight `1 / n_total`.
/// Degenerate directions give zero.
pub fn target_alpha(
    state: &SwarmState,
    i: usize,
    neighbors: &NeighborList,
    params: &ForceParams,
    target: Vector,
    n_total: usize,
) -> f64 {
    let me = &state.agents[i];
    let w = 1.0 / n_total as f64;
    let mut x_c = Vector::ZERO;
    let mut v_c = Vector::ZERO;
    for n in neighbors.iter() {
        let other = &state.agents[n.id];
        x_c += attraction(me.position, other.position, params.c_att);
        v_c += alignment(me.velocity, other.velocity, params.c_ali);
    }
    let g = self_propulsion(me.velocity, params.c_v, params.s) - w * x_c - w * v_c;
    let to_target = target - me.position;
    let (gn, tn) = (g.norm(), to_target.norm());
    if gn < 1e-12 || tn < 1e-12 {
        return 0.0;
    }
    (g.dot(to_target) / (gn * tn)).clamp(-1.0, 1.0)
}

/// Threshold rates: become a leader when `alpha >= alpha_hi`, fall back to
/// follower when `alpha < alpha_lo`. Between the two thresholds nothing fires.
pub fn target_rates(alpha: f64, alpha_hi: f64, alpha_lo: f64) -> RatePair {
    RatePair {
        pi_fl: if alpha >= alpha_hi { 1.0 } else { 0.0 },
        pi_lf: if alpha < alpha_lo { 1.0 } else { 0.0 },
    }
}

/// Long-run `(leader, follower)` fractions under constant rates.
pub fn stationary_fractions(q_fl: f64, q_lf: f64) -> Result<(f64, f64)> {
    let total = q_fl + q_lf;
    if !(total > 0.0) || q_fl < 0.0 || q_lf < 0.0 {
        return Err(Error::Invalid(format!(
            "stationary fractions need non-negative rates with positive sum, got ({q_fl}, {q_lf})"
        )));
    }
    Ok((q_fl / total, q_lf / total))
}

/// Where density concentrations are measured.
#[derive(Clone, Copy, Debug)]
pub enum DensityReference<'a> {
    /// The full ensemble.
    All,
    /// A subset of agent ids, typically the step's neighbor subsample.
    Subset(&'a [usize]),
}

/// Rate evaluation for one step against a frozen pre-step state.
pub struct RateEvaluator<'a> {
    pub spec: &'a RateSpec,
    pub state: &'a SwarmState,
    pub params: &'a ForceParams,
    pub density: DensityReference<'a>,
}

impl RateEvaluator<'_> {
    /// Whether [`RateEvaluator::rates`] needs the agent's neighbor list.
    pub fn needs_neighbors(&self) -> bool {
        matches!(self.spec, RateSpec::TargetOriented { .. })
    }

    /// Rates of agent `i`. `neighbors` and `n_total` feed the target-oriented
    /// family and are ignored otherwise.
    pub fn rates(&self, i: usize, neighbors: Option<&NeighborList>, n_total: usize) -> RatePair {
        let x = self.state.agents[i].position;
        match *self.spec {
            RateSpec::Constant { q_fl, q_lf } => constant_rates(q_fl, q_lf),
            RateSpec::DensityDependent { q_f, q_l, delta } => {
                let among = match self.density {
                    DensityReference::All => None,
                    DensityReference::Subset(ids) => Some(ids),
                };
                let d_f = density_concentration(self.state, among, x, Label::Follower, delta);
                let d_l = density_concentration(self.state, among, x, Label::Leader, delta);
                density_rates(d_f, d_l, q_f, q_l)
            }
            RateSpec::TargetOriented {
                target,
                alpha_hi,
                alpha_lo,
            } => {
                let empty = NeighborList::default();
                let nb = neighbors.unwrap_or(&empty);
                let alpha = target_alpha(self.state, i, nb, self.params, target, n_total.max(1));
                target_rates(alpha, alpha_hi, alpha_lo)
            }
        }
    }
}

static CLAMP_WARNED: AtomicBool = AtomicBool::new(false);

/// Draws the post-step labels. `rates[i]` must be evaluated on `state`.
/// Agent `i` uses stream `i` of the labels phase of step `state.step`.
pub fn draw_labels(state: &SwarmState, rates: &[RatePair], dt: f64, seed: u64) -> Vec<Label> {
    let step = state.step;
    let clamped = AtomicBool::new(false);
    let labels = par::map_indexed(state.len(), |i| {
        let label = state.agents[i].label;
        let mut p = dt * rates[i].leaving(label);
        if p <= 0.0 {
            return label;
        }
        if p > 1.0 {
            clamped.store(true, Ordering::Relaxed);
            p = 1.0;
        }
        let mut rng = step_rng(seed, step, Phase::Labels, i as u64);
        if rng.random::<f64>() < p {
            label.flipped()
        } else {
            label
        }
    });
    if clamped.load(Ordering::Relaxed) && !CLAMP_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("dt * rate exceeded 1 at step {step}; switching probability clamped to 1");
    }
    labels
}

/// Applies one round of label switching to `state` and returns the result.
/// Positions and velocities are untouched.
pub fn switch_labels<F>(state: &SwarmState, rates_for_agent: F, dt: f64, seed: u64) -> SwarmState
where
    F: Fn(usize) -> RatePair + Sync + Send,
{
    let rates = par::map_indexed(state.len(), rates_for_agent);
    let labels = draw_labels(state, &rates, dt, seed);
    let mut next = state.clone();
    for (a, l) in next.agents.iter_mut().zip(labels) {
        a.label = l;
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AgentState;
    use crate::topology::Neighbor;

    fn v2(x: f64, y: f64) -> Vector {
        Vector([x, y, 0.0])
    }

    fn swarm(agents: &[(Vector, Vector, Label)]) -> SwarmState {
        SwarmState::new(
            2,
            agents
                .iter()
                .map(|&(x, v, l)| AgentState::new(x, v, l))
                .collect(),
        )
    }

    #[test]
    fn constant_rates_ignore_state() {
        let r = constant_rates(2e-4, 4e-3);
        assert_eq!(
            r,
            RatePair {
                pi_fl: 2e-4,
                pi_lf: 4e-3
            }
        );
        let spec = RateSpec::Constant {
            q_fl: 2e-4,
            q_lf: 4e-3,
        };
        let p = ForceParams::planar_default();
        let a = swarm(&[(v2(0.0, 0.0), v2(1.0, 0.0), Label::Follower)]);
        let b = swarm(&[(v2(9.0, 3.0), v2(-4.0, 2.0), Label::Leader)]);
        for s in [&a, &b] {
            let ev = RateEvaluator {
                spec: &spec,
                state: s,
                params: &p,
                density: DensityReference::All,
            };
            assert_eq!(ev.rates(0, None, 1), r);
        }
    }

    #[test]
    fn concentration_values() {
        let delta = 10.0;
        let s = swarm(&[
            (v2(0.0, 0.0), Vector::ZERO, Label::Follower),
            (v2(delta, 0.0), Vector::ZERO, Label::Follower),
            (v2(1e6, 0.0), Vector::ZERO, Label::Leader),
        ]);
        let d = density_concentration(&s, None, v2(0.0, 0.0), Label::Follower, delta);
        assert!((d - (1.0 + (-1.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!((d - 0.6839).abs() < 1e-4);
        let far = density_concentration(&s, None, v2(0.0, 0.0), Label::Leader, delta);
        assert!(far < 1e-300);
        let none = density_concentration(&s, Some(&[0, 1]), v2(0.0, 0.0), Label::Leader, delta);
        assert_eq!(none, 0.0);
        let on = density_concentration(&s, None, v2(1e6, 0.0), Label::Leader, delta);
        assert_eq!(on, 1.0);
    }

    #[test]
    fn density_rate_values() {
        let r = density_rates(0.25, 0.5, 3e-3, 4e-3);
        assert!((r.pi_fl - 2e-3).abs() < 1e-18);
        assert!((r.pi_lf - 2.25e-3).abs() < 1e-18);
        assert_eq!(density_rates(1.0, 0.3, 3e-3, 4e-3).pi_lf, 0.0);
        assert_eq!(density_rates(0.3, 0.0, 3e-3, 4e-3).pi_fl, 4e-3);
    }

    #[test]
    fn alpha_collinear_opposite_orthogonal() {
        let p = ForceParams::planar_default();
        let none = NeighborList::default();
        let target = v2(100.0, 0.0);
        let toward = swarm(&[(v2(0.0, 0.0), v2(1.0, 0.0), Label::Follower)]);
        assert!((target_alpha(&toward, 0, &none, &p, target, 1) - 1.0).abs() < 1e-15);
        let away = swarm(&[(v2(0.0, 0.0), v2(-1.0, 0.0), Label::Follower)]);
        assert!((target_alpha(&away, 0, &none, &p, target, 1) + 1.0).abs() < 1e-15);
        let side = swarm(&[(v2(0.0, 0.0), v2(0.0, 1.0), Label::Follower)]);
        assert_eq!(target_alpha(&side, 0, &none, &p, target, 1), 0.0);
        let at = swarm(&[(target, v2(1.0, 0.0), Label::Follower)]);
        assert_eq!(target_alpha(&at, 0, &none, &p, target, 1), 0.0);
    }

    #[test]
    fn alpha_includes_neighbor_terms() {
        let p = ForceParams {
            c_v: 0.0,
            ..ForceParams::planar_default()
        };
        // Neighbor straight ahead: X_c points at it, so G = -X_c points away.
        let s = swarm(&[
            (v2(0.0, 0.0), Vector::ZERO, Label::Follower),
            (v2(5.0, 0.0), Vector::ZERO, Label::Follower),
        ]);
        let nb = NeighborList(vec![Neighbor {
            id: 1,
            dist_sq: 25.0,
        }]);
        let a = target_alpha(&s, 0, &nb, &p, v2(50.0, 0.0), 2);
        assert!((a + 1.0).abs() < 1e-15);
    }

    #[test]
    fn target_rate_thresholds() {
        assert_eq!(
            target_rates(0.9, 0.7, 0.3),
            RatePair {
                pi_fl: 1.0,
                pi_lf: 0.0
            }
        );
        assert_eq!(target_rates(0.5, 0.7, 0.3), RatePair::ZERO);
        assert_eq!(
            target_rates(0.1, 0.7, 0.3),
            RatePair {
                pi_fl: 0.0,
                pi_lf: 1.0
            }
        );
        assert_eq!(target_rates(0.7, 0.7, 0.3).pi_fl, 1.0);
        assert_eq!(target_rates(0.3, 0.7, 0.3).pi_lf, 0.0);
    }

    #[test]
    fn stationary_values() {
        assert_eq!(stationary_fractions(1.0, 1.0).unwrap(), (0.5, 0.5));
        let (l, f) = stationary_fractions(2e-4, 4e-3).unwrap();
        assert!((l - 1.0 / 21.0).abs() < 1e-15 && (f - 20.0 / 21.0).abs() < 1e-15);
        assert!((l + f - 1.0).abs() < 1e-15);
        assert_eq!(stationary_fractions(0.0, 3.0).unwrap(), (0.0, 1.0));
        assert!(stationary_fractions(0.0, 0.0).is_err());
    }

    fn followers(n: usize) -> SwarmState {
        swarm(&vec![(Vector::ZERO, Vector::ZERO, Label::Follower); n])
    }

    #[test]
    fn zero_rates_keep_labels() {
        let s = followers(50);
        let next = switch_labels(&s, |_| RatePair::ZERO, 1.0, 1);
        assert_eq!(next, s);
    }

    #[test]
    fn certain_switch_flips_everyone() {
        let s = followers(50);
        let next = switch_labels(&s, |_| constant_rates(1.0, 0.0), 1.0, 1);
        assert!(next.agents.iter().all(|a| a.label == Label::Leader));
        // Probabilities above one are clamped, not rejected.
        let again = switch_labels(&next, |_| constant_rates(0.0, 5.0), 1.0, 1);
        assert!(again.agents.iter().all(|a| a.label == Label::Follower));
    }

    #[test]
    fn switching_is_reproducible_and_conserves_count() {
        let s = followers(1000);
        let a = switch_labels(&s, |_| constant_rates(0.3, 0.1), 1.0, 9);
        let b = switch_labels(&s, |_| constant_rates(0.3, 0.1), 1.0, 9);
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        let (f, l) = a.label_counts();
        assert_eq!(f + l, 1000);
        assert!((l as f64 - 300.0).abs() < 60.0, "leaders {l}");
    }
}
