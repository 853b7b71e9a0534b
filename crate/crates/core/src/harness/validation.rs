//! Alignment-only consistency experiment.
//!
//! Agents sit at fixed positions on a line and only align their scalar
//! velocities. Because positions never move, neighbor sets are constant and
//! the mean-field limit reduces to the linear system
//! `dv_i/dt = (1/k) sum_{j in B_i} v_j - v_i`, which is integrated to high
//! accuracy as the reference. The Nanbu scheme runs one binary interaction
//! per agent for every `eps` of time, and its velocity histogram at the final
//! time is compared against the reference.

use std::io::Write;
use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::stats::{l2_histogram_error, HistogramSpec};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::meso::{nanbu_step, MesoOptions};
use crate::model::{
    subsample_k, AgentState, ForceParams, Label, Mode, RateSpec, SimParams, SourceSpec, SwarmState,
};
use crate::rng::{step_rng, Phase};
use crate::snapshot::format_g17;
use crate::topology::{KdTree, LineIndex, NeighborSearch, SearchBackend};
use crate::vector::Vector;

/// Means of the two Gaussian components in the `(x, v)` plane.
pub const MIXTURE_MEANS: [(f64, f64); 2] = [(-0.33, -0.16), (0.33, 0.16)];
/// Standard deviation of each component, `(x, v)`.
pub const MIXTURE_STD: (f64, f64) = (0.12, 0.06);

fn default_t_final() -> f64 {
    3.0
}
fn default_reference_step() -> f64 {
    1e-4
}
fn default_bins() -> usize {
    100
}

/// Parameters of one validation sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    pub n_particles: usize,
    pub rho_star: f64,
    /// Subsample sizes, in percent of `n_particles`.
    pub p: Vec<f64>,
    pub eps: Vec<f64>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Step of the reference integrator.
    #[serde(default = "default_reference_step")]
    pub reference_step: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl ValidationSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_particles < 2 {
            return bad("validation needs at least two particles".into());
        }
        if !(self.rho_star > 0.0 && self.rho_star <= 1.0) {
            return bad(format!(
                "rho_star must lie in (0, 1], got {}",
                self.rho_star
            ));
        }
        if self.p.is_empty() || self.p.iter().any(|&p| !(p > 0.0 && p <= 100.0)) {
            return bad("every p must lie in (0, 100]".into());
        }
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return bad("eps values must be positive".into());
        }
        if !(self.t_final > 0.0) || !(self.reference_step > 0.0) {
            return bad("t_final and reference_step must be positive".into());
        }
        if self.repetitions == 0 || self.bins == 0 {
            return bad("repetitions and bins must be positive".into());
        }
        Ok(())
    }

    /// Subsample size for `p` percent, at least two agents.
    pub fn n_sub(&self, p: f64) -> usize {
        ((p / 100.0 * self.n_particles as f64).round() as usize).clamp(2, self.n_particles)
    }
}

/// Seed of repetition `rep`.
fn repetition_seed(seed: u64, rep: usize) -> u64 {
    seed ^ (rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Followers on a line drawn from the two-component mixture; even ids take
/// the first component, odd ids the second.
pub fn mixture_state(n: usize, seed: u64) -> SwarmState {
    let agents = (0..n)
        .map(|i| {
            let mut rng = step_rng(seed, 0, Phase::Init, i as u64);
            let (mx, mv) = MIXTURE_MEANS[i % 2];
            let zx: f64 = rng.sample(StandardNormal);
            let zv: f64 = rng.sample(StandardNormal);
            AgentState::new(
                Vector([mx + MIXTURE_STD.0 * zx, 0.0, 0.0]),
                Vector([mv + MIXTURE_STD.1 * zv, 0.0, 0.0]),
                Label::Follower,
            )
        })
        .collect();
    SwarmState::new(1, agents)
}

/// Neighbor sets of the frozen configuration, in a form that sums neighbor
/// values in linear total time.
enum Balls {
    /// Per agent: a run of the descending order, a run of the ascending
    /// order, and the id to subtract if the agent itself lies in a run.
    Line {
        desc: Vec<u32>,
        asc: Vec<u32>,
        runs: Vec<(Range<usize>, Range<usize>, Option<usize>)>,
    },
    /// Explicit lists, `k` per agent.
    Lists { k: usize, ids: Vec<u32> },
}

impl Balls {
    fn build(positions: &[Vector], dim: usize, k: usize) -> Result<Self> {
        let n = positions.len();
        if dim == 1 {
            let index = LineIndex::build(positions, 1)?;
            let desc = index.descending_ids().to_vec();
            let asc = index.ascending().to_vec();
            let mut pos_desc = vec![0usize; n];
            let mut pos_asc = vec![0usize; n];
            for (p, &id) in desc.iter().enumerate() {
                pos_desc[id as usize] = p;
            }
            for (p, &id) in asc.iter().enumerate() {
                pos_asc[id as usize] = p;
            }
            let runs = (0..n)
                .map(|i| {
                    let ball = index.ball(positions[i][0], k, Some(i))?;
                    let (l, r) = index.runs(&ball);
                    let inside = l.contains(&pos_desc[i]) || r.contains(&pos_asc[i]);
                    Ok((l, r, inside.then_some(i)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Balls::Line { desc, asc, runs })
        } else {
            let tree = KdTree::build(positions, dim)?;
            let mut ids = Vec::with_capacity(n * k);
            for (i, p) in positions.iter().enumerate() {
                ids.extend(tree.knn(*p, k, Some(i))?.iter().map(|nb| nb.id as u32));
            }
            Ok(Balls::Lists { k, ids })
        }
    }

    /// `out[i] = mean_{j in B_i} v[j] - v[i]`.
    fn relax(&self, v: &[f64], k: usize, out: &mut [f64], scratch: &mut (Vec<f64>, Vec<f64>)) {
        let inv_k = 1.0 / k as f64;
        match self {
            Balls::Line { desc, asc, runs } => {
                let (pd, pa) = scratch;
                prefix(desc, v, pd);
                prefix(asc, v, pa);
                for (i, (l, r, own)) in runs.iter().enumerate() {
                    let mut s = (pd[l.end] - pd[l.start]) + (pa[r.end] - pa[r.start]);
                    if let Some(o) = own {
                        s -= v[*o];
                    }
                    out[i] = s * inv_k - v[i];
                }
            }
            Balls::Lists { k, ids } => {
                for (i, chunk) in ids.chunks_exact(*k).enumerate() {
                    let s: f64 = chunk.iter().map(|&j| v[j as usize]).sum();
                    out[i] = s * inv_k - v[i];
                }
            }
        }
    }
}

fn prefix(order: &[u32], v: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(0.0);
    let mut acc = 0.0;
    for &id in order {
        acc += v[id as usize];
        out.push(acc);
    }
}

/// Velocities at `t_final` of the frozen-position alignment system, by the
/// classical fourth-order Runge-Kutta method with step `h` (the last step is
/// shortened to land on `t_final`). Each agent averages over its
/// `ceil(rho* N)` nearest neighbors, self excluded.
pub fn exact_alignment_reference(
    positions: &[Vector],
    dim: usize,
    v0: &[Vector],
    rho_star: f64,
    t_final: f64,
    h: f64,
) -> Result<Vec<Vector>> {
    let n = positions.len();
    if n < 2 || v0.len() != n {
        return Err(Error::Invalid(format!(
            "reference needs >= 2 agents and matching velocities, got {n} and {}",
            v0.len()
        )));
    }
    let k = subsample_k(rho_star, n).clamp(1, n - 1);
    let balls = Balls::build(positions, dim, k)?;
    let steps = (t_final / h).ceil().max(0.0) as usize;
    let mut out = v0.to_vec();
    let mut scratch = (Vec::with_capacity(n + 1), Vec::with_capacity(n + 1));
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for axis in 0..dim {
        let mut v: Vec<f64> = v0.iter().map(|x| x[axis]).collect();
        let mut t = 0.0;
        for s in 0..steps {
            let dt = if s + 1 == steps { t_final - t } else { h };
            balls.relax(&v, k, &mut k1, &mut scratch);
            for i in 0..n {
                tmp[i] = v[i] + 0.5 * dt * k1[i];
            }
            balls.relax(&tmp, k, &mut k2, &mut scratch);
            for i in 0..n {
                tmp[i] = v[i] + 0.5 * dt * k2[i];
            }
            balls.relax(&tmp, k, &mut k3, &mut scratch);
            for i in 0..n {
                tmp[i] = v[i] + dt * k3[i];
            }
            balls.relax(&tmp, k, &mut k4, &mut scratch);
            for i in 0..n {
                v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += dt;
        }
        for (o, x) in out.iter_mut().zip(v) {
            o[axis] = x;
        }
    }
    Ok(out)
}

/// Runs the Nanbu alignment dynamics with positions frozen: `round(T / eps)`
/// steps, each applying `v' = v + eps (v_j - v_i)` with one partner per agent
/// from the step's subsample.
pub fn nanbu_alignment(
    initial: &SwarmState,
    rho_star: f64,
    n_sub: usize,
    eps: f64,
    t_final: f64,
    seed: u64,
) -> Result<SwarmState> {
    let params = ForceParams {
        c_rep: 0.0,
        c_ali: 1.0,
        c_att: 0.0,
        c_v: 0.0,
        c_src: 0.0,
        c_ctr: 0.0,
        s: 1.0,
        r_bar: 1.0,
        r_under: 1.0,
        eps_sig: 1.0,
    };
    let dynamics = Dynamics::new(params, SourceSpec::none(), RateSpec::frozen(), seed);
    let sim = SimParams {
        rho_star,
        n_particles: initial.len(),
        n_sub,
        eps_scale: eps,
        dt: 0.0,
        t_final,
        seed,
        mode: Mode::Meso,
    };
    let opts = MesoOptions {
        search: if initial.dim == 1 {
            SearchBackend::Line
        } else {
            SearchBackend::KdTree
        },
        ..MesoOptions::default()
    };
    let steps = (t_final / eps).round() as u64;
    let mut state = initial.clone();
    for _ in 0..steps {
        state = nanbu_step(&state, &dynamics, &sim, &opts)?;
    }
    state.time = steps as f64 * eps;
    Ok(state)
}

/// Error statistics of one `(eps, p)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationRow {
    pub eps: f64,
    pub p: f64,
    pub n_sub: usize,
    pub errors: Vec<f64>,
}

impl ValidationRow {
    pub fn mean(&self) -> f64 {
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }

    /// Sample standard deviation; zero for a single repetition.
    pub fn std(&self) -> f64 {
        let n = self.errors.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.errors.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Runs the whole sweep. Rows follow the order of `spec.p`, then `spec.eps`.
pub fn run_validation(spec: &ValidationSpec) -> Result<Vec<ValidationRow>> {
    spec.validate()?;
    let mut rows: Vec<ValidationRow> = spec
        .p
        .iter()
        .flat_map(|&p| {
            spec.eps.iter().map(move |&eps| ValidationRow {
                eps,
                p,
                n_sub: spec.n_sub(p),
                errors: Vec::with_capacity(spec.repetitions),
            })
        })
        .collect();
    for rep in 0..spec.repetitions {
        let seed = repetition_seed(spec.seed, rep);
        let initial = mixture_state(spec.n_particles, seed);
        let positions = initial.positions();
        let v0: Vec<Vector> = initial.agents.iter().map(|a| a.velocity).collect();
        let reference: Vec<f64> = exact_alignment_reference(
            &positions,
            1,
            &v0,
            spec.rho_star,
            spec.t_final,
            spec.reference_step,
        )?
        .iter()
        .map(|v| v[0])
        .collect();
        for row in &mut rows {
            let end = nanbu_alignment(
                &initial,
                spec.rho_star,
                row.n_sub,
                row.eps,
                spec.t_final,
                seed,
            )?;
            let sample: Vec<f64> = end.agents.iter().map(|a| a.velocity[0]).collect();
            let hist = HistogramSpec::pooled(0, &sample, &reference, spec.bins)?;
            row.errors
                .push(l2_histogram_error(&sample, &reference, &hist)?);
            log::info!(
                "validation rep {rep} eps {} p {}: error {:.4}",
                row.eps,
                row.p,
                row.errors[rep]
            );
        }
    }
    Ok(rows)
}

/// Header: `eps,p,n_sub,rho_star,n_particles,repetitions,mean_error,std_error`.
pub fn write_validation_csv<W: Write>(
    out: &mut W,
    spec: &ValidationSpec,
    rows: &[ValidationRow],
) -> Result<()> {
    writeln!(
        out,
        "eps,p,n_sub,rho_star,n_particles,repetitions,mean_error,std_error"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_g17(r.eps),
            format_g17(r.p),
            r.n_sub,
            format_g17(spec.rho_star),
            spec.n_particles,
            r.errors.len(),
            format_g17(r.mean()),
            format_g17(r.std())
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars(xs: &[f64]) -> Vec<Vector> {
        xs.iter().map(|&x| Vector([x, 0.0, 0.0])).collect()
    }

    #[test]
    fn consensus_is_preserved() {
        let pos = scalars(&[0.0, 0.3, 0.5, 1.1, 2.0]);
        let v0 = scalars(&[0.7; 5]);
        let out = exact_alignment_reference(&pos, 1, &v0, 0.4, 3.0, 1e-3).unwrap();
        assert!(out.iter().all(|v| (v[0] - 0.7).abs() < 1e-14));
    }

    #[test]
    fn two_agents_decay_exponentially() {
        let pos = scalars(&[0.0, 1.0]);
        let v0 = scalars(&[1.0, -1.0]);
        let t = 0.8;
        let out = exact_alignment_reference(&pos, 1, &v0, 0.5, t, 1e-4).unwrap();
        let want = (-2.0 * t).exp();
        assert!((out[0][0] - want).abs() < 1e-12, "{} vs {want}", out[0][0]);
        assert!((out[1][0] + want).abs() < 1e-12);
    }

    #[test]
    fn line_and_list_paths_agree() {
        let st = mixture_state(300, 5);
        let pos = st.positions();
        let v0: Vec<Vector> = st.agents.iter().map(|a| a.velocity).collect();
        let line = exact_alignment_reference(&pos, 1, &v0, 0.1, 1.0, 1e-2).unwrap();
        let b = Balls::build(&pos, 2, 30).unwrap();
        assert!(matches!(b, Balls::Lists { .. }));
        let lists = exact_alignment_reference(&pos, 2, &v0, 0.1, 1.0, 1e-2).unwrap();
        for (a, b) in line.iter().zip(&lists) {
            assert!((a[0] - b[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_refinement_is_stable() {
        let st = mixture_state(400, 8);
        let pos = st.positions();
        let v0: Vec<Vector> = st.agents.iter().map(|a| a.velocity).collect();
        let coarse = exact_alignment_reference(&pos, 1, &v0, 0.35, 3.0, 2e-3).unwrap();
        let fine = exact_alignment_reference(&pos, 1, &v0, 0.35, 3.0, 1e-3).unwrap();
        let num: f64 = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a[0] - b[0]).powi(2))
            .sum();
        let den: f64 = fine.iter().map(|b| b[0] * b[0]).sum();
        assert!((num / den).sqrt() < 1e-8);
    }

    #[test]
    fn nanbu_keeps_positions_and_mean_drift_small() {
        let st = mixture_state(500, 3);
        let end = nanbu_alignment(&st, 0.35, 500, 0.1, 1.0, 3).unwrap();
        assert_eq!(end.positions(), st.positions());
        assert!((end.mean_velocity()[0] - st.mean_velocity()[0]).abs() < 0.02);
    }

    #[test]
    fn sweep_is_reproducible() {
        let spec = ValidationSpec {
            n_particles: 300,
            rho_star: 0.35,
            p: vec![100.0, 100.0],
            eps: vec![1.0, 0.1],
            t_final: 1.0,
            repetitions: 2,
            seed: 4,
            reference_step: 1e-3,
            bins: 30,
        };
        let rows = run_validation(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].errors, rows[2].errors);
        assert_eq!(rows[1].errors, rows[3].errors);
        let mut csv = Vec::new();
        write_validation_csv(&mut csv, &spec, &rows).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
    }

    #[test]
    fn spec_checks() {
        let mut spec = ValidationSpec {
            n_particles: 100,
            rho_star: 0.35,
            p: vec![0.0],
            eps: vec![0.1],
            t_final: 3.0,
            repetitions: 1,
            seed: 0,
            reference_step: 1e-4,
            bins: 100,
        };
        assert!(spec.validate().is_err());
        spec.p = vec![20.0];
        assert!(spec.validate().is_ok());
        assert_eq!(spec.n_sub(20.0), 20);
    }
}
