//! Step context shared by both simulators.

use crate::config::{LabelOrder, ScenarioConfig};
use crate::error::Result;
use crate::forces::{relax_speed, self_propulsion};
use crate::model::{AgentState, ForceParams, Label, Propulsion, RateSpec, SourceSpec};
use crate::vector::Vector;

/// Model constants and label rules that stay fixed over a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Dynamics {
    pub params: ForceParams,
    pub sources: SourceSpec,
    pub rates: RateSpec,
    pub label_order: LabelOrder,
    pub propulsion: Propulsion,
    pub seed: u64,
}

impl Dynamics {
    /// Velocity of `a` after a step of length `h` under the force `f`, which
    /// holds every term except self-propulsion. Followers and explicit
    /// propulsion give `v + h (f + S(v))`; exact propulsion relaxes the speed
    /// of `v + h f` along the exact flow.
    pub(crate) fn advance_velocity(&self, a: &AgentState, f: Vector, h: f64) -> Vector {
        let p = &self.params;
        match (a.label, self.propulsion) {
            (Label::Follower, _) => a.velocity + h * f,
            (Label::Leader, Propulsion::Explicit) => {
                a.velocity + h * (f + self_propulsion(a.velocity, p.c_v, p.s))
            }
            (Label::Leader, Propulsion::Exact) => relax_speed(a.velocity + h * f, p.c_v, p.s, h),
        }
    }

    pub fn new(params: ForceParams, sources: SourceSpec, rates: RateSpec, seed: u64) -> Self {
        Dynamics {
            params,
            sources,
            rates,
            label_order: LabelOrder::After,
            propulsion: Propulsion::Explicit,
            seed,
        }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(Dynamics {
            params: cfg.force_params(),
            sources: cfg.source_spec()?,
            rates: cfg.rate_spec()?,
            label_order: cfg.label_order,
            propulsion: cfg.propulsion,
            seed: cfg.seed,
        })
    }
}
