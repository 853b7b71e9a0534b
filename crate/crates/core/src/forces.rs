//! Interaction kernels of the leader-follower model.
//!
//! All functions are pure. Directions towards a source or the centre of mass
//! are undefined at zero distance; below [`DIRECTION_CUTOFF`] such a term
//! contributes nothing.

use crate::model::{AgentState, ForceParams, Label, SourceSpec};
use crate::vector::Vector;

/// Distance below which a unit direction is treated as undefined.
pub const DIRECTION_CUTOFF: f64 = 1e-12;

/// Exponent bound for the sigmoid; `exp(700)` is still finite.
const MAX_EXPONENT: f64 = 700.0;

/// Returned by [`repulsion`] for coincident points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Singular;

/// `-c_rep (x* - x) / |x* - x|^2`, pointing away from `x_star`.
pub fn repulsion(x: Vector, x_star: Vector, c_rep: f64) -> Result<Vector, Singular> {
    let d = x_star - x;
    let r2 = d.norm_sq();
    if r2 == 0.0 {
        return Err(Singular);
    }
    Ok((-c_rep / r2) * d)
}

/// `c_ali (v* - v)`.
pub fn alignment(v: Vector, v_star: Vector, c_ali: f64) -> Vector {
    c_ali * (v_star - v)
}

/// `c_att (x* - x)`.
pub fn attraction(x: Vector, x_star: Vector, c_att: f64) -> Vector {
    c_att * (x_star - x)
}

/// Relaxation of the speed towards `sqrt(s)`: `c_v (s - |v|^2) v`.
pub fn self_propulsion(v: Vector, c_v: f64, s: f64) -> Vector {
    (c_v * (s - v.norm_sq())) * v
}

/// Exact solution after time `h` of `dv/dt = c_v (s - |v|^2) v`. The
/// direction is kept and the squared speed follows the logistic flow
/// `u(h) = s u0 / (u0 + (s - u0) exp(-2 c_v s h))`.
pub fn relax_speed(v: Vector, c_v: f64, s: f64, h: f64) -> Vector {
    let u0 = v.norm_sq();
    if u0 == 0.0 || !u0.is_finite() || c_v * h == 0.0 {
        return v;
    }
    let decay = (-2.0 * c_v * s * h).exp();
    let u = s * u0 / (u0 + (s - u0) * decay);
    (u / u0).sqrt() * v
}

/// Logistic perception function `1 / (1 + exp((r - r_thresh) / eps_sig))`.
pub fn sigmoid(r: f64, r_thresh: f64, eps_sig: f64) -> f64 {
    let z = ((r - r_thresh) / eps_sig).clamp(-MAX_EXPONENT, MAX_EXPONENT);
    1.0 / (1.0 + z.exp())
}

fn unit_towards(x: Vector, target: Vector) -> Option<(Vector, f64)> {
    let d = target - x;
    let r = d.norm();
    (r >= DIRECTION_CUTOFF).then(|| ((1.0 / r) * d, r))
}

/// Attraction towards every source, each weighted by the perception sigmoid.
pub fn source_force(
    x: Vector,
    sources: &SourceSpec,
    c_src: f64,
    r_bar: f64,
    eps_sig: f64,
) -> Vector {
    sources
        .positions
        .iter()
        .filter_map(|&src| unit_towards(x, src))
        .map(|(u, r)| (c_src * sigmoid(r, r_bar, eps_sig)) * u)
        .sum()
}

/// Pull towards the centre of mass, active once the agent is farther than
/// `r_under` from it.
pub fn center_force(x: Vector, x_c: Vector, c_ctr: f64, r_under: f64, eps_sig: f64) -> Vector {
    match unit_towards(x, x_c) {
        Some((u, r)) => (c_ctr * (1.0 - sigmoid(r, r_under, eps_sig))) * u,
        None => Vector::ZERO,
    }
}

/// Label-dependent terms that do not involve a partner: sources, centre of
/// mass and self-propulsion for leaders, nothing for followers.
pub fn leader_drive(
    a: &AgentState,
    params: &ForceParams,
    sources: &SourceSpec,
    x_c: Vector,
) -> Vector {
    match a.label {
        Label::Follower => Vector::ZERO,
        Label::Leader => {
            leader_pull(a, params, sources, x_c) + self_propulsion(a.velocity, params.c_v, params.s)
        }
    }
}

/// Leader terms other than self-propulsion: sources and centre of mass.
pub fn leader_pull(
    a: &AgentState,
    params: &ForceParams,
    sources: &SourceSpec,
    x_c: Vector,
) -> Vector {
    match a.label {
        Label::Follower => Vector::ZERO,
        Label::Leader => {
            source_force(
                a.position,
                sources,
                params.c_src,
                params.r_bar,
                params.eps_sig,
            ) + center_force(
                a.position,
                x_c,
                params.c_ctr,
                params.r_under,
                params.eps_sig,
            )
        }
    }
}

/// Partner-dependent terms: repulsion for everyone, plus alignment and
/// attraction for followers. Coincident pairs drop the repulsion term.
pub fn partner_force(a: &AgentState, b: &AgentState, params: &ForceParams) -> Vector {
    let mut f = repulsion(a.position, b.position, params.c_rep).unwrap_or(Vector::ZERO);
    if a.label == Label::Follower {
        f += alignment(a.velocity, b.velocity, params.c_ali);
        f += attraction(a.position, b.position, params.c_att);
    }
    f
}

/// Full binary interaction law felt by `a` when meeting `b`.
pub fn pairwise_force(
    a: &AgentState,
    b: &AgentState,
    params: &ForceParams,
    sources: &SourceSpec,
    x_c: Vector,
) -> Vector {
    partner_force(a, b, params) + leader_drive(a, params, sources, x_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v2(x: f64, y: f64) -> Vector {
        Vector([x, y, 0.0])
    }

    #[test]
    fn repulsion_points_away() {
        let f = repulsion(v2(0.0, 0.0), v2(1.0, 0.0), 100.0).unwrap();
        assert_eq!(f, v2(-100.0, 0.0));
        assert_eq!(repulsion(v2(1.0, 1.0), v2(1.0, 1.0), 100.0), Err(Singular));
    }

    #[test]
    fn alignment_and_attraction_values() {
        assert_eq!(alignment(v2(0.0, 0.0), v2(1.0, 2.0), 12.0), v2(12.0, 24.0));
        assert_eq!(alignment(v2(3.0, 1.0), v2(3.0, 1.0), 12.0), Vector::ZERO);
        assert_eq!(attraction(v2(0.0, 0.0), v2(10.0, 0.0), 0.7), v2(7.0, 0.0));
        assert_eq!(attraction(v2(2.0, 2.0), v2(2.0, 2.0), 0.7), Vector::ZERO);
    }

    #[test]
    fn self_propulsion_values() {
        assert_eq!(self_propulsion(v2(1.0, 0.0), 5.0, 10.0), v2(45.0, 0.0));
        assert_eq!(self_propulsion(Vector::ZERO, 5.0, 10.0), Vector::ZERO);
        let eq = v2(10f64.sqrt(), 0.0);
        assert!(self_propulsion(eq, 5.0, eq.norm_sq()).norm() == 0.0);
    }

    #[test]
    fn sigmoid_values_and_limits() {
        assert_eq!(sigmoid(200.0, 200.0, 200.0), 0.5);
        let e = std::f64::consts::E;
        assert!((sigmoid(400.0, 200.0, 200.0) - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((sigmoid(400.0, 200.0, 200.0) - 0.26894).abs() < 1e-5);
        assert!(sigmoid(f64::MAX, 0.0, 1.0).is_finite());
        assert!(sigmoid(1e9, 0.0, 1.0) < 1e-300);
        assert_eq!(sigmoid(-1e9, 0.0, 1.0), 1.0);
    }

    #[test]
    fn relax_speed_flow() {
        let v = v2(3.0, 4.0);
        let out = relax_speed(v, 5.0, 10.0, 0.01);
        // Direction kept, speed moves towards sqrt(s) without overshooting.
        assert!((out[0] * 4.0 - out[1] * 3.0).abs() < 1e-12);
        assert!(out.norm() < 5.0 && out.norm() > 10f64.sqrt());
        // Two half steps compose to one full step.
        let half = relax_speed(relax_speed(v, 5.0, 10.0, 0.005), 5.0, 10.0, 0.005);
        assert!((half - out).norm() < 1e-12);
        // Small steps agree with the explicit term to first order.
        let h = 1e-7;
        let explicit = v + h * self_propulsion(v, 5.0, 10.0);
        assert!((relax_speed(v, 5.0, 10.0, h) - explicit).norm() < 1e-9);
        // Huge speeds stay finite and land near the equilibrium.
        let fast = relax_speed(v2(1e6, 0.0), 5.0, 10.0, 0.01);
        assert!(fast.is_finite() && fast.norm() < 4.0);
        assert_eq!(relax_speed(Vector::ZERO, 5.0, 10.0, 1.0), Vector::ZERO);
    }

    #[test]
    fn source_force_values() {
        let src = SourceSpec {
            positions: vec![v2(1.0, 0.0)],
        };
        let f = source_force(v2(0.0, 0.0), &src, 1.0, 200.0, 200.0);
        let expected = 1.0 / (1.0 + (-199.0f64 / 200.0).exp());
        assert!((f[0] - expected).abs() < 1e-15);
        assert!((f[0] - 0.73007).abs() < 1e-5);
        assert_eq!(f[1], 0.0);
        assert_eq!(
            source_force(v2(1.0, 0.0), &src, 1.0, 200.0, 200.0),
            Vector::ZERO
        );
        assert_eq!(
            source_force(v2(3.0, 0.0), &SourceSpec::none(), 1.0, 200.0, 200.0),
            Vector::ZERO
        );
    }

    #[test]
    fn center_force_values() {
        assert_eq!(
            center_force(v2(5.0, 5.0), v2(5.0, 5.0), 4.0, 1.0, 1.0),
            Vector::ZERO
        );
        let half = center_force(v2(0.0, 0.0), v2(20.0, 0.0), 4.0, 20.0, 150.0);
        assert!((half.norm() - 2.0).abs() < 1e-14);
        let far = center_force(v2(0.0, 0.0), v2(1e6, 0.0), 4.0, 20.0, 150.0);
        assert!((far.norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_follower_and_leader() {
        let p = ForceParams::planar_default();
        let a = AgentState::new(v2(0.0, 0.0), v2(1.0, 1.0), Label::Follower);
        let b = AgentState::new(v2(1.0, 0.0), v2(1.0, 1.0), Label::Follower);
        let f = pairwise_force(&a, &b, &p, &SourceSpec::none(), Vector::ZERO);
        assert!((f[0] + 99.3).abs() < 1e-12 && f[1] == 0.0);

        let speed = v2(p.s.sqrt(), 0.0);
        let l = AgentState::new(v2(0.0, 0.0), speed, Label::Leader);
        let fl = pairwise_force(&l, &b, &p, &SourceSpec::none(), v2(50.0, 0.0));
        let rep = repulsion(l.position, b.position, p.c_rep).unwrap();
        assert!((fl - rep).norm() < 1e-12);

        let c = AgentState::new(a.position, a.velocity, Label::Follower);
        assert_eq!(
            pairwise_force(&a, &c, &p, &SourceSpec::none(), Vector::ZERO),
            Vector::ZERO
        );
    }

    fn vec3() -> impl Strategy<Value = Vector> {
        prop::array::uniform3(-100.0..100.0f64).prop_map(Vector)
    }

    proptest! {
        #[test]
        fn kernels_antisymmetric(x in vec3(), y in vec3(), c in 0.0..50.0f64) {
            prop_assert_eq!(alignment(x, y, c), -alignment(y, x, c));
            prop_assert_eq!(attraction(x, y, c), -attraction(y, x, c));
            if x != y {
                prop_assert_eq!(repulsion(x, y, c).unwrap(), -repulsion(y, x, c).unwrap());
            }
        }

        #[test]
        fn kernels_linear_in_coefficient(x in vec3(), y in vec3(), c in 0.0..50.0f64) {
            prop_assert_eq!(alignment(x, y, 2.0 * c), 2.0 * alignment(x, y, c));
            prop_assert_eq!(attraction(x, y, 2.0 * c), 2.0 * attraction(x, y, c));
            prop_assert_eq!(self_propulsion(x, 2.0 * c, 10.0), 2.0 * self_propulsion(x, c, 10.0));
            if x != y {
                prop_assert_eq!(repulsion(x, y, 2.0 * c).unwrap(), 2.0 * repulsion(x, y, c).unwrap());
            }
        }

        #[test]
        fn speed_relaxes_towards_equilibrium(v in vec3(), s in 0.1..1000.0f64) {
            let p = self_propulsion(v, 5.0, s).dot(v);
            let n2 = v.norm_sq();
            if n2 > 0.0 && n2 < s { prop_assert!(p > 0.0); }
            if n2 > s { prop_assert!(p < 0.0); }
        }

        #[test]
        fn sigmoid_bounded_and_decreasing(r in -1e3..1e3f64, t in -1e3..1e3f64, e in 1.0..500.0f64) {
            let a = sigmoid(r, t, e);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(sigmoid(r + 1.0, t, e) <= a);
            if ((r - t) / e).abs() < 30.0 {
                prop_assert!(a > 0.0 && a < 1.0);
                prop_assert!(sigmoid(r + 1.0, t, e) < a);
            }
        }
    }
}
