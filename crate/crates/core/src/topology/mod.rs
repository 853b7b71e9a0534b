//! Topological neighbor search.
//!
//! Three interchangeable backends answer the same exact k-nearest-neighbor
//! query: a median-split k-d tree ([`KdTree`]), an exhaustive scan
//! ([`Exhaustive`]) kept as the reference oracle, and a sorted-line index for
//! one-dimensional data ([`LineIndex`]) that can sample a uniform member of the
//! k-nearest set in logarithmic time. All three order candidates by squared
//! Euclidean distance and break ties by ascending point id.

mod brute;
mod kdtree;
mod line;

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rand::Rng;

pub use brute::{exhaustive_knn, Exhaustive};
pub use kdtree::KdTree;
pub use line::{LineBall, LineIndex};

use crate::error::NeighborError;
use crate::model::{subsample_k, SwarmState};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub dist_sq: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.dist_sq.sqrt()
    }

    /// Total order used everywhere: distance first, then id.
    #[inline]
    pub fn cmp_key(&self, other: &Neighbor) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

/// Neighbors sorted by non-decreasing distance, ties by ascending id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborList(pub Vec<Neighbor>);

impl NeighborList {
    pub fn ids(&self) -> Vec<usize> {
        self.0.iter().map(|n| n.id).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Neighbor> {
        self.0.iter()
    }

    /// Checks the ordering invariant.
    pub fn is_sorted(&self) -> bool {
        self.0
            .windows(2)
            .all(|w| w[0].cmp_key(&w[1]) == Ordering::Less)
    }
}

/// Deterministic work counters, independent of wall-clock time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostCounters {
    pub distance_evaluations: u64,
    pub nodes_visited: u64,
}

/// Shared atomic accumulator; queries add their local totals once at the end,
/// so concurrent queries produce the same sums as sequential ones.
#[derive(Debug, Default)]
pub(crate) struct CounterCell {
    distance_evaluations: AtomicU64,
    nodes_visited: AtomicU64,
}

impl CounterCell {
    pub(crate) fn add(&self, c: CostCounters) {
        self.distance_evaluations
            .fetch_add(c.distance_evaluations, AtomicOrdering::Relaxed);
        self.nodes_visited
            .fetch_add(c.nodes_visited, AtomicOrdering::Relaxed);
    }

    pub(crate) fn read(&self) -> CostCounters {
        CostCounters {
            distance_evaluations: self.distance_evaluations.load(AtomicOrdering::Relaxed),
            nodes_visited: self.nodes_visited.load(AtomicOrdering::Relaxed),
        }
    }

    pub(crate) fn reset(&self) {
        self.distance_evaluations.store(0, AtomicOrdering::Relaxed);
        self.nodes_visited.store(0, AtomicOrdering::Relaxed);
    }
}

impl Clone for CounterCell {
    fn clone(&self) -> Self {
        let c = CounterCell::default();
        c.add(self.read());
        c
    }
}

/// Exact k-nearest-neighbor search over a fixed point set.
pub trait NeighborSearch: Sync {
    /// Number of indexed points.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of point `id`.
    fn point(&self, id: usize) -> Vector;

    /// The `k` nearest points to `x`, skipping `exclude` if given.
    fn knn(
        &self,
        x: Vector,
        k: usize,
        exclude: Option<usize>,
    ) -> Result<NeighborList, NeighborError>;

    /// One member of the `k`-nearest set, chosen uniformly.
    fn sample_neighbor<R: Rng + ?Sized>(
        &self,
        x: Vector,
        k: usize,
        exclude: Option<usize>,
        rng: &mut R,
    ) -> Result<usize, NeighborError> {
        let list = self.knn(x, k, exclude)?;
        Ok(list.0[rng.random_range(0..list.len())].id)
    }

    fn read_counters(&self) -> CostCounters;

    fn reset_counters(&self);
}

pub(crate) fn check_k(k: usize, n: usize, exclude: Option<usize>) -> Result<(), NeighborError> {
    let available = n - usize::from(exclude.is_some_and(|e| e < n));
    if k == 0 || k > available {
        return Err(NeighborError::KOutOfRange { k, available });
    }
    Ok(())
}

/// Builds the default index (a k-d tree) over `points`.
pub fn build_index(points: &[Vector], dim: usize) -> Result<KdTree, NeighborError> {
    KdTree::build(points, dim)
}

/// The `m` nearest agents to agent `i`, self excluded.
pub fn micro_neighbors(
    state: &SwarmState,
    i: usize,
    m: usize,
) -> Result<NeighborList, NeighborError> {
    let tree = KdTree::build(&state.positions(), state.dim)?;
    tree.knn(state.agents[i].position, m, Some(i))
}

/// Which index backs the per-step subsample search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchBackend {
    #[default]
    KdTree,
    /// Sorted-line index; one-dimensional data only.
    Line,
    Exhaustive,
}

/// A uniform subsample of agents with an index over its positions.
///
/// Subsample members are stored in ascending agent-id order, so the index's
/// tie rule on local ids coincides with the tie rule on agent ids.
pub struct Subsample<S> {
    ids: Vec<usize>,
    slot_of: Vec<u32>,
    index: S,
}

const NO_SLOT: u32 = u32::MAX;

impl<S: NeighborSearch> Subsample<S> {
    pub fn new(
        state: &SwarmState,
        mut ids: Vec<usize>,
        build: impl FnOnce(&[Vector], usize) -> Result<S, NeighborError>,
    ) -> Result<Self, NeighborError> {
        if ids.is_empty() {
            return Err(NeighborError::EmptySubsample);
        }
        ids.sort_unstable();
        let mut slot_of = vec![NO_SLOT; state.len()];
        for (slot, &id) in ids.iter().enumerate() {
            slot_of[id] = slot as u32;
        }
        let points: Vec<Vector> = ids.iter().map(|&i| state.agents[i].position).collect();
        let index = build(&points, state.dim)?;
        Ok(Subsample {
            ids,
            slot_of,
            index,
        })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn index(&self) -> &S {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn local_exclude(&self, agent: usize) -> Option<usize> {
        match self.slot_of.get(agent) {
            Some(&s) if s != NO_SLOT => Some(s as usize),
            _ => None,
        }
    }

    /// The `k` nearest subsample members to agent `agent` at `x`, with the
    /// agent itself excluded if it belongs to the subsample. Ids are agent ids.
    pub fn ball(&self, agent: usize, x: Vector, k: usize) -> Result<NeighborList, NeighborError> {
        let list = self.index.knn(x, k, self.local_exclude(agent))?;
        Ok(NeighborList(
            list.0
                .into_iter()
                .map(|n| Neighbor {
                    id: self.ids[n.id],
                    dist_sq: n.dist_sq,
                })
                .collect(),
        ))
    }

    /// A uniformly chosen member of [`Subsample::ball`], as an agent id.
    pub fn sample_partner<R: Rng + ?Sized>(
        &self,
        agent: usize,
        x: Vector,
        k: usize,
        rng: &mut R,
    ) -> Result<usize, NeighborError> {
        let local = self
            .index
            .sample_neighbor(x, k, self.local_exclude(agent), rng)?;
        Ok(self.ids[local])
    }
}

/// The `ceil(rho* N_c)` nearest members of the subsample `sub_ids` to agent
/// `i`, agent `i` excluded.
pub fn subsample_ball(
    state: &SwarmState,
    sub_ids: &[usize],
    i: usize,
    rho_star: f64,
) -> Result<NeighborList, NeighborError> {
    let sub = Subsample::new(state, sub_ids.to_vec(), KdTree::build)?;
    let mut k = subsample_k(rho_star, sub.len());
    if sub.local_exclude(i).is_some() {
        k = k.min(sub.len() - 1);
    }
    sub.ball(i, state.agents[i].position, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentState, Label};

    fn line_state(xs: &[f64]) -> SwarmState {
        SwarmState::new(
            1,
            xs.iter()
                .map(|&x| AgentState::new(Vector([x, 0.0, 0.0]), Vector::ZERO, Label::Follower))
                .collect(),
        )
    }

    #[test]
    fn micro_neighbors_collinear() {
        let s = line_state(&[0.0, 1.0, 3.0]);
        assert_eq!(micro_neighbors(&s, 1, 1).unwrap().ids(), vec![0]);
        assert_eq!(micro_neighbors(&s, 1, 2).unwrap().ids(), vec![0, 2]);
        assert!(micro_neighbors(&s, 1, 3).is_err());
    }

    #[test]
    fn micro_neighbors_coincident_partner() {
        let s = line_state(&[5.0, 0.0, 5.0, 6.0]);
        let l = micro_neighbors(&s, 0, 1).unwrap();
        assert_eq!(l.ids(), vec![2]);
        assert_eq!(l.0[0].dist_sq, 0.0);
    }

    #[test]
    fn subsample_of_everyone_matches_micro() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 17) % 40) as f64 * 0.37).collect();
        let s = line_state(&xs);
        let all: Vec<usize> = (0..40).collect();
        let rho = 0.1;
        for i in [0, 7, 39] {
            let ball = subsample_ball(&s, &all, i, rho).unwrap();
            let m = subsample_k(rho, 40);
            assert_eq!(ball, micro_neighbors(&s, i, m).unwrap());
        }
        let whole = subsample_ball(&s, &all, 3, 1.0).unwrap();
        assert_eq!(whole.len(), 39);
    }

    #[test]
    fn subsample_on_grid_finds_four_nearest() {
        let mut agents = Vec::new();
        for gx in 0..10 {
            for gy in 0..10 {
                agents.push(AgentState::new(
                    Vector([gx as f64, gy as f64, 0.0]),
                    Vector::ZERO,
                    Label::Follower,
                ));
            }
        }
        let s = SwarmState::new(2, agents);
        let all: Vec<usize> = (0..100).collect();
        // Agent 55 sits at (5,5); its four nearest are the lattice neighbours.
        let ball = subsample_ball(&s, &all, 55, 0.04).unwrap();
        assert_eq!(ball.ids(), vec![45, 54, 56, 65]);
        assert!(ball.iter().all(|n| n.dist_sq == 1.0));
    }

    #[test]
    fn empty_subsample_rejected() {
        let s = line_state(&[0.0, 1.0]);
        assert_eq!(
            subsample_ball(&s, &[], 0, 0.5).unwrap_err(),
            NeighborError::EmptySubsample
        );
    }
}
