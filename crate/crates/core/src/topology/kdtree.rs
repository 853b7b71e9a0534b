use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{check_k, CostCounters, CounterCell, Neighbor, NeighborList, NeighborSearch};
use crate::error::NeighborError;
use crate::vector::{Vector, MAX_DIM};

/// Median-split k-d tree with one point per node.
///
/// The tree is implicit: `order` is a permutation of point ids in which every
/// subtree occupies a contiguous range and its root sits at the middle of the
/// range. Splits run along the axis of widest spread and order points by
/// `(coordinate, id)`, so construction is fully deterministic.
#[derive(Clone, Debug)]
pub struct KdTree {
    dim: usize,
    points: Vec<Vector>,
    order: Vec<u32>,
    split_axis: Vec<u8>,
    /// Node points in layout order, for cache-friendly descent.
    layout: Vec<Vector>,
    counters: CounterCell,
}

#[derive(Clone, Copy)]
struct Candidate(Neighbor);

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_key(&other.0)
    }
}

/// Bounded set of the best candidates seen so far. Small `k` keeps a sorted
/// array; large `k` switches to a max-heap.
enum Best {
    Sorted(Vec<Neighbor>, usize),
    Heap(BinaryHeap<Candidate>, usize),
}

const SORTED_LIMIT: usize = 32;

impl Best {
    fn new(k: usize) -> Self {
        if k <= SORTED_LIMIT {
            Best::Sorted(Vec::with_capacity(k), k)
        } else {
            Best::Heap(BinaryHeap::with_capacity(k + 1), k)
        }
    }

    fn offer(&mut self, cand: Neighbor) {
        match self {
            Best::Sorted(v, k) => {
                if v.len() == *k {
                    if cand.cmp_key(v.last().expect("k >= 1")).is_ge() {
                        return;
                    }
                    v.pop();
                }
                let at = v.partition_point(|x| x.cmp_key(&cand).is_lt());
                v.insert(at, cand);
            }
            Best::Heap(h, k) => {
                if h.len() < *k {
                    h.push(Candidate(cand));
                } else if Candidate(cand) < *h.peek().expect("heap is full") {
                    h.pop();
                    h.push(Candidate(cand));
                }
            }
        }
    }

    /// Squared radius that still admits candidates.
    fn bound(&self) -> f64 {
        match self {
            Best::Sorted(v, k) if v.len() == *k => v[*k - 1].dist_sq,
            Best::Heap(h, k) if h.len() == *k => h.peek().expect("heap is full").0.dist_sq,
            _ => f64::INFINITY,
        }
    }

    fn into_sorted(self) -> Vec<Neighbor> {
        match self {
            Best::Sorted(v, _) => v,
            Best::Heap(h, _) => h.into_sorted_vec().into_iter().map(|c| c.0).collect(),
        }
    }
}

impl KdTree {
    pub fn build(points: &[Vector], dim: usize) -> Result<Self, NeighborError> {
        if points.is_empty() {
            return Err(NeighborError::EmptyIndex);
        }
        if let Some((id, p)) = points
            .iter()
            .enumerate()
            .find(|(_, p)| p.used_dim() > dim || !p.is_finite())
        {
            return Err(NeighborError::DimensionMismatch {
                id,
                expected: dim,
                found: p.used_dim(),
            });
        }
        let n = points.len();
        let mut tree = KdTree {
            dim: dim.clamp(1, MAX_DIM),
            points: points.to_vec(),
            order: (0..n as u32).collect(),
            split_axis: vec![0; n],
            layout: Vec::new(),
            counters: CounterCell::default(),
        };
        tree.build_range(0, n);
        tree.layout = tree
            .order
            .iter()
            .map(|&id| tree.points[id as usize])
            .collect();
        Ok(tree)
    }

    /// Builds from coordinate rows, checking that all rows share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NeighborError> {
        let dim = rows.first().ok_or(NeighborError::EmptyIndex)?.len();
        let mut pts = Vec::with_capacity(rows.len());
        for (id, r) in rows.iter().enumerate() {
            if r.len() != dim || dim == 0 || dim > MAX_DIM {
                return Err(NeighborError::DimensionMismatch {
                    id,
                    expected: dim,
                    found: r.len(),
                });
            }
            pts.push(Vector::from_slice(r).expect("length checked"));
        }
        Self::build(&pts, dim)
    }

    fn build_range(&mut self, lo: usize, hi: usize) {
        if hi - lo <= 1 {
            return;
        }
        let axis = self.widest_axis(lo, hi);
        let mid = lo + (hi - lo) / 2;
        let points = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            points[a as usize][axis]
                .total_cmp(&points[b as usize][axis])
                .then(a.cmp(&b))
        });
        self.split_axis[mid] = axis as u8;
        self.build_range(lo, mid);
        self.build_range(mid + 1, hi);
    }

    fn widest_axis(&self, lo: usize, hi: usize) -> usize {
        let mut min = [f64::INFINITY; MAX_DIM];
        let mut max = [f64::NEG_INFINITY; MAX_DIM];
        for &id in &self.order[lo..hi] {
            let p = self.points[id as usize];
            for a in 0..self.dim {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        (0..self.dim)
            .max_by(|&a, &b| {
                (max[a] - min[a])
                    .total_cmp(&(max[b] - min[b]))
                    .then(b.cmp(&a))
            })
            .unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of levels of the tree.
    pub fn depth(&self) -> usize {
        fn depth_of(len: usize) -> usize {
            if len == 0 {
                0
            } else {
                let left = len / 2;
                1 + depth_of(left).max(depth_of(len - left - 1))
            }
        }
        depth_of(self.points.len())
    }

    /// Point id stored at the root node.
    pub fn root(&self) -> usize {
        self.order[self.order.len() / 2] as usize
    }

    /// Every node in layout order as `(point id, split axis)`.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.order
            .iter()
            .zip(&self.split_axis)
            .map(|(&id, &a)| (id as usize, a as usize))
    }

    /// Depth-first search. `rd` is the squared distance from `q` to the cell
    /// of the current subtree and `off` its per-axis components; a subtree is
    /// skipped once its cell lies strictly beyond the current k-th distance,
    /// so equidistant points with a smaller id are still found.
    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        lo: usize,
        hi: usize,
        q: Vector,
        exclude: Option<usize>,
        best: &mut Best,
        cost: &mut CostCounters,
        rd: f64,
        off: &mut [f64; MAX_DIM],
    ) {
        if lo >= hi || rd > best.bound() {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = self.layout[mid];
        cost.nodes_visited += 1;
        if hi - lo == 1 {
            self.offer(mid, q, exclude, best, cost);
            return;
        }
        let axis = self.split_axis[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, q, exclude, best, cost, rd, off);
        // The node point lies on the splitting plane, so the far cell's
        // distance bounds it from below as well.
        let old = off[axis];
        let far_rd = rd - old * old + diff * diff;
        if far_rd <= best.bound() {
            self.offer(mid, q, exclude, best, cost);
            off[axis] = diff;
            self.search(far.0, far.1, q, exclude, best, cost, far_rd, off);
            off[axis] = old;
        }
    }

    fn offer(
        &self,
        at: usize,
        q: Vector,
        exclude: Option<usize>,
        best: &mut Best,
        cost: &mut CostCounters,
    ) {
        let id = self.order[at] as usize;
        if exclude != Some(id) {
            cost.distance_evaluations += 1;
            best.offer(Neighbor {
                id,
                dist_sq: q.dist_sq(self.layout[at]),
            });
        }
    }
}

impl NeighborSearch for KdTree {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn point(&self, id: usize) -> Vector {
        self.points[id]
    }

    fn knn(
        &self,
        x: Vector,
        k: usize,
        exclude: Option<usize>,
    ) -> Result<NeighborList, NeighborError> {
        check_k(k, self.points.len(), exclude)?;
        let mut best = Best::new(k);
        let mut cost = CostCounters::default();
        let mut off = [0.0; MAX_DIM];
        self.search(
            0,
            self.points.len(),
            x,
            exclude,
            &mut best,
            &mut cost,
            0.0,
            &mut off,
        );
        self.counters.add(cost);
        Ok(NeighborList(best.into_sorted()))
    }

    fn read_counters(&self) -> CostCounters {
        self.counters.read()
    }

    fn reset_counters(&self) {
        self.counters.reset()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::exhaustive_knn;
    use proptest::prelude::*;

    fn on_line(xs: &[f64]) -> Vec<Vector> {
        xs.iter().map(|&x| Vector([x, 0.0, 0.0])).collect()
    }

    #[test]
    fn single_point_tree() {
        let t = KdTree::build(&on_line(&[2.5]), 1).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.root(), 0);
        let l = t.knn(Vector([0.0, 0.0, 0.0]), 1, None).unwrap();
        assert_eq!(l.ids(), vec![0]);
    }

    #[test]
    fn eight_points_split_at_median() {
        let xs: Vec<f64> = (0..8).map(f64::from).collect();
        let t = KdTree::build(&on_line(&xs), 1).unwrap();
        // Upper median of 0..7 is 4; the halves {0..3} and {5..7} recurse.
        assert_eq!(t.root(), 4);
        assert_eq!(t.depth(), 4);
        let mut ids: Vec<usize> = t.nodes().map(|(id, _)| id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn build_errors() {
        assert_eq!(
            KdTree::build(&[], 2).unwrap_err(),
            NeighborError::EmptyIndex
        );
        let rows = vec![vec![0.0, 1.0], vec![2.0]];
        assert!(matches!(
            KdTree::from_rows(&rows),
            Err(NeighborError::DimensionMismatch { id: 1, .. })
        ));
        let pts = vec![Vector([0.0, 1.0, 0.0])];
        assert!(KdTree::build(&pts, 1).is_err());
    }

    #[test]
    fn duplicates_are_kept() {
        let t = KdTree::build(&on_line(&[1.0, 1.0, 1.0, 2.0]), 1).unwrap();
        let l = t.knn(Vector([1.0, 0.0, 0.0]), 3, None).unwrap();
        assert_eq!(l.ids(), vec![0, 1, 2]);
        let l = t.knn(Vector([1.0, 0.0, 0.0]), 2, Some(0)).unwrap();
        assert_eq!(l.ids(), vec![1, 2]);
    }

    #[test]
    fn line_queries() {
        let t = KdTree::build(&on_line(&[0.0, 1.0, 2.0, 3.0, 4.0]), 1).unwrap();
        let l = t.knn(Vector([-0.1, 0.0, 0.0]), 2, None).unwrap();
        assert_eq!(l.ids(), vec![0, 1]);
        let l = t.knn(Vector([0.0, 0.0, 0.0]), 2, Some(0)).unwrap();
        assert_eq!(l.ids(), vec![1, 2]);
        let l = t.knn(Vector([2.0, 0.0, 0.0]), 4, Some(2)).unwrap();
        assert_eq!(l.ids(), vec![1, 3, 0, 4]);
        assert!(t.knn(Vector::ZERO, 5, Some(2)).is_err());
        assert!(t.knn(Vector::ZERO, 0, None).is_err());
    }

    #[test]
    fn equidistant_tie_prefers_lower_id() {
        let mut pts = on_line(&[10.0; 8]);
        pts[3] = Vector([1.0, 0.0, 0.0]);
        pts[7] = Vector([-1.0, 0.0, 0.0]);
        let t = KdTree::build(&pts, 1).unwrap();
        assert_eq!(t.knn(Vector::ZERO, 1, None).unwrap().ids(), vec![3]);
    }

    #[test]
    fn counters_reset_and_accumulate() {
        let t = KdTree::build(&on_line(&[0.0, 1.0, 2.0, 3.0]), 1).unwrap();
        assert_eq!(t.read_counters(), CostCounters::default());
        t.knn(Vector::ZERO, 1, None).unwrap();
        let c = t.read_counters();
        assert!(c.distance_evaluations > 0 && c.nodes_visited >= c.distance_evaluations);
        t.reset_counters();
        assert_eq!(t.read_counters(), CostCounters::default());
    }

    fn instance() -> impl Strategy<Value = (usize, Vec<Vector>, Vector, usize, bool)> {
        (1usize..=3, 2usize..=96).prop_flat_map(|(dim, n)| {
            // Coarse integer grid to force plenty of distance ties.
            let coord = prop::collection::vec(-4i32..=4, dim);
            (
                Just(dim),
                prop::collection::vec(coord.clone(), n),
                coord,
                1usize..n,
                any::<bool>(),
            )
                .prop_map(|(dim, pts, q, k, excl)| {
                    let to_v = |c: &Vec<i32>| {
                        let f: Vec<f64> = c.iter().map(|&v| v as f64 * 0.5).collect();
                        Vector::from_slice(&f).unwrap()
                    };
                    (dim, pts.iter().map(to_v).collect(), to_v(&q), k, excl)
                })
        })
    }

    proptest! {
        #[test]
        fn matches_exhaustive_with_ties((dim, pts, q, k, excl) in instance()) {
            let t = KdTree::build(&pts, dim).unwrap();
            let exclude = excl.then_some(0);
            let got = t.knn(q, k, exclude).unwrap();
            let want = exhaustive_knn(&pts, q, k, exclude).unwrap();
            prop_assert!(got.is_sorted());
            prop_assert_eq!(got, want);
        }

        #[test]
        fn depth_is_logarithmic(n in 1usize..2000) {
            let pts: Vec<Vector> = (0..n).map(|i| Vector([(i * 7919 % 1009) as f64, (i % 13) as f64, 0.0])).collect();
            let t = KdTree::build(&pts, 2).unwrap();
            let bound = (n as f64).log2().ceil() as usize + 1;
            prop_assert!(t.depth() <= bound);
        }
    }
}
