use std::ops::Range;

use rand::Rng;

use super::{check_k, CostCounters, CounterCell, Neighbor, NeighborList, NeighborSearch};
use crate::error::NeighborError;
use crate::vector::Vector;

/// Exact k-nearest search for points on a line.
///
/// In one dimension the k-nearest set of a query `q` is the union of the
/// `a` closest points left of `q` and the `k - a` closest points at or right
/// of `q`. Points right of `q` are walked in `(x asc, id asc)` order and
/// points left of `q` in `(x desc, id asc)` order, so both walks visit
/// candidates by increasing `(distance, id)`. The split `a` is then a
/// k-th-smallest-of-two-sorted-lists problem, solved by binary search.
#[derive(Clone, Debug)]
pub struct LineIndex {
    xs: Vec<f64>,
    /// Sorted coordinates, shared by both orders.
    sorted_x: Vec<f64>,
    /// Ids by `(x asc, id asc)`.
    asc: Vec<u32>,
    /// Ids by `(x asc, id desc)`.
    desc: Vec<u32>,
    pos_asc: Vec<u32>,
    pos_desc: Vec<u32>,
    counters: CounterCell,
}

/// The k-nearest set of one query, described by two runs of the sorted
/// orders. Runs may contain the excluded id, which is skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct LineBall {
    q: f64,
    k: usize,
    /// Number of members left of the query.
    left: usize,
    /// Partition point: count of points with `x < q`.
    split: usize,
    excl_left: Option<usize>,
    excl_right: Option<usize>,
    excluded: Option<usize>,
}

impl LineIndex {
    pub fn build(points: &[Vector], dim: usize) -> Result<Self, NeighborError> {
        if points.is_empty() {
            return Err(NeighborError::EmptyIndex);
        }
        if let Some((id, p)) = points
            .iter()
            .enumerate()
            .find(|(_, p)| p.used_dim() > 1 || !p.is_finite())
        {
            return Err(NeighborError::DimensionMismatch {
                id,
                expected: dim.min(1),
                found: p.used_dim(),
            });
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let n = xs.len();
        let mut asc: Vec<u32> = (0..n as u32).collect();
        asc.sort_unstable_by(|&a, &b| xs[a as usize].total_cmp(&xs[b as usize]).then(a.cmp(&b)));
        let mut desc = asc.clone();
        desc.sort_unstable_by(|&a, &b| xs[a as usize].total_cmp(&xs[b as usize]).then(b.cmp(&a)));
        let sorted_x = asc.iter().map(|&i| xs[i as usize]).collect();
        let mut pos_asc = vec![0u32; n];
        let mut pos_desc = vec![0u32; n];
        for (p, &id) in asc.iter().enumerate() {
            pos_asc[id as usize] = p as u32;
        }
        for (p, &id) in desc.iter().enumerate() {
            pos_desc[id as usize] = p as u32;
        }
        Ok(LineIndex {
            xs,
            sorted_x,
            asc,
            desc,
            pos_asc,
            pos_desc,
            counters: CounterCell::default(),
        })
    }

    /// Ids in `(x asc, id asc)` order.
    pub fn ascending(&self) -> &[u32] {
        &self.asc
    }

    /// Ids in `(x asc, id desc)` order.
    pub fn descending_ids(&self) -> &[u32] {
        &self.desc
    }

    fn key(&self, id: usize, q: f64) -> Neighbor {
        let d = self.xs[id] - q;
        Neighbor { id, dist_sq: d * d }
    }

    /// Computes the k-nearest set of `q` without materialising it.
    pub fn ball(
        &self,
        q: f64,
        k: usize,
        exclude: Option<usize>,
    ) -> Result<LineBall, NeighborError> {
        let n = self.xs.len();
        check_k(k, n, exclude)?;
        let split = self.sorted_x.partition_point(|&x| x < q);
        let excluded = exclude.filter(|&e| e < n);
        let (mut excl_left, mut excl_right) = (None, None);
        if let Some(e) = excluded {
            if self.xs[e] < q {
                excl_left = Some(split - 1 - self.pos_desc[e] as usize);
            } else {
                excl_right = Some(self.pos_asc[e] as usize - split);
            }
        }
        let n_left = split - usize::from(excl_left.is_some());
        let n_right = n - split - usize::from(excl_right.is_some());
        let mut ball = LineBall {
            q,
            k,
            left: 0,
            split,
            excl_left,
            excl_right,
            excluded,
        };
        let (mut lo, mut hi) = (k.saturating_sub(n_right), k.min(n_left));
        let mut cost = CostCounters::default();
        // Smallest `a` for which taking one more left member is not better
        // than keeping the last right member.
        while lo < hi {
            let a = lo + (hi - lo) / 2;
            cost.nodes_visited += 1;
            cost.distance_evaluations += 2;
            let next_left = self.key(ball.left_id(&self.desc, a), q);
            let last_right = self.key(ball.right_id(&self.asc, k - a - 1), q);
            if next_left.cmp_key(&last_right).is_lt() {
                lo = a + 1;
            } else {
                hi = a;
            }
        }
        ball.left = lo;
        self.counters.add(cost);
        Ok(ball)
    }

    /// Physical run of `desc` holding the left members, and of `asc` holding
    /// the right members. The excluded id, if inside a run, is not a member.
    pub fn runs(&self, ball: &LineBall) -> (Range<usize>, Range<usize>) {
        let left_len = ball.left + usize::from(ball.excl_left.is_some_and(|o| o < ball.left));
        let right_count = ball.k - ball.left;
        let right_len = right_count + usize::from(ball.excl_right.is_some_and(|o| o < right_count));
        (
            ball.split - left_len..ball.split,
            ball.split..ball.split + right_len,
        )
    }

    /// Member `r` of the ball, for `r < k`. Members `0..left` lie left of the
    /// query; their order inside the ball is not the distance order.
    pub fn member(&self, ball: &LineBall, r: usize) -> usize {
        if r < ball.left {
            ball.left_id(&self.desc, r)
        } else {
            ball.right_id(&self.asc, r - ball.left)
        }
    }
}

impl LineBall {
    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn excluded(&self) -> Option<usize> {
        self.excluded
    }

    pub fn query(&self) -> f64 {
        self.q
    }

    fn left_id(&self, desc: &[u32], j: usize) -> usize {
        let off = j + usize::from(self.excl_left.is_some_and(|e| e <= j));
        desc[self.split - 1 - off] as usize
    }

    fn right_id(&self, asc: &[u32], j: usize) -> usize {
        let off = j + usize::from(self.excl_right.is_some_and(|e| e <= j));
        asc[self.split + off] as usize
    }
}

impl NeighborSearch for LineIndex {
    fn len(&self) -> usize {
        self.xs.len()
    }

    fn point(&self, id: usize) -> Vector {
        Vector([self.xs[id], 0.0, 0.0])
    }

    fn knn(
        &self,
        x: Vector,
        k: usize,
        exclude: Option<usize>,
    ) -> Result<NeighborList, NeighborError> {
        let ball = self.ball(x[0], k, exclude)?;
        let mut out: Vec<Neighbor> = (0..k)
            .map(|r| self.key(self.member(&ball, r), x[0]))
            .collect();
        out.sort_by(|a, b| a.cmp_key(b));
        Ok(NeighborList(out))
    }

    fn sample_neighbor<R: Rng + ?Sized>(
        &self,
        x: Vector,
        k: usize,
        exclude: Option<usize>,
        rng: &mut R,
    ) -> Result<usize, NeighborError> {
        let ball = self.ball(x[0], k, exclude)?;
        Ok(self.member(&ball, rng.random_range(0..k)))
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
    fn left_duplicates_take_lowest_ids() {
        // Ids 0, 2, 4 share x = -1; the query at 0 needs two of them.
        let pts = on_line(&[-1.0, 5.0, -1.0, 0.5, -1.0]);
        let idx = LineIndex::build(&pts, 1).unwrap();
        let got = idx.knn(Vector::ZERO, 3, None).unwrap();
        assert_eq!(got.ids(), vec![3, 0, 2]);
    }

    #[test]
    fn runs_cover_members() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 - 9.5) * 0.3).collect();
        let pts = on_line(&xs);
        let idx = LineIndex::build(&pts, 1).unwrap();
        let ball = idx.ball(0.1, 6, Some(10)).unwrap();
        let (l, r) = idx.runs(&ball);
        let mut from_runs: Vec<usize> = idx.descending_ids()[l]
            .iter()
            .chain(&idx.ascending()[r])
            .map(|&i| i as usize)
            .filter(|&i| Some(i) != ball.excluded())
            .collect();
        from_runs.sort_unstable();
        let mut want = exhaustive_knn(&pts, Vector([0.1, 0.0, 0.0]), 6, Some(10))
            .unwrap()
            .ids();
        want.sort_unstable();
        assert_eq!(from_runs, want);
    }

    #[test]
    fn rejects_two_dimensional_points() {
        let pts = vec![Vector([0.0, 1.0, 0.0])];
        assert!(LineIndex::build(&pts, 2).is_err());
    }

    proptest! {
        #[test]
        fn matches_exhaustive(
            raw in prop::collection::vec(-6i32..6, 2..80),
            q in -7i32..7,
            k_frac in 0.0..1.0f64,
            excl in prop::option::of(0usize..80),
        ) {
            let pts = on_line(&raw.iter().map(|&v| v as f64 * 0.5).collect::<Vec<_>>());
            let n = pts.len();
            let exclude = excl.filter(|&e| e < n);
            let avail = n - usize::from(exclude.is_some());
            let k = 1 + ((avail - 1) as f64 * k_frac) as usize;
            let idx = LineIndex::build(&pts, 1).unwrap();
            let qv = Vector([q as f64 * 0.5 + 0.25 * (q % 2) as f64, 0.0, 0.0]);
            let got = idx.knn(qv, k, exclude).unwrap();
            let want = exhaustive_knn(&pts, qv, k, exclude).unwrap();
            prop_assert_eq!(got, want);
        }
    }
}
