use super::{check_k, CostCounters, CounterCell, Neighbor, NeighborList, NeighborSearch};
use crate::error::NeighborError;
use crate::vector::Vector;

fn scan(
    points: &[Vector],
    x: Vector,
    k: usize,
    exclude: Option<usize>,
) -> Result<(NeighborList, CostCounters), NeighborError> {
    if points.is_empty() {
        return Err(NeighborError::EmptyIndex);
    }
    check_k(k, points.len(), exclude)?;
    let mut all: Vec<Neighbor> = points
        .iter()
        .enumerate()
        .filter(|(id, _)| Some(*id) != exclude)
        .map(|(id, p)| Neighbor {
            id,
            dist_sq: x.dist_sq(*p),
        })
        .collect();
    let evaluated = all.len() as u64;
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, |a, b| a.cmp_key(b));
        all.truncate(k);
    }
    all.sort_unstable_by(|a, b| a.cmp_key(b));
    Ok((
        NeighborList(all),
        CostCounters {
            distance_evaluations: evaluated,
            nodes_visited: points.len() as u64,
        },
    ))
}

/// Reference k-nearest search: a full distance scan, then selection of the
/// `k` smallest `(distance, id)` keys.
pub fn exhaustive_knn(
    points: &[Vector],
    x: Vector,
    k: usize,
    exclude: Option<usize>,
) -> Result<NeighborList, NeighborError> {
    scan(points, x, k, exclude).map(|(l, _)| l)
}

/// [`exhaustive_knn`] behind the [`NeighborSearch`] interface, with counters.
#[derive(Clone, Debug)]
pub struct Exhaustive {
    points: Vec<Vector>,
    counters: CounterCell,
}

impl Exhaustive {
    pub fn build(points: &[Vector], _dim: usize) -> Result<Self, NeighborError> {
        if points.is_empty() {
            return Err(NeighborError::EmptyIndex);
        }
        Ok(Exhaustive {
            points: points.to_vec(),
            counters: CounterCell::default(),
        })
    }
}

impl NeighborSearch for Exhaustive {
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
        let (list, cost) = scan(&self.points, x, k, exclude)?;
        self.counters.add(cost);
        Ok(list)
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

    fn on_line(xs: &[f64]) -> Vec<Vector> {
        xs.iter().map(|&x| Vector([x, 0.0, 0.0])).collect()
    }

    #[test]
    fn counts_every_point() {
        let pts = on_line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let e = Exhaustive::build(&pts, 1).unwrap();
        e.knn(Vector::ZERO, 2, None).unwrap();
        assert_eq!(e.read_counters().distance_evaluations, 5);
        e.reset_counters();
        e.knn(Vector::ZERO, 2, Some(0)).unwrap();
        assert_eq!(e.read_counters().distance_evaluations, 4);
    }

    #[test]
    fn excluded_query_point_yields_other() {
        let pts = on_line(&[0.0, 3.0]);
        let l = exhaustive_knn(&pts, pts[0], 1, Some(0)).unwrap();
        assert_eq!(l.ids(), vec![1]);
    }

    #[test]
    fn ties_by_id_and_full_sort() {
        let pts = on_line(&[2.0, -1.0, 1.0, -2.0, 0.0]);
        let l = exhaustive_knn(&pts, Vector::ZERO, 4, Some(4)).unwrap();
        assert_eq!(l.ids(), vec![1, 2, 0, 3]);
        assert!(l.is_sorted());
    }
}
