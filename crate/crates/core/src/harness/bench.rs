//! Neighbor-search cost benchmark.
//!
//! One sweep answers a k-nearest query for every one of `N` uniformly
//! scattered points. The exhaustive sweep scans all `N` points per query. The
//! tree sweep searches a k-d tree built on a `p`% subsample with
//! `k = ceil(rho* N_c)`, the neighbor search of one mesoscopic step.
//! Acceptance is keyed to the distance-evaluation counters; wall time is
//! reported for reference only.

use std::io::Write;
use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::meso::draw_subsample;
use crate::model::subsample_k;
use crate::rng::{step_rng, Phase};
use crate::snapshot::format_g17;
use crate::topology::{Exhaustive, KdTree, NeighborSearch};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    KdTree,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::KdTree => "kdtree",
        }
    }
}

/// Cost of one sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub n: usize,
    pub rho_star: f64,
    pub p: f64,
    pub n_sub: usize,
    pub k: usize,
    pub distance_evaluations: u64,
    pub nodes_visited: u64,
    pub wall_seconds: f64,
}

/// `n` points uniform in the unit cube of dimension `dim`.
pub fn uniform_points(n: usize, dim: usize, seed: u64) -> Vec<Vector> {
    (0..n)
        .map(|i| {
            let mut rng = step_rng(seed, 0, Phase::Init, i as u64);
            let mut p = Vector::ZERO;
            for a in 0..dim {
                p[a] = rng.random::<f64>();
            }
            p
        })
        .collect()
}

/// Exhaustive sweep over all `n` points with `k = ceil(rho* n)`.
pub fn exhaustive_sweep(points: &[Vector], dim: usize, rho_star: f64) -> Result<BenchRow> {
    let n = points.len();
    let k = subsample_k(rho_star, n).clamp(1, n);
    let index = Exhaustive::build(points, dim)?;
    let start = Instant::now();
    for p in points {
        index.knn(*p, k, None)?;
    }
    let c = index.read_counters();
    Ok(BenchRow {
        method: Method::Exhaustive,
        n,
        rho_star,
        p: 100.0,
        n_sub: n,
        k,
        distance_evaluations: c.distance_evaluations,
        nodes_visited: c.nodes_visited,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Tree sweep over a `p`% subsample. Only query work is counted.
pub fn tree_sweep(
    points: &[Vector],
    dim: usize,
    rho_star: f64,
    p: f64,
    seed: u64,
) -> Result<BenchRow> {
    let n = points.len();
    let n_sub = ((p / 100.0 * n as f64).round() as usize).clamp(2, n);
    let ids = draw_subsample(n, n_sub, seed, 0);
    let sub_points: Vec<Vector> = ids.iter().map(|&i| points[i]).collect();
    let k = subsample_k(rho_star, n_sub).clamp(1, n_sub - 1);
    let start = Instant::now();
    let tree = KdTree::build(&sub_points, dim)?;
    let mut slot = vec![None; n];
    for (s, &i) in ids.iter().enumerate() {
        slot[i] = Some(s);
    }
    for (i, p) in points.iter().enumerate() {
        tree.knn(*p, k, slot[i])?;
    }
    let c = tree.read_counters();
    Ok(BenchRow {
        method: Method::KdTree,
        n,
        rho_star,
        p,
        n_sub,
        k,
        distance_evaluations: c.distance_evaluations,
        nodes_visited: c.nodes_visited,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// All combinations of sizes, topological masses and subsample percentages.
/// The exhaustive sweep does not depend on `p` and runs once per `(n, rho*)`.
pub fn run_benchmark(
    sizes: &[usize],
    rhos: &[f64],
    ps: &[f64],
    dim: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() || rhos.is_empty() || ps.is_empty() {
        return Err(Error::Invalid(
            "benchmark needs at least one size, rho and p".into(),
        ));
    }
    if sizes.iter().any(|&n| n < 2) {
        return Err(Error::Invalid("benchmark sizes must be at least 2".into()));
    }
    if rhos.iter().any(|&r| !(r > 0.0 && r <= 1.0)) || ps.iter().any(|&p| !(p > 0.0 && p <= 100.0))
    {
        return Err(Error::Invalid(
            "rho must lie in (0, 1] and p in (0, 100]".into(),
        ));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::Invalid(format!("dim must be 1, 2 or 3, got {dim}")));
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let points = uniform_points(n, dim, seed);
        for &rho in rhos {
            rows.push(exhaustive_sweep(&points, dim, rho)?);
            for &p in ps {
                rows.push(tree_sweep(&points, dim, rho, p, seed)?);
            }
        }
    }
    Ok(rows)
}

/// Header: `method,n,rho_star,p,n_sub,k,distance_evaluations,nodes_visited,wall_seconds`.
pub fn write_bench_csv<W: Write>(out: &mut W, rows: &[BenchRow]) -> Result<()> {
    writeln!(
        out,
        "method,n,rho_star,p,n_sub,k,distance_evaluations,nodes_visited,wall_seconds"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.n,
            format_g17(r.rho_star),
            format_g17(r.p),
            r.n_sub,
            r.k,
            r.distance_evaluations,
            r.nodes_visited,
            format_g17(r.wall_seconds)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_counts_are_quadratic() {
        let a = exhaustive_sweep(&uniform_points(100, 2, 1), 2, 0.05).unwrap();
        let b = exhaustive_sweep(&uniform_points(200, 2, 1), 2, 0.05).unwrap();
        assert_eq!(a.distance_evaluations, 100 * 100);
        assert_eq!(b.distance_evaluations, 4 * a.distance_evaluations);
    }

    #[test]
    fn counters_are_reproducible() {
        let pts = uniform_points(500, 2, 3);
        let a = tree_sweep(&pts, 2, 0.05, 20.0, 7).unwrap();
        let b = tree_sweep(&pts, 2, 0.05, 20.0, 7).unwrap();
        assert_eq!(a.distance_evaluations, b.distance_evaluations);
        assert_eq!(a.nodes_visited, b.nodes_visited);
        assert_eq!((a.n_sub, a.k), (100, 5));
    }

    #[test]
    fn smaller_subsample_is_cheaper() {
        let pts = uniform_points(2000, 2, 5);
        let small = tree_sweep(&pts, 2, 0.01, 2.0, 1).unwrap();
        let full = tree_sweep(&pts, 2, 0.01, 100.0, 1).unwrap();
        assert!(small.distance_evaluations < full.distance_evaluations);
    }

    #[test]
    fn table_layout() {
        let rows = run_benchmark(&[50, 100], &[0.1], &[50.0], 2, 0).unwrap();
        assert_eq!(rows.len(), 4);
        let mut out = Vec::new();
        write_bench_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("method,n,rho_star,p,n_sub,k,"));
        assert_eq!(text.lines().count(), 5);
        assert!(run_benchmark(&[1], &[0.1], &[50.0], 2, 0).is_err());
    }
}
