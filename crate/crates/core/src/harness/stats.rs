use crate::error::{Error, Result};
use crate::model::SwarmState;

/// A uniform 1-D binning of `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramSpec {
    /// Component the samples were taken from; informational.
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    pub fn new(axis: usize, lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo < hi) || bins == 0 || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Invalid(format!(
                "histogram needs lo < hi and bins >= 1, got [{lo}, {hi}] with {bins} bins"
            )));
        }
        Ok(HistogramSpec { axis, lo, hi, bins })
    }

    /// Spans the pooled range of both samples. A degenerate range is widened
    /// by one half on each side.
    pub fn pooled(axis: usize, a: &[f64], b: &[f64], bins: usize) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in a.iter().chain(b) {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if !(lo <= hi) {
            return Err(Error::Invalid("histogram of an empty sample".into()));
        }
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        Self::new(axis, lo, hi, bins)
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// Bin of `x`, or `None` outside `[lo, hi]`. `hi` itself falls in the last bin.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let b = ((x - self.lo) / self.width()) as usize;
        Some(b.min(self.bins - 1))
    }

    /// Density histogram of `sample`: bin mass divided by bin width, with
    /// masses taken relative to the whole sample.
    pub fn density(&self, sample: &[f64]) -> Result<Vec<f64>> {
        if sample.is_empty() {
            return Err(Error::Invalid("histogram of an empty sample".into()));
        }
        let mut h = vec![0.0; self.bins];
        for &x in sample {
            if let Some(b) = self.bin_of(x) {
                h[b] += 1.0;
            }
        }
        let scale = 1.0 / (sample.len() as f64 * self.width());
        h.iter_mut().for_each(|v| *v *= scale);
        Ok(h)
    }
}

/// L2 distance between the density histograms of two samples:
/// `sqrt(sum_b (h_a(b) - h_b(b))^2 * width)`.
pub fn l2_histogram_error(a: &[f64], b: &[f64], spec: &HistogramSpec) -> Result<f64> {
    let ha = spec.density(a)?;
    let hb = spec.density(b)?;
    Ok(histogram_distance(&ha, &hb, spec.width()))
}

pub fn histogram_distance(ha: &[f64], hb: &[f64], width: f64) -> f64 {
    let sq: f64 = ha.iter().zip(hb).map(|(x, y)| (x - y) * (x - y)).sum();
    (sq * width).sqrt()
}

/// Label shares at one emitted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionPoint {
    pub step: u64,
    pub time: f64,
    pub follower: f64,
    pub leader: f64,
}

/// Follower and leader shares of every snapshot, by count.
pub fn label_fraction_series(snapshots: &[SwarmState]) -> Vec<FractionPoint> {
    snapshots
        .iter()
        .map(|s| {
            let (follower, leader) = s.label_fractions();
            FractionPoint {
                step: s.step,
                time: s.time,
                follower,
                leader,
            }
        })
        .collect()
}

/// Mean leader share over the points with `time >= from_time`.
pub fn mean_leader_fraction(series: &[FractionPoint], from_time: f64) -> Option<f64> {
    let tail: Vec<f64> = series
        .iter()
        .filter(|p| p.time >= from_time)
        .map(|p| p.leader)
        .collect();
    (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components of the graph joining agents closer than
/// `link_radius` (inclusive).
pub fn cluster_count(state: &SwarmState, link_radius: f64) -> usize {
    let n = state.len();
    let r2 = link_radius * link_radius;
    let mut parent: Vec<usize> = (0..n).collect();
    let mut components = n;
    for i in 0..n {
        let xi = state.agents[i].position;
        for j in i + 1..n {
            if xi.dist_sq(state.agents[j].position) <= r2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                    components -= 1;
                }
            }
        }
    }
    components
}
