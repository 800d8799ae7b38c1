//! K-means over whole series using correlation distance, plus elbow
//! selection of the cluster count.
//!
//! Each input series is a point in `R^d`. Before clustering, every series is
//! centered and scaled to unit Euclidean norm. Correlation distance is
//! unchanged by this (it is invariant under positive affine maps of either
//! argument), and in the standardized space the arithmetic-mean centroid is
//! the exact minimizer of summed correlation distance, so the within-cluster
//! sum never increases from one half-step to the next.
//!
//! Cluster indices are zero-based.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `1 - pearson(x, mu)`, in `[0, 2]`.
pub fn correlation_distance(x: &[f64], mu: &[f64]) -> Result<f64> {
    if x.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            context: "correlation distance",
            expected: x.len(),
            found: mu.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation distance needs at least 2 points".into(),
        ));
    }
    if !x.iter().chain(mu).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("correlation distance input"));
    }
    let ux = standardize(x).ok_or_else(|| Error::DegenerateSeries("x".into()))?;
    let um = standardize(mu).ok_or_else(|| Error::DegenerateSeries("centroid".into()))?;
    Ok((1.0 - dot(&ux, &um)).clamp(0.0, 2.0))
}

/// Centers and scales to unit norm; `None` for a constant series.
pub(crate) fn standardize(x: &[f64]) -> Option<Vec<f64>> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let norm = dot(&centered, &centered).sqrt();
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if norm <= 1e-12 * scale * (x.len() as f64).sqrt() {
        return None;
    }
    Some(centered.into_iter().map(|v| v / norm).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Distance from a standardized series to a centroid in standardized space.
/// A zero-norm centroid carries no direction and sits at distance 1.
fn unit_distance(u: &[f64], centroid: &[f64]) -> f64 {
    let norm = dot(centroid, centroid).sqrt();
    if norm <= 1e-15 {
        return 1.0;
    }
    (1.0 - dot(u, centroid) / norm).clamp(0.0, 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the largest Euclidean centroid shift.
    pub tol: f64,
    /// Independent seeded initializations; the lowest final WCSS wins.
    pub restarts: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            max_iter: 300,
            tol: 1e-6,
            restarts: 10,
        }
    }
}

/// Result of [`kmeans_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    /// Mean of the member series in standardized space.
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Final within-cluster sum of correlation distances.
    pub wcss: f64,
    /// WCSS after every assignment and every centroid update of the winning run.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
}

impl ClusterModel {
    /// Nearest centroid by correlation distance; ties go to the lower index.
    pub fn assign(&self, x: &[f64]) -> Result<usize> {
        let d = self.centroids.first().map_or(0, Vec::len);
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                context: "cluster assignment",
                expected: d,
                found: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("series to assign"));
        }
        let u = standardize(x).ok_or_else(|| Error::DegenerateSeries("input".into()))?;
        Ok(nearest(&u, &self.centroids).0)
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn nearest(u: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = unit_distance(u, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn validate_series(series: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = series.first().map_or(0, Vec::len);
    if d < 2 {
        return Err(Error::InsufficientData(
            "series need at least 2 time points".into(),
        ));
    }
    series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "series length",
                    expected: d,
                    found: s.len(),
                });
            }
            if !s.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("clustered series"));
            }
            standardize(s).ok_or_else(|| Error::DegenerateSeries(format!("#{i}")))
        })
        .collect()
}

pub fn kmeans_fit(series: &[Vec<f64>], config: &KMeansConfig) -> Result<ClusterModel> {
    let n = series.len();
    if config.k == 0 || config.k > n {
        return Err(Error::invalid(format!(
            "k = {} outside [1, {n}]",
            config.k
        )));
    }
    let units = validate_series(series)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<ClusterModel> = None;
    for _ in 0..config.restarts.max(1) {
        let init: Vec<usize> = sample(&mut rng, n, config.k).into_vec();
        let run = lloyd(&units, init, config);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(units: &[Vec<f64>], init: Vec<usize>, config: &KMeansConfig) -> ClusterModel {
    let k = config.k;
    let d = units[0].len();
    let mut centroids: Vec<Vec<f64>> = init.iter().map(|&i| units[i].clone()).collect();
    let mut assignments = vec![0; units.len()];
    let mut dists = vec![0.0; units.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    for _ in 0..config.max_iter.max(1) {
        iterations += 1;
        for (i, u) in units.iter().enumerate() {
            let (j, dist) = nearest(u, &centroids);
            assignments[i] = j;
            dists[i] = dist;
        }
        repair_empty(units, &mut centroids, &mut assignments, &mut dists);
        history.push(dists.iter().sum());

        let mut next = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (u, &a) in units.iter().zip(&assignments) {
            counts[a] += 1;
            for (c, v) in next[a].iter_mut().zip(u) {
                *c += v;
            }
        }
        let mut shift = 0.0_f64;
        for ((c, old), &m) in next.iter_mut().zip(&centroids).zip(&counts) {
            for v in c.iter_mut() {
                *v /= m as f64;
            }
            let moved = c.iter().zip(old).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            shift = shift.max(moved);
        }
        centroids = next;
        for (i, u) in units.iter().enumerate() {
            dists[i] = unit_distance(u, &centroids[assignments[i]]);
        }
        history.push(dists.iter().sum());
        if shift <= config.tol {
            break;
        }
    }

    ClusterModel {
        k,
        centroids,
        assignments,
        wcss: *history.last().unwrap_or(&0.0),
        wcss_history: history,
        iterations,
    }
}

/// Moves the globally worst-fit series into each empty cluster.
fn repair_empty(
    units: &[Vec<f64>],
    centroids: &mut [Vec<f64>],
    assignments: &mut [usize],
    dists: &mut [f64],
) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..units.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .fold(None::<usize>, |best, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n guarantees a cluster with two members");
        centroids[empty] = units[donor].clone();
        assignments[donor] = empty;
        dists[donor] = 0.0;
    }
}

/// Outcome of [`elbow_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct Elbow {
    pub k: usize,
    /// `(k, wcss)` for every k tried.
    pub curve: Vec<(usize, f64)>,
    /// True when the curve carried no curvature and the smallest interior k was returned.
    pub flat: bool,
}

/// Picks the k with the largest second difference of the WCSS curve.
///
/// `ks` must be consecutive. Ties go to the smaller k.
pub fn elbow_from_curve(curve: &[(usize, f64)]) -> Result<(usize, bool)> {
    if curve.len() < 3 {
        return Err(Error::invalid(
            "elbow selection needs at least 3 values of k",
        ));
    }
    let mut best: Option<(usize, f64)> = None;
    for w in curve.windows(3) {
        let second = w[0].1 - 2.0 * w[1].1 + w[2].1;
        if best.is_none_or(|(_, b)| second > b) {
            best = Some((w[1].0, second));
        }
    }
    let (k, curvature) = best.expect("non-empty window set");
    let top = curve.iter().fold(0.0_f64, |m, (_, w)| m.max(w.abs()));
    if curvature <= 1e-12 * top.max(1.0) {
        return Ok((curve[1].0, true));
    }
    Ok((k, false))
}

pub fn elbow_select(
    series: &[Vec<f64>],
    k_range: std::ops::RangeInclusive<usize>,
    base: &KMeansConfig,
) -> Result<Elbow> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo == 0 || hi > series.len() || lo > hi {
        return Err(Error::invalid(format!(
            "k range {lo}..={hi} outside [1, {}]",
            series.len()
        )));
    }
    if hi - lo < 2 {
        return Err(Error::invalid(
            "elbow selection needs at least 3 values of k",
        ));
    }
    let mut curve = Vec::with_capacity(hi - lo + 1);
    for k in k_range {
        let cfg = KMeansConfig { k, ..base.clone() };
        curve.push((k, kmeans_fit(series, &cfg)?.wcss));
    }
    let (k, flat) = elbow_from_curve(&curve)?;
    if flat {
        log::warn!("WCSS curve is flat; returning smallest interior k = {k}");
    }
    Ok(Elbow { k, curve, flat })
}
