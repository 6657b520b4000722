//! k-means over flattened day vectors (Euclidean distance, k-means++ seeding).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::DayMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Number of independently seeded k-means++ restarts; the lowest-inertia run wins.
    pub n_init: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 300,
            n_init: 20,
        }
    }
}

/// Fitted typical-day centroids, in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClusterModel<T> {
    pub centroids: Vec<Vec<T>>,
    pub k: usize,
    pub h: usize,
    pub p: usize,
    pub inertia: T,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn from_centroids(centroids: Vec<Vec<T>>, h: usize, p: usize) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::InvalidParameter("need at least one centroid".into()));
        }
        if let Some(c) = centroids.iter().find(|c| c.len() != h * p) {
            return Err(Error::DimensionMismatch {
                expected: h * p,
                found: c.len(),
            });
        }
        Ok(Self {
            k: centroids.len(),
            centroids,
            h,
            p,
            inertia: T::zero(),
        })
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn assign(&self, day: &DayMatrix<T>) -> Result<usize> {
        day.check_geometry(self.h, self.p)?;
        Ok(nearest(&self.centroids, day.as_flat()).0)
    }

    /// Nearest centroid index and its squared distance for a flattened day.
    pub fn assign_flat(&self, x: &[T]) -> Result<(usize, T)> {
        if x.len() != self.h * self.p {
            return Err(Error::DimensionMismatch {
                expected: self.h * self.p,
                found: x.len(),
            });
        }
        Ok(nearest(&self.centroids, x))
    }

    pub fn encode_sequence(&self, days: &[DayMatrix<T>]) -> Result<Vec<usize>> {
        if days.is_empty() {
            return Err(Error::InsufficientData("no days to encode".into()));
        }
        days.iter().map(|d| self.assign(d)).collect()
    }
}

pub(crate) fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, d| acc + d)
}

fn nearest<T: Scalar, C: AsRef<[T]>>(centroids: &[C], x: &[T]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(c.as_ref(), x);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ initialization, repeated `config.n_init`
/// times from one seeded generator. Deterministic in `(days, k, seed, config)`.
pub fn fit_kmeans<T: Scalar>(
    days: &[DayMatrix<T>],
    k: usize,
    seed: u64,
    config: &KMeansConfig,
) -> Result<ClusterModel<T>> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if days.len() < k {
        return Err(Error::InfeasibleK { k, days: days.len() });
    }
    if config.max_iter == 0 || config.n_init == 0 {
        return Err(Error::InvalidParameter("max_iter and n_init must be positive".into()));
    }
    let (h, p) = (days[0].h(), days[0].p());
    for d in days {
        d.check_geometry(h, p)?;
    }
    let points: Vec<&[T]> = days.iter().map(DayMatrix::as_flat).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<LloydRun<T>> = None;
    for _ in 0..config.n_init {
        let init = kmeans_plus_plus(&points, k, &mut rng);
        let run = lloyd(&points, init, config.max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("n_init > 0");
    Ok(ClusterModel {
        centroids: best.centroids,
        k,
        h,
        p,
        inertia: best.inertia,
    })
}

fn kmeans_plus_plus<T: Scalar>(points: &[&[T]], k: usize, rng: &mut impl Rng) -> Vec<Vec<T>> {
    let m = points.len();
    let mut centroids: Vec<Vec<T>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..m)].to_vec());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|x| sq_dist(x, &centroids[0]).as_f64())
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target just past the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..m)
        };
        let c = points[idx].to_vec();
        for (w, x) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(x, &c).as_f64());
        }
        centroids.push(c);
    }
    centroids
}

pub(crate) struct LloydRun<T> {
    pub centroids: Vec<Vec<T>>,
    pub inertia: T,
    /// Inertia after every assignment step and every refinement pass.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<T>,
}

/// Lloyd iterations followed by single-point (Hartigan) moves; the two
/// alternate until neither changes the partition or `max_iter` rounds pass.
pub(crate) fn lloyd<T: Scalar>(points: &[&[T]], mut centroids: Vec<Vec<T>>, max_iter: usize) -> LloydRun<T> {
    let mut labels = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..max_iter {
        lloyd_iterations(points, &mut labels, &mut centroids, max_iter, &mut history);
        if !single_point_moves(points, &mut labels, &mut centroids) {
            break;
        }
        history.push(labelled_inertia(points, &labels, &centroids));
    }
    let inertia = labelled_inertia(points, &labels, &centroids);
    LloydRun {
        centroids,
        inertia,
        history,
    }
}

fn lloyd_iterations<T: Scalar>(
    points: &[&[T]],
    labels: &mut [usize],
    centroids: &mut [Vec<T>],
    max_iter: usize,
    history: &mut Vec<T>,
) {
    for _ in 0..max_iter {
        let mut changed = false;
        let mut inertia = T::zero();
        for (label, x) in labels.iter_mut().zip(points) {
            let (j, d) = nearest(centroids, x);
            inertia = inertia + d;
            if *label != j {
                *label = j;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            return;
        }
        update_centroids(points, labels, centroids);
    }
    // max_iter hit right after an update: centroids are the means of `labels`
    history.push(labelled_inertia(points, labels, centroids));
}

/// One pass of Hartigan moves: a point leaves cluster `a` for `b` when
/// `n_b/(n_b+1)·d(x,c_b)² < n_a/(n_a−1)·d(x,c_a)²`, which strictly lowers
/// inertia. Returns whether any point moved; centroids are exact means afterwards.
fn single_point_moves<T: Scalar>(points: &[&[T]], labels: &mut [usize], centroids: &mut [Vec<T>]) -> bool {
    let k = centroids.len();
    if k < 2 {
        return false;
    }
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let shrink = T::one() - T::lit(1e-12);
    let mut moved = false;
    for (i, x) in points.iter().enumerate() {
        let a = labels[i];
        let na = counts[a];
        if na < 2 {
            continue;
        }
        let removal = T::from_count(na) / T::from_count(na - 1) * sq_dist(x, &centroids[a]);
        let (b, addition) = (0..k)
            .filter(|&j| j != a)
            .map(|j| {
                let nj = T::from_count(counts[j]);
                (j, nj / (nj + T::one()) * sq_dist(x, &centroids[j]))
            })
            .fold((a, T::infinity()), |best, c| if c.1 < best.1 { c } else { best });
        if b == a || addition >= removal * shrink {
            continue;
        }
        let (fa, fb) = (T::from_count(na), T::from_count(counts[b]));
        for (c, &v) in centroids[a].iter_mut().zip(x.iter()) {
            *c = (*c * fa - v) / (fa - T::one());
        }
        for (c, &v) in centroids[b].iter_mut().zip(x.iter()) {
            *c = (*c * fb + v) / (fb + T::one());
        }
        counts[a] -= 1;
        counts[b] += 1;
        labels[i] = b;
        moved = true;
    }
    if moved {
        cluster_means(points, labels, centroids);
    }
    moved
}

fn labelled_inertia<T: Scalar>(points: &[&[T]], labels: &[usize], centroids: &[Vec<T>]) -> T {
    points
        .iter()
        .zip(labels)
        .map(|(x, &j)| sq_dist(x, &centroids[j]))
        .fold(T::zero(), |a, b| a + b)
}

/// Means computed as offsets from each cluster's first member, so a cluster
/// of identical points gets that point back exactly.
fn cluster_means<T: Scalar>(points: &[&[T]], labels: &[usize], centroids: &mut [Vec<T>]) -> Vec<usize> {
    let dim = centroids[0].len();
    let mut counts = vec![0usize; centroids.len()];
    let mut anchors: Vec<Option<usize>> = vec![None; centroids.len()];
    let mut sums = vec![vec![T::zero(); dim]; centroids.len()];
    for (i, (x, &j)) in points.iter().zip(labels).enumerate() {
        counts[j] += 1;
        let anchor = points[*anchors[j].get_or_insert(i)];
        for ((s, &v), &r) in sums[j].iter_mut().zip(x.iter()).zip(anchor) {
            *s = *s + (v - r);
        }
    }
    for (j, c) in centroids.iter_mut().enumerate() {
        if let Some(a) = anchors[j] {
            let n = T::from_count(counts[j]);
            *c = points[a].iter().zip(&sums[j]).map(|(&r, &s)| r + s / n).collect();
        }
    }
    counts
}

/// Recomputes means; an empty cluster takes over the point farthest from its
/// own centroid (drawn from clusters with more than one member).
fn update_centroids<T: Scalar>(points: &[&[T]], labels: &mut [usize], centroids: &mut [Vec<T>]) {
    let mut counts = cluster_means(points, labels, centroids);
    let mut repaired = false;
    while let Some(empty) = counts.iter().position(|&n| n == 0) {
        let donor = points
            .iter()
            .enumerate()
            .filter(|(i, _)| counts[labels[*i]] > 1)
            .map(|(i, x)| (i, sq_dist(x, &centroids[labels[i]])))
            .fold(None::<(usize, T)>, |best, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        match donor {
            Some((i, d)) if d > T::zero() => {
                counts[labels[i]] -= 1;
                counts[empty] += 1;
                labels[i] = empty;
                centroids[empty] = points[i].to_vec();
                repaired = true;
            }
            // every point already sits on its centroid; keep the empty centroid
            _ => break,
        }
    }
    if repaired {
        cluster_means(points, labels, centroids);
    }
}
