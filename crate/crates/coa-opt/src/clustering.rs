//! K-means clustering of habitats, implemented from scratch so runs stay
//! deterministic under a seeded RNG.

use rand::Rng;

use crate::error::{Error, Result};

/// Default Lloyd iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100;

/// Result of one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster label per point, each in `[0, k)`.
    pub assignments: Vec<usize>,
    /// One centroid per cluster.
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared Euclidean distances from each point to its centroid.
    pub inertia: f64,
    /// Number of assignment passes performed.
    pub iterations: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = squared_distance(point, &centroids[0]);
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = squared_distance(point, centroid);
        // ties go to the lower centroid index
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Lloyd's algorithm: centroids seeded from `k` distinct point indices drawn
/// from `rng`, points assigned to the nearest centroid (Euclidean, ties to the
/// lower index), centroids recomputed as cluster means. An empty cluster is
/// re-seeded with the point currently farthest from its assigned centroid.
/// Stops when assignments are stable or after `max_iter` passes.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    max_iter: usize,
    rng: &mut impl Rng,
) -> Result<Clustering> {
    if k < 1 {
        return Err(Error::Domain("kmeans requires k >= 1".into()));
    }
    if k > points.len() {
        return Err(Error::Domain(format!(
            "kmeans requires k <= number of points ({} > {})",
            k,
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Domain("kmeans points differ in dimension".into()));
    }

    let mut centroids: Vec<Vec<f64>> = rand::seq::index::sample(rng, points.len(), k)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();

    let mut assignments = vec![0usize; points.len()];
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        let next: Vec<usize> = points
            .iter()
            .map(|p| nearest_centroid(p, &centroids))
            .collect();
        iterations += 1;
        let stable = iterations > 1 && next == assignments;
        assignments = next;
        if stable {
            break;
        }

        recompute_centroids(points, &assignments, &mut centroids);
    }

    repair_empty_clusters(points, &mut assignments, &mut centroids);

    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &c)| squared_distance(p, &centroids[c]))
        .sum();

    Ok(Clustering {
        assignments,
        centroids,
        inertia,
        iterations,
    })
}

fn recompute_centroids(points: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let k = centroids.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (acc, v) in sums[c].iter_mut().zip(p) {
            *acc += v;
        }
    }

    let mut reseeded: Vec<usize> = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            for (acc, out) in sums[c].iter().zip(centroids[c].iter_mut()) {
                *out = acc / counts[c] as f64;
            }
        } else if let Some(far) = farthest_point(points, assignments, centroids, &reseeded) {
            centroids[c] = points[far].clone();
            reseeded.push(far);
        }
    }
}

/// Index of the point with the largest distance to its assigned centroid,
/// skipping points already used to re-seed a cluster in this pass. Ties go to
/// the lower point index.
fn farthest_point(
    points: &[Vec<f64>],
    assignments: &[usize],
    centroids: &[Vec<f64>],
    exclude: &[usize],
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        let d = squared_distance(p, &centroids[assignments[i]]);
        if best.map_or(true, |(_, bd)| d > bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Guarantees every cluster owns at least one point. Duplicate points can
/// leave a cluster empty even after in-loop re-seeding (ties always resolve to
/// the lower index), so each empty cluster steals the point farthest from its
/// centroid among clusters that can spare one.
fn repair_empty_clusters(
    points: &[Vec<f64>],
    assignments: &mut [usize],
    centroids: &mut [Vec<f64>],
) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &c in assignments.iter() {
        counts[c] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[assignments[i]] < 2 {
                continue;
            }
            let d = squared_distance(p, &centroids[assignments[i]]);
            if donor.map_or(true, |(_, bd)| d > bd) {
                donor = Some((i, d));
            }
        }
        let (i, _) = donor.expect("k <= points guarantees a donor exists");
        counts[assignments[i]] -= 1;
        assignments[i] = c;
        counts[c] = 1;
        centroids[c] = points[i].clone();
    }
    recompute_centroids(points, assignments, centroids);
}
