//! Seeded k-means over catalog embeddings.
//!
//! Clusters back the diversity metrics: two videos in the same cluster are
//! treated as "the same kind of content".

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::vector::squared_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
}

impl ClusterParams {
    /// `k = ⌈√n⌉` for a catalog of `n` videos.
    pub fn with_default_k(catalog_size: usize, seed: u64, max_iters: usize) -> Self {
        Self {
            k: default_k(catalog_size),
            seed,
            max_iters,
        }
    }
}

pub fn default_k(catalog_size: usize) -> usize {
    let mut k = 0usize;
    while k * k < catalog_size {
        k += 1;
    }
    k.max(1)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClusterError {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("k must be in 1..={catalog_size}, got {k}")]
    InvalidK { k: usize, catalog_size: usize },
    #[error("max_iters must be positive")]
    ZeroIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: BTreeMap<String, usize>,
}

impl ClusterModel {
    pub fn cluster_of(&self, video_id: &str) -> Option<usize> {
        self.assignment.get(video_id).copied()
    }
}

/// Per-iteration diagnostics of a k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTrace {
    /// Within-cluster SSE after each assignment step.
    pub sse: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn build_clusters(catalog: &Catalog, params: ClusterParams) -> Result<ClusterModel, ClusterError> {
    build_clusters_traced(catalog, params).map(|(m, _)| m)
}

pub fn build_clusters_traced(
    catalog: &Catalog,
    params: ClusterParams,
) -> Result<(ClusterModel, ClusterTrace), ClusterError> {
    if catalog.is_empty() {
        return Err(ClusterError::EmptyCatalog);
    }
    if params.k == 0 || params.k > catalog.len() {
        return Err(ClusterError::InvalidK {
            k: params.k,
            catalog_size: catalog.len(),
        });
    }
    if params.max_iters == 0 {
        return Err(ClusterError::ZeroIterations);
    }
    let ids: Vec<&str> = catalog.iter().map(|e| e.video_id.as_str()).collect();
    let points: Vec<&[f64]> = catalog.iter().map(|e| e.vector.as_slice()).collect();
    let (centroids, labels, trace) = lloyd(&points, params);
    let assignment = ids
        .into_iter()
        .zip(labels)
        .map(|(id, c)| (String::from(id), c))
        .collect();
    Ok((
        ClusterModel {
            k: params.k,
            centroids,
            assignment,
        },
        trace,
    ))
}

fn lloyd(points: &[&[f64]], params: ClusterParams) -> (Vec<Vec<f64>>, Vec<usize>, ClusterTrace) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = plus_plus_init(points, params.k, &mut rng);
    let mut labels: Vec<usize> = vec![usize::MAX; points.len()];
    let mut trace = ClusterTrace {
        sse: Vec::new(),
        iterations: 0,
        converged: false,
    };

    for _ in 0..params.max_iters {
        let mut changed = false;
        let mut sse = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, d) = nearest(p, &centroids);
            sse += d;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        trace.sse.push(sse);
        trace.iterations += 1;
        if !changed {
            trace.converged = true;
            break;
        }
        update_centroids(points, &labels, &mut centroids);
    }
    (centroids, labels, trace)
}

/// Index and squared distance of the closest centroid; ties go to the
/// lowest index.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn update_centroids(points: &[&[f64]], labels: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let k = centroids.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p.iter()) {
            *s += x;
        }
    }
    let mut taken: Vec<usize> = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            centroids[c] = sums[c].iter().map(|s| s / n).collect();
        }
    }
    // Empty clusters are re-seeded from the point farthest from its own centroid.
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = points
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken.contains(i))
            .map(|(i, p)| (i, squared_distance(p, &centroids[labels[i]])))
            .fold(None, |acc: Option<(usize, f64)>, (i, d)| match acc {
                Some((_, bd)) if bd >= d => acc,
                _ => Some((i, d)),
            });
        if let Some((i, _)) = far {
            taken.push(i);
            centroids[c] = points[i].to_vec();
        }
    }
}

fn plus_plus_init(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
            pick.unwrap_or(0)
        } else {
            // all remaining mass is on duplicates of existing centers
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].to_vec()).collect()
}
