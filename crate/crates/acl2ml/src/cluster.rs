//! Clustering over feature vectors: seeded k-means and farthest-first,
//! the granularity formula, proximity values, and multi-run frequency
//! aggregation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// User knob in 1..=5; higher granularity yields more, smaller clusters.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Granularity(u8);

impl Granularity {
    pub fn new(g: u8) -> Option<Granularity> {
        (1..=5).contains(&g).then_some(Granularity(g))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl Default for Granularity {
    fn default() -> Self {
        Granularity(3)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    KMeans,
    FarthestFirst,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::KMeans => f.write_str("kmeans"),
            Algorithm::FarthestFirst => f.write_str("farthest-first"),
        }
    }
}

/// Number of clusters for `k` objects at granularity `g`:
/// `max(1, floor(k / (10 - g)))`.
pub fn num_clusters(k: usize, g: Granularity) -> usize {
    (k / (10 - g.get() as usize)).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Member item indexes, ascending.
    pub members: Vec<usize>,
    pub centroid: Vec<f64>,
    /// Position after sorting clusters by ascending minimum member index.
    pub canonical_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Per-attribute (min, max) of the input set; distances, centroids
    /// and proximities live in the min-max normalized space.
    bounds: Vec<(f64, f64)>,
}

impl Clustering {
    /// Cluster containing the item.
    pub fn cluster_of(&self, item: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.members.contains(&item))
    }

    pub fn co_clustered(&self, a: usize, b: usize) -> bool {
        self.cluster_of(a)
            .map(|c| c.members.contains(&b))
            .unwrap_or(false)
    }

    /// Proximity of a member to its cluster: 1 for singletons and for
    /// members at the centroid, otherwise `1 - d/maxd` where `maxd` is
    /// the largest member distance to the centroid.
    pub fn proximity(&self, vectors: &[Vec<f64>], item: usize) -> f64 {
        let cluster = match self.cluster_of(item) {
            Some(c) => c,
            None => return 0.0,
        };
        let normalized = self.apply_bounds(vectors);
        proximity(&normalized, cluster, item)
    }

    fn apply_bounds(&self, vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
        vectors
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .map(|(j, x)| {
                        let (lo, hi) = self.bounds.get(j).copied().unwrap_or((0.0, 0.0));
                        if hi > lo {
                            (x - lo) / (hi - lo)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Within-cluster sum of squared distances in the normalized space.
    pub fn inertia(&self, vectors: &[Vec<f64>]) -> f64 {
        let normalized = self.apply_bounds(vectors);
        self.clusters
            .iter()
            .map(|c| {
                c.members
                    .iter()
                    .map(|&m| {
                        let d = distance(&normalized[m], &c.centroid);
                        d * d
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

pub fn proximity(vectors: &[Vec<f64>], cluster: &Cluster, item: usize) -> f64 {
    if cluster.members.len() == 1 {
        return 1.0;
    }
    let maxd = cluster
        .members
        .iter()
        .map(|&m| distance(&vectors[m], &cluster.centroid))
        .fold(0.0f64, f64::max);
    if maxd == 0.0 {
        return 1.0;
    }
    1.0 - distance(&vectors[item], &cluster.centroid) / maxd
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ClusterError {
    #[error("cannot form {n} clusters from {k} vectors")]
    TooFewVectors { n: usize, k: usize },
    #[error("no vectors to cluster")]
    Empty,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Min-max normalization of each attribute to [0,1] over the input set;
/// constant attributes collapse to 0. Distances are computed in this
/// space, matching the usual default of off-the-shelf k-means tools, so
/// no single large-magnitude cell dominates.
fn normalize(vectors: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<(f64, f64)>) {
    if vectors.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let dim = vectors[0].len();
    let mut bounds = vec![(f64::MAX, f64::MIN); dim];
    for v in vectors {
        for (j, x) in v.iter().enumerate() {
            bounds[j].0 = bounds[j].0.min(*x);
            bounds[j].1 = bounds[j].1.max(*x);
        }
    }
    let scaled = vectors
        .iter()
        .map(|v| {
            v.iter()
                .enumerate()
                .map(|(j, x)| {
                    let (lo, hi) = bounds[j];
                    if hi > lo {
                        (x - lo) / (hi - lo)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    (scaled, bounds)
}

fn mean(vectors: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let dim = vectors[members[0]].len();
    let mut m = vec![0.0; dim];
    for &i in members {
        for (j, x) in vectors[i].iter().enumerate() {
            m[j] += x;
        }
    }
    for x in &mut m {
        *x /= members.len() as f64;
    }
    m
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = distance(point, &centroids[0]);
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = distance(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn finish(
    mut groups: Vec<Vec<usize>>,
    vectors: &[Vec<f64>],
    bounds: Vec<(f64, f64)>,
    algorithm: Algorithm,
    seed: u64,
) -> Clustering {
    groups.retain(|g| !g.is_empty());
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    let clusters = groups
        .into_iter()
        .enumerate()
        .map(|(i, members)| Cluster {
            centroid: mean(vectors, &members),
            members,
            canonical_index: i,
        })
        .collect();
    Clustering {
        clusters,
        algorithm,
        seed,
        bounds,
    }
}

fn all_identical(vectors: &[Vec<f64>]) -> bool {
    vectors.windows(2).all(|w| w[0] == w[1])
}

/// Deterministic fallback for degenerate input: the first `n - 1` points
/// become singletons and the remainder pools into the last cluster.
fn degenerate_partition(k: usize, n: usize, vectors: &[Vec<f64>], algorithm: Algorithm, seed: u64) -> Clustering {
    log::warn!("degenerate input: all {} vectors identical, forcing {} clusters", k, n);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n - 1 {
        groups.push(vec![i]);
    }
    groups.push((n - 1..k).collect());
    let dim = vectors[0].len();
    finish(groups, vectors, vec![(0.0, 0.0); dim], algorithm, seed)
}

/// Lloyd's iteration with Euclidean distance and seeded random-point
/// initialization; at most 100 iterations or a centroid fixpoint. An empty
/// cluster is refilled with the point farthest from its own centroid.
pub fn kmeans(raw: &[Vec<f64>], n: usize, seed: u64) -> Result<Clustering, ClusterError> {
    let k = raw.len();
    if k == 0 {
        return Err(ClusterError::Empty);
    }
    if n > k {
        return Err(ClusterError::TooFewVectors { n, k });
    }
    if n > 1 && all_identical(raw) {
        return Ok(degenerate_partition(k, n, raw, Algorithm::KMeans, seed));
    }
    let (vectors, bounds) = normalize(raw);
    let vectors = &vectors;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indexes: Vec<usize> = (0..k).collect();
    indexes.shuffle(&mut rng);
    let mut centroids: Vec<Vec<f64>> = indexes[..n].iter().map(|&i| vectors[i].clone()).collect();

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for _ in 0..100 {
        let mut next_groups: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, v) in vectors.iter().enumerate() {
            next_groups[nearest(v, &centroids)].push(i);
        }
        // refill empties with the globally farthest point from its centroid
        loop {
            let Some(empty) = next_groups.iter().position(|g| g.is_empty()) else {
                break;
            };
            let mut worst: Option<(usize, f64)> = None;
            for (gi, g) in next_groups.iter().enumerate() {
                if g.len() < 2 {
                    continue;
                }
                for &i in g {
                    let d = distance(&vectors[i], &centroids[gi]);
                    if worst.map(|(_, wd)| d > wd).unwrap_or(true) {
                        worst = Some((i, d));
                    }
                }
            }
            let Some((stray, _)) = worst else { break };
            for g in &mut next_groups {
                g.retain(|&i| i != stray);
            }
            next_groups[empty].push(stray);
            centroids[empty] = vectors[stray].clone();
        }
        let next_centroids: Vec<Vec<f64>> = next_groups
            .iter()
            .map(|g| {
                if g.is_empty() {
                    vec![f64::MAX; vectors[0].len()]
                } else {
                    mean(vectors, g)
                }
            })
            .collect();
        let converged = next_groups == groups || next_centroids == centroids;
        groups = next_groups;
        centroids = next_centroids;
        if converged {
            break;
        }
    }
    Ok(finish(groups, vectors, bounds, Algorithm::KMeans, seed))
}

/// Farthest-first traversal: seeded first center, each next center the
/// point maximizing the distance to its nearest chosen center, then
/// assignment to the nearest center.
pub fn farthest_first(raw: &[Vec<f64>], n: usize, seed: u64) -> Result<Clustering, ClusterError> {
    let k = raw.len();
    if k == 0 {
        return Err(ClusterError::Empty);
    }
    if n > k {
        return Err(ClusterError::TooFewVectors { n, k });
    }
    if n > 1 && all_identical(raw) {
        return Ok(degenerate_partition(k, n, raw, Algorithm::FarthestFirst, seed));
    }
    let (vectors, bounds) = normalize(raw);
    let vectors = &vectors;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rand::Rng::gen_range(&mut rng, 0..k);
    let mut centers = vec![first];
    let mut dist_to_centers: Vec<f64> = vectors
        .iter()
        .map(|v| distance(v, &vectors[first]))
        .collect();
    while centers.len() < n {
        let newest = *centers.last().unwrap();
        for (i, v) in vectors.iter().enumerate() {
            let d = distance(v, &vectors[newest]);
            if d < dist_to_centers[i] {
                dist_to_centers[i] = d;
            }
        }
        let mut far = None;
        let mut far_d = -1.0;
        for i in 0..k {
            if centers.contains(&i) {
                continue;
            }
            if dist_to_centers[i] > far_d {
                far_d = dist_to_centers[i];
                far = Some(i);
            }
        }
        centers.push(far.expect("n <= k leaves a point available"));
    }
    let centroids: Vec<Vec<f64>> = centers.iter().map(|&i| vectors[i].clone()).collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, v) in vectors.iter().enumerate() {
        groups[nearest(v, &centroids)].push(i);
    }
    Ok(finish(groups, vectors, bounds, Algorithm::FarthestFirst, seed))
}

pub fn run_algorithm(
    algorithm: Algorithm,
    vectors: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> Result<Clustering, ClusterError> {
    match algorithm {
        Algorithm::KMeans => kmeans(vectors, n, seed),
        Algorithm::FarthestFirst => farthest_first(vectors, n, seed),
    }
}

/// Cluster of an anchor item stabilized over many runs: members are the
/// items co-clustered with the anchor in at least `threshold` of the runs.
#[derive(Clone, Debug, PartialEq)]
pub struct StableCluster {
    pub anchor: usize,
    pub members: Vec<usize>,
    /// item -> (co-clustered run count, total runs)
    pub frequency: BTreeMap<usize, (usize, usize)>,
}

impl StableCluster {
    pub fn frequency_of(&self, item: usize) -> f64 {
        match self.frequency.get(&item) {
            Some((c, t)) => *c as f64 / *t as f64,
            None => 0.0,
        }
    }
}

pub fn aggregate_runs(runs: &[Clustering], anchor: usize, threshold: f64) -> StableCluster {
    assert!(!runs.is_empty(), "aggregate_runs needs at least one run");
    let total = runs.len();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for run in runs {
        if let Some(cluster) = run.cluster_of(anchor) {
            for &m in &cluster.members {
                if m != anchor {
                    *counts.entry(m).or_insert(0) += 1;
                }
            }
        }
    }
    let mut members = vec![anchor];
    let mut frequency = BTreeMap::new();
    frequency.insert(anchor, (total, total));
    for (item, count) in counts {
        frequency.insert(item, (count, total));
        if count as f64 / total as f64 >= threshold {
            members.push(item);
        }
    }
    members.sort_unstable();
    StableCluster {
        anchor,
        members,
        frequency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: u8) -> Granularity {
        Granularity::new(n).unwrap()
    }

    #[test]
    fn granularity_formula_matches_published_headers() {
        assert_eq!(num_clusters(150, g(1)), 16);
        assert_eq!(num_clusters(150, g(2)), 18);
        assert_eq!(num_clusters(150, g(3)), 21);
        assert_eq!(num_clusters(150, g(4)), 25);
        assert_eq!(num_clusters(150, g(5)), 30);
        assert_eq!(num_clusters(100, g(3)), 14);
    }

    #[test]
    fn granularity_is_monotone_and_floored() {
        for k in 1..60 {
            for gr in 1..5u8 {
                assert!(num_clusters(k, g(gr)) <= num_clusters(k, g(gr + 1)));
            }
            assert!(num_clusters(k, g(1)) >= 1);
        }
    }

    fn two_groups() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![100.0, 100.0],
            vec![100.1, 100.0],
            vec![100.0, 100.1],
        ]
    }

    #[test]
    fn kmeans_recovers_separated_groups() {
        for seed in 0..10 {
            let c = kmeans(&two_groups(), 2, seed).unwrap();
            let members: Vec<&Vec<usize>> = c.clusters.iter().map(|c| &c.members).collect();
            assert_eq!(members, vec![&vec![0, 1, 2], &vec![3, 4, 5]], "seed {}", seed);
        }
    }

    #[test]
    fn kmeans_extremes() {
        let v = two_groups();
        let c = kmeans(&v, 1, 0).unwrap();
        assert_eq!(c.clusters.len(), 1);
        assert_eq!(c.clusters[0].members, vec![0, 1, 2, 3, 4, 5]);
        let c = kmeans(&v, v.len(), 0).unwrap();
        assert!(c.clusters.iter().all(|cl| cl.members.len() == 1));
    }

    #[test]
    fn farthest_first_colinear_points() {
        // greedy selection from any start yields centers {0-ish, 10} and
        // clusters {0, 1} and {10}
        let v = vec![vec![0.0], vec![1.0], vec![10.0]];
        for seed in 0..10 {
            let c = farthest_first(&v, 2, seed).unwrap();
            let members: Vec<&Vec<usize>> = c.clusters.iter().map(|c| &c.members).collect();
            assert_eq!(members, vec![&vec![0, 1], &vec![2]], "seed {}", seed);
        }
    }

    #[test]
    fn farthest_first_extremes() {
        let v = two_groups();
        assert_eq!(farthest_first(&v, 1, 3).unwrap().clusters.len(), 1);
        let c = farthest_first(&v, v.len(), 3).unwrap();
        assert!(c.clusters.iter().all(|cl| cl.members.len() == 1));
    }

    #[test]
    fn degenerate_input_warns_and_partitions() {
        let v = vec![vec![1.0, 2.0]; 5];
        let c = kmeans(&v, 3, 0).unwrap();
        assert_eq!(c.clusters.len(), 3);
        let total: usize = c.clusters.iter().map(|cl| cl.members.len()).sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn proximity_bounds_and_extremes() {
        let v = vec![vec![0.0], vec![1.0], vec![4.0]];
        let c = kmeans(&v, 1, 0).unwrap();
        let far = c.proximity(&v, 2);
        // farthest member of a multi-member cluster sits at proximity 0
        assert!(far.abs() < 1e-12);
        for i in 0..3 {
            let p = c.proximity(&v, i);
            assert!((0.0..=1.0).contains(&p));
        }
        let singletons = kmeans(&v, 3, 0).unwrap();
        for i in 0..3 {
            assert_eq!(singletons.proximity(&v, i), 1.0);
        }
    }

    #[test]
    fn seed_determinism() {
        let v = two_groups();
        assert_eq!(kmeans(&v, 3, 11).unwrap(), kmeans(&v, 3, 11).unwrap());
        assert_eq!(
            farthest_first(&v, 3, 11).unwrap(),
            farthest_first(&v, 3, 11).unwrap()
        );
    }

    #[test]
    fn partition_invariant() {
        let v = two_groups();
        for n in 1..=v.len() {
            for seed in 0..5 {
                for alg in [Algorithm::KMeans, Algorithm::FarthestFirst] {
                    let c = run_algorithm(alg, &v, n, seed).unwrap();
                    let mut seen = vec![false; v.len()];
                    for cl in &c.clusters {
                        assert!(!cl.members.is_empty());
                        for &m in &cl.members {
                            assert!(!seen[m], "item {} in two clusters", m);
                            seen[m] = true;
                        }
                    }
                    assert!(seen.iter().all(|&s| s));
                }
            }
        }
    }

    #[test]
    fn aggregation_thresholds() {
        let v = two_groups();
        let run1 = kmeans(&v, 2, 0).unwrap();
        let run2 = kmeans(&v, 2, 1).unwrap();
        // threshold 0 unions all co-members; threshold 1 with identical
        // runs keeps exactly the anchor's cluster
        let s = aggregate_runs(&[run1.clone(), run2.clone()], 0, 0.0);
        assert_eq!(s.members, vec![0, 1, 2]);
        let s = aggregate_runs(&[run1.clone(), run1.clone()], 0, 1.0);
        assert_eq!(s.members, vec![0, 1, 2]);

        // 2 runs, item co-clustered in 1: frequency 0.5, excluded at 0.6
        let solo = kmeans(&v, 6, 0).unwrap();
        let s = aggregate_runs(&[run1, solo], 0, 0.6);
        assert_eq!(s.frequency_of(1), 0.5);
        assert_eq!(s.members, vec![0]);
    }
}
