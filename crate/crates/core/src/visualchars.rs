//! Visual co-reference: k-means over face embeddings, with the number of
//! characters chosen by the Calinski-Harabasz index.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{FaceInstance, VisualChain};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the total squared centroid movement.
    pub tolerance: f64,
    pub seed: u64,
    pub restarts: usize,
    pub execution: Execution,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k_min: 2,
            k_max: 10,
            max_iterations: 100,
            tolerance: 1e-6,
            seed: 0,
            restarts: 8,
            execution: Execution::default(),
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 1 || self.k_min > self.k_max {
            return Err(Error::parameter(format!(
                "need 1 <= k_min <= k_max, got k_min={} k_max={}",
                self.k_min, self.k_max
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::parameter("max_iterations must be at least 1"));
        }
        if self.restarts < 1 {
            return Err(Error::parameter("restarts must be at least 1"));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::parameter("tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Outcome of one Lloyd run from a fixed initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after the initial assignment and after every iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub centroids: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map_or(0, Vec::len);
    if dim == 0 && !points.is_empty() {
        return Err(Error::data("embedding vectors must be non-empty"));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::data(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::data(format!("point {i} has a non-finite component")));
        }
    }
    Ok(dim)
}

/// Nearest centroid; ties go to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    sums
}

fn inertia_of(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

/// Moves the point farthest from its centroid into each empty cluster.
/// Only points from clusters with more than one member are eligible.
fn repair_empty(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[labels[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { return };
        labels[i] = empty;
        centroids[empty] = points[i].clone();
    }
}

/// Runs Lloyd's algorithm from the given centroids. Empty clusters are
/// repaired after each assignment step, so every returned cluster is
/// non-empty whenever `k <= n`.
pub fn lloyd(
    points: &[Vec<f64>],
    initial: Vec<Vec<f64>>,
    max_iterations: usize,
    tolerance: f64,
) -> Result<LloydRun> {
    let dim = check_points(points)?;
    let k = initial.len();
    if k == 0 || k > points.len() {
        return Err(Error::parameter(format!("k={k} must be in 1..={}", points.len())));
    }
    if initial.iter().any(|c| c.len() != dim) {
        return Err(Error::data("initial centroid dimension mismatch"));
    }

    let mut centroids = initial;
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    repair_empty(points, &mut labels, &mut centroids);
    centroids = means(points, &labels, k, dim);
    let mut history = vec![inertia_of(points, &labels, &centroids)];

    for _ in 0..max_iterations {
        let mut next: Vec<usize> = points
            .iter()
            .zip(&labels)
            .map(|(p, &cur)| {
                let (j, d) = nearest(p, &centroids);
                // keep the current label on ties so converged runs stay put
                if sq_dist(p, &centroids[cur]) <= d {
                    cur
                } else {
                    j
                }
            })
            .collect();
        repair_empty(points, &mut next, &mut centroids);
        if next == labels {
            break;
        }
        let updated = means(points, &next, k, dim);
        let shift: f64 = updated.iter().zip(&centroids).map(|(a, b)| sq_dist(a, b)).sum();
        labels = next;
        centroids = updated;
        history.push(inertia_of(points, &labels, &centroids));
        if shift <= tolerance {
            break;
        }
    }
    let inertia = *history.last().expect("history is never empty");
    Ok(LloydRun {
        labels,
        centroids,
        inertia,
        history,
    })
}

/// k-means++ seeding (D² sampling).
pub fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // guard against rounding landing on an already-chosen point
            if d2[pick] == 0.0 {
                pick = d2
                    .iter()
                    .enumerate()
                    .rev()
                    .find(|(_, &d)| d > 0.0)
                    .map_or(pick, |(i, _)| i);
            }
            pick
        } else {
            // all remaining mass is zero: duplicates only, pick any unused index
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// PRNG for one (seed, k, restart) triple; streams never overlap.
fn restart_rng(seed: u64, k: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | restart as u64);
    rng
}

/// Best of `cfg.restarts` k-means++ initialized Lloyd runs, by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, cfg: &ClusteringConfig) -> Result<KMeansResult> {
    cfg.validate()?;
    check_points(points)?;
    if k == 0 || k > points.len() {
        return Err(Error::parameter(format!(
            "k={k} must be in 1..={} (number of points)",
            points.len()
        )));
    }
    let runs = cfg.execution.map_range(cfg.restarts, |r| {
        let mut rng = restart_rng(cfg.seed, k, r);
        let init = kmeans_plus_plus(points, k, &mut rng);
        lloyd(points, init, cfg.max_iterations, cfg.tolerance)
    });
    let mut best: Option<LloydRun> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");
    Ok(KMeansResult {
        labels: best.labels,
        inertia: best.inertia,
        centroids: best.centroids,
    })
}

/// Calinski-Harabasz index: `(B / (k-1)) / (W / (n-k))`.
///
/// Returns `+inf` when every cluster is a point mass (`W = 0`) but clusters
/// are distinct (`B > 0`).
pub fn calinski_harabasz(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let dim = check_points(points)?;
    let n = points.len();
    if labels.len() != n {
        return Err(Error::parameter("labels and points differ in length"));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 || k >= n {
        return Err(Error::parameter(format!(
            "Calinski-Harabasz needs 2 <= k <= n-1, got k={k}, n={n}"
        )));
    }
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    if counts.contains(&0) {
        return Err(Error::parameter("every cluster label in 0..k must be used"));
    }
    let centroids = means(points, labels, k, dim);
    let overall = means(points, &vec![0; n], 1, dim).remove(0);
    let between: f64 = centroids
        .iter()
        .zip(&counts)
        .map(|(c, &m)| m as f64 * sq_dist(c, &overall))
        .sum();
    let within = inertia_of(points, labels, &centroids);
    if within == 0.0 {
        return if between > 0.0 {
            Ok(f64::INFINITY)
        } else {
            Err(Error::data("Calinski-Harabasz undefined: all points identical"))
        };
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Candidate cluster counts for `n` faces: `max(k_min, 2) ..= min(k_max, n-1)`.
pub fn candidate_ks(n: usize, cfg: &ClusteringConfig) -> std::ops::RangeInclusive<usize> {
    let lo = cfg.k_min.max(2);
    let hi = cfg.k_max.min(n.saturating_sub(1));
    lo..=hi
}

/// Clusters faces into visual chains, choosing k by the highest
/// Calinski-Harabasz score (ties toward smaller k).
///
/// When no k is evaluable (fewer than three faces, or `k_min >= n`) each
/// face becomes its own chain. When every candidate score is undefined
/// (all embeddings identical) all faces form one chain.
pub fn cluster_faces(faces: &[FaceInstance], cfg: &ClusteringConfig) -> Result<Vec<VisualChain>> {
    cfg.validate()?;
    let points: Vec<Vec<f64>> = faces.iter().map(|f| f.embedding.clone()).collect();
    check_points(&points)?;
    let n = faces.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let ks: Vec<usize> = candidate_ks(n, cfg).collect();
    if ks.is_empty() {
        return Ok(build_chains(faces, &(0..n).collect::<Vec<_>>()));
    }

    let scored = cfg
        .execution
        .map(&ks, |&k| -> Result<(usize, Option<f64>, Vec<usize>)> {
            let result = kmeans(&points, k, cfg)?;
            let score = calinski_harabasz(&points, &result.labels).ok();
            Ok((k, score, result.labels))
        });

    let mut best: Option<(f64, Vec<usize>)> = None;
    for entry in scored {
        let (_, score, labels) = entry?;
        if let Some(s) = score {
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, labels));
            }
        }
    }
    let labels = best.map_or_else(|| vec![0; n], |(_, l)| l);
    Ok(build_chains(faces, &labels))
}

/// One chain per label, chains ordered by their first face, ids `v0, v1, ...`.
fn build_chains(faces: &[FaceInstance], labels: &[usize]) -> Vec<VisualChain> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<FaceInstance>> = vec![Vec::new(); k];
    for (f, &l) in faces.iter().zip(labels) {
        groups[l].push(f.clone());
    }
    let mut chains: Vec<VisualChain> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| VisualChain::new(String::new(), g))
        .collect();
    chains.sort_by(|a, b| a.faces[0].cmp_position(&b.faces[0]));
    for (i, c) in chains.iter_mut().enumerate() {
        c.chain_id = format!("v{i}");
    }
    chains
}
