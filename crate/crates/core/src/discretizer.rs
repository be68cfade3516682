//! One-dimensional K-means and the mapping from clusters to ordered
//! emission levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::Level;
use crate::rng::StreamRng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { k: 3, seed: 0, restarts: 10, tol: 1e-10, max_iter: 300 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering<T> {
    pub centroids: Vec<T>,
    /// Cluster index per input point.
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares.
    pub inertia: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Lloyd's algorithm with k-means++ seeding; the best of `restarts` runs by
/// inertia is returned (ties go to the earliest restart). One further run
/// starts from the optimal contiguous partition of the sorted values, so the
/// result always reaches the global optimum in one dimension.
pub fn kmeans_1d<T: Real>(values: &[T], opts: &KMeansOptions) -> Result<Clustering<T>> {
    if values.is_empty() {
        return Err(Error::Empty("k-means input has no values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means input"));
    }
    if opts.k == 0 || opts.restarts == 0 {
        return Err(Error::InvalidInput("k and restarts must be positive".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    sorted.dedup();
    if sorted.len() < opts.k {
        return Err(Error::TooFewDistinct { needed: opts.k, found: sorted.len() });
    }

    let mut best: Option<Clustering<T>> = None;
    for restart in 0..opts.restarts {
        let mut rng = StreamRng::new(opts.seed, restart as u64);
        let mut run = lloyd(values, seed_plus_plus(values, opts.k, &mut rng), opts);
        hartigan_refine(values, &mut run, opts.max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let mut run = lloyd(values, optimal_contiguous_centroids(values, opts.k), opts);
    hartigan_refine(values, &mut run, opts.max_iter);
    let best = best.expect("at least one restart");
    Ok(if run.inertia < best.inertia { run } else { best })
}

/// Centroids of the minimum-inertia split of the sorted values into `k`
/// contiguous groups, by dynamic programming with divide-and-conquer
/// optimization (the split points are monotone).
fn optimal_contiguous_centroids<T: Real>(values: &[T], k: usize) -> Vec<T> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();
    let mean = sorted.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n as f64;
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, v) in sorted.iter().enumerate() {
        let c = v.to_f64_lossy() - mean;
        s1[i + 1] = s1[i] + c;
        s2[i + 1] = s2[i] + c * c;
    }
    let cost = |j: usize, i: usize| {
        let d = s1[i] - s1[j];
        ((s2[i] - s2[j]) - d * d / (i - j) as f64).max(0.0)
    };

    // prev[i]: best inertia of the first i points in m groups
    let mut prev: Vec<f64> = (0..=n).map(|i| if i == 0 { 0.0 } else { cost(0, i) }).collect();
    let mut splits: Vec<Vec<usize>> = Vec::with_capacity(k);
    splits.push(vec![0; n + 1]);
    for m in 2..=k {
        let mut cur = vec![f64::INFINITY; n + 1];
        let mut arg = vec![0usize; n + 1];
        fill_layer(m, n, m - 1, n - 1, &prev, &cost, &mut cur, &mut arg);
        prev = cur;
        splits.push(arg);
    }

    let mut bounds = vec![n];
    let mut end = n;
    for m in (1..k).rev() {
        end = splits[m][end];
        bounds.push(end);
    }
    bounds.push(0);
    bounds.reverse();
    bounds
        .windows(2)
        .map(|w| {
            let group = &sorted[w[0]..w[1]];
            group.iter().fold(T::zero(), |s, &v| s + v) / T::lit(group.len() as f64)
        })
        .collect()
}

/// Fills `cur[i]` for `i` in `lo..=hi`, knowing the optimal last split lies
/// in `opt_lo..=opt_hi`.
#[allow(clippy::too_many_arguments)]
fn fill_layer(
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
    prev: &[f64],
    cost: &impl Fn(usize, usize) -> f64,
    cur: &mut [f64],
    arg: &mut [usize],
) {
    if lo > hi {
        return;
    }
    let mid = (lo + hi) / 2;
    let mut best = (f64::INFINITY, opt_lo);
    for (j, &p) in prev.iter().enumerate().take(opt_hi.min(mid - 1) + 1).skip(opt_lo) {
        let v = p + cost(j, mid);
        if v < best.0 {
            best = (v, j);
        }
    }
    cur[mid] = best.0;
    arg[mid] = best.1;
    if mid > lo {
        fill_layer(lo, mid - 1, opt_lo, best.1, prev, cost, cur, arg);
    }
    fill_layer(mid + 1, hi, best.1, opt_hi, prev, cost, cur, arg);
}

/// Single-point transfers that lower the inertia (Hartigan's criterion),
/// applied after Lloyd has converged. Each accepted move strictly decreases
/// the objective, so the loop terminates; `max_passes` bounds it anyway.
fn hartigan_refine<T: Real>(values: &[T], c: &mut Clustering<T>, max_passes: usize) {
    let k = c.centroids.len();
    let mut counts = vec![0usize; k];
    let mut sums = vec![T::zero(); k];
    for (&a, &x) in c.assignment.iter().zip(values) {
        counts[a] += 1;
        sums[a] = sums[a] + x;
    }
    let margin = T::one() + T::lit(1e-12);
    let mut moved_any = false;
    for _ in 0..max_passes {
        let mut moved = false;
        for (i, &x) in values.iter().enumerate() {
            let a = c.assignment[i];
            if counts[a] < 2 {
                continue;
            }
            let na = T::lit(counts[a] as f64);
            let remove = na / (na - T::one()) * sq(x - c.centroids[a]);
            let mut best: Option<(usize, T)> = None;
            for b in (0..k).filter(|&b| b != a) {
                let nb = T::lit(counts[b] as f64);
                let add = nb / (nb + T::one()) * sq(x - c.centroids[b]);
                if best.is_none_or(|(_, v)| add < v) {
                    best = Some((b, add));
                }
            }
            if let Some((b, add)) = best {
                if add * margin < remove {
                    counts[a] -= 1;
                    counts[b] += 1;
                    sums[a] = sums[a] - x;
                    sums[b] = sums[b] + x;
                    c.centroids[a] = sums[a] / T::lit(counts[a] as f64);
                    c.centroids[b] = sums[b] / T::lit(counts[b] as f64);
                    c.assignment[i] = b;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    if moved_any {
        for (a, &x) in c.assignment.iter_mut().zip(values) {
            *a = nearest(x, &c.centroids);
        }
        c.inertia = values.iter().zip(&c.assignment).fold(T::zero(), |s, (&x, &a)| s + sq(x - c.centroids[a]));
    }
}

fn seed_plus_plus<T: Real>(values: &[T], k: usize, rng: &mut StreamRng) -> Vec<T> {
    let mut centers = Vec::with_capacity(k);
    centers.push(values[rng.below(values.len() as u64) as usize]);
    let mut d2: Vec<f64> = values.iter().map(|&x| sq(x - centers[0]).to_f64_lossy()).collect();
    while centers.len() < k {
        let next = values[rng.weighted_index(&d2)];
        centers.push(next);
        for (d, &x) in d2.iter_mut().zip(values) {
            *d = d.min(sq(x - next).to_f64_lossy());
        }
    }
    centers
}

#[inline]
fn sq<T: Real>(x: T) -> T {
    x * x
}

/// Nearest centroid; ties resolve to the lower index.
#[inline]
fn nearest<T: Real>(x: T, centroids: &[T]) -> usize {
    let mut best = 0;
    let mut best_d = sq(x - centroids[0]);
    for (j, &c) in centroids.iter().enumerate().skip(1) {
        let d = sq(x - c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn lloyd<T: Real>(values: &[T], mut centroids: Vec<T>, opts: &KMeansOptions) -> Clustering<T> {
    let k = centroids.len();
    let tol = T::lit(opts.tol);
    let mut assignment = vec![0usize; values.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        for (a, &x) in assignment.iter_mut().zip(values) {
            *a = nearest(x, &centroids);
        }
        let mut sums = vec![T::zero(); k];
        let mut counts = vec![0usize; k];
        for (&a, &x) in assignment.iter().zip(values) {
            sums[a] = sums[a] + x;
            counts[a] += 1;
        }
        let mut next = centroids.clone();
        for j in 0..k {
            if counts[j] > 0 {
                next[j] = sums[j] / T::lit(counts[j] as f64);
            }
        }
        // an emptied cluster takes over the point farthest from its centroid
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..values.len())
                    .max_by(|&a, &b| {
                        let da = sq(values[a] - next[assignment[a]]);
                        let db = sq(values[b] - next[assignment[b]]);
                        da.partial_cmp(&db).expect("finite").then(b.cmp(&a))
                    })
                    .expect("non-empty input");
                next[j] = values[far];
                counts[j] = 1;
            }
        }
        let shift = centroids.iter().zip(&next).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        centroids = next;
        if shift < tol {
            converged = true;
            break;
        }
    }
    for (a, &x) in assignment.iter_mut().zip(values) {
        *a = nearest(x, &centroids);
    }
    let inertia = values.iter().zip(&assignment).fold(T::zero(), |s, (&x, &a)| s + sq(x - centroids[a]));
    Clustering { centroids, assignment, inertia, iterations, converged }
}

/// Ordered level per row plus the cut points between adjacent levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSeries {
    pub levels: Vec<Level>,
    /// Upper bounds of levels 1 and 2 (midpoints between sorted centroids);
    /// absent when the levels did not come from a clustering.
    pub thresholds: Option<[f64; 2]>,
}

impl LevelSeries {
    pub fn from_levels(levels: Vec<Level>) -> Self {
        Self { levels, thresholds: None }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Labels a new value with the stored thresholds (boundary values take
    /// the lower level).
    pub fn classify(&self, x: f64) -> Option<Level> {
        let [t1, t2] = self.thresholds?;
        Some(if x <= t1 {
            Level::Low
        } else if x <= t2 {
            Level::Medium
        } else {
            Level::High
        })
    }
}

/// Relabels a three-cluster partition so that levels follow ascending
/// centroids.
pub fn assign_levels<T: Real>(clustering: &Clustering<T>, values: &[T]) -> Result<LevelSeries> {
    if clustering.centroids.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "level assignment needs k = 3, got k = {}",
            clustering.centroids.len()
        )));
    }
    if values.len() != clustering.assignment.len() {
        return Err(Error::InvalidInput(format!(
            "{} values supplied for a clustering of {} points",
            values.len(),
            clustering.assignment.len()
        )));
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| clustering.centroids[a].partial_cmp(&clustering.centroids[b]).expect("finite"));
    let mut rank = [0usize; 3];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let sorted: Vec<f64> = order.iter().map(|&c| clustering.centroids[c].to_f64_lossy()).collect();
    let thresholds = [(sorted[0] + sorted[1]) / 2.0, (sorted[1] + sorted[2]) / 2.0];
    let levels = clustering.assignment.iter().map(|&c| Level::from_index(rank[c]).expect("rank below 3")).collect();
    Ok(LevelSeries { levels, thresholds: Some(thresholds) })
}

/// Clusters a raw emission column into three ordered levels.
pub fn discretize<T: Real>(values: &[T], opts: &KMeansOptions) -> Result<(Clustering<T>, LevelSeries)> {
    let clustering = kmeans_1d(values, &KMeansOptions { k: 3, ..*opts })?;
    let levels = assign_levels(&clustering, values)?;
    Ok((clustering, levels))
}
