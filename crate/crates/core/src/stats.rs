//! Deterministic parallel reductions over replicate indices.
//!
//! Replicates are split into fixed chunks of [`CHUNK`] indices. Each chunk is
//! reduced sequentially, then chunk results are merged pairwise in index
//! order. Neither step depends on the rayon pool size.

use rayon::prelude::*;
use serde::Serialize;

pub const CHUNK: u64 = 1024;

/// Monte-Carlo estimate reported as `mean ± halfwidth` with
/// `halfwidth = 2 · stderr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub stderr: f64,
    pub replicates: usize,
    pub halfwidth: f64,
}

impl EstimateWithCI {
    pub fn new(mean: f64, stderr: f64, replicates: usize) -> Self {
        Self { mean, stderr, replicates, halfwidth: 2.0 * stderr }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.halfwidth
    }
}

/// Streaming first and second moments with extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    mean: f64,
    m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Self { count: 0, sum: 0.0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Chan et al. pairwise merge.
    pub fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let count = a.count + b.count;
        let delta = b.mean - a.mean;
        let nb = b.count as f64 / count as f64;
        Moments {
            count,
            sum: a.sum + b.sum,
            mean: a.mean + delta * nb,
            m2: a.m2 + b.m2 + delta * delta * a.count as f64 * nb,
            min: a.min.min(b.min),
            max: a.max.max(b.max),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count > 0 && self.min == self.max {
            return self.min;
        }
        self.sum / self.count as f64
    }

    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 || self.min == self.max {
            return 0.0;
        }
        (self.m2 / (self.count - 1) as f64).max(0.0)
    }

    /// Estimate of the mean with standard error `s/√n`.
    pub fn estimate(&self) -> EstimateWithCI {
        let n = self.count as f64;
        EstimateWithCI::new(self.mean(), (self.sample_variance() / n).sqrt(), self.count as usize)
    }
}

fn tree_merge<T: Copy>(mut items: Vec<T>, identity: T, merge: impl Fn(T, T) -> T) -> T {
    if items.is_empty() {
        return identity;
    }
    while items.len() > 1 {
        items = items
            .chunks(2)
            .map(|pair| if pair.len() == 2 { merge(pair[0], pair[1]) } else { pair[0] })
            .collect();
    }
    items[0]
}

/// Sum in a balanced binary tree over slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    tree_merge(values.to_vec(), 0.0, |a, b| a + b)
}

/// Reduces `f(0), …, f(n-1)` into [`Moments`] on the current rayon pool.
pub fn replicate_moments<F>(n: u64, f: F) -> Moments
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for b in c * CHUNK..((c + 1) * CHUNK).min(n) {
                m.push(f(b));
            }
            m
        })
        .collect();
    tree_merge(parts, Moments::default(), Moments::merge)
}

/// Counts indices in `0..n` for which `f` holds.
pub fn replicate_count<F>(n: u64, f: F) -> u64
where
    F: Fn(u64) -> bool + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).filter(|&b| f(b)).count() as u64)
        .sum()
}

/// Componentwise sums of `f(0), …, f(n-1)` with the same fixed chunking.
pub fn indexed_sums<const N: usize, F>(n: u64, f: F) -> [f64; N]
where
    F: Fn(u64) -> [f64; N] + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<[f64; N]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [0.0; N];
            for b in c * CHUNK..((c + 1) * CHUNK).min(n) {
                for (a, x) in acc.iter_mut().zip(f(b)) {
                    *a += x;
                }
            }
            acc
        })
        .collect();
    tree_merge(parts, [0.0; N], |mut a, b| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    })
}

/// Binomial proportion estimate with stderr `√(p̂(1−p̂)/n)`.
pub fn proportion(successes: u64, n: u64) -> EstimateWithCI {
    let p = successes as f64 / n as f64;
    EstimateWithCI::new(p, (p * (1.0 - p) / n as f64).sqrt(), n as usize)
}
