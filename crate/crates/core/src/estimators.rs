//! Statistics of particle clouds: moments, the pair inverse-square statistic
//! and a Kozachenko–Leonenko nearest-neighbour entropy estimate.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::noise::aux_rng;
use crate::numeric::{neumaier_sum, NeumaierSum};
use crate::{LandauError, Result, Vec3};

/// Pairs closer than this are excluded from the inverse-square statistic.
pub const PAIR_EXCLUSION: f64 = 1e-14;
/// Half-width of the jitter applied to exactly duplicated points.
pub const DUPLICATE_JITTER: f64 = 1e-12;
/// Default neighbour rank of the entropy estimator.
pub const DEFAULT_K: usize = 4;

/// Uniform atomic measure (1/N)Σδ_{vᵢ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    points: Vec<Vec3>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(LandauError::Precondition(
                "empirical measure needs a point".into(),
            ));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(LandauError::Precondition("points must be finite".into()));
        }
        Ok(EmpiricalMeasure { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// (1/N)Σ φ(vᵢ), compensated.
    pub fn integrate<F: Fn(&Vec3) -> f64>(&self, phi: F) -> f64 {
        neumaier_sum(self.points.iter().map(phi)) / self.points.len() as f64
    }
}

/// Raw moments of an empirical measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Vec3,
    /// (1/N)Σ|vᵢ|².
    pub energy: f64,
    /// radial[m] = (1/N)Σ|vᵢ|^m for m = 0..=max_order (radial[0] is the mass).
    pub radial: Vec<f64>,
}

pub fn moments(mu: &EmpiricalMeasure, max_order: usize) -> Result<Moments> {
    if max_order > 8 {
        return Err(LandauError::Precondition(format!(
            "moment order at most 8, got {max_order}"
        )));
    }
    let n = mu.len() as f64;
    let mut mean = [NeumaierSum::new(); 3];
    let mut radial = vec![NeumaierSum::new(); max_order + 1];
    for p in mu.points() {
        for c in 0..3 {
            mean[c].add(p[c]);
        }
        let r = p.norm();
        let mut pw = 1.0;
        for acc in radial.iter_mut() {
            acc.add(pw);
            pw *= r;
        }
    }
    let energy = mu.integrate(|p| p.norm_squared());
    Ok(Moments {
        mean: Vec3::new(mean[0].value(), mean[1].value(), mean[2].value()) / n,
        energy,
        radial: radial.iter().map(|s| s.value() / n).collect(),
    })
}

/// Result of the pair inverse-square statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairInverseSquare {
    /// (2/(N(N−1)))Σ_{i<j}|vᵢ−vⱼ|⁻² over non-excluded pairs.
    pub value: f64,
    /// Pairs closer than [`PAIR_EXCLUSION`].
    pub excluded: usize,
}

pub fn pair_inverse_square(mu: &EmpiricalMeasure) -> Result<PairInverseSquare> {
    let n = mu.len();
    if n < 2 {
        return Err(LandauError::Precondition("need at least two points".into()));
    }
    let pts = mu.points();
    let rows: Vec<(f64, usize)> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut s = NeumaierSum::new();
            let mut excl = 0;
            for j in i + 1..n {
                let d2 = (pts[i] - pts[j]).norm_squared();
                if d2 < PAIR_EXCLUSION * PAIR_EXCLUSION {
                    excl += 1;
                } else {
                    s.add(1.0 / d2);
                }
            }
            (s.value(), excl)
        })
        .collect();
    let excluded: usize = rows.iter().map(|r| r.1).sum();
    let total = n * (n - 1) / 2;
    if excluded == total {
        return Err(LandauError::DegenerateCloud("every pair coincides".into()));
    }
    let sum = neumaier_sum(rows.iter().map(|r| r.0));
    Ok(PairInverseSquare {
        value: sum / total as f64,
        excluded,
    })
}

/// Entropy estimate with the number of jittered points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnEntropy {
    /// Estimate of ∫ f log f (the negative differential entropy).
    pub value: f64,
    pub k: usize,
    /// Points perturbed because they coincided exactly with another point.
    pub jittered: usize,
}

/// Kozachenko–Leonenko estimate of ∫ f log f from the distances εᵢ to the
/// k-th nearest neighbour:
/// −[ψ(N) − ψ(k) + ln(4π/3) + (3/N)Σ ln εᵢ].
pub fn knn_entropy(mu: &EmpiricalMeasure, k: usize) -> Result<KnnEntropy> {
    let n = mu.len();
    if k == 0 || n < k + 1 {
        return Err(LandauError::Precondition(format!(
            "need N ≥ k + 1 ≥ 2, got N = {n}, k = {k}"
        )));
    }
    let (pts, jittered) = jitter_duplicates(mu.points());
    let log_eps: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| kth_neighbour_distance2(&pts, i, k).ln() * 0.5)
        .collect();
    let mean_log = neumaier_sum(log_eps.iter().copied()) / n as f64;
    let ln_v3 = (4.0 * std::f64::consts::PI / 3.0).ln();
    let h_diff = digamma(n as f64) - digamma(k as f64) + ln_v3 + 3.0 * mean_log;
    Ok(KnnEntropy {
        value: -h_diff,
        k,
        jittered,
    })
}

fn kth_neighbour_distance2(pts: &[Vec3], i: usize, k: usize) -> f64 {
    // Sorted list of the k smallest squared distances seen so far.
    let mut best = vec![f64::INFINITY; k];
    let p = pts[i];
    for (j, q) in pts.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = (p - q).norm_squared();
        if d < best[k - 1] {
            let mut pos = k - 1;
            while pos > 0 && best[pos - 1] > d {
                best[pos] = best[pos - 1];
                pos -= 1;
            }
            best[pos] = d;
        }
    }
    best[k - 1]
}

/// Perturbs every point that exactly duplicates an earlier one by a
/// deterministic jitter of size [`DUPLICATE_JITTER`] relative to its scale.
fn jitter_duplicates(points: &[Vec3]) -> (Vec<Vec3>, usize) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (points[a], points[b]);
        p[0].total_cmp(&q[0])
            .then(p[1].total_cmp(&q[1]))
            .then(p[2].total_cmp(&q[2]))
    });
    let mut out = points.to_vec();
    let mut rng = aux_rng(0, 0xD0B1, 0);
    let mut jittered = 0;
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            let p = &mut out[w[1]];
            let scale = p.norm().max(1.0) * DUPLICATE_JITTER;
            for c in 0..3 {
                p[c] += scale * rng.random_range(-1.0..1.0);
            }
            jittered += 1;
        }
    }
    (out, jittered)
}
