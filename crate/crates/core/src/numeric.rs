//! Small numerical helpers: compensated sums, smoothsteps, cancellation
//! snapping, isotonic regression and least-squares fits.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = NeumaierSum::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³` clamped to [0, 1]; C² with vanishing
/// first and second derivatives at both ends.
#[inline]
pub fn smoothstep5(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// First derivative of [`smoothstep5`].
#[inline]
pub fn smoothstep5_d1(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (t - 1.0) * (t - 1.0)
}

/// Second derivative of [`smoothstep5`].
#[inline]
pub fn smoothstep5_d2(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    60.0 * t * (t - 1.0) * (2.0 * t - 1.0)
}

/// Relative size below which a floating sum is treated as an exact
/// cancellation, measured against the sum of absolute values of its terms.
pub const CANCELLATION_TOL: f64 = 64.0 * f64::EPSILON;

/// Returns 0 when `sum` is indistinguishable from rounding noise given the
/// magnitude `scale` of the terms that produced it.
#[inline]
pub fn snap(sum: f64, scale: f64) -> f64 {
    if sum.abs() <= CANCELLATION_TOL * scale {
        0.0
    } else {
        sum
    }
}

/// Least-squares non-increasing fit (pool-adjacent-violators).
pub fn isotonic_nonincreasing(y: &[f64]) -> Vec<f64> {
    // Fit a non-decreasing sequence to −y and negate.
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    isotonic_nondecreasing(&neg)
        .into_iter()
        .map(|v| -v)
        .collect()
}

/// Least-squares non-decreasing fit (pool-adjacent-violators).
pub fn isotonic_nondecreasing(y: &[f64]) -> Vec<f64> {
    let mut means: Vec<f64> = Vec::with_capacity(y.len());
    let mut counts: Vec<usize> = Vec::with_capacity(y.len());
    for &v in y {
        means.push(v);
        counts.push(1);
        while means.len() >= 2 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, c2) = (means.pop().unwrap(), counts.pop().unwrap());
            let (m1, c1) = (means.pop().unwrap(), counts.pop().unwrap());
            let c = c1 + c2;
            means.push((m1 * c1 as f64 + m2 * c2 as f64) / c as f64);
            counts.push(c);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, c) in means.into_iter().zip(counts) {
        out.extend(std::iter::repeat_n(m, c));
    }
    out
}

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points to fit a line");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Median of a slice (mean of the two middle values for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty slice");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1);
    let mean = neumaier_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    let (_, se) = mean_and_se(xs);
    se * (xs.len() as f64).sqrt()
}

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
