//! k-sample Anderson–Darling test (Scholz & Stephens), midrank version for
//! data with ties.
//!
//! The p-value comes from the tabulated upper-tail quantiles of the
//! standardized statistic, interpolated by a quadratic in log p. Statistics
//! outside the tabulated span are extrapolated with the same quadratic and
//! the result is clamped to `[AD_P_FLOOR, 1]`; [`AdResult::extrapolated`]
//! records when that happened.

use crate::error::{MatchError, Result};

pub const AD_P_FLOOR: f64 = 1e-12;

const SIG: [f64; 7] = [0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001];
const B0: [f64; 7] = [0.675, 1.281, 1.645, 1.96, 2.326, 2.573, 3.085];
const B1: [f64; 7] = [-0.245, 0.25, 0.678, 1.149, 1.822, 2.364, 3.615];
const B2: [f64; 7] = [-0.105, -0.305, -0.362, -0.391, -0.396, -0.345, -0.154];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdResult {
    /// Midrank statistic A²akN.
    pub statistic: f64,
    /// (A²akN − (k − 1)) / σN.
    pub standardized: f64,
    pub p: f64,
    /// The standardized statistic fell outside the tabulated quantiles.
    pub extrapolated: bool,
}

pub fn anderson_darling_test(samples: &[&[f64]]) -> Result<AdResult> {
    let k = samples.len();
    if k < 2 {
        return Err(MatchError::UndefinedTest(format!(
            "anderson_darling needs at least 2 samples, got {k}"
        )));
    }
    if let Some(small) = samples.iter().position(|s| s.len() < 2) {
        return Err(MatchError::UndefinedTest(format!(
            "anderson_darling sample {small} has fewer than 2 observations"
        )));
    }

    let sizes: Vec<f64> = samples.iter().map(|s| s.len() as f64).collect();
    let mut pooled: Vec<(f64, usize)> = samples
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |&v| (v, i)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_total = pooled.len();
    let n = n_total as f64;
    if pooled[0].0 == pooled[n_total - 1].0 {
        return Err(MatchError::UndefinedTest(
            "anderson_darling: all pooled values are identical".into(),
        ));
    }

    // Running counts of observations strictly below the current value.
    let mut below_total = 0usize;
    let mut below = vec![0usize; k];
    let mut at_value = vec![0usize; k];
    let mut per_sample = vec![0.0f64; k];
    let mut start = 0;
    while start < n_total {
        let z = pooled[start].0;
        let mut end = start;
        at_value.iter_mut().for_each(|c| *c = 0);
        while end < n_total && pooled[end].0 == z {
            at_value[pooled[end].1] += 1;
            end += 1;
        }
        let l = (end - start) as f64;
        let b = below_total as f64 + l / 2.0;
        let denom = b * (n - b) - n * l / 4.0;
        if denom > 0.0 {
            for i in 0..k {
                let m = below[i] as f64 + at_value[i] as f64 / 2.0;
                let dev = n * m - b * sizes[i];
                per_sample[i] += l / n * dev * dev / denom;
            }
        }
        for i in 0..k {
            below[i] += at_value[i];
        }
        below_total += end - start;
        start = end;
    }
    let statistic = per_sample
        .iter()
        .zip(&sizes)
        .map(|(s, ni)| s / ni)
        .sum::<f64>()
        * (n - 1.0)
        / n;

    let variance = null_variance(&sizes, n_total);
    if !(variance > 0.0) {
        return Err(MatchError::UndefinedTest(
            "anderson_darling: null variance is not positive (too few observations)".into(),
        ));
    }
    let m = (k - 1) as f64;
    let standardized = (statistic - m) / variance.sqrt();
    let (p, extrapolated) = standardized_p_value(standardized, k - 1);
    Ok(AdResult {
        statistic,
        standardized,
        p,
        extrapolated,
    })
}

pub fn anderson_darling_p(samples: &[&[f64]]) -> Result<f64> {
    anderson_darling_test(samples).map(|r| r.p)
}

/// Exact null variance of A²kN for sample sizes `sizes` and total `n`.
fn null_variance(sizes: &[f64], n: usize) -> f64 {
    if n < 4 {
        return f64::NAN;
    }
    let k = sizes.len() as f64;
    let nf = n as f64;
    let big_h: f64 = sizes.iter().map(|s| 1.0 / s).sum();
    // h = Σ_{i=1}^{N-1} 1/i ; g = Σ_{i=1}^{N-2} Σ_{j=i+1}^{N-1} 1/((N-i) j)
    let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    let mut g = 0.0;
    // Σ_{i=1}^{N-2} 1/(N-i) Σ_{j=i+1}^{N-1} 1/j, via a running tail sum.
    let mut tail = 0.0;
    for j in (2..n).rev() {
        tail += 1.0 / j as f64;
        let i = j - 1;
        g += tail / (nf - i as f64);
    }

    let a = (4.0 * g - 6.0) * (k - 1.0) + (10.0 - 6.0 * g) * big_h;
    let b = (2.0 * g - 4.0) * k * k + 8.0 * h * k + (2.0 * g - 14.0 * h - 4.0) * big_h - 8.0 * h
        + 4.0 * g
        - 6.0;
    let c = (6.0 * h + 2.0 * g - 2.0) * k * k + (4.0 * h - 4.0 * g + 6.0) * k
        + (2.0 * h - 6.0) * big_h
        + 4.0 * h;
    let d = (2.0 * h + 6.0) * k * k - 4.0 * h * k;
    (a * nf.powi(3) + b * nf * nf + c * nf + d) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0))
}

/// Upper-tail quantiles of the standardized statistic for `m = k − 1`.
pub fn critical_values(m: usize) -> [f64; 7] {
    let m = m as f64;
    let mut out = [0.0; 7];
    for i in 0..7 {
        out[i] = B0[i] + B1[i] / m.sqrt() + B2[i] / m;
    }
    out
}

/// p-value for a standardized statistic; the flag is set when the
/// statistic lies outside the tabulated quantiles.
pub fn standardized_p_value(standardized: f64, m: usize) -> (f64, bool) {
    let crit = critical_values(m);
    let coef = quadratic_fit(&crit, &SIG.map(f64::ln));
    let log_p = coef[0] + coef[1] * standardized + coef[2] * standardized * standardized;
    let extrapolated = standardized < crit[0] || standardized > crit[6];
    let p = log_p.exp();
    let p = if p.is_nan() { AD_P_FLOOR } else { p };
    (p.clamp(AD_P_FLOOR, 1.0), extrapolated)
}

/// Least-squares `y ≈ c0 + c1 x + c2 x²`.
fn quadratic_fit(x: &[f64; 7], y: &[f64; 7]) -> [f64; 3] {
    // normal equations
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let mut pow = 1.0;
        for (e, se) in s.iter_mut().enumerate() {
            *se += pow;
            if e < 3 {
                t[e] += pow * yi;
            }
            pow *= xi;
        }
    }
    let mut a = [
        [s[0], s[1], s[2], t[0]],
        [s[1], s[2], s[3], t[1]],
        [s[2], s[3], s[4], t[2]],
    ];
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                let pivot_row = a[col];
                for (v, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                    *v -= f * p;
                }
            }
        }
    }
    [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]]
}
