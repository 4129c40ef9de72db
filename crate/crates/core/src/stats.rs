//! Small statistics toolbox: sample moments, pooled variance over slots,
//! and a two-sample Kolmogorov–Smirnov test.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n−1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Sum of squared deviations from the sample mean.
pub fn sum_sq_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
}

/// Pooled variance over slots, each slot mean-subtracted:
/// `Σ_slots SS_i / Σ_slots (n_i − 1)`. Returns `(estimate, dof)`.
pub fn pooled_variance<'a, I>(slots: I) -> (f64, usize)
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut ss = 0.0;
    let mut dof = 0usize;
    for slot in slots {
        if slot.len() < 2 {
            continue;
        }
        ss += sum_sq_dev(slot);
        dof += slot.len() - 1;
    }
    if dof == 0 {
        (0.0, 0)
    } else {
        (ss / dof as f64, dof)
    }
}

/// Result of a two-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS test with the asymptotic Kolmogorov p-value.
///
/// Suitable for the large samples used here (n ≳ 10³); the p-value is the
/// standard series `2 Σ (−1)^{k−1} exp(−2 k² t²)` at
/// `t = D·√(nm/(n+m))`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs data");
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let z = xs[i].min(ys[j]);
        while i < n && xs[i] <= z {
            i += 1;
        }
        while j < m && ys[j] <= z {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    let t = d * ((n as f64 * m as f64) / (n as f64 + m as f64)).sqrt();
    KsTest {
        statistic: d,
        p_value: kolmogorov_sf(t),
    }
}

/// Critical KS statistic at significance `alpha` for sample sizes n, m.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n as f64 + m as f64) / (n as f64 * m as f64)).sqrt()
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
