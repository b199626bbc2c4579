//! Small statistical toolbox: compensated summation, log-gamma, the
//! regularized incomplete gamma function, chi-square goodness-of-fit, and
//! histogram / total-variation helpers shared by the sampling modules and
//! their tests.

/// Compensated (Kahan) sum. Used for every reduction whose value feeds an
/// invariant check or a persisted number, so results do not depend on
/// chunking or thread count.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// ln Γ(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
///
/// Absolute error below 1e-13 over the range used here; exact cancellation
/// of the common ln Γ(n+1) term in binomial ratios is what matters for the
/// branch-measure computations.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if x < 0.5 {
        // reflection: Γ(x) Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// ln C(n, k).
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// log(Σ exp(l)) evaluated stably; `NEG_INFINITY` for an empty slice.
pub fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + kahan_sum(logs.iter().map(|&l| (l - m).exp())).ln()
}

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a).
///
/// Series for x < a + 1, continued fraction otherwise (Lentz).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p domain: a={a}, x={x}");
    if x == 0.0 {
        return 0.0;
    }
    let ln_ga = ln_gamma(a);
    if x < a + 1.0 {
        // series: P = x^a e^-x / Γ(a) Σ x^n / (a (a+1) … (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (a * x.ln() - x - ln_ga).exp()
    } else {
        // continued fraction for Q = 1 - P
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (a * x.ln() - x - ln_ga).exp() * h;
        1.0 - q
    }
}

/// Chi-square CDF with `df` degrees of freedom.
pub fn chi_square_cdf(x: f64, df: usize) -> f64 {
    gamma_p(df as f64 / 2.0, x / 2.0)
}

/// Upper critical value: the x with P(X ≤ x) = 1 - alpha, by bisection.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    assert!(df >= 1 && alpha > 0.0 && alpha < 1.0);
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0, df as f64 + 100.0 * (df as f64).sqrt() + 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_square_cdf(mid, df) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub critical: f64,
    pub degrees_of_freedom: usize,
    pub significance: f64,
    pub passed: bool,
}

/// Pearson statistic for observed counts against expected counts.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    kahan_sum(observed.iter().zip(expected).map(|(&o, &e)| {
        let d = o as f64 - e;
        d * d / e
    }))
}

/// Goodness-of-fit of samples against a discrete cell density given as
/// `(cell_coords, cell_mass)` with masses summing to 1. Cells are merged
/// greedily into `bins` contiguous groups of roughly equal mass, so every
/// bin has a healthy expected count.
pub fn chi_square_gof(
    samples: &[f64],
    cell_coords: &[f64],
    cell_mass: &[f64],
    spacing: f64,
    bins: usize,
    significance: f64,
) -> ChiSquareReport {
    assert_eq!(cell_coords.len(), cell_mass.len());
    assert!(bins >= 2 && samples.len() >= 10 * bins);
    // bin edges at mass quantiles; cells are [x - Δ/2, x + Δ/2)
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(cell_coords[0] - 0.5 * spacing);
    let mut cum = 0.0;
    let mut next_q = 1.0 / bins as f64;
    for (i, &m) in cell_mass.iter().enumerate() {
        let lo = cum;
        cum += m;
        // interpolate inside the cell for each quantile it spans
        while next_q <= cum && edges.len() < bins {
            let frac = if m > 0.0 { (next_q - lo) / m } else { 1.0 };
            edges.push(cell_coords[i] - 0.5 * spacing + frac * spacing);
            next_q += 1.0 / bins as f64;
        }
    }
    edges.push(cell_coords[cell_coords.len() - 1] + 0.5 * spacing);
    let n_bins = edges.len() - 1;

    // expected per bin from the same piecewise-uniform density
    let mut expected = vec![0.0; n_bins];
    for (i, &m) in cell_mass.iter().enumerate() {
        let c_lo = cell_coords[i] - 0.5 * spacing;
        let c_hi = cell_coords[i] + 0.5 * spacing;
        for (b, w) in expected.iter_mut().enumerate() {
            let lo = edges[b].max(c_lo);
            let hi = edges[b + 1].min(c_hi);
            if hi > lo {
                *w += m * (hi - lo) / spacing;
            }
        }
    }
    let total = samples.len() as f64;
    for e in expected.iter_mut() {
        *e *= total;
    }

    let mut observed = vec![0u64; n_bins];
    for &s in samples {
        // edges are sorted; partition_point gives the first edge > s
        let b = edges.partition_point(|&e| e <= s);
        let b = b.clamp(1, n_bins) - 1;
        observed[b] += 1;
    }

    let statistic = chi_square_statistic(&observed, &expected);
    let df = n_bins - 1;
    let critical = chi_square_critical(df, significance);
    ChiSquareReport {
        statistic,
        critical,
        degrees_of_freedom: df,
        significance,
        passed: statistic <= critical,
    }
}

/// Bin a piecewise-uniform cell density (point-centered cells of width
/// `spacing`) into `bins` equal-width bins over `[lo, hi)`, splitting cells
/// that straddle a bin edge proportionally. This matches the law of samples
/// drawn per cell and jittered uniformly inside it.
pub fn bin_cell_masses(
    cell_coords: &[f64],
    cell_mass: &[f64],
    spacing: f64,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Vec<f64> {
    assert_eq!(cell_coords.len(), cell_mass.len());
    assert!(bins >= 1 && hi > lo);
    let w = (hi - lo) / bins as f64;
    let mut out = vec![0.0f64; bins];
    for (i, &m) in cell_mass.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let c_lo = cell_coords[i] - 0.5 * spacing;
        let c_hi = cell_coords[i] + 0.5 * spacing;
        let b_first = (((c_lo - lo) / w).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        let b_last = (((c_hi - lo) / w).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        if b_first == b_last {
            out[b_first] += m;
        } else {
            for b in b_first..=b_last {
                let seg_lo = (lo + b as f64 * w).max(c_lo);
                let seg_hi = (lo + (b + 1) as f64 * w).min(c_hi);
                if seg_hi > seg_lo {
                    out[b] += m * (seg_hi - seg_lo) / spacing;
                }
            }
        }
    }
    out
}

/// Counts of `values` over `bins` equal-width bins spanning `[lo, hi)`.
/// Values outside are clamped into the edge bins.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    assert!(bins >= 1 && hi > lo);
    let mut counts = vec![0u64; bins];
    let w = (hi - lo) / bins as f64;
    for &v in values {
        let b = (((v - lo) / w).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        counts[b] += 1;
    }
    counts
}

/// Total-variation distance ½ Σ |p - q| between two discrete laws.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * kahan_sum(p.iter().zip(q).map(|(&a, &b)| (a - b).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut f = 1.0f64;
        for n in 1..20u64 {
            f *= n as f64;
            assert!(
                (ln_gamma(n as f64 + 1.0) - f.ln()).abs() < 1e-12,
                "ln_gamma({}) off",
                n + 1
            );
        }
        // Γ(1/2) = √π
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-13);
    }

    #[test]
    fn ln_binomial_exact_small_cases() {
        assert!((ln_binomial(5, 2).exp() - 10.0).abs() < 1e-10);
        assert!((ln_binomial(10, 5).exp() - 252.0).abs() < 1e-9);
        assert_eq!(ln_binomial(4, 0), 0.0);
        assert_eq!(ln_binomial(3, 5), f64::NEG_INFINITY);
    }

    #[test]
    fn chi_square_critical_matches_reference_table() {
        // reference quantiles at alpha = 0.01
        for (df, want) in [
            (1usize, 6.634_896_601_0),
            (9, 21.665_994_333_5),
            (19, 36.190_869_129_3),
            (31, 52.191_394_833_2),
            (63, 92.010_023_614_1),
        ] {
            let got = chi_square_critical(df, 0.01);
            assert!(
                (got - want).abs() < 1e-6,
                "df={df}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn gamma_p_endpoints() {
        assert_eq!(gamma_p(2.5, 0.0), 0.0);
        assert!((gamma_p(0.5, 50.0) - 1.0).abs() < 1e-12);
        // P(1, x) = 1 - e^-x
        for x in [0.1, 1.0, 3.0] {
            assert!((gamma_p(1.0, x) - (1.0 - (-x).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn total_variation_basics() {
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
    }

    #[test]
    fn cell_binning_conserves_mass_and_splits_straddlers() {
        // two cells, the second straddling the bin edge at 0.5
        let coords = [0.25, 0.5];
        let mass = [0.4, 0.6];
        let out = bin_cell_masses(&coords, &mass, 0.25, 0.0, 1.0, 2);
        assert!((out[0] + out[1] - 1.0).abs() < 1e-15);
        // cell 2 spans [0.375, 0.625): half its mass in each bin
        assert!((out[0] - (0.4 + 0.3)).abs() < 1e-12, "{out:?}");
        assert!((out[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn gof_accepts_its_own_law() {
        // deterministic stratified "samples" from a triangular cell density
        let n_cells = 64;
        let coords: Vec<f64> = (0..n_cells).map(|i| i as f64 + 0.5).collect();
        let raw: Vec<f64> = (0..n_cells).map(|i| 1.0 + i as f64).collect();
        let s: f64 = raw.iter().sum();
        let mass: Vec<f64> = raw.iter().map(|r| r / s).collect();
        // inverse-CDF at stratified uniforms: essentially a perfect fit
        let m = 20_000;
        let mut samples = Vec::with_capacity(m);
        for j in 0..m {
            let u = (j as f64 + 0.5) / m as f64;
            let mut cum = 0.0;
            for (i, &w) in mass.iter().enumerate() {
                if u < cum + w {
                    samples.push(i as f64 + (u - cum) / w);
                    break;
                }
                cum += w;
            }
        }
        let rep = chi_square_gof(&samples, &coords, &mass, 1.0, 32, 0.01);
        assert!(rep.passed, "stat {} vs crit {}", rep.statistic, rep.critical);
    }
}
