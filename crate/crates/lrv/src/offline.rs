//! Offline, definition-level estimators.
//!
//! Everything in this module evaluates a window or an estimator by direct
//! summation, in `O(n^2)` time. These functions are the ground truth that
//! the streaming implementations are tested against, and they double as
//! plain offline estimators (Bartlett kernel, overlapping batch means,
//! Welford) for batch workloads.

use crate::error::{check_finite, Error, Result};

/// Declarative description of a window `W_n(i, j)`, consumed by
/// [`quadratic_form`] and friends.
#[derive(Debug, Clone)]
pub enum WindowSpec {
    /// Bartlett taper with a single global bandwidth:
    /// `W(i, j) = (1 - |i-j|/bandwidth) 1{|i-j| <= bandwidth}`.
    Bartlett { bandwidth: usize },
    /// Window induced by a batch-size sequence `l_i` (one entry per time
    /// index, 1-based): the taper distance is standardized by the global
    /// average bandwidth while the subsample indicator is local.
    Psr { batch_sizes: Vec<usize> },
    /// Flat-top polynomial taper of order `q` with a per-`n` tapering
    /// sequence and a per-index effective subsampling sequence:
    /// `W(i, j) = (1 - |i-j|^q / t_n^q) 1{|i-j| <= s'_{max(i,j)}}`.
    Laser {
        q: u32,
        tapers: Vec<u64>,
        subsamples: Vec<u64>,
    },
}

impl WindowSpec {
    fn check_len(&self, n: usize) -> Result<()> {
        let ok = match self {
            WindowSpec::Bartlett { bandwidth } => {
                if *bandwidth == 0 || *bandwidth > n {
                    return Err(Error::BandwidthOutOfRange {
                        bandwidth: *bandwidth,
                        n,
                    });
                }
                true
            }
            WindowSpec::Psr { batch_sizes } => batch_sizes.len() >= n && !batch_sizes.is_empty(),
            WindowSpec::Laser {
                tapers, subsamples, ..
            } => tapers.len() >= n && subsamples.len() >= n && !tapers.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::EmptyInput)
        }
    }
}

/// Evaluate `W_n(i, j)` for 1-based indices `i, j` at sample size `n`.
pub fn window_weight(spec: &WindowSpec, n: usize, i: usize, j: usize) -> Result<f64> {
    if i == 0 || j == 0 || i > n || j > n {
        return Err(Error::IndexOutOfRange { i, j, n });
    }
    spec.check_len(n)?;
    let lag = i.abs_diff(j);
    Ok(match spec {
        WindowSpec::Bartlett { bandwidth } => {
            let l = *bandwidth as f64;
            if lag <= *bandwidth {
                1.0 - lag as f64 / l
            } else {
                0.0
            }
        }
        WindowSpec::Psr { batch_sizes } => {
            let mean_l: f64 =
                batch_sizes[..n].iter().map(|&l| l as f64).sum::<f64>() / n as f64;
            let local = batch_sizes[i.max(j) - 1];
            if lag <= local {
                1.0 - (lag as f64 + mean_l - local as f64) / mean_l
            } else {
                0.0
            }
        }
        WindowSpec::Laser {
            q,
            tapers,
            subsamples,
        } => {
            let t = tapers[n - 1] as f64;
            if (lag as u64) <= subsamples[i.max(j) - 1] {
                1.0 - (lag as f64).powi(*q as i32) / t.powi(*q as i32)
            } else {
                0.0
            }
        }
    })
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, &x) in series.iter().enumerate() {
        check_finite(x, i)?;
    }
    Ok(())
}

fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Quadratic-form estimator `n^{-1} sum_i sum_j W(i,j)(X_i - mean)(X_j - mean)`
/// by direct double summation.
pub fn quadratic_form(series: &[f64], spec: &WindowSpec) -> Result<f64> {
    check_series(series)?;
    let n = series.len();
    spec.check_len(n)?;
    let xbar = mean(series);
    let mut acc = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            let w = window_weight(spec, n, i, j)?;
            if w != 0.0 {
                acc += w * (series[i - 1] - xbar) * (series[j - 1] - xbar);
            }
        }
    }
    Ok(acc / n as f64)
}

/// Known-zero-mean variant of [`quadratic_form`]: no demeaning.
pub fn quadratic_form_zero_mean(series: &[f64], spec: &WindowSpec) -> Result<f64> {
    check_series(series)?;
    let n = series.len();
    spec.check_len(n)?;
    let mut acc = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            let w = window_weight(spec, n, i, j)?;
            if w != 0.0 {
                acc += w * series[i - 1] * series[j - 1];
            }
        }
    }
    Ok(acc / n as f64)
}

/// Weighted-lag quadratic form
/// `n^{-1} sum_i sum_j W(i,j) |i-j|^q (X_i - mean)(X_j - mean)`,
/// the definition-level evaluator behind the nuisance estimate.
pub fn weighted_lag_form(series: &[f64], spec: &WindowSpec, q: u32) -> Result<f64> {
    check_series(series)?;
    let n = series.len();
    spec.check_len(n)?;
    let xbar = mean(series);
    let mut acc = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            let w = window_weight(spec, n, i, j)?;
            if w != 0.0 {
                let lag = i.abs_diff(j) as f64;
                acc += w * lag.powi(q as i32) * (series[i - 1] - xbar) * (series[j - 1] - xbar);
            }
        }
    }
    Ok(acc / n as f64)
}

/// Direct multivariate quadratic form:
/// `n^{-1} sum_i sum_j W(i,j)(X_i - mean)(X_j - mean)^T` as a `d x d` matrix.
pub fn quadratic_form_matrix(
    rows: &[Vec<f64>],
    spec: &WindowSpec,
) -> Result<nalgebra::DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = rows.len();
    let d = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        for &x in r {
            check_finite(x, i)?;
        }
    }
    spec.check_len(n)?;
    let mut means = vec![0.0; d];
    for r in rows {
        for (m, &x) in means.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut out = nalgebra::DMatrix::zeros(d, d);
    for i in 1..=n {
        for j in 1..=n {
            let w = window_weight(spec, n, i, j)?;
            if w == 0.0 {
                continue;
            }
            for h in 0..d {
                let dev_i = rows[i - 1][h] - means[h];
                for k in 0..d {
                    out[(h, k)] += w * dev_i * (rows[j - 1][k] - means[k]);
                }
            }
        }
    }
    out /= n as f64;
    Ok(out)
}

/// Sample variance `n^{-1} sum (X_i - mean)^2`, maintained recursively.
pub fn welford(series: &[f64]) -> Result<f64> {
    check_series(series)?;
    let mut var = 0.0;
    let mut xbar = 0.0;
    for (i, &x) in series.iter().enumerate() {
        let n = (i + 1) as f64;
        let prev = xbar;
        var = (n - 1.0) / n * (var + (x - prev) * (x - prev) / n);
        xbar = prev + (x - prev) / n;
    }
    Ok(var)
}

/// Overlapping batch means statistic with batch size `bandwidth`.
pub fn obm(series: &[f64], bandwidth: usize) -> Result<f64> {
    check_series(series)?;
    let n = series.len();
    if bandwidth == 0 || bandwidth > n {
        return Err(Error::BandwidthOutOfRange { bandwidth, n });
    }
    let l = bandwidth;
    let xbar = mean(series);
    let mut batch_sum: f64 = series[..l].iter().sum();
    let mut num = 0.0;
    for i in l..=n {
        if i > l {
            batch_sum += series[i - 1] - series[i - 1 - l];
        }
        let dev = batch_sum - l as f64 * xbar;
        num += dev * dev;
    }
    let denom = (l * (n - l + 1)) as f64;
    Ok(num / denom)
}

/// Bartlett kernel estimator with bandwidth `bandwidth`,
/// `sum_{|k| <= l} (1 - |k|/l) gammahat_k`.
pub fn bartlett(series: &[f64], bandwidth: usize) -> Result<f64> {
    check_series(series)?;
    let n = series.len();
    if bandwidth == 0 || bandwidth > n {
        return Err(Error::BandwidthOutOfRange { bandwidth, n });
    }
    let l = bandwidth as f64;
    let xbar = mean(series);
    let mut acc = 0.0;
    for k in 0..=bandwidth.min(n - 1) {
        let mut cov = 0.0;
        for i in k..n {
            cov += (series[i] - xbar) * (series[i - k] - xbar);
        }
        cov /= n as f64;
        let w = 1.0 - k as f64 / l;
        acc += if k == 0 { cov } else { 2.0 * w * cov };
    }
    Ok(acc)
}

/// Default batch-size sequence `l_i = min(floor(coeff * i^{1/3}), i)` for the
/// batch-size-sequence window.
pub fn default_psr_batches(n: usize, coeff: f64) -> Vec<usize> {
    (1..=n)
        .map(|i| {
            let raw = crate::schedule::floor_guarded(coeff * (i as f64).powf(1.0 / 3.0)) as usize;
            raw.min(i).max(1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        crate::sim::SeriesModel::arma(rho, 0.0, 1.0, 0.0)
            .with_seed(seed)
            .gen(n)
            .unwrap()
    }

    #[test]
    fn window_weight_examples() {
        let laser = WindowSpec::Laser {
            q: 1,
            tapers: vec![5; 10],
            subsamples: vec![3; 10],
        };
        // Diagonal weight is 1.
        assert_eq!(window_weight(&laser, 10, 4, 4).unwrap(), 1.0);
        // Lag 4 falls outside the subsample indicator.
        assert_eq!(window_weight(&laser, 10, 2, 6).unwrap(), 0.0);
        // Bartlett at lag 2 with bandwidth 4.
        let bart = WindowSpec::Bartlett { bandwidth: 4 };
        assert_eq!(window_weight(&bart, 10, 3, 5).unwrap(), 0.5);
        assert!(window_weight(&bart, 10, 0, 5).is_err());
        assert!(window_weight(&bart, 10, 11, 5).is_err());
    }

    #[test]
    fn window_weight_symmetric() {
        let specs = [
            WindowSpec::Bartlett { bandwidth: 5 },
            WindowSpec::Psr {
                batch_sizes: default_psr_batches(20, 2.0),
            },
            WindowSpec::Laser {
                q: 2,
                tapers: (1..=20u64).collect(),
                subsamples: (0..20u64).map(|i| (i / 3).min(4)).collect(),
            },
        ];
        for spec in &specs {
            for i in 1..=20 {
                for j in 1..=20 {
                    let a = window_weight(spec, 20, i, j).unwrap();
                    let b = window_weight(spec, 20, j, i).unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn quadratic_form_constant_series_is_zero() {
        let spec = WindowSpec::Bartlett { bandwidth: 2 };
        assert_eq!(quadratic_form(&[3.0, 3.0, 3.0, 3.0], &spec).unwrap(), 0.0);
    }

    #[test]
    fn batch_size_window_hand_values() {
        // l = (1, 1, 2, 2, 3, 3), mean 2. Weight at (i, j):
        // (l_max(i,j) - |i-j|) / mean when |i-j| <= l_max(i,j).
        let spec = WindowSpec::Psr {
            batch_sizes: vec![1, 1, 2, 2, 3, 3],
        };
        let w = |i, j| window_weight(&spec, 6, i, j).unwrap();
        assert!((w(5, 5) - 3.0 / 2.0).abs() < 1e-15); // diagonal can exceed 1
        assert!((w(5, 3) - (3.0 - 2.0) / 2.0).abs() < 1e-15);
        assert_eq!(w(5, 1), 0.0); // lag 4 > l_5 = 3
        assert!((w(2, 1) - (1.0 - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_form_two_point_hand_expansion() {
        // X = (1, 2), demeaned (-1/2, 1/2); off-diagonal weight 1 - 1/2.
        let spec = WindowSpec::Laser {
            q: 1,
            tapers: vec![1, 2],
            subsamples: vec![0, 1],
        };
        let got = quadratic_form(&[1.0, 2.0], &spec).unwrap();
        let want = 0.5 * (0.25 + 0.25 + 2.0 * 0.5 * (-0.25));
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.125).abs() < 1e-15);
    }

    #[test]
    fn quadratic_form_rejects_non_finite() {
        let spec = WindowSpec::Bartlett { bandwidth: 1 };
        assert!(quadratic_form(&[1.0, f64::NAN], &spec).is_err());
    }

    #[test]
    fn quadratic_form_translation_invariant() {
        let series = ar1(150, 0.5, 7);
        let shifted: Vec<f64> = series.iter().map(|x| x + 17.5).collect();
        let spec = WindowSpec::Laser {
            q: 1,
            tapers: (1..=150u64).map(|n| (n as f64).cbrt().ceil() as u64 * 2).collect(),
            subsamples: (1..=150u64).map(|i| ((i as f64).cbrt() as u64).min(i - 1)).collect(),
        };
        let a = quadratic_form(&series, &spec).unwrap();
        let b = quadratic_form(&shifted, &spec).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn welford_examples() {
        assert_eq!(welford(&[5.0]).unwrap(), 0.0);
        assert!((welford(&[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn welford_equals_zero_subsample_window() {
        let series = ar1(80, 0.4, 3);
        let spec = WindowSpec::Laser {
            q: 1,
            tapers: vec![1; 80],
            subsamples: vec![0; 80],
        };
        let a = welford(&series).unwrap();
        let b = quadratic_form(&series, &spec).unwrap();
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn obm_batch_one_collapses_to_welford() {
        let series = ar1(60, 0.3, 11);
        assert!((obm(&series, 1).unwrap() - welford(&series).unwrap()).abs() < 1e-12);
        assert_eq!(obm(&[2.0, 2.0, 2.0], 2).unwrap(), 0.0);
        assert!(obm(&series, 0).is_err());
        assert!(obm(&series, 61).is_err());
    }

    #[test]
    fn obm_hand_value() {
        // X = (1,2,3,4), l = 2: batch sums 3, 5, 7; xbar = 2.5.
        // Deviations: -2, 0, 2; sum of squares 8; denominator 2 * 3.
        let got = obm(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert!((got - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn bartlett_matches_its_window_form() {
        for seed in 0..20 {
            let series = ar1(60, 0.5, 100 + seed);
            for l in [1usize, 3, 7] {
                let a = bartlett(&series, l).unwrap();
                let b = quadratic_form(&series, &WindowSpec::Bartlett { bandwidth: l }).unwrap();
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "seed {seed} l {l}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn bartlett_bandwidth_one_is_welford() {
        let series = ar1(50, 0.2, 9);
        assert!((bartlett(&series, 1).unwrap() - welford(&series).unwrap()).abs() < 1e-13);
        assert_eq!(bartlett(&[4.0; 10], 3).unwrap(), 0.0);
    }
}
