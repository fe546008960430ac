//! Standard normal quantile via a rational approximation.
//!
//! Absolute error is below 1e-8 on probabilities in `[1e-6, 1 - 1e-6]`,
//! which is the contract relied on by the stopping rules and by the
//! inverse-CDF Gaussian sampler.

#[allow(clippy::excessive_precision)]
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

const P_LOW: f64 = 0.02425;

/// Quantile of the standard normal distribution: returns `z` with `Phi(z) = p`.
///
/// `p` must lie strictly inside `(0, 1)`; the tails return `-inf`/`inf`.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

/// Two-sided critical value `z_{1 - alpha/2}` for a level-`alpha` test.
pub fn two_sided_z(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference quantiles to 16 digits.
    const REFS: [(f64, f64); 7] = [
        (0.5, 0.0),
        (0.75, 0.6744897501960817),
        (0.9, 1.2815515655446004),
        (0.95, 1.6448536269514722),
        (0.975, 1.9599639845400545),
        (0.99, 2.3263478740408408),
        (0.995, 2.5758293035489004),
    ];

    #[test]
    fn matches_reference_values_to_1e8() {
        for &(p, z) in &REFS {
            assert!(
                (normal_quantile(p) - z).abs() < 1e-8,
                "p = {p}: got {}, want {z}",
                normal_quantile(p)
            );
            assert!((normal_quantile(1.0 - p) + z).abs() < 1e-8);
        }
    }

    #[test]
    fn tail_accuracy_within_contract() {
        // Phi^{-1}(1e-6) to full precision.
        let z = -4.753424308822899;
        assert!((normal_quantile(1e-6) - z).abs() < 1e-8);
        assert!((normal_quantile(1.0 - 1e-6) + z).abs() < 1e-8);
    }

    #[test]
    fn monotone_on_a_grid() {
        let mut last = f64::NEG_INFINITY;
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let z = normal_quantile(p);
            assert!(z > last);
            last = z;
        }
    }
}
