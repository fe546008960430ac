//! Seeded generators for the benchmark time-series models.
//!
//! Every generator is a pure function of `(model, seed, replicate, n)`.
//! Replicates use disjoint counter streams of one ChaCha instance, so
//! parallel Monte Carlo needs no shared state. Output is deterministic per
//! seed within a build; bit-exact reproducibility across platforms or
//! compiler versions is not promised because of `powf`/`ln` differences.

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::normal::normal_quantile;

/// Largest sample size generated through a dense covariance factorization.
const FGN_MAX_N: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// `X_i - mu = a (X_{i-1} - mu) + b e_{i-1} + e_i`, Gaussian innovations
    /// with standard deviation `nu`.
    Arma { a: f64, b: f64, nu: f64, mu: f64 },
    /// `X_i = (0.9 + 0.1 e_i) X_{i-1} + e_i`, standard Gaussian innovations.
    Bilinear,
    /// Zero-mean Gaussian process with autocovariance `a (k + b)^{-c}`,
    /// generated through a dense Cholesky factorization.
    Fgn { a: f64, b: f64, c: f64 },
}

/// Closed-form population targets of an ARMA(1,1) model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueTargets {
    pub sigma2: f64,
    pub v1: f64,
    pub kappa1: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesModel {
    pub kind: ModelKind,
    pub burnin: usize,
    pub seed: u64,
    pub stream: u64,
}

impl SeriesModel {
    pub fn arma(a: f64, b: f64, nu: f64, mu: f64) -> Self {
        Self {
            kind: ModelKind::Arma { a, b, nu, mu },
            burnin: 100,
            seed: 0,
            stream: 0,
        }
    }

    pub fn bilinear() -> Self {
        Self {
            kind: ModelKind::Bilinear,
            burnin: 100,
            seed: 0,
            stream: 0,
        }
    }

    pub fn fgn(a: f64, b: f64, c: f64) -> Self {
        Self {
            kind: ModelKind::Fgn { a, b, c },
            burnin: 100,
            seed: 0,
            stream: 0,
        }
    }

    /// Benchmark model I: mildly autocorrelated ARMA(1,1).
    pub fn model_i() -> Self {
        Self::arma(0.5, 0.5, 1.0, 0.0)
    }

    /// Benchmark model II: strongly autocorrelated bilinear recursion.
    pub fn model_ii() -> Self {
        Self::bilinear()
    }

    /// Benchmark model III: slowly decaying Gaussian autocovariance.
    pub fn model_iii() -> Self {
        Self::fgn(100.0, 5.0, 5.0)
    }

    /// Benchmark model IV: negatively autocorrelated ARMA(1,1).
    pub fn model_iv() -> Self {
        Self::arma(0.2, -0.6, 1.0, 0.0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Select a disjoint RNG stream for one Monte Carlo replicate.
    pub fn replicate(mut self, r: u64) -> Self {
        self.stream = r;
        self
    }

    pub fn with_burnin(mut self, burnin: usize) -> Self {
        self.burnin = burnin;
        self
    }

    fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Generate a length-`n` realization (after burn-in).
    pub fn gen(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut rng = self.rng();
        match self.kind {
            ModelKind::Arma { a, b, nu, mu } => {
                if a.abs() >= 1.0 {
                    return Err(Error::Model(format!("ARMA coefficient |a| must be < 1, got {a}")));
                }
                let total = n + self.burnin;
                let mut out = Vec::with_capacity(total);
                let mut x = mu;
                let mut eps_prev = 0.0;
                for _ in 0..total {
                    let eps = nu * gaussian(&mut rng);
                    x = mu + a * (x - mu) + b * eps_prev + eps;
                    eps_prev = eps;
                    out.push(x);
                }
                Ok(out.split_off(self.burnin))
            }
            ModelKind::Bilinear => {
                let total = n + self.burnin;
                let mut out = Vec::with_capacity(total);
                let mut x = 0.0;
                for _ in 0..total {
                    let eps = gaussian(&mut rng);
                    x = (0.9 + 0.1 * eps) * x + eps;
                    out.push(x);
                }
                Ok(out.split_off(self.burnin))
            }
            ModelKind::Fgn { a, b, c } => {
                if n > FGN_MAX_N {
                    return Err(Error::Model(format!(
                        "dense factorization limited to {FGN_MAX_N} points, requested {n}"
                    )));
                }
                let total = n + self.burnin;
                let cov = DMatrix::from_fn(total, total, |i, j| {
                    let k = i.abs_diff(j) as f64;
                    a * (k + b).powf(-c)
                });
                let chol = cov.cholesky().ok_or_else(|| {
                    Error::Model("autocovariance matrix is not positive definite".into())
                })?;
                let z = DMatrix::from_fn(total, 1, |_, _| gaussian(&mut rng));
                let x = chol.l() * z;
                Ok(x.column(0).iter().copied().skip(self.burnin).collect())
            }
        }
    }

    /// Population LRV, first-order nuisance parameter and their ratio, when
    /// available in closed form (ARMA only).
    pub fn true_targets(&self) -> Option<TrueTargets> {
        match self.kind {
            ModelKind::Arma { a, b, nu, mu: _ } => {
                let nu2 = nu * nu;
                let gamma0 = nu2 * (1.0 + 2.0 * a * b + b * b) / (1.0 - a * a);
                let gamma1 = nu2 * (1.0 + a * b) * (a + b) / (1.0 - a * a);
                let sigma2 = gamma0 + 2.0 * gamma1 / (1.0 - a);
                let v1 = 2.0 * gamma1 / ((1.0 - a) * (1.0 - a));
                Some(TrueTargets {
                    sigma2,
                    v1,
                    kappa1: v1.abs() / sigma2,
                })
            }
            _ => None,
        }
    }

    /// Autocovariance at lag `k`, where available in closed form.
    pub fn acvf(&self, k: usize) -> Option<f64> {
        match self.kind {
            ModelKind::Arma { a, b, nu, .. } => {
                let nu2 = nu * nu;
                let gamma0 = nu2 * (1.0 + 2.0 * a * b + b * b) / (1.0 - a * a);
                let gamma1 = nu2 * (1.0 + a * b) * (a + b) / (1.0 - a * a);
                Some(match k {
                    0 => gamma0,
                    _ => gamma1 * a.powi(k as i32 - 1),
                })
            }
            ModelKind::Fgn { a, b, c } => Some(a * (k as f64 + b).powf(-c)),
            ModelKind::Bilinear => None,
        }
    }
}

/// Standard Gaussian draw through the inverse CDF of a 53-bit uniform.
pub fn gaussian(rng: &mut ChaCha12Rng) -> f64 {
    // Map to the open interval (0, 1): offset by half an ulp of the grid.
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0) + 1.0 / 18014398509481984.0;
    normal_quantile(u)
}
