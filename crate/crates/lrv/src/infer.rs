//! Inference procedures built on streaming LRV estimates: fixed-width
//! stopping, stationarity-triggered learning-rate drops, and online
//! change-point monitoring.

use crate::batch::BatchState;
use crate::error::{check_finite, Error, Result};
use crate::laser::LaserConfig;
use crate::normal::two_sided_z;

/// Half-width stopping rule: stop once
/// `z_{1-alpha/2} sigma_hat / sqrt(n) + penalty(n) < eps`.
///
/// `sigma_hat` is the current LRV estimate on the standard-deviation scale.
pub fn halfwidth_stop(
    n: u64,
    sigma_hat: f64,
    eps: f64,
    alpha: f64,
    penalty: impl Fn(u64) -> f64,
) -> bool {
    let z = two_sided_z(alpha);
    z * sigma_hat / (n as f64).sqrt() + penalty(n) < eps
}

/// Controller configuration for statistical adaptive learning-rate drops.
#[derive(Debug, Clone, Copy)]
pub struct SasaConfig {
    /// Initial learning rate.
    pub eta0: f64,
    /// Multiplicative drop factor in (0, 1).
    pub tau: f64,
    /// Steps ignored after every (re)start before the diagnostic is tracked.
    pub t_burn: u64,
    /// Minimum diagnostic sample size before testing.
    pub n_min: u64,
    /// Test (and block-append) period.
    pub k_test: u64,
    /// Significance level of the stationarity test.
    pub alpha: f64,
}

impl SasaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta0.is_finite() && self.eta0 >= 0.0) || !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidConfig("need eta0 >= 0 and tau in (0,1)".into()));
        }
        if self.k_test == 0 {
            return Err(Error::InvalidConfig("test period must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0,1)".into()));
        }
        Ok(())
    }
}

impl Default for SasaConfig {
    fn default() -> Self {
        Self {
            eta0: 1.0,
            tau: 0.8,
            t_burn: 2500,
            n_min: 5000,
            k_test: 500,
            alpha: 0.05,
        }
    }
}

/// Stationarity-triggered learning-rate controller.
///
/// Each step forms the diagnostic `d_k = w_k . g_k - eta/2 ||g_k||^2`, whose
/// mean vanishes once the iterate sequence reaches stationarity. Diagnostics
/// gathered after the burn-in are appended in blocks of `k_test` to an
/// internal mini-batch LRV stream; at each test point with enough samples,
/// the learning rate is dropped by `tau` when the normal confidence interval
/// for the mean diagnostic covers zero. A drop restarts the clock and clears
/// the diagnostic stream, since the tested mean changes with the new rate.
#[derive(Debug, Clone)]
pub struct SasaController {
    cfg: SasaConfig,
    eta: f64,
    k: u64,
    t: u64,
    stream: Option<BatchState>,
    pending: Vec<f64>,
}

impl SasaController {
    pub fn new(cfg: SasaConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            eta: cfg.eta0,
            cfg,
            k: 0,
            t: 0,
            stream: None,
            pending: Vec::new(),
        })
    }

    fn diag_cfg() -> LaserConfig {
        LaserConfig::explicit(1, 1.0, 1.0, 1.0 / 3.0, 13.0 / 12.0, 1.0 / 3.0).with_floors(5, 5)
    }

    /// Advance the controller by one step. Returns the learning rate to use
    /// next and whether a drop was triggered at this step.
    pub fn step(&mut self, w: &[f64], g: &[f64]) -> Result<(f64, bool)> {
        if w.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: g.len(),
            });
        }
        let dot: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum();
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let d = dot - 0.5 * self.eta * gg;
        check_finite(d, self.k as usize)?;

        let at_test_point = self.k.is_multiple_of(self.cfg.k_test);
        if self.t > self.cfg.t_burn {
            self.pending.push(d);
            if at_test_point {
                if let Some(stream) = &mut self.stream {
                    stream.update_block(&self.pending)?;
                }
                self.pending.clear();
            }
        } else if self.t == self.cfg.t_burn {
            self.stream = Some(BatchState::init(Self::diag_cfg(), d)?);
        }
        self.t += 1;

        let mut dropped = false;
        if at_test_point {
            if let Some(stream) = &self.stream {
                let n = stream.n();
                if n > self.cfg.n_min {
                    let mean = stream.mean();
                    let sd = stream.estimate().max(0.0).sqrt();
                    let half = two_sided_z(self.cfg.alpha) * sd / (n as f64).sqrt();
                    if mean.abs() <= half {
                        self.eta *= self.cfg.tau;
                        self.t = 0;
                        self.stream = None;
                        self.pending.clear();
                        dropped = true;
                    }
                }
            }
        }
        self.k += 1;
        Ok((self.eta, dropped))
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Size of the diagnostic sample currently tracked.
    pub fn diagnostic_n(&self) -> u64 {
        self.stream.as_ref().map_or(0, BatchState::n)
    }
}

/// Online change-point monitor over a fixed initial sample of size `m`.
///
/// The detector compares the pre-monitoring mean with every split of the
/// monitoring window, scaled by a supplied (or internally estimated) LRV.
#[derive(Debug, Clone)]
pub struct CpMonitor {
    m: usize,
    /// Prefix sums; `prefix[i]` is the sum of the first `i` observations.
    prefix: Vec<f64>,
    sigma: Option<crate::auto::AutoLaser>,
    auto_q: Option<u32>,
}

impl CpMonitor {
    /// Monitor with caller-supplied scale.
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("initial sample size must be positive".into()));
        }
        Ok(Self {
            m,
            prefix: vec![0.0],
            sigma: None,
            auto_q: None,
        })
    }

    /// Monitor that also maintains its own automatically tuned LRV estimate,
    /// initialized lazily from the first pushed observation.
    pub fn with_auto_sigma(m: usize, q: u32) -> Result<Self> {
        let mut mon = Self::new(m)?;
        mon.auto_q = Some(q);
        Ok(mon)
    }

    /// Ingest one observation (initial sample and monitoring period alike).
    pub fn push(&mut self, x: f64) -> Result<()> {
        check_finite(x, self.prefix.len() - 1)?;
        let total = self.prefix.last().copied().unwrap_or(0.0);
        self.prefix.push(total + x);
        match (&mut self.sigma, self.auto_q) {
            (Some(est), _) => est.update(x)?,
            (None, Some(q)) => {
                self.sigma = Some(crate::auto::AutoLaser::init(LaserConfig::auto(q, 1.0), x)?);
            }
            _ => {}
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn mean(&self, a: usize, b: usize) -> f64 {
        (self.prefix[b] - self.prefix[a - 1]) / (b - a + 1) as f64
    }

    /// Detector statistic after `k` monitored observations, with the scale
    /// estimate supplied by the caller.
    pub fn statistic_with_sigma(&self, k: usize, sigma_hat: f64) -> Result<f64> {
        if !(sigma_hat.is_finite() && sigma_hat > 0.0) {
            return Err(Error::DegenerateScale(format!(
                "scale estimate {sigma_hat} must be positive"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let need = self.m + k;
        if self.len() < need {
            return Err(Error::InsufficientData {
                have: self.len(),
                need,
            });
        }
        let m = self.m;
        let mut best = 0.0_f64;
        for j in 0..k {
            let head = self.mean(1, m + j);
            let tail = self.mean(m + j + 1, m + k);
            let cand = (k - j) as f64 * (head - tail).abs();
            best = best.max(cand);
        }
        Ok(best / ((m as f64).sqrt() * sigma_hat))
    }

    /// Detector statistic using the internal automatic LRV estimate.
    pub fn statistic(&self, k: usize) -> Result<f64> {
        let est = self
            .sigma
            .as_ref()
            .ok_or_else(|| Error::DegenerateScale("monitor has no internal scale".into()))?;
        self.statistic_with_sigma(k, est.estimate().max(0.0).sqrt())
    }

    /// Threshold weight `w(t) = (1 + t)^{-1}` at `t = k/m`.
    pub fn threshold_weight(&self, k: usize) -> f64 {
        1.0 / (1.0 + k as f64 / self.m as f64)
    }

    /// Detection flag: `w(k/m) * statistic > critical`.
    pub fn detect_with_sigma(&self, k: usize, sigma_hat: f64, critical: f64) -> Result<bool> {
        Ok(self.threshold_weight(k) * self.statistic_with_sigma(k, sigma_hat)? > critical)
    }
}
