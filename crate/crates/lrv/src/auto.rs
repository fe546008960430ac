//! Closed-form AMSE-optimal smoothing parameters and the automatic
//! parameter selector.
//!
//! At the rate-optimal exponents `psi = theta = 1/(1 + 2q)` the leading
//! mean-squared-error constant of the streaming estimator is an explicit
//! function of `(Psi, Theta, q, phi)` and the nuisance ratio
//! `kappa_q = |v_q| / sigma^2`. Minimizing it gives closed-form optimal
//! coefficients; the selector below plugs a running estimate of `kappa`
//! into them at every step, so the only user choices left are `q` and
//! `phi`.

use crate::error::{Error, Result};
use crate::laser::{LaserConfig, LaserState};
use crate::nuisance::NuisanceState;
use crate::ramp::RampState;
use crate::schedule::{clamp_step, floor_guarded};

/// `kappa = |v_q| / sigma^2` from a previous LRV estimate and a current
/// nuisance estimate. A nonpositive denominator is reported so the caller
/// can fall back to schedule floors.
pub fn kappa_ratio(sigma2_prev: f64, vq_now: f64) -> Result<f64> {
    if sigma2_prev <= 0.0 {
        return Err(Error::DegenerateScale(format!(
            "previous LRV estimate {sigma2_prev} is not positive"
        )));
    }
    Ok(vq_now.abs() / sigma2_prev)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateScale(format!(
            "kappa must be positive and finite, got {kappa}"
        )))
    }
}

/// AMSE-optimal subsampling coefficient `Psi*`.
pub fn psi_star(q: u32, phi: f64, kappa: f64) -> Result<f64> {
    if q == 0 || phi < 1.0 {
        return Err(Error::InvalidConfig("need q >= 1 and phi >= 1".into()));
    }
    check_kappa(kappa)?;
    let qf = q as f64;
    let inner = if phi > 1.0 {
        (phi + 1.0) * (2.0 * qf + 1.0) / (2.0 * qf * (qf + 1.0))
            - 4.0 * (phi.powi(q as i32 + 2) - 1.0) * (2.0 * qf + 1.0)
                / ((phi - 1.0) * qf * (qf + 1.0) * (qf + 2.0) * (3.0 * qf + 2.0))
            + (phi.powi(2 * q as i32 + 2) - 1.0)
                / (2.0 * (phi - 1.0) * qf * (qf + 1.0) * (2.0 * qf + 1.0))
    } else {
        (2.0 * qf + 1.0) / (qf * (qf + 1.0))
            - 4.0 * (2.0 * qf + 1.0) / (qf * (qf + 1.0) * (3.0 * qf + 2.0))
            + 1.0 / (qf * (2.0 * qf + 1.0))
    };
    let rate = 1.0 / (1.0 + 2.0 * qf);
    Ok(inner.powf(-rate) * kappa.powf(2.0 * rate))
}

/// AMSE-optimal tapering coefficient `Theta*` for a given `Psi*`.
pub fn theta_star(q: u32, phi: f64, kappa: f64, psi_star: f64) -> Result<f64> {
    if q == 0 || phi < 1.0 {
        return Err(Error::InvalidConfig("need q >= 1 and phi >= 1".into()));
    }
    check_kappa(kappa)?;
    if !(psi_star.is_finite() && psi_star > 0.0) {
        return Err(Error::InvalidConfig("Psi* must be positive".into()));
    }
    let qf = q as f64;
    let kk = kappa * kappa * psi_star.powf(-(2.0 * qf + 1.0));
    let ratio_pow = if phi > 1.0 {
        let top = phi.powi(q as i32 + 2) - 1.0;
        (qf + 2.0) * (3.0 * qf + 2.0) * (phi.powi(2 * q as i32 + 2) - 1.0)
            / (4.0 * (2.0 * qf + 1.0) * (2.0 * qf + 1.0) * top)
            + kk * (phi - 1.0) * (qf + 1.0) * (qf + 2.0) * (3.0 * qf + 2.0)
                / (4.0 * (2.0 * qf + 1.0) * top)
    } else {
        (qf + 1.0) * (3.0 * qf + 2.0) / (2.0 * (2.0 * qf + 1.0) * (2.0 * qf + 1.0))
            + kk * (qf + 1.0) * (3.0 * qf + 2.0) / (4.0 * (2.0 * qf + 1.0))
    };
    Ok(ratio_pow.powf(1.0 / qf) * psi_star)
}

/// Leading constant of `n^{2q/(1+2q)} MSE / sigma^4` at the rate-optimal
/// exponents: squared-bias term `kappa^2 Theta^{-2q}` plus the variance
/// constant. Exponents away from `psi = theta = 1/(1+2q)` have no finite
/// limiting constant in this normalization and are rejected.
pub fn amse_constant(
    psi: f64,
    psi_coeff: f64,
    theta: f64,
    theta_coeff: f64,
    q: u32,
    phi: f64,
    kappa: f64,
) -> Result<f64> {
    if q == 0 || phi < 1.0 {
        return Err(Error::InvalidConfig("need q >= 1 and phi >= 1".into()));
    }
    check_kappa(kappa)?;
    let qf = q as f64;
    let rate = 1.0 / (1.0 + 2.0 * qf);
    if (psi - theta).abs() > 1e-12 || (psi - rate).abs() > 1e-12 {
        return Err(Error::UnsupportedRegime(format!(
            "AMSE constant defined only at psi = theta = 1/(1+2q) = {rate}"
        )));
    }
    let (big_psi, big_theta) = (psi_coeff, theta_coeff);
    let tq = big_theta.powf(qf);
    let variance = if phi > 1.0 {
        2.0 * big_psi * (phi + 1.0) / (psi + 1.0)
            - 8.0 * big_psi.powf(qf + 1.0) / tq * (phi.powi(q as i32 + 2) - 1.0)
                / ((phi - 1.0) * (qf + 1.0) * (qf + 2.0) * (psi * qf + psi + 1.0))
            + 2.0 * big_psi.powf(2.0 * qf + 1.0) / (tq * tq) * (phi.powi(2 * q as i32 + 2) - 1.0)
                / ((phi - 1.0) * (qf + 1.0) * (2.0 * qf + 1.0) * (2.0 * psi * qf + psi + 1.0))
    } else {
        4.0 * big_psi / (psi + 1.0)
            - 8.0 * big_psi.powf(qf + 1.0) / (tq * (qf + 1.0) * (psi * qf + psi + 1.0))
            + 4.0 * big_psi.powf(2.0 * qf + 1.0)
                / (tq * tq * (2.0 * qf + 1.0) * (2.0 * psi * qf + psi + 1.0))
    };
    Ok(kappa * kappa / (tq * tq) + variance)
}

/// Bundle of AMSE-optimal parameters for a given `(q, phi, kappa)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalParams {
    pub psi_star: f64,
    pub theta_star: f64,
    /// 2 when constant-space updates are required, otherwise 1.
    pub phi_star: u32,
}

impl OptimalParams {
    pub fn for_config(q: u32, phi: f64, kappa: f64, need_constant_space: bool) -> Result<Self> {
        let psi = psi_star(q, phi, kappa)?;
        let theta = theta_star(q, phi, kappa, psi)?;
        Ok(Self {
            psi_star: psi,
            theta_star: theta,
            phi_star: if need_constant_space { 2 } else { 1 },
        })
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
enum MainStream {
    Buffered(LaserState),
    Ramped(RampState),
}

/// Streaming estimator with automatic optimal parameter selection.
///
/// Each update forms `kappa_hat` from the previous LRV estimate and the
/// current nuisance estimate, converts it into subsampling and tapering
/// targets through the optimal coefficients, clamps both schedules to unit
/// increments with floors, and only then ingests the observation into the
/// main and nuisance streams.
#[derive(Debug, Clone)]
pub struct AutoLaser {
    main: MainStream,
    nuis: NuisanceState,
    /// Optimal coefficients with the unknown `kappa` factored out.
    psi_diamond: f64,
    theta_diamond: f64,
    rate: f64,
    kappa_hat: f64,
    kappa_override: Option<f64>,
    s_floor: u64,
    t_floor: u64,
}

impl AutoLaser {
    pub fn init(cfg: LaserConfig, x1: f64) -> Result<Self> {
        Self::init_inner(cfg, x1, None)
    }

    /// Bypass the nuisance estimate with a known `kappa` (the oracle
    /// selector of the benchmark studies).
    pub fn init_with_kappa(cfg: LaserConfig, x1: f64, kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Self::init_inner(cfg, x1, Some(kappa))
    }

    fn init_inner(cfg: LaserConfig, x1: f64, kappa_override: Option<f64>) -> Result<Self> {
        cfg.validate()?;
        let q = cfg.q;
        let rate = 1.0 / (1.0 + 2.0 * q as f64);
        let psi_diamond = psi_star(q, cfg.phi, 1.0)?;
        let theta_diamond = theta_star(q, cfg.phi, 1.0, psi_diamond)?;
        let mut auto_cfg = cfg.clone();
        auto_cfg.psi_exp = rate;
        auto_cfg.theta_exp = rate;
        auto_cfg.auto = true;
        let nuis = NuisanceState::init(q, cfg.p, cfg.mean_mode, x1)?;
        let main = if cfg.phi == 1.0 {
            MainStream::Buffered(LaserState::init(auto_cfg.clone(), x1)?)
        } else {
            MainStream::Ramped(RampState::init(auto_cfg.clone(), x1)?)
        };
        Ok(Self {
            main,
            nuis,
            psi_diamond,
            theta_diamond,
            rate,
            kappa_hat: 0.0,
            kappa_override,
            s_floor: cfg.s_floor,
            t_floor: cfg.t_floor,
        })
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        // Refresh kappa from the previous estimates; carry the last value
        // through transients where the LRV estimate is not yet positive.
        let kappa = match self.kappa_override {
            Some(k) => k,
            None => match kappa_ratio(self.estimate(), self.nuis.estimate()) {
                Ok(k) => {
                    self.kappa_hat = k;
                    k
                }
                Err(_) => self.kappa_hat,
            },
        };
        let n_next = self.n() + 1;
        let scale = if kappa > 0.0 {
            kappa.powf(2.0 * self.rate)
        } else {
            0.0
        };
        let growth = (n_next as f64).powf(self.rate);
        let s_target = floor_guarded(self.psi_diamond * scale * growth);
        let t_target = floor_guarded(self.theta_diamond * scale * growth);
        match &mut self.main {
            MainStream::Buffered(st) => {
                let s = clamp_step(st.current_s(), s_target.min(st.n()), self.s_floor);
                let t = clamp_step(st.current_t(), t_target, self.t_floor).max(1);
                st.update_forced(x, s, t)?;
            }
            MainStream::Ramped(st) => {
                let t = clamp_step(st.current_t(), t_target, self.t_floor).max(1);
                st.update_driven(x, s_target, t)?;
            }
        }
        self.nuis.update(x)
    }

    pub fn estimate(&self) -> f64 {
        match &self.main {
            MainStream::Buffered(st) => st.estimate(),
            MainStream::Ramped(st) => st.estimate(),
        }
    }

    pub fn vq_estimate(&self) -> f64 {
        self.nuis.estimate()
    }

    pub fn kappa_hat(&self) -> f64 {
        self.kappa_override.unwrap_or(self.kappa_hat)
    }

    pub fn n(&self) -> u64 {
        match &self.main {
            MainStream::Buffered(st) => st.n(),
            MainStream::Ramped(st) => st.n(),
        }
    }

    pub fn current_s(&self) -> u64 {
        match &self.main {
            MainStream::Buffered(st) => st.current_s(),
            MainStream::Ramped(st) => st.current_s_prime(),
        }
    }

    pub fn current_t(&self) -> u64 {
        match &self.main {
            MainStream::Buffered(st) => st.current_t(),
            MainStream::Ramped(st) => st.current_t(),
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.main {
            MainStream::Buffered(st) => st.mean(),
            MainStream::Ramped(st) => st.mean(),
        }
    }
}
