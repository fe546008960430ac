//! Online estimation of the nuisance parameter `v_q = sum |k|^q gamma_k`.
//!
//! The estimate reuses the component engine with weight exponents
//! `{q, p + q}` under an ancillary schedule: a square-root rule in small
//! samples, switching to a `(p + q) n^{1/(1 + 2(p + q))}` rule past
//! `n = 1000`. Together with the previous LRV estimate this yields the
//! ratio `kappa_q = |v_q| / sigma^2` that the automatic selector needs.

use crate::components::StreamCore;
use crate::error::Result;
use crate::laser::MeanMode;
use crate::schedule::{ancillary_schedule, clamp_step};

#[derive(Debug, Clone)]
pub struct NuisanceState {
    core: StreamCore,
    q: u32,
    p: u32,
}

impl NuisanceState {
    pub fn init(q: u32, p: u32, mean_mode: MeanMode, x1: f64) -> Result<Self> {
        if q == 0 || p == 0 {
            return Err(crate::Error::InvalidConfig(
                "q and p must be positive integers".into(),
            ));
        }
        let core = StreamCore::init(&[q, p + q], mean_mode == MeanMode::Unknown, x1)?;
        Ok(Self { core, q, p })
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        let (s_raw, t_raw) = ancillary_schedule(self.core.n + 1, self.p, self.q);
        let s = clamp_step(self.core.s, s_raw, 0);
        let t = clamp_step(self.core.t, t_raw, 1).max(1);
        self.core.step(x, s, t)
    }

    /// Current estimate of `v_q`.
    pub fn estimate(&self) -> f64 {
        let n = self.core.n as f64;
        let (q, pq, p) = (self.q, self.p + self.q, self.p);
        let r = self.core.r_short(q, pq, p);
        if self.core.track_mean {
            let xbar = self.core.xbar;
            let rr = self.core.rr_short(q, pq, p);
            let u = self.core.u_short(q, pq, p);
            let v = self.core.v_short(q, pq, p);
            2.0 / n * (r + rr * xbar * xbar - xbar * (u + v))
        } else {
            2.0 / n * r
        }
    }

    pub fn n(&self) -> u64 {
        self.core.n
    }

    pub fn current_s(&self) -> u64 {
        self.core.s
    }

    pub fn current_t(&self) -> u64 {
        self.core.t
    }

    pub fn stored_scalars(&self) -> usize {
        self.core.stored_scalars()
    }
}
