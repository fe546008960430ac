//! Shared recursive component engine.
//!
//! One `StreamCore` maintains, for a set of weight exponents `b`, the
//! components
//!
//! ```text
//! K_b = sum_{k<=s_n} k^b X_{n-k}        k_b = sum_{k<=s_n} k^b
//! R_b = sum_i sum_{k<=s_i} k^b X_i X_{i-k}   r_b = sum_i sum_{k<=s_i} k^b
//! U_b = sum_i sum_{k<=s_i} k^b X_i      V_b = sum_i sum_{k<=s_i} k^b X_{i-k}
//! ```
//!
//! plus `Q = sum X_i^2` and the running mean, under a subsampling schedule
//! that grows by at most one per observation. The tapering parameter never
//! enters the recursions; it is applied as a divisor at output time, which
//! is what lets a single component set serve every taper scale.

use std::collections::VecDeque;

use crate::error::{check_finite, Error, Result};
use crate::lagsum::{Acc, LagSum};

#[derive(Debug, Clone)]
pub(crate) struct Component {
    pub exp: u32,
    /// `K_b`; for `exp >= 1` this mirrors `lag.k`.
    pub k_lag: f64,
    pub lag: Option<LagSum>,
    pub big_r: Acc,
    pub small_k: f64,
    pub small_r: Acc,
    pub big_u: Acc,
    pub big_v: Acc,
}

impl Component {
    fn new(exp: u32) -> Self {
        Self {
            exp,
            k_lag: 0.0,
            lag: (exp >= 1).then(|| LagSum::new(exp)),
            big_r: Acc::default(),
            small_k: 0.0,
            small_r: Acc::default(),
            big_u: Acc::default(),
            big_v: Acc::default(),
        }
    }

    fn scalar_count(&self) -> usize {
        // Four compensated folds count two slots each.
        10 + self.lag.as_ref().map_or(0, |l| l.scalar_count())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct StreamCore {
    pub n: u64,
    pub s: u64,
    pub t: u64,
    pub q_sum: Acc,
    pub xbar: f64,
    pub comps: Vec<Component>,
    pub buffer: VecDeque<f64>,
    /// When false the mean-correction components `k, r, U, V` are skipped.
    pub track_mean: bool,
    pub ops: u64,
}

impl StreamCore {
    pub fn init(exps: &[u32], track_mean: bool, x1: f64) -> Result<Self> {
        check_finite(x1, 0)?;
        let mut buffer = VecDeque::with_capacity(8);
        buffer.push_back(x1);
        Ok(Self {
            n: 1,
            s: 0,
            t: 1,
            q_sum: {
                let mut q = Acc::default();
                q.add_prod(x1, x1);
                q
            },
            xbar: x1,
            comps: exps.iter().map(|&e| Component::new(e)).collect(),
            buffer,
            track_mean,
            ops: 0,
        })
    }

    pub fn component(&self, exp: u32) -> &Component {
        self.comps
            .iter()
            .find(|c| c.exp == exp)
            .expect("component for requested exponent")
    }

    fn validate(&self, x: f64, s_new: u64, t_new: u64) -> Result<()> {
        check_finite(x, self.n as usize)?;
        let monotone = s_new == self.s || s_new == self.s + 1;
        if !monotone || s_new > self.n || t_new == 0 {
            return Err(Error::InvalidSchedule { n: self.n + 1 });
        }
        Ok(())
    }

    /// Slide every `K_b` window from `(n, s)` to `(n + 1, s_new)` and trim
    /// the buffer. Must be followed by [`Self::push_and_fold`].
    pub fn advance_lags(&mut self, s_new: u64) {
        let grow = s_new > self.s;
        let len = self.buffer.len();
        let oldest = if !grow && self.s > 0 {
            *self.buffer.front().expect("window nonempty")
        } else {
            0.0
        };
        for comp in &mut self.comps {
            if comp.exp == 0 {
                if s_new > 0 {
                    let newest = self.buffer[len - 1];
                    comp.k_lag += if grow { newest } else { newest - oldest };
                }
                self.ops += 1;
            } else {
                let buf = &self.buffer;
                let recent = |j: u64| buf[len - 1 - j as usize];
                let lag = comp.lag.as_mut().expect("lag machinery");
                self.ops += lag.slide(self.s, s_new, &recent, oldest);
                comp.k_lag = lag.value();
            }
        }
        if s_new == self.s {
            self.buffer.pop_front();
        }
    }

    /// Advance the bookkeeping for `X_{n+1}` (buffer, counters, `k_b`)
    /// without folding the output components.
    pub fn push_raw(&mut self, x: f64, s_new: u64, t_new: u64) {
        let grow = s_new > self.s;
        self.buffer.push_back(x);
        self.n += 1;
        self.s = s_new;
        self.t = t_new;
        if self.track_mean && grow {
            for comp in &mut self.comps {
                comp.small_k += (s_new as f64).powi(comp.exp as i32);
            }
        }
        self.ops += 1;
    }

    /// Ingest `X_{n+1}` and fold the output components.
    pub fn push_and_fold(&mut self, x: f64, s_new: u64, t_new: u64) {
        self.push_raw(x, s_new, t_new);
        self.q_sum.add_prod(x, x);
        for comp in &mut self.comps {
            comp.big_r.add_prod(x, comp.k_lag);
            self.ops += 1;
            if self.track_mean {
                comp.small_r.add(comp.small_k);
                comp.big_u.add_prod(comp.small_k, x);
                comp.big_v.add(comp.k_lag);
                self.ops += 3;
            }
        }
        self.xbar = ((self.n - 1) as f64 * self.xbar + x) / self.n as f64;
        self.ops += 2;
    }

    /// One full observation step under an externally chosen schedule.
    pub fn step(&mut self, x: f64, s_new: u64, t_new: u64) -> Result<()> {
        self.validate(x, s_new, t_new)?;
        self.advance_lags(s_new);
        self.push_and_fold(x, s_new, t_new);
        Ok(())
    }

    /// `A_a - A_b / t^c` for the `R` components; the same shorthand is
    /// provided for `r`, `U` and `V` below.
    pub fn r_short(&self, a: u32, b: u32, c: u32) -> f64 {
        self.component(a).big_r.value()
            - self.component(b).big_r.value() / (self.t as f64).powi(c as i32)
    }

    pub fn rr_short(&self, a: u32, b: u32, c: u32) -> f64 {
        self.component(a).small_r.value()
            - self.component(b).small_r.value() / (self.t as f64).powi(c as i32)
    }

    pub fn u_short(&self, a: u32, b: u32, c: u32) -> f64 {
        self.component(a).big_u.value()
            - self.component(b).big_u.value() / (self.t as f64).powi(c as i32)
    }

    pub fn v_short(&self, a: u32, b: u32, c: u32) -> f64 {
        self.component(a).big_v.value()
            - self.component(b).big_v.value() / (self.t as f64).powi(c as i32)
    }

    /// Number of stored scalar slots, buffer included.
    pub fn stored_scalars(&self) -> usize {
        6 + self
            .comps
            .iter()
            .map(Component::scalar_count)
            .sum::<usize>()
            + self.buffer.len()
    }
}

/// Output formula shared by the buffered and mini-batch estimators.
pub(crate) fn lrv_estimate(core: &StreamCore, q: u32, zero_mean: bool) -> f64 {
    let n = core.n as f64;
    let r = core.r_short(0, q, q);
    if zero_mean {
        (core.q_sum.value() + 2.0 * r) / n
    } else {
        let xbar = core.xbar;
        let rr = core.rr_short(0, q, q);
        let u = core.u_short(0, q, q);
        let v = core.v_short(0, q, q);
        (core.q_sum.value() + 2.0 * r + (2.0 * rr - n) * xbar * xbar - 2.0 * xbar * (u + v)) / n
    }
}
