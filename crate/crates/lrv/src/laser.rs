//! Streaming LRV estimator with a flat-top polynomial taper and local
//! subsampling, updated in constant time per observation.
//!
//! The estimator evaluates the quadratic form whose window is
//! `(1 - |i-j|^q / t_n^q) 1{|i-j| <= s_{max(i,j)}}`. Setting the subsample
//! sequence identically to zero recovers the plain sample variance; freezing
//! `s = t = l` with `q = 1` recovers the Bartlett kernel estimator of
//! bandwidth `l`.

use crate::components::StreamCore;
use crate::error::{Error, Result};
use crate::schedule::{clamp_step, target_subsample, target_taper};

/// Whether the process mean is known to be zero or must be estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanMode {
    KnownZero,
    #[default]
    Unknown,
}

/// Estimator hyperparameters.
#[derive(Debug, Clone)]
pub struct LaserConfig {
    /// Characteristic exponent of the taper `1 - x^q`.
    pub q: u32,
    /// Memory parameter; 1 keeps a subsample buffer, values >= 2 enable the
    /// constant-space ramped variant. Values in (1, 2) are rejected.
    pub phi: f64,
    /// Subsampling coefficient and exponent: `s_n ~ psi_coeff * n^psi_exp`.
    pub psi_coeff: f64,
    pub psi_exp: f64,
    /// Tapering coefficient and exponent: `t_n ~ theta_coeff * n^theta_exp`.
    pub theta_coeff: f64,
    pub theta_exp: f64,
    /// Finite-sample floors for the two schedules.
    pub s_floor: u64,
    pub t_floor: u64,
    pub mean_mode: MeanMode,
    /// Select the smoothing parameters automatically from a nuisance stream.
    pub auto: bool,
    /// Taper order of the nuisance stream (only used when `auto`).
    pub p: u32,
}

impl LaserConfig {
    /// Explicit smoothing parameters.
    pub fn explicit(q: u32, phi: f64, psi_coeff: f64, psi_exp: f64, theta_coeff: f64, theta_exp: f64) -> Self {
        Self {
            q,
            phi,
            psi_coeff,
            psi_exp,
            theta_coeff,
            theta_exp,
            s_floor: 0,
            t_floor: 1,
            mean_mode: MeanMode::Unknown,
            auto: false,
            p: 1,
        }
    }

    /// Automatic parameter selection with the rate-optimal exponents
    /// `psi = theta = 1/(1 + 2q)` and default floors of 5.
    pub fn auto(q: u32, phi: f64) -> Self {
        let exp = 1.0 / (1.0 + 2.0 * q as f64);
        Self {
            q,
            phi,
            psi_coeff: 1.0,
            psi_exp: exp,
            theta_coeff: 1.0,
            theta_exp: exp,
            s_floor: 5,
            t_floor: 5,
            mean_mode: MeanMode::Unknown,
            auto: true,
            p: 1,
        }
    }

    pub fn with_mean_mode(mut self, mode: MeanMode) -> Self {
        self.mean_mode = mode;
        self
    }

    pub fn with_floors(mut self, s_floor: u64, t_floor: u64) -> Self {
        self.s_floor = s_floor;
        self.t_floor = t_floor;
        self
    }

    pub fn with_nuisance_order(mut self, p: u32) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidConfig("q must be a positive integer".into()));
        }
        if self.phi < 1.0 || (self.phi > 1.0 && self.phi < 2.0) {
            return Err(Error::InvalidConfig(format!(
                "phi must be 1 or >= 2, got {}",
                self.phi
            )));
        }
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.psi_coeff) || !pos(self.theta_coeff) {
            return Err(Error::InvalidConfig("coefficients must be positive".into()));
        }
        if !(0.0 < self.psi_exp && self.psi_exp < 1.0) || !(0.0 < self.theta_exp && self.theta_exp < 1.0)
        {
            return Err(Error::InvalidConfig("exponents must lie in (0, 1)".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidConfig("p must be a positive integer".into()));
        }
        Ok(())
    }

    /// One step of the configured schedules: the smoothing parameters for
    /// sample size `n_next`, given the previous realized values. Both move
    /// by at most one per observation toward their power-law targets.
    pub fn next_schedule(&self, n_next: u64, s_prev: u64, t_prev: u64) -> (u64, u64) {
        let s_target = target_subsample(n_next, self.psi_coeff, self.psi_exp);
        let t_target = target_taper(n_next, self.theta_coeff, self.theta_exp);
        (
            clamp_step(s_prev, s_target, self.s_floor),
            clamp_step(t_prev, t_target, self.t_floor).max(1),
        )
    }
}

/// Constant-size state of the buffered (`phi = 1`) streaming estimator.
#[derive(Debug, Clone)]
pub struct LaserState {
    cfg: LaserConfig,
    core: StreamCore,
}

impl LaserState {
    /// Initialize from the first observation.
    pub fn init(cfg: LaserConfig, x1: f64) -> Result<Self> {
        cfg.validate()?;
        let track_mean = cfg.mean_mode == MeanMode::Unknown;
        let core = StreamCore::init(&[0, cfg.q], track_mean, x1)?;
        Ok(Self { cfg, core })
    }

    /// Ingest one observation under the configured schedule.
    pub fn update(&mut self, x: f64) -> Result<()> {
        let (s, t) = self
            .cfg
            .next_schedule(self.core.n + 1, self.core.s, self.core.t);
        self.core.step(x, s, t)
    }

    /// Ingest one observation under an externally supplied schedule. The
    /// subsampling parameter must not decrease and may grow by at most one;
    /// the tapering parameter only scales the output and is unconstrained
    /// beyond being positive.
    pub fn update_forced(&mut self, x: f64, s: u64, t: u64) -> Result<()> {
        self.core.step(x, s, t)
    }

    /// Current LRV estimate.
    pub fn estimate(&self) -> f64 {
        crate::components::lrv_estimate(
            &self.core,
            self.cfg.q,
            self.cfg.mean_mode == MeanMode::KnownZero,
        )
    }

    pub fn config(&self) -> &LaserConfig {
        &self.cfg
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

    pub fn mean(&self) -> f64 {
        self.core.xbar
    }

    /// Number of stored scalar slots including the subsample buffer.
    pub fn stored_scalars(&self) -> usize {
        self.core.stored_scalars()
    }

    /// Length of the retained observation buffer.
    pub fn buffer_len(&self) -> usize {
        self.core.buffer.len()
    }

    /// Cumulative count of update micro-operations, for instrumentation.
    pub fn op_count(&self) -> u64 {
        self.core.ops
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offline::{quadratic_form, quadratic_form_zero_mean, welford, WindowSpec};

    fn series(n: usize, seed: u64) -> Vec<f64> {
        crate::sim::SeriesModel::arma(0.5, 0.5, 1.0, 0.0)
            .with_seed(seed)
            .gen(n)
            .unwrap()
    }

    /// Drive a state over a series, recording the realized schedule, and
    /// compare against the window oracle at the end.
    fn assert_oracle_match(cfg: LaserConfig, xs: &[f64]) {
        let q = cfg.q;
        let zero_mean = cfg.mean_mode == MeanMode::KnownZero;
        let mut st = LaserState::init(cfg, xs[0]).unwrap();
        let mut s_seq = vec![st.current_s()];
        let mut t_seq = vec![st.current_t()];
        for &x in &xs[1..] {
            st.update(x).unwrap();
            s_seq.push(st.current_s());
            t_seq.push(st.current_t());
        }
        let spec = WindowSpec::Laser {
            q,
            tapers: t_seq,
            subsamples: s_seq,
        };
        let want = if zero_mean {
            quadratic_form_zero_mean(xs, &spec).unwrap()
        } else {
            quadratic_form(xs, &spec).unwrap()
        };
        let got = st.estimate();
        assert!(
            (got - want).abs() <= 1e-10 * want.abs().max(1.0),
            "stream {got} vs oracle {want}"
        );
    }

    #[test]
    fn init_matches_spec_of_first_observation() {
        let st = LaserState::init(LaserConfig::explicit(1, 1.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0), 2.0)
            .unwrap();
        assert_eq!(st.n(), 1);
        assert_eq!(st.current_s(), 0);
        assert_eq!(st.current_t(), 1);
        assert_eq!(st.estimate(), 0.0);
        let zm = LaserState::init(
            LaserConfig::explicit(1, 1.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0)
                .with_mean_mode(MeanMode::KnownZero),
            2.0,
        )
        .unwrap();
        assert_eq!(zm.estimate(), 4.0);
    }

    #[test]
    fn rejects_bad_config_and_nonfinite_input() {
        assert!(LaserState::init(LaserConfig::explicit(0, 1.0, 1.0, 0.3, 1.0, 0.3), 1.0).is_err());
        assert!(LaserState::init(LaserConfig::explicit(1, 1.5, 1.0, 0.3, 1.0, 0.3), 1.0).is_err());
        assert!(LaserState::init(LaserConfig::explicit(1, 1.0, 1.0, 0.3, 1.0, 0.3), f64::NAN).is_err());
        let mut st = LaserState::init(LaserConfig::explicit(1, 1.0, 1.0, 0.3, 1.0, 0.3), 1.0).unwrap();
        assert!(st.update(f64::INFINITY).is_err());
    }

    #[test]
    fn zero_stream_estimates_zero_everywhere() {
        let mut st = LaserState::init(LaserConfig::explicit(2, 1.0, 1.5, 0.4, 2.0, 0.4), 0.0).unwrap();
        for _ in 0..200 {
            st.update(0.0).unwrap();
            assert_eq!(st.estimate(), 0.0);
        }
    }

    #[test]
    fn zero_subsample_schedule_reduces_to_welford() {
        let xs = series(300, 42);
        let mut st = LaserState::init(
            // Tiny coefficient keeps the target at zero throughout.
            LaserConfig::explicit(1, 1.0, 1e-9, 1.0 / 3.0, 2.0, 1.0 / 3.0),
            xs[0],
        )
        .unwrap();
        for &x in &xs[1..] {
            st.update(x).unwrap();
        }
        assert_eq!(st.current_s(), 0);
        let want = welford(&xs).unwrap();
        assert!((st.estimate() - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn frozen_schedule_reduces_to_bartlett() {
        let xs = series(250, 7);
        for l in [3u64, 8] {
            let mut st =
                LaserState::init(LaserConfig::explicit(1, 1.0, 1.0, 0.5, 1.0, 0.5), xs[0]).unwrap();
            for (i, &x) in xs.iter().enumerate().skip(1) {
                let s = l.min(i as u64); // min(l, n-1) grows by one per step
                st.update_forced(x, s, l).unwrap();
            }
            let want = crate::offline::bartlett(&xs, l as usize).unwrap();
            let got = st.estimate();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "l = {l}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn oracle_equivalence_across_q_and_mean_modes() {
        for q in 1..=3u32 {
            let xs = series(400, 100 + q as u64);
            assert_oracle_match(
                LaserConfig::explicit(q, 1.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0),
                &xs,
            );
            assert_oracle_match(
                LaserConfig::explicit(q, 1.0, 1.4, 0.4, 0.9, 0.25)
                    .with_mean_mode(MeanMode::KnownZero),
                &xs,
            );
        }
    }

    #[test]
    fn oracle_equivalence_with_floors_and_large_coeff() {
        let xs = series(300, 9);
        assert_oracle_match(
            LaserConfig::explicit(2, 1.0, 25.0, 1.0 / 3.0, 30.0, 1.0 / 3.0).with_floors(4, 6),
            &xs,
        );
    }

    #[test]
    fn mean_shift_invariance() {
        let xs = series(500, 21);
        let run = |data: &[f64]| {
            let mut st = LaserState::init(
                LaserConfig::explicit(1, 1.0, 1.0, 1.0 / 3.0, 1.5, 1.0 / 3.0),
                data[0],
            )
            .unwrap();
            for &x in &data[1..] {
                st.update(x).unwrap();
            }
            st.estimate()
        };
        let a = run(&xs);
        for shift in [3.0, 25.0] {
            let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let b = run(&shifted);
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                "shift {shift}: {a} vs {b}"
            );
        }
        // Extreme shifts lose digits to cancellation but stay close.
        let big: Vec<f64> = xs.iter().map(|x| x + 1e4).collect();
        let b = run(&big);
        assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn schedule_clamps_and_buffer_bound() {
        let xs = series(400, 3);
        let cfg = LaserConfig::explicit(1, 1.0, 100.0, 1.0 / 3.0, 100.0, 1.0 / 3.0);
        let mut st = LaserState::init(cfg.clone(), xs[0]).unwrap();
        let mut prev = st.current_s();
        for (i, &x) in xs.iter().enumerate().skip(1) {
            st.update(x).unwrap();
            let s = st.current_s();
            assert!(s == prev || s == prev + 1);
            assert!(s <= i as u64);
            let bound = cfg.psi_coeff * ((i + 1) as f64).powf(cfg.psi_exp) + 1.0;
            assert!(st.buffer_len() as f64 <= bound + 1.0);
            prev = s;
        }
    }

    #[test]
    fn forced_schedule_violations_are_rejected() {
        let mut st =
            LaserState::init(LaserConfig::explicit(1, 1.0, 1.0, 0.3, 1.0, 0.3), 1.0).unwrap();
        st.update_forced(0.5, 1, 1).unwrap();
        // Jump by 2.
        assert!(st.update_forced(0.5, 3, 1).is_err());
        // Decrease.
        assert!(st.update_forced(0.5, 0, 1).is_err());
        // Zero taper.
        assert!(st.update_forced(0.5, 1, 0).is_err());
    }

    #[test]
    fn scalar_count_excluding_buffer_depends_only_on_q() {
        let run = |q: u32, n: usize| {
            let xs = series(n, 77);
            let mut st = LaserState::init(
                LaserConfig::explicit(q, 1.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0),
                xs[0],
            )
            .unwrap();
            for &x in &xs[1..] {
                st.update(x).unwrap();
            }
            st.stored_scalars() - st.buffer_len()
        };
        assert_eq!(run(2, 100), run(2, 800));
        assert!(run(3, 100) > run(1, 100));
    }

    #[test]
    fn states_transfer_between_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<LaserState>();
        assert_send_sync::<crate::ramp::RampState>();
        assert_send_sync::<crate::batch::BatchState>();
        assert_send_sync::<crate::auto::AutoLaser>();
        assert_send_sync::<crate::multivar::LrcmState>();
    }

    #[test]
    fn per_update_op_count_is_constant_in_n() {
        let xs = series(3000, 5);
        let mut st = LaserState::init(
            LaserConfig::explicit(3, 1.0, 1.0, 1.0 / 7.0, 2.0, 1.0 / 7.0),
            xs[0],
        )
        .unwrap();
        let mut max_ops = 0;
        let mut prev = st.op_count();
        for &x in &xs[1..] {
            st.update(x).unwrap();
            max_ops = max_ops.max(st.op_count() - prev);
            prev = st.op_count();
        }
        let tail = {
            let before = st.op_count();
            st.update(0.1).unwrap();
            st.op_count() - before
        };
        assert!(tail <= max_ops);
        assert!(max_ops <= 64, "update cost grew: {max_ops}");
    }
}
