//! Constant-space streaming estimation with a ramped subsampling parameter.
//!
//! With memory parameter `phi >= 2` the effective subsampling parameter
//! `s'` climbs by one per observation until it would reach
//! `a = ceil(phi * s)`, then resets to the intended value `s`. Because the
//! reset target is known ahead of time, the window state that will be
//! needed at the reset can be pre-accumulated on the fly (the shadow
//! components below), so no individual past observation ever has to be
//! retrieved: the whole state is a fixed number of scalars plus a ring of
//! the most recent `q + 2` observations.
//!
//! Between resets the intended parameter is frozen; the schedule target is
//! re-read only when a reset happens, which delays an increment by at most
//! one cycle.

use std::collections::VecDeque;

use crate::error::{check_finite, Error, Result};
use crate::lagsum::{Acc, DiffTable, LagSum};
use crate::laser::{LaserConfig, MeanMode};
use crate::schedule::{clamp_step, target_subsample, target_taper};

#[derive(Debug, Clone, Default)]
struct Fold {
    big_r: Acc,
    small_k: f64,
    small_r: Acc,
    big_u: Acc,
    big_v: Acc,
}

impl Fold {
    fn short(a: &Fold, b: &Fold, tq: f64) -> (f64, f64, f64, f64) {
        (
            a.big_r.value() - b.big_r.value() / tq,
            a.small_r.value() - b.small_r.value() / tq,
            a.big_u.value() - b.big_u.value() / tq,
            a.big_v.value() - b.big_v.value() / tq,
        )
    }
}

/// State of the ramped estimator. Scalar count is a fixed function of `q`.
#[derive(Debug, Clone)]
pub struct RampState {
    cfg: LaserConfig,
    n: u64,
    t: u64,
    /// Intended subsampling parameter, frozen between resets.
    s_intend: u64,
    /// Ramping upper bound `ceil(phi * s_intend)`.
    a: u64,
    /// Effective (ramped) subsampling parameter.
    s_prime: u64,
    /// `K'_0` and the order-`q` lag machinery holding `K'_q`.
    k0: Acc,
    lag: LagSum,
    /// Difference table at the intended parameter; advanced only at resets.
    intended_diffs: DiffTable,
    /// Output folds per exponent `{0, q}`.
    fold0: Fold,
    foldq: Fold,
    /// Shadow (pre-calculated) components for the next reset. The counting
    /// sums stay plain: they are exact integer arithmetic in f64.
    shadow_k0: Acc,
    shadow_kq: Acc,
    shadow_c0: f64,
    shadow_cq: f64,
    shadow_d: Vec<Acc>,
    shadow_diffs: DiffTable,
    /// Last `q + 2` observations.
    ring: VecDeque<f64>,
    x_prev: f64,
    x_shadow: f64,
    q_sum: Acc,
    xbar: f64,
    ops: u64,
}

impl RampState {
    pub fn init(cfg: LaserConfig, x1: f64) -> Result<Self> {
        cfg.validate()?;
        if cfg.phi < 2.0 {
            return Err(Error::InvalidConfig(format!(
                "ramped updates need phi >= 2, got {}",
                cfg.phi
            )));
        }
        check_finite(x1, 0)?;
        let q = cfg.q;
        let mut ring = VecDeque::with_capacity(q as usize + 2);
        ring.push_back(x1);
        Ok(Self {
            cfg,
            n: 1,
            t: 1,
            s_intend: 0,
            a: 0,
            s_prime: 0,
            k0: Acc::default(),
            lag: LagSum::new(q),
            intended_diffs: DiffTable::new(q),
            fold0: Fold::default(),
            foldq: Fold::default(),
            shadow_k0: Acc::default(),
            shadow_kq: Acc::default(),
            shadow_c0: 0.0,
            shadow_cq: 0.0,
            shadow_d: vec![Acc::default(); q as usize],
            shadow_diffs: DiffTable::new(q),
            ring,
            x_prev: x1,
            x_shadow: x1,
            q_sum: {
                let mut q = Acc::default();
                q.add_prod(x1, x1);
                q
            },
            xbar: x1,
            ops: 0,
        })
    }

    /// Ingest one observation under the configured schedule.
    pub fn update(&mut self, x: f64) -> Result<()> {
        let s_target = target_subsample(self.n + 1, self.cfg.psi_coeff, self.cfg.psi_exp);
        let t_next = clamp_step(
            self.t,
            target_taper(self.n + 1, self.cfg.theta_coeff, self.cfg.theta_exp),
            self.cfg.t_floor,
        )
        .max(1);
        self.step(x, s_target, t_next)
    }

    /// Ingest one observation with an externally supplied intended-parameter
    /// target (consulted only at resets) and tapering parameter.
    pub fn update_driven(&mut self, x: f64, s_target: u64, t_next: u64) -> Result<()> {
        if t_next == 0 {
            return Err(Error::InvalidSchedule { n: self.n + 1 });
        }
        self.step(x, s_target, t_next)
    }

    fn step(&mut self, x: f64, s_target: u64, t_next: u64) -> Result<()> {
        check_finite(x, self.n as usize)?;
        let q = self.cfg.q;
        let n_new = self.n + 1;

        let s_prime_new;
        if self.s_prime + 1 < self.a {
            // Ramp: the effective parameter climbs by one.
            s_prime_new = self.s_prime + 1;
            self.grow_primed(s_prime_new);
        } else {
            // Reset: re-read the schedule, then splice the shadow state in.
            let mut s_new = clamp_step(self.s_intend, s_target, self.cfg.s_floor);
            s_new = s_new.min(n_new - 1);
            if s_new == self.s_prime + 1 {
                // Upward move in the degenerate low-s phase: the window only
                // gains one element, so the ordinary growth update applies.
                self.grow_primed(s_new);
                self.intended_diffs = self.lag.diffs().clone();
            } else if s_new == 0 {
                self.k0 = Acc::default();
                self.lag.zero();
                self.fold0.small_k = 0.0;
                self.foldq.small_k = 0.0;
            } else if s_new == self.s_intend {
                self.k0 = self.shadow_k0;
                let d = self.shadow_d.clone();
                self.lag.splice(self.shadow_kq, &d, &self.intended_diffs);
                self.fold0.small_k = self.shadow_c0;
                self.foldq.small_k = self.shadow_cq;
            } else {
                debug_assert_eq!(s_new, self.s_intend + 1);
                self.intended_diffs.advance();
                self.k0 = self.shadow_k0;
                self.k0.add(self.x_shadow);
                let mut d = self.shadow_d.clone();
                for b in 1..=q {
                    d[(b - 1) as usize].add_prod(self.intended_diffs.val(b), self.x_shadow);
                }
                let sq = (s_new as f64).powi(q as i32);
                let mut kq = self.shadow_kq;
                kq.add_prod(sq, self.x_shadow);
                self.lag.splice(kq, &d, &self.intended_diffs);
                self.fold0.small_k = self.shadow_c0 + 1.0;
                self.foldq.small_k = self.shadow_cq + sq;
            }
            s_prime_new = s_new;
            self.s_intend = s_new;
            self.a = (self.cfg.phi * s_new as f64).ceil() as u64;
            // Restart the shadow accumulators for the new cycle.
            self.shadow_k0 = Acc::default();
            self.shadow_kq = Acc::default();
            self.shadow_c0 = 0.0;
            self.shadow_cq = 0.0;
            self.shadow_d.iter_mut().for_each(|v| *v = Acc::default());
            self.shadow_diffs = self.intended_diffs.clone();
        }
        self.ops += 4;

        // Shadow accumulation: weight any observation by the lag it will
        // carry at the next reset, while that lag is within the window.
        if s_prime_new > 0 {
            let i = self.a - s_prime_new;
            if i >= 1 && i <= self.s_intend {
                while self.shadow_diffs.idx() > i {
                    self.shadow_diffs.step_down();
                    self.ops += q as u64;
                }
                let iq = (i as f64).powi(q as i32);
                self.shadow_k0.add(x);
                self.shadow_kq.add_prod(iq, x);
                self.shadow_c0 += 1.0;
                self.shadow_cq += iq;
                for b in 1..=q {
                    self.shadow_d[(b - 1) as usize].add_prod(self.shadow_diffs.val(b), x);
                }
                self.ops += 4 + q as u64;
            }
        }

        // Capture the observation that will sit exactly at the window edge
        // when the next reset happens.
        if s_prime_new == self.a - self.s_intend.min(self.a) {
            self.x_shadow = self.x_prev;
        }

        // Output folds.
        self.q_sum.add_prod(x, x);
        let track = self.cfg.mean_mode == MeanMode::Unknown;
        for (fold, k) in [
            (&mut self.fold0, self.k0.value()),
            (&mut self.foldq, self.lag.value()),
        ] {
            fold.big_r.add_prod(x, k);
            if track {
                fold.small_r.add(fold.small_k);
                fold.big_u.add_prod(fold.small_k, x);
                fold.big_v.add(k);
            }
            self.ops += 4;
        }
        self.xbar = (self.n as f64 * self.xbar + x) / n_new as f64;

        self.ring.push_back(x);
        if self.ring.len() > q as usize + 2 {
            self.ring.pop_front();
        }
        self.x_prev = x;
        self.n = n_new;
        self.t = t_next;
        self.s_prime = s_prime_new;
        Ok(())
    }

    /// Ordinary growth update of the primed components (`s' -> s' + 1`).
    fn grow_primed(&mut self, s_prime_new: u64) {
        let len = self.ring.len();
        let ring = &self.ring;
        let recent = |j: u64| ring[len - 1 - j as usize];
        self.k0.add(recent(0));
        self.ops += 1 + self.lag.slide(self.s_prime, s_prime_new, &recent, 0.0);
        let q = self.cfg.q;
        self.fold0.small_k += 1.0;
        self.foldq.small_k += (s_prime_new as f64).powi(q as i32);
    }

    /// Current LRV estimate.
    pub fn estimate(&self) -> f64 {
        let n = self.n as f64;
        let tq = (self.t as f64).powi(self.cfg.q as i32);
        let (r, rr, u, v) = Fold::short(&self.fold0, &self.foldq, tq);
        match self.cfg.mean_mode {
            MeanMode::KnownZero => (self.q_sum.value() + 2.0 * r) / n,
            MeanMode::Unknown => {
                let xbar = self.xbar;
                (self.q_sum.value() + 2.0 * r + (2.0 * rr - n) * xbar * xbar
                    - 2.0 * xbar * (u + v))
                    / n
            }
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn current_s_prime(&self) -> u64 {
        self.s_prime
    }

    pub fn current_s_intended(&self) -> u64 {
        self.s_intend
    }

    pub fn current_t(&self) -> u64 {
        self.t
    }

    pub fn mean(&self) -> f64 {
        self.xbar
    }

    pub fn config(&self) -> &LaserConfig {
        &self.cfg
    }

    /// Number of stored scalar slots; constant in the stream length.
    pub fn stored_scalars(&self) -> usize {
        let fixed = 10; // n, t, s_intend, a, s_prime, Q (2 slots), xbar, x_prev, x_shadow
        let folds = 2 * 9 + 2; // fold slots (4 compensated + small_k) plus K'_0 (2 slots)
        let lag = self.lag.scalar_count();
        let tables = self.intended_diffs.scalar_count() + self.shadow_diffs.scalar_count();
        let shadow = 6 + 2 * self.shadow_d.len();
        fixed + folds + lag + tables + shadow + self.ring.len()
    }

    pub fn op_count(&self) -> u64 {
        self.ops
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offline::{quadratic_form, quadratic_form_zero_mean, WindowSpec};

    fn series(n: usize, seed: u64) -> Vec<f64> {
        crate::sim::SeriesModel::model_i().with_seed(seed).gen(n).unwrap()
    }

    fn assert_oracle_match(cfg: LaserConfig, xs: &[f64]) {
        let q = cfg.q;
        let zero_mean = cfg.mean_mode == MeanMode::KnownZero;
        let mut st = RampState::init(cfg, xs[0]).unwrap();
        let mut s_seq = vec![st.current_s_prime()];
        let mut t_seq = vec![st.current_t()];
        for &x in &xs[1..] {
            st.update(x).unwrap();
            s_seq.push(st.current_s_prime());
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
            "ramped {got} vs oracle {want}"
        );
    }

    #[test]
    fn rejects_phi_below_two() {
        assert!(RampState::init(LaserConfig::explicit(1, 1.0, 1.0, 0.3, 1.0, 0.3), 1.0).is_err());
        assert!(RampState::init(LaserConfig::explicit(1, 1.5, 1.0, 0.3, 1.0, 0.3), 1.0).is_err());
    }

    #[test]
    fn single_observation_and_zero_stream() {
        let cfg = LaserConfig::explicit(1, 2.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0);
        let st = RampState::init(cfg.clone(), 3.0).unwrap();
        assert_eq!(st.estimate(), 0.0);
        let mut st = RampState::init(cfg, 0.0).unwrap();
        for _ in 0..300 {
            st.update(0.0).unwrap();
            assert_eq!(st.estimate(), 0.0);
        }
    }

    #[test]
    fn oracle_equivalence_q1_phi2() {
        let xs = series(300, 17);
        assert_oracle_match(LaserConfig::explicit(1, 2.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0), &xs);
    }

    #[test]
    fn oracle_equivalence_various_q_phi() {
        for (q, phi, seed) in [
            (1u32, 2.0, 31u64),
            (2, 2.0, 32),
            (3, 2.0, 33),
            (1, 3.0, 34),
            (2, 2.5, 35),
            (3, 3.0, 36),
        ] {
            let xs = series(420, seed);
            assert_oracle_match(
                LaserConfig::explicit(q, phi, 1.2, 1.0 / 3.0, 1.8, 0.3),
                &xs,
            );
            assert_oracle_match(
                LaserConfig::explicit(q, phi, 0.8, 0.4, 1.1, 0.35)
                    .with_mean_mode(MeanMode::KnownZero),
                &xs,
            );
        }
    }

    #[test]
    fn oracle_equivalence_with_floors() {
        let xs = series(350, 41);
        assert_oracle_match(
            LaserConfig::explicit(2, 2.0, 10.0, 1.0 / 3.0, 10.0, 1.0 / 3.0).with_floors(3, 4),
            &xs,
        );
    }

    #[test]
    fn ramp_sequence_follows_definition() {
        // Replay the realized s' sequence through the pure ramp rule.
        let xs = series(400, 53);
        let cfg = LaserConfig::explicit(1, 2.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0);
        let mut st = RampState::init(cfg, xs[0]).unwrap();
        let mut prev_prime = st.current_s_prime();
        let mut prev_intend = st.current_s_intended();
        for &x in &xs[1..] {
            let was_ramp = prev_prime + 1 < (2.0 * prev_intend as f64).ceil() as u64;
            st.update(x).unwrap();
            let expect = crate::schedule::ramp_step(
                prev_prime,
                prev_intend,
                2.0,
                st.current_s_intended(),
            )
            .unwrap();
            assert_eq!(st.current_s_prime(), expect);
            if was_ramp {
                // Between resets the ramp climbs and the intended freezes.
                assert_eq!(st.current_s_prime(), prev_prime + 1);
                assert_eq!(st.current_s_intended(), prev_intend);
            } else {
                // At a reset the effective parameter lands on the intended.
                assert_eq!(st.current_s_prime(), st.current_s_intended());
                assert!(st.current_s_intended() <= prev_intend + 1);
            }
            prev_prime = st.current_s_prime();
            prev_intend = st.current_s_intended();
        }
    }

    #[test]
    fn per_update_op_count_is_constant_in_n() {
        let xs = series(4000, 8);
        let mut st = RampState::init(
            LaserConfig::explicit(3, 2.0, 1.3, 1.0 / 7.0, 1.7, 1.0 / 7.0),
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
        assert!(max_ops <= 64, "ramped update cost grew: {max_ops}");
    }

    #[test]
    fn stored_scalar_count_is_flat_in_n() {
        let cfg = LaserConfig::explicit(2, 2.0, 1.5, 1.0 / 3.0, 2.0, 1.0 / 3.0);
        let xs = series(5000, 4);
        let mut st = RampState::init(cfg, xs[0]).unwrap();
        let mut at_1000 = 0;
        for (i, &x) in xs.iter().enumerate().skip(1) {
            st.update(x).unwrap();
            if i + 1 == 1000 {
                at_1000 = st.stored_scalars();
            }
        }
        assert_eq!(st.stored_scalars(), at_1000);
    }

    #[test]
    fn estimates_track_buffered_variant_loosely() {
        // phi = 2 and phi = 1 use different windows but both estimate the
        // same quantity; on a long stream they should be close.
        let xs = series(20_000, 77);
        let t = crate::sim::SeriesModel::model_i().true_targets().unwrap();
        let kappa = t.kappa1;
        let psi1 = crate::auto::psi_star(1, 1.0, kappa).unwrap();
        let th1 = crate::auto::theta_star(1, 1.0, kappa, psi1).unwrap();
        let psi2 = crate::auto::psi_star(1, 2.0, kappa).unwrap();
        let th2 = crate::auto::theta_star(1, 2.0, kappa, psi2).unwrap();
        let mut a = crate::laser::LaserState::init(
            LaserConfig::explicit(1, 1.0, psi1, 1.0 / 3.0, th1, 1.0 / 3.0),
            xs[0],
        )
        .unwrap();
        let mut b = RampState::init(
            LaserConfig::explicit(1, 2.0, psi2, 1.0 / 3.0, th2, 1.0 / 3.0),
            xs[0],
        )
        .unwrap();
        for &x in &xs[1..] {
            a.update(x).unwrap();
            b.update(x).unwrap();
        }
        let (ea, eb) = (a.estimate(), b.estimate());
        assert!((ea - eb).abs() / t.sigma2 < 0.5, "{ea} vs {eb}");
        assert!((eb - t.sigma2).abs() / t.sigma2 < 0.5, "{eb}");
    }
}
