//! Block (mini-batch) updates at user-chosen checkpoints.
//!
//! A block update ingests `n_j - n_{j-1}` observations at once in two
//! phases: first the per-step window sums `K` and `k` are rolled forward
//! across the block (these must be visited at every interior step because
//! later components depend on them), then the output components are folded
//! from the resulting vectors in one pass. Work per block is proportional
//! to the block length, with a constant independent of the stream position.
//!
//! For blocks of length two or more, the subsampling parameter is held
//! fixed across the checkpoint boundary (the first in-block step repeats
//! the previous value) so the parameters at the block edges always agree;
//! a length-one block is an ordinary online step.

use crate::components::{lrv_estimate, StreamCore};
use crate::error::{check_finite, Error, Result};
use crate::laser::{LaserConfig, MeanMode};

#[derive(Debug, Clone)]
pub struct BatchState {
    cfg: LaserConfig,
    core: StreamCore,
    blocks: u64,
}

impl BatchState {
    /// Initialize from the first observation (checkpoint index 0).
    pub fn init(cfg: LaserConfig, x1: f64) -> Result<Self> {
        cfg.validate()?;
        if cfg.phi != 1.0 {
            return Err(Error::InvalidConfig(
                "mini-batch updates are only provided for phi = 1".into(),
            ));
        }
        let track_mean = cfg.mean_mode == MeanMode::Unknown;
        let core = StreamCore::init(&[0, cfg.q], track_mean, x1)?;
        Ok(Self {
            cfg,
            core,
            blocks: 0,
        })
    }

    /// Ingest one block of observations, advancing to the next checkpoint.
    pub fn update_block(&mut self, xs: &[f64]) -> Result<()> {
        if xs.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, &x) in xs.iter().enumerate() {
            check_finite(x, self.core.n as usize + i)?;
        }
        let m = xs.len();
        let hold_first = m >= 2;
        let n_exps = self.core.comps.len();

        // Phase 1: roll the window sums K and k across the block, recording
        // their per-step values.
        let mut k_vecs: Vec<Vec<f64>> = vec![Vec::with_capacity(m); n_exps];
        let mut kc_vecs: Vec<Vec<f64>> = vec![Vec::with_capacity(m); n_exps];
        let mut t = self.core.t;
        for (i, &x) in xs.iter().enumerate() {
            let n_i = self.core.n + 1;
            let s_i = if i == 0 && hold_first {
                self.core.s
            } else {
                let (s, _) = self.cfg.next_schedule(n_i, self.core.s, t);
                s
            };
            let (_, t_i) = self.cfg.next_schedule(n_i, self.core.s, t);
            t = t_i;
            self.core.advance_lags(s_i);
            self.core.push_raw(x, s_i, t_i);
            for (e, comp) in self.core.comps.iter().enumerate() {
                k_vecs[e].push(comp.k_lag);
                kc_vecs[e].push(comp.small_k);
            }
        }

        // Phase 2: fold the output components from the block vectors.
        let n_prev = self.core.n - m as u64;
        let mut block_sum = 0.0;
        for &x in xs {
            block_sum += x;
            self.core.q_sum.add_prod(x, x);
        }
        for (e, comp) in self.core.comps.iter_mut().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                comp.big_r.add_prod(x, k_vecs[e][i]);
            }
            self.core.ops += m as u64;
            if self.core.track_mean {
                for (i, &x) in xs.iter().enumerate() {
                    comp.small_r.add(kc_vecs[e][i]);
                    comp.big_u.add_prod(kc_vecs[e][i], x);
                    comp.big_v.add(k_vecs[e][i]);
                }
                self.core.ops += m as u64;
            }
        }
        self.core.xbar = (n_prev as f64 * self.core.xbar + block_sum) / self.core.n as f64;
        self.blocks += 1;
        Ok(())
    }

    /// LRV estimate at the last checkpoint.
    pub fn estimate(&self) -> f64 {
        lrv_estimate(&self.core, self.cfg.q, self.cfg.mean_mode == MeanMode::KnownZero)
    }

    pub fn n(&self) -> u64 {
        self.core.n
    }

    pub fn mean(&self) -> f64 {
        self.core.xbar
    }

    /// Number of completed block updates.
    pub fn checkpoint_index(&self) -> u64 {
        self.blocks
    }

    pub fn current_s(&self) -> u64 {
        self.core.s
    }

    pub fn current_t(&self) -> u64 {
        self.core.t
    }

    pub fn config(&self) -> &LaserConfig {
        &self.cfg
    }

    pub fn op_count(&self) -> u64 {
        self.core.ops
    }

    /// Length of the trailing observation buffer.
    pub fn buffer_len(&self) -> usize {
        self.core.buffer.len()
    }
}

/// Replay of the schedule a [`BatchState`] realizes over a checkpoint grid,
/// for driving an online state over the identical window sequence.
pub fn block_schedule(cfg: &LaserConfig, total: usize, grid: &[usize]) -> (Vec<u64>, Vec<u64>) {
    let mut s_seq = vec![0u64];
    let mut t_seq = vec![1u64];
    let mut start = 1usize; // first observation consumed at init
    for &end in grid {
        let m = end - start;
        for i in 0..m {
            let n_i = (start + i + 1) as u64;
            let prev_s = *s_seq.last().unwrap();
            let prev_t = *t_seq.last().unwrap();
            let (s_sched, t_sched) = cfg.next_schedule(n_i, prev_s, prev_t);
            let s_i = if i == 0 && m >= 2 { prev_s } else { s_sched };
            s_seq.push(s_i);
            t_seq.push(t_sched);
        }
        start = end;
    }
    debug_assert_eq!(s_seq.len(), total);
    (s_seq, t_seq)
}
