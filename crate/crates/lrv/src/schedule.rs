//! Smoothing-parameter schedules.
//!
//! The subsampling parameter `s_n` and tapering parameter `t_n` follow
//! power-law targets `s_n = min(floor(Psi n^psi), n-1)` and
//! `t_n = min(ceil(Theta n^theta), n)`. Realized schedules are clamped to
//! grow by at most one per observation, which is the precondition of every
//! recursive update in this crate; power-law targets can otherwise jump by
//! more than one at small `n` when the coefficient is large.

/// Relative guard applied before floor/ceil so that targets like
/// `8^{1/3} = 2` do not land on the wrong side of an integer.
const POW_EPS: f64 = 1e-9;

pub(crate) fn floor_guarded(x: f64) -> u64 {
    let eps = POW_EPS * x.abs().max(1.0);
    (x + eps).floor().max(0.0) as u64
}

pub(crate) fn ceil_guarded(x: f64) -> u64 {
    let eps = POW_EPS * x.abs().max(1.0);
    (x - eps).ceil().max(0.0) as u64
}

/// Target subsampling parameter `min(floor(Psi n^psi), n - 1)`.
pub fn target_subsample(n: u64, coeff: f64, exp: f64) -> u64 {
    let raw = floor_guarded(coeff * (n as f64).powf(exp));
    raw.min(n.saturating_sub(1))
}

/// Target tapering parameter `min(ceil(Theta n^theta), n)`, at least 1.
pub fn target_taper(n: u64, coeff: f64, exp: f64) -> u64 {
    let raw = ceil_guarded(coeff * (n as f64).powf(exp));
    raw.clamp(1, n.max(1))
}

/// One clamped schedule step: advance by one toward `max(target, floor)`,
/// never retreat.
pub fn clamp_step(prev: u64, target: u64, floor: u64) -> u64 {
    if prev < target.max(floor) {
        prev + 1
    } else {
        prev
    }
}

/// Effective (ramped) subsampling parameter.
///
/// While `s_prev <= s'_prev + 1 < phi * s_prev` the effective parameter keeps
/// ramping by one; once the ramp would reach `phi * s_prev` it resets to the
/// intended value `s_target`. `phi = 1` degenerates to `s_target` at every
/// step. `phi` in `(1, 2)` is rejected because the pre-calculated components
/// that make resets cheap only fit when `phi >= 2`.
pub fn ramp_step(s_prime_prev: u64, s_prev: u64, phi: f64, s_target: u64) -> crate::Result<u64> {
    if phi < 1.0 || (phi > 1.0 && phi < 2.0) {
        return Err(crate::Error::InvalidConfig(format!(
            "memory parameter phi must be 1 or >= 2, got {phi}"
        )));
    }
    if phi == 1.0 {
        return Ok(s_target);
    }
    let next = s_prime_prev + 1;
    if s_prev <= next && (next as f64) < phi * s_prev as f64 {
        Ok(next)
    } else {
        Ok(s_target)
    }
}

/// Ancillary schedule for the nuisance stream.
///
/// `floor(sqrt(n))` up to the small-sample threshold `n0 = 1000`, then
/// `floor(max(sqrt(n0), (p + q) n^{1/(1 + 2(p + q))}))`. The tapering
/// analogue uses ceilings so it never drops to zero.
pub fn ancillary_schedule(n: u64, p: u32, q: u32) -> (u64, u64) {
    const N0: u64 = 1000;
    let nf = n as f64;
    let (s_raw, t_raw) = if n <= N0 {
        (nf.sqrt(), nf.sqrt())
    } else {
        let pq = (p + q) as f64;
        let grown = pq * nf.powf(1.0 / (1.0 + 2.0 * pq));
        let base = (N0 as f64).sqrt();
        (base.max(grown), base.max(grown))
    };
    let s = floor_guarded(s_raw).min(n.saturating_sub(1));
    let t = ceil_guarded(t_raw).clamp(1, n.max(1));
    (s, t)
}
