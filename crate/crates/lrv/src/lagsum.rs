//! Backward finite-difference machinery for lag-weighted moving sums.
//!
//! A moving sum `K_n = sum_{k=1}^{s_n} k^rho X_{n-k}` cannot be shifted in
//! constant time directly because every retained term's weight changes when
//! the window slides. Writing the weight change as a backward difference of
//! `k^rho` and iterating, the order-`rho` difference is the constant
//! `rho!`, so a cascade of `rho` auxiliary sums
//! `D^{(b)}_n = sum_{k=1}^{s_n} d^{(b)}_k X_{n-k}` (one per difference
//! order `b`) restores an O(1)-per-observation update.
//!
//! The difference values are kept in truncated form: `d^{(b)}_k = 0` for
//! `k < b + 1` and the true backward difference of `k^rho` from `k = b + 1`
//! on. The truncation makes the cascade below exact without special-casing
//! window edges; the boundary value at `k = b + 1` is injected explicitly
//! through the constants `c^{(b)}`.

/// Double-length accumulator for sliding sums and long-running folds.
///
/// A recursively maintained window sum is the small residue of large
/// additions and removals; in plain f64 each step injects rounding of the
/// order of the increments, which random-walks over the stream. Two-sum
/// accumulation keeps the running value exact to second order, and
/// [`Acc::add_prod`] feeds products in exactly via FMA, so the only
/// first-order rounding left is a single one at readout.
#[derive(Debug, Clone, Copy, Default)]
pub struct Acc {
    hi: f64,
    lo: f64,
}

impl Acc {
    #[inline]
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = Self::two_sum(self.hi, x);
        let lo = self.lo + e;
        // Renormalize so `hi` stays the leading component.
        let (hi, lo) = Self::two_sum(s, lo);
        self.hi = hi;
        self.lo = lo;
    }

    /// Add `a * b` without rounding the product.
    #[inline]
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.add(e);
    }

    /// Add another accumulator's full value.
    #[inline]
    pub fn add_acc(&mut self, other: &Acc) {
        self.add(other.hi);
        self.add(other.lo);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Constants `c^{(b)} = sum_{r=0}^{b} (-1)^r C(b, r) (b - r + 1)^rho` for
/// `b = 1..=rho`. The last entry equals `rho!`.
pub fn diff_constants(rho: u32) -> Vec<f64> {
    assert!(rho >= 1, "difference order must be positive");
    (1..=rho)
        .map(|b| {
            let mut acc = 0.0;
            let mut binom = 1.0_f64;
            for r in 0..=b {
                let term = ((b - r + 1) as f64).powi(rho as i32);
                acc += if r % 2 == 0 { binom * term } else { -binom * term };
                binom = binom * (b - r) as f64 / (r + 1) as f64;
            }
            acc
        })
        .collect()
}

/// Table of truncated backward-difference values `d^{(b)}_idx`, `b = 1..=rho`,
/// tracked at a single index that moves by one step at a time.
#[derive(Debug, Clone)]
pub struct DiffTable {
    rho: u32,
    consts: Vec<f64>,
    vals: Vec<f64>,
    idx: u64,
}

impl DiffTable {
    pub fn new(rho: u32) -> Self {
        Self {
            rho,
            consts: diff_constants(rho),
            vals: vec![0.0; rho as usize],
            idx: 0,
        }
    }

    pub fn idx(&self) -> u64 {
        self.idx
    }

    /// `d^{(b)}_idx` for `b = 1..=rho`.
    pub fn val(&self, b: u32) -> f64 {
        self.vals[(b - 1) as usize]
    }

    pub fn cst(&self, b: u32) -> f64 {
        self.consts[(b - 1) as usize]
    }

    /// Advance the tracked index by one. Rows are refreshed from the highest
    /// order down so each row can add the already-updated row above it.
    pub fn advance(&mut self) {
        self.idx += 1;
        for b in (1..=self.rho).rev() {
            let i = (b - 1) as usize;
            if self.idx < (b + 1) as u64 {
                self.vals[i] = 0.0;
            } else if self.idx == (b + 1) as u64 {
                self.vals[i] = self.consts[i];
            } else if b < self.rho {
                self.vals[i] += self.vals[i + 1];
            }
            // b == rho above the boundary: constant row, nothing to do.
        }
    }

    /// Step the tracked index down by one. Rows are refreshed from the lowest
    /// order up so each row can subtract the not-yet-updated row above it.
    pub fn step_down(&mut self) {
        debug_assert!(self.idx > 0);
        self.idx -= 1;
        for b in 1..=self.rho {
            let i = (b - 1) as usize;
            if self.idx < (b + 1) as u64 {
                self.vals[i] = 0.0;
            } else if self.idx == (b + 1) as u64 {
                self.vals[i] = self.consts[i];
            } else if b < self.rho {
                self.vals[i] -= self.vals[i + 1];
            }
        }
    }

    pub fn scalar_count(&self) -> usize {
        2 * self.rho as usize + 1
    }
}

/// The moving sum `K_n = sum_{k=1}^{s_n} k^rho X_{n-k}` together with its
/// difference cascade, updated in O(1) arithmetic per observation.
#[derive(Debug, Clone)]
pub struct LagSum {
    rho: u32,
    diffs: DiffTable,
    /// `D^{(b)}_n`, `b = 1..=rho`.
    dvals: Vec<Acc>,
    /// `K_n`. The difference-table values are exact integers in f64, so
    /// double-length accumulation of the observation-weighted sums is all
    /// that is needed to keep the recursion drift-free.
    k: Acc,
}

impl LagSum {
    pub fn new(rho: u32) -> Self {
        Self {
            rho,
            diffs: DiffTable::new(rho),
            dvals: vec![Acc::default(); rho as usize],
            k: Acc::default(),
        }
    }

    /// Current value of `K_n`.
    pub fn value(&self) -> f64 {
        self.k.value()
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    /// Slide the window from `(n-1, s_prev)` to `(n, s_new)` where
    /// `s_new - s_prev` is 0 or 1. Returns the number of update
    /// micro-operations performed, for the constant-work instrumentation.
    ///
    /// `recent(j)` must return `X_{n-1-j}`; it is queried for
    /// `j = 0..=min(s_new, rho) - 1`. `oldest` must be `X_{n-1-s_prev}` and is
    /// only read when the window does not grow.
    pub fn slide(&mut self, s_prev: u64, s_new: u64, recent: &dyn Fn(u64) -> f64, oldest: f64) -> u64 {
        debug_assert!(s_new == s_prev || s_new == s_prev + 1);
        let grow = s_new == s_prev + 1;
        if s_new == 0 {
            return 1; // empty window, everything stays zero
        }
        let mut ops = 1;
        if grow {
            self.diffs.advance();
            for b in (1..=self.rho).rev() {
                let i = (b - 1) as usize;
                if s_new >= (b + 1) as u64 {
                    self.dvals[i].add_prod(self.diffs.cst(b), recent(b as u64));
                    if b < self.rho {
                        let carry = self.dvals[i + 1];
                        self.dvals[i].add_acc(&carry);
                    }
                }
                ops += 1;
            }
            self.k.add(recent(0));
            let d1 = self.dvals[0];
            self.k.add_acc(&d1);
        } else {
            let s = s_prev;
            for b in (1..=self.rho).rev() {
                let i = (b - 1) as usize;
                if s_new >= (b + 1) as u64 {
                    self.dvals[i].add_prod(self.diffs.cst(b), recent(b as u64));
                    if b < self.rho {
                        let carry = self.dvals[i + 1];
                        self.dvals[i].add_acc(&carry);
                    }
                    self.dvals[i].add_prod(-self.diffs.val(b), oldest);
                }
                ops += 1;
            }
            self.k.add(recent(0));
            let d1 = self.dvals[0];
            self.k.add_acc(&d1);
            self.k.add_prod(-(s as f64).powi(self.rho as i32), oldest);
        }
        ops
    }

    /// Overwrite with a spliced window state: `K`, the `D^{(b)}` values, and
    /// a difference table already positioned at the new window size.
    pub fn splice(&mut self, k: Acc, dvals: &[Acc], diffs: &DiffTable) {
        self.k = k;
        self.dvals.copy_from_slice(dvals);
        self.diffs = diffs.clone();
    }

    pub fn dvals(&self) -> &[Acc] {
        &self.dvals
    }

    pub fn diffs(&self) -> &DiffTable {
        &self.diffs
    }

    pub fn zero(&mut self) {
        self.k = Acc::default();
        self.dvals.iter_mut().for_each(|v| *v = Acc::default());
        self.diffs = DiffTable::new(self.rho);
    }

    pub fn scalar_count(&self) -> usize {
        2 + 2 * self.rho as usize + self.diffs.scalar_count()
    }
}
