//! Long-run covariance matrix estimation through polarization.
//!
//! Every off-diagonal entry of the LRCM is expressible through three LRV
//! estimates: `Cov(h,k) = (lrv(X_h + X_k) - lrv(X_h) - lrv(X_k)) / 2`. A
//! `d`-dimensional state therefore runs `d` diagonal streams plus
//! `d(d-1)/2` pairwise-sum streams. All constituent streams share one
//! `(s, t)` schedule at every step; when automatic selection is on, the
//! schedule is chosen by a reference stream of `c' X` for a user weight
//! vector `c` and broadcast to the rest.

use nalgebra::DMatrix;

use crate::auto::AutoLaser;
use crate::error::{check_finite, Error, Result};
use crate::laser::{LaserConfig, LaserState};

#[derive(Debug, Clone)]
pub struct LrcmState {
    dim: usize,
    weights: Vec<f64>,
    diag: Vec<LaserState>,
    pairs: Vec<LaserState>,
    reference: Option<AutoLaser>,
    cfg: LaserConfig,
}

fn pair_index(dim: usize, h: usize, k: usize) -> usize {
    debug_assert!(h < k && k < dim);
    h * dim - h * (h + 1) / 2 + (k - h - 1)
}

impl LrcmState {
    /// Initialize from the first observation vector. `weights` is the
    /// reference vector for schedule selection; it defaults to all ones.
    pub fn init(cfg: LaserConfig, weights: Option<Vec<f64>>, x1: &[f64]) -> Result<Self> {
        cfg.validate()?;
        if cfg.phi != 1.0 {
            return Err(Error::InvalidConfig(
                "matrix estimation runs on buffered (phi = 1) streams".into(),
            ));
        }
        let dim = x1.len();
        if dim == 0 {
            return Err(Error::EmptyInput);
        }
        for (i, &x) in x1.iter().enumerate() {
            check_finite(x, i)?;
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; dim]);
        if weights.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: weights.len(),
            });
        }
        let mut stream_cfg = cfg.clone();
        stream_cfg.auto = false;
        let mut diag = Vec::with_capacity(dim);
        for &x in x1 {
            diag.push(LaserState::init(stream_cfg.clone(), x)?);
        }
        let mut pairs = Vec::with_capacity(dim * (dim - 1) / 2);
        for h in 0..dim {
            for k in (h + 1)..dim {
                pairs.push(LaserState::init(stream_cfg.clone(), x1[h] + x1[k])?);
            }
        }
        let reference = if cfg.auto {
            let r: f64 = weights.iter().zip(x1).map(|(w, x)| w * x).sum();
            Some(AutoLaser::init(cfg.clone(), r)?)
        } else {
            None
        };
        Ok(Self {
            dim,
            weights,
            diag,
            pairs,
            reference,
            cfg,
        })
    }

    /// Ingest one observation vector.
    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            check_finite(v, i)?;
        }
        let (s, t) = match &mut self.reference {
            Some(reference) => {
                let r: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum();
                reference.update(r)?;
                (reference.current_s(), reference.current_t())
            }
            None => {
                let st = &self.diag[0];
                self.cfg.next_schedule(st.n() + 1, st.current_s(), st.current_t())
            }
        };
        for (h, st) in self.diag.iter_mut().enumerate() {
            st.update_forced(x[h], s, t)?;
        }
        for h in 0..self.dim {
            for k in (h + 1)..self.dim {
                self.pairs[pair_index(self.dim, h, k)].update_forced(x[h] + x[k], s, t)?;
            }
        }
        Ok(())
    }

    /// Current LRCM estimate; symmetric by construction.
    pub fn estimate(&self) -> DMatrix<f64> {
        let d = self.dim;
        let mut out = DMatrix::zeros(d, d);
        let diag: Vec<f64> = self.diag.iter().map(LaserState::estimate).collect();
        for h in 0..d {
            out[(h, h)] = diag[h];
            for k in (h + 1)..d {
                let sum = self.pairs[pair_index(d, h, k)].estimate();
                let cov = 0.5 * (sum - diag[h] - diag[k]);
                out[(h, k)] = cov;
                out[(k, h)] = cov;
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> u64 {
        self.diag[0].n()
    }

    pub fn current_s(&self) -> u64 {
        self.diag[0].current_s()
    }

    pub fn current_t(&self) -> u64 {
        self.diag[0].current_t()
    }

    pub fn kappa_hat(&self) -> Option<f64> {
        self.reference.as_ref().map(AutoLaser::kappa_hat)
    }
}

/// Eigenvalue floor for the positive-definiteness adjustment.
#[derive(Debug, Clone, Copy)]
pub struct PdAdjustment {
    pub a: f64,
    pub b: f64,
}

impl PdAdjustment {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidConfig("adjustment scale a must be positive".into()));
        }
        if !(b.is_finite() && b > 0.5) {
            return Err(Error::InvalidConfig("adjustment rate b must exceed 1/2".into()));
        }
        Ok(Self { a, b })
    }

    /// Default `a = sqrt(ln(n)/d)`, `b = 9/10`.
    pub fn default_for(n: u64, d: usize) -> Self {
        Self {
            a: ((n.max(2) as f64).ln() / d.max(1) as f64).sqrt(),
            b: 0.9,
        }
    }

    /// The eigenvalue floor `a n^{-b}` at sample size `n`.
    pub fn floor(&self, n: u64) -> f64 {
        self.a * (n as f64).powf(-self.b)
    }
}

/// Clip the correlation spectrum of a symmetric estimate from below.
///
/// The input is rescaled to a correlation matrix, its eigenvalues are
/// floored at `a n^{-b}`, and the result is scaled back. Diagonal entries
/// must be strictly positive. The output is exactly symmetric and its
/// correlation eigenvalues are at least the floor.
pub fn pd_adjust(sigma: &DMatrix<f64>, n: u64, adj: &PdAdjustment) -> Result<DMatrix<f64>> {
    let d = sigma.nrows();
    if d == 0 || sigma.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: sigma.ncols(),
        });
    }
    // Absorb floating-point asymmetry before the spectral step.
    let sym = (sigma + sigma.transpose()) * 0.5;
    let mut scale = Vec::with_capacity(d);
    for i in 0..d {
        let v = sym[(i, i)];
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::DegenerateScale(format!(
                "diagonal entry {i} is {v}, expected positive"
            )));
        }
        scale.push(v.sqrt());
    }
    let mut corr = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            corr[(i, j)] = sym[(i, j)] / (scale[i] * scale[j]);
        }
    }
    let eig = nalgebra::SymmetricEigen::new(corr);
    let floor = adj.floor(n);
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = 0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)]) * scale[i] * scale[j];
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}
