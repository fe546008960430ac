//! Streaming estimation of the long-run variance (LRV) and long-run
//! covariance matrix (LRCM) of dependent time series.
//!
//! The central estimator is a windowed quadratic form with a flat-top
//! polynomial taper and locally chosen subsamples. It admits recursive
//! updates whose arithmetic cost per observation is constant in the sample
//! size, a ramped variant whose memory footprint is also constant, block
//! (mini-batch) updates for checkpointed workloads, and a fully automatic
//! smoothing-parameter selector driven by an auxiliary nuisance stream.
//!
//! Layout:
//! - [`offline`]: definition-level `O(n^2)` evaluators (window quadratic
//!   forms, Bartlett kernel, overlapping batch means, Welford) used both as
//!   batch estimators and as ground truth in tests.
//! - [`laser`]: the buffered constant-time streaming estimator.
//! - [`ramp`]: the constant-space variant with ramped subsampling.
//! - [`batch`]: block updates at user-chosen checkpoints.
//! - [`nuisance`], [`auto`]: online nuisance estimation, closed-form
//!   AMSE-optimal parameters and the automatic selector.
//! - [`multivar`]: LRCM estimation through polarization plus a
//!   positive-definiteness adjustment.
//! - [`infer`]: half-width stopping, stationarity-triggered learning-rate
//!   control and change-point monitoring.
//! - [`sim`]: seeded generators for the benchmark models.
//!
//! ```
//! use lrv::{LaserConfig, LaserState};
//!
//! let xs = [0.4, -1.1, 0.3, 0.9, -0.2, 0.5];
//! let mut state = LaserState::init(LaserConfig::explicit(1, 1.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0), xs[0]).unwrap();
//! for &x in &xs[1..] {
//!     state.update(x).unwrap();
//! }
//! assert!(state.estimate() >= 0.0);
//! ```

pub mod auto;
pub mod batch;
mod components;
pub mod error;
pub mod infer;
pub mod lagsum;
pub mod laser;
pub mod multivar;
pub mod normal;
pub mod nuisance;
pub mod offline;
pub mod ramp;
pub mod schedule;
pub mod sim;

pub use auto::{amse_constant, kappa_ratio, psi_star, theta_star, AutoLaser, OptimalParams};
pub use batch::BatchState;
pub use error::{Error, Result};
pub use infer::{halfwidth_stop, CpMonitor, SasaConfig, SasaController};
pub use laser::{LaserConfig, LaserState, MeanMode};
pub use multivar::{pd_adjust, LrcmState, PdAdjustment};
pub use nuisance::NuisanceState;
pub use offline::{bartlett, obm, quadratic_form, welford, window_weight, WindowSpec};
pub use ramp::RampState;
pub use sim::{SeriesModel, TrueTargets};
