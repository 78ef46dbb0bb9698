//! opokit — design and analysis toolkit for cavity-based squeezed-light
//! sources.
//!
//! The crate models a semi-monolithic optical parametric oscillator end
//! to end:
//!
//! - [`cavity`] — Gaussian-beam and Fabry-Pérot figures of merit
//!   (round-trip length, FSR, finesse, linewidth, resonant waist).
//! - [`qpm`] — quasi-phase-matched SHG tuning curves for single- and
//!   double-pass pumping, phase estimation from peak ratios, and
//!   nonlinear-coefficient extraction from cavity-enhanced measurements.
//! - [`squeezing`] — below-threshold squeezed/anti-squeezed noise
//!   spectra, oscillation threshold, escape efficiency and loss budgets.
//! - [`fit`] — damped Gauss-Newton estimation of threshold and cavity
//!   half width from measured levels, plus synthetic datasets.
//! - [`waveguide`] — scalar finite-difference fundamental-mode solver
//!   for square step-index guides and Gaussian-to-mode coupling sweeps.
//! - [`trace`], [`config`], [`plot`], [`report`], [`cli`] — spectrum
//!   traces, unit-suffixed configuration, deterministic SVG/CSV
//!   emission, and the combined pass/fail report behind the `opokit`
//!   binary.
//!
//! Everything is deterministic: fixed seeds, fixed grids, no
//! wall-clock or thread-count dependence in any emitted byte.

// validation guards use `!(v > 0.0)` so NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod cli;
pub mod config;
pub mod error;
pub mod fit;
pub mod numeric;
pub mod plot;
pub mod qpm;
pub mod report;
pub mod squeezing;
pub mod trace;
pub mod waveguide;

pub use cavity::{CavitySpec, GaussianBeam};
pub use config::ToolkitConfig;
pub use error::{Error, Result};
pub use fit::{FitResult, SqueezingObservation};
pub use qpm::QpmConfig;
pub use squeezing::{Branch, LossBudget, SqueezerParams};
pub use trace::NoiseTrace;
pub use waveguide::{ModeField, WaveguideSpec};
