//! Optimal pointer (probe) wave functions for weak-value amplification.
//!
//! Probes live on the bounded momentum interval `|k| <= pi/2` with coupling
//! and hbar set to one. The position operator is `x = i d/dk`, so position
//! eigenfunctions are `exp(-i x0 k)` and, with the periodic boundary
//! condition, the position spectrum is the even integers `x = 2n`.
//!
//! Modules:
//!
//! * [`grid`]: momentum grids, probe wave functions, moments, gauge translations.
//! * [`postselection`]: qubit pre/postselection, weak values, the kernel `B(k)`.
//! * [`spectrum`]: the discrete position spectrum and continuum amplitudes.
//! * [`variational`]: the gauge-fixed shift functional, its gradient and stationary points.
//! * [`families`]: trial-probe families and shift/variance sweeps.
//! * [`io`], [`config`]: CSV and JSON formats, `a+bi` literals.

pub mod config;
pub mod error;
pub mod families;
pub mod grid;
pub mod io;
pub mod postselection;
pub mod spectrum;
pub mod stencil;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use families::{FamilySpec, SweepRow, TrialFamily};
pub use grid::{MomentumGrid, ProbeWaveFunction};
pub use num_complex::Complex64;
pub use postselection::{InvolutiveObservable, PostselectionKernel, QubitState};
pub use spectrum::{DiscreteMoments, PositionAmplitudes};
pub use variational::{Branch, GaugeFixedFunctional, OptimizerConfig, StationaryResult};
