//! Side-by-side simulation of three "realist" readings of quantum mechanics
//! over one shared Schrödinger engine:
//!
//! * [`bohm`] — pilot-wave particle trajectories: quantum-equilibrium
//!   sampling, the guidance velocity field, trajectory integration and
//!   equivariance checks;
//! * [`collapse`] — GRW spontaneous localization: Poisson collapse
//!   schedules, |Ψ|²-law center sampling, Gaussian hits, the matter-density
//!   field and the flash log;
//! * [`branches`] — exact branch statistics for repeated binary
//!   experiments: count measure vs Born measure, observer sampling and
//!   per-branch matter weights;
//! * [`novars`] — exhaustive value-assignment search on a 3×3
//!   observable-constraint square (no-hidden-variables check).
//!
//! The engine itself lives in [`grid`], [`spin`], [`potential`],
//! [`wavefunction`] and [`evolver`]: complex amplitudes on a periodic 1D or
//! 2D configuration-space grid with optional spin components, evolved by a
//! norm-exact symmetric split-operator step. [`scenarios`] wires everything
//! into runnable experiments (Einstein's boxes, Stern–Gerlach, an EPR pair)
//! with per-ontology reports.
//!
//! Units are ħ = 1, default mass 1; lengths and times are simulation units.
//!
//! With the default `parallel` feature, grid passes, ensemble advancement
//! and independent seeded runs are data-parallel via rayon. All
//! floating-point reductions stay sequential and compensated, so results are
//! bit-identical with the feature on or off and independent of scheduling.

pub mod bohm;
pub mod branches;
pub mod collapse;
pub mod error;
pub mod evolver;
pub mod exec;
pub mod grid;
pub mod novars;
pub mod potential;
pub mod rng;
pub mod scenarios;
pub mod spin;
pub mod stats;
pub mod wavefunction;

mod fft;

pub use error::{Error, Result};
pub use evolver::{evolve_step, Evolver, EvolverConfig};
pub use grid::{GridSpec, Interval, Region};
pub use potential::{PotentialSpec, PotentialTerm};
pub use spin::SpinSpec;
pub use wavefunction::{make_gaussian_packet, WaveFunction};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
