//! Spin degrees of freedom and 2×2 spin operators.
//!
//! Component layouts:
//! * 1 — scalar (no spin);
//! * 2 — one spin-1/2, order (↑, ↓);
//! * 4 — two spin-1/2, tensor order (↑↑, ↑↓, ↓↑, ↓↓): index = 2·s₁ + s₂
//!   with s = 0 for ↑. All Pauli actions in the crate are defined against
//!   this layout.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinSpec {
    components: usize,
}

impl SpinSpec {
    pub fn new(components: usize) -> Result<Self> {
        if !matches!(components, 1 | 2 | 4) {
            return Err(Error::Config(format!(
                "spin components must be 1, 2 or 4, got {components}"
            )));
        }
        Ok(Self { components })
    }

    pub fn scalar() -> Self {
        Self { components: 1 }
    }

    pub fn single() -> Self {
        Self { components: 2 }
    }

    pub fn pair() -> Self {
        Self { components: 4 }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Number of spin-1/2 slots carried (0, 1 or 2).
    pub fn slots(&self) -> usize {
        match self.components {
            1 => 0,
            2 => 1,
            _ => 2,
        }
    }

    /// σ_z eigenvalue (+1 for ↑, -1 for ↓) of component `comp` in the slot
    /// belonging to `particle`.
    pub fn z_sign(&self, comp: usize, particle: usize) -> Result<f64> {
        debug_assert!(comp < self.components);
        match (self.components, particle) {
            (2, 0) => Ok(if comp == 0 { 1.0 } else { -1.0 }),
            (4, 0) => Ok(if comp < 2 { 1.0 } else { -1.0 }),
            (4, 1) => Ok(if comp % 2 == 0 { 1.0 } else { -1.0 }),
            _ => Err(Error::Config(format!(
                "no spin slot for particle {particle} with {} components",
                self.components
            ))),
        }
    }
}

/// A 2×2 complex matrix acting on one spin-1/2 slot, row major.
pub type SpinMatrix = [[C64; 2]; 2];

pub const IDENTITY: SpinMatrix = [
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
];

pub const PAULI_X: SpinMatrix = [
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
];

pub const PAULI_Y: SpinMatrix = [
    [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
    [C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
];

pub const PAULI_Z: SpinMatrix = [
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
];

/// Rotation by `theta` about the y axis:
/// cos(θ/2) I - i sin(θ/2) σ_y. Maps the z measurement axis to one tilted
/// by θ in the x–z plane.
pub fn rotation_y(theta: f64) -> SpinMatrix {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    [
        [C64::new(c, 0.0), C64::new(-s, 0.0)],
        [C64::new(s, 0.0), C64::new(c, 0.0)],
    ]
}

/// Rotation by `theta` about the x axis: cos(θ/2) I - i sin(θ/2) σ_x.
pub fn rotation_x(theta: f64) -> SpinMatrix {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    [
        [C64::new(c, 0.0), C64::new(0.0, -s)],
        [C64::new(0.0, -s), C64::new(c, 0.0)],
    ]
}

/// Max-norm deviation of u†u from the identity.
pub fn unitarity_defect(u: &SpinMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                acc += u[k][i].conj() * u[k][j];
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - want).norm());
        }
    }
    worst
}
