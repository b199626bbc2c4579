//! Real potentials on the grid, per spin component, as sums of simple terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MAX_DIMS};
use crate::spin::SpinSpec;

/// One additive contribution to the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PotentialTerm {
    /// ½ m ω² x² on one coordinate.
    Harmonic { omega: f64, mass: f64, particle: usize },
    /// Constant `height` outside `[lo, hi)` on one coordinate (box walls).
    BoxWalls {
        lo: f64,
        hi: f64,
        height: f64,
        particle: usize,
    },
    /// Idealized magnetic-gradient coupling, active for t in `[on, off)`:
    /// V = -sign · gamma · x · σ_z^(particle). The two spin components of
    /// the coupled particle feel opposite signs; flipping `sign` reverses
    /// the gradient orientation.
    SpinGradient {
        gamma: f64,
        sign: f64,
        particle: usize,
        on: f64,
        off: f64,
    },
}

/// A potential: the sum of zero or more terms. An empty list is free space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    terms: Vec<PotentialTerm>,
}

impl PotentialSpec {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn harmonic(omega: f64, mass: f64, particle: usize) -> Self {
        Self {
            terms: vec![PotentialTerm::Harmonic { omega, mass, particle }],
        }
    }

    pub fn new(terms: Vec<PotentialTerm>) -> Result<Self> {
        let spec = Self { terms };
        spec.validate()?;
        Ok(spec)
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            match *t {
                PotentialTerm::Harmonic { omega, mass, particle } => {
                    if !(omega.is_finite() && mass > 0.0 && mass.is_finite()) {
                        return Err(Error::Config(format!("harmonic term not finite: {t:?}")));
                    }
                    check_particle(particle)?;
                }
                PotentialTerm::BoxWalls { lo, hi, height, particle } => {
                    if !(lo.is_finite() && hi.is_finite() && height.is_finite() && hi > lo) {
                        return Err(Error::Config(format!("box walls invalid: {t:?}")));
                    }
                    check_particle(particle)?;
                }
                PotentialTerm::SpinGradient { gamma, sign, on, off, particle } => {
                    if !(gamma.is_finite() && (sign == 1.0 || sign == -1.0) && off > on) {
                        return Err(Error::Config(format!("spin gradient invalid: {t:?}")));
                    }
                    check_particle(particle)?;
                }
            }
        }
        Ok(())
    }

    /// Potential value for spin component `comp` at position `pos`, time `t`.
    pub fn value(
        &self,
        pos: [f64; MAX_DIMS],
        comp: usize,
        spin: &SpinSpec,
        t: f64,
    ) -> Result<f64> {
        let mut v = 0.0;
        for term in &self.terms {
            v += match *term {
                PotentialTerm::Harmonic { omega, mass, particle } => {
                    let x = pos[particle];
                    0.5 * mass * omega * omega * x * x
                }
                PotentialTerm::BoxWalls { lo, hi, height, particle } => {
                    let x = pos[particle];
                    if x < lo || x >= hi {
                        height
                    } else {
                        0.0
                    }
                }
                PotentialTerm::SpinGradient { gamma, sign, particle, on, off } => {
                    if t >= on && t < off {
                        -sign * gamma * pos[particle] * spin.z_sign(comp, particle)?
                    } else {
                        0.0
                    }
                }
            };
        }
        Ok(v)
    }

    /// Bitmask of which windowed terms are active at time `t`; part of the
    /// phase-table cache key in the evolver.
    pub(crate) fn active_mask(&self, t: f64) -> u64 {
        let mut mask = 0u64;
        for (i, term) in self.terms.iter().enumerate() {
            if let PotentialTerm::SpinGradient { on, off, .. } = *term {
                if t >= on && t < off {
                    mask |= 1 << (i % 64);
                }
            }
        }
        mask
    }

    /// Largest |V| over the grid and spin components at time `t`
    /// (for time-step sanity warnings).
    pub fn max_abs(&self, grid: &GridSpec, spin: &SpinSpec, t: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for flat in 0..grid.total_points() {
            let pos = grid.position(flat);
            for comp in 0..spin.components() {
                worst = worst.max(self.value(pos, comp, spin, t)?.abs());
            }
        }
        Ok(worst)
    }
}

fn check_particle(particle: usize) -> Result<()> {
    if particle >= MAX_DIMS {
        return Err(Error::Config(format!("particle index {particle} out of range")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_acts_with_opposite_signs() {
        let spin = SpinSpec::single();
        let v = PotentialSpec::new(vec![PotentialTerm::SpinGradient {
            gamma: 2.0,
            sign: 1.0,
            particle: 0,
            on: 0.0,
            off: 1.0,
        }])
        .unwrap();
        let up = v.value([0.5, 0.0], 0, &spin, 0.5).unwrap();
        let down = v.value([0.5, 0.0], 1, &spin, 0.5).unwrap();
        assert_eq!(up, -1.0);
        assert_eq!(down, 1.0);
        // outside the window the coupling is off
        assert_eq!(v.value([0.5, 0.0], 0, &spin, 1.0).unwrap(), 0.0);
        assert_eq!(v.active_mask(0.5), 1);
        assert_eq!(v.active_mask(1.5), 0);
    }

    #[test]
    fn reversed_gradient_flips_the_coupling() {
        let spin = SpinSpec::single();
        let plus = PotentialSpec::new(vec![PotentialTerm::SpinGradient {
            gamma: 2.0,
            sign: 1.0,
            particle: 0,
            on: 0.0,
            off: 1.0,
        }])
        .unwrap();
        let minus = PotentialSpec::new(vec![PotentialTerm::SpinGradient {
            gamma: 2.0,
            sign: -1.0,
            particle: 0,
            on: 0.0,
            off: 1.0,
        }])
        .unwrap();
        for comp in 0..2 {
            let a = plus.value([0.3, 0.0], comp, &spin, 0.0).unwrap();
            let b = minus.value([0.3, 0.0], comp, &spin, 0.0).unwrap();
            assert_eq!(a, -b);
        }
    }

    #[test]
    fn harmonic_and_walls() {
        let spin = SpinSpec::scalar();
        let v = PotentialSpec::harmonic(1.0, 1.0, 0);
        assert!((v.value([2.0, 0.0], 0, &spin, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let walls = PotentialSpec::new(vec![PotentialTerm::BoxWalls {
            lo: -1.0,
            hi: 1.0,
            height: 50.0,
            particle: 0,
        }])
        .unwrap();
        assert_eq!(walls.value([0.0, 0.0], 0, &spin, 0.0).unwrap(), 0.0);
        assert_eq!(walls.value([1.5, 0.0], 0, &spin, 0.0).unwrap(), 50.0);
    }

    #[test]
    fn validation_rejects_bad_terms() {
        assert!(PotentialSpec::new(vec![PotentialTerm::SpinGradient {
            gamma: f64::INFINITY,
            sign: 1.0,
            particle: 0,
            on: 0.0,
            off: 1.0,
        }])
        .is_err());
        assert!(PotentialSpec::new(vec![PotentialTerm::SpinGradient {
            gamma: 1.0,
            sign: 0.5,
            particle: 0,
            on: 0.0,
            off: 1.0,
        }])
        .is_err());
        assert!(PotentialSpec::new(vec![PotentialTerm::Harmonic {
            omega: 1.0,
            mass: 1.0,
            particle: 5,
        }])
        .is_err());
    }
}
