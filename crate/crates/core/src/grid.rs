//! Periodic configuration-space grids: one axis per particle, identical
//! extent and resolution on every axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of configuration coordinates (particles).
pub const MAX_DIMS: usize = 2;

/// A uniform periodic grid over `[-L, L)^dims`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dims: usize,
    points: usize,
    extent: f64,
}

impl GridSpec {
    /// `dims` coordinates, `points` grid points per coordinate (a power of
    /// two, at least 16), half-length `extent` of the periodic domain.
    pub fn new(dims: usize, points: usize, extent: f64) -> Result<Self> {
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::Config(format!(
                "grid dims must be 1 or {MAX_DIMS}, got {dims}"
            )));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per dim must be a power of two >= 16, got {points}"
            )));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Config(format!("extent must be positive, got {extent}")));
        }
        Ok(Self { dims, points, extent })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Δx = 2L / points, exact by construction.
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    pub fn total_points(&self) -> usize {
        self.points.pow(self.dims as u32)
    }

    /// Volume element Δx^dims.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dims as i32)
    }

    /// Coordinate of axis index `i`: -L + i Δx.
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    /// All axis coordinates.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coord(i)).collect()
    }

    /// The matching single-particle grid (same axis, dims = 1).
    pub fn single_particle(&self) -> GridSpec {
        GridSpec {
            dims: 1,
            points: self.points,
            extent: self.extent,
        }
    }

    /// Flat index of per-axis indices (axis 0 major).
    pub fn flatten(&self, idx: [usize; MAX_DIMS]) -> usize {
        match self.dims {
            1 => idx[0],
            _ => idx[0] * self.points + idx[1],
        }
    }

    /// Per-axis indices of a flat index.
    pub fn unflatten(&self, flat: usize) -> [usize; MAX_DIMS] {
        match self.dims {
            1 => [flat, 0],
            _ => [flat / self.points, flat % self.points],
        }
    }

    /// Position of a flat index (unused coordinates are 0).
    pub fn position(&self, flat: usize) -> [f64; MAX_DIMS] {
        let idx = self.unflatten(flat);
        let mut pos = [0.0; MAX_DIMS];
        for d in 0..self.dims {
            pos[d] = self.coord(idx[d]);
        }
        pos
    }

    /// Is `x` inside the periodic fundamental domain `[-L, L)`?
    pub fn contains(&self, x: f64) -> bool {
        x >= -self.extent && x < self.extent
    }

    /// Lower cell index and fractional offset for interpolating at `x`,
    /// with periodic wrap-around.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.points as f64;
        let u = (x + self.extent) / self.spacing();
        let i = u.floor();
        let frac = u - i;
        let wrapped = i.rem_euclid(n) as usize % self.points;
        (wrapped, frac)
    }

    /// Shortest signed separation between two coordinates on the circle.
    pub fn wrapped_distance(&self, a: f64, b: f64) -> f64 {
        let period = 2.0 * self.extent;
        let mut d = (a - b) % period;
        if d < -self.extent {
            d += period;
        } else if d >= self.extent {
            d -= period;
        }
        d
    }
}

/// Half-open coordinate interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }
}

/// A region of configuration space for probability queries.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// One particle confined to an interval, everything else marginalized.
    Particle { particle: usize, interval: Interval },
    /// Joint constraint: every listed axis inside its interval
    /// (`None` = unconstrained).
    All(Vec<Option<Interval>>),
}

impl Region {
    /// Left half-axis for the given particle: `[-L, 0)`.
    pub fn left_half(grid: &GridSpec, particle: usize) -> Self {
        Region::Particle {
            particle,
            interval: Interval::new(-grid.extent(), 0.0),
        }
    }

    /// Right half-axis for the given particle: `[0, L)`.
    pub fn right_half(grid: &GridSpec, particle: usize) -> Self {
        Region::Particle {
            particle,
            interval: Interval::new(0.0, grid.extent()),
        }
    }

    pub(crate) fn matches(&self, grid: &GridSpec, flat: usize) -> bool {
        let pos = grid.position(flat);
        match self {
            Region::Particle { particle, interval } => interval.contains(pos[*particle]),
            Region::All(intervals) => intervals
                .iter()
                .enumerate()
                .all(|(d, iv)| iv.map_or(true, |iv| iv.contains(pos[d]))),
        }
    }
}
