//! The pilot-wave layer: actual particle positions guided by the wave
//! function.
//!
//! Positions are sampled from |ψ|² at t = 0 (quantum equilibrium) and then
//! transported along the velocity field
//!
//! v_j = (ħ/m_j) · Im(Σ_s ψ_s* ∂_j ψ_s) / (Σ_s |ψ_s|²),
//!
//! the spinor-summed current-over-density form. Gradients are central
//! differences on the grid; off-grid evaluation is multilinear. Ensemble
//! members are independent given the read-only field snapshots, so
//! advancement is data-parallel; every member's update is elementwise and
//! results are identical regardless of thread count.

use log::warn;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::evolver::{Evolver, EvolverConfig};
use crate::exec;
use crate::grid::{GridSpec, MAX_DIMS};
use crate::potential::PotentialSpec;
use crate::stats::{bin_cell_masses, histogram, kahan_sum, total_variation};
use crate::wavefunction::WaveFunction;

/// Below this fraction of the peak density a point counts as a node;
/// the velocity there is capped and the member flagged.
pub const NODE_DENSITY_FLOOR: f64 = 1e-12;

/// Actual positions of the particles, one coordinate each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    coords: [f64; MAX_DIMS],
}

impl Configuration {
    pub fn new(coords: &[f64]) -> Self {
        let mut c = [0.0; MAX_DIMS];
        c[..coords.len()].copy_from_slice(coords);
        Self { coords: c }
    }

    pub fn coord(&self, particle: usize) -> f64 {
        self.coords[particle]
    }

    pub fn coords(&self) -> &[f64; MAX_DIMS] {
        &self.coords
    }
}

/// A fixed-size population of configurations sharing one wave function.
#[derive(Debug, Clone)]
pub struct Ensemble {
    dims: usize,
    members: Vec<Configuration>,
    stream_label: String,
    node_warnings: Vec<u32>,
    clamp_warnings: Vec<u32>,
}

impl Ensemble {
    pub fn from_members(dims: usize, members: Vec<Configuration>, stream_label: &str) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Config("ensemble needs at least one member".into()));
        }
        let n = members.len();
        Ok(Self {
            dims,
            members,
            stream_label: stream_label.to_string(),
            node_warnings: vec![0; n],
            clamp_warnings: vec![0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn members(&self) -> &[Configuration] {
        &self.members
    }

    pub fn stream_label(&self) -> &str {
        &self.stream_label
    }

    pub fn node_warnings(&self) -> &[u32] {
        &self.node_warnings
    }

    pub fn total_node_warnings(&self) -> u64 {
        self.node_warnings.iter().map(|&c| c as u64).sum()
    }

    pub fn total_clamp_warnings(&self) -> u64 {
        self.clamp_warnings.iter().map(|&c| c as u64).sum()
    }
}

/// Draw `m` independent configurations from |ψ|² ΔV over grid cells,
/// jittered uniformly within each cell.
pub fn sample_quantum_equilibrium(
    psi: &WaveFunction,
    m: usize,
    rng: &mut impl Rng,
    stream_label: &str,
) -> Result<Ensemble> {
    if m == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let grid = psi.grid();
    let dv = grid.cell_volume();
    let density = psi.density();
    // cumulative masses; compensated so the last entry is exactly the total
    let mut cdf = Vec::with_capacity(density.len());
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for &rho in &density {
        let y = rho * dv - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        cdf.push(acc);
    }
    let total = acc;
    let dx = grid.spacing();
    let l = grid.extent();
    let members = (0..m)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let flat = cdf.partition_point(|&c| c <= u).min(density.len() - 1);
            let idx = grid.unflatten(flat);
            let mut coords = [0.0f64; MAX_DIMS];
            for d in 0..grid.dims() {
                let jitter = (rng.random::<f64>() - 0.5) * dx;
                let mut x = grid.coord(idx[d]) + jitter;
                // periodic wrap for edge cells
                if x < -l {
                    x += 2.0 * l;
                } else if x >= l {
                    x -= 2.0 * l;
                }
                coords[d] = x;
            }
            Configuration { coords }
        })
        .collect();
    Ensemble::from_members(grid.dims(), members, stream_label)
}

/// Density and probability current of one wave-function snapshot, sampled
/// at grid points, ready for multilinear interpolation.
#[derive(Debug, Clone)]
pub struct GuidanceField {
    grid: GridSpec,
    rho: Vec<f64>,
    current: Vec<[f64; MAX_DIMS]>,
    rho_max: f64,
}

impl GuidanceField {
    /// Fields of a single snapshot.
    pub fn new(psi: &WaveFunction) -> Self {
        Self::build(psi, None)
    }

    /// Fields of the pointwise average (a + b)/2 — the mid-step wave
    /// function used by the RK4 transport.
    pub fn midpoint(a: &WaveFunction, b: &WaveFunction) -> Self {
        Self::build(a, Some(b))
    }

    fn build(a: &WaveFunction, blend: Option<&WaveFunction>) -> Self {
        let grid = *a.grid();
        let n = grid.points_per_dim();
        let total = grid.total_points();
        let dims = grid.dims();
        let inv_2dx = 1.0 / (2.0 * grid.spacing());
        let comps = a.spin().components();

        let get = |s: usize, flat: usize| -> C64 {
            match blend {
                None => a.component(s)[flat],
                Some(b) => 0.5 * (a.component(s)[flat] + b.component(s)[flat]),
            }
        };

        // flat = i0 * n + i1 (axis 0 major); periodic neighbor indices
        let neighbor = move |flat: usize, axis: usize, dir: i64| -> usize {
            let idx0 = flat / if dims == 2 { n } else { 1 };
            let idx1 = flat % if dims == 2 { n } else { total };
            match (dims, axis) {
                (1, _) => ((flat as i64 + dir).rem_euclid(total as i64)) as usize,
                (_, 0) => {
                    let j = ((idx0 as i64 + dir).rem_euclid(n as i64)) as usize;
                    j * n + idx1
                }
                _ => {
                    let j = ((idx1 as i64 + dir).rem_euclid(n as i64)) as usize;
                    idx0 * n + j
                }
            }
        };

        let mut packed = vec![[0.0f64; 3]; total];
        exec::for_each_indexed_mut(&mut packed, |flat, out| {
            let mut rho = 0.0;
            let mut j = [0.0f64; MAX_DIMS];
            for s in 0..comps {
                let z = get(s, flat);
                rho += z.norm_sqr();
                for axis in 0..dims {
                    let plus = get(s, neighbor(flat, axis, 1));
                    let minus = get(s, neighbor(flat, axis, -1));
                    let grad = (plus - minus) * inv_2dx;
                    j[axis] += (z.conj() * grad).im;
                }
            }
            out[0] = rho;
            out[1] = j[0];
            out[2] = j[1];
        });

        let mut rho = vec![0.0f64; total];
        let mut current = vec![[0.0f64; MAX_DIMS]; total];
        let mut rho_max = 0.0f64;
        for (i, p) in packed.iter().enumerate() {
            rho[i] = p[0];
            current[i] = [p[1], p[2]];
            rho_max = rho_max.max(p[0]);
        }
        Self {
            grid,
            rho,
            current,
            rho_max,
        }
    }

    /// Velocity at an arbitrary configuration. Returns the per-particle
    /// velocities and whether the node guard engaged (density below
    /// [`NODE_DENSITY_FLOOR`] of the peak; components capped at `v_cap`).
    pub fn velocity_at(
        &self,
        x: &Configuration,
        masses: &[f64],
        hbar: f64,
        v_cap: f64,
    ) -> ([f64; MAX_DIMS], bool) {
        let dims = self.grid.dims();
        let n = self.grid.points_per_dim();
        // corner indices and weights per axis
        let mut base = [0usize; MAX_DIMS];
        let mut frac = [0.0f64; MAX_DIMS];
        for d in 0..dims {
            let (i, f) = self.grid.locate(x.coords[d]);
            base[d] = i;
            frac[d] = f;
        }
        let mut rho = 0.0f64;
        let mut j = [0.0f64; MAX_DIMS];
        let corners = 1usize << dims;
        for corner in 0..corners {
            let mut w = 1.0f64;
            let mut idx = [0usize; MAX_DIMS];
            for d in 0..dims {
                if corner >> d & 1 == 1 {
                    idx[d] = (base[d] + 1) % n;
                    w *= frac[d];
                } else {
                    idx[d] = base[d];
                    w *= 1.0 - frac[d];
                }
            }
            let flat = if dims == 1 { idx[0] } else { idx[0] * n + idx[1] };
            rho += w * self.rho[flat];
            for d in 0..dims {
                j[d] += w * self.current[flat][d];
            }
        }

        let node = rho < NODE_DENSITY_FLOOR * self.rho_max;
        let mut v = [0.0f64; MAX_DIMS];
        for d in 0..dims {
            let raw = hbar * j[d] / (masses[d] * rho);
            v[d] = if raw.is_finite() { raw } else { 0.0 };
            if node {
                v[d] = v[d].clamp(-v_cap, v_cap);
            }
        }
        (v, node)
    }
}

/// Guidance velocity of the spec'd form at one configuration.
///
/// The node guard caps each component at 0.5·Δx/dt and reports via the
/// returned flag.
pub fn guidance_velocity(
    psi: &WaveFunction,
    x: &Configuration,
    cfg: &EvolverConfig,
) -> Result<([f64; MAX_DIMS], bool)> {
    cfg.validate()?;
    let grid = psi.grid();
    for d in 0..grid.dims() {
        if !grid.contains(x.coord(d)) {
            return Err(Error::Config(format!(
                "configuration coordinate {d} = {} outside the domain",
                x.coord(d)
            )));
        }
    }
    let field = GuidanceField::new(psi);
    let v_cap = 0.5 * grid.spacing() / cfg.dt;
    Ok(field.velocity_at(x, &cfg.masses, cfg.hbar, v_cap))
}

/// One RK4 transport step for every member, using wave-function snapshots
/// at t and t + dt (ψ at the half step is their pointwise average).
pub fn advance_ensemble(
    ensemble: &Ensemble,
    psi_t: &WaveFunction,
    psi_next: &WaveFunction,
    cfg: &EvolverConfig,
) -> Result<Ensemble> {
    let dt = psi_next.time() - psi_t.time();
    if !(dt > 0.0) || (dt - cfg.dt).abs() > 1e-9 * cfg.dt.max(1.0) {
        return Err(Error::Config(format!(
            "snapshots are {dt} apart but cfg.dt = {}",
            cfg.dt
        )));
    }
    let start = GuidanceField::new(psi_t);
    let mid = GuidanceField::midpoint(psi_t, psi_next);
    let end = GuidanceField::new(psi_next);
    Ok(advance_with_fields(ensemble, &start, &mid, &end, cfg))
}

pub(crate) fn advance_with_fields(
    ensemble: &Ensemble,
    start: &GuidanceField,
    mid: &GuidanceField,
    end: &GuidanceField,
    cfg: &EvolverConfig,
) -> Ensemble {
    let dt = cfg.dt;
    let grid = &start.grid;
    let v_cap = 0.5 * grid.spacing() / dt;
    let dims = ensemble.dims;
    let l = grid.extent();
    let eps = grid.spacing() * 1e-9;

    let stepped: Vec<(Configuration, bool, bool)> =
        exec::map_collect(ensemble.members.len(), |i| {
            let x0 = ensemble.members[i];
            let mut node = false;
            let mut eval = |field: &GuidanceField, x: &Configuration| -> [f64; MAX_DIMS] {
                let (v, hit) = field.velocity_at(x, &cfg.masses, cfg.hbar, v_cap);
                node |= hit;
                v
            };
            let shift = |x: &Configuration, v: &[f64; MAX_DIMS], h: f64| -> Configuration {
                let mut c = x.coords;
                for d in 0..dims {
                    c[d] += h * v[d];
                }
                Configuration { coords: c }
            };
            let k1 = eval(start, &x0);
            let k2 = eval(mid, &shift(&x0, &k1, 0.5 * dt));
            let k3 = eval(mid, &shift(&x0, &k2, 0.5 * dt));
            let k4 = eval(end, &shift(&x0, &k3, dt));
            let mut coords = x0.coords;
            let mut clamped = false;
            for d in 0..dims {
                coords[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
                if coords[d] < -l || coords[d] >= l {
                    coords[d] = coords[d].clamp(-l, l - eps);
                    clamped = true;
                }
            }
            (Configuration { coords }, node, clamped)
        });

    let mut out = ensemble.clone();
    let mut clamp_total = 0u64;
    for (i, (cfg_i, node, clamped)) in stepped.into_iter().enumerate() {
        out.members[i] = cfg_i;
        if node {
            out.node_warnings[i] += 1;
        }
        if clamped {
            out.clamp_warnings[i] += 1;
            clamp_total += 1;
        }
    }
    if clamp_total > 0 {
        warn!("{clamp_total} member(s) clamped at the domain boundary this step");
    }
    out
}

/// Sampled trajectories of a pilot-wave run.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    dims: usize,
    times: Vec<f64>,
    positions: Vec<Vec<Configuration>>,
    node_warning_counts: Vec<u32>,
}

impl TrajectoryRecord {
    fn new(dims: usize, members: usize) -> Self {
        Self {
            dims,
            times: Vec::new(),
            positions: Vec::new(),
            node_warning_counts: vec![0; members],
        }
    }

    fn push(&mut self, time: f64, ensemble: &Ensemble) {
        if let Some(&last) = self.times.last() {
            assert!(time > last, "trajectory samples must be strictly increasing");
        }
        self.times.push(time);
        self.positions.push(ensemble.members.to_vec());
        self.node_warning_counts.copy_from_slice(&ensemble.node_warnings);
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Positions at sample index `k` (one configuration per member).
    pub fn at(&self, k: usize) -> &[Configuration] {
        &self.positions[k]
    }

    pub fn samples(&self) -> usize {
        self.times.len()
    }

    pub fn node_warning_counts(&self) -> &[u32] {
        &self.node_warning_counts
    }

    /// Rows (time, member, coords…) for CSV serialization.
    pub fn rows(&self) -> impl Iterator<Item = (f64, usize, &[f64; MAX_DIMS])> + '_ {
        self.times.iter().enumerate().flat_map(move |(k, &t)| {
            self.positions[k]
                .iter()
                .enumerate()
                .map(move |(m, c)| (t, m, c.coords()))
        })
    }
}

/// Co-evolve wave function and ensemble to `t_final`, recording every
/// `record_every` steps (and always the first and last state).
pub fn run_pilot_wave(
    psi0: WaveFunction,
    potential: &PotentialSpec,
    cfg: &EvolverConfig,
    ensemble: Ensemble,
    t_final: f64,
    record_every: usize,
) -> Result<(TrajectoryRecord, WaveFunction, Ensemble)> {
    let steps = steps_for(t_final - psi0.time(), cfg.dt)?;
    let mut record = TrajectoryRecord::new(ensemble.dims, ensemble.len());
    let mut evolver = Evolver::new(*psi0.grid(), *psi0.spin(), potential.clone(), cfg.clone())?;
    let mut psi = psi0;
    let mut ens = ensemble;
    record.push(psi.time(), &ens);
    let mut field_start = GuidanceField::new(&psi);
    for step in 1..=steps {
        let prev = psi.clone();
        psi = evolver.step(psi)?;
        let mid = GuidanceField::midpoint(&prev, &psi);
        let end = GuidanceField::new(&psi);
        ens = advance_with_fields(&ens, &field_start, &mid, &end, cfg);
        field_start = end;
        if step == steps || (record_every > 0 && step % record_every == 0) {
            record.push(psi.time(), &ens);
        }
    }
    Ok((record, psi, ens))
}

pub(crate) fn steps_for(duration: f64, dt: f64) -> Result<usize> {
    if duration < 0.0 {
        return Err(Error::Config("duration must be nonnegative".into()));
    }
    let steps = (duration / dt).round();
    if (steps * dt - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(Error::Config(format!(
            "duration {duration} is not a whole number of dt = {dt} steps"
        )));
    }
    Ok(steps as usize)
}

/// Equivariance diagnostics at evenly spaced checkpoint times.
#[derive(Debug, Clone)]
pub struct EquivarianceCheckpoint {
    pub time: f64,
    /// Total-variation distance per particle between the binned empirical
    /// law and the binned |ψ|² marginal.
    pub tv_per_particle: Vec<f64>,
    pub bin_counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone)]
pub struct EquivarianceReport {
    pub bins: usize,
    pub members: usize,
    pub checkpoints: Vec<EquivarianceCheckpoint>,
}

impl EquivarianceReport {
    pub fn max_tv(&self) -> f64 {
        self.checkpoints
            .iter()
            .flat_map(|c| c.tv_per_particle.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn final_tv(&self) -> f64 {
        self.checkpoints
            .last()
            .map(|c| c.tv_per_particle.iter().copied().fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}

/// Sample equilibrium at t = 0, co-evolve ψ and the ensemble to `t_final`,
/// and measure the ensemble-vs-|ψ|² total-variation distance at
/// `checkpoints`+1 evenly spaced times (including t = 0 and t_final).
pub fn equivariance_report(
    psi0: WaveFunction,
    potential: &PotentialSpec,
    cfg: &EvolverConfig,
    members: usize,
    t_final: f64,
    bins: usize,
    checkpoints: usize,
    rng: &mut impl Rng,
    stream_label: &str,
) -> Result<EquivarianceReport> {
    let mut ens = sample_quantum_equilibrium(&psi0, members, rng, stream_label)?;
    let mut report = EquivarianceReport {
        bins,
        members,
        checkpoints: Vec::new(),
    };
    report.checkpoints.push(checkpoint(&psi0, &ens, bins)?);
    if t_final == 0.0 {
        return Ok(report);
    }
    let steps = steps_for(t_final - psi0.time(), cfg.dt)?;
    let checkpoints = checkpoints.max(1);
    let every = (steps / checkpoints).max(1);
    let mut evolver = Evolver::new(*psi0.grid(), *psi0.spin(), potential.clone(), cfg.clone())?;
    let mut psi = psi0;
    let mut field_start = GuidanceField::new(&psi);
    for step in 1..=steps {
        let prev = psi.clone();
        psi = evolver.step(psi)?;
        let mid = GuidanceField::midpoint(&prev, &psi);
        let end = GuidanceField::new(&psi);
        ens = advance_with_fields(&ens, &field_start, &mid, &end, cfg);
        field_start = end;
        if step % every == 0 || step == steps {
            report.checkpoints.push(checkpoint(&psi, &ens, bins)?);
        }
    }
    Ok(report)
}

fn checkpoint(psi: &WaveFunction, ens: &Ensemble, bins: usize) -> Result<EquivarianceCheckpoint> {
    let grid = psi.grid();
    let l = grid.extent();
    let dx = grid.spacing();
    let coords = grid.axis();
    let mut tv_per_particle = Vec::with_capacity(grid.dims());
    let mut bin_counts = Vec::with_capacity(grid.dims());
    for particle in 0..grid.dims() {
        let marginal = psi.marginal_density(particle)?;
        let cell_mass: Vec<f64> = marginal.iter().map(|&v| v * dx).collect();
        let expected = bin_cell_masses(&coords, &cell_mass, dx, -l, l, bins);
        let values: Vec<f64> = ens.members.iter().map(|c| c.coord(particle)).collect();
        let counts = histogram(&values, -l, l, bins);
        let total = ens.len() as f64;
        let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        // edge cells extend half a spacing past ±L; renormalize the binned mass
        let norm = kahan_sum(expected.iter().copied());
        let expected: Vec<f64> = expected.iter().map(|&e| e / norm).collect();
        tv_per_particle.push(total_variation(&empirical, &expected));
        bin_counts.push(counts);
    }
    Ok(EquivarianceCheckpoint {
        time: psi.time(),
        tv_per_particle,
        bin_counts,
    })
}
