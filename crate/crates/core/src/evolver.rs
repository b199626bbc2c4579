//! Unitary time evolution by symmetric operator splitting.
//!
//! One step is: half potential phase, full kinetic phase in spectral space,
//! half potential phase. Each factor is a pointwise unitary, so the norm is
//! preserved to rounding on every step; the splitting is second order in dt
//! (and exact for a free particle). Phase tables are cached and rebuilt only
//! when the time step or the set of active potential windows changes.

use log::warn;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exec;
use crate::fft::{wavenumbers, SpectralPlan};
use crate::grid::GridSpec;
use crate::potential::PotentialSpec;
use crate::spin::SpinSpec;
use crate::wavefunction::WaveFunction;

/// Time step, per-particle masses, and ħ.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvolverConfig {
    pub dt: f64,
    pub masses: Vec<f64>,
    pub hbar: f64,
}

impl EvolverConfig {
    pub fn new(dt: f64, masses: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            dt,
            masses,
            hbar: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.masses.is_empty() || self.masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::Config(format!("masses must be positive: {:?}", self.masses)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::Config(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }
}

/// Reusable stepper for one (grid, spin, potential, config) combination.
pub struct Evolver {
    grid: GridSpec,
    spin: SpinSpec,
    potential: PotentialSpec,
    cfg: EvolverConfig,
    plan: SpectralPlan,
    /// kinetic phase × 1/N, keyed by dt bits
    kinetic: Option<(u64, Vec<C64>)>,
    /// half-step potential phase per component, keyed by (window mask, dt bits)
    pot_half: Option<(u64, u64, Vec<Vec<C64>>)>,
    warned: bool,
}

impl Evolver {
    pub fn new(
        grid: GridSpec,
        spin: SpinSpec,
        potential: PotentialSpec,
        cfg: EvolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        potential.validate()?;
        if cfg.masses.len() != grid.dims() {
            return Err(Error::Config(format!(
                "{} masses for a {}-coordinate grid",
                cfg.masses.len(),
                grid.dims()
            )));
        }
        Ok(Self {
            plan: SpectralPlan::new(&grid),
            grid,
            spin,
            potential,
            cfg,
            kinetic: None,
            pot_half: None,
            warned: false,
        })
    }

    pub fn config(&self) -> &EvolverConfig {
        &self.cfg
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// Advance by the configured dt.
    pub fn step(&mut self, psi: WaveFunction) -> Result<WaveFunction> {
        self.step_by(psi, self.cfg.dt)
    }

    /// Advance by an explicit dt (used for partial steps up to event times).
    pub fn step_by(&mut self, mut psi: WaveFunction, dt: f64) -> Result<WaveFunction> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("step dt must be positive, got {dt}")));
        }
        self.warn_once_on_coarse_dt(psi.time())?;
        let t0 = psi.time();

        self.apply_potential_half(&mut psi, t0, dt)?;
        self.apply_kinetic(&mut psi, dt);
        self.apply_potential_half(&mut psi, t0 + dt, dt)?;

        psi.set_time(t0 + dt);
        psi.bump_step();

        let n2 = psi.norm_sq();
        if !n2.is_finite() || (n2 - 1.0).abs() > 1e-8 {
            return Err(Error::NumericalBlowup {
                step: psi.steps(),
                time: psi.time(),
                detail: format!("norm^2 = {n2} after split step"),
            });
        }
        Ok(psi)
    }

    fn apply_kinetic(&mut self, psi: &mut WaveFunction, dt: f64) {
        let key = dt.to_bits();
        if self.kinetic.as_ref().map(|(k, _)| *k) != Some(key) {
            self.kinetic = Some((key, self.build_kinetic(dt)));
        }
        let table = &self.kinetic.as_ref().unwrap().1;
        for comp in psi.components_mut().iter_mut() {
            self.plan.forward(comp);
            exec::zip_mut(comp, table, |z, p| z * p);
            self.plan.inverse(comp);
        }
    }

    fn build_kinetic(&self, dt: f64) -> Vec<C64> {
        let n = self.grid.points_per_dim();
        let ks = wavenumbers(n, self.grid.extent());
        let norm = 1.0 / self.grid.total_points() as f64;
        let hbar = self.cfg.hbar;
        let mut table = vec![C64::new(0.0, 0.0); self.grid.total_points()];
        exec::for_each_indexed_mut(&mut table, |flat, v| {
            let idx = self.grid.unflatten(flat);
            let mut energy = 0.0;
            for d in 0..self.grid.dims() {
                let k = ks[idx[d]];
                energy += hbar * hbar * k * k / (2.0 * self.cfg.masses[d]);
            }
            *v = C64::new(0.0, -energy * dt / hbar).exp() * norm;
        });
        table
    }

    fn apply_potential_half(&mut self, psi: &mut WaveFunction, t: f64, dt: f64) -> Result<()> {
        if self.potential.terms().is_empty() {
            return Ok(());
        }
        let mask = self.potential.active_mask(t);
        let key_dt = dt.to_bits();
        let cached = matches!(&self.pot_half, Some((m, d, _)) if *m == mask && *d == key_dt);
        if !cached {
            let tables = self.build_potential_half(t, dt)?;
            self.pot_half = Some((mask, key_dt, tables));
        }
        let tables = &self.pot_half.as_ref().unwrap().2;
        for (comp, table) in psi.components_mut().iter_mut().zip(tables) {
            exec::zip_mut(comp, table, |z, p| z * p);
        }
        Ok(())
    }

    fn build_potential_half(&self, t: f64, dt: f64) -> Result<Vec<Vec<C64>>> {
        let hbar = self.cfg.hbar;
        let mut out = Vec::with_capacity(self.spin.components());
        for comp in 0..self.spin.components() {
            let mut table = vec![C64::new(0.0, 0.0); self.grid.total_points()];
            // evaluate serially once to surface errors, then fill in parallel
            self.potential.value([0.0, 0.0], comp, &self.spin, t)?;
            exec::for_each_indexed_mut(&mut table, |flat, v| {
                let pos = self.grid.position(flat);
                let val = self
                    .potential
                    .value(pos, comp, &self.spin, t)
                    .unwrap_or(f64::NAN);
                *v = C64::new(0.0, -0.5 * val * dt / hbar).exp();
            });
            out.push(table);
        }
        Ok(out)
    }

    fn warn_once_on_coarse_dt(&mut self, t: f64) -> Result<()> {
        if self.warned {
            return Ok(());
        }
        self.warned = true;
        let dt = self.cfg.dt;
        let mut times = vec![t];
        for term in self.potential.terms() {
            if let crate::potential::PotentialTerm::SpinGradient { on, .. } = term {
                times.push(*on);
            }
        }
        let mut vmax = 0.0f64;
        for &tt in &times {
            vmax = vmax.max(self.potential.max_abs(&self.grid, &self.spin, tt)?);
        }
        let k_max = std::f64::consts::PI / self.grid.spacing();
        let m_min = self.cfg.masses.iter().cloned().fold(f64::INFINITY, f64::min);
        let kinetic_phase = dt * self.cfg.hbar * k_max * k_max / (2.0 * m_min);
        if dt * vmax >= 0.5 || kinetic_phase >= 0.5 {
            warn!(
                "time step may under-resolve the fastest phase: dt*max|V| = {:.3}, \
                 dt*hbar*k_max^2/2m = {:.3} (recommended < 0.5)",
                dt * vmax,
                kinetic_phase
            );
        }
        Ok(())
    }
}

/// One symmetric split-operator step. Convenience wrapper that builds a
/// throwaway [`Evolver`]; loops should hold an `Evolver` so the phase
/// tables and the spectral plan are reused.
pub fn evolve_step(
    psi: WaveFunction,
    potential: &PotentialSpec,
    cfg: &EvolverConfig,
) -> Result<WaveFunction> {
    let mut ev = Evolver::new(*psi.grid(), *psi.spin(), potential.clone(), cfg.clone())?;
    ev.step(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::kahan_sum;
    use crate::wavefunction::make_gaussian_packet;

    fn free_packet(n: usize, l: f64, sigma: f64, k: f64) -> WaveFunction {
        let grid = GridSpec::new(1, n, l).unwrap();
        make_gaussian_packet(
            grid,
            SpinSpec::scalar(),
            &[0.0],
            &[sigma],
            &[k],
            &[C64::new(1.0, 0.0)],
        )
        .unwrap()
    }

    /// Analytic density width of a freely spreading Gaussian packet.
    fn free_width(sigma0: f64, t: f64, hbar: f64, mass: f64) -> f64 {
        sigma0 * (1.0 + (hbar * t / (2.0 * mass * sigma0 * sigma0)).powi(2)).sqrt()
    }

    #[test]
    fn free_packet_drifts_at_group_velocity_and_spreads() {
        let k = 1.0;
        let mut psi = free_packet(512, 16.0, 1.0, k);
        let v = PotentialSpec::free();
        let cfg = EvolverConfig::new(0.002, vec![1.0]).unwrap();
        let mut ev = Evolver::new(*psi.grid(), *psi.spin(), v, cfg).unwrap();
        for _ in 0..1000 {
            psi = ev.step(psi).unwrap();
        }
        let t = psi.time();
        assert!((t - 2.0).abs() < 1e-9);
        let mean = psi.mean_position(0).unwrap();
        assert!(
            (mean - k * t).abs() / (k * t) < 1e-3,
            "center {mean} vs {}",
            k * t
        );
        let width = psi.position_spread(0).unwrap();
        let expect = free_width(1.0, t, 1.0, 1.0);
        assert!(
            (width - expect).abs() / expect < 1e-3,
            "width {width} vs {expect}"
        );
    }

    #[test]
    fn harmonic_ground_state_modulus_is_stationary() {
        let grid = GridSpec::new(1, 256, 8.0).unwrap();
        // exp(-x^2/2) has density width 1/sqrt(2)
        let mut psi = make_gaussian_packet(
            grid,
            SpinSpec::scalar(),
            &[0.0],
            &[std::f64::consts::FRAC_1_SQRT_2],
            &[0.0],
            &[C64::new(1.0, 0.0)],
        )
        .unwrap();
        let initial: Vec<f64> = psi.component(0).iter().map(|z| z.norm()).collect();
        let v = PotentialSpec::harmonic(1.0, 1.0, 0);
        let cfg = EvolverConfig::new(1e-3, vec![1.0]).unwrap();
        let mut ev = Evolver::new(grid, SpinSpec::scalar(), v, cfg).unwrap();
        for _ in 0..1000 {
            psi = ev.step(psi).unwrap();
        }
        let worst = psi
            .component(0)
            .iter()
            .zip(&initial)
            .map(|(z, m)| (z.norm() - m).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-6, "modulus drifted by {worst}");
    }

    #[test]
    fn norm_is_conserved_per_step_and_over_long_runs() {
        let grid = GridSpec::new(1, 128, 8.0).unwrap();
        let mut psi = make_gaussian_packet(
            grid,
            SpinSpec::scalar(),
            &[1.0],
            &[0.7],
            &[0.5],
            &[C64::new(1.0, 0.0)],
        )
        .unwrap();
        let v = PotentialSpec::harmonic(1.0, 1.0, 0);
        let cfg = EvolverConfig::new(1e-3, vec![1.0]).unwrap();
        let mut ev = Evolver::new(grid, SpinSpec::scalar(), v, cfg).unwrap();
        let mut prev = psi.norm_sq();
        let mut worst_step = 0.0f64;
        for _ in 0..10_000 {
            psi = ev.step(psi).unwrap();
            let n2 = psi.norm_sq();
            worst_step = worst_step.max((n2 - prev).abs());
            prev = n2;
        }
        assert!(worst_step < 1e-12, "per-step drift {worst_step}");
        assert!((psi.norm_sq() - 1.0).abs() < 1e-9, "total drift");
    }

    #[test]
    fn halving_dt_improves_harmonic_error_second_order() {
        // coherent state: exact evolution is a drifting Gaussian with a
        // known global phase, theta(t) = -t/2 + (x0^2/4) sin 2t
        let grid = GridSpec::new(1, 256, 10.0).unwrap();
        let x0 = 1.0;
        let t_final = 1.0;
        let analytic = |t: f64| -> Vec<C64> {
            let xc = x0 * t.cos();
            let pc = -x0 * t.sin();
            let theta = -t / 2.0 + x0 * x0 / 4.0 * (2.0 * t).sin();
            let raw: Vec<C64> = (0..256)
                .map(|i| {
                    let x = grid.coord(i);
                    let mag = (-(x - xc) * (x - xc) / 2.0).exp();
                    mag * C64::new(0.0, pc * x + theta).exp()
                })
                .collect();
            let n2 = kahan_sum(raw.iter().map(|z| z.norm_sqr())) * grid.spacing();
            raw.iter().map(|z| z / n2.sqrt()).collect()
        };
        let l2_err = |dt: f64| -> f64 {
            let mut psi = make_gaussian_packet(
                grid,
                SpinSpec::scalar(),
                &[x0],
                &[std::f64::consts::FRAC_1_SQRT_2],
                &[0.0],
                &[C64::new(1.0, 0.0)],
            )
            .unwrap();
            let v = PotentialSpec::harmonic(1.0, 1.0, 0);
            let cfg = EvolverConfig::new(dt, vec![1.0]).unwrap();
            let mut ev = Evolver::new(grid, SpinSpec::scalar(), v, cfg).unwrap();
            let steps = (t_final / dt).round() as usize;
            for _ in 0..steps {
                psi = ev.step(psi).unwrap();
            }
            let exact = analytic(psi.time());
            (kahan_sum(
                psi.component(0)
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).norm_sqr()),
            ) * grid.spacing())
            .sqrt()
        };
        let e1 = l2_err(0.02);
        let e2 = l2_err(0.01);
        assert!(
            e1 / e2 >= 3.5,
            "second-order convergence violated: {e1} / {e2} = {}",
            e1 / e2
        );
    }

    #[test]
    fn reflection_spin_swap_symmetry_is_preserved() {
        // spinor (1,1)/sqrt(2), symmetric packet, antisymmetric potential
        // pair: the spin-summed density must stay reflection-symmetric
        let grid = GridSpec::new(1, 256, 16.0).unwrap();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = make_gaussian_packet(
            grid,
            SpinSpec::single(),
            &[0.0],
            &[1.0],
            &[0.0],
            &[C64::new(w, 0.0), C64::new(w, 0.0)],
        )
        .unwrap();
        let v = PotentialSpec::new(vec![crate::potential::PotentialTerm::SpinGradient {
            gamma: 8.0,
            sign: 1.0,
            particle: 0,
            on: 0.0,
            off: 0.3,
        }])
        .unwrap();
        let cfg = EvolverConfig::new(0.002, vec![1.0]).unwrap();
        let mut ev = Evolver::new(grid, SpinSpec::single(), v, cfg).unwrap();
        for _ in 0..500 {
            psi = ev.step(psi).unwrap();
        }
        let d = psi.density();
        let mut asym = 0.0f64;
        for i in 1..256 {
            asym = asym.max((d[i] - d[256 - i]).abs());
        }
        assert!(asym < 1e-8, "density asymmetry {asym}");
    }

    #[test]
    fn nan_amplitudes_raise_a_blowup_error() {
        let grid = GridSpec::new(1, 64, 8.0).unwrap();
        let mut psi = make_gaussian_packet(
            grid,
            SpinSpec::scalar(),
            &[0.0],
            &[1.0],
            &[0.0],
            &[C64::new(1.0, 0.0)],
        )
        .unwrap();
        psi.components_mut()[0][3] = C64::new(f64::NAN, 0.0);
        let v = PotentialSpec::free();
        let cfg = EvolverConfig::new(1e-3, vec![1.0]).unwrap();
        let err = evolve_step(psi, &v, &cfg);
        match err {
            Err(Error::NumericalBlowup { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected blow-up error, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(EvolverConfig::new(0.0, vec![1.0]).is_err());
        assert!(EvolverConfig::new(0.1, vec![]).is_err());
        assert!(EvolverConfig::new(0.1, vec![-1.0]).is_err());
        let grid = GridSpec::new(1, 64, 8.0).unwrap();
        let cfg = EvolverConfig::new(0.1, vec![1.0, 1.0]).unwrap();
        assert!(Evolver::new(grid, SpinSpec::scalar(), PotentialSpec::free(), cfg).is_err());
    }
}
