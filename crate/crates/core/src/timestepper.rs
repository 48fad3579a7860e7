//! Split-step Fourier evolution.
//!
//! The linear flow `u_hat -> exp(i lambda k^2 tau) u_hat` is applied exactly; the nonlinear
//! flow `u_hat_t = -i zeta |k|^beta (|u|^{2 sigma} u)^` is advanced by one classical RK4 step in
//! the spectral representation. `Strang2` composes them as N(tau/2) L(tau) N(tau/2) and
//! `Yoshida4` applies that composition with the triple-jump weights.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{power_nonlinearity, FunctionalWeights, Functionals, InvariantSnapshot, ModelParams};
use crate::spectral::{ComplexField, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Strang2,
    #[default]
    Yoshida4,
}

/// `(2 + 2^{1/3} + 2^{-1/3}) / 3`.
pub fn yoshida_weight() -> f64 {
    let c = 2f64.cbrt();
    (2.0 + c + 1.0 / c) / 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub t_final: f64,
    pub steps: usize,
    pub scheme: Scheme,
    /// Steps between diagnostics rows; `None` selects `max(steps / 100, 1)`.
    pub monitor_every: Option<usize>,
    pub blowup_linf_cap: f64,
    /// Relative mass drift that halts the run; `f64::INFINITY` disables the gate.
    pub mass_drift_cap: f64,
    /// Halt when the fraction of `sum |u|^2` in the outer tenth of the interval on either side
    /// exceeds this value.
    pub boundary_cap: Option<f64>,
    /// Apply the 2/3 mask to the nonlinear term.
    pub dealias: bool,
    /// Record `max |u|` after every step instead of only at monitor ticks.
    pub linf_every_step: bool,
    /// Keep a copy of the field at every monitor tick.
    pub store_fields: bool,
}

impl StepConfig {
    pub fn new(t_final: f64, steps: usize) -> Self {
        StepConfig {
            t_final,
            steps,
            scheme: Scheme::Yoshida4,
            monitor_every: None,
            blowup_linf_cap: 1e6,
            mass_drift_cap: 1e-4,
            boundary_cap: None,
            dealias: false,
            linf_every_step: false,
            store_fields: true,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn cadence(&self) -> usize {
        self.monitor_every.unwrap_or(self.steps / 100).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::invalid("t_final", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if self.monitor_every == Some(0) {
            return Err(Error::invalid("monitor_every", "must be at least 1"));
        }
        if !(self.blowup_linf_cap > 0.0) {
            return Err(Error::invalid("blowup_linf_cap", "must be positive"));
        }
        if !(self.mass_drift_cap > 0.0) {
            return Err(Error::invalid("mass_drift_cap", "must be positive"));
        }
        if let Some(b) = self.boundary_cap {
            if !(b > 0.0) {
                return Err(Error::invalid("boundary_cap", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed,
    BlowUpDetected(f64),
    MassDriftExceeded(f64),
    BoundaryReached(f64),
}

impl Outcome {
    pub fn halt_time(&self) -> Option<f64> {
        match *self {
            Outcome::Completed => None,
            Outcome::BlowUpDetected(t) | Outcome::MassDriftExceeded(t) | Outcome::BoundaryReached(t) => Some(t),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunDiagnostics {
    pub rows: Vec<InvariantSnapshot>,
    /// `(t, max |u|)`; every step when requested, otherwise at monitor ticks.
    pub linf: Vec<(f64, f64)>,
    /// `tau * max |k|^beta * max |u0|^{2 sigma}`; values above 1 trigger a warning.
    pub cfl_indicator: f64,
}

impl RunDiagnostics {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(InvariantSnapshot::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv_row());
            s.push('\n');
        }
        s
    }

    pub fn linf_csv(&self) -> String {
        use crate::model::fmt_sig15;
        let mut s = String::from("t,linf\n");
        for (t, v) in &self.linf {
            s.push_str(&format!("{},{}\n", fmt_sig15(*t), fmt_sig15(*v)));
        }
        s
    }

    pub fn max_mass_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.delta_f).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub final_field: ComplexField,
    pub final_time: f64,
    pub snapshots: Vec<(f64, ComplexField)>,
    pub diagnostics: RunDiagnostics,
    pub outcome: Outcome,
}

/// Reusable split-step machinery on one grid. State is kept as normalized Fourier coefficients.
pub struct Propagator {
    grid: Arc<Grid>,
    k2: Vec<f64>,
    lambda_eff: f64,
    sigma: f64,
    /// `-i zeta_eff |k|^beta`, masked when dealiasing
    nl_symbol: Vec<Complex64>,
    phase_cache: Vec<(u64, Vec<Complex64>)>,
    phys: Vec<Complex64>,
    stage: Vec<Complex64>,
    acc: Vec<Complex64>,
    slope: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: &Arc<Grid>, p: &ModelParams, lambda_eff: f64, zeta_eff: f64, dealias: bool) -> Self {
        let weight = grid.fractional_multiplier(p.beta);
        let mask = if dealias {
            grid.dealias_mask()
        } else {
            vec![1.0; grid.n()]
        };
        let nl_symbol = weight
            .iter()
            .zip(&mask)
            .map(|(w, m)| Complex64::new(0.0, -zeta_eff * w * m))
            .collect();
        let n = grid.n();
        let zero = Complex64::new(0.0, 0.0);
        Propagator {
            grid: grid.clone(),
            k2: grid.k().iter().map(|k| k * k).collect(),
            lambda_eff,
            sigma: p.sigma,
            nl_symbol,
            phase_cache: Vec::new(),
            phys: vec![zero; n],
            stage: vec![zero; n],
            acc: vec![zero; n],
            slope: vec![zero; n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn linear(&mut self, uh: &mut [Complex64], tau: f64) {
        let key = tau.to_bits();
        let idx = match self.phase_cache.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                let lam = self.lambda_eff;
                let f = self
                    .k2
                    .iter()
                    .map(|k2| Complex64::from_polar(1.0, lam * k2 * tau))
                    .collect();
                if self.phase_cache.len() >= 8 {
                    self.phase_cache.remove(0);
                }
                self.phase_cache.push((key, f));
                self.phase_cache.len() - 1
            }
        };
        for (v, f) in uh.iter_mut().zip(&self.phase_cache[idx].1) {
            *v *= f;
        }
    }

    /// `slope = -i zeta |k|^beta FFT(|v|^{2 sigma} v)` for `v = IFFT(input)`.
    fn rhs(&mut self, from_stage: bool, uh: &[Complex64]) {
        let src = if from_stage { &self.stage } else { uh };
        self.phys.copy_from_slice(src);
        self.grid.ifft(&mut self.phys);
        power_nonlinearity(&self.phys, self.sigma, &mut self.slope);
        self.grid.fft(&mut self.slope);
        for (s, m) in self.slope.iter_mut().zip(&self.nl_symbol) {
            *s *= m;
        }
    }

    pub fn nonlinear(&mut self, uh: &mut [Complex64], tau: f64) {
        let n = uh.len();
        // k1
        self.rhs(false, uh);
        for j in 0..n {
            self.acc[j] = self.slope[j];
            self.stage[j] = uh[j] + self.slope[j] * (0.5 * tau);
        }
        // k2
        self.rhs(true, uh);
        for j in 0..n {
            self.acc[j] += self.slope[j] * 2.0;
            self.stage[j] = uh[j] + self.slope[j] * (0.5 * tau);
        }
        // k3
        self.rhs(true, uh);
        for j in 0..n {
            self.acc[j] += self.slope[j] * 2.0;
            self.stage[j] = uh[j] + self.slope[j] * tau;
        }
        // k4
        self.rhs(true, uh);
        for j in 0..n {
            uh[j] += (self.acc[j] + self.slope[j]) * (tau / 6.0);
        }
    }

    pub fn strang(&mut self, uh: &mut [Complex64], tau: f64) {
        self.nonlinear(uh, 0.5 * tau);
        self.linear(uh, tau);
        self.nonlinear(uh, 0.5 * tau);
    }

    pub fn step(&mut self, uh: &mut [Complex64], tau: f64, scheme: Scheme) {
        match scheme {
            Scheme::Strang2 => self.strang(uh, tau),
            Scheme::Yoshida4 => {
                let w = yoshida_weight();
                self.strang(uh, w * tau);
                self.strang(uh, (1.0 - 2.0 * w) * tau);
                self.strang(uh, w * tau);
            }
        }
    }
}

fn spectral_of(u: &ComplexField) -> Vec<Complex64> {
    let mut v = u.values().to_vec();
    u.grid().fft(&mut v);
    v
}

fn physical_of(grid: &Arc<Grid>, uh: &[Complex64]) -> Result<ComplexField> {
    let mut v = uh.to_vec();
    grid.ifft(&mut v);
    ComplexField::new(grid.clone(), v)
}

fn finite_or_blowup(f: ComplexField) -> Result<ComplexField> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFiniteOutput)
    }
}

/// Exact linear flow over `tau` with coefficient `lambda_eff`.
pub fn linear_substep(u: &ComplexField, tau: f64, lambda_eff: f64) -> Result<ComplexField> {
    u.ensure_finite()?;
    let p = ModelParams::focusing(0.0, 1.0);
    let mut prop = Propagator::new(u.grid(), &p, lambda_eff, 0.0, false);
    let mut uh = spectral_of(u);
    prop.linear(&mut uh, tau);
    physical_of(u.grid(), &uh)
}

/// One RK4 step of the nonlinear flow with `p_eff.zeta` as the effective coupling.
pub fn nonlinear_substep(u: &ComplexField, tau: f64, p_eff: &ModelParams) -> Result<ComplexField> {
    u.ensure_finite()?;
    let mut prop = Propagator::new(u.grid(), p_eff, p_eff.lambda, p_eff.zeta, false);
    let mut uh = spectral_of(u);
    prop.nonlinear(&mut uh, tau);
    finite_or_blowup(physical_of(u.grid(), &uh)?)
}

/// One full step of `scheme`.
pub fn step(
    u: &ComplexField,
    tau: f64,
    p_eff: &ModelParams,
    lambda_eff: f64,
    scheme: Scheme,
) -> Result<ComplexField> {
    u.ensure_finite()?;
    let mut prop = Propagator::new(u.grid(), p_eff, lambda_eff, p_eff.zeta, false);
    let mut uh = spectral_of(u);
    prop.step(&mut uh, tau, scheme);
    finite_or_blowup(physical_of(u.grid(), &uh)?)
}

/// Evolves `u0` with the model's own coefficients.
pub fn evolve(u0: &ComplexField, p: &ModelParams, cfg: &StepConfig) -> Result<EvolutionResult> {
    evolve_scaled(u0, p, cfg, p.lambda, 1.0)
}

fn boundary_fraction(u: &ComplexField) -> f64 {
    let g = u.grid();
    let mid = 0.5 * (g.a() + g.b());
    let edge = 0.45 * g.length();
    let mut total = 0.0;
    let mut outer = 0.0;
    for (v, x) in u.values().iter().zip(g.x()) {
        let m = v.norm_sqr();
        total += m;
        if (x - mid).abs() > edge {
            outer += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// Evolves `i u_t - lambda_eff u_xx = zeta_scale * zeta D^beta(|u|^{2 sigma} u)`.
///
/// Failures during the run are reported through [`Outcome`]; only invalid inputs are errors.
pub fn evolve_scaled(
    u0: &ComplexField,
    p: &ModelParams,
    cfg: &StepConfig,
    lambda_eff: f64,
    zeta_scale: f64,
) -> Result<EvolutionResult> {
    p.validate()?;
    cfg.validate()?;
    u0.ensure_finite()?;
    if !(lambda_eff.is_finite() && zeta_scale.is_finite()) {
        return Err(Error::invalid("lambda_eff", "effective coefficients must be finite"));
    }
    let grid = u0.grid().clone();
    let tau = cfg.tau();
    let zeta_eff = p.zeta * zeta_scale;
    let p_eff = ModelParams {
        lambda: lambda_eff,
        zeta: zeta_eff,
        ..*p
    };
    let weights = FunctionalWeights::new(&grid, p.beta);
    let mut prop = Propagator::new(&grid, p, lambda_eff, zeta_eff, cfg.dealias);

    let max_weight = grid.fractional_multiplier(p.beta).into_iter().fold(0.0, f64::max);
    let cfl = tau * max_weight * u0.linf().powf(2.0 * p.sigma);
    if cfl > 1.0 {
        log::warn!("time step may be too large for the nonlinear substep (indicator {cfl:.3})");
    }

    let mut diagnostics = RunDiagnostics {
        cfl_indicator: cfl,
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    let mut uh = spectral_of(u0);

    let record = |u: &ComplexField, uh: &[Complex64], t: f64, f0: f64| -> InvariantSnapshot {
        let f = Functionals::from_parts(u, uh, p.sigma, &weights);
        InvariantSnapshot {
            t,
            mass: f.mass,
            energy: f.energy(&p_eff),
            momentum: f.momentum,
            chi: f.chi(),
            linf: u.linf(),
            delta_f: if f0 == 0.0 { 0.0 } else { ((f.mass - f0) / f0).abs() },
        }
    };

    let first = record(u0, &uh, 0.0, 0.0);
    let f0 = first.mass;
    diagnostics.rows.push(InvariantSnapshot { delta_f: 0.0, ..first });
    diagnostics.linf.push((0.0, first.linf));
    if cfg.store_fields {
        snapshots.push((0.0, u0.clone()));
    }

    let cadence = cfg.cadence();
    let mut outcome = Outcome::Completed;
    let mut current = u0.clone();
    let mut t = 0.0;
    for n in 1..=cfg.steps {
        prop.step(&mut uh, tau, cfg.scheme);
        t = n as f64 * tau;
        let mut v = uh.clone();
        grid.ifft(&mut v);
        let u = ComplexField::new(grid.clone(), v)?;
        let linf = u.linf();
        if !u.is_finite() || !linf.is_finite() || linf > cfg.blowup_linf_cap {
            outcome = Outcome::BlowUpDetected(t);
            diagnostics.linf.push((t, linf));
            current = u;
            break;
        }
        let tick = n % cadence == 0 || n == cfg.steps;
        if cfg.linf_every_step || tick {
            diagnostics.linf.push((t, linf));
        }
        if tick {
            let row = record(&u, &uh, t, f0);
            diagnostics.rows.push(row);
            if cfg.store_fields {
                snapshots.push((t, u.clone()));
            }
            if row.delta_f > cfg.mass_drift_cap {
                outcome = Outcome::MassDriftExceeded(t);
                current = u;
                break;
            }
            if let Some(cap) = cfg.boundary_cap {
                if boundary_fraction(&u) > cap {
                    outcome = Outcome::BoundaryReached(t);
                    current = u;
                    break;
                }
            }
        }
        current = u;
    }

    Ok(EvolutionResult {
        final_field: current,
        final_time: t,
        snapshots,
        diagnostics,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petviashvili::exact_profile_beta0;

    #[test]
    fn weight_value() {
        let w = yoshida_weight();
        assert!((w - 1.351_207_191_959_66).abs() < 1e-13);
        assert!((1.0 - 2.0 * w + 1.702_414_383_919_31).abs() < 1e-13);
    }

    fn bump(g: &Arc<Grid>) -> ComplexField {
        ComplexField::from_fn(g.clone(), |x| Complex64::new((-x * x).exp(), 0.3 * (-(x - 1.0).powi(2)).exp()))
    }

    #[test]
    fn linear_identity_and_semigroup() {
        let g = Grid::new(-10.0, 10.0, 128).unwrap();
        let u = bump(&g);
        assert!(linear_substep(&u, 0.0, 1.0).unwrap().linf_distance(&u) < 1e-15);
        let one = linear_substep(&linear_substep(&u, 0.3, 1.0).unwrap(), 0.3, 1.0).unwrap();
        let two = linear_substep(&u, 0.6, 1.0).unwrap();
        assert!(one.linf_distance(&two) < 1e-14);
    }

    #[test]
    fn linear_single_mode_rotates() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 32).unwrap();
        let u = ComplexField::from_fn(g.clone(), |x| Complex64::from_polar(1.0, 3.0 * x));
        let v = linear_substep(&u, 0.1, 2.0).unwrap();
        let rot = Complex64::from_polar(1.0, 2.0 * 9.0 * 0.1);
        for (a, b) in v.values().iter().zip(u.values()) {
            assert!((a - b * rot).norm() < 1e-13);
        }
    }

    #[test]
    fn nonlinear_matches_local_flow_beta0() {
        let g = Grid::new(-10.0, 10.0, 128).unwrap();
        let u = ComplexField::from_fn(g.clone(), |x| Complex64::new(1.0 / x.cosh(), 0.2 * (-x * x).exp()));
        let tau = 1e-3;
        let p = ModelParams::focusing(0.0, 1.0);
        let got = nonlinear_substep(&u, tau, &p).unwrap();
        for (a, b) in got.values().iter().zip(u.values()) {
            let exact = b * Complex64::from_polar(1.0, -b.norm_sqr() * tau);
            assert!((a - exact).norm() < 1e-13);
        }
        let z = ComplexField::zeros(g);
        assert_eq!(nonlinear_substep(&z, tau, &p).unwrap().linf(), 0.0);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::new(-10.0, 10.0, 64).unwrap();
        let z = ComplexField::zeros(g);
        let r = evolve(&z, &ModelParams::focusing(0.5, 1.0), &StepConfig::new(0.1, 10)).unwrap();
        assert_eq!(r.outcome, Outcome::Completed);
        assert_eq!(r.final_field.linf(), 0.0);
        assert!(r.diagnostics.rows.iter().all(|s| s.mass == 0.0 && s.energy == 0.0));
    }

    #[test]
    fn soliton_phase_rotation() {
        let g = Grid::new(-30.0, 30.0, 512).unwrap();
        let q = exact_profile_beta0(1.0, 1.0, &g);
        let p = ModelParams::focusing(0.0, 1.0);
        let r = evolve(&q, &p, &StepConfig::new(1.0, 100)).unwrap();
        let want = q.scaled(Complex64::from_polar(1.0, -1.0));
        let err = r.final_field.linf_distance(&want);
        assert!(err < 1e-6, "{err}");
        let drift = r.diagnostics.max_mass_drift();
        assert!(drift < 1e-9, "{drift}");
    }

    #[test]
    fn diagnostics_rows_are_time_ordered() {
        let g = Grid::new(-20.0, 20.0, 256).unwrap();
        let q = exact_profile_beta0(1.0, 1.0, &g);
        let cfg = StepConfig {
            monitor_every: Some(7),
            ..StepConfig::new(0.5, 50)
        };
        let r = evolve(&q, &ModelParams::focusing(0.0, 1.0), &cfg).unwrap();
        let ts: Vec<f64> = r.diagnostics.rows.iter().map(|s| s.t).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*ts.last().unwrap(), 0.5);
        assert_eq!(r.snapshots.len(), ts.len());
    }

    #[test]
    fn blowup_cap_fires() {
        let g = Grid::new(-20.0, 20.0, 256).unwrap();
        let q = exact_profile_beta0(1.0, 1.0, &g);
        let cfg = StepConfig {
            blowup_linf_cap: 1.0,
            ..StepConfig::new(0.1, 10)
        };
        let r = evolve(&q, &ModelParams::focusing(0.0, 1.0), &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::BlowUpDetected(0.01));
    }
}
