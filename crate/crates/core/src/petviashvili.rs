//! Stabilized fixed-point iteration for standing and boosted profiles.
//!
//! The stationary problem is `(omega + c k + lambda k^2) phi_hat = zeta |k|^beta N_hat(phi)`
//! with `N(phi) = |phi|^{2 sigma} phi`. Each iterate is rescaled by `M^nu`, where `M` is the
//! ratio of the quadratic form to the nonlinear pairing and tends to 1 at a solution.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{pohozaev_residuals, power_nonlinearity, ModelParams, PohozaevResiduals, WaveParams};
use crate::spectral::{ComplexField, Grid};

/// Residual level above which a converged record is marked suspect.
pub const SUSPECT_RESIDUAL: f64 = 1e-4;

const DIVERGENCE_CAP: f64 = 1e6;

#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// `exp(-x^2)`, with a phase `exp(-i c x / (2 lambda))` for boosted solves.
    Gaussian,
    /// `sech(x)`, same phase rule as `Gaussian`.
    Sech,
    /// The closed-form `beta = 0` profile at the requested frequency.
    ExactBeta0,
    Field(ComplexField),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Stabilization exponent; `None` selects `(2 sigma + 2) / (2 sigma + 1)`.
    pub nu: Option<f64>,
    pub initial_guess: InitialGuess,
    /// Skip the nonexistence guard.
    pub force: bool,
    /// Solve at unit frequency on a stretched interval and rescale (standing waves only).
    pub reduce_frequency: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            max_iter: 1000,
            nu: None,
            initial_guess: InitialGuess::Gaussian,
            force: false,
            reduce_frequency: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        if let Some(nu) = self.nu {
            if !nu.is_finite() {
                return Err(Error::invalid("nu", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Per-iteration monitors. Index `n` holds `Error(n) = ||Q_{n+1} - Q_n||_inf`,
/// `|1 - M_n|` and `RES(Q_n)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub errors: Vec<f64>,
    pub stab: Vec<f64>,
    pub res: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl ConvergenceTrace {
    pub fn last_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::NAN)
    }

    pub fn last_stab(&self) -> f64 {
        self.stab.last().copied().unwrap_or(f64::NAN)
    }

    pub fn last_res(&self) -> f64 {
        self.res.last().copied().unwrap_or(f64::NAN)
    }

    fn push(&mut self, error: f64, stab: f64, res: f64) {
        self.errors.push(error);
        self.stab.push(stab);
        self.res.push(res);
        self.iterations += 1;
    }

    /// CSV with columns `n,error,stab,res`.
    pub fn to_csv(&self) -> String {
        use crate::model::fmt_sig15;
        let mut s = String::from("n,error,stab,res\n");
        for i in 0..self.iterations {
            s.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                fmt_sig15(self.errors[i]),
                fmt_sig15(self.stab[i]),
                fmt_sig15(self.res[i])
            ));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct ProfileRecord {
    pub profile: ComplexField,
    pub params: ModelParams,
    pub wave: WaveParams,
    pub trace: ConvergenceTrace,
    pub pohozaev: PohozaevResiduals,
    /// Converged but some applicable Pohozaev residual exceeds `SUSPECT_RESIDUAL`.
    pub suspect: bool,
}

impl ProfileRecord {
    pub fn real_part(&self) -> Vec<f64> {
        self.profile.values().iter().map(|v| v.re).collect()
    }

    pub fn imag_part(&self) -> Vec<f64> {
        self.profile.values().iter().map(|v| v.im).collect()
    }
}

/// Precomputed symbols and scratch for repeated iteration on one grid.
struct Workspace {
    grid: Arc<Grid>,
    denom: Vec<f64>,
    weight: Vec<f64>,
    zeta: f64,
    sigma: f64,
    nu: f64,
    q_hat: Vec<Complex64>,
    n_hat: Vec<Complex64>,
}

struct StepOutput {
    m: f64,
    res: f64,
}

impl Workspace {
    fn new(grid: &Arc<Grid>, p: &ModelParams, w: &WaveParams, nu: f64) -> Result<Self> {
        let denom: Vec<f64> = grid
            .k()
            .iter()
            .map(|&k| w.omega + w.c * k + p.lambda * k * k)
            .collect();
        let (jmin, &min) = denom
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is nonempty");
        if !(min > 0.0) {
            return Err(Error::IndefiniteSymbol {
                min,
                k: grid.k()[jmin],
            });
        }
        let n = grid.n();
        Ok(Workspace {
            grid: grid.clone(),
            denom,
            weight: grid.fractional_multiplier(p.beta),
            zeta: p.zeta,
            sigma: p.sigma,
            nu,
            q_hat: vec![Complex64::new(0.0, 0.0); n],
            n_hat: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    /// Overwrites `q` with the next iterate.
    fn step(&mut self, q: &mut [Complex64]) -> Result<StepOutput> {
        self.q_hat.copy_from_slice(q);
        self.grid.fft(&mut self.q_hat);
        power_nonlinearity(q, self.sigma, &mut self.n_hat);
        self.grid.fft(&mut self.n_hat);

        let mut num = 0.0;
        let mut den = 0.0;
        let mut res = 0.0f64;
        for j in 0..q.len() {
            let rhs = self.n_hat[j] * (self.zeta * self.weight[j]);
            num += self.denom[j] * self.q_hat[j].norm_sqr();
            den += (rhs * self.q_hat[j].conj()).re;
            res = res.max((self.q_hat[j] * self.denom[j] - rhs).norm());
        }
        if !(den.abs() >= 1e-300) {
            return Err(Error::ZeroDenominator(den));
        }
        let m = num / den;
        let factor = if m > 0.0 { m.powf(self.nu) } else { f64::NAN };
        for j in 0..q.len() {
            q[j] = self.n_hat[j] * (self.zeta * self.weight[j] * factor / self.denom[j]);
        }
        self.grid.ifft(q);
        Ok(StepOutput { m, res })
    }
}

/// One stabilized iteration. Returns `(Q_{n+1}, M_n)`.
pub fn iterate_step(
    qn: &ComplexField,
    p: &ModelParams,
    w: &WaveParams,
    nu: f64,
) -> Result<(ComplexField, f64)> {
    qn.ensure_finite()?;
    let mut ws = Workspace::new(qn.grid(), p, w, nu)?;
    let mut q = qn.values().to_vec();
    let out = ws.step(&mut q)?;
    Ok((ComplexField::new(qn.grid().clone(), q)?, out.m))
}

/// `max_k |(omega + c k + lambda k^2) Q_hat - zeta |k|^beta N_hat(Q)|` with the grid's
/// normalized coefficients.
pub fn residual_res(q: &ComplexField, p: &ModelParams, w: &WaveParams) -> Result<f64> {
    q.ensure_finite()?;
    let grid = q.grid();
    let mut q_hat = q.values().to_vec();
    grid.fft(&mut q_hat);
    let mut n_hat = vec![Complex64::new(0.0, 0.0); grid.n()];
    power_nonlinearity(q.values(), p.sigma, &mut n_hat);
    grid.fft(&mut n_hat);
    let weight = grid.fractional_multiplier(p.beta);
    let mut res = 0.0f64;
    for (j, &k) in grid.k().iter().enumerate() {
        let d = w.omega + w.c * k + p.lambda * k * k;
        res = res.max((q_hat[j] * d - n_hat[j] * (p.zeta * weight[j])).norm());
    }
    Ok(res)
}

/// `omega^{1/(2 sigma)} (sigma+1)^{1/(2 sigma)} sech^{1/sigma}(sigma sqrt(omega) x)`.
pub fn exact_profile_beta0(sigma: f64, omega: f64, g: &Arc<Grid>) -> ComplexField {
    let amp = (omega * (sigma + 1.0)).powf(0.5 / sigma);
    let rate = sigma * omega.sqrt();
    ComplexField::from_real_fn(g.clone(), |x| amp * (1.0 / (rate * x).cosh()).powf(1.0 / sigma))
}

fn check_existence(p: &ModelParams, force: bool) -> Result<()> {
    if p.zeta < 0.0 {
        return Err(Error::NonexistenceRegime(
            "defocusing nonlinearity (zeta = -1) admits no nontrivial standing wave".into(),
        ));
    }
    if force {
        return Ok(());
    }
    let upper = 1.0 + 1.0 / (p.sigma + 1.0);
    if p.beta >= upper {
        return Err(Error::NonexistenceRegime(format!(
            "beta = {} >= 1 + 1/(sigma+1) = {upper}",
            p.beta
        )));
    }
    let lower = -p.sigma / (p.sigma + 1.0);
    if p.beta <= lower {
        return Err(Error::NonexistenceRegime(format!(
            "beta = {} <= -sigma/(sigma+1) = {lower}",
            p.beta
        )));
    }
    Ok(())
}

fn initial_field(
    guess: &InitialGuess,
    g: &Arc<Grid>,
    p: &ModelParams,
    w: &WaveParams,
) -> Result<ComplexField> {
    let kick = -w.c / (2.0 * p.lambda);
    let with_phase = |amp: &dyn Fn(f64) -> f64| {
        ComplexField::from_fn(g.clone(), |x| Complex64::from_polar(amp(x), kick * x))
    };
    let field = match guess {
        InitialGuess::Gaussian => with_phase(&|x| (-x * x).exp()),
        InitialGuess::Sech => with_phase(&|x| 1.0 / x.cosh()),
        InitialGuess::ExactBeta0 => {
            let shifted = w.omega - w.c * w.c / (4.0 * p.lambda);
            let base = exact_profile_beta0(p.sigma, shifted.max(f64::MIN_POSITIVE), g);
            let mut f = base;
            for (v, x) in f.values_mut().iter_mut().zip(g.x()) {
                *v *= Complex64::from_polar(1.0, kick * x);
            }
            f
        }
        InitialGuess::Field(f) => {
            if !f.grid().same_as(g) {
                return Err(Error::MismatchedGrids);
            }
            f.clone()
        }
    };
    field.ensure_finite()?;
    Ok(field)
}

/// Moves the modulus peak to the grid point nearest 0 and makes the value there real positive.
fn normalize_gauge(f: &ComplexField) -> ComplexField {
    let g = f.grid();
    let peak = f.argmax_modulus();
    let target = g.nearest_index(0.0);
    let shifted = f.circular_shift(target as i64 - peak as i64);
    let v = shifted.values()[target];
    if v.norm() == 0.0 {
        return shifted;
    }
    shifted.scaled(v.conj() / v.norm())
}

fn run_iteration(
    g: &Arc<Grid>,
    p: &ModelParams,
    w: &WaveParams,
    opts: &SolveOptions,
    start: ComplexField,
) -> Result<(ComplexField, ConvergenceTrace)> {
    let nu = opts.nu.unwrap_or_else(|| p.petviashvili_nu());
    let mut ws = Workspace::new(g, p, w, nu)?;
    let mut q = start.into_values();
    let mut prev = q.clone();
    let mut trace = ConvergenceTrace::default();
    for it in 0..opts.max_iter {
        let out = ws.step(&mut q)?;
        let mut err = 0.0f64;
        let mut finite = true;
        for (a, b) in q.iter().zip(&prev) {
            let d = (a - b).norm();
            finite &= d.is_finite();
            err = err.max(d);
        }
        if !finite {
            err = f64::INFINITY;
        }
        trace.push(err, (1.0 - out.m).abs(), out.res);
        if !(out.m > 0.0) || !(err <= DIVERGENCE_CAP) {
            return Err(Error::Diverged {
                iteration: it + 1,
                error: err,
            });
        }
        if err <= opts.tol {
            trace.converged = true;
            break;
        }
        prev.copy_from_slice(&q);
    }
    let field = ComplexField::new(g.clone(), q)?;
    if !trace.converged {
        log::warn!(
            "Petviashvili iteration stopped after {} steps with error {:e}",
            trace.iterations,
            trace.last_error()
        );
        return Err(Error::NotConverged(Box::new(trace)));
    }
    Ok((field, trace))
}

fn finish(
    profile: ComplexField,
    p: &ModelParams,
    w: &WaveParams,
    trace: ConvergenceTrace,
) -> Result<ProfileRecord> {
    let profile = normalize_gauge(&profile);
    let pohozaev = pohozaev_residuals(&profile, p, w)?;
    let suspect = pohozaev.max_applicable() > SUSPECT_RESIDUAL;
    if suspect {
        log::warn!("converged profile has Pohozaev residuals {pohozaev:?}");
    }
    Ok(ProfileRecord {
        profile,
        params: *p,
        wave: *w,
        trace,
        pohozaev,
        suspect,
    })
}

/// Standing wave `e^{-i omega t} phi(x)` on grid `g`.
pub fn solve_standing_wave(
    p: &ModelParams,
    omega: f64,
    g: &Arc<Grid>,
    opts: &SolveOptions,
) -> Result<ProfileRecord> {
    p.validate()?;
    opts.validate()?;
    let w = WaveParams::standing(omega);
    w.validate()?;
    check_existence(p, opts.force)?;
    if p.lambda <= 0.0 {
        return Err(Error::invalid("lambda", "standing waves need lambda > 0"));
    }

    if opts.reduce_frequency && omega != 1.0 {
        // phi(x) = A phi1(kappa x), kappa = sqrt(omega / lambda), A^{2 sigma} = omega^{1 - beta/2} lambda^{beta/2}
        let kappa = (omega / p.lambda).sqrt();
        let amp = (omega.powf(1.0 - 0.5 * p.beta) * p.lambda.powf(0.5 * p.beta)).powf(0.5 / p.sigma);
        let unit_grid = Grid::new(g.a() * kappa, g.b() * kappa, g.n())?;
        let unit_params = ModelParams { lambda: 1.0, ..*p };
        let unit = WaveParams::standing(1.0);
        let start = match &opts.initial_guess {
            InitialGuess::Field(f) => {
                if !f.grid().same_as(g) {
                    return Err(Error::MismatchedGrids);
                }
                ComplexField::new(unit_grid.clone(), f.scaled(Complex64::new(1.0 / amp, 0.0)).into_values())?
            }
            other => initial_field(other, &unit_grid, &unit_params, &unit)?,
        };
        let (unit_profile, trace) = run_iteration(&unit_grid, &unit_params, &unit, opts, start)?;
        let values = unit_profile.scaled(Complex64::new(amp, 0.0)).into_values();
        let profile = ComplexField::new(g.clone(), values)?;
        return finish(profile, p, &w, trace);
    }

    let start = initial_field(&opts.initial_guess, g, p, &w)?;
    let (profile, trace) = run_iteration(g, p, &w, opts, start)?;
    finish(profile, p, &w, trace)
}

/// Boosted wave `e^{-i omega t} phi(x - c t)`; requires `c^2 < 4 lambda omega`.
pub fn solve_boosted(
    p: &ModelParams,
    w: &WaveParams,
    g: &Arc<Grid>,
    opts: &SolveOptions,
) -> Result<ProfileRecord> {
    p.validate()?;
    opts.validate()?;
    w.validate()?;
    w.check_speed(p.lambda)?;
    check_existence(p, opts.force)?;
    let start = initial_field(&opts.initial_guess, g, p, w)?;
    let (profile, trace) = run_iteration(g, p, w, opts, start)?;
    finish(profile, p, w, trace)
}

/// Walks `beta` from 0 to the target in steps of at most `max_step`, warm-starting each
/// solve from the previous profile.
pub fn solve_with_beta_continuation(
    p: &ModelParams,
    w: &WaveParams,
    g: &Arc<Grid>,
    opts: &SolveOptions,
    max_step: f64,
) -> Result<ProfileRecord> {
    if !(max_step > 0.0) {
        return Err(Error::invalid("max_step", "must be positive"));
    }
    let steps = (p.beta.abs() / max_step).ceil().max(1.0) as usize;
    let mut guess = InitialGuess::ExactBeta0;
    let mut last = None;
    for i in 1..=steps {
        let beta = p.beta * i as f64 / steps as f64;
        let pi = ModelParams { beta, ..*p };
        let o = SolveOptions {
            initial_guess: guess,
            ..opts.clone()
        };
        let rec = if w.c == 0.0 {
            solve_standing_wave(&pi, w.omega, g, &o)?
        } else {
            solve_boosted(&pi, w, g, &o)?
        };
        guess = InitialGuess::Field(rec.profile.clone());
        last = Some(rec);
    }
    Ok(last.expect("at least one continuation step"))
}
