//! Coefficients of `i u_t - lambda u_xx = zeta D^beta(|u|^{2 sigma} u)`, its conserved
//! functionals and the global-behaviour classification built from them.
//!
//! All quadratures are spectral: `int |W u|^2 = L * sum_m w_m |c_m|^2`. The zero
//! mode of every fractional weight `|k|^gamma` with `gamma != 0` is dropped, so for
//! `beta != 0` the mass is a seminorm that does not see the mean of `u`.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{fractional_symbol, ComplexField, Grid};

/// PDE coefficients `(lambda, zeta, beta, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub zeta: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, zeta: f64, beta: f64, sigma: f64) -> Self {
        ModelParams {
            lambda,
            zeta,
            beta,
            sigma,
        }
    }

    /// Focusing model with `lambda = zeta = 1`.
    pub fn focusing(beta: f64, sigma: f64) -> Self {
        Self::new(1.0, 1.0, beta, sigma)
    }

    /// Checks `lambda != 0`, `zeta = +-1`, `sigma > 0` and `-1 < beta < 2`.
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda == 0.0 {
            return Err(Error::invalid("lambda", "must be finite and nonzero"));
        }
        if self.zeta != 1.0 && self.zeta != -1.0 {
            return Err(Error::invalid("zeta", format!("must be +1 or -1, got {}", self.zeta)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.beta > -1.0 && self.beta < 2.0) {
            return Err(Error::invalid(
                "beta",
                format!("must lie in (-1, 2), got {}", self.beta),
            ));
        }
        Ok(())
    }

    /// `theta_0 = ((sigma + 1)(1 - beta) + 1) / (2 (sigma + 1))`.
    pub fn theta0(&self) -> f64 {
        let s1 = self.sigma + 1.0;
        (s1 * (1.0 - self.beta) + 1.0) / (2.0 * s1)
    }

    pub fn theta1(&self) -> f64 {
        1.0 - self.theta0()
    }

    pub fn critical_sigma(&self) -> f64 {
        critical_sigma(self.beta)
    }

    /// Default Petviashvili stabilization exponent `(2 sigma + 2) / (2 sigma + 1)`.
    pub fn petviashvili_nu(&self) -> f64 {
        (2.0 * self.sigma + 2.0) / (2.0 * self.sigma + 1.0)
    }
}

/// Frequency and speed of a (boosted) standing wave `e^{-i omega t} phi(x - c t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    pub omega: f64,
    pub c: f64,
}

impl WaveParams {
    pub fn standing(omega: f64) -> Self {
        WaveParams { omega, c: 0.0 }
    }

    pub fn boosted(omega: f64, c: f64) -> Self {
        WaveParams { omega, c }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid("omega", format!("must be positive, got {}", self.omega)));
        }
        if !self.c.is_finite() {
            return Err(Error::invalid("c", "must be finite"));
        }
        Ok(())
    }

    /// `c^2 < 4 lambda omega`: the symbol `omega + c k + lambda k^2` stays positive.
    pub fn check_speed(&self, lambda: f64) -> Result<()> {
        let c2 = self.c * self.c;
        let bound = 4.0 * lambda * self.omega;
        if lambda > 0.0 && c2 < bound {
            Ok(())
        } else {
            Err(Error::SpeedTooLarge { c2, bound })
        }
    }
}

/// `(2 - beta) / (1 + beta)`: subcritical below, supercritical above.
pub fn critical_sigma(beta: f64) -> f64 {
    (2.0 - beta) / (1.0 + beta)
}

/// Sobolev index `s_c = (sigma - 2 + beta) / (2 sigma)` left invariant by the scaling
/// `u -> tau^{(2 - beta)/(2 sigma)} u(tau x, tau^2 t)`.
pub fn critical_sobolev_index(beta: f64, sigma: f64) -> f64 {
    (sigma - 2.0 + beta) / (2.0 * sigma)
}

/// `|u|^{2 sigma} u` pointwise.
pub(crate) fn power_nonlinearity(values: &[Complex64], sigma: f64, out: &mut [Complex64]) {
    if sigma == 1.0 {
        for (o, v) in out.iter_mut().zip(values) {
            *o = v * v.norm_sqr();
        }
    } else {
        for (o, v) in out.iter_mut().zip(values) {
            let m2 = v.norm_sqr();
            *o = if m2 == 0.0 { *v } else { v * m2.powf(sigma) };
        }
    }
}

/// `zeta * D^beta(|u|^{2 sigma} u)`.
pub fn nonlinear_term(u: &ComplexField, p: &ModelParams) -> Result<ComplexField> {
    u.ensure_finite()?;
    let grid = u.grid();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.n()];
    power_nonlinearity(u.values(), p.sigma, &mut buf);
    if p.beta != 0.0 {
        grid.apply_multiplier(&mut buf, &grid.fractional_multiplier(p.beta));
    }
    for v in buf.iter_mut() {
        *v *= p.zeta;
    }
    ComplexField::new(grid.clone(), buf)
}

/// Spectral weights shared by the functionals; build once per grid and `beta`.
#[derive(Debug, Clone)]
pub struct FunctionalWeights {
    /// `|k|^{-beta}`
    pub mass: Vec<f64>,
    /// `|k|^{2 - beta}`
    pub gradient: Vec<f64>,
    /// `k |k|^{-beta}`
    pub momentum: Vec<f64>,
}

impl FunctionalWeights {
    pub fn new(grid: &Grid, beta: f64) -> Self {
        let mass = fractional_symbol(grid.k(), -beta);
        let gradient = fractional_symbol(grid.k(), 2.0 - beta);
        let momentum = grid.k().iter().zip(&mass).map(|(k, w)| k * w).collect();
        FunctionalWeights {
            mass,
            gradient,
            momentum,
        }
    }
}

/// The quadratic and potential pieces every functional is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    /// `F(u) = ||D^{-beta/2} u||^2`
    pub mass: f64,
    /// `||D^{1 - beta/2} u||^2 = ||D^{-beta/2} u_x||^2`
    pub gradient: f64,
    /// `||u||_{L^{2 sigma + 2}}^{2 sigma + 2}`
    pub potential: f64,
    /// `P(u) = L sum k |k|^{-beta} |c_k|^2`
    pub momentum: f64,
}

impl Functionals {
    pub fn compute(u: &ComplexField, p: &ModelParams) -> Result<Self> {
        let w = FunctionalWeights::new(u.grid(), p.beta);
        Self::with_weights(u, p, &w)
    }

    pub fn with_weights(u: &ComplexField, p: &ModelParams, w: &FunctionalWeights) -> Result<Self> {
        u.ensure_finite()?;
        let coeffs = u.raw_coeffs();
        Ok(Self::from_parts(u, &coeffs, p.sigma, w))
    }

    /// `coeffs` must be the normalized transform of `u`.
    pub(crate) fn from_parts(
        u: &ComplexField,
        coeffs: &[Complex64],
        sigma: f64,
        w: &FunctionalWeights,
    ) -> Self {
        let grid = u.grid();
        Functionals {
            mass: grid.weighted_energy(coeffs, &w.mass),
            gradient: grid.weighted_energy(coeffs, &w.gradient),
            potential: u.lp_power(2.0 * sigma + 2.0),
            momentum: grid.weighted_energy(coeffs, &w.momentum),
        }
    }

    /// `E = (lambda ||D^{-beta/2} u_x||^2 - zeta/(sigma+1) ||u||^{2 sigma + 2}) / 2`.
    pub fn energy(&self, p: &ModelParams) -> f64 {
        0.5 * (p.lambda * self.gradient - p.zeta / (p.sigma + 1.0) * self.potential)
    }

    /// Energy-space norm `sqrt(F + ||D^{1 - beta/2} u||^2)`.
    pub fn chi(&self) -> f64 {
        (self.mass + self.gradient).sqrt()
    }
}

pub fn mass(u: &ComplexField, p: &ModelParams) -> Result<f64> {
    Ok(Functionals::compute(u, p)?.mass)
}

pub fn energy(u: &ComplexField, p: &ModelParams) -> Result<f64> {
    Ok(Functionals::compute(u, p)?.energy(p))
}

pub fn momentum(u: &ComplexField, p: &ModelParams) -> Result<f64> {
    Ok(Functionals::compute(u, p)?.momentum)
}

pub fn chi_norm(u: &ComplexField, p: &ModelParams) -> Result<f64> {
    Ok(Functionals::compute(u, p)?.chi())
}

/// One row of the diagnostics series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSnapshot {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub momentum: f64,
    pub chi: f64,
    pub linf: f64,
    pub delta_f: f64,
}

impl InvariantSnapshot {
    pub const CSV_HEADER: &'static str = "t,F,E,P,chi,linf,deltaF";

    pub fn to_csv_row(&self) -> String {
        let mut s = String::new();
        for (i, v) in [
            self.t,
            self.mass,
            self.energy,
            self.momentum,
            self.chi,
            self.linf,
            self.delta_f,
        ]
        .iter()
        .enumerate()
        {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&fmt_sig15(*v));
        }
        s
    }
}

/// Fixed 15-significant-digit scientific notation used by every CSV artifact.
pub fn fmt_sig15(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v:.14e}").unwrap();
    s
}

/// Relative residuals of the Pohozaev identities for a computed profile.
///
/// For `c = 0`: `r0 = |omega F - theta0 zeta N| / N` and `r1 = |lambda G - theta1 zeta N| / N`
/// where `N = ||phi||^{2 sigma + 2}` and `G = ||D^{1 - beta/2} phi||^2`. For `c != 0` those two
/// are set to `-1` (not applicable). `boosted` is the residual of
/// `omega F + c P + lambda G = zeta N`, meaningful for every `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PohozaevResiduals {
    pub r0: f64,
    pub r1: f64,
    pub boosted: f64,
}

impl PohozaevResiduals {
    pub const NOT_APPLICABLE: f64 = -1.0;

    pub fn max_applicable(&self) -> f64 {
        [self.r0, self.r1, self.boosted]
            .into_iter()
            .filter(|v| *v >= 0.0)
            .fold(0.0, f64::max)
    }
}

pub fn pohozaev_residuals(
    phi: &ComplexField,
    p: &ModelParams,
    w: &WaveParams,
) -> Result<PohozaevResiduals> {
    let f = Functionals::compute(phi, p)?;
    let n = f.potential;
    if n == 0.0 {
        return Err(Error::ZeroProfile);
    }
    let boosted = (w.omega * f.mass + w.c * f.momentum + p.lambda * f.gradient - p.zeta * n).abs() / n;
    let (r0, r1) = if w.c == 0.0 {
        (
            (w.omega * f.mass - p.theta0() * p.zeta * n).abs() / n,
            (p.lambda * f.gradient - p.theta1() * p.zeta * n).abs() / n,
        )
    } else {
        (PohozaevResiduals::NOT_APPLICABLE, PohozaevResiduals::NOT_APPLICABLE)
    };
    Ok(PohozaevResiduals { r0, r1, boosted })
}

/// Position of `sigma` relative to `(2 - beta)/(1 + beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn of(beta: f64, sigma: f64) -> Regime {
        let sc = critical_sigma(beta);
        if (sigma - sc).abs() <= 1e-12 * sc.abs().max(1.0) {
            Regime::Critical
        } else if sigma < sc {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub regime: Regime,
    /// Uniform bound in the energy space is guaranteed.
    pub bounded_guarantee: bool,
    /// Blow-up (finite or infinite time) is indicated; never a proof.
    pub blowup_indicated: bool,
    /// `E(rQ)` from the closed form, when `u0 = rQ` was declared.
    pub scaled_energy: Option<f64>,
    /// Left side of the reduced supercritical condition for `u0 = rQ`.
    pub scaled_condition: Option<f64>,
}

/// Left side of the supercritical bound for `u0 = r Q`:
/// `(s/2 - r^{2 sigma}) * 2 r^{4 sigma / (s - 2)} / (s - 2)` with `s = beta (sigma + 1) + sigma`.
pub fn scaled_bound_lhs(r: f64, beta: f64, sigma: f64) -> f64 {
    let s = beta * (sigma + 1.0) + sigma;
    let p = s - 2.0;
    (0.5 * s - r.powf(2.0 * sigma)) * 2.0 * r.powf(4.0 * sigma / p) / p
}

/// `E(rQ) = (s/2 - r^{2 sigma}) * 2 r^2 / (s - 2) * E(Q)`.
pub fn scaled_energy(r: f64, beta: f64, sigma: f64, energy_q: f64) -> f64 {
    let s = beta * (sigma + 1.0) + sigma;
    (0.5 * s - r.powf(2.0 * sigma)) * 2.0 * r * r / (s - 2.0) * energy_q
}

/// Global-behaviour classification of the solution issued from `u0`, using the ground
/// state `q` of the same `(beta, sigma)`.
///
/// `declared_r = Some(r)` asserts `u0 = r q`; the energy of `u0` is then taken from the
/// closed form and `F`, `G` from exact scaling.
pub fn classify_global(
    u0: &ComplexField,
    q: &ComplexField,
    p: &ModelParams,
    declared_r: Option<f64>,
) -> Result<Classification> {
    p.validate()?;
    if p.lambda <= 0.0 {
        return Err(Error::invalid("lambda", "classification needs lambda > 0"));
    }
    u0.ensure_same_grid(q)?;
    let lower = 0f64.max(-p.beta / (1.0 + p.beta));
    if p.sigma <= lower {
        return Err(Error::InvalidRegime {
            sigma: p.sigma,
            beta: p.beta,
            lower,
        });
    }
    let regime = Regime::of(p.beta, p.sigma);
    let fq = Functionals::compute(q, p)?;
    let eq = fq.energy(p);

    let (f0, g0, e0, scaled_e) = match declared_r {
        Some(r) => {
            let e = scaled_energy(r, p.beta, p.sigma, eq);
            (r * r * fq.mass, r * r * fq.gradient, e, Some(e))
        }
        None => {
            let f = Functionals::compute(u0, p)?;
            (f.mass, f.gradient, f.energy(p), None)
        }
    };

    if p.zeta < 0.0 {
        return Ok(Classification {
            regime,
            bounded_guarantee: true,
            blowup_indicated: false,
            scaled_energy: scaled_e,
            scaled_condition: None,
        });
    }

    let s = p.beta * (p.sigma + 1.0) + p.sigma;
    let pexp = s - 2.0;
    let eexp = ((1.0 + p.sigma) * (1.0 - p.beta) + 1.0) / 2.0;
    let (bounded, blowup, cond) = match regime {
        Regime::Subcritical => (true, false, None),
        Regime::Critical => {
            let bound = p.lambda.powf((1.0 + p.beta) / (2.0 - p.beta)) * fq.mass;
            (f0 < bound, false, None)
        }
        Regime::Supercritical => {
            // log-scale comparisons of G^{p/2} F^e and E^{p/2} F^e
            let gradient_side = |g: f64, f: f64| 0.5 * pexp * g.ln() + eexp * f.ln();
            let kinetic_u0 = gradient_side(g0, f0);
            let kinetic_q = p.lambda.ln() + gradient_side(fq.gradient, fq.mass);
            let kinetic_below = kinetic_u0 < kinetic_q;
            let kinetic_above = kinetic_u0 > gradient_side(fq.gradient, fq.mass);

            let energy_below;
            let energy_above;
            if e0 < 0.0 {
                energy_below = false;
                energy_above = false;
            } else {
                let lhs = if e0 == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    gradient_side(e0, f0)
                };
                let rhs_bounded = 0.5 * s * p.lambda.ln() + gradient_side(eq, fq.mass);
                let rhs_blowup = gradient_side(eq, fq.mass);
                energy_below = lhs < rhs_bounded;
                energy_above = lhs > rhs_blowup;
            }
            let bounded = e0 >= 0.0 && kinetic_below && energy_below;
            let blowup = e0 < 0.0 || (kinetic_above && energy_above);
            let cond = declared_r.map(|r| scaled_bound_lhs(r, p.beta, p.sigma));
            (bounded, blowup, cond)
        }
    };
    Ok(Classification {
        regime,
        bounded_guarantee: bounded,
        blowup_indicated: blowup,
        scaled_energy: scaled_e,
        scaled_condition: cond,
    })
}

/// Both sides of the interpolation inequality
/// `||u||_{L^{2q+2}} <= C F(u)^{1/2 - (beta + q/(q+1))/4} ||D^{1-beta/2} u||^{beta/2 + q/(2(q+1))}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Constant used for `rhs`: the value making the inequality an equality at the ground state.
    pub constant: f64,
    /// `1 / (theta0^{theta0/2} theta1^{theta1/2} ||Q||_{L^{2 sigma+2}}^{sigma})`, which agrees with
    /// `constant` when the ground state satisfies the Pohozaev identities (q = sigma, omega = lambda = 1).
    pub closed_form_constant: f64,
    /// Same closed form with the exponent `2 sigma + 2` on the norm.
    pub literal_constant: f64,
    /// True when `q == sigma`, i.e. the constant is the optimal one.
    pub sharp: bool,
}

impl GnCheck {
    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 {
            if self.lhs == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Admissible exponent range `[max(0, -beta/(1+beta)), q_max]`, with `q_max = (2-beta)/(beta-1)`
/// for `beta > 1` and unbounded (any finite `q`) otherwise.
pub fn gn_exponent_range(beta: f64) -> (f64, f64) {
    let lower = 0f64.max(-beta / (1.0 + beta));
    let upper = if beta > 1.0 {
        (2.0 - beta) / (beta - 1.0)
    } else {
        f64::INFINITY
    };
    (lower, upper)
}

pub fn gn_check(u: &ComplexField, q_profile: &ComplexField, p: &ModelParams, q: f64) -> Result<GnCheck> {
    u.ensure_same_grid(q_profile)?;
    let (lower, upper) = gn_exponent_range(p.beta);
    if !(q.is_finite() && q >= lower && q <= upper) {
        return Err(Error::InadmissibleExponent { q, lower, upper });
    }
    let mass_exp = 0.5 - 0.25 * (p.beta + q / (q + 1.0));
    let grad_exp = 0.5 * p.beta + q / (2.0 * (q + 1.0));
    let side = |f: &Functionals, field: &ComplexField| -> (f64, f64) {
        let lhs = field.lp_power(2.0 * q + 2.0).powf(1.0 / (2.0 * q + 2.0));
        let shape = f.mass.powf(mass_exp) * f.gradient.sqrt().powf(grad_exp);
        (lhs, shape)
    };
    let fq = Functionals::compute(q_profile, p)?;
    let (lq, sq) = side(&fq, q_profile);
    if lq == 0.0 || sq == 0.0 {
        return Err(Error::ZeroProfile);
    }
    let constant = lq / sq;

    let t0 = p.theta0();
    let t1 = p.theta1();
    let norm = q_profile.lp_power(2.0 * p.sigma + 2.0).powf(1.0 / (2.0 * p.sigma + 2.0));
    let prefactor = t0.powf(0.5 * t0) * t1.powf(0.5 * t1);
    let closed_form_constant = 1.0 / (prefactor * norm.powf(p.sigma));
    let literal_constant = 1.0 / (prefactor * norm.powf(2.0 * p.sigma + 2.0));

    let fu = Functionals::compute(u, p)?;
    let (lu, su) = side(&fu, u);
    Ok(GnCheck {
        lhs: lu,
        rhs: constant * su,
        constant,
        closed_form_constant,
        literal_constant,
        sharp: q == p.sigma,
    })
}
