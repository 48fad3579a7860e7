//! Lyapunov function `d(omega) = sigma/(2(sigma+1)) ||phi||^{2 sigma + 2}` along wave families,
//! its convexity scans, and perturbation experiments.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{fmt_sig15, ModelParams, WaveParams};
use crate::petviashvili::{solve_boosted, solve_standing_wave, InitialGuess, ProfileRecord, SolveOptions};
use crate::spectral::{ComplexField, Grid};
use crate::timestepper::{evolve, Outcome, StepConfig};

/// Trapezoidal `sigma/(2(sigma+1)) h sum |phi_j|^{2 sigma + 2}`.
pub fn lyapunov_d(phi: &ComplexField, sigma: f64) -> Result<f64> {
    phi.ensure_finite()?;
    Ok(sigma / (2.0 * (sigma + 1.0)) * phi.lp_power(2.0 * sigma + 2.0))
}

/// Exponent of `d(omega) ~ omega^p` along the `c = 0` scaling family
/// `phi_omega(x) = omega^{(2-beta)/(4 sigma)} phi_1(sqrt(omega) x)`:
/// `p = ((2 - beta)(sigma + 1) - sigma) / (2 sigma)`.
pub fn d_scaling_exponent(beta: f64, sigma: f64) -> f64 {
    ((2.0 - beta) * (sigma + 1.0) - sigma) / (2.0 * sigma)
}

/// The exponent `((1 - beta) 2 sigma + 2 - beta) / (2 sigma)` used by [`analytic_d2_zero_speed`].
/// It exceeds [`d_scaling_exponent`] by `(1 - beta) / 2`.
pub fn d_literal_exponent(beta: f64, sigma: f64) -> f64 {
    ((1.0 - beta) * 2.0 * sigma + 2.0 - beta) / (2.0 * sigma)
}

/// `((1-beta) 2 sigma + 2 - beta)((2-beta)(sigma+1) - 3 sigma) / (8 (sigma+1))
///  * omega^{((1-beta) 2 sigma + 2 - beta)/(2 sigma) - 2} * norm`
/// with `norm = ||phi_1||^{2 sigma + 2}` at unit frequency.
///
/// Its sign is that of `(2 - beta)(sigma + 1) - 3 sigma`, positive exactly when
/// `sigma < (2 - beta)/(1 + beta)`. The magnitude differs from the second derivative of
/// `d` along the scaling family; [`exact_d2_zero_speed`] gives that value.
pub fn analytic_d2_zero_speed(p: &ModelParams, omega: f64, norm: f64) -> f64 {
    let (b, s) = (p.beta, p.sigma);
    let a = (1.0 - b) * 2.0 * s + 2.0 - b;
    let q = (2.0 - b) * (s + 1.0) - 3.0 * s;
    a * q / (8.0 * (s + 1.0)) * omega.powf(a / (2.0 * s) - 2.0) * norm
}

/// Second derivative of `d` along the `c = 0` scaling family:
/// `[(2-beta)(sigma+1) - sigma][(2-beta)(sigma+1) - 3 sigma] / (8 sigma (sigma+1)) * omega^{p-2} * norm`.
pub fn exact_d2_zero_speed(p: &ModelParams, omega: f64, norm: f64) -> f64 {
    let (b, s) = (p.beta, p.sigma);
    let a = (2.0 - b) * (s + 1.0) - s;
    let q = (2.0 - b) * (s + 1.0) - 3.0 * s;
    a * q / (8.0 * s * (s + 1.0)) * omega.powf(d_scaling_exponent(b, s) - 2.0) * norm
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub n_points: usize,
    pub omega_max: f64,
    /// Offset of the first point from `c^2/(4 lambda)`, as a fraction of the range.
    pub margin_fraction: f64,
    pub solve: SolveOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            n_points: 50,
            omega_max: 3.0,
            margin_fraction: 0.02,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DScanResult {
    pub c: f64,
    pub omegas: Vec<f64>,
    /// `NaN` where the solve failed.
    pub d: Vec<f64>,
    /// Central differences at `omegas[1..n-1]`.
    pub d2: Vec<f64>,
    pub failed: Vec<bool>,
    /// First sign change of `d2`, linearly interpolated.
    pub omega_c: Option<f64>,
    /// Grid spacing, reported as the uncertainty of `omega_c`.
    pub omega_step: f64,
    pub all_positive: bool,
}

impl DScanResult {
    /// Columns `omega,d,d2,flag`; `d2` is empty at the endpoints.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,d,d2,flag\n");
        let n = self.omegas.len();
        for i in 0..n {
            let d2 = if i == 0 || i + 1 == n {
                String::new()
            } else {
                fmt_sig15(self.d2[i - 1])
            };
            let flag = if self.failed[i] { "failed" } else { "ok" };
            s.push_str(&format!(
                "{},{},{},{}\n",
                fmt_sig15(self.omegas[i]),
                fmt_sig15(self.d[i]),
                d2,
                flag
            ));
        }
        s
    }

    /// Least-squares slope of `ln d` against `ln omega` over the successful points.
    pub fn loglog_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .omegas
            .iter()
            .zip(&self.d)
            .filter(|(_, d)| d.is_finite() && **d > 0.0)
            .map(|(w, d)| (w.ln(), d.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }
}

/// Central second differences on a uniform grid with spacing `h`.
pub fn second_differences(values: &[f64], h: f64) -> Vec<f64> {
    values
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]) / (h * h))
        .collect()
}

/// First sign change of `d2` (sampled at `omegas[1..]`), linearly interpolated.
pub fn first_sign_change(omegas: &[f64], d2: &[f64]) -> Option<f64> {
    for i in 0..d2.len().saturating_sub(1) {
        let (a, b) = (d2[i], d2[i + 1]);
        if a.is_finite() && b.is_finite() && a != 0.0 && (a > 0.0) != (b > 0.0) {
            let (wa, wb) = (omegas[i + 1], omegas[i + 2]);
            return Some(wa + a / (a - b) * (wb - wa));
        }
        if a == 0.0 {
            return Some(omegas[i + 1]);
        }
    }
    None
}

/// Uniform scan of `d` over `(c^2/(4 lambda) + margin, omega_max]`, warm-starting each solve
/// from the previous profile. Failed solves are flagged and skipped.
pub fn scan_d(p: &ModelParams, c: f64, g: &Arc<Grid>, opts: &ScanOptions) -> Result<DScanResult> {
    p.validate()?;
    if !(p.lambda > 0.0) || p.zeta != 1.0 {
        return Err(Error::invalid("params", "scans need lambda > 0 and zeta = 1"));
    }
    if opts.n_points < 5 {
        return Err(Error::invalid("n_points", "need at least 5 scan points"));
    }
    let lo_bound = c * c / (4.0 * p.lambda);
    if !(opts.omega_max > lo_bound) {
        return Err(Error::invalid("omega_max", format!("must exceed {lo_bound}")));
    }
    let range = opts.omega_max - lo_bound;
    let lo = lo_bound + opts.margin_fraction * range;
    let step = (opts.omega_max - lo) / (opts.n_points - 1) as f64;
    let omegas: Vec<f64> = (0..opts.n_points).map(|i| lo + step * i as f64).collect();

    let mut d = Vec::with_capacity(opts.n_points);
    let mut failed = Vec::with_capacity(opts.n_points);
    let mut guess = opts.solve.initial_guess.clone();
    for &omega in &omegas {
        let so = SolveOptions {
            initial_guess: guess.clone(),
            ..opts.solve.clone()
        };
        let rec = if c == 0.0 {
            solve_standing_wave(p, omega, g, &so)
        } else {
            solve_boosted(p, &WaveParams::boosted(omega, c), g, &so)
        };
        match rec {
            Ok(rec) => {
                d.push(lyapunov_d(&rec.profile, p.sigma)?);
                failed.push(false);
                guess = InitialGuess::Field(rec.profile);
            }
            Err(e) => {
                log::warn!("scan point omega = {omega} failed: {e}");
                d.push(f64::NAN);
                failed.push(true);
            }
        }
    }
    let d2 = second_differences(&d, step);
    let omega_c = first_sign_change(&omegas, &d2);
    let all_positive = d2.iter().all(|v| *v > 0.0);
    Ok(DScanResult {
        c,
        omegas,
        d,
        d2,
        failed,
        omega_c,
        omega_step: step,
        all_positive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    BoundedOscillation,
    Growth,
    BlowUp(f64),
    /// The energy norm left the band without a growth signature.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct PerturbationVerdict {
    pub r: f64,
    pub outcome: Verdict,
    pub chi_series: Vec<(f64, f64)>,
    pub linf_series: Vec<(f64, f64)>,
    pub evolution: Outcome,
}

/// Growth factor separating bounded behaviour from growth.
pub const CHI_BAND: f64 = 1.5;

/// Verdict from an evolution outcome and its `(t, chi)` series.
///
/// Growth: the final `chi` exceeds `CHI_BAND` times the initial value and is the running
/// maximum. Bounded oscillation: the run completed, `chi` never fell below the initial value
/// over `CHI_BAND`, and the largest `chi` in the last third of the series is at most
/// `CHI_BAND` times the largest in the first third.
pub fn classify_verdict(outcome: Outcome, chi: &[(f64, f64)]) -> Verdict {
    if let Outcome::BlowUpDetected(t) = outcome {
        return Verdict::BlowUp(t);
    }
    let Some(&(_, chi0)) = chi.first() else {
        return Verdict::Inconclusive;
    };
    let values: Vec<f64> = chi.iter().map(|v| v.1).collect();
    let peak = |s: &[f64]| s.iter().copied().fold(f64::MIN, f64::max);
    let last = *values.last().expect("nonempty");
    if last > CHI_BAND * chi0 && last >= 0.99 * peak(&values) {
        return Verdict::Growth;
    }
    let third = (values.len() / 3).max(1);
    let early = peak(&values[..third]);
    let late = peak(&values[values.len() - third..]);
    let floor = values.iter().copied().fold(f64::MAX, f64::min);
    match outcome {
        Outcome::Completed if late <= CHI_BAND * early && floor >= chi0 / CHI_BAND => {
            Verdict::BoundedOscillation
        }
        _ => Verdict::Inconclusive,
    }
}

/// Evolves `r * phi` for the profile of `(p, w)` and classifies the run.
pub fn perturbation_run(
    p: &ModelParams,
    w: &WaveParams,
    r: f64,
    cfg: &StepConfig,
    g: &Arc<Grid>,
    solve: &SolveOptions,
) -> Result<PerturbationVerdict> {
    let rec = if w.c == 0.0 {
        solve_standing_wave(p, w.omega, g, solve)?
    } else {
        solve_boosted(p, w, g, solve)?
    };
    perturb_profile(&rec, r, cfg)
}

/// As [`perturbation_run`] with an already computed profile.
pub fn perturb_profile(rec: &ProfileRecord, r: f64, cfg: &StepConfig) -> Result<PerturbationVerdict> {
    let u0 = rec.profile.scaled(Complex64::new(r, 0.0));
    let res = evolve(&u0, &rec.params, cfg)?;
    let chi: Vec<(f64, f64)> = res.diagnostics.rows.iter().map(|s| (s.t, s.chi)).collect();
    let outcome = classify_verdict(res.outcome, &chi);
    Ok(PerturbationVerdict {
        r,
        outcome,
        chi_series: chi,
        linf_series: res.diagnostics.linf.clone(),
        evolution: res.outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petviashvili::exact_profile_beta0;

    #[test]
    fn d_of_sech_and_zero() {
        let g = Grid::new(-40.0, 40.0, 2048).unwrap();
        let q = exact_profile_beta0(1.0, 1.0, &g);
        assert!((lyapunov_d(&q, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(lyapunov_d(&ComplexField::zeros(g), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn analytic_d2_examples() {
        let p = ModelParams::focusing(0.0, 1.0);
        for omega in [0.3, 1.0, 2.5] {
            assert!((analytic_d2_zero_speed(&p, omega, 16.0 / 3.0) - 4.0 / 3.0).abs() < 1e-12);
        }
        let crit = ModelParams::focusing(0.5, 1.0);
        assert_eq!(analytic_d2_zero_speed(&crit, 1.3, 2.0), 0.0);
        assert!(analytic_d2_zero_speed(&ModelParams::focusing(0.8, 1.0), 1.0, 1.0) < 0.0);
    }

    #[test]
    fn exact_d2_matches_differentiated_power_law() {
        for (b, s) in [(0.0, 1.0), (0.3, 1.0), (0.8, 1.0), (0.5, 1.5)] {
            let p = ModelParams::focusing(b, s);
            let e = d_scaling_exponent(b, s);
            let k = s / (2.0 * (s + 1.0));
            let d = |w: f64| k * w.powf(e);
            let h = 1e-4;
            let fd = (d(1.3 + h) - 2.0 * d(1.3) + d(1.3 - h)) / (h * h);
            assert!((exact_d2_zero_speed(&p, 1.3, 1.0) - fd).abs() < 1e-6, "{b} {s}");
        }
    }

    #[test]
    fn sign_rule_matches_criticality() {
        for (b, s) in [(0.3, 1.0), (0.8, 1.0), (0.1, 1.5), (0.5, 1.5), (-0.3, 2.0)] {
            let p = ModelParams::focusing(b, s);
            let pos = s < crate::model::critical_sigma(b);
            assert_eq!(analytic_d2_zero_speed(&p, 1.0, 1.0) > 0.0, pos);
            assert_eq!(exact_d2_zero_speed(&p, 1.0, 1.0) > 0.0, pos);
        }
    }

    #[test]
    fn d_power_law_from_scaled_exact_profiles() {
        let g = Grid::new(-60.0, 60.0, 4096).unwrap();
        let d1 = lyapunov_d(&exact_profile_beta0(1.0, 1.0, &g), 1.0).unwrap();
        let d2 = lyapunov_d(&exact_profile_beta0(1.0, 2.0, &g), 1.0).unwrap();
        let want = 2f64.powf(d_scaling_exponent(0.0, 1.0));
        assert!(((d2 / d1) / want - 1.0).abs() < 1e-3);
        for (b, s) in [(0.0, 1.0), (0.3, 1.0), (0.8, 1.5)] {
            let gap = d_literal_exponent(b, s) - d_scaling_exponent(b, s);
            assert!((gap - 0.5 * (1.0 - b)).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_change_interpolation() {
        let omegas = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(first_sign_change(&omegas, &[1.0, 1.0, -1.0]), Some(2.5));
        assert_eq!(first_sign_change(&omegas, &[1.0, 2.0, 3.0]), None);
        let d2 = second_differences(&[0.0, 1.0, 4.0, 9.0], 1.0);
        assert_eq!(d2, vec![2.0, 2.0]);
    }

    #[test]
    fn verdict_rules() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.0 + 0.1 * (i as f64).sin())).collect();
        assert_eq!(classify_verdict(Outcome::Completed, &flat), Verdict::BoundedOscillation);
        let grow: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.0 + 0.3 * i as f64)).collect();
        assert_eq!(classify_verdict(Outcome::MassDriftExceeded(9.0), &grow), Verdict::Growth);
        assert_eq!(classify_verdict(Outcome::BlowUpDetected(0.4), &flat), Verdict::BlowUp(0.4));
        let dip: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.0 / (1.0 + i as f64))).collect();
        assert_eq!(classify_verdict(Outcome::Completed, &dip), Verdict::Inconclusive);
        // breathing well above the initial value with a shrinking envelope
        let breathe: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let t = i as f64 * 0.2;
                (t, 3.2 + 3.5 * (-0.02 * t).exp() * (t * 2.0).sin().powi(2))
            })
            .collect();
        assert_eq!(classify_verdict(Outcome::Completed, &breathe), Verdict::BoundedOscillation);
        let swell: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let t = i as f64 * 0.2;
                (t, 1.0 + 0.3 * t * (t * 2.0).sin().powi(2))
            })
            .collect();
        assert_ne!(classify_verdict(Outcome::Completed, &swell), Verdict::BoundedOscillation);
    }
}
