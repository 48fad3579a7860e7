//! Small-dispersion runs: data `A(x) exp(i S(x) / eps)` evolved under
//! `i u_t - lambda eps u_xx = zeta eps^{beta-1} D^beta(|u|^{2 sigma} u)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{ComplexField, Grid};
use crate::timestepper::{evolve_scaled, EvolutionResult, StepConfig};

/// Largest amplitude tolerated at the ends of the interval.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Amplitude {
    #[default]
    Sech,
    Gaussian,
    Zero,
}

impl Amplitude {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Amplitude::Sech => 1.0 / x.cosh(),
            Amplitude::Gaussian => (-x * x).exp(),
            Amplitude::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phase {
    #[default]
    Zero,
    /// `S(x) = 2 sech(x)`
    TwoSech,
}

impl Phase {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::TwoSech => 2.0 / x.cosh(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SemiclassicalConfig {
    pub epsilon: f64,
    pub amplitude: Amplitude,
    pub phase: Phase,
    pub params: ModelParams,
    pub step: StepConfig,
}

impl SemiclassicalConfig {
    /// `epsilon` must lie in `(0, 0.5]`; `epsilon = 1` is accepted and reproduces the unscaled equation.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) && self.epsilon != 1.0 {
            return Err(Error::invalid(
                "epsilon",
                format!("must lie in (0, 0.5], got {}", self.epsilon),
            ));
        }
        self.params.validate()?;
        self.step.validate()
    }

    /// `(lambda eps, eps^{beta - 1})`.
    pub fn effective_coefficients(&self) -> (f64, f64) {
        (
            self.params.lambda * self.epsilon,
            self.epsilon.powf(self.params.beta - 1.0),
        )
    }
}

pub fn build_initial(sc: &SemiclassicalConfig, g: &Arc<Grid>) -> Result<ComplexField> {
    sc.validate()?;
    let edge = sc.amplitude.eval(g.a()).abs().max(sc.amplitude.eval(g.b()).abs());
    if edge > BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryNotDecayed(edge));
    }
    let eps = sc.epsilon;
    Ok(ComplexField::from_fn(g.clone(), |x| {
        Complex64::from_polar(sc.amplitude.eval(x), sc.phase.eval(x) / eps)
    }))
}

/// Runs the scaled equation with `max |u|` recorded after every step.
pub fn semiclassical_evolve(sc: &SemiclassicalConfig, g: &Arc<Grid>) -> Result<EvolutionResult> {
    let u0 = build_initial(sc, g)?;
    let cfg = StepConfig {
        linf_every_step: true,
        ..sc.step.clone()
    };
    let (lambda_eff, zeta_scale) = sc.effective_coefficients();
    evolve_scaled(&u0, &sc.params, &cfg, lambda_eff, zeta_scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakRule {
    /// Width of the centered moving average.
    pub window: usize,
    /// Minimum rise of the peak over the initial value.
    pub rise: f64,
}

impl Default for BreakRule {
    fn default() -> Self {
        BreakRule {
            window: 5,
            rise: 0.2,
        }
    }
}

/// Earliest local maximum of the smoothed `(t, max|u|)` series that exceeds the initial
/// value by the default 20%.
pub fn first_break_time(series: &[(f64, f64)]) -> Result<Option<f64>> {
    first_break_time_with(series, &BreakRule::default())
}

pub fn first_break_time_with(series: &[(f64, f64)], rule: &BreakRule) -> Result<Option<f64>> {
    let needed = rule.window.max(3);
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    let half = rule.window / 2;
    let n = series.len();
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            series[lo..=hi].iter().map(|v| v.1).sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let threshold = (1.0 + rule.rise) * series[0].1;
    for i in half.max(1)..n.saturating_sub(half.max(1)) {
        if smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1] && smooth[i] >= threshold {
            return Ok(Some(series[i].0));
        }
    }
    Ok(None)
}
