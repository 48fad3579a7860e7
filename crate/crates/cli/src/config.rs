use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use fnls::petviashvili::InitialGuess;
use fnls::semiclassical::{Amplitude, Phase};
use fnls::stability::ScanOptions;
use fnls::{Grid, ModelParams, Scheme, SolveOptions, StepConfig, WaveParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GroundState,
    Boosted,
    Evolve,
    Perturb,
    DScan,
    Semiclassical,
    Check,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::GroundState => "ground-state",
            Experiment::Boosted => "boosted",
            Experiment::Evolve => "evolve",
            Experiment::Perturb => "perturb",
            Experiment::DScan => "d-scan",
            Experiment::Semiclassical => "semiclassical",
            Experiment::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GuessName {
    Gaussian,
    Sech,
    ExactBeta0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Strang2,
    Yoshida4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeName {
    Sech,
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseName {
    Zero,
    #[serde(rename = "2sech")]
    #[value(name = "2sech")]
    TwoSech,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub lambda: Option<f64>,
    pub zeta: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSection {
    pub omega: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub nu: Option<f64>,
    pub initial_guess: Option<GuessName>,
    pub force: Option<bool>,
    pub reduce_frequency: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteppingSection {
    pub t_final: Option<f64>,
    pub steps: Option<usize>,
    pub scheme: Option<SchemeName>,
    pub monitor_every: Option<usize>,
    pub blowup_linf_cap: Option<f64>,
    pub mass_drift_cap: Option<f64>,
    pub boundary_cap: Option<f64>,
    pub dealias: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub n_points: Option<usize>,
    pub omega_max: Option<f64>,
    pub margin_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemiclassicalSection {
    pub amplitude: Option<AmplitudeName>,
    pub phase: Option<PhaseName>,
}

/// Contents of a `--config` file; every field optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub experiment: Option<Experiment>,
    pub r: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// FNLS profile used as initial data by `evolve`.
    pub input: Option<PathBuf>,
    pub domain: DomainSection,
    pub model: ModelSection,
    pub wave: WaveSection,
    pub solver: SolverSection,
    pub stepping: SteppingSection,
    pub scan: ScanSection,
    pub semiclassical: SemiclassicalSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }
}

/// Command-line overrides; each flag replaces the matching config entry.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Number of grid points (power of two).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, value_enum)]
    pub initial_guess: Option<GuessName>,
    /// Skip the nonexistence guard.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub reduce_frequency: bool,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeName>,
    #[arg(long)]
    pub monitor_every: Option<usize>,
    #[arg(long)]
    pub blowup_linf_cap: Option<f64>,
    #[arg(long)]
    pub mass_drift_cap: Option<f64>,
    #[arg(long)]
    pub boundary_cap: Option<f64>,
    #[arg(long)]
    pub dealias: bool,
    /// Amplitude factor applied to the profile.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// FNLS profile used as initial data.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub margin_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub amplitude: Option<AmplitudeName>,
    #[arg(long, value_enum)]
    pub phase: Option<PhaseName>,
}

fn set<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
    if v.is_some() {
        slot.clone_from(v);
    }
}

impl Overrides {
    pub fn apply(&self, f: &mut FileConfig) {
        set(&mut f.domain.a, &self.a);
        set(&mut f.domain.b, &self.b);
        set(&mut f.domain.n, &self.n);
        set(&mut f.model.lambda, &self.lambda);
        set(&mut f.model.zeta, &self.zeta);
        set(&mut f.model.beta, &self.beta);
        set(&mut f.model.sigma, &self.sigma);
        set(&mut f.wave.omega, &self.omega);
        set(&mut f.wave.c, &self.c);
        set(&mut f.solver.tol, &self.tol);
        set(&mut f.solver.max_iter, &self.max_iter);
        set(&mut f.solver.nu, &self.nu);
        set(&mut f.solver.initial_guess, &self.initial_guess);
        if self.force {
            f.solver.force = Some(true);
        }
        if self.reduce_frequency {
            f.solver.reduce_frequency = Some(true);
        }
        set(&mut f.stepping.t_final, &self.t_final);
        set(&mut f.stepping.steps, &self.steps);
        set(&mut f.stepping.scheme, &self.scheme);
        set(&mut f.stepping.monitor_every, &self.monitor_every);
        set(&mut f.stepping.blowup_linf_cap, &self.blowup_linf_cap);
        set(&mut f.stepping.mass_drift_cap, &self.mass_drift_cap);
        set(&mut f.stepping.boundary_cap, &self.boundary_cap);
        if self.dealias {
            f.stepping.dealias = Some(true);
        }
        set(&mut f.r, &self.r);
        set(&mut f.epsilon, &self.epsilon);
        set(&mut f.seed, &self.seed);
        set(&mut f.out_dir, &self.out_dir);
        set(&mut f.input, &self.input);
        set(&mut f.scan.n_points, &self.n_points);
        set(&mut f.scan.omega_max, &self.omega_max);
        set(&mut f.scan.margin_fraction, &self.margin_fraction);
        set(&mut f.semiclassical.amplitude, &self.amplitude);
        set(&mut f.semiclassical.phase, &self.phase);
    }
}

/// Fully resolved, validated configuration of one run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid: Arc<Grid>,
    pub model: ModelParams,
    pub wave: WaveParams,
    pub solver: SolveOptions,
    pub stepping: StepConfig,
    pub scan: ScanOptions,
    pub amplitude: Amplitude,
    pub phase: Phase,
    pub r: Option<f64>,
    pub epsilon: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub input: Option<PathBuf>,
    /// The configuration with every default filled in, for the manifest.
    pub echo: FileConfig,
}

fn config_err(e: fnls::error::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Output directory when neither the config nor a flag names one.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("OUT_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

impl ExperimentConfig {
    pub fn resolve(experiment: Experiment, mut f: FileConfig) -> Result<Self, CliError> {
        f.experiment = Some(experiment);
        let semiclassical = experiment == Experiment::Semiclassical;

        let d = &mut f.domain;
        let a = *d.a.get_or_insert(-50.0);
        let b = *d.b.get_or_insert(50.0);
        let n = *d.n.get_or_insert(4096);
        let grid = Grid::new(a, b, n).map_err(config_err)?;

        let m = &mut f.model;
        let model = ModelParams::new(
            *m.lambda.get_or_insert(1.0),
            *m.zeta.get_or_insert(1.0),
            *m.beta.get_or_insert(0.0),
            *m.sigma.get_or_insert(1.0),
        );
        model.validate().map_err(config_err)?;

        let wave = WaveParams::boosted(*f.wave.omega.get_or_insert(1.0), *f.wave.c.get_or_insert(0.0));
        wave.validate().map_err(config_err)?;
        // a d-scan picks its own frequencies above c^2 / (4 lambda)
        if !semiclassical && experiment != Experiment::DScan && wave.c != 0.0 {
            wave.check_speed(model.lambda).map_err(config_err)?;
        }

        let s = &mut f.solver;
        let defaults = SolveOptions::default();
        let solver = SolveOptions {
            tol: *s.tol.get_or_insert(defaults.tol),
            max_iter: *s.max_iter.get_or_insert(defaults.max_iter),
            nu: s.nu,
            initial_guess: match *s.initial_guess.get_or_insert(GuessName::Gaussian) {
                GuessName::Gaussian => InitialGuess::Gaussian,
                GuessName::Sech => InitialGuess::Sech,
                GuessName::ExactBeta0 => InitialGuess::ExactBeta0,
            },
            force: *s.force.get_or_insert(false),
            reduce_frequency: *s.reduce_frequency.get_or_insert(false),
        };
        solver.validate().map_err(config_err)?;

        let st = &mut f.stepping;
        let mut stepping = StepConfig::new(*st.t_final.get_or_insert(1.0), *st.steps.get_or_insert(1000));
        stepping.scheme = match *st.scheme.get_or_insert(SchemeName::Yoshida4) {
            SchemeName::Strang2 => Scheme::Strang2,
            SchemeName::Yoshida4 => Scheme::Yoshida4,
        };
        stepping.monitor_every = st.monitor_every;
        stepping.blowup_linf_cap = *st.blowup_linf_cap.get_or_insert(stepping.blowup_linf_cap);
        let drift_default = if semiclassical { f64::INFINITY } else { stepping.mass_drift_cap };
        stepping.mass_drift_cap = *st.mass_drift_cap.get_or_insert(drift_default);
        stepping.boundary_cap = match st.boundary_cap {
            Some(v) => Some(v),
            None if semiclassical => Some(*st.boundary_cap.insert(1e-3)),
            None => None,
        };
        stepping.dealias = *st.dealias.get_or_insert(false);
        stepping.validate().map_err(config_err)?;

        let sc = &mut f.scan;
        let sd = ScanOptions::default();
        let scan = ScanOptions {
            n_points: *sc.n_points.get_or_insert(sd.n_points),
            omega_max: *sc.omega_max.get_or_insert(sd.omega_max),
            margin_fraction: *sc.margin_fraction.get_or_insert(sd.margin_fraction),
            solve: solver.clone(),
        };
        if scan.n_points < 5 {
            return Err(CliError::Config("scan.n_points: need at least 5 points".into()));
        }

        let amplitude = match *f.semiclassical.amplitude.get_or_insert(AmplitudeName::Sech) {
            AmplitudeName::Sech => Amplitude::Sech,
            AmplitudeName::Gaussian => Amplitude::Gaussian,
            AmplitudeName::Zero => Amplitude::Zero,
        };
        let phase = match *f.semiclassical.phase.get_or_insert(PhaseName::Zero) {
            PhaseName::Zero => Phase::Zero,
            PhaseName::TwoSech => Phase::TwoSech,
        };

        if let Some(r) = f.r {
            if !(r.is_finite() && r > 0.0) {
                return Err(CliError::Config(format!("r: must be positive, got {r}")));
            }
        }
        if experiment == Experiment::Perturb && f.r.is_none() {
            return Err(CliError::Config("r: required by perturb".into()));
        }
        let epsilon = *f.epsilon.get_or_insert(0.1);
        let seed = *f.seed.get_or_insert(0);
        let out_dir = f.out_dir.get_or_insert_with(default_out_dir).clone();

        Ok(ExperimentConfig {
            experiment,
            grid,
            model,
            wave,
            solver,
            stepping,
            scan,
            amplitude,
            phase,
            r: f.r,
            epsilon,
            seed,
            out_dir,
            input: f.input.clone(),
            echo: f,
        })
    }

    /// `key: value` lines of the resolved configuration, sections flattened with dots.
    pub fn echo_lines(&self) -> Vec<(String, String)> {
        let value = toml::Value::try_from(&self.echo).expect("config serializes");
        let mut out = Vec::new();
        flatten("config", &value, &mut out);
        out
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        toml::Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}
