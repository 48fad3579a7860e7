use std::time::Instant;

use fnls::io::{encode, read_profile, ProfileFile};
use fnls::model::{
    classify_global, critical_sigma, critical_sobolev_index, fmt_sig15, gn_check, Functionals, Regime,
};
use fnls::semiclassical::{first_break_time, semiclassical_evolve, SemiclassicalConfig};
use fnls::stability::{d_scaling_exponent, perturb_profile, scan_d, Verdict};
use fnls::{
    evolve, exact_profile_beta0, solve_boosted, solve_standing_wave, ComplexField, EvolutionResult, Outcome,
    ProfileRecord,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::manifest::Artifacts;

/// Largest number of spatial samples per time slice in surface files.
const SURFACE_POINTS: usize = 256;

const GN_SAMPLES: usize = 100;

pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let mut art = Artifacts::new(&cfg.out_dir)?;
    let status = match cfg.experiment {
        Experiment::GroundState | Experiment::Boosted => profile(cfg, &mut art),
        Experiment::Evolve => evolution(cfg, &mut art),
        Experiment::Perturb => perturb(cfg, &mut art),
        Experiment::DScan => d_scan(cfg, &mut art),
        Experiment::Semiclassical => semiclassical(cfg, &mut art),
        Experiment::Check => check(cfg, &mut art),
    };
    if let Err(e) = &status {
        if !matches!(e, CliError::BlowUp(_)) {
            art.record("error", e);
        }
    }
    let mut header = vec![
        ("experiment".to_string(), cfg.experiment.name().to_string()),
        ("fnls_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    header.extend(cfg.echo_lines());
    let manifest = art.finish(&header, start.elapsed().as_secs_f64())?;
    log::info!("wrote {}", manifest.display());
    status
}

fn two_columns(rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    rows.into_iter()
        .map(|(x, y)| format!("{} {}\n", fmt_sig15(x), fmt_sig15(y)))
        .collect()
}

fn profile_csv(f: &ComplexField) -> String {
    let mut s = String::from("x,re,im,abs\n");
    for (v, x) in f.values().iter().zip(f.grid().x()) {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig15(*x),
            fmt_sig15(v.re),
            fmt_sig15(v.im),
            fmt_sig15(v.norm())
        ));
    }
    s
}

fn surface(snapshots: &[(f64, ComplexField)]) -> String {
    let mut s = String::new();
    for (t, f) in snapshots {
        let stride = (f.len() / SURFACE_POINTS).max(1);
        for (v, x) in f.values().iter().zip(f.grid().x()).step_by(stride) {
            s.push_str(&format!("{} {} {}\n", fmt_sig15(*x), fmt_sig15(*t), fmt_sig15(v.norm_sqr())));
        }
        s.push('\n');
    }
    s
}

fn solve(cfg: &ExperimentConfig) -> Result<ProfileRecord, CliError> {
    let rec = if cfg.wave.c == 0.0 {
        solve_standing_wave(&cfg.model, cfg.wave.omega, &cfg.grid, &cfg.solver)?
    } else {
        solve_boosted(&cfg.model, &cfg.wave, &cfg.grid, &cfg.solver)?
    };
    Ok(rec)
}

fn write_profile_outputs(rec: &ProfileRecord, art: &mut Artifacts) -> Result<(), CliError> {
    let file = ProfileFile {
        field: rec.profile.clone(),
        params: rec.params,
        wave: rec.wave,
        time: None,
    };
    art.write("profile.fnls", &encode(&file))?;
    art.write("profile.csv", profile_csv(&rec.profile).as_bytes())?;
    art.write("trace.csv", rec.trace.to_csv().as_bytes())?;
    let g = rec.profile.grid();
    art.write(
        "profile_abs.dat",
        two_columns(g.x().iter().zip(rec.profile.values()).map(|(&x, v)| (x, v.norm()))).as_bytes(),
    )?;
    art.write(
        "convergence.dat",
        two_columns(rec.trace.errors.iter().enumerate().map(|(i, e)| ((i + 1) as f64, *e))).as_bytes(),
    )?;
    art.record("iterations", rec.trace.iterations);
    art.record("last_error", fmt_sig15(rec.trace.last_error()));
    art.record("last_stab", fmt_sig15(rec.trace.last_stab()));
    art.record("last_res", fmt_sig15(rec.trace.last_res()));
    art.record("pohozaev_r0", fmt_sig15(rec.pohozaev.r0));
    art.record("pohozaev_r1", fmt_sig15(rec.pohozaev.r1));
    art.record("pohozaev_boosted", fmt_sig15(rec.pohozaev.boosted));
    art.record("suspect", rec.suspect);
    art.record("peak", fmt_sig15(rec.profile.linf()));
    Ok(())
}

fn profile(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<(), CliError> {
    if cfg.experiment == Experiment::GroundState && cfg.wave.c != 0.0 {
        return Err(CliError::Config("wave.c: ground-state needs c = 0; use boosted".into()));
    }
    if cfg.experiment == Experiment::Boosted {
        cfg.wave.check_speed(cfg.model.lambda)?;
    }
    let rec = solve(cfg)?;
    write_profile_outputs(&rec, art)?;
    if cfg.model.beta == 0.0 && cfg.wave.c == 0.0 && cfg.model.lambda == 1.0 {
        let exact = exact_profile_beta0(cfg.model.sigma, cfg.wave.omega, &cfg.grid);
        art.record("exact_linf_error", fmt_sig15(rec.profile.linf_distance(&exact)));
    }
    println!(
        "converged in {} iterations; Pohozaev residual {:.3e}",
        rec.trace.iterations,
        rec.pohozaev.max_applicable()
    );
    Ok(())
}

fn write_evolution(res: &EvolutionResult, art: &mut Artifacts) -> Result<(), CliError> {
    let d = &res.diagnostics;
    art.write("diagnostics.csv", d.to_csv().as_bytes())?;
    art.write("linf.csv", d.linf_csv().as_bytes())?;
    art.write("linf.dat", two_columns(d.linf.iter().copied()).as_bytes())?;
    art.write("mass_drift.dat", two_columns(d.rows.iter().map(|r| (r.t, r.delta_f))).as_bytes())?;
    art.write("chi.dat", two_columns(d.rows.iter().map(|r| (r.t, r.chi))).as_bytes())?;
    art.write("energy.dat", two_columns(d.rows.iter().map(|r| (r.t, r.energy))).as_bytes())?;
    if !res.snapshots.is_empty() {
        art.write("surface.dat", surface(&res.snapshots).as_bytes())?;
    }
    art.record("outcome", outcome_name(&res.outcome));
    art.record("final_time", fmt_sig15(res.final_time));
    art.record("max_mass_drift", fmt_sig15(d.max_mass_drift()));
    art.record("cfl_indicator", fmt_sig15(d.cfl_indicator));
    Ok(())
}

fn outcome_name(o: &Outcome) -> String {
    match o {
        Outcome::Completed => "completed".into(),
        Outcome::BlowUpDetected(t) => format!("blow-up at t={}", fmt_sig15(*t)),
        Outcome::MassDriftExceeded(t) => format!("mass drift exceeded at t={}", fmt_sig15(*t)),
        Outcome::BoundaryReached(t) => format!("boundary reached at t={}", fmt_sig15(*t)),
    }
}

fn blowup_status(o: &Outcome) -> Result<(), CliError> {
    match o {
        Outcome::BlowUpDetected(t) => Err(CliError::BlowUp(*t)),
        _ => Ok(()),
    }
}

fn initial_data(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<ComplexField, CliError> {
    let r = cfg.r.unwrap_or(1.0);
    let base = match &cfg.input {
        Some(path) => {
            art.record("input", path.display());
            read_profile(path)?.field
        }
        None => {
            let rec = solve(cfg)?;
            write_profile_outputs(&rec, art)?;
            rec.profile
        }
    };
    Ok(base.scaled(Complex64::new(r, 0.0)))
}

fn evolution(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let u0 = initial_data(cfg, art)?;
    let res = evolve(&u0, &cfg.model, &cfg.stepping)?;
    let snapshot = |f: &ComplexField, t: Option<f64>| ProfileFile {
        field: f.clone(),
        params: cfg.model,
        wave: cfg.wave,
        time: t,
    };
    art.write("initial.fnls", &encode(&snapshot(&u0, Some(0.0))))?;
    art.write("final.fnls", &encode(&snapshot(&res.final_field, Some(res.final_time))))?;
    write_evolution(&res, art)?;
    println!("{}; max mass drift {:.3e}", outcome_name(&res.outcome), res.diagnostics.max_mass_drift());
    blowup_status(&res.outcome)
}

fn perturb(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let r = cfg.r.expect("validated");
    let rec = solve(cfg)?;
    write_profile_outputs(&rec, art)?;
    let v = perturb_profile(&rec, r, &cfg.stepping)?;
    art.write("chi.dat", two_columns(v.chi_series.iter().copied()).as_bytes())?;
    art.write("linf.dat", two_columns(v.linf_series.iter().copied()).as_bytes())?;
    art.record("r", r);
    art.record("outcome", outcome_name(&v.evolution));
    let verdict = match v.outcome {
        Verdict::BoundedOscillation => "bounded-oscillation".to_string(),
        Verdict::Growth => "growth".to_string(),
        Verdict::BlowUp(t) => format!("blow-up at t={}", fmt_sig15(t)),
        Verdict::Inconclusive => "inconclusive".to_string(),
    };
    art.record("verdict", &verdict);
    println!("verdict: {verdict}");
    blowup_status(&v.evolution)
}

fn d_scan(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let s = scan_d(&cfg.model, cfg.wave.c, &cfg.grid, &cfg.scan)?;
    art.write("dscan.csv", s.to_csv().as_bytes())?;
    art.write(
        "d.dat",
        two_columns(s.omegas.iter().zip(&s.d).filter(|(_, d)| d.is_finite()).map(|(w, d)| (*w, *d))).as_bytes(),
    )?;
    art.write(
        "d2.dat",
        two_columns(s.omegas[1..].iter().zip(&s.d2).filter(|(_, d)| d.is_finite()).map(|(w, d)| (*w, *d)))
            .as_bytes(),
    )?;
    let omega_c = s.omega_c.map_or_else(|| "none".to_string(), fmt_sig15);
    art.record("omega_c", &omega_c);
    art.record("omega_step", fmt_sig15(s.omega_step));
    art.record("all_positive", s.all_positive);
    art.record("failed_points", s.failed.iter().filter(|f| **f).count());
    if cfg.wave.c == 0.0 {
        art.record("loglog_slope", fmt_sig15(s.loglog_slope()));
        art.record("scaling_exponent", fmt_sig15(d_scaling_exponent(cfg.model.beta, cfg.model.sigma)));
    }
    println!("omega_c: {omega_c}; all positive: {}", s.all_positive);
    Ok(())
}

fn semiclassical(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let sc = SemiclassicalConfig {
        epsilon: cfg.epsilon,
        amplitude: cfg.amplitude,
        phase: cfg.phase,
        params: cfg.model,
        step: cfg.stepping.clone(),
    };
    let res = semiclassical_evolve(&sc, &cfg.grid)?;
    write_evolution(&res, art)?;
    let t_break = first_break_time(&res.diagnostics.linf)?;
    let shown = t_break.map_or_else(|| "none".to_string(), fmt_sig15);
    art.record("break_time", &shown);
    println!("first break: {shown}; {}", outcome_name(&res.outcome));
    blowup_status(&res.outcome)
}

fn random_zero_mean(g: &std::sync::Arc<fnls::Grid>, rng: &mut ChaCha8Rng) -> ComplexField {
    let span = 0.2 * (g.b() - g.a());
    let mid = 0.5 * (g.a() + g.b());
    let bumps: Vec<(f64, f64, Complex64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            (
                mid + rng.gen_range(-0.5..0.5) * span,
                rng.gen_range(0.3..3.0),
                Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            )
        })
        .collect();
    let mut f = ComplexField::from_fn(g.clone(), |x| {
        bumps.iter().map(|&(x0, w, a)| a * (-((x - x0) / w).powi(2)).exp()).sum()
    });
    let mean = f.values().iter().sum::<Complex64>() / f.len() as f64;
    f.values_mut().iter_mut().for_each(|v| *v -= mean);
    f
}

fn check(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let p = &cfg.model;
    let regime = Regime::of(p.beta, p.sigma);
    art.record("regime", format!("{regime:?}").to_lowercase());
    art.record("critical_sigma", fmt_sig15(critical_sigma(p.beta)));
    art.record("critical_sobolev_index", fmt_sig15(critical_sobolev_index(p.beta, p.sigma)));

    let rec = solve_standing_wave(p, cfg.wave.omega, &cfg.grid, &cfg.solver)?;
    write_profile_outputs(&rec, art)?;
    let f = Functionals::compute(&rec.profile, p)?;
    art.record("ground_state_mass", fmt_sig15(f.mass));
    art.record("ground_state_energy", fmt_sig15(f.energy(p)));

    if let Some(r) = cfg.r {
        let u0 = rec.profile.scaled(Complex64::new(r, 0.0));
        let c = classify_global(&u0, &rec.profile, p, Some(r))?;
        art.record("bounded_guarantee", c.bounded_guarantee);
        art.record("blowup_indicated", c.blowup_indicated);
        if let Some(v) = c.scaled_condition {
            art.record("scaled_condition", fmt_sig15(v));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ratios = Vec::with_capacity(GN_SAMPLES);
    for _ in 0..GN_SAMPLES {
        let u = random_zero_mean(&cfg.grid, &mut rng);
        ratios.push(gn_check(&u, &rec.profile, p, p.sigma)?.ratio());
    }
    let at_q = gn_check(&rec.profile, &rec.profile, p, p.sigma)?;
    art.write(
        "gn_ratios.dat",
        two_columns(ratios.iter().enumerate().map(|(i, r)| (i as f64, *r))).as_bytes(),
    )?;
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    art.record("gn_max_ratio", fmt_sig15(worst));
    art.record("gn_ratio_at_profile", fmt_sig15(at_q.ratio()));
    art.record("gn_constant", fmt_sig15(at_q.constant));
    art.record("gn_closed_form_constant", fmt_sig15(at_q.closed_form_constant));
    art.record("gn_literal_constant", fmt_sig15(at_q.literal_constant));
    println!(
        "regime {regime:?}; interpolation ratio max {worst:.6} over {GN_SAMPLES} fields; Pohozaev residual {:.3e}",
        rec.pohozaev.max_applicable()
    );
    Ok(())
}
