//! Command implementations. Each returns a JSON result and optional artifacts.

use std::fmt::Write as _;

use dipole_gs::asymptotics::{self, cutoff_energy_terms, Cutoff, Regime};
use dipole_gs::conditions::{
    self, check_existence_bounded, check_existence_dipoles, check_existence_rn, Dipole, Level, Levels, Status,
    Tolerances, Verdict,
};
use dipole_gs::one_pole::{self, GroundStateProfile};
use dipole_gs::polarization::{dipole_level_monotonicity, polarization_identities, polarize, MirrorGrid};
use dipole_gs::profile_io;
use dipole_gs::profiles::{AngularShape, Profile, SyntheticProfile};
use dipole_gs::quadform::{self, positivity_probe, Positivity, TwoPoleOptions};
use dipole_gs::special::{hardy_floor, sobolev_closed_form};
use dipole_gs::sphere_spectra::{self, Basis};
use dipole_gs::{AngularCoefficient, Error, Result};
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crate::cache;
use crate::config::{ProfileSource, RunConfig, Violation};
use crate::Command;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Computed,
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Computed => "COMPUTED",
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Computed | Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Inconclusive => 3,
        }
    }

    fn from_status(s: Status) -> Outcome {
        match s {
            Status::Pass => Outcome::Pass,
            Status::Fail => Outcome::Fail,
            Status::Inconclusive => Outcome::Inconclusive,
        }
    }

    fn check(ok: bool) -> Outcome {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

pub struct Output {
    pub outcome: Outcome,
    pub result: Value,
    pub csv: Option<String>,
    pub profile: Option<String>,
}

impl Output {
    fn computed(result: Value) -> Output {
        Output { outcome: Outcome::Computed, result, csv: None, profile: None }
    }
}

fn scalar(value: f64, error: f64) -> Value {
    json!({ "value": value, "error": error })
}

fn schema(path: &str, message: &str) -> Error {
    Violation { path: path.into(), line: 0, col: 0, message: message.into() }.into_error()
}

/// Coefficient for single-pole commands: `h`, else the distinguished pole.
fn single_h(cfg: &RunConfig) -> Result<AngularCoefficient> {
    if let Some(h) = &cfg.h {
        return Ok(h.clone());
    }
    cfg.poles
        .get(cfg.pole_index())
        .map(|p| p.h.clone())
        .ok_or_else(|| schema("h", "command needs `h` or at least one pole"))
}

fn mu1_with_error(h: &AngularCoefficient, n: usize) -> Result<(sphere_spectra::SphereSpectrum, f64)> {
    let s = sphere_spectra::mu1_auto(h, n)?;
    let err = match &s.basis {
        Basis::Zonal { modes, .. } => {
            let coarse = sphere_spectra::mu1_spectrum(h, n, (modes / 2).max(2))?;
            (coarse.mu1 - s.mu1).abs()
        }
        Basis::Harmonic { .. } => sphere_spectra::harmonic_refinement_change(h)?,
    };
    Ok((s, err))
}

fn tolerances(cfg: &RunConfig) -> Tolerances {
    Tolerances { algebraic: cfg.tolerances.algebraic, numeric_factor: cfg.tolerances.numeric_factor }
}

pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Output> {
    let n = cfg.n;
    match cmd {
        Command::Mu1 => {
            let h = single_h(cfg)?;
            let (s, err) = mu1_with_error(&h, n)?;
            Ok(Output::computed(json!({
                "mu1": scalar(s.mu1, err),
                "spectral_gap": s.gap,
                "hardy_floor": -hardy_floor(n),
                "basis": s.basis,
            })))
        }
        Command::Sigma => {
            let h = single_h(cfg)?;
            let (s, err) = mu1_with_error(&h, n)?;
            let sigma = sphere_spectra::sigma_of(s.mu1, n)?;
            let gamma = 2.0 * sigma + n as f64 - 2.0;
            Ok(Output::computed(json!({
                "mu1": scalar(s.mu1, err),
                "sigma": scalar(sigma, err / gamma),
                "gamma": scalar(gamma, 2.0 * err / gamma),
                "regime": Regime::of(sigma, n),
            })))
        }
        Command::Hardy => {
            let hc = sphere_spectra::hardy_dipole_constant(n, cfg.tolerances.hardy)?;
            let ok = hc.residual < hc.tol && hc.value < 4.0 / ((n as f64 - 2.0).powi(2)) && hc.trial_lower_bound <= hc.value;
            let mut out = Output::computed(json!({
                "lambda_n": scalar(hc.value, hc.tol),
                "critical_strength": hc.critical_strength,
                "residual": hc.residual,
                "tol": hc.tol,
                "scan_range": hc.scan_range,
                "monotone": hc.monotone,
                "trial_lower_bound": hc.trial_lower_bound,
                "upper_limit": 4.0 / ((n as f64 - 2.0).powi(2)),
                "consistent": ok,
            }));
            if !ok {
                out.outcome = Outcome::Inconclusive;
            }
            Ok(out)
        }
        Command::SolveOnePole => {
            let h = single_h(cfg)?;
            let p = cache::solve(&h, n, &cfg.discretization)?;
            let asy = one_pole::profile_asymptotics(&p).ok();
            let s = one_pole::sobolev_constant(n);
            let result = json!({
                "level": scalar(p.level, p.disc_error),
                "attained": p.attained,
                "el_residual": p.el_residual,
                "el_tolerance": 1e-6,
                "mass_fraction": p.mass_fraction,
                "mu1": p.mu1,
                "sigma": p.sigma,
                "c0": p.c0,
                "c_inf": p.c_inf,
                "envelope": p.envelope,
                "competitor_level": p.competitor_level,
                "iterations": p.iterations,
                "asymptotics": asy,
                "slope_tolerance": 0.01,
                "sobolev": s,
                "below_sobolev": scalar(s - p.level, p.disc_error),
            });
            Ok(Output {
                outcome: Outcome::Computed,
                result,
                csv: Some(profile_io::traces_csv(&p)),
                profile: Some(profile_io::write_profile(&p)),
            })
        }
        Command::Sobolev => {
            let s = one_pole::sobolev_constant(n);
            let c = sobolev_closed_form(n);
            Ok(Output::computed(json!({
                "sobolev": scalar(s, (s - c).abs()),
                "closed_form": c,
            })))
        }
        Command::Interaction => interaction(cfg),
        Command::UpperBound => upper_bound(cfg),
        Command::TwoPole => two_pole(cfg),
        Command::CheckRn => {
            let sc = cfg.singular_configuration();
            let k = cfg.pole_index();
            let levels = levels(cfg, true)?;
            let pos = probe(cfg);
            let v = check_existence_rn(&sc, k, &levels, pos.as_ref(), one_pole::sobolev_constant(n), &tolerances(cfg))?;
            Ok(verdict_output(v, &levels, pos.as_ref()))
        }
        Command::CheckDipoles => {
            let mut ds = Vec::new();
            for (i, p) in cfg.poles.iter().enumerate() {
                match &p.h {
                    AngularCoefficient::Dipole { lambda, d } => ds.push(Dipole { lambda: *lambda, d: d.clone(), a: p.a.clone() }),
                    _ => return Err(schema(&format!("poles[{i}].h"), "check-dipoles needs dipole coefficients")),
                }
            }
            let hc = sphere_spectra::hardy_dipole_constant(n, cfg.tolerances.hardy)?;
            let pos = probe(cfg);
            let k = cfg.pole.map(|p| p - 1);
            let v = check_existence_dipoles(n, &ds, k, hc.value, pos.as_ref(), &tolerances(cfg))?;
            let mut out = verdict_output(v, &Levels { singles: vec![], sum: None }, pos.as_ref());
            out.result["lambda_n"] = scalar(hc.value, hc.tol);
            Ok(out)
        }
        Command::CheckBounded => {
            let sc = cfg.singular_configuration();
            let levels = levels(cfg, false)?;
            let pos = probe(cfg);
            let v = check_existence_bounded(&sc, cfg.pole_index(), &levels, pos.as_ref(), &tolerances(cfg))?;
            Ok(verdict_output(v, &levels, pos.as_ref()))
        }
        Command::PolarizeTest => polarize_test(cfg),
        Command::Monotonicity => monotonicity(cfg),
    }
}

fn probe(cfg: &RunConfig) -> Option<Positivity> {
    positivity_probe(&cfg.singular_configuration(), &cfg.mesh, cfg.positivity.refinements).ok()
}

/// Solver levels of every pole and, when it is needed, of the summed coefficient.
fn levels(cfg: &RunConfig, with_sum: bool) -> Result<Levels> {
    let n = cfg.n;
    let mut singles = Vec::new();
    for p in &cfg.poles {
        let s = cache::solve(&p.h, n, &cfg.discretization)?;
        singles.push(Some(Level { value: s.level, error: s.disc_error }));
    }
    let mut sum = None;
    if with_sum && cfg.poles.len() > 1 {
        let hs: Vec<AngularCoefficient> = cfg.poles.iter().map(|p| p.h.clone()).collect();
        let total = AngularCoefficient::sum(&hs)?;
        let k = cfg.pole_index();
        let trivial = conditions::rotation_equivalent(&total, &cfg.poles[k].h)
            || matches!(total.collapsed(), AngularCoefficient::Constant { c, .. } if c == 0.0);
        if !trivial {
            // a sum below the Hardy floor has no level; the verdict then reports it missing
            if let Ok(s) = cache::solve(&total, n, &cfg.discretization) {
                sum = Some(Level { value: s.level, error: s.disc_error });
            }
        }
    }
    Ok(Levels { singles, sum })
}

fn verdict_output(v: Verdict, levels: &Levels, pos: Option<&Positivity>) -> Output {
    let outcome = Outcome::from_status(v.overall);
    Output {
        outcome,
        result: json!({
            "verdict": v,
            "levels": levels,
            "positivity": pos,
        }),
        csv: None,
        profile: None,
    }
}

fn interaction(cfg: &RunConfig) -> Result<Output> {
    let n = cfg.n;
    let spec = cfg.interaction.as_ref().ok_or_else(|| schema("interaction", "missing [interaction] table"))?;
    let solved;
    let synthetic;
    let p: &dyn Profile = match &spec.profile {
        ProfileSource::Solved { h } => {
            solved = cache::solve(h, n, &cfg.discretization)?;
            &solved
        }
        ProfileSource::Envelope { sigma } => {
            synthetic = SyntheticProfile::envelope(n, *sigma, AngularShape::Constant);
            &synthetic
        }
        ProfileSource::EnvelopeOf { h } => {
            let s = sphere_spectra::mu1_auto(h, n)?;
            let sigma = sphere_spectra::sigma_of(s.mu1, n)?;
            synthetic = SyntheticProfile::envelope(n, sigma, AngularShape::Spectrum(s));
            &synthetic
        }
        ProfileSource::AubinTalenti => {
            synthetic = SyntheticProfile::aubin_talenti(n);
            &synthetic
        }
    };
    let s = asymptotics::interaction_series_fit(&spec.k, &spec.a, p, &cfg.mu)?;
    let mut csv = String::from("mu,I,model_value,residual\n");
    for i in 0..s.mu.len() {
        let _ = writeln!(csv, "{:?},{:?},{:?},{:?}", s.mu[i], s.values[i], s.model_values[i], s.residuals[i]);
    }
    let inside = match (s.regime, s.bracket, s.log_rate) {
        (Regime::Log, Some((lo, hi)), Some(r)) => Some(lo <= r && r <= hi),
        _ => None,
    };
    let max_err = s.errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(Output {
        outcome: Outcome::Computed,
        result: json!({
            "series": s,
            "quadrature_error": max_err,
            "deviation_tolerance": 0.02,
            "log_rate_inside_bracket": inside,
        }),
        csv: Some(csv),
        profile: None,
    })
}

fn upper_bound(cfg: &RunConfig) -> Result<Output> {
    let n = cfg.n;
    let sc = cfg.singular_configuration();
    let j = cfg.pole_index();
    let hj = &sc.poles.get(j).ok_or_else(|| schema("poles", "command needs poles"))?.h;
    let p: GroundStateProfile = cache::solve(hj, n, &cfg.discretization)?;
    if sc.domain.is_bounded() {
        let cut = cfg.cutoff.as_ref().ok_or_else(|| schema("cutoff", "bounded domains need a [cutoff] table"))?;
        let r = cutoff_energy_terms(&sc, j, Cutoff { inner: cut.inner, outer: cut.outer }, &p, &cfg.mu, cut.eps)?;
        let margin = p.level.min(r.single_level) - r.best_bound;
        let tol = cfg.tolerances.numeric_factor * p.disc_error;
        let mut csv = String::from("mu,bound,whole_space_bound,gradient_error,own_error,critical_error\n");
        for q in &r.points {
            let _ = writeln!(
                csv,
                "{:?},{:?},{:?},{:?},{:?},{:?}",
                q.mu, q.bound, q.whole_space_bound, q.gradient_error, q.own_error, q.critical_error
            );
        }
        return Ok(Output {
            outcome: if margin > tol { Outcome::Pass } else if margin < -tol { Outcome::Fail } else { Outcome::Inconclusive },
            result: json!({
                "cutoff": r,
                "single_level": scalar(p.level, p.disc_error),
                "margin": scalar(margin, tol),
            }),
            csv: Some(csv),
            profile: None,
        });
    }
    let ub = quadform::multi_pole_upper_bound(&sc, j, &p, &cfg.mu)?;
    let margin = ub.single_level - ub.best;
    let tol = cfg.tolerances.numeric_factor * ub.error;
    let mut csv = String::from("mu,quotient,quotient_error,cross_sum\n");
    for i in 0..ub.mu.len() {
        let cross: f64 = ub.cross[i].iter().sum();
        let _ = writeln!(csv, "{:?},{:?},{:?},{:?}", ub.mu[i], ub.quotient[i], ub.quotient_error[i], cross);
    }
    let leading_gap = match (ub.fitted_leading, ub.predicted_leading) {
        (Some(f), Some(q)) if q != 0.0 => Some((f - q).abs() / q.abs()),
        _ => None,
    };
    Ok(Output {
        outcome: if margin > tol { Outcome::Pass } else if margin < -tol { Outcome::Fail } else { Outcome::Inconclusive },
        result: json!({
            "upper_bound": ub,
            "margin": scalar(margin, tol),
            "leading_relative_gap": leading_gap,
            "leading_tolerance": 0.05,
        }),
        csv: Some(csv),
        profile: None,
    })
}

fn two_pole(cfg: &RunConfig) -> Result<Output> {
    let n = cfg.n;
    let sc = cfg.singular_configuration();
    let seed = cfg.two_pole.seed_pole.unwrap_or(sc.poles.len()).saturating_sub(1);
    let hs = &sc.poles.get(seed).ok_or_else(|| schema("poles", "command needs poles"))?.h;
    let p = cache::solve(hs, n, &cfg.discretization)?;
    let opts = TwoPoleOptions {
        mesh: cfg.mesh.clone(),
        refinements: cfg.two_pole.refinements,
        max_iter: cfg.two_pole.max_iter,
        tol: cfg.two_pole.tol,
        seed_pole: seed,
    };
    let r = quadform::two_pole_axisymmetric_minimize(&sc, &p, &opts)?;
    Ok(Output::computed(json!({
        "level": scalar(r.level, r.mesh_error + r.truncation_sensitivity),
        "result": r,
        "seed_level": scalar(p.level, p.disc_error),
    })))
}

fn polarize_test(cfg: &RunConfig) -> Result<Output> {
    let n = cfg.n;
    let ps = &cfg.polarization;
    let d = ps.d.clone().unwrap_or_else(|| {
        let mut e = vec![0.0; n];
        e[n - 1] = 1.0;
        e
    });
    let base = MirrorGrid::new(n, d, ps.spacing, ps.half_width, ps.transverse)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ps.seed);
    let mut worst = [0.0f64; 3];
    let mut min_gain = f64::INFINITY;
    let mut min_half = f64::INFINITY;
    let mut max_quot = f64::NEG_INFINITY;
    let mut max_nodal = f64::NEG_INFINITY;
    let mut idempotent = true;
    let mut continuum = true;
    for _ in 0..ps.fields {
        let mut g = base.clone();
        for v in g.values.iter_mut() {
            *v = rng.random::<f64>();
        }
        let r = polarization_identities(&g, ps.lambda)?;
        worst[0] = worst[0].max(r.critical_norm_gap);
        worst[1] = worst[1].max(r.l2_norm_gap);
        match r.gradient_gap {
            Some(gap) => worst[2] = worst[2].max(gap),
            None => continuum = false,
        }
        min_gain = min_gain.min(r.dipole_gain);
        min_half = min_half.min(r.half_space);
        max_quot = max_quot.max(r.quotient_after - r.quotient_before);
        max_nodal = max_nodal.max(r.nodal_gradient_change);
        let once = polarize(&g)?;
        idempotent &= polarize(&once)?.values == once.values;
    }
    let ok = worst.iter().all(|w| *w <= 1e-12) && min_gain >= -1e-12 && min_half >= -1e-12 && max_quot <= 1e-10 && max_nodal <= 1e-12 && idempotent;
    Ok(Output {
        outcome: Outcome::check(ok),
        result: json!({
            "fields": ps.fields,
            "nodes": base.len(),
            "critical_norm_gap": scalar(worst[0], 1e-12),
            "l2_norm_gap": scalar(worst[1], 1e-12),
            "gradient_gap": if continuum { scalar(worst[2], 1e-12) } else { Value::Null },
            "min_dipole_gain": scalar(min_gain, 1e-12),
            "min_half_space": scalar(min_half, 1e-12),
            "max_quotient_increase": scalar(max_quot, 1e-10),
            "max_nodal_gradient_change": scalar(max_nodal, 1e-12),
            "idempotent": idempotent,
        }),
        csv: None,
        profile: None,
    })
}

fn monotonicity(cfg: &RunConfig) -> Result<Output> {
    let n = cfg.n;
    let hc = sphere_spectra::hardy_dipole_constant(n, cfg.tolerances.hardy)?;
    let lambdas: Vec<f64> = cfg.monotonicity.fractions.iter().map(|f| f / hc.value).collect();
    let r = dipole_level_monotonicity(&lambdas, n, hc.value, &cfg.discretization)?;
    let limit_ok = r
        .small_deficits
        .last()
        .zip(r.small_errors.last())
        .map(|(d, e)| d.abs() <= cfg.tolerances.numeric_factor * e.max(1e-12))
        .unwrap_or(false);
    let ok = r.nonincreasing && r.direction_gap <= 1e-6 && limit_ok;
    let mut csv = String::from("lambda,level,error\n");
    for i in 0..r.lambdas.len() {
        let _ = writeln!(csv, "{:?},{:?},{:?}", r.lambdas[i], r.levels[i], r.errors[i]);
    }
    Ok(Output {
        outcome: Outcome::check(ok),
        result: json!({
            "report": r,
            "lambda_n": scalar(hc.value, hc.tol),
            "direction_tolerance": 1e-6,
            "limit_within_error": limit_ok,
        }),
        csv: Some(csv),
        profile: None,
    })
}
