//! The five front-end commands as library calls. Each returns the text to
//! write plus any side files; the caller owns the thread pool and I/O.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{check_beta, num, to_json_string, RunConfig};
use crate::error::{Error, Result};
use crate::oracle::{born_rt, compare, richardson_rt, MIN_MU};
use crate::perturbation::PerturbationProfile;
use crate::resonance::{self, breit_wigner, fano, gamma0, perturbative_coeffs, solve_dispersion_root, MIN_WIDTH};
use crate::scattering::{solve_scattering_guarded, ROUTE_TOL};
use crate::spectral::SpectralParams;
use crate::trapped::{build_trapped_mode, find_candidate_beta, fmt17, refine_trapped_point, REALITY_TOL};

pub const SWEEP_HEADER: [&str; 13] = [
    "epsilon",
    "beta",
    "nu",
    "delta",
    "re_R",
    "im_R",
    "re_T",
    "im_T",
    "abs_R2",
    "abs_T2",
    "bw_pred",
    "fano_pred",
    "unitarity_defect",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Scatter,
    Sweep,
    Resonance,
    Trapped,
    Validate,
}

#[derive(Clone, Debug)]
pub struct Output {
    /// JSON report or CSV table.
    pub body: String,
    /// Side files (effective config, mode profiles).
    pub files: Vec<(PathBuf, String)>,
    /// False when a consistency check failed; the report is still written.
    pub passed: bool,
}

/// Runs one command. `out` only determines where side files go.
pub fn execute(command: Command, cfg: &RunConfig, out: Option<&Path>) -> Result<Output> {
    match command {
        Command::Scatter => scatter(cfg),
        Command::Sweep => sweep(cfg, out),
        Command::Resonance => resonance_report(cfg),
        Command::Trapped => trapped_report(cfg, out),
        Command::Validate => validate(cfg),
    }
}

fn cnum(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    out.with_file_name(name)
}

/// `a_1 = γ_0 Re f̃_0(0)` at `|β|`.
fn leading_root(beta: f64, profile: &PerturbationProfile) -> Result<f64> {
    Ok(gamma0(beta.abs()) * profile.fourier_transform(0, 0.0)?.re)
}

/// `count` geometric frequencies from `max(a_1/20, min_mu/ε)` to
/// `0.95 κ/ε`, spanning the single-mode window.
pub fn window_grid(epsilon: f64, beta: f64, a1: f64, min_mu: f64, count: usize) -> Vec<f64> {
    let kappa = (1.0 - 2.0 * beta.abs()).sqrt();
    let lo = (0.05 * a1).max(min_mu / epsilon);
    let hi = 0.95 * kappa / epsilon;
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).collect(),
    }
}

pub fn scatter(cfg: &RunConfig) -> Result<Output> {
    cfg.validate_common(true)?;
    let profile = cfg.profile.build()?;
    let params = SpectralParams::new(cfg.epsilon, cfg.beta, cfg.nu)?;
    let sol = solve_scattering_guarded(&params, &profile, &cfg.discretization, cfg.tolerances.resonance_guard)?;
    let defect = sol.unitarity_defect();
    let report = json!({
        "epsilon": num(cfg.epsilon),
        "beta": num(cfg.beta),
        "nu": num(cfg.nu),
        "R_re": num(sol.r.re),
        "R_im": num(sol.r.im),
        "T_re": num(sol.t.re),
        "T_im": num(sol.t.im),
        "unitarity_defect": num(defect),
        "effective_config": cfg.effective(),
    });
    Ok(Output { body: to_json_string(&report), files: Vec::new(), passed: defect < cfg.tolerances.unitarity })
}

struct BetaLine {
    beta: f64,
    nu0: Option<f64>,
    width: f64,
    q: f64,
}

fn beta_line(cfg: &RunConfig, profile: &PerturbationProfile, beta: f64) -> Result<BetaLine> {
    // the line-shape data live in the β > 0 frame, which for β < 0 is the
    // mirrored profile; only symmetric profiles are their own mirror
    let usable = beta > 0.0 || profile.is_symmetric();
    let mut line = BetaLine { beta, nu0: None, width: f64::NAN, q: f64::NAN };
    if usable {
        let c = perturbative_coeffs(beta.abs(), profile, &cfg.discretization)?;
        line.width = c.width;
        line.q = c.q;
        match solve_dispersion_root(cfg.epsilon, beta.abs(), profile, &cfg.discretization) {
            Ok(nu0) => line.nu0 = Some(nu0.re),
            Err(e) if cfg.sweep.relative_to_resonance => return Err(e),
            Err(_) => {}
        }
    } else if cfg.sweep.relative_to_resonance {
        return Err(Error::Config(format!(
            "sweep.relative_to_resonance: no resonance reference at beta = {beta} for a non-symmetric profile"
        )));
    }
    Ok(line)
}

fn sweep_row(cfg: &RunConfig, profile: &PerturbationProfile, line: &BetaLine, offset: f64) -> Result<[f64; 13]> {
    let eps = cfg.epsilon;
    let nu = if cfg.sweep.relative_to_resonance { line.nu0.unwrap_or(f64::NAN) + offset } else { offset };
    let delta = line.nu0.map_or(f64::NAN, |n0| nu - n0);
    let pred = |f: &dyn Fn() -> Result<f64>| if delta.is_finite() { f().unwrap_or(f64::NAN) } else { f64::NAN };
    let bw = pred(&|| breit_wigner(delta, eps, line.width));
    let fa = pred(&|| fano(delta, eps, line.width, line.q));
    let params = SpectralParams::new(eps, line.beta, nu)?;
    let mut row = [eps, line.beta, nu, delta, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, bw, fa, f64::NAN];
    match solve_scattering_guarded(&params, profile, &cfg.discretization, cfg.tolerances.resonance_guard) {
        Ok(sol) => {
            row[4] = sol.r.re;
            row[5] = sol.r.im;
            row[6] = sol.t.re;
            row[7] = sol.t.im;
            row[8] = sol.r.norm_sqr();
            row[9] = sol.t.norm_sqr();
            row[12] = sol.unitarity_defect();
        }
        Err(Error::NearResonance { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(row)
}

/// The sweep table as CSV text, rows ordered β-outer, ν-inner.
pub fn sweep_csv(cfg: &RunConfig) -> Result<String> {
    cfg.validate_common(false)?;
    let betas = cfg.sweep.beta.points("sweep.beta")?;
    for (i, b) in betas.iter().enumerate() {
        check_beta(&format!("sweep.beta[{i}]"), *b)?;
    }
    let offsets = cfg.sweep.nu.points("sweep.nu")?;
    let profile = cfg.profile.build()?;
    let lines: Vec<BetaLine> = betas.par_iter().map(|&b| beta_line(cfg, &profile, b)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64)> = (0..lines.len()).flat_map(|i| offsets.iter().map(move |&o| (i, o))).collect();
    let rows: Vec<[f64; 13]> =
        jobs.par_iter().map(|&(i, o)| sweep_row(cfg, &profile, &lines[i], o)).collect::<Result<_>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for row in &rows {
        w.write_record(row.iter().map(|v| fmt17(*v))).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn sweep(cfg: &RunConfig, out: Option<&Path>) -> Result<Output> {
    let body = sweep_csv(cfg)?;
    let files = out.map(|o| (sidecar(o, ".config.json"), to_json_string(&cfg.effective()))).into_iter().collect();
    Ok(Output { body, files, passed: true })
}

pub fn resonance_report(cfg: &RunConfig) -> Result<Output> {
    cfg.validate_common(false)?;
    if cfg.beta < 0.0 {
        return Err(Error::Config("beta: resonance analysis runs in the beta > 0 frame; give |beta|".into()));
    }
    let profile = cfg.profile.build()?;
    let disc = &cfg.discretization;
    let data = resonance::analyze(cfg.epsilon, cfg.beta, &profile, disc)?;
    let c = &data.coeffs;
    let residual = resonance::dispersion_residual(
        &SpectralParams::complex(cfg.epsilon, cfg.beta, data.nu0)?,
        &profile,
        disc,
    )?
    .norm();
    // a nonzero width forces the root off the real axis
    let width_ok = c.width < MIN_WIDTH || data.nu0.im > 0.0;
    let report = json!({
        "epsilon": num(cfg.epsilon),
        "beta": num(cfg.beta),
        "nu0": cnum(data.nu0),
        "dispersion_residual": num(residual),
        "a1": num(c.a1),
        "a2": cnum(c.a2),
        "im_a2_closed_form": num(c.im_a2),
        "width": num(c.width),
        "q": num(c.q),
        "kappa": num(c.kappa),
        "gamma0": num(c.gamma0),
        "f1_at_kappa": [cnum(c.d_plus), cnum(c.d_minus)],
        "nu_a": data.nu_a.map_or(Value::Null, num),
        "nu_b": data.nu_b.map_or(Value::Null, num),
        "im_nu0_positive": data.nu0.im > 0.0,
        "checks": {
            "width_implies_complex_root": width_ok,
            "im_a2_agreement": num((c.a2.im - c.im_a2).abs()),
        },
        "effective_config": cfg.effective(),
    });
    Ok(Output { body: to_json_string(&report), files: Vec::new(), passed: width_ok })
}

pub fn trapped_report(cfg: &RunConfig, out: Option<&Path>) -> Result<Output> {
    cfg.validate_common(false)?;
    let profile = cfg.profile.build()?;
    let disc = &cfg.discretization;
    let candidates = find_candidate_beta(&profile)?;
    let chosen: Vec<(usize, f64)> = match cfg.trapped.branch {
        Some(k) => match candidates.get(k) {
            Some(&b) => vec![(k, b)],
            None => {
                return Err(Error::Config(format!(
                    "trapped.branch: {k} out of range ({} candidates)",
                    candidates.len()
                )))
            }
        },
        None => candidates.iter().copied().enumerate().collect(),
    };
    let margin = cfg.trapped.mode_margin;
    let n = cfg.trapped.mode_samples;
    if n < 2 {
        return Err(Error::Config("trapped.mode_samples: must be at least 2".into()));
    }
    let extent = profile.support_halfwidth() + margin;
    let xs: Vec<f64> = (0..n).map(|k| -extent + 2.0 * extent * k as f64 / (n - 1) as f64).collect();
    let csv_base = cfg.trapped.mode_csv.clone().or_else(|| out.map(|o| sidecar(o, ".mode.csv")));

    let results: Vec<_> = chosen
        .par_iter()
        .map(|&(k, b00)| -> Result<_> {
            let point = refine_trapped_point(cfg.epsilon, b00, &profile, disc)?;
            let mode = build_trapped_mode(&point, &profile, disc)?;
            let mut buf = Vec::new();
            mode.write_csv(&mut buf, &xs)?;
            Ok((k, mode, String::from_utf8(buf).expect("csv is utf-8")))
        })
        .collect::<Result<_>>()?;

    let mut passed = true;
    let mut branches = Vec::new();
    let mut files = Vec::new();
    for (k, mode, text) in results {
        let p = &mode.point;
        let ok = mode.decay_residual < 1e-8 && p.ell.im.abs() < REALITY_TOL && p.q_value.im.abs() < REALITY_TOL;
        passed &= ok;
        let path = csv_base.as_ref().map(|base| {
            if chosen.len() == 1 {
                base.clone()
            } else {
                sidecar(base, &format!(".branch{k}"))
            }
        });
        if let Some(path) = &path {
            files.push((path.clone(), text));
        }
        branches.push(json!({
            "branch": k,
            "point": serde_json::to_value(p).expect("point serializes"),
            "decay_residual": num(mode.decay_residual),
            "helmholtz_residual": num(mode.helmholtz_residual),
            "checks_pass": ok,
            "mode_csv": path.map(|p| p.display().to_string()),
        }));
    }
    let report = json!({
        "epsilon": num(cfg.epsilon),
        "candidates": candidates.iter().map(|b| num(*b)).collect::<Vec<_>>(),
        "branches": branches,
        "effective_config": cfg.effective(),
    });
    Ok(Output { body: to_json_string(&report), files, passed })
}

struct ValidationPoint {
    nu: f64,
    main: Option<(Complex64, Complex64)>,
    oracle: Option<(Complex64, Complex64)>,
    unitarity: f64,
    route: f64,
    symmetry: f64,
    born: f64,
}

fn validation_point(cfg: &RunConfig, profile: &PerturbationProfile, nu: f64) -> Result<ValidationPoint> {
    let params = SpectralParams::new(cfg.epsilon, cfg.beta, nu)?;
    let mut pt = ValidationPoint {
        nu,
        main: None,
        oracle: None,
        unitarity: f64::NAN,
        route: f64::NAN,
        symmetry: f64::NAN,
        born: f64::NAN,
    };
    let sol = match solve_scattering_guarded(&params, profile, &cfg.discretization, cfg.tolerances.resonance_guard) {
        Ok(s) => s,
        Err(Error::NearResonance { .. }) => return Ok(pt),
        Err(e) => return Err(e),
    };
    pt.main = Some((sol.r, sol.t));
    pt.unitarity = sol.unitarity_defect();
    pt.route = (sol.r - sol.r_closed).norm().max((sol.t - sol.t_closed).norm());
    if profile.is_symmetric() {
        let f = &sol.functionals;
        pt.symmetry = (f.q - f.r_plus).norm().max((f.r_plus - f.r_minus).norm());
    }
    if let Ok(b) = born_rt(&params, profile) {
        pt.born = (b.r - sol.r).norm();
    }
    let (_, _, r, t) = richardson_rt(&params, profile, &cfg.oracle)?;
    pt.oracle = Some((r, t));
    Ok(pt)
}

fn max_finite(v: impl Iterator<Item = f64>) -> f64 {
    v.filter(|x| x.is_finite()).fold(0.0, f64::max)
}

/// Main solver against the extrapolated oracle plus the structural checks
/// on a frequency grid.
pub fn validate(cfg: &RunConfig) -> Result<Output> {
    cfg.validate_common(false)?;
    let profile = cfg.profile.build()?;
    let nus = match &cfg.validate.nu {
        Some(axis) => axis.points("validate.nu")?,
        None => {
            if cfg.validate.points == 0 {
                return Err(Error::Config("validate.points: must be positive".into()));
            }
            let a1 = leading_root(cfg.beta, &profile)?;
            window_grid(cfg.epsilon, cfg.beta, a1, 2.0 * MIN_MU, cfg.validate.points)
        }
    };
    let pts: Vec<ValidationPoint> =
        nus.par_iter().map(|&nu| validation_point(cfg, &profile, nu)).collect::<Result<_>>()?;
    let solved: Vec<&ValidationPoint> = pts.iter().filter(|p| p.main.is_some()).collect();
    let skipped: Vec<Value> = pts.iter().filter(|p| p.main.is_none()).map(|p| num(p.nu)).collect();
    let main_r: Vec<Complex64> = solved.iter().map(|p| p.main.unwrap().0).collect();
    let main_t: Vec<Complex64> = solved.iter().map(|p| p.main.unwrap().1).collect();
    let orc_r: Vec<Complex64> = solved.iter().map(|p| p.oracle.unwrap().0).collect();
    let orc_t: Vec<Complex64> = solved.iter().map(|p| p.oracle.unwrap().1).collect();
    let tol = cfg.validate.tolerance;
    let dr = compare(&orc_r, &main_r, tol)?;
    let dt = compare(&orc_t, &main_t, tol)?;

    let unitarity = max_finite(solved.iter().map(|p| p.unitarity));
    let route = max_finite(solved.iter().map(|p| p.route));
    let symmetry = max_finite(solved.iter().map(|p| p.symmetry));
    let checks = [
        ("oracle_R", dr.pass, num(dr.max), tol),
        ("oracle_T", dt.pass, num(dt.max), tol),
        ("unitarity", unitarity < cfg.tolerances.unitarity, num(unitarity), cfg.tolerances.unitarity),
        ("route_agreement", route < ROUTE_TOL, num(route), ROUTE_TOL),
        ("symmetry_q_equals_r", !profile.is_symmetric() || symmetry < cfg.tolerances.symmetry, num(symmetry), cfg.tolerances.symmetry),
        ("enough_points", !solved.is_empty(), json!(solved.len()), 1.0),
    ];
    let passed = checks.iter().all(|c| c.1);
    let table: Vec<Value> = checks
        .iter()
        .map(|(name, pass, value, tol)| json!({"check": name, "pass": pass, "value": value, "tolerance": num(*tol)}))
        .collect();
    let report = json!({
        "epsilon": num(cfg.epsilon),
        "beta": num(cfg.beta),
        "nu": nus.iter().map(|v| num(*v)).collect::<Vec<_>>(),
        "skipped_near_resonance": skipped,
        "checks": table,
        "oracle_rms": {"R": num(dr.rms), "T": num(dt.rms)},
        "born_max_deviation": num(max_finite(solved.iter().map(|p| p.born))),
        "passed": passed,
        "effective_config": cfg.effective(),
    });
    Ok(Output { body: to_json_string(&report), files: Vec::new(), passed })
}
