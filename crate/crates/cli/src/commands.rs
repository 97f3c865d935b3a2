//! One function per subcommand. Each writes its result file and the
//! resolved config next to it; numerical failures also leave a diagnostic
//! `<out>.error.json`.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use tmlab::fem::{fmt17, write_mesh, Field, Laplacian, Mesh};
use tmlab::functional::{Functional, Variant};
use tmlab::maximizer::{blowup_diagnostics, multi_start, seed_fields};
use tmlab::moser::{lower_bound_prediction, moser_constants, test_function};
use tmlab::potential::{concentration_level_with, GreenFunction, PotentialReport};
use tmlab::radial::{
    bubble_identities, expansion_error, fit_s0_asymptotics, shoot_radial, ShootOptions, RADIAL_CONSTANTS,
    S0_QUAD_TOL,
};
use tmlab::threshold::{estimate_threshold_in, monotonicity_scan_in, ThresholdContext};

use crate::config::{Command, RunConfig};
use crate::output::{sidecar, to_json, write_atomic, write_text, Cell, Csv};
use crate::CliError;

/// Executes `cfg` and returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    match execute(cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tmx {}: {e}", cfg.command.name());
            if e.exit_code() == 1 {
                let path = sidecar(&cfg.output, ".error.json");
                if let Err(w) = write_text(&path, &to_json(&diagnostic(cfg, &e))) {
                    eprintln!("tmx {}: {w}", cfg.command.name());
                }
            }
            e.exit_code()
        }
    }
}

fn diagnostic(cfg: &RunConfig, e: &CliError) -> serde_json::Value {
    let detail = match e {
        CliError::Numerical(tmlab::Error::Bracket { low, high, .. }) => json!({ "low": low, "high": high }),
        CliError::Numerical(tmlab::Error::SolverDivergence { iterations, final_residual, history }) => {
            json!({ "iterations": iterations, "final_residual": final_residual, "history": history })
        }
        _ => serde_json::Value::Null,
    };
    json!({
        "command": cfg.command.name(),
        "error": e.message(),
        "exit_code": e.exit_code(),
        "detail": detail,
        "config": cfg.entries().into_iter().collect::<std::collections::BTreeMap<_, _>>(),
    })
}

/// Runs the command, propagating failures instead of mapping them to exit
/// codes.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.params.validate()?;
    write_text(&sidecar(&cfg.output, ".config"), &cfg.to_text())?;
    match cfg.command {
        Command::Mesh => mesh(cfg),
        Command::Potential => potential(cfg),
        Command::Maximize => maximize(cfg),
        Command::Bubble => bubble(cfg),
        Command::Radial => radial(cfg),
        Command::Scan => scan(cfg),
        Command::Threshold => threshold(cfg),
        Command::Verify => verify(cfg),
    }
}

#[derive(Serialize)]
struct MeshStats {
    num_vertices: usize,
    num_triangles: usize,
    area: f64,
    max_edge_length: f64,
    min_angle_deg: f64,
}

impl MeshStats {
    fn of(m: &Mesh) -> Self {
        MeshStats {
            num_vertices: m.num_vertices(),
            num_triangles: m.num_triangles(),
            area: m.area(),
            max_edge_length: m.max_edge_length(),
            min_angle_deg: m.min_angle_deg(),
        }
    }
}

fn report_for(cfg: &RunConfig, lap: &Laplacian) -> Result<PotentialReport, CliError> {
    Ok(concentration_level_with(lap, cfg.robin)?)
}

fn mesh(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mesh.build()?;
    write_atomic(&cfg.output, |w| write_mesh(&m, w).map_err(std::io::Error::other))?;
    let s = MeshStats::of(&m);
    println!(
        "vertices {} triangles {} area {} h {} min angle {}",
        s.num_vertices,
        s.num_triangles,
        fmt17(s.area),
        fmt17(s.max_edge_length),
        fmt17(s.min_angle_deg)
    );
    Ok(())
}

fn potential(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mesh.build()?;
    let lap = Laplacian::new(&m)?;
    let report = report_for(cfg, &lap)?;
    write_text(&cfg.output, &to_json(&json!({ "mesh": MeshStats::of(&m), "report": report })))?;
    println!(
        "center ({}, {}) max radius {} S_delta {}",
        fmt17(report.harmonic_center[0]),
        fmt17(report.harmonic_center[1]),
        fmt17(report.max_radius),
        fmt17(report.concentration_level)
    );
    Ok(())
}

fn write_field(path: &Path, u: &Field) -> Result<(), CliError> {
    let mut s = String::with_capacity(24 * u.len());
    for &x in u.iter() {
        s.push_str(&fmt17(x));
        s.push('\n');
    }
    write_text(path, &s)
}

fn maximize(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mesh.build()?;
    let lap = Laplacian::new(&m)?;
    let report = report_for(cfg, &lap)?;
    let f = Functional::new(&lap, cfg.params)?;
    let seeds = seed_fields(&lap, &cfg.seeds, report.harmonic_center, cfg.rng_seed)?;
    let res = multi_start(&f, &seeds, &cfg.maximize_options())?;
    let best = &res.best;
    let blowup = blowup_diagnostics(&lap, best, &report).ok();
    let out = json!({
        "mesh": MeshStats::of(&m),
        "S_delta": report.concentration_level,
        "harmonic_center": report.harmonic_center,
        "result": best,
        "converged": best.converged(),
        "stagnated": best.stagnated(),
        "runs": res.runs,
        "blowup": blowup,
        "rng_seed": cfg.rng_seed,
    });
    write_text(&cfg.output, &to_json(&out))?;
    write_field(&sidecar(&cfg.output, ".field.txt"), &best.u)?;
    println!(
        "J {} residual {} peak {} seed {} termination {:?}",
        fmt17(best.J),
        fmt17(best.el_residual),
        fmt17(best.peak_value),
        best.seed_id,
        best.termination
    );
    if !best.converged() {
        return Err(CliError::Failed(format!(
            "best run did not converge ({:?}, residual {:.3e}); partial result written",
            best.termination, best.el_residual
        )));
    }
    Ok(())
}

fn bubble(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mesh.build()?;
    let lap = Laplacian::new(&m)?;
    let report = report_for(cfg, &lap)?;
    let center = cfg.center.unwrap_or(report.harmonic_center);
    let f = Functional::new(&lap, cfg.params)?;
    let mut csv = Csv::new(&["k", "epsilon", "C_sq", "prenorm_norm", "J", "lower_bound", "S_delta"]);
    for &k in &cfg.bubble_ks {
        let eps = (-k).exp();
        let tf = test_function(&lap, eps, center)?;
        let lb = lower_bound_prediction(&lap, eps, &cfg.params, &report)?;
        csv.row(vec![
            k.into(),
            eps.into(),
            tf.constants.C_sq.into(),
            tf.prenorm_norm.into(),
            f.evaluate(&tf.field).value.into(),
            lb.prediction.into(),
            report.concentration_level.into(),
        ]);
        write_field(&sidecar(&cfg.output, &format!(".k{k}.txt")), &tf.field)?;
    }
    write_text(&cfg.output, csv.text())?;
    print!("{}", csv.text());
    Ok(())
}

fn radial(cfg: &RunConfig) -> Result<(), CliError> {
    let e = match cfg.energy {
        Some(e) => e,
        None => {
            let m = cfg.mesh.build()?;
            let lap = Laplacian::new(&m)?;
            let r = report_for(cfg, &lap)?;
            tmlab::radial::default_energy(cfg.gamma, r.concentration_level - r.area)
        }
    };
    let prof = shoot_radial(cfg.gamma, e, &cfg.params, cfg.delta, &ShootOptions::default())?;
    let stats = if prof.sign_change {
        eprintln!("tmx radial: V changes sign; expansion columns left as NaN");
        None
    } else {
        Some(expansion_error(&prof)?)
    };
    let mut csv = Csv::new(&["r", "t", "V", "V_expansion", "error"]);
    for i in 0..prof.grid.len() {
        let (z, err) = stats.as_ref().map_or((f64::NAN, f64::NAN), |s| (s.expansion[i], s.error[i]));
        csv.row(vec![prof.grid[i].into(), prof.t[i].into(), prof.V[i].into(), z.into(), err.into()]);
    }
    write_text(&cfg.output, csv.text())?;
    match stats {
        Some(s) => println!(
            "gamma {} E {} r_k {} sup error {} scaled {}",
            fmt17(cfg.gamma),
            fmt17(e),
            fmt17(prof.r_k),
            fmt17(s.raw_sup),
            fmt17(s.scaled_sup)
        ),
        None => println!("gamma {} E {} r_k {} sign change", fmt17(cfg.gamma), fmt17(e), fmt17(prof.r_k)),
    }
    Ok(())
}

fn scan(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mesh.build()?;
    let ctx = ThresholdContext::new(&m, &cfg.protocol())?;
    let table = monotonicity_scan_in(&ctx, cfg.params.p, &cfg.lambdas)?;
    let mut csv = Csv::new(&["lambda", "J_best", "margin", "peak_c", "attained", "inconclusive"]);
    for r in &table.rows {
        csv.row(vec![
            r.lambda.into(),
            r.J_best.into(),
            r.margin.into(),
            r.peak_c.into(),
            Cell::B(r.attained),
            Cell::B(r.inconclusive),
        ]);
    }
    write_text(&cfg.output, csv.text())?;
    print!("{}", csv.text());
    if !table.violations.is_empty() {
        eprintln!("tmx scan: monotonicity violated after reruns at rows {:?}", table.violations);
    }
    Ok(())
}

fn threshold(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mesh.build()?;
    let ctx = ThresholdContext::new(&m, &cfg.protocol())?;
    let est = estimate_threshold_in(&ctx, cfg.params.p, cfg.bracket, cfg.threshold_tol)?;
    let out = json!({
        "S_delta": ctx.report().concentration_level,
        "margin_min": ctx.margin_min(),
        "protocol": ctx.protocol(),
        "estimate": est,
    });
    write_text(&cfg.output, &to_json(&out))?;
    println!("lambda* in [{}, {}]", fmt17(est.bracket_low), fmt17(est.bracket_high));
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check { name, value, tolerance, pass: value <= tolerance }
}

/// Fast identity checks: bubble and `S₀` identities, the functional's first
/// variation, variant and evenness identities, Green symmetry and Moser
/// continuity on the configured mesh.
fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let mut checks = Vec::new();
    let b = bubble_identities(100.0, S0_QUAD_TOL)?;
    checks.push(check("bubble_pde_residual", b.phi_residual, 1e-10));
    checks.push(check("bubble_mass", b.mass_error, 1e-6));
    checks.push(check("s0_ode_residual", b.s0_residual, 1e-6));
    let fit = fit_s0_asymptotics(3f64.exp(), 5f64.exp(), 200, true)?;
    checks.push(check("s0_slope", (fit.a - RADIAL_CONSTANTS.A0 / (4.0 * PI)).abs(), 1e-2));
    checks.push(check("s0_intercept", (fit.b / RADIAL_CONSTANTS.B0 - 1.0).abs(), 2e-2));

    let m = cfg.mesh.build()?;
    let lap = Laplacian::new(&m)?;
    let params = cfg.params;
    let f = Functional::new(&lap, params)?;
    let u = Field::interpolate_dirichlet(&m, |x| 0.4 * (1.0 + 0.5 * (1.7 * x[0] + 0.3).sin() * (1.1 * x[1]).cos()));
    let mut fd_err = 0.0f64;
    for k in 1..=5 {
        let kf = k as f64;
        let phi = Field::interpolate_dirichlet(&m, |x| (kf * x[0] + (kf + 1.0) * x[1] + 0.2 * kf).sin());
        let h = 1e-5;
        let jp = f.evaluate(&u.axpy(h, &phi)).value;
        let jm = f.evaluate(&u.axpy(-h, &phi)).value;
        let fd = (jp - jm) / (2.0 * h);
        let an = f.directional_derivative(&u, &phi);
        fd_err = fd_err.max((fd - an).abs() / an.abs().max(1e-300));
    }
    checks.push(check("gradient_fd_relative", fd_err, 1e-6));

    let with = Functional::new(&lap, params.with_variant(Variant::WithMinusOne))?.evaluate(&u).value;
    let without = Functional::new(&lap, params.with_variant(Variant::WithoutMinusOne))?.evaluate(&u).value;
    checks.push(check("variant_identity", ((without - with) - m.area()).abs() / m.area(), 1e-12));
    let neg = u.scaled(-1.0);
    let ju = f.evaluate(&u).value;
    checks.push(check("evenness", (f.evaluate(&neg).value - ju).abs() / ju.abs(), 1e-14));

    let interior = m.interior_vertices();
    let picks: Vec<usize> = (0..4).map(|i| interior[(i * interior.len()) / 4 + interior.len() / 8]).collect();
    let greens: Vec<Field> = picks
        .iter()
        .map(|&v| Ok(GreenFunction::at_vertex(&lap, v)?.nodal(&m)))
        .collect::<Result<_, tmlab::Error>>()?;
    let mut asym = 0.0f64;
    for i in 0..picks.len() {
        for j in 0..i {
            asym = asym.max((greens[i][picks[j]] - greens[j][picks[i]]).abs());
        }
    }
    checks.push(check("green_symmetry", asym, 1e-3));

    let k = moser_constants((-8f64).exp())?;
    let jump = (k.inner(k.t_eps) - k.outer(k.t_eps)).abs();
    checks.push(check("moser_continuity", jump, 1e-12 * k.outer(k.t_eps).abs().max(1.0)));

    let passed = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!("{} {} {} (tol {})", if c.pass { "PASS" } else { "FAIL" }, c.name, fmt17(c.value), fmt17(c.tolerance));
    }
    write_text(&cfg.output, &to_json(&json!({ "mesh": MeshStats::of(&m), "checks": checks, "passed": passed })))?;
    if !passed {
        return Err(CliError::Failed("identity checks failed".into()));
    }
    Ok(())
}
