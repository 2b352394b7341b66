use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use num_complex::Complex64;
use qdamp::dynamics::{pde_residual, propagate, snapshots, squared_norm, WaveGrid};
use qdamp::eigenstates::{energy as level_energy, expansion_kernel, inner, rayleigh_quotient, ShiftedOscillator};
use qdamp::kernel::{green_function, kernel_at, KernelParams, KernelSource, Window};
use qdamp::models::{CoefficientSet, ModelSelector};
use qdamp::moments::{
    closed_form_model1, closed_form_model2, energy, hamiltonian_expectation, integrate_moments, moments_from_wave,
    MomentState,
};
use qdamp::verify::{run_all, CheckResult, SuiteConfig};
use qdamp::{builtin_model, ModelKind};
use serde::Serialize;
use serde_json::json;

use crate::config::{MomentPath, RunConfig};
use crate::output::{num, write_csv, write_json};

/// Spacing of the extra snapshots used for the PDE residual.
const RESIDUAL_DELTA: f64 = 1e-3;
/// Steps per unit time for moment integration.
const MOMENT_STEPS_PER_TIME: f64 = 1000.0;

pub enum Outcome {
    Done,
    ChecksFailed,
}

fn model_label(cfg: &RunConfig) -> String {
    match &cfg.model {
        ModelSelector::Builtin(kind) => kind.name().to_string(),
        ModelSelector::Custom(path) => format!("custom:{path}"),
    }
}

fn params_json(cfg: &RunConfig) -> serde_json::Value {
    match cfg.model {
        ModelSelector::Builtin(_) => json!({ "omega0": cfg.omega0, "lambda": cfg.lambda }),
        ModelSelector::Custom(_) => serde_json::Value::Null,
    }
}

fn coefficients(cfg: &RunConfig) -> Result<CoefficientSet> {
    cfg.model.build(cfg.omega0, cfg.lambda).context("building the model")
}

fn evolve(coeffs: &CoefficientSet, chi: &WaveGrid, t: f64) -> Result<WaveGrid> {
    if t == 0.0 {
        return Ok(chi.clone());
    }
    let kp = kernel_at(coeffs, t, KernelSource::default(), Window::FirstCaustic)?;
    Ok(propagate(&kp, chi)?)
}

pub fn run_propagate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let coeffs = coefficients(cfg)?;
    let chi = cfg.initial().sample(cfg.grid())?;
    for (i, &t) in cfg.times.iter().enumerate() {
        let w = evolve(&coeffs, &chi, t).with_context(|| format!("propagating to t = {t}"))?;
        let residual = if t > RESIDUAL_DELTA {
            let s = snapshots(&coeffs, &chi, t, RESIDUAL_DELTA, KernelSource::default())?;
            Some(pde_residual(&coeffs, [&s[0], &s[1], &s[2]])?)
        } else {
            None
        };
        let rows = w.values.iter().enumerate().map(|(k, v)| {
            vec![num(w.grid.x(k)), num(v.re), num(v.im), num(v.norm_sqr())]
        });
        write_csv(&out.join(format!("psi_{i:03}.csv")), &["x", "re", "im", "abs2"], rows)?;
        let sidecar = json!({
            "model": model_label(cfg),
            "params": params_json(cfg),
            "t": t,
            "norm2": squared_norm(&w),
            "residual": residual,
        });
        write_json(&out.join(format!("psi_{i:03}.json")), &sidecar)?;
    }
    Ok(Outcome::Done)
}

fn kernel_row(kp: &KernelParams, source: &str) -> Vec<String> {
    vec![
        num(kp.t),
        num(kp.alpha),
        num(kp.beta),
        num(kp.gamma),
        num(kp.prefactor.re),
        num(kp.prefactor.im),
        source.to_string(),
    ]
}

pub fn run_kernel(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let coeffs = coefficients(cfg)?;
    let builtin = coeffs.kind().is_builtin();
    let mut rows = Vec::new();
    for &t in &cfg.times {
        if builtin {
            let kp = kernel_at(&coeffs, t, KernelSource::ClosedForm, Window::FirstCaustic)
                .with_context(|| format!("closed-form kernel at t = {t}"))?;
            rows.push(kernel_row(&kp, "closed_form"));
        }
        let kp = kernel_at(&coeffs, t, KernelSource::default(), Window::FirstCaustic)
            .with_context(|| format!("numeric kernel at t = {t}"))?;
        rows.push(kernel_row(&kp, "numeric"));
    }
    write_csv(&out.join("kernel.csv"), &["t", "alpha", "beta", "gamma", "pref_re", "pref_im", "source"], rows)?;
    Ok(Outcome::Done)
}

fn rk4_at(coeffs: &CoefficientSet, s0: &MomentState, t: f64) -> Result<MomentState> {
    if t == 0.0 {
        return Ok(*s0);
    }
    let steps = ((t * MOMENT_STEPS_PER_TIME).ceil() as usize).max(100);
    let traj = integrate_moments(&coeffs.operator_form(), s0, t, steps)?;
    Ok(*traj.last().expect("non-empty trajectory"))
}

pub fn run_moments(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let coeffs = coefficients(cfg)?;
    let initial = cfg.initial();
    let s0 = MomentState::gaussian(initial.x0, initial.p0, initial.s);
    let kind = coeffs.kind();
    let closed_available = matches!(kind, ModelKind::Model1 | ModelKind::Model2)
        && cfg.regime().regime == qdamp::models::Regime::Underdamped;
    let path = match cfg.moments {
        MomentPath::Auto if closed_available => MomentPath::ClosedForm,
        MomentPath::Auto => MomentPath::RungeKutta,
        p => p,
    };
    let chi = if path == MomentPath::Wave { Some(initial.sample(cfg.grid())?) } else { None };
    let energy_is_mechanical = matches!(kind, ModelKind::Model1 | ModelKind::Model2 | ModelKind::Shifted);
    let mut rows = Vec::new();
    for &t in &cfg.times {
        let s = match path {
            MomentPath::Wave => {
                let chi = chi.as_ref().expect("sampled above");
                moments_from_wave(&evolve(&coeffs, chi, t)?)?
            }
            MomentPath::ClosedForm => {
                let mut s = rk4_at(&coeffs, &s0, t)?;
                let q = if kind == ModelKind::Model1 {
                    closed_form_model1(cfg.omega0, cfg.lambda, &s0, t)?
                } else {
                    closed_form_model2(cfg.omega0, cfg.lambda, &s0, t)?
                };
                (s.p2, s.x2, s.sym) = (q[0], q[1], q[2]);
                s
            }
            _ => rk4_at(&coeffs, &s0, t)?,
        };
        let e = if energy_is_mechanical {
            energy(cfg.omega0, cfg.lambda, &s)
        } else {
            hamiltonian_expectation(&coeffs.operator_form(), &s).re
        };
        rows.push(vec![num(t), num(s.p2), num(s.x2), num(s.sym), num(s.x1), num(s.p1), num(s.one), num(e)]);
    }
    write_csv(&out.join("moments.csv"), &["t", "p2", "x2", "sym", "x1", "p1", "one", "E"], rows)?;
    let (quadratic, linear) = match path {
        MomentPath::Wave => ("wave", "wave"),
        MomentPath::ClosedForm => ("closed_form", "rk4"),
        _ => ("rk4", "rk4"),
    };
    let sidecar = json!({
        "model": model_label(cfg),
        "params": params_json(cfg),
        "initial": initial.to_string(),
        "columns": {
            "p2": quadratic,
            "x2": quadratic,
            "sym": quadratic,
            "x1": linear,
            "p1": linear,
            "one": linear,
            "E": if energy_is_mechanical { "mechanical_energy" } else { "re_hamiltonian_expectation" },
        },
    });
    write_json(&out.join("moments.json"), &sidecar)?;
    Ok(Outcome::Done)
}

/// Sample points for the Mehler convergence table.
const MEHLER_AXIS: [f64; 7] = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];

pub fn run_mehler(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let osc = ShiftedOscillator::new(cfg.omega0, cfg.lambda)?;
    let shifted = builtin_model(ModelKind::Shifted, cfg.omega0, cfg.lambda)?;
    for (i, &t) in cfg.times.iter().enumerate() {
        let kp = kernel_at(&shifted, t, KernelSource::ClosedForm, Window::Extended)
            .with_context(|| format!("closed-form kernel at t = {t}"))?;
        let exact: Vec<(f64, f64, Complex64)> = MEHLER_AXIS
            .iter()
            .flat_map(|&x| MEHLER_AXIS.iter().map(move |&y| (x, y)))
            .map(|(x, y)| (x, y, green_function(&kp, x, y)))
            .collect();
        let mut rows = Vec::new();
        for &eps in &cfg.eps {
            for &n in &cfg.terms {
                let mut worst = 0.0_f64;
                for &(x, y, g) in &exact {
                    worst = worst.max((expansion_kernel(&osc, x, y, t, n, eps)? - g).norm());
                }
                rows.push(vec![n.to_string(), num(eps), num(worst)]);
            }
        }
        write_csv(&out.join(format!("mehler_{i:03}.csv")), &["N", "eps", "sup_error"], rows)?;
    }
    Ok(Outcome::Done)
}

pub fn run_eigen(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let osc = ShiftedOscillator::new(cfg.omega0, cfg.lambda)?;
    let shifted = builtin_model(ModelKind::Shifted, cfg.omega0, cfg.lambda)?;
    let grid = cfg.grid();
    let mut rows = Vec::new();
    for n in 0..=cfg.levels {
        let phi = osc.state(n).sample(grid).with_context(|| format!("sampling level {n}"))?;
        let e = level_energy(n, osc.omega);
        let norm_defect = (inner(&phi, &phi).re - 1.0).abs();
        let rayleigh_defect = (rayleigh_quotient(&shifted, &phi) - e).norm();
        rows.push(vec![n.to_string(), num(e), num(norm_defect), num(rayleigh_defect)]);
    }
    write_csv(&out.join("eigen.csv"), &["n", "E_n", "norm_defect", "rayleigh_defect"], rows)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct Report<'a> {
    overall: bool,
    seed: u64,
    checks: Vec<&'a CheckResult>,
}

#[derive(Serialize)]
struct Timing<'a> {
    id: u8,
    title: &'a str,
    runtime_ms: f64,
    budget_ms: f64,
}

pub fn run_verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let defaults = SuiteConfig::default();
    let suite = SuiteConfig {
        seed: cfg.seed,
        grid: cfg.grid.unwrap_or(defaults.grid),
        initial: cfg.initial.unwrap_or(defaults.initial),
    };
    let reports = run_all(&suite);
    let mut checks: Vec<&CheckResult> = reports.iter().flat_map(|r| &r.checks).collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let overall = reports.iter().all(|r| r.pass);
    for r in &reports {
        println!(
            "{} {:02} {:<24} {:>9.1} ms",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.title,
            r.runtime_ms
        );
        for c in r.checks.iter().filter(|c| !c.pass) {
            println!(
                "       {}: measured {:e}, expected {:e}, tolerance {:e}{}",
                c.name,
                c.measured,
                c.expected,
                c.tolerance,
                c.diagnostic.as_deref().map(|d| format!(" ({d})")).unwrap_or_default()
            );
        }
    }
    println!("overall: {}", if overall { "PASS" } else { "FAIL" });
    write_json(&out.join("report.json"), &Report { overall, seed: suite.seed, checks })?;
    let timings: Vec<Timing> = reports
        .iter()
        .map(|r| Timing { id: r.id, title: &r.title, runtime_ms: r.runtime_ms, budget_ms: r.budget_ms })
        .collect();
    write_json(&out.join("timings.json"), &timings)?;
    Ok(if overall { Outcome::Done } else { Outcome::ChecksFailed })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
