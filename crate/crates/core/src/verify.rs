//! The acceptance suite: ten criteria, each a group of named checks.
//!
//! Every check records a measured value, the value it is compared against and
//! a tolerance. Errors raised inside a check, including panics, turn into a
//! failing [`CheckResult`] carrying the diagnostic; they never abort the
//! suite. Random draws come from a `ChaCha8Rng` seeded per criterion, so the
//! report is a pure function of the [`SuiteConfig`].

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    composition_check, delta_limit_check, fourier_duality_check, gauge_apply, pde_residual, propagate,
    snapshots, squared_norm, GaugePhase, GaussianSpec, GridSpec, WaveGrid,
};
use crate::eigenstates::{
    commutator_residual, energy as level_energy, expansion_kernel, expansion_kernel_richardson, ladder_apply,
    mehler_closed, mehler_partial_sum, rayleigh_quotient, terms_for_eps, LadderOperators, ShiftedOscillator,
};
use crate::error::Result;
use crate::kernel::{damped_trig_identity_residual, green_function, kernel_at, KernelSource, Window};
use crate::models::{builtin_model, DampingRegime, ModelKind, OperatorCoefficients};
use crate::moments::{
    closed_form_model1, closed_form_model2, eigen_structure_model1, ehrenfest_ode, ehrenfest_residual, energy,
    integrate_moments, moments_from_wave, MomentState,
};

/// How a check compares `measured` with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured ≤ tolerance`; `expected` is the ideal value (zero).
    UpperBound,
    /// `|measured − expected| ≤ tolerance · |expected|`.
    Relative,
    /// `measured < expected`; the tolerance is unused.
    StrictlyBelow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
    /// Wall time of the owning criterion; excluded from serialized reports.
    #[serde(skip)]
    pub runtime_ms: f64,
}

impl CheckResult {
    pub fn bound(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self::build(name.into(), measured, 0.0, tolerance, Comparison::UpperBound)
    }

    pub fn relative(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self::build(name.into(), measured, expected, tolerance, Comparison::Relative)
    }

    pub fn below(name: impl Into<String>, measured: f64, reference: f64) -> Self {
        Self::build(name.into(), measured, reference, 0.0, Comparison::StrictlyBelow)
    }

    pub fn failed(name: impl Into<String>, diagnostic: String) -> Self {
        CheckResult {
            name: name.into(),
            measured: f64::NAN,
            expected: 0.0,
            tolerance: 0.0,
            comparison: Comparison::UpperBound,
            pass: false,
            diagnostic: Some(diagnostic),
            runtime_ms: 0.0,
        }
    }

    pub fn with_diagnostic(mut self, diagnostic: String) -> Self {
        self.diagnostic = Some(diagnostic);
        self
    }

    fn build(name: String, measured: f64, expected: f64, tolerance: f64, comparison: Comparison) -> Self {
        let pass = match comparison {
            Comparison::UpperBound => measured <= tolerance,
            Comparison::Relative => (measured - expected).abs() <= tolerance * expected.abs(),
            Comparison::StrictlyBelow => measured < expected,
        };
        CheckResult { name, measured, expected, tolerance, comparison, pass, diagnostic: None, runtime_ms: 0.0 }
    }
}

/// Inputs to the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Grid for the norm-law, wave/ODE and Fourier-duality criteria.
    pub grid: GridSpec,
    /// Initial packet for the same criteria.
    pub initial: GaussianSpec,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 20240531,
            grid: GridSpec::new(-20.0, 20.0, 4096).expect("valid grid"),
            initial: GaussianSpec { x0: 1.0, p0: 0.5, s: 1.0 },
        }
    }
}

/// Result of one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    #[serde(skip)]
    pub runtime_ms: f64,
    #[serde(skip)]
    pub budget_ms: f64,
}

impl CriterionReport {
    pub fn within_budget(&self) -> bool {
        self.runtime_ms <= self.budget_ms
    }
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub budget_s: f64,
    run: fn(&SuiteConfig) -> Result<Vec<CheckResult>>,
}

impl Criterion {
    /// Runs the criterion, converting errors and panics into failed checks.
    pub fn run(&self, config: &SuiteConfig) -> CriterionReport {
        let start = Instant::now();
        let label = format!("{:02}_{}", self.id, self.title);
        let checks = match catch_unwind(AssertUnwindSafe(|| (self.run)(config))) {
            Ok(Ok(checks)) => checks,
            Ok(Err(e)) => vec![CheckResult::failed(format!("{label}.error"), e.to_string())],
            Err(payload) => {
                let msg = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                vec![CheckResult::failed(format!("{label}.panic"), msg)]
            }
        };
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        let checks: Vec<CheckResult> = checks
            .into_iter()
            .map(|mut c| {
                c.name = format!("{label}.{}", c.name.trim_start_matches(&format!("{label}.")));
                c.runtime_ms = runtime_ms;
                c
            })
            .collect();
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        CriterionReport {
            id: self.id,
            title: self.title.to_string(),
            checks,
            pass,
            runtime_ms,
            budget_ms: self.budget_s * 1e3,
        }
    }
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, title: "kernel_oracle", budget_s: 10.0, run: kernel_oracle },
    Criterion { id: 2, title: "norm_laws", budget_s: 20.0, run: norm_laws },
    Criterion { id: 3, title: "moment_dynamics", budget_s: 2.0, run: moment_dynamics },
    Criterion { id: 4, title: "wave_ode_consistency", budget_s: 30.0, run: wave_ode_consistency },
    Criterion { id: 5, title: "ehrenfest", budget_s: 20.0, run: ehrenfest },
    Criterion { id: 6, title: "spectrum_ladder", budget_s: 5.0, run: spectrum_ladder },
    Criterion { id: 7, title: "mehler", budget_s: 10.0, run: mehler },
    Criterion { id: 8, title: "gauge_pipeline", budget_s: 10.0, run: gauge_pipeline },
    Criterion { id: 9, title: "fourier_duality", budget_s: 10.0, run: fourier_duality },
    Criterion { id: 10, title: "structural_identities", budget_s: 10.0, run: structural_identities },
];

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

/// Runs every criterion in order.
pub fn run_all(config: &SuiteConfig) -> Vec<CriterionReport> {
    CRITERIA.iter().map(|c| c.run(config)).collect()
}

fn rng_for(config: &SuiteConfig, id: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed ^ (u64::from(id) << 56))
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so a broken value cannot pass.
    values.into_iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

const KERNEL_DRAWS: usize = 50;

fn kernel_oracle(config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(config, 1);
    let mut out = Vec::new();
    for kind in [ModelKind::Model1, ModelKind::Model2, ModelKind::Shifted, ModelKind::Model3] {
        let mut worst_abg = 0.0_f64;
        let mut worst_pref = 0.0_f64;
        for _ in 0..KERNEL_DRAWS {
            let omega0 = rng.gen_range(0.5..=2.0);
            let lambda = rng.gen_range(0.0..=0.9 * omega0);
            let w = DampingRegime::classify(omega0, lambda).omega;
            let t = loop {
                let t: f64 = rng.gen_range(0.0..0.9 * PI / w);
                if t > 0.0 {
                    break t;
                }
            };
            let coeffs = builtin_model(kind, omega0, lambda)?;
            let closed = kernel_at(&coeffs, t, KernelSource::ClosedForm, Window::FirstCaustic)?;
            let numeric = kernel_at(&coeffs, t, KernelSource::default(), Window::FirstCaustic)?;
            worst_abg = max_of([
                worst_abg,
                (closed.alpha - numeric.alpha).abs(),
                (closed.beta - numeric.beta).abs(),
                (closed.gamma - numeric.gamma).abs(),
            ]);
            worst_pref = max_of([worst_pref, (closed.prefactor - numeric.prefactor).norm() / closed.prefactor.norm()]);
        }
        out.push(CheckResult::bound(format!("{kind}.alpha_beta_gamma"), worst_abg, 1e-7));
        out.push(CheckResult::bound(format!("{kind}.prefactor_rel"), worst_pref, 1e-6));
    }
    Ok(out)
}

fn norm_laws(config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (omega0, lambda, t): (f64, f64, f64) = (1.0, 0.6, 1.0);
    let chi = config.initial.sample(config.grid)?;
    let n0 = squared_norm(&chi);
    let mut out = Vec::new();
    for (kind, expected) in [
        (ModelKind::Model1, (lambda * t).exp()),
        (ModelKind::Model2, (-lambda * t).exp()),
        (ModelKind::Shifted, 1.0),
    ] {
        let ratio = || -> Result<f64> {
            let coeffs = builtin_model(kind, omega0, lambda)?;
            let kp = kernel_at(&coeffs, t, KernelSource::default(), Window::FirstCaustic)?;
            Ok(squared_norm(&propagate(&kp, &chi)?) / n0)
        };
        let tol = if kind == ModelKind::Shifted { 1e-6 } else { 1e-3 };
        let name = format!("{kind}.norm_ratio");
        out.push(match ratio() {
            Ok(r) => CheckResult::relative(name, r, expected, tol),
            Err(e) => CheckResult::relative(name, f64::NAN, expected, tol).with_diagnostic(e.to_string()),
        });
    }
    Ok(out)
}

const MOMENT_SAMPLES: usize = 20;
const MOMENT_HORIZON: f64 = 3.0;
const MOMENT_STEPS: usize = 3000;

fn moment_dynamics(config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (omega0, lambda) = (1.0, 0.6);
    let s0 = MomentState::gaussian(0.7, -0.4, 0.8);
    let mut out = Vec::new();
    let stride = MOMENT_STEPS / MOMENT_SAMPLES;
    for (kind, rate) in [(ModelKind::Model1, lambda), (ModelKind::Model2, -lambda)] {
        let opc = OperatorCoefficients::builtin(kind, omega0, lambda)?;
        let traj = integrate_moments(&opc, &s0, MOMENT_HORIZON, MOMENT_STEPS)?;
        let mut worst = 0.0_f64;
        for k in 1..=MOMENT_SAMPLES {
            let s = &traj[k * stride];
            let closed = match kind {
                ModelKind::Model1 => closed_form_model1(omega0, lambda, &s0, s.t)?,
                _ => closed_form_model2(omega0, lambda, &s0, s.t)?,
            };
            worst = max_of([worst, (closed[0] - s.p2).abs(), (closed[1] - s.x2).abs(), (closed[2] - s.sym).abs()]);
        }
        out.push(CheckResult::bound(format!("{kind}.closed_form_vs_rk4"), worst, 1e-8));
        let e0 = energy(omega0, lambda, &s0);
        let energy_err = max_of(traj.iter().map(|s| {
            let expected = e0 * (rate * s.t).exp();
            ((energy(omega0, lambda, s) - expected) / expected).abs()
        }));
        out.push(CheckResult::bound(format!("{kind}.energy_law_rel"), energy_err, 1e-8));
    }
    let mut rng = rng_for(config, 3);
    let mut worst_det = 0.0_f64;
    for _ in 0..100 {
        let omega0: f64 = rng.gen_range(0.5..=2.0);
        let lambda = rng.gen_range(0.0..0.95 * omega0);
        let w = DampingRegime::classify(omega0, lambda).omega;
        let expected = Complex64::new(0.0, -8.0 * omega0 * omega0 * w.powi(3));
        let det = eigen_structure_model1(omega0, lambda)?.det;
        worst_det = max_of([worst_det, (det - expected).norm() / expected.norm()]);
    }
    out.push(CheckResult::bound("eigenvector_determinant_rel", worst_det, 1e-12));
    Ok(out)
}

const WAVE_TIMES: [f64; 3] = [0.25, 0.5, 1.0];

fn wave_ode_consistency(config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (omega0, lambda) = (1.0, 0.6);
    let chi = config.initial.sample(config.grid)?;
    let s0 = moments_from_wave(&chi)?;
    let steps = 1000;
    let mut out = Vec::new();
    for kind in [ModelKind::Model1, ModelKind::Model2] {
        let coeffs = builtin_model(kind, omega0, lambda)?;
        let opc = OperatorCoefficients::builtin(kind, omega0, lambda)?;
        let traj = integrate_moments(&opc, &s0, 1.0, steps)?;
        let mut worst = 0.0_f64;
        for t in WAVE_TIMES {
            let kp = kernel_at(&coeffs, t, KernelSource::default(), Window::FirstCaustic)?;
            let from_wave = moments_from_wave(&propagate(&kp, &chi)?)?;
            let ode = &traj[(t * steps as f64).round() as usize];
            worst = max_of([worst, from_wave.max_abs_diff(ode)]);
        }
        out.push(CheckResult::bound(format!("{kind}.max_moment_diff"), worst, 2e-3));
    }
    Ok(out)
}

const EHRENFEST_DT: f64 = 0.025;
const EHRENFEST_SAMPLES: usize = 21;
// Shorter times alias: the kernel chirp grows like 1/t.
const EHRENFEST_START: f64 = 0.25;

fn ehrenfest(_config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (omega0, lambda) = (1.0, 0.6);
    let (x0, p0) = (1.0, 0.0);
    let grid = GridSpec::default();
    let chi = GaussianSpec { x0, p0, s: 1.0 }.sample(grid)?;
    let times: Vec<f64> = (0..EHRENFEST_SAMPLES).map(|k| EHRENFEST_START + k as f64 * EHRENFEST_DT).collect();
    let mut out = Vec::new();
    for kind in [ModelKind::Model1, ModelKind::Model2, ModelKind::Shifted] {
        let coeffs = builtin_model(kind, omega0, lambda)?;
        let xs = times
            .iter()
            .map(|&t| {
                let w = propagate(&kernel_at(&coeffs, t, KernelSource::default(), Window::FirstCaustic)?, &chi)?;
                Ok(moments_from_wave(&w)?.x1)
            })
            .collect::<Result<Vec<f64>>>()?;
        let residual = ehrenfest_residual(kind, omega0, lambda, &xs, EHRENFEST_DT)?;
        out.push(CheckResult::bound(format!("{kind}.fd_residual"), residual, 1e-3));
        let analytic = ehrenfest_ode(kind, omega0, lambda, x0, p0, &times)?;
        let diff = max_of(xs.iter().zip(&analytic).map(|(a, b)| (a - b).abs()));
        out.push(CheckResult::bound(format!("{kind}.analytic_match"), diff, 2e-3));
    }
    Ok(out)
}

fn spectrum_ladder(_config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (omega0, lambda) = (1.0, 0.6);
    let osc = ShiftedOscillator::new(omega0, lambda)?;
    let op = LadderOperators::new(&osc);
    let coeffs = builtin_model(ModelKind::Shifted, omega0, lambda)?;
    let grid = GridSpec::new(-20.0, 20.0, 4096)?;
    let states: Vec<WaveGrid> = (0..=8).map(|n| osc.state(n).sample(grid)).collect::<Result<_>>()?;
    let rq = max_of(
        states.iter().enumerate().map(|(n, phi)| (rayleigh_quotient(&coeffs, phi) - level_energy(n, osc.omega)).norm()),
    );
    let mut tests = states.clone();
    tests.push(GaussianSpec { x0: 0.5, p0: -1.0, s: 0.8 }.sample(grid)?);
    let comm = max_of(tests.iter().map(|w| commutator_residual(&op, w) / w.max_abs()));
    let lowered = ladder_apply(&op, true, &osc.state(0).sample(GridSpec::default())?).max_abs();
    Ok(vec![
        CheckResult::bound("rayleigh_quotient", rq, 1e-6),
        CheckResult::bound("commutator_rel", comm, 1e-5),
        CheckResult::bound("lowered_ground_state", lowered, 1e-6),
    ])
}

const MEHLER_POINTS: [(f64, f64); 4] = [(0.0, 0.0), (0.5, -0.3), (1.0, -1.0), (-0.8, 0.6)];

fn mehler(_config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let mut partial = 0.0_f64;
    for k in 0..8 {
        let r = Complex64::from_polar(0.9, k as f64 * PI / 4.0);
        for (x, y) in MEHLER_POINTS {
            partial = max_of([partial, (mehler_partial_sum(x, y, r, 200)? - mehler_closed(x, y, r)?).norm()]);
        }
    }
    let (omega0, lambda, t, eps) = (1.0, 0.6, 1.0, 1e-3);
    let osc = ShiftedOscillator::new(omega0, lambda)?;
    let kp = kernel_at(&builtin_model(ModelKind::Shifted, omega0, lambda)?, t, KernelSource::ClosedForm, Window::FirstCaustic)?;
    let (mut abel, mut richardson) = (0.0_f64, 0.0_f64);
    for (x, y) in MEHLER_POINTS {
        let exact = green_function(&kp, x, y);
        abel = max_of([abel, (expansion_kernel(&osc, x, y, t, terms_for_eps(eps), eps)? - exact).norm()]);
        richardson = max_of([richardson, (expansion_kernel_richardson(&osc, x, y, t, eps)? - exact).norm()]);
    }
    Ok(vec![
        CheckResult::bound("partial_sum_n200", partial, 1e-8),
        CheckResult::bound("abel_kernel", abel, 5e-3),
        CheckResult::below("richardson_improves", richardson, abel),
    ])
}

fn gauge_pipeline(_config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (omega0, lambda, t, delta) = (1.0, 0.6, 1.0, 1e-3);
    let grid = GridSpec::new(-25.0, 25.0, 4096)?;
    let source = builtin_model(ModelKind::Model1, omega0, lambda)?;
    let chi = GaussianSpec { x0: 1.0, p0: 0.5, s: 1.0 }.sample(grid)?;
    let snaps = snapshots(&source, &chi, t, delta, KernelSource::default())?;
    let g5 = GaugePhase::g5(lambda);
    let g10 = GaugePhase::g10(omega0, lambda);
    let target = g10.target(&g5.target(&source)?)?;
    let mapped = snaps.map(|w| gauge_apply(&g10, &gauge_apply(&g5, &w)));
    let residual = pde_residual(&target, [&mapped[0], &mapped[1], &mapped[2]])?;
    Ok(vec![CheckResult::bound("harmonic_pde_residual", residual, 1e-4)])
}

fn fourier_duality(config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let chi = config.initial.sample(config.grid)?;
    let residual = fourier_duality_check(1.0, 0.6, 1.0, &chi, KernelSource::default())?;
    Ok(vec![CheckResult::bound("sup_residual", residual, 1e-5)])
}

fn structural_identities(config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(config, 10);
    let mut identity = 0.0_f64;
    for _ in 0..1000 {
        let omega0: f64 = rng.gen_range(0.1..=5.0);
        let lambda = rng.gen_range(-0.99 * omega0..=0.99 * omega0);
        let t = rng.gen_range(-10.0..=10.0);
        identity = max_of([identity, damped_trig_identity_residual(omega0, lambda, t)?]);
    }
    let coeffs = builtin_model(ModelKind::Model1, 1.0, 0.6)?;
    let chi = GaussianSpec { x0: 1.0, p0: 0.5, s: 1.0 }.sample(GridSpec::default())?;
    let composition = composition_check(&coeffs, 0.4, 0.6, &chi, KernelSource::default())?;
    let delta = delta_limit_check(&coeffs, 1e-3, GaussianSpec::default(), GridSpec::default())?;
    Ok(vec![
        CheckResult::bound("damped_trig_identity", identity, 1e-12),
        CheckResult::bound("composition", composition, 1e-5),
        CheckResult::bound("delta_limit", delta, 1e-3),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_comparisons() {
        assert!(CheckResult::bound("a", 1e-9, 1e-8).pass);
        assert!(!CheckResult::bound("a", f64::NAN, 1e-8).pass);
        assert!(CheckResult::relative("b", 1.0005, 1.0, 1e-3).pass);
        assert!(!CheckResult::relative("b", 1.01, 1.0, 1e-3).pass);
        assert!(CheckResult::below("c", 1.0, 2.0).pass);
        assert!(!CheckResult::below("c", 2.0, 2.0).pass);
        assert!(max_of([1.0, f64::NAN, 2.0]).is_nan());
    }

    #[test]
    fn criteria_are_ordered() {
        let ids: Vec<u8> = CRITERIA.iter().map(|c| c.id).collect();
        assert_eq!(ids, (1..=10).collect::<Vec<u8>>());
        assert!(criterion(3).is_some() && criterion(11).is_none());
    }

    #[test]
    fn errors_become_failed_checks() {
        let broken = Criterion {
            id: 99,
            title: "broken",
            budget_s: 1.0,
            run: |_| Err(crate::Error::GridMismatch),
        };
        let report = broken.run(&SuiteConfig::default());
        assert!(!report.pass);
        assert_eq!(report.checks[0].name, "99_broken.error");
        let panicking = Criterion { id: 98, title: "panics", budget_s: 1.0, run: |_| panic!("boom") };
        let report = panicking.run(&SuiteConfig::default());
        assert_eq!(report.checks[0].diagnostic.as_deref(), Some("boom"));
    }
}
