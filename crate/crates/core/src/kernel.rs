//! Gaussian Green functions `G(x, y, t) = P(t) exp(i(α x² + β xy + γ y²))`.
//!
//! The generic route solves the characteristic equation
//! `μ'' − τ μ' + 4σ μ = 0`, `μ(0) = 0`, `μ'(0) = 2a(0)` and builds
//!
//! ```text
//! α = μ'/(4aμ) − d/(2a)
//! β = −h/μ
//! γ = a h²/(μ μ') + d(0)/(2a(0)) − 4 ∫₀ᵗ a σ h² / (μ')² dτ
//! P = 1/√(2πiμ)
//! ```
//!
//! The built-in models also have closed forms which serve as oracles for
//! the generic route.
//!
//! Branch of `P`: fixed at `t → 0⁺` by `1/√(2πi·2a(0)t)` with
//! `√i = e^{iπ/4}` and continued through each zero of `μ` with an extra
//! factor `e^{−iπ/2}` (the `t → t − i0` prescription).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{h_factor, tau_sigma, CoefficientSet, DampingRegime, ModelKind, Regime};
use crate::numerics::{gauss_legendre3, simpson};

/// Minimum number of RK4 steps accepted by [`solve_mu_numeric`].
pub const MIN_MU_STEPS: usize = 100;
/// Step-doubling error bound per unit time for the characteristic equation.
pub const MU_ERROR_PER_UNIT_TIME: f64 = 1e-8;
/// `|μ| < CAUSTIC_REL · max|μ|` counts as a caustic.
pub const CAUSTIC_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuSource {
    ClosedForm,
    RungeKutta,
}

/// Solution of the characteristic equation on a uniform grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MuSolution {
    pub t_grid: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_prime: Vec<f64>,
    /// `μ'' = τ μ' − 4σ μ` at the nodes, used for Hermite interpolation of `μ'`.
    pub mu_second: Vec<f64>,
    pub source: MuSource,
    /// Step-doubling estimate of the maximum absolute error in `μ`.
    pub error_estimate: f64,
    a0: f64,
}

impl MuSolution {
    pub fn step(&self) -> f64 {
        self.t_grid[1] - self.t_grid[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t_grid.last().expect("non-empty grid")
    }

    pub fn max_abs_mu(&self) -> f64 {
        self.mu.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn check_inside(&self, t: f64) -> Result<()> {
        let end = self.t_end();
        if !(t >= 0.0 && t <= end * (1.0 + 1e-12)) {
            return Err(Error::OutsideSolution { t, t_end: end });
        }
        Ok(())
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let h = self.step();
        let last = self.t_grid.len() - 2;
        let i = ((t / h).floor().max(0.0) as usize).min(last);
        (i, (t - self.t_grid[i]) / h)
    }

    /// `(μ(t), μ'(t))` by cubic Hermite interpolation between nodes.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        self.check_inside(t)?;
        let (i, s) = self.locate(t);
        let h = self.step();
        let mu = hermite_cubic(self.mu[i], self.mu_prime[i], self.mu[i + 1], self.mu_prime[i + 1], h, s);
        let mp = hermite_cubic(
            self.mu_prime[i],
            self.mu_second[i],
            self.mu_prime[i + 1],
            self.mu_second[i + 1],
            h,
            s,
        );
        Ok((mu, mp))
    }

    /// Times (interpolated) where `μ` changes sign in `(0, t)`.
    pub fn zeros_before(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 1..self.t_grid.len() - 1 {
            if self.t_grid[i] >= t {
                break;
            }
            let (m0, m1) = (self.mu[i], self.mu[i + 1]);
            if m0 != 0.0 && m0.signum() != m1.signum() && m1 != 0.0 {
                let root = self.t_grid[i] + self.step() * m0 / (m0 - m1);
                if root < t {
                    out.push(root);
                }
            } else if m0 == 0.0 {
                out.push(self.t_grid[i]);
            }
        }
        out
    }

    fn is_caustic(&self, mu_t: f64) -> bool {
        mu_t.abs() <= CAUSTIC_REL * self.max_abs_mu() + 8.0 * self.error_estimate
    }
}

fn hermite_cubic(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

fn rk4_mu(coeffs: &CoefficientSet, t_end: f64, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = t_end / steps as f64;
    let rhs = |t: f64, y: [f64; 2]| -> Result<[f64; 2]> {
        let (tau, sigma) = tau_sigma(coeffs, t)?;
        Ok([y[1], tau * y[1] - 4.0 * sigma * y[0]])
    };
    let mut mu = Vec::with_capacity(steps + 1);
    let mut mp = Vec::with_capacity(steps + 1);
    let mut y = [0.0, 2.0 * coeffs.a.value(0.0)];
    mu.push(y[0]);
    mp.push(y[1]);
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = rhs(t, y)?;
        let k2 = rhs(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]])?;
        let k3 = rhs(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]])?;
        let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]])?;
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        mu.push(y[0]);
        mp.push(y[1]);
    }
    Ok((mu, mp))
}

fn second_derivatives(coeffs: &CoefficientSet, t_grid: &[f64], mu: &[f64], mp: &[f64]) -> Result<Vec<f64>> {
    t_grid
        .iter()
        .zip(mu.iter().zip(mp))
        .map(|(&t, (&m, &p))| {
            let (tau, sigma) = tau_sigma(coeffs, t)?;
            Ok(tau * p - 4.0 * sigma * m)
        })
        .collect()
}

fn check_mu_request(coeffs: &CoefficientSet, t_end: f64, steps: usize) -> Result<f64> {
    if !t_end.is_finite() {
        return Err(Error::NonFinite("t_end"));
    }
    if t_end <= 0.0 {
        return Err(Error::InvalidParameter { name: "t_end", reason: format!("must be > 0, got {t_end}") });
    }
    if steps < MIN_MU_STEPS {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: format!("must be >= {MIN_MU_STEPS}, got {steps}"),
        });
    }
    coeffs.check_time(0.0)?;
    coeffs.check_time(t_end)?;
    let a0 = coeffs.a.value(0.0);
    if a0 == 0.0 {
        return Err(Error::VanishingA { t: 0.0 });
    }
    Ok(a0)
}

/// Classic RK4 solution of the characteristic equation on `[0, t_end]`.
///
/// The error is estimated by step doubling (a second solve at twice the
/// resolution) and must stay below [`MU_ERROR_PER_UNIT_TIME`] per unit time.
pub fn solve_mu_numeric(coeffs: &CoefficientSet, t_end: f64, steps: usize) -> Result<MuSolution> {
    let a0 = check_mu_request(coeffs, t_end, steps)?;
    let (mu, mu_prime) = rk4_mu(coeffs, t_end, steps)?;
    let (fine, _) = rk4_mu(coeffs, t_end, 2 * steps)?;
    let diff = mu
        .iter()
        .enumerate()
        .map(|(k, m)| (m - fine[2 * k]).abs())
        .fold(0.0_f64, f64::max);
    let error_estimate = diff * 16.0 / 15.0;
    let per_unit_time = error_estimate / t_end;
    if !(per_unit_time <= MU_ERROR_PER_UNIT_TIME) {
        return Err(Error::StepTooLarge { per_unit_time, limit: MU_ERROR_PER_UNIT_TIME });
    }
    let h = t_end / steps as f64;
    let t_grid: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let mu_second = second_derivatives(coeffs, &t_grid, &mu, &mu_prime)?;
    Ok(MuSolution { t_grid, mu, mu_prime, mu_second, source: MuSource::RungeKutta, error_estimate, a0 })
}

/// Closed-form `(μ, μ')` for the built-in models.
///
/// With `S = sin ωt/ω` (or `t`, `sinh κt/κ` in the critical and overdamped
/// regimes) and `C = S'`: Models 1 and 3 give `μ = ω₀ e^{−λt} S`, Model 2
/// gives `μ = ω₀ e^{λt} S`, the shifted and reduced oscillators give
/// `μ = ω₀ S`.
pub fn mu_closed_form(coeffs: &CoefficientSet, t: f64) -> Result<(f64, f64)> {
    let p = coeffs.builtin_params()?;
    let r = p.regime();
    let (s, c) = (r.s(t), r.c(t));
    let w0 = p.omega0;
    let l = p.lambda;
    Ok(match coeffs.kind() {
        ModelKind::Model1 | ModelKind::Model3 => {
            let e = (-l * t).exp();
            (w0 * e * s, w0 * e * (c - l * s))
        }
        ModelKind::Model2 => {
            let e = (l * t).exp();
            (w0 * e * s, w0 * e * (c + l * s))
        }
        ModelKind::Shifted | ModelKind::HarmonicReduced => (w0 * s, w0 * c),
        ModelKind::Custom => return Err(Error::CustomModel),
    })
}

/// Closed-form `μ` sampled on the same kind of grid as [`solve_mu_numeric`].
pub fn mu_closed_form_grid(coeffs: &CoefficientSet, t_end: f64, steps: usize) -> Result<MuSolution> {
    let a0 = check_mu_request(coeffs, t_end, steps)?;
    let h = t_end / steps as f64;
    let t_grid: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let (mu, mu_prime): (Vec<f64>, Vec<f64>) =
        t_grid.iter().map(|&t| mu_closed_form(coeffs, t)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let mu_second = second_derivatives(coeffs, &t_grid, &mu, &mu_prime)?;
    Ok(MuSolution { t_grid, mu, mu_prime, mu_second, source: MuSource::ClosedForm, error_estimate: 0.0, a0 })
}

/// Which time range a kernel may be served on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// `(0, first caustic)`.
    #[default]
    FirstCaustic,
    /// Any non-caustic time; the prefactor picks up `e^{−iπ/2}` per caustic passed.
    Extended,
}

/// Ingredients of the Gaussian Green function at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub prefactor: Complex64,
    pub h: f64,
    /// Number of caustics between 0 and `t`.
    pub caustics: u32,
}

/// `1/√(2πiμ)` on the tracked branch: `arg μ` starts at 0 (or π when
/// `a(0) < 0`) and gains π at every zero.
pub fn prefactor_on_branch(mu: f64, caustics: u32, a0: f64) -> Complex64 {
    let arg_mu = if a0 > 0.0 { 0.0 } else { PI } + caustics as f64 * PI;
    let phase = -0.5 * (0.5 * PI + arg_mu);
    Complex64::from_polar(1.0 / (2.0 * PI * mu.abs()).sqrt(), phase)
}

fn check_kernel_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    if t <= 0.0 {
        return Err(Error::InvalidParameter { name: "t", reason: format!("must be > 0, got {t}") });
    }
    Ok(())
}

/// Generic kernel from a numerical (or sampled closed-form) `μ`, default window.
pub fn kernel_params_numeric(coeffs: &CoefficientSet, mu: &MuSolution, t: f64) -> Result<KernelParams> {
    kernel_params_numeric_with(coeffs, mu, t, Window::FirstCaustic)
}

pub fn kernel_params_numeric_with(
    coeffs: &CoefficientSet,
    mu: &MuSolution,
    t: f64,
    window: Window,
) -> Result<KernelParams> {
    check_kernel_time(t)?;
    let (m, mp) = mu.eval(t)?;
    if mu.is_caustic(m) {
        return Err(Error::Caustic { t, mu: m });
    }
    let zeros = mu.zeros_before(t);
    if window == Window::FirstCaustic {
        if let Some(&first) = zeros.first() {
            return Err(Error::OutsideWindow { t, limit: first });
        }
    }
    let a = coeffs.a.value(t);
    if a == 0.0 {
        return Err(Error::VanishingA { t });
    }
    let d = coeffs.d.value(t);
    let h = h_factor(coeffs, t)?;
    let alpha = mp / (4.0 * a * m) - d / (2.0 * a);
    let beta = -h / m;
    let gamma = gamma_numeric(coeffs, mu, t)?;
    let kp = KernelParams {
        t,
        alpha,
        beta,
        gamma,
        prefactor: prefactor_on_branch(m, zeros.len() as u32, mu.a0),
        h,
        caustics: zeros.len() as u32,
    };
    if [alpha, beta, gamma, kp.prefactor.re, kp.prefactor.im].iter().any(|v| !v.is_finite()) {
        return Err(Error::Caustic { t, mu: m });
    }
    Ok(kp)
}

/// Node-wise data for the `γ` quadratures.
struct GammaNodes {
    a: Vec<f64>,
    sigma: Vec<f64>,
    h: Vec<f64>,
}

fn gamma_nodes(coeffs: &CoefficientSet, mu: &MuSolution, last: usize) -> Result<GammaNodes> {
    let ts = &mu.t_grid[..=last];
    let a = ts.iter().map(|&t| coeffs.a.value(t)).collect();
    let sigma = ts.iter().map(|&t| tau_sigma(coeffs, t).map(|(_, s)| s)).collect::<Result<_>>()?;
    let h = h_on_grid(coeffs, ts)?;
    Ok(GammaNodes { a, sigma, h })
}

/// `h` at each node; custom coefficients accumulate per-interval quadratures.
fn h_on_grid(coeffs: &CoefficientSet, ts: &[f64]) -> Result<Vec<f64>> {
    if coeffs.c.integral(1.0).is_some() && coeffs.d.integral(1.0).is_some() {
        return ts.iter().map(|&t| h_factor(coeffs, t)).collect();
    }
    let mut out = Vec::with_capacity(ts.len());
    let mut acc = 0.0;
    out.push(1.0);
    for w in ts.windows(2) {
        acc += crate::models::damping_integral_quadrature(coeffs, w[0], w[1])?;
        out.push((-acc).exp());
    }
    Ok(out)
}

/// `∫_{t_from}^{t}` of a function known at nodes (Simpson over whole pairs)
/// and pointwise (three-point Gauss–Legendre over the remainder).
fn integrate_nodes<F, G>(mu: &MuSolution, from: usize, t: f64, node: F, point: G) -> Result<f64>
where
    F: Fn(usize) -> f64,
    G: FnMut(f64) -> f64,
{
    let h = mu.step();
    let below = ((t / h).floor() as usize).min(mu.t_grid.len() - 1);
    let mut end = from;
    if below > from {
        end = from + 2 * ((below - from) / 2);
    }
    let values: Vec<f64> = (from..=end).map(&node).collect();
    let mut total = simpson(&values, h);
    let t_end = mu.t_grid[end];
    if t > t_end {
        total += gauss_legendre3(point, t_end, t);
    }
    Ok(total)
}

/// `γ(t)` straight from the defining integral; refuses ranges where `μ'`
/// vanishes (the integrand has a double pole there).
pub fn gamma_direct(coeffs: &CoefficientSet, mu: &MuSolution, t: f64) -> Result<f64> {
    check_kernel_time(t)?;
    mu.check_inside(t)?;
    let last = ((t / mu.step()).ceil() as usize).min(mu.t_grid.len() - 1);
    for i in 1..=last {
        if mu.mu_prime[i - 1].signum() != mu.mu_prime[i].signum() || mu.mu_prime[i] == 0.0 {
            return Err(Error::MuPrimeZero { t: mu.t_grid[i] });
        }
    }
    let (m, mp) = mu.eval(t)?;
    if mp.signum() != mu.mu_prime[0].signum() {
        return Err(Error::MuPrimeZero { t });
    }
    let nodes = gamma_nodes(coeffs, mu, last)?;
    gamma_from_definition(coeffs, mu, &nodes, t, m, mp)
}

fn gamma_from_definition(
    coeffs: &CoefficientSet,
    mu: &MuSolution,
    nodes: &GammaNodes,
    t: f64,
    m: f64,
    mp: f64,
) -> Result<f64> {
    let a0 = coeffs.a.value(0.0);
    let d0 = coeffs.d.value(0.0);
    let a_t = coeffs.a.value(t);
    let h_t = h_factor(coeffs, t)?;
    let mut point_err = None;
    let integral = integrate_nodes(
        mu,
        0,
        t,
        |i| nodes.a[i] * nodes.sigma[i] * nodes.h[i].powi(2) / mu.mu_prime[i].powi(2),
        |s| match (mu.eval(s), tau_sigma(coeffs, s), h_factor(coeffs, s)) {
            (Ok((_, p)), Ok((_, sigma)), Ok(h)) => coeffs.a.value(s) * sigma * h * h / (p * p),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                point_err = Some(e);
                f64::NAN
            }
        },
    )?;
    if let Some(e) = point_err {
        return Err(e);
    }
    Ok(a_t * h_t * h_t / (m * mp) + d0 / (2.0 * a0) - 4.0 * integral)
}

/// `γ(t)` along the generic route.
///
/// Near `t = 0` the defining integral is used. Since its integrand blows up
/// where `μ'` vanishes, the time axis is split into segments: where `μ'` is
/// small relative to `μ` the value is carried with `γ' = −a h²/μ²` instead,
/// and back again near zeros of `μ`. Each segment is integrated with Simpson
/// over node pairs plus a Gauss–Legendre remainder.
fn gamma_numeric(coeffs: &CoefficientSet, mu: &MuSolution, t: f64) -> Result<f64> {
    let h = mu.step();
    let below = ((t / h).floor() as usize).min(mu.t_grid.len() - 1);
    let last = (below + 1).min(mu.t_grid.len() - 1);
    let nodes = gamma_nodes(coeffs, mu, last)?;
    let ratio = |i: usize| -> Result<f64> {
        let (tau, sigma) = tau_sigma(coeffs, mu.t_grid[i])?;
        let scale = (4.0 * sigma).abs().sqrt() + 0.5 * tau.abs() + f64::MIN_POSITIVE;
        let p = mu.mu_prime[i].abs();
        Ok(p / (p + scale * mu.mu[i].abs()))
    };
    let boundary = |i: usize| nodes.a[i] * nodes.h[i].powi(2) / (mu.mu[i] * mu.mu_prime[i]);

    // Segments [start, end] with a mode flag; `true` means the direct form.
    let mut segments: Vec<(usize, usize, bool)> = Vec::new();
    let mut direct = true;
    let mut seg_start = 0;
    for i in 1..=below {
        let q = ratio(i)?;
        let flip = if direct { q < 0.3 } else { q > 0.7 };
        if flip && i - seg_start >= 2 {
            segments.push((seg_start, i, direct));
            seg_start = i;
            direct = !direct;
        }
    }
    if seg_start == 0 && direct {
        let (m, mp) = mu.eval(t)?;
        return gamma_from_definition(coeffs, mu, &nodes, t, m, mp);
    }

    let mut point_err = None;
    let mut gamma = 0.0;
    let mut step_segment = |from: usize, to_t: f64, direct: bool, first: bool, gamma: f64| -> Result<f64> {
        if first {
            let (m, mp) = mu.eval(to_t)?;
            return gamma_from_definition(coeffs, mu, &nodes, to_t, m, mp);
        }
        if direct {
            let integral = integrate_nodes(
                mu,
                from,
                to_t,
                |i| nodes.a[i] * nodes.sigma[i] * nodes.h[i].powi(2) / mu.mu_prime[i].powi(2),
                |s| match (mu.eval(s), tau_sigma(coeffs, s), h_factor(coeffs, s)) {
                    (Ok((_, p)), Ok((_, sigma)), Ok(hh)) => coeffs.a.value(s) * sigma * hh * hh / (p * p),
                    (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                        point_err = Some(e);
                        f64::NAN
                    }
                },
            )?;
            let (m, mp) = mu.eval(to_t)?;
            let f_end = coeffs.a.value(to_t) * h_factor(coeffs, to_t)?.powi(2) / (m * mp);
            Ok(gamma + f_end - boundary(from) - 4.0 * integral)
        } else {
            let integral = integrate_nodes(
                mu,
                from,
                to_t,
                |i| nodes.a[i] * nodes.h[i].powi(2) / mu.mu[i].powi(2),
                |s| match (mu.eval(s), h_factor(coeffs, s)) {
                    (Ok((m, _)), Ok(hh)) => coeffs.a.value(s) * hh * hh / (m * m),
                    (Err(e), _) | (_, Err(e)) => {
                        point_err = Some(e);
                        f64::NAN
                    }
                },
            )?;
            Ok(gamma - integral)
        }
    };
    for (k, &(from, to, dir)) in segments.iter().enumerate() {
        gamma = step_segment(from, mu.t_grid[to], dir, k == 0, gamma)?;
    }
    gamma = step_segment(seg_start, t, direct, false, gamma)?;
    if let Some(e) = point_err {
        return Err(e);
    }
    Ok(gamma)
}

/// Closed-form kernel of a built-in model, default window.
pub fn kernel_closed_form(coeffs: &CoefficientSet, t: f64) -> Result<KernelParams> {
    kernel_closed_form_with(coeffs, t, Window::FirstCaustic)
}

/// Closed-form kernels. With `S`, `C` as in [`mu_closed_form`]:
///
/// * Model 1: `α = (C/S + λ)/(2ω₀)`, `β = −1/(ω₀S)`, `γ = (C/S − λ)/(2ω₀)`,
///   `P = √(e^{λt}/(2πiω₀S))`;
/// * Model 2: same exponent, `P = √(e^{−λt}/(2πiω₀S))`;
/// * shifted: same exponent, `P = √(1/(2πiω₀S))`;
/// * Model 3: `α = e^{2λt}(C/S − λ)/(2ω₀)`, `β = −e^{λt}/(ω₀S)`,
///   `γ = (C/S + λ)/(2ω₀)`, `P = √(e^{λt}/(2πiω₀S))`;
/// * reduced oscillator: `α = γ = C/(2ω₀S)`, `β = −1/(ω₀S)`.
pub fn kernel_closed_form_with(coeffs: &CoefficientSet, t: f64, window: Window) -> Result<KernelParams> {
    check_kernel_time(t)?;
    let p = coeffs.builtin_params()?;
    let r: DampingRegime = p.regime();
    let (w0, l) = (p.omega0, p.lambda);
    let s = r.s(t);
    let c = r.c(t);
    let mut caustics = 0;
    if r.regime == Regime::Underdamped {
        let phase = r.omega * t;
        let sin = phase.sin();
        let nearest = (phase / PI).round();
        if sin.abs() < CAUSTIC_REL || (phase - nearest * PI).abs() < CAUSTIC_REL * PI.max(phase) {
            return Err(Error::Caustic { t, mu: w0 * s });
        }
        caustics = (phase / PI).floor() as u32;
        if caustics > 0 && window == Window::FirstCaustic {
            return Err(Error::OutsideWindow { t, limit: PI / r.omega });
        }
    }
    let cot = c / s;
    let (alpha, beta, gamma, growth, h) = match coeffs.kind() {
        ModelKind::Model1 => ((cot + l) / (2.0 * w0), -1.0 / (w0 * s), (cot - l) / (2.0 * w0), (l * t).exp(), (-l * t).exp()),
        ModelKind::Model2 => ((cot + l) / (2.0 * w0), -1.0 / (w0 * s), (cot - l) / (2.0 * w0), (-l * t).exp(), (l * t).exp()),
        ModelKind::Shifted => ((cot + l) / (2.0 * w0), -1.0 / (w0 * s), (cot - l) / (2.0 * w0), 1.0, 1.0),
        ModelKind::Model3 => (
            (2.0 * l * t).exp() * (cot - l) / (2.0 * w0),
            -(l * t).exp() / (w0 * s),
            (cot + l) / (2.0 * w0),
            (l * t).exp(),
            1.0,
        ),
        ModelKind::HarmonicReduced => (cot / (2.0 * w0), -1.0 / (w0 * s), cot / (2.0 * w0), 1.0, 1.0),
        ModelKind::Custom => return Err(Error::CustomModel),
    };
    let modulus = (growth / (2.0 * PI * w0 * s.abs())).sqrt();
    let prefactor = Complex64::from_polar(modulus, -0.25 * PI - 0.5 * PI * caustics as f64);
    Ok(KernelParams { t, alpha, beta, gamma, prefactor, h, caustics })
}

/// How [`kernel_at`] obtains the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    ClosedForm,
    /// Generic route with an RK4 solve of `μ` on `[0, t]`.
    Numeric { steps: usize },
}

impl Default for KernelSource {
    fn default() -> Self {
        KernelSource::Numeric { steps: 4096 }
    }
}

pub fn kernel_at(coeffs: &CoefficientSet, t: f64, source: KernelSource, window: Window) -> Result<KernelParams> {
    match source {
        KernelSource::ClosedForm => kernel_closed_form_with(coeffs, t, window),
        KernelSource::Numeric { steps } => {
            check_kernel_time(t)?;
            let mu = solve_mu_numeric(coeffs, t, steps)?;
            kernel_params_numeric_with(coeffs, &mu, t, window)
        }
    }
}

/// `G(x, y) = P exp(i(α x² + β xy + γ y²))`.
pub fn green_function(kp: &KernelParams, x: f64, y: f64) -> Complex64 {
    let phase = kp.alpha * x * x + kp.beta * x * y + kp.gamma * y * y;
    kp.prefactor * Complex64::from_polar(1.0, phase)
}

/// `|ω² − ω₀² sin²ωt − ω² cos²ωt + λ² sin²ωt|` with `ω² = ω₀² − λ²`.
pub fn damped_trig_identity_residual(omega0: f64, lambda: f64, t: f64) -> Result<f64> {
    let r = DampingRegime::classify(omega0, lambda);
    if r.regime != Regime::Underdamped {
        return Err(Error::NotUnderdamped { omega0, lambda });
    }
    let w = r.omega;
    let (s, c) = (w * t).sin_cos();
    Ok((w * w - omega0 * omega0 * s * s - w * w * c * c + lambda * lambda * s * s).abs())
}

/// `sin t / (A (A cos t + B sin t))`, an antiderivative of
/// `1/(A cos t + B sin t)²`.
pub fn inverse_square_antiderivative(a: f64, b: f64, t: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::InvalidParameter { name: "A", reason: "must be nonzero".into() });
    }
    let denom = a * t.cos() + b * t.sin();
    if denom.abs() < 1e-14 * (a.abs() + b.abs()) {
        return Err(Error::Pole { t });
    }
    Ok(t.sin() / (a * denom))
}
