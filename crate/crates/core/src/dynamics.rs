//! Wave packets on a uniform grid, propagated with the Gaussian Green
//! functions of [`crate::kernel`].
//!
//! Propagation is the trapezoid sum `ψ(x) = Σ_y G(x, y) χ(y) Δy`. It is
//! accurate once the kernel chirp is resolved by the grid, which holds for
//! `t ≳ 0.05` on the default `[−20, 20] × 2048` grid. Shorter times go
//! through [`propagate_gaussian_analytic`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_at, KernelParams, KernelSource, Window};
use crate::models::{builtin_model, CoefficientSet, ModelKind};
use crate::numerics::{derivative1, derivative2, trapezoid, CompensatedComplexSum};

/// `|ψ|` at either edge must stay below this fraction of `max|ψ|`.
pub const EDGE_DECAY: f64 = 1e-10;
/// Default time step of [`pde_residual`] snapshots.
pub const DEFAULT_TIME_STEP: f64 = 1e-4;
/// Momentum-space tails above this fraction of the peak count as aliasing.
pub const ALIASING_TAIL: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Uniform grid `x_k = x_min + kΔx`, `Δx = (x_max − x_min)/(n − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x_min: -20.0, x_max: 20.0, n: 2048 }
    }
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        let g = GridSpec { x_min, x_max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x_min.is_finite() {
            return Err(Error::NonFinite("x_min"));
        }
        if !self.x_max.is_finite() {
            return Err(Error::NonFinite("x_max"));
        }
        if self.x_min >= self.x_max {
            return Err(Error::InvalidParameter {
                name: "x_max",
                reason: format!("must exceed x_min = {}, got {}", self.x_min, self.x_max),
            });
        }
        if self.n < 256 || !self.n.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("must be a power of two >= 256, got {}", self.n),
            });
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }
}

/// Samples of `ψ(·, t)` on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveGrid {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl WaveGrid {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, t: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("wave function"));
        }
        Ok(WaveGrid { grid, values, t })
    }

    /// Samples `f` at the grid points.
    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: GridSpec, t: f64, f: F) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    /// `max(|ψ(x_min)|, |ψ(x_max)|) / max|ψ|`.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        self.values[0].norm().max(self.values[self.grid.n - 1].norm()) / peak
    }

    pub fn check_truncation(&self) -> Result<()> {
        let ratio = self.edge_ratio();
        if !(ratio < EDGE_DECAY) {
            return Err(Error::TruncationUnsafe { ratio, limit: EDGE_DECAY });
        }
        Ok(())
    }

    pub fn scaled(&self, w: Complex64) -> WaveGrid {
        WaveGrid { grid: self.grid, values: self.values.iter().map(|v| v * w).collect(), t: self.t }
    }

    /// `self + other` on identical grids.
    pub fn add(&self, other: &WaveGrid) -> Result<WaveGrid> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(WaveGrid { grid: self.grid, values, t: self.t })
    }

    /// `max_k |ψ_k − φ_k|`.
    pub fn sup_distance(&self, other: &WaveGrid) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// `(πs²)^{−1/4} exp(−(x − x0)²/(2s²) + i p0 x)`.
pub fn gaussian_value(x0: f64, p0: f64, s: f64, x: f64) -> Complex64 {
    let norm = (PI * s * s).powf(-0.25);
    let u = (x - x0) / s;
    Complex64::from_polar(norm * (-0.5 * u * u).exp(), p0 * x)
}

fn check_gaussian_args(x0: f64, p0: f64, s: f64) -> Result<()> {
    for (name, v) in [("x0", x0), ("p0", p0), ("s", s)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    if s <= 0.0 {
        return Err(Error::InvalidParameter { name: "s", reason: format!("must be > 0, got {s}") });
    }
    Ok(())
}

pub fn initial_gaussian(x0: f64, p0: f64, s: f64, grid: GridSpec) -> Result<WaveGrid> {
    check_gaussian_args(x0, p0, s)?;
    let w = WaveGrid::from_fn(grid, 0.0, |x| gaussian_value(x0, p0, s, x))?;
    w.check_truncation()?;
    Ok(w)
}

/// Parsed `gaussian:x0=..,p0=..,s=..` initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub x0: f64,
    pub p0: f64,
    pub s: f64,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        GaussianSpec { x0: 0.0, p0: 0.0, s: 1.0 }
    }
}

impl GaussianSpec {
    pub fn sample(&self, grid: GridSpec) -> Result<WaveGrid> {
        initial_gaussian(self.x0, self.p0, self.s, grid)
    }
}

impl fmt::Display for GaussianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gaussian:x0={},p0={},s={}", self.x0, self.p0, self.s)
    }
}

impl std::str::FromStr for GaussianSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter { name: "initial", reason };
        let body = text
            .trim()
            .strip_prefix("gaussian:")
            .ok_or_else(|| bad(format!("expected `gaussian:x0=..,p0=..,s=..`, got `{text}`")))?;
        let mut spec = GaussianSpec::default();
        let mut seen = [false; 3];
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            let v: f64 = value.trim().parse().map_err(|_| bad(format!("malformed number `{value}`")))?;
            let slot = match key.trim() {
                "x0" => 0,
                "p0" => 1,
                "s" => 2,
                other => return Err(bad(format!("unknown key `{other}`"))),
            };
            if seen[slot] {
                return Err(bad(format!("duplicate key `{}`", key.trim())));
            }
            seen[slot] = true;
            match slot {
                0 => spec.x0 = v,
                1 => spec.p0 = v,
                _ => spec.s = v,
            }
        }
        check_gaussian_args(spec.x0, spec.p0, spec.s)?;
        Ok(spec)
    }
}

/// Trapezoid sum of `G(x, y) χ(y)` over the grid for every grid `x`.
///
/// The per-point sum is compensated and runs left to right, so the result
/// does not depend on the number of worker threads.
pub fn propagate(kp: &KernelParams, chi: &WaveGrid) -> Result<WaveGrid> {
    let out = propagate_unchecked(kp, chi)?;
    out.check_truncation()?;
    Ok(out)
}

fn propagate_unchecked(kp: &KernelParams, chi: &WaveGrid) -> Result<WaveGrid> {
    chi.check_truncation()?;
    let g = chi.grid;
    let dy = g.dx();
    let ys = g.points();
    let n = g.n;
    // G(x, y) = P e^{iαx²} e^{iβxy} e^{iγy²}: fold the y-only factors in once.
    let weighted: Vec<Complex64> = ys
        .iter()
        .zip(&chi.values)
        .enumerate()
        .map(|(k, (&y, &v))| {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            v * Complex64::from_polar(w * dy, kp.gamma * y * y)
        })
        .collect();
    let values: Vec<Complex64> = ys
        .par_iter()
        .map(|&x| {
            let mut acc = CompensatedComplexSum::new();
            for (&y, &w) in ys.iter().zip(&weighted) {
                acc.add(w * Complex64::from_polar(1.0, kp.beta * x * y));
            }
            kp.prefactor * Complex64::from_polar(1.0, kp.alpha * x * x) * acc.value()
        })
        .collect();
    WaveGrid::new(g, values, chi.t + kp.t)
}

/// `exp(q x² + l x + c)` with complex coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexGaussian {
    pub quad: Complex64,
    pub lin: Complex64,
    pub constant: Complex64,
}

impl ComplexGaussian {
    pub fn value(&self, x: f64) -> Complex64 {
        (self.quad * x * x + self.lin * x + self.constant).exp()
    }

    /// Center of `|ψ|²`.
    pub fn center(&self) -> f64 {
        -self.lin.re / (2.0 * self.quad.re)
    }

    /// Standard deviation of `|ψ|²`.
    pub fn width(&self) -> f64 {
        (-1.0 / (4.0 * self.quad.re)).sqrt()
    }

    /// `∫|ψ|² dx` over the real line.
    pub fn squared_norm(&self) -> f64 {
        let q = self.quad.re;
        let l = self.lin.re;
        (PI / (-2.0 * q)).sqrt() * (2.0 * self.constant.re - l * l / (2.0 * q)).exp()
    }

    pub fn sample(&self, grid: GridSpec, t: f64) -> Result<WaveGrid> {
        WaveGrid::from_fn(grid, t, |x| self.value(x))
    }
}

/// Exact `∫ G(x, y) χ(y) dy` for the normalized Gaussian `χ` of
/// [`gaussian_value`], by completing the square in `y`.
pub fn propagate_gaussian_analytic(kp: &KernelParams, x0: f64, p0: f64, s: f64) -> Result<ComplexGaussian> {
    check_gaussian_args(x0, p0, s)?;
    let a = Complex64::new(1.0 / (2.0 * s * s), -kp.gamma);
    let b0 = Complex64::new(x0 / (s * s), p0);
    let c0 = -x0 * x0 / (2.0 * s * s);
    let norm = (PI * s * s).powf(-0.25);
    let amp = kp.prefactor * norm * (Complex64::new(PI, 0.0) / a).sqrt();
    Ok(ComplexGaussian {
        quad: I * kp.alpha - kp.beta * kp.beta / (4.0 * a),
        lin: I * b0 * kp.beta / (2.0 * a),
        constant: c0 + b0 * b0 / (4.0 * a) + amp.ln(),
    })
}

/// `∫|ψ|² dx` by the trapezoid rule.
pub fn squared_norm(w: &WaveGrid) -> f64 {
    let dens: Vec<f64> = w.values.iter().map(|v| v.norm_sqr()).collect();
    trapezoid(&dens, w.grid.dx())
}

/// Sup over interior points of `|iψ_t − (−aψ_xx + bx²ψ − i(cxψ_x + dψ))|`
/// divided by `max|ψ|`, from snapshots at `t − δ`, `t`, `t + δ`.
pub fn pde_residual(coeffs: &CoefficientSet, snapshots: [&WaveGrid; 3]) -> Result<f64> {
    let [before, mid, after] = snapshots;
    if before.grid != mid.grid || after.grid != mid.grid {
        return Err(Error::GridMismatch);
    }
    let delta = 0.5 * (after.t - before.t);
    if !(delta > 0.0) || ((mid.t - before.t) - (after.t - mid.t)).abs() > 1e-9 * delta.max(1e-300) {
        return Err(Error::InvalidParameter {
            name: "snapshots",
            reason: "times must be equally spaced and increasing".into(),
        });
    }
    let g = mid.grid;
    let t = mid.t;
    let (a, b, c, d) = (coeffs.a.value(t), coeffs.b.value(t), coeffs.c.value(t), coeffs.d.value(t));
    let psi_x = derivative1(&mid.values, g.dx());
    let psi_xx = derivative2(&mid.values, g.dx());
    let peak = mid.max_abs();
    if peak == 0.0 {
        return Ok(0.0);
    }
    let worst = (2..g.n - 2)
        .map(|k| {
            let x = g.x(k);
            let psi = mid.values[k];
            let psi_t = (after.values[k] - before.values[k]) / (2.0 * delta);
            let rhs = -a * psi_xx[k] + b * x * x * psi - I * (c * x * psi_x[k] + d * psi);
            (I * psi_t - rhs).norm()
        })
        .fold(0.0, f64::max);
    Ok(worst / peak)
}

/// Which gauge factor a [`GaugePhase`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeLabel {
    /// `f = iλt/2`
    G5,
    /// `f = −λx²/(2ω₀)`
    G10,
    Custom,
}

/// Gauge function `f(x, t)`; [`gauge_apply`] multiplies by `e^{if}`.
#[derive(Clone)]
pub struct GaugePhase {
    pub label: GaugeLabel,
    pub omega0: f64,
    pub lambda: f64,
    f: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
}

impl fmt::Debug for GaugePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugePhase")
            .field("label", &self.label)
            .field("omega0", &self.omega0)
            .field("lambda", &self.lambda)
            .finish_non_exhaustive()
    }
}

impl GaugePhase {
    /// `e^{if} = e^{−λt/2}`: Model 1 solutions to shifted-oscillator solutions.
    pub fn g5(lambda: f64) -> Self {
        GaugePhase {
            label: GaugeLabel::G5,
            omega0: f64::NAN,
            lambda,
            f: Arc::new(move |_, t| Complex64::new(0.0, 0.5 * lambda * t)),
        }
    }

    /// `e^{if} = e^{−iλx²/(2ω₀)}`: shifted-oscillator solutions to solutions
    /// of the reduced oscillator with frequency `ω`.
    pub fn g10(omega0: f64, lambda: f64) -> Self {
        GaugePhase {
            label: GaugeLabel::G10,
            omega0,
            lambda,
            f: Arc::new(move |x, _| Complex64::new(-lambda * x * x / (2.0 * omega0), 0.0)),
        }
    }

    pub fn custom<F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static>(f: F) -> Self {
        GaugePhase { label: GaugeLabel::Custom, omega0: f64::NAN, lambda: f64::NAN, f: Arc::new(f) }
    }

    pub fn f(&self, x: f64, t: f64) -> Complex64 {
        (self.f)(x, t)
    }

    /// Model whose solutions the gauge produces from solutions of `source`.
    pub fn target(&self, source: &CoefficientSet) -> Result<CoefficientSet> {
        let p = source.builtin_params()?;
        let kind = match (self.label, source.kind()) {
            (GaugeLabel::G5, ModelKind::Model1) => ModelKind::Shifted,
            (GaugeLabel::G10, ModelKind::Shifted) => ModelKind::HarmonicReduced,
            _ => {
                return Err(Error::InvalidParameter {
                    name: "gauge",
                    reason: format!("no known image of {} under {:?}", source.kind(), self.label),
                })
            }
        };
        builtin_model(kind, p.omega0, p.lambda)
    }
}

/// `ψ' = e^{if(x, t)} ψ`.
pub fn gauge_apply(phase: &GaugePhase, w: &WaveGrid) -> WaveGrid {
    let values = w
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * (I * phase.f(w.grid.x(k), w.t)).exp())
        .collect();
    WaveGrid { grid: w.grid, values, t: w.t }
}

/// Unitary transform `F[ψ](p) = (2π)^{−1/2} ∫ e^{−ipx} ψ(x) dx` onto `p_grid`
/// by direct trapezoid summation.
pub fn fourier_transform(w: &WaveGrid, p_grid: GridSpec) -> Result<WaveGrid> {
    p_grid.validate()?;
    let n = w.grid.n;
    let dx = w.grid.dx();
    let xs = w.grid.points();
    let scale = dx / (2.0 * PI).sqrt();
    let weighted: Vec<Complex64> = w
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * if k == 0 || k == n - 1 { 0.5 * scale } else { scale })
        .collect();
    let values = p_grid
        .points()
        .par_iter()
        .map(|&p| {
            let mut acc = CompensatedComplexSum::new();
            for (&x, &v) in xs.iter().zip(&weighted) {
                acc.add(v * Complex64::from_polar(1.0, -p * x));
            }
            acc.value()
        })
        .collect();
    WaveGrid::new(p_grid, values, w.t)
}

fn check_aliasing(w: &WaveGrid) -> Result<()> {
    let tail = w.edge_ratio();
    if !(tail <= ALIASING_TAIL) {
        return Err(Error::Aliasing { tail, limit: ALIASING_TAIL });
    }
    Ok(())
}

/// `max_p |F[U₁(t)χ](p) − U₂(t; −λ) F[χ](p)|`.
///
/// `U₁` is Model 1 with damping `λ`, `U₂` is Model 2 with damping `−λ`,
/// and `F` is [`fourier_transform`] onto a momentum grid with the same
/// layout as `χ`'s grid.
pub fn fourier_duality_check(omega0: f64, lambda: f64, t: f64, chi: &WaveGrid, source: KernelSource) -> Result<f64> {
    let p_grid = chi.grid;
    let chi_p = fourier_transform(chi, p_grid)?;
    check_aliasing(&chi_p)?;
    if t == 0.0 {
        return chi_p.sup_distance(&fourier_transform(chi, p_grid)?);
    }
    let m1 = builtin_model(ModelKind::Model1, omega0, lambda)?;
    let m2 = CoefficientSet::with_signed_lambda(ModelKind::Model2, omega0, -lambda)?;
    let m2_source = match source {
        KernelSource::ClosedForm => KernelSource::default(),
        s => s,
    };
    let k1 = kernel_at(&m1, t, source, Window::FirstCaustic)?;
    let k2 = kernel_at(&m2, t, m2_source, Window::FirstCaustic)?;
    let left = fourier_transform(&propagate(&k1, chi)?, p_grid)?;
    check_aliasing(&left)?;
    let right = propagate(&k2, &chi_p)?;
    left.sup_distance(&right)
}

/// `max_x |U(t₁ + t₂)χ − U(t₂)U(t₁)χ|` for autonomous coefficients.
pub fn composition_check(coeffs: &CoefficientSet, t1: f64, t2: f64, chi: &WaveGrid, source: KernelSource) -> Result<f64> {
    if !coeffs.is_autonomous() {
        return Err(Error::NonAutonomous);
    }
    let evolve = |w: &WaveGrid, t: f64| -> Result<WaveGrid> {
        if t == 0.0 {
            return Ok(w.clone());
        }
        propagate(&kernel_at(coeffs, t, source, Window::FirstCaustic)?, w)
    };
    let direct = evolve(chi, t1 + t2)?;
    let stepped = evolve(&evolve(chi, t1)?, t2)?;
    direct.sup_distance(&stepped)
}

/// Sup distance between the Gaussian propagated for a short time `t` and the
/// initial Gaussian, both sampled on `grid`.
pub fn delta_limit_check(coeffs: &CoefficientSet, t: f64, gaussian: GaussianSpec, grid: GridSpec) -> Result<f64> {
    let kp = kernel_at(coeffs, t, KernelSource::default(), Window::FirstCaustic)?;
    let evolved = propagate_gaussian_analytic(&kp, gaussian.x0, gaussian.p0, gaussian.s)?.sample(grid, t)?;
    evolved.sup_distance(&gaussian.sample(grid)?)
}

/// `d/dt log‖ψ‖²` measured from two propagations `δ` apart.
pub fn norm_growth_rate(coeffs: &CoefficientSet, chi: &WaveGrid, t: f64, delta: f64, source: KernelSource) -> Result<f64> {
    let n0 = squared_norm(&propagate(&kernel_at(coeffs, t, source, Window::FirstCaustic)?, chi)?);
    let n1 = squared_norm(&propagate(&kernel_at(coeffs, t + delta, source, Window::FirstCaustic)?, chi)?);
    Ok((n1 / n0).ln() / delta)
}

/// Propagated snapshots at `t − δ`, `t`, `t + δ` for [`pde_residual`].
pub fn snapshots(coeffs: &CoefficientSet, chi: &WaveGrid, t: f64, delta: f64, source: KernelSource) -> Result<[WaveGrid; 3]> {
    let at = |s: f64| -> Result<WaveGrid> { propagate(&kernel_at(coeffs, s, source, Window::FirstCaustic)?, chi) };
    Ok([at(t - delta)?, at(t)?, at(t + delta)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_closed_form;

    fn model(kind: ModelKind, l: f64) -> CoefficientSet {
        builtin_model(kind, 1.0, l).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(-20.0, 20.0, 2048).is_ok());
        assert!(GridSpec::new(-20.0, 20.0, 128).is_err());
        assert!(GridSpec::new(-20.0, 20.0, 1000).is_err());
        assert!(GridSpec::new(1.0, -1.0, 256).is_err());
        let g = GridSpec::default();
        assert!((g.dx() - 40.0 / 2047.0).abs() < 1e-15);
        assert_eq!(g.x(2047), 20.0);
    }

    #[test]
    fn initial_gaussian_is_normalized() {
        let w = initial_gaussian(0.0, 0.0, 1.0, GridSpec::default()).unwrap();
        assert!((squared_norm(&w) - 1.0).abs() < 1e-10);
        let wide = initial_gaussian(0.0, 0.0, 8.0, GridSpec::default());
        assert!(matches!(wide, Err(Error::TruncationUnsafe { .. })));
    }

    #[test]
    fn squared_norm_homogeneity() {
        let w = initial_gaussian(0.3, 1.0, 0.8, GridSpec::default()).unwrap();
        let zero = w.scaled(Complex64::new(0.0, 0.0));
        assert_eq!(squared_norm(&zero), 0.0);
        let n1 = squared_norm(&w);
        assert!((squared_norm(&w.scaled(Complex64::new(2.0, 0.0))) - 4.0 * n1).abs() < 1e-13);
    }

    #[test]
    fn gaussian_spec_parsing() {
        let g: GaussianSpec = "gaussian:x0=1,p0=-2.5,s=0.5".parse().unwrap();
        assert_eq!(g, GaussianSpec { x0: 1.0, p0: -2.5, s: 0.5 });
        assert_eq!(g.to_string().parse::<GaussianSpec>().unwrap(), g);
        assert!("gauss:x0=1".parse::<GaussianSpec>().is_err());
        assert!("gaussian:x0=1,s=-1".parse::<GaussianSpec>().is_err());
        assert!("gaussian:x0=1,q=2".parse::<GaussianSpec>().is_err());
    }

    #[test]
    fn quadrature_matches_analytic_gaussian() {
        let kp = kernel_closed_form(&model(ModelKind::Model1, 0.6), 1.0).unwrap();
        let chi = initial_gaussian(0.5, -0.7, 0.9, GridSpec::default()).unwrap();
        let numeric = propagate(&kp, &chi).unwrap();
        let exact = propagate_gaussian_analytic(&kp, 0.5, -0.7, 0.9).unwrap().sample(chi.grid, 1.0).unwrap();
        assert!(numeric.sup_distance(&exact).unwrap() < 1e-6);
        assert_eq!(numeric.t, 1.0);
    }

    #[test]
    fn ground_state_is_stationary_without_damping() {
        let t = 2.3;
        let kp = kernel_closed_form(&model(ModelKind::Model1, 0.0), t).unwrap();
        let g = propagate_gaussian_analytic(&kp, 0.0, 0.0, 1.0).unwrap();
        let phase = Complex64::from_polar(1.0, -0.5 * t);
        for x in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let expected = gaussian_value(0.0, 0.0, 1.0, x) * phase;
            assert!((g.value(x) - expected).norm() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn coherent_state_center_follows_cosine() {
        for t in [0.3, 1.0, 2.0, 2.9] {
            let kp = kernel_closed_form(&model(ModelKind::Model1, 0.0), t).unwrap();
            let g = propagate_gaussian_analytic(&kp, 1.0, 0.0, 1.0).unwrap();
            assert!((g.center() - t.cos()).abs() < 1e-12);
            assert!((g.width() - 0.5_f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_laws() {
        let chi = initial_gaussian(0.0, 0.0, 1.0, GridSpec::default()).unwrap();
        for (kind, expected) in [(ModelKind::Model1, 0.6_f64.exp()), (ModelKind::Model2, (-0.6_f64).exp()), (ModelKind::Shifted, 1.0)] {
            let kp = kernel_closed_form(&model(kind, 0.6), 1.0).unwrap();
            let n = squared_norm(&propagate(&kp, &chi).unwrap());
            assert!((n / expected - 1.0).abs() < 1e-3, "{kind}: {n}");
            let analytic = propagate_gaussian_analytic(&kp, 0.0, 0.0, 1.0).unwrap().squared_norm();
            assert!((analytic / expected - 1.0).abs() < 1e-12, "{kind}: {analytic}");
        }
    }

    #[test]
    fn pde_residual_of_exact_ground_state() {
        let coeffs = model(ModelKind::HarmonicReduced, 0.0);
        let snap = |t: f64| {
            WaveGrid::from_fn(GridSpec::default(), t, |x| gaussian_value(0.0, 0.0, 1.0, x) * Complex64::from_polar(1.0, -0.5 * t))
                .unwrap()
        };
        let (a, b, c) = (snap(1.0 - 1e-4), snap(1.0), snap(1.0 + 1e-4));
        assert!(pde_residual(&coeffs, [&a, &b, &c]).unwrap() < 1e-6);
    }

    #[test]
    fn pde_residual_detects_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut noise = |t: f64| {
            let values = (0..256).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            WaveGrid::new(GridSpec::new(-20.0, 20.0, 256).unwrap(), values, t).unwrap()
        };
        let (a, b, c) = (noise(0.9999), noise(1.0), noise(1.0001));
        assert!(pde_residual(&model(ModelKind::Model1, 0.6), [&a, &b, &c]).unwrap() > 1.0);
    }

    #[test]
    fn pde_residual_rejects_mismatched_grids() {
        let a = initial_gaussian(0.0, 0.0, 1.0, GridSpec::default()).unwrap();
        let b = initial_gaussian(0.0, 0.0, 1.0, GridSpec::new(-20.0, 20.0, 4096).unwrap()).unwrap();
        assert_eq!(pde_residual(&model(ModelKind::Model1, 0.6), [&a, &b, &a]), Err(Error::GridMismatch));
    }

    #[test]
    fn gauge_factors() {
        let mut w = initial_gaussian(0.2, 0.4, 1.0, GridSpec::default()).unwrap();
        w.t = 1.5;
        let g5 = gauge_apply(&GaugePhase::g5(0.6), &w);
        assert!((squared_norm(&g5) / squared_norm(&w) - (-0.9_f64).exp()).abs() < 1e-14);
        let g10 = gauge_apply(&GaugePhase::g10(1.0, 0.6), &w);
        for (a, b) in g10.values.iter().zip(&w.values) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        let k = 1000;
        let x = w.grid.x(k);
        let expected = w.values[k] * Complex64::from_polar(1.0, -0.6 * x * x / 2.0);
        assert!((g10.values[k] - expected).norm() < 1e-15);
        assert_eq!(GaugePhase::g5(0.6).target(&model(ModelKind::Model1, 0.6)).unwrap().kind(), ModelKind::Shifted);
        assert!(GaugePhase::g10(1.0, 0.6).target(&model(ModelKind::Model1, 0.6)).is_err());
    }

    #[test]
    fn fourier_transform_of_gaussian() {
        let w = initial_gaussian(0.0, 1.5, 1.0, GridSpec::default()).unwrap();
        let f = fourier_transform(&w, GridSpec::default()).unwrap();
        // F of a normalized Gaussian centered at p0 with unit width.
        let expected = WaveGrid::from_fn(GridSpec::default(), 0.0, |p| gaussian_value(1.5, 0.0, 1.0, p)).unwrap();
        assert!(f.sup_distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn fourier_duality_trivial_cases() {
        let chi = initial_gaussian(0.0, 0.0, 1.0, GridSpec::default()).unwrap();
        assert!(fourier_duality_check(1.0, 0.6, 0.0, &chi, KernelSource::ClosedForm).unwrap() <= 1e-12);
        assert!(fourier_duality_check(1.0, 0.0, 1.0, &chi, KernelSource::ClosedForm).unwrap() <= 1e-6);
    }

    #[test]
    fn composition_guards() {
        let chi = initial_gaussian(0.0, 0.0, 1.0, GridSpec::default()).unwrap();
        let m1 = model(ModelKind::Model1, 0.6);
        assert!(composition_check(&m1, 0.4, 0.0, &chi, KernelSource::ClosedForm).unwrap() <= 1e-12);
        assert_eq!(
            composition_check(&model(ModelKind::Model3, 0.6), 0.4, 0.4, &chi, KernelSource::ClosedForm),
            Err(Error::NonAutonomous)
        );
    }
}
