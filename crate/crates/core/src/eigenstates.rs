//! Stationary states of the shifted oscillator
//! `H = (ω₀/2)(p² + x²) − (λ/2)(px + xp)`, its ladder operators, and the
//! eigenfunction expansion of the Green function with Mehler resummation.
//!
//! `φ_n(x) = (ω/ω₀)^{1/4} e^{iλx²/(2ω₀)} h_n(x√(ω/ω₀))`, where `h_n` are the
//! orthonormal Hermite functions `h_n(ξ) = (2ⁿ n! √π)^{−1/2} e^{−ξ²/2} H_n(ξ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{GridSpec, WaveGrid};
use crate::error::{Error, Result};
use crate::models::{CoefficientSet, DampingRegime, Regime};
use crate::numerics::{derivative1, derivative2, trapezoid_complex, CompensatedComplexSum};

/// Largest degree accepted by [`hermite`].
pub const HERMITE_MAX_DEGREE: usize = 400;
/// Relative Parseval defect above which [`expansion_coefficients`] fails.
pub const PARSEVAL_LIMIT: f64 = 1e-6;
/// Default Abel regularization of the expansion kernel.
pub const DEFAULT_EPS: f64 = 1e-3;

const RESCALE: f64 = 1e200;

/// Hermite polynomials `H_0..H_n` at one point.
///
/// Values are kept as `mantissa · e^{log_scale}`, so degrees whose plain
/// recurrence would overflow are still represented.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteEval {
    pub xi: f64,
    pub mantissas: Vec<f64>,
    pub log_scales: Vec<f64>,
}

impl HermiteEval {
    pub fn new(n: usize, xi: f64) -> Self {
        let mut mantissas = Vec::with_capacity(n + 1);
        let mut log_scales = Vec::with_capacity(n + 1);
        let (mut prev, mut cur, mut log_scale) = (0.0, 1.0, 0.0);
        mantissas.push(cur);
        log_scales.push(log_scale);
        for k in 0..n {
            let next = 2.0 * xi * cur - 2.0 * k as f64 * prev;
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE {
                cur /= RESCALE;
                prev /= RESCALE;
                log_scale += RESCALE.ln();
            }
            mantissas.push(cur);
            log_scales.push(log_scale);
        }
        HermiteEval { xi, mantissas, log_scales }
    }

    pub fn degree(&self) -> usize {
        self.mantissas.len() - 1
    }

    /// `H_k(ξ)`; infinite when it exceeds the `f64` range.
    pub fn value(&self, k: usize) -> f64 {
        self.mantissas[k] * self.log_scales[k].exp()
    }
}

/// `H_n(ξ)` by the three-term recurrence `H_{k+1} = 2ξH_k − 2kH_{k−1}`.
pub fn hermite(n: usize, xi: f64) -> Result<f64> {
    if n > HERMITE_MAX_DEGREE {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("must be <= {HERMITE_MAX_DEGREE}, got {n}"),
        });
    }
    if !xi.is_finite() {
        return Err(Error::NonFinite("xi"));
    }
    let v = HermiteEval::new(n, xi).value(n);
    if !v.is_finite() {
        return Err(Error::NonFinite("hermite value"));
    }
    Ok(v)
}

/// Orthonormal Hermite functions `h_0(ξ), h_1(ξ), …` by the stable recurrence
/// `h_{k+1} = √(2/(k+1)) ξ h_k − √(k/(k+1)) h_{k−1}`.
///
/// The Gaussian factor is carried as a separate exponent so that large `|ξ|`
/// does not underflow before the polynomial part has grown.
#[derive(Debug, Clone)]
pub struct HermiteFunctions {
    xi: f64,
    k: usize,
    prev: f64,
    cur: f64,
    log_scale: f64,
}

impl HermiteFunctions {
    pub fn new(xi: f64) -> Self {
        HermiteFunctions { xi, k: 0, prev: 0.0, cur: 1.0, log_scale: -0.5 * xi * xi - 0.25 * PI.ln() }
    }
}

impl Iterator for HermiteFunctions {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur * self.log_scale.exp();
        let k = self.k as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * self.xi * self.cur - (k / (k + 1.0)).sqrt() * self.prev;
        self.prev = self.cur;
        self.cur = next;
        if self.cur.abs() > RESCALE {
            self.cur /= RESCALE;
            self.prev /= RESCALE;
            self.log_scale += RESCALE.ln();
        }
        self.k += 1;
        Some(out)
    }
}

pub fn hermite_functions(n_max: usize, xi: f64) -> Vec<f64> {
    HermiteFunctions::new(xi).take(n_max + 1).collect()
}

/// Shifted oscillator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedOscillator {
    pub omega0: f64,
    pub lambda: f64,
    pub omega: f64,
}

impl ShiftedOscillator {
    /// Underdamped parameters with `ω = √(ω₀² − λ²)`.
    pub fn new(omega0: f64, lambda: f64) -> Result<Self> {
        if !omega0.is_finite() {
            return Err(Error::NonFinite("omega0"));
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("lambda"));
        }
        if omega0 <= 0.0 {
            return Err(Error::InvalidParameter { name: "omega0", reason: format!("must be > 0, got {omega0}") });
        }
        let r = DampingRegime::classify(omega0, lambda);
        if r.regime != Regime::Underdamped {
            return Err(Error::NotUnderdamped { omega0, lambda });
        }
        Ok(ShiftedOscillator { omega0, lambda, omega: r.omega })
    }

    /// Parameters with `ω` chosen freely; the eigenfunction formulas are
    /// then evaluated as written, which isolates the `λ`-dependence.
    pub fn with_omega(omega0: f64, lambda: f64, omega: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega > 0.0 && lambda.is_finite() && omega0.is_finite() && omega.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("need finite omega0 > 0 and omega > 0, got ({omega0}, {omega})"),
            });
        }
        Ok(ShiftedOscillator { omega0, lambda, omega })
    }

    /// `ξ = x√(ω/ω₀)`.
    pub fn xi(&self, x: f64) -> f64 {
        x * (self.omega / self.omega0).sqrt()
    }

    /// Unimodular gauge factor `e^{iλx²/(2ω₀)}`.
    pub fn chirp(&self, x: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.lambda * x * x / (2.0 * self.omega0))
    }

    pub fn state(&self, n: usize) -> ShiftedEigenstate {
        ShiftedEigenstate { n, osc: *self }
    }

    /// `φ_0..φ_{n_max}` at `x`.
    pub fn states_at(&self, n_max: usize, x: f64) -> Vec<Complex64> {
        let c = (self.omega / self.omega0).powf(0.25) * self.chirp(x);
        HermiteFunctions::new(self.xi(x)).take(n_max + 1).map(|h| c * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedEigenstate {
    pub n: usize,
    pub osc: ShiftedOscillator,
}

impl ShiftedEigenstate {
    /// `|C_n| = (ω/ω₀)^{1/4} (2ⁿ n! √π)^{−1/2}`, with `C_n` real positive.
    pub fn normalization(&self) -> f64 {
        let log_fact: f64 = (1..=self.n).map(|k| (k as f64).ln()).sum();
        let log = 0.25 * (self.osc.omega / self.osc.omega0).ln()
            - 0.5 * (self.n as f64 * 2.0_f64.ln() + log_fact + 0.5 * PI.ln());
        log.exp()
    }

    pub fn sample(&self, grid: GridSpec) -> Result<WaveGrid> {
        WaveGrid::from_fn(grid, 0.0, |x| eigenstate_value(self, x))
    }
}

pub fn eigenstate_value(state: &ShiftedEigenstate, x: f64) -> Complex64 {
    let osc = state.osc;
    let h = HermiteFunctions::new(osc.xi(x)).nth(state.n).expect("infinite iterator");
    (osc.omega / osc.omega0).powf(0.25) * osc.chirp(x) * h
}

/// `E_n = ω(n + ½)`.
pub fn energy(n: usize, omega: f64) -> f64 {
    omega * (n as f64 + 0.5)
}

/// Expansion coefficients with their Parseval bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub coefficients: Vec<Complex64>,
    pub norm2: f64,
    /// `|Σ|c_n|² − ‖χ‖²| / ‖χ‖²`.
    pub parseval_defect: f64,
}

impl Expansion {
    /// `Σ c_n φ_n` on `grid`.
    pub fn reconstruct(&self, osc: &ShiftedOscillator, grid: GridSpec) -> Result<WaveGrid> {
        let n_max = self.coefficients.len() - 1;
        WaveGrid::from_fn(grid, 0.0, |x| {
            osc.states_at(n_max, x).iter().zip(&self.coefficients).map(|(p, c)| p * c).sum()
        })
    }
}

/// `c_n = ∫ φ_n*(y) χ(y) dy` by the trapezoid rule, `n ≤ n_max`.
pub fn expansion_coefficients(osc: &ShiftedOscillator, chi: &WaveGrid, n_max: usize) -> Result<Expansion> {
    chi.check_truncation()?;
    let g = chi.grid;
    let rows: Vec<Vec<Complex64>> = g.points().iter().map(|&y| osc.states_at(n_max, y)).collect();
    let coefficients: Vec<Complex64> = (0..=n_max)
        .map(|n| {
            let integrand: Vec<Complex64> = rows.iter().zip(&chi.values).map(|(row, v)| row[n].conj() * v).collect();
            trapezoid_complex(&integrand, g.dx())
        })
        .collect();
    let norm2 = crate::dynamics::squared_norm(chi);
    let captured: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    let parseval_defect = (captured - norm2).abs() / norm2;
    if !(parseval_defect <= PARSEVAL_LIMIT) {
        return Err(Error::ParsevalDefect { defect: parseval_defect, limit: PARSEVAL_LIMIT, n_max });
    }
    Ok(Expansion { coefficients, norm2, parseval_defect })
}

fn check_radius(r: Complex64) -> Result<()> {
    let m = r.norm();
    if !(m < 1.0) {
        return Err(Error::RadiusTooLarge(m));
    }
    Ok(())
}

/// `Σ_{n≤N} H_n(x) H_n(y) rⁿ / (2ⁿ n!)`, summed through Hermite functions.
pub fn mehler_partial_sum(x: f64, y: f64, r: Complex64, n: usize) -> Result<Complex64> {
    check_radius(r)?;
    let mut acc = CompensatedComplexSum::new();
    let mut rn = Complex64::new(1.0, 0.0);
    for (hx, hy) in HermiteFunctions::new(x).zip(HermiteFunctions::new(y)).take(n + 1) {
        acc.add(rn * (hx * hy));
        rn *= r;
    }
    Ok(acc.value() * PI.sqrt() * (0.5 * (x * x + y * y)).exp())
}

/// `(1 − r²)^{−1/2} exp((2xyr − (x² + y²)r²)/(1 − r²))`.
pub fn mehler_closed(x: f64, y: f64, r: Complex64) -> Result<Complex64> {
    check_radius(r)?;
    let one_minus = 1.0 - r * r;
    Ok(((2.0 * x * y * r - (x * x + y * y) * r * r) / one_minus).exp() / one_minus.sqrt())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter { name: "eps", reason: format!("must be > 0, got {eps}") });
    }
    Ok(())
}

/// `Σ_{n≤N} e^{−iω(n+½)t} e^{−n·eps} φ_n(x) φ_n*(y)`.
pub fn expansion_kernel(osc: &ShiftedOscillator, x: f64, y: f64, t: f64, n: usize, eps: f64) -> Result<Complex64> {
    check_eps(eps)?;
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    let r = Complex64::new(-eps, -osc.omega * t).exp();
    let mut acc = CompensatedComplexSum::new();
    let mut rn = Complex64::new(1.0, 0.0);
    for (hx, hy) in HermiteFunctions::new(osc.xi(x)).zip(HermiteFunctions::new(osc.xi(y))).take(n + 1) {
        acc.add(rn * (hx * hy));
        rn *= r;
    }
    let prefactor = (osc.omega / osc.omega0).sqrt()
        * osc.chirp(x)
        * osc.chirp(y).conj()
        * Complex64::from_polar(1.0, -0.5 * osc.omega * t);
    Ok(prefactor * acc.value())
}

/// Terms needed for the Abel factor `e^{−N·eps}` to drop below `e^{−40}`.
pub fn terms_for_eps(eps: f64) -> usize {
    (40.0 / eps).ceil() as usize
}

/// One Richardson step `2K(eps/2) − K(eps)`, each with enough terms for its eps.
pub fn expansion_kernel_richardson(osc: &ShiftedOscillator, x: f64, y: f64, t: f64, eps: f64) -> Result<Complex64> {
    check_eps(eps)?;
    let coarse = expansion_kernel(osc, x, y, t, terms_for_eps(eps), eps)?;
    let fine = expansion_kernel(osc, x, y, t, terms_for_eps(0.5 * eps), 0.5 * eps)?;
    Ok(2.0 * fine - coarse)
}

/// `a = (α + iβ)x + γ∂ₓ`, `a† = (α − iβ)x − γ∂ₓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderOperators {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl LadderOperators {
    /// `α = √(ω/(2ω₀))`, `β = −λ/√(2ωω₀)`, `γ = √(ω₀/(2ω))`.
    pub fn new(osc: &ShiftedOscillator) -> Self {
        LadderOperators {
            alpha: (osc.omega / (2.0 * osc.omega0)).sqrt(),
            beta: -osc.lambda / (2.0 * osc.omega * osc.omega0).sqrt(),
            gamma: (osc.omega0 / (2.0 * osc.omega)).sqrt(),
            omega: osc.omega,
        }
    }

    /// Residuals of `2αγ = 1`, `ω(α² + β²) = ω₀/2`, `ωγ² = ω₀/2`, `ωβγ = −λ/2`.
    pub fn constraint_residuals(&self, osc: &ShiftedOscillator) -> [f64; 4] {
        let w = self.omega;
        [
            (2.0 * self.alpha * self.gamma - 1.0).abs(),
            (w * (self.alpha.powi(2) + self.beta.powi(2)) - 0.5 * osc.omega0).abs(),
            (w * self.gamma.powi(2) - 0.5 * osc.omega0).abs(),
            (w * self.beta * self.gamma + 0.5 * osc.lambda).abs(),
        ]
    }
}

/// `aψ` (`lower = true`) or `a†ψ` with fourth-order central differences.
pub fn ladder_apply(op: &LadderOperators, lower: bool, w: &WaveGrid) -> WaveGrid {
    let d = derivative1(&w.values, w.grid.dx());
    let (xc, dc) = if lower {
        (Complex64::new(op.alpha, op.beta), op.gamma)
    } else {
        (Complex64::new(op.alpha, -op.beta), -op.gamma)
    };
    let values = w.values.iter().zip(&d).enumerate().map(|(k, (v, dv))| xc * w.grid.x(k) * v + dc * dv).collect();
    WaveGrid { grid: w.grid, values, t: w.t }
}

/// `max|(aa† − a†a)ψ − ψ|` over points at least 4 samples from the edges.
pub fn commutator_residual(op: &LadderOperators, w: &WaveGrid) -> f64 {
    let aad = ladder_apply(op, true, &ladder_apply(op, false, w));
    let ada = ladder_apply(op, false, &ladder_apply(op, true, w));
    let n = w.grid.n;
    (4..n - 4).map(|k| (aad.values[k] - ada.values[k] - w.values[k]).norm()).fold(0.0, f64::max)
}

/// `Hψ = −aψ'' + bx²ψ − i(cxψ' + dψ)` on the grid at time `w.t`.
pub fn apply_hamiltonian(coeffs: &CoefficientSet, w: &WaveGrid) -> WaveGrid {
    let t = w.t;
    let (a, b, c, d) = (coeffs.a.value(t), coeffs.b.value(t), coeffs.c.value(t), coeffs.d.value(t));
    let h = w.grid.dx();
    let d1 = derivative1(&w.values, h);
    let d2 = derivative2(&w.values, h);
    let i = Complex64::new(0.0, 1.0);
    let values = (0..w.grid.n)
        .map(|k| {
            let x = w.grid.x(k);
            -a * d2[k] + b * x * x * w.values[k] - i * (c * x * d1[k] + d * w.values[k])
        })
        .collect();
    WaveGrid { grid: w.grid, values, t }
}

/// `⟨ψ, Hψ⟩ / ⟨ψ, ψ⟩` with trapezoid inner products.
pub fn rayleigh_quotient(coeffs: &CoefficientSet, w: &WaveGrid) -> Complex64 {
    let hw = apply_hamiltonian(coeffs, w);
    inner(w, &hw) / inner(w, w)
}

/// `⟨ψ, (ω/2)(aa† + a†a)ψ⟩ / ⟨ψ, ψ⟩`.
pub fn ladder_rayleigh_quotient(op: &LadderOperators, w: &WaveGrid) -> Complex64 {
    let aad = ladder_apply(op, true, &ladder_apply(op, false, w));
    let ada = ladder_apply(op, false, &ladder_apply(op, true, w));
    let sum = aad.add(&ada).expect("same grid");
    0.5 * op.omega * inner(w, &sum) / inner(w, w)
}

/// Trapezoid `∫ φ* ψ dx`.
pub fn inner(phi: &WaveGrid, psi: &WaveGrid) -> Complex64 {
    let integrand: Vec<Complex64> = phi.values.iter().zip(&psi.values).map(|(a, b)| a.conj() * b).collect();
    trapezoid_complex(&integrand, phi.grid.dx())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{green_function, kernel_closed_form};
    use crate::models::{builtin_model, ModelKind};

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.7).unwrap(), 1.0);
        assert_eq!(hermite(1, 0.7).unwrap(), 1.4);
        assert_eq!(hermite(2, 1.0).unwrap(), 2.0);
        assert_eq!(hermite(3, 1.0).unwrap(), -4.0);
        // H_6(0) = −6!/3! = −120
        assert_eq!(hermite(6, 0.0).unwrap(), -120.0);
        assert!(hermite(401, 0.0).is_err());
        let big = HermiteEval::new(400, 3.0);
        assert!(big.log_scales[400] > 0.0);
    }

    #[test]
    fn hermite_functions_match_polynomials() {
        for xi in [-2.5, 0.0, 0.3, 4.0] {
            let h = hermite_functions(20, xi);
            for (n, hn) in h.iter().enumerate() {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                let expected = hermite(n, xi).unwrap() * (-0.5 * xi * xi).exp()
                    / (2.0_f64.powi(n as i32) * fact * PI.sqrt()).sqrt();
                assert!((hn - expected).abs() < 1e-12 * (1.0 + expected.abs()), "n={n} xi={xi}");
            }
        }
        // Far tails do not underflow prematurely.
        let far = hermite_functions(2000, 45.0);
        assert!(far[2000] != 0.0 && far[2000].is_finite());
    }

    #[test]
    fn ground_state_without_damping() {
        let osc = ShiftedOscillator::new(1.0, 0.0).unwrap();
        for x in [-1.0, 0.0, 0.5, 2.0] {
            let v = eigenstate_value(&osc.state(0), x);
            assert!((v - Complex64::new(PI.powf(-0.25) * (-0.5 * x * x).exp(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn modulus_is_independent_of_lambda() {
        let a = ShiftedOscillator::with_omega(1.0, 0.6, 0.8).unwrap();
        let b = ShiftedOscillator::with_omega(1.0, 0.0, 0.8).unwrap();
        for x in [-2.0, 0.1, 1.7] {
            let (va, vb) = (eigenstate_value(&a.state(4), x), eigenstate_value(&b.state(4), x));
            assert!((va.norm() - vb.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn normalization_and_orthogonality() {
        let osc = ShiftedOscillator::new(1.0, 0.6).unwrap();
        let grid = GridSpec::new(-20.0, 20.0, 4096).unwrap();
        let states: Vec<WaveGrid> = (0..=10).map(|n| osc.state(n).sample(grid).unwrap()).collect();
        assert!((inner(&states[5], &states[5]).re - 1.0).abs() < 1e-8);
        for n in 0..=10 {
            for m in 0..=10 {
                let expected = if n == m { 1.0 } else { 0.0 };
                assert!((inner(&states[n], &states[m]) - expected).norm() < 1e-7);
            }
        }
        let c3 = osc.state(3).normalization();
        let xi = osc.xi(0.9);
        let direct = c3 * osc.chirp(0.9) * (-0.5 * xi * xi).exp() * hermite(3, xi).unwrap();
        assert!((direct - eigenstate_value(&osc.state(3), 0.9)).norm() < 1e-14);
    }

    #[test]
    fn energies() {
        assert!((energy(0, 0.8) - 0.4).abs() < 1e-15);
        assert_eq!(energy(1, 1.0), 1.5);
        for n in 0..20 {
            assert!((energy(n + 1, 0.8) - energy(n, 0.8) - 0.8).abs() < 1e-14);
        }
    }

    #[test]
    fn expansion_examples() {
        let osc = ShiftedOscillator::new(1.0, 0.6).unwrap();
        let grid = GridSpec::default();
        let phi3 = osc.state(3).sample(grid).unwrap();
        let e = expansion_coefficients(&osc, &phi3, 10).unwrap();
        for (n, c) in e.coefficients.iter().enumerate() {
            assert!((c - if n == 3 { 1.0 } else { 0.0 }).norm() < 1e-8);
        }
        let s = 0.5_f64.sqrt();
        let mix = osc.state(0).sample(grid).unwrap().scaled(s.into()).add(&osc.state(1).sample(grid).unwrap().scaled(s.into())).unwrap();
        let e = expansion_coefficients(&osc, &mix, 8).unwrap();
        assert!((e.coefficients[0] - s).norm() < 1e-10 && (e.coefficients[1] - s).norm() < 1e-10);
        // A four-term expansion misses most of a displaced state.
        let displaced = crate::dynamics::initial_gaussian(3.0, 0.0, 1.0, grid).unwrap();
        assert!(matches!(expansion_coefficients(&osc, &displaced, 3), Err(Error::ParsevalDefect { .. })));
    }

    #[test]
    fn mismatched_gaussian_reconstruction() {
        let osc = ShiftedOscillator::new(1.0, 0.6).unwrap();
        let grid = GridSpec::default();
        let chi = crate::dynamics::initial_gaussian(0.0, 0.0, 1.3, grid).unwrap();
        let e = expansion_coefficients(&osc, &chi, 64).unwrap();
        let rebuilt = e.reconstruct(&osc, grid).unwrap();
        assert!(rebuilt.sup_distance(&chi).unwrap() <= 1e-6);
    }

    #[test]
    fn mehler_examples() {
        assert!((mehler_partial_sum(0.4, -1.2, Complex64::new(0.0, 0.0), 10).unwrap() - 1.0).norm() < 1e-14);
        let half = Complex64::new(0.5, 0.0);
        assert!((mehler_partial_sum(0.0, 0.0, half, 200).unwrap() - 2.0 / 3.0_f64.sqrt()).norm() < 1e-14);
        let r = Complex64::new(0.9, 0.0);
        let exact = mehler_closed(1.0, -1.0, r).unwrap();
        assert!((mehler_partial_sum(1.0, -1.0, r, 200).unwrap() - exact).norm() < 1e-8);
        assert!(mehler_partial_sum(0.0, 0.0, Complex64::new(1.0, 0.0), 10).is_err());
    }

    #[test]
    fn expansion_kernel_rejects_bad_eps() {
        let osc = ShiftedOscillator::new(1.0, 0.6).unwrap();
        assert!(expansion_kernel(&osc, 0.0, 0.0, 1.0, 10, 0.0).is_err());
        assert!(expansion_kernel(&osc, 0.0, 0.0, 1.0, 10, -1e-3).is_err());
        let short = expansion_kernel(&osc, 3.0, -2.0, 1e-4, 4000, 1e-2).unwrap();
        assert!(short.re.is_finite() && short.im.is_finite());
    }

    #[test]
    fn abel_sum_at_quarter_period() {
        let osc = ShiftedOscillator::new(1.0, 0.0).unwrap();
        let t = PI / 2.0;
        let kp = kernel_closed_form(&builtin_model(ModelKind::Shifted, 1.0, 0.0).unwrap(), t).unwrap();
        let exact = green_function(&kp, 0.0, 0.0);
        let at_400 = (expansion_kernel(&osc, 0.0, 0.0, t, 400, 1e-3).unwrap() - exact).norm();
        // Truncating at N = 400 leaves an e^{−0.4} tail.
        assert!(at_400 > 5e-3);
        let at_2000 = (expansion_kernel(&osc, 0.0, 0.0, t, 2000, 1e-3).unwrap() - exact).norm();
        assert!(at_2000 <= 5e-3);
    }

    #[test]
    fn lambda_enters_through_chirp() {
        let a = ShiftedOscillator::with_omega(1.0, 0.6, 0.8).unwrap();
        let b = ShiftedOscillator::with_omega(1.0, 0.0, 0.8).unwrap();
        let (x, y, t) = (1.0, 2.0, 0.7);
        let ka = expansion_kernel(&a, x, y, t, 300, 0.05).unwrap();
        let kb = expansion_kernel(&b, x, y, t, 300, 0.05).unwrap();
        let expected = Complex64::from_polar(1.0, 0.6 * (x * x - y * y) / 2.0);
        assert!((ka / kb - expected).norm() < 1e-6);
    }

    #[test]
    fn ladder_constraints_and_ground_state() {
        let osc = ShiftedOscillator::new(1.0, 0.6).unwrap();
        let op = LadderOperators::new(&osc);
        assert!(op.constraint_residuals(&osc).iter().all(|r| *r < 1e-15));
        let phi0 = osc.state(0).sample(GridSpec::default()).unwrap();
        let residual = ladder_apply(&op, true, &phi0).max_abs();
        assert!(residual <= 1e-6, "{residual}");
    }

    #[test]
    fn rayleigh_quotients_match_spectrum() {
        let osc = ShiftedOscillator::new(1.0, 0.6).unwrap();
        let op = LadderOperators::new(&osc);
        let coeffs = builtin_model(ModelKind::Shifted, 1.0, 0.6).unwrap();
        let grid = GridSpec::new(-20.0, 20.0, 4096).unwrap();
        for n in 0..=8 {
            let phi = osc.state(n).sample(grid).unwrap();
            let e = energy(n, osc.omega);
            let rq = rayleigh_quotient(&coeffs, &phi);
            assert!((rq - e).norm() <= 1e-6, "n={n}: {rq}");
            assert!((ladder_rayleigh_quotient(&op, &phi) - e).norm() <= 1e-6, "n={n}");
        }
    }
}
