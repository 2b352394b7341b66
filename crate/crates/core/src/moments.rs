//! Expectation-value dynamics for `H = a p² + b x² + c px + d xp`.
//!
//! Brackets are the plain bilinear form `⟨A⟩ = ∫ ψ* A ψ dx`, without
//! dividing by `‖ψ‖²`, so `⟨1⟩` is the squared norm. With `d⟨A⟩/dt =
//! i⟨H†A − AH⟩` the quadratic moments, first moments and norm obey
//!
//! ```text
//! ⟨p²⟩'     = −(3c + d)⟨p²⟩ − 2b⟨px+xp⟩
//! ⟨x²⟩'     =  (c + 3d)⟨x²⟩ + 2a⟨px+xp⟩
//! ⟨px+xp⟩'  =  4a⟨p²⟩ − 4b⟨x²⟩ + (d − c)⟨px+xp⟩
//! ⟨x⟩'      =  2a⟨p⟩ + 2d⟨x⟩
//! ⟨p⟩'      = −2b⟨x⟩ − 2c⟨p⟩
//! ⟨1⟩'      =  (d − c)⟨1⟩
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::WaveGrid;
use crate::error::{Error, Result};
use crate::models::{DampingRegime, ModelKind, OperatorCoefficients, Regime};
use crate::numerics::{derivative1_order8, derivative2_order8, trapezoid};

/// Step-doubling error bound per unit time, relative to the largest component.
pub const MOMENT_ERROR_PER_UNIT_TIME: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentState {
    pub p2: f64,
    pub x2: f64,
    pub sym: f64,
    pub x1: f64,
    pub p1: f64,
    pub one: f64,
    pub t: f64,
}

impl MomentState {
    /// Moments of the unit-width ground-state Gaussian.
    pub fn ground_state() -> Self {
        MomentState { p2: 0.5, x2: 0.5, sym: 0.0, x1: 0.0, p1: 0.0, one: 1.0, t: 0.0 }
    }

    /// Moments of the normalized Gaussian `(πs²)^{−1/4} e^{−(x−x0)²/(2s²) + ip0x}`.
    pub fn gaussian(x0: f64, p0: f64, s: f64) -> Self {
        MomentState {
            p2: 1.0 / (2.0 * s * s) + p0 * p0,
            x2: 0.5 * s * s + x0 * x0,
            sym: 2.0 * x0 * p0,
            x1: x0,
            p1: p0,
            one: 1.0,
            t: 0.0,
        }
    }

    /// `[p2, x2, sym, x1, p1, one]`.
    pub fn to_array(&self) -> [f64; 6] {
        [self.p2, self.x2, self.sym, self.x1, self.p1, self.one]
    }

    pub fn from_array(v: [f64; 6], t: f64) -> Self {
        MomentState { p2: v[0], x2: v[1], sym: v[2], x1: v[3], p1: v[4], one: v[5], t }
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &MomentState) -> f64 {
        self.to_array().iter().zip(other.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `p2·x2 ≥ (sym/2)² + (one/2)²`, scaled by `one`: the Schrödinger
    /// uncertainty relation in unnormalized brackets.
    pub fn satisfies_uncertainty(&self, tol: f64) -> bool {
        self.one > 0.0 && self.p2 * self.x2 - 0.25 * (self.sym * self.sym + self.one * self.one) >= -tol * self.one * self.one
    }
}

/// Time derivative `[p2, x2, sym, x1, p1, one]'` at `t`.
pub fn moment_rhs_general(opc: &OperatorCoefficients, s: &MomentState, t: f64) -> [f64; 6] {
    let [a, b, c, d] = opc.at(t);
    [
        -(3.0 * c + d) * s.p2 - 2.0 * b * s.sym,
        (c + 3.0 * d) * s.x2 + 2.0 * a * s.sym,
        4.0 * a * s.p2 - 4.0 * b * s.x2 + (d - c) * s.sym,
        2.0 * a * s.p1 + 2.0 * d * s.x1,
        -2.0 * b * s.x1 - 2.0 * c * s.p1,
        (d - c) * s.one,
    ]
}

fn rk4_moments(opc: &OperatorCoefficients, s0: &MomentState, t_end: f64, steps: usize) -> Vec<MomentState> {
    let h = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = s0.to_array();
    let t0 = s0.t;
    out.push(MomentState::from_array(y, t0));
    let f = |t: f64, y: [f64; 6]| moment_rhs_general(opc, &MomentState::from_array(y, t), t);
    let axpy = |y: [f64; 6], k: [f64; 6], w: f64| {
        let mut r = y;
        for i in 0..6 {
            r[i] += w * k[i];
        }
        r
    };
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * h, axpy(y, k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, axpy(y, k2, 0.5 * h));
        let k4 = f(t + h, axpy(y, k3, h));
        for i in 0..6 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(MomentState::from_array(y, t0 + (n + 1) as f64 * h));
    }
    out
}

/// RK4 trajectory on `steps` uniform steps from `s0.t` to `s0.t + t_end`.
///
/// A second solve at twice the resolution bounds the error; the relative
/// estimate must stay below [`MOMENT_ERROR_PER_UNIT_TIME`] per unit time.
pub fn integrate_moments(opc: &OperatorCoefficients, s0: &MomentState, t_end: f64, steps: usize) -> Result<Vec<MomentState>> {
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::InvalidParameter { name: "t_end", reason: format!("must be finite and > 0, got {t_end}") });
    }
    if steps < 100 {
        return Err(Error::InvalidParameter { name: "steps", reason: format!("must be >= 100, got {steps}") });
    }
    if s0.to_array().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial moments"));
    }
    let coarse = rk4_moments(opc, s0, t_end, steps);
    let fine = rk4_moments(opc, s0, t_end, 2 * steps);
    let scale = coarse
        .iter()
        .flat_map(|s| s.to_array())
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let diff = coarse.iter().enumerate().map(|(k, s)| s.max_abs_diff(&fine[2 * k])).fold(0.0, f64::max);
    let per_unit_time = diff * 16.0 / 15.0 / scale / t_end;
    if !(per_unit_time <= MOMENT_ERROR_PER_UNIT_TIME) {
        return Err(Error::StepTooLarge { per_unit_time, limit: MOMENT_ERROR_PER_UNIT_TIME });
    }
    Ok(coarse)
}

fn underdamped(omega0: f64, lambda: f64) -> Result<f64> {
    let r = DampingRegime::classify(omega0, lambda);
    if r.regime != Regime::Underdamped {
        return Err(Error::NotUnderdamped { omega0, lambda });
    }
    Ok(r.omega)
}

/// Quadratic moments `(⟨p²⟩, ⟨x²⟩, ⟨px+xp⟩)` of Model 1 at `t`, from the
/// three-mode solution of the initial value problem.
pub fn closed_form_model1(omega0: f64, lambda: f64, s0: &MomentState, t: f64) -> Result<[f64; 3]> {
    let w = underdamped(omega0, lambda)?;
    let (l, w0) = (lambda, omega0);
    let (p0, x0, q0) = (s0.p2, s0.x2, s0.sym);
    let e = (l * t).exp();
    let (sn, cs) = (2.0 * w * t).sin_cos();
    let k0 = (w0 * (p0 + x0) - l * q0) / (2.0 * w * w);
    let k1 = (l / w0 * q0 + (w * w - l * l) / (w0 * w0) * x0 - p0) / (2.0 * w * w);
    let k2 = (q0 - 2.0 * l / w0 * x0) / (2.0 * w0 * w);
    let mode0 = [w0, w0, 2.0 * l];
    let mode1 = [
        (l * l - w * w) * cs - 2.0 * l * w * sn,
        w0 * w0 * cs,
        2.0 * l * w0 * cs - 2.0 * w0 * w * sn,
    ];
    let mode2 = [
        2.0 * l * w * cs + (l * l - w * w) * sn,
        w0 * w0 * sn,
        2.0 * w0 * w * cs + 2.0 * l * w0 * sn,
    ];
    Ok([0, 1, 2].map(|i| e * (k0 * mode0[i] + k1 * mode1[i] + k2 * mode2[i])))
}

/// Model 2 quadratic moments through the substitution `p ↔ x`, `λ → −λ`,
/// `ω₀ → −ω₀`, which maps its system onto the Model 1 system.
pub fn closed_form_model2(omega0: f64, lambda: f64, s0: &MomentState, t: f64) -> Result<[f64; 3]> {
    underdamped(omega0, lambda)?;
    let swapped = MomentState { p2: s0.x2, x2: s0.p2, ..*s0 };
    let [x2, p2, sym] = closed_form_model1(-omega0, -lambda, &swapped, t)?;
    Ok([p2, x2, sym])
}

/// Matrix of the quadratic-moment system for constant coefficients, acting
/// on `(⟨p²⟩, ⟨x²⟩, ⟨px+xp⟩)`.
pub fn quadratic_system_matrix(a: f64, b: f64, c: f64, d: f64) -> [[f64; 3]; 3] {
    [
        [-(3.0 * c + d), 0.0, -2.0 * b],
        [0.0, c + 3.0 * d, 2.0 * a],
        [4.0 * a, -4.0 * b, d - c],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenStructure {
    pub r0: Complex64,
    pub r_plus: Complex64,
    pub r_minus: Complex64,
    pub v0: [Complex64; 3],
    pub v_plus: [Complex64; 3],
    pub v_minus: [Complex64; 3],
    /// `det[v0 v+ v−]`.
    pub det: Complex64,
}

fn det3(m: [[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Eigenvalues `λ`, `λ ± 2iω` and eigenvectors `(ω₀, ω₀, 2λ)`,
/// `((λ ± iω)², ω₀², 2ω₀(λ ± iω))` of the Model 1 system.
pub fn eigen_structure_model1(omega0: f64, lambda: f64) -> Result<EigenStructure> {
    let w = underdamped(omega0, lambda)?;
    let c = |re: f64| Complex64::new(re, 0.0);
    let z_plus = Complex64::new(lambda, w);
    let z_minus = z_plus.conj();
    let v0 = [c(omega0), c(omega0), c(2.0 * lambda)];
    let v_plus = [z_plus * z_plus, c(omega0 * omega0), 2.0 * omega0 * z_plus];
    let v_minus = [z_minus * z_minus, c(omega0 * omega0), 2.0 * omega0 * z_minus];
    let det = det3([0, 1, 2].map(|i| [v0[i], v_plus[i], v_minus[i]]));
    Ok(EigenStructure {
        r0: c(lambda),
        r_plus: Complex64::new(lambda, 2.0 * w),
        r_minus: Complex64::new(lambda, -2.0 * w),
        v0,
        v_plus,
        v_minus,
        det,
    })
}

/// `⟨H⟩ = a⟨p²⟩ + b⟨x²⟩ + (c+d)/2 ⟨px+xp⟩ + i(d−c)/2 ⟨1⟩`, using
/// `px = (px+xp)/2 − i/2` and `xp = (px+xp)/2 + i/2`.
pub fn hamiltonian_expectation(opc: &OperatorCoefficients, s: &MomentState) -> Complex64 {
    let [a, b, c, d] = opc.at(s.t);
    Complex64::new(a * s.p2 + b * s.x2 + 0.5 * (c + d) * s.sym, 0.5 * (d - c) * s.one)
}

/// Mechanical energy `⟨E⟩ = (ω₀/2)(⟨p²⟩ + ⟨x²⟩) − (λ/2)⟨px+xp⟩`.
pub fn energy(omega0: f64, lambda: f64, s: &MomentState) -> f64 {
    0.5 * omega0 * (s.p2 + s.x2) - 0.5 * lambda * s.sym
}

/// `⟨x⟩(t)` for the built-in autonomous models.
///
/// Model 1: `⟨x⟩'' − 2λ⟨x⟩' + ω₀²⟨x⟩ = 0`; Model 2: `⟨x⟩'' + 2λ⟨x⟩' +
/// ω₀²⟨x⟩ = 0`; shifted and reduced oscillators: `⟨x⟩'' + ω²⟨x⟩ = 0`. The
/// initial slope comes from the first-order system.
pub fn ehrenfest_ode(kind: ModelKind, omega0: f64, lambda: f64, x0: f64, p0: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let opc = OperatorCoefficients::builtin(kind, omega0, lambda)?;
    let [a, _, _, d] = opc.at(0.0);
    let v0 = 2.0 * a * p0 + 2.0 * d * x0;
    // Roots κ ± iΩ of the characteristic polynomial.
    let (kappa, regime) = match kind {
        ModelKind::Model1 => (lambda, DampingRegime::classify(omega0, lambda)),
        ModelKind::Model2 => (-lambda, DampingRegime::classify(omega0, lambda)),
        ModelKind::Shifted | ModelKind::HarmonicReduced => {
            let r = DampingRegime::classify(omega0, lambda);
            if r.regime != Regime::Underdamped {
                return Err(Error::NotUnderdamped { omega0, lambda });
            }
            (0.0, r)
        }
        ModelKind::Model3 => return Err(Error::NonAutonomous),
        ModelKind::Custom => return Err(Error::CustomModel),
    };
    Ok(t_grid
        .iter()
        .map(|&t| (kappa * t).exp() * (x0 * regime.c(t) + (v0 - kappa * x0) * regime.s(t)))
        .collect())
}

/// Finite-difference residual of `⟨x⟩'' − 2κ⟨x⟩' + Ω₀²⟨x⟩` on a uniform
/// grid, divided by `max|⟨x⟩|`.
pub fn ehrenfest_residual(kind: ModelKind, omega0: f64, lambda: f64, xs: &[f64], dt: f64) -> Result<f64> {
    let (damping, stiffness) = match kind {
        ModelKind::Model1 => (-2.0 * lambda, omega0 * omega0),
        ModelKind::Model2 => (2.0 * lambda, omega0 * omega0),
        ModelKind::Shifted | ModelKind::HarmonicReduced => (0.0, omega0 * omega0 - lambda * lambda),
        ModelKind::Model3 => return Err(Error::NonAutonomous),
        ModelKind::Custom => return Err(Error::CustomModel),
    };
    if xs.len() < 3 {
        return Err(Error::InvalidParameter { name: "xs", reason: "need at least three samples".into() });
    }
    let peak = xs.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let worst = xs
        .windows(3)
        .map(|w| {
            let second = (w[0] - 2.0 * w[1] + w[2]) / (dt * dt);
            let first = (w[2] - w[0]) / (2.0 * dt);
            (second + damping * first + stiffness * w[1]).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst / peak)
}

/// Quadrature of `ψ* A ψ` for `A ∈ {1, x, x², p, p², px+xp}` with
/// eighth-order central differences.
pub fn moments_from_wave(w: &WaveGrid) -> Result<MomentState> {
    w.check_truncation()?;
    let h = w.grid.dx();
    let d1 = derivative1_order8(&w.values, h);
    let d2 = derivative2_order8(&w.values, h);
    let i = Complex64::new(0.0, 1.0);
    let n = w.grid.n;
    let mut cols: [Vec<f64>; 6] = Default::default();
    for k in 0..n {
        let x = w.grid.x(k);
        let psi = w.values[k];
        let c = psi.conj();
        cols[0].push((c * -d2[k]).re);
        cols[1].push(x * x * psi.norm_sqr());
        cols[2].push((c * (-i) * (psi + 2.0 * x * d1[k])).re);
        cols[3].push(x * psi.norm_sqr());
        cols[4].push((c * (-i) * d1[k]).re);
        cols[5].push(psi.norm_sqr());
    }
    let v = cols.map(|col| trapezoid(&col, h));
    Ok(MomentState::from_array(v, w.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    fn opc(kind: ModelKind, l: f64) -> OperatorCoefficients {
        OperatorCoefficients::builtin(kind, 1.0, l).unwrap()
    }

    #[test]
    fn specializations_match_printed_systems() {
        let (w0, l) = (1.3, 0.4);
        let [a, b, c, d] = OperatorCoefficients::builtin(ModelKind::Model1, w0, l).unwrap().at(0.0);
        assert_eq!(
            quadratic_system_matrix(a, b, c, d),
            [[3.0 * l, 0.0, -w0], [0.0, -l, w0], [2.0 * w0, -2.0 * w0, l]]
        );
        let [a, b, c, d] = OperatorCoefficients::builtin(ModelKind::Model2, w0, l).unwrap().at(0.0);
        assert_eq!(
            quadratic_system_matrix(a, b, c, d),
            [[l, 0.0, -w0], [0.0, -3.0 * l, w0], [2.0 * w0, -2.0 * w0, -l]]
        );
    }

    #[test]
    fn symmetry_maps_model1_to_model2() {
        let (w0, l) = (1.3, 0.4);
        let m1 = |w0: f64, l: f64| quadratic_system_matrix(0.5 * w0, 0.5 * w0, -l, 0.0);
        let m2 = quadratic_system_matrix(0.5 * w0, 0.5 * w0, 0.0, -l);
        // p ↔ x swaps the first two rows and columns.
        let m = m1(-w0, -l);
        let perm = [1, 0, 2];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[perm[i]][perm[j]], m2[i][j]);
            }
        }
    }

    #[test]
    fn self_adjoint_conservation() {
        let o = OperatorCoefficients::constant(0.5, 0.5, 0.0, 0.0);
        let s = MomentState { p2: 0.7, x2: 0.2, sym: 0.3, x1: 0.1, p1: -0.4, one: 1.0, t: 0.0 };
        let r = moment_rhs_general(&o, &s, 0.0);
        assert!((r[0] + r[1]).abs() < 1e-15);
        assert_eq!(hamiltonian_expectation(&o, &s).im, 0.0);
        let traj = integrate_moments(&opc(ModelKind::Model1, 0.0), &s, 5.0, 1000).unwrap();
        for st in &traj {
            assert!((st.p2 + st.x2 - 0.9).abs() < 1e-10);
        }
    }

    #[test]
    fn hamiltonian_expectation_signs() {
        let s = MomentState::ground_state();
        let h1 = hamiltonian_expectation(&opc(ModelKind::Model1, 0.6), &s);
        let h2 = hamiltonian_expectation(&opc(ModelKind::Model2, 0.6), &s);
        let e = energy(1.0, 0.6, &s);
        assert!((h1 - Complex64::new(e, 0.3)).norm() < 1e-15);
        assert!((h2 - Complex64::new(e, -0.3)).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_expectation_evolves_exponentially() {
        for (kind, rate) in [(ModelKind::Model1, 0.6), (ModelKind::Model2, -0.6)] {
            let o = opc(kind, 0.6);
            let s0 = MomentState::gaussian(0.4, -0.2, 0.9);
            let traj = integrate_moments(&o, &s0, 2.0, 2000).unwrap();
            let h0 = hamiltonian_expectation(&o, &s0);
            for st in traj.iter().step_by(250) {
                let expected = h0 * (rate * st.t).exp();
                assert!((hamiltonian_expectation(&o, st) - expected).norm() <= 1e-8 * expected.norm());
            }
        }
    }

    #[test]
    fn rk4_matches_closed_forms() {
        let s0 = MomentState { p2: 0.8, x2: 0.35, sym: -0.2, x1: 0.0, p1: 0.0, one: 1.0, t: 0.0 };
        let traj1 = integrate_moments(&opc(ModelKind::Model1, 0.6), &s0, 3.0, 3000).unwrap();
        let traj2 = integrate_moments(&opc(ModelKind::Model2, 0.6), &s0, 3.0, 3000).unwrap();
        for k in (0..=3000).step_by(150) {
            let t = traj1[k].t;
            let c1 = closed_form_model1(1.0, 0.6, &s0, t).unwrap();
            let c2 = closed_form_model2(1.0, 0.6, &s0, t).unwrap();
            for (i, (a, b)) in [traj1[k].p2, traj1[k].x2, traj1[k].sym].iter().zip(c1).enumerate() {
                assert!((a - b).abs() < 1e-8, "model1 t={t} i={i}");
            }
            for (a, b) in [traj2[k].p2, traj2[k].x2, traj2[k].sym].iter().zip(c2) {
                assert!((a - b).abs() < 1e-8, "model2 t={t}");
            }
            assert!((traj1[k].one - (0.6 * t).exp()).abs() < 1e-10);
            assert!((traj2[k].one - (-0.6 * t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_initial_data_and_energy() {
        let s0 = MomentState::ground_state();
        let w: f64 = 0.8;
        let k0 = (1.0 * (0.5 + 0.5) - 0.0) / (2.0 * w * w);
        assert!((k0 - 1.0 / (2.0 * w * w)).abs() < 1e-15);
        let at0 = closed_form_model1(1.0, 0.6, &s0, 0.0).unwrap();
        assert!((at0[0] - 0.5).abs() <= 1e-12 && (at0[1] - 0.5).abs() <= 1e-12 && at0[2].abs() <= 1e-12);
        let e0 = energy(1.0, 0.6, &s0);
        for t in [0.5, 1.7, 3.0] {
            let [p2, x2, sym] = closed_form_model1(1.0, 0.6, &s0, t).unwrap();
            let e = energy(1.0, 0.6, &MomentState { p2, x2, sym, ..s0 });
            assert!((e / (e0 * (0.6 * t).exp()) - 1.0).abs() < 1e-12);
        }
        assert!(closed_form_model1(1.0, 1.5, &s0, 1.0).is_err());
    }

    #[test]
    fn eigenstructure() {
        let e = eigen_structure_model1(1.0, 0.0).unwrap();
        assert!((e.det - Complex64::new(0.0, -8.0)).norm() < 1e-12 * 8.0);
        let e = eigen_structure_model1(1.0, 0.6).unwrap();
        assert!((e.det - Complex64::new(0.0, -4.096)).norm() < 1e-12 * 4.096);
        let m = quadratic_system_matrix(0.5, 0.5, -0.6, 0.0);
        for (r, v) in [(e.r0, e.v0), (e.r_plus, e.v_plus), (e.r_minus, e.v_minus)] {
            for i in 0..3 {
                let av: Complex64 = (0..3).map(|j| m[i][j] * v[j]).sum();
                assert!((av - r * v[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ehrenfest_closed_forms() {
        let ts: Vec<f64> = (0..=400).map(|k| k as f64 * 0.01).collect();
        let x = ehrenfest_ode(ModelKind::Model1, 1.0, 0.6, 1.0, 0.0, &ts).unwrap();
        for (t, v) in ts.iter().zip(&x) {
            let expected = (0.6 * t).exp() * ((0.8 * t).cos() - 0.75 * (0.8 * t).sin());
            assert!((v - expected).abs() < 1e-13);
        }
        let sh = ehrenfest_ode(ModelKind::Shifted, 1.0, 0.6, 1.0, 0.6, &ts).unwrap();
        for (t, v) in ts.iter().zip(&sh) {
            assert!((v - (0.8 * t).cos()).abs() < 1e-13);
        }
        for kind in [ModelKind::Model1, ModelKind::Model2, ModelKind::Shifted] {
            let x = ehrenfest_ode(kind, 1.0, 0.0, 1.0, 0.0, &ts).unwrap();
            for (t, v) in ts.iter().zip(&x) {
                assert!((v - t.cos()).abs() < 1e-13);
            }
            let xs = ehrenfest_ode(kind, 1.0, 0.6, 0.7, 0.3, &ts).unwrap();
            assert!(ehrenfest_residual(kind, 1.0, 0.6, &xs, 0.01).unwrap() < 1e-4);
        }
    }

    #[test]
    fn ehrenfest_matches_first_order_system() {
        for kind in [ModelKind::Model1, ModelKind::Model2, ModelKind::Shifted] {
            let s0 = MomentState::gaussian(0.7, 0.3, 1.0);
            let traj = integrate_moments(&opc(kind, 0.6), &s0, 2.0, 2000).unwrap();
            let ts: Vec<f64> = traj.iter().map(|s| s.t).collect();
            let x = ehrenfest_ode(kind, 1.0, 0.6, 0.7, 0.3, &ts).unwrap();
            for (s, v) in traj.iter().zip(&x) {
                assert!((s.x1 - v).abs() < 1e-10, "{kind}");
            }
        }
    }

    #[test]
    fn gaussian_moments_from_wave() {
        use crate::dynamics::{initial_gaussian, GridSpec};
        let w = initial_gaussian(0.0, 0.0, 1.0, GridSpec::default()).unwrap();
        let m = moments_from_wave(&w).unwrap();
        assert!(m.max_abs_diff(&MomentState::ground_state()) < 1e-8);
        let w = initial_gaussian(1.0, 2.0, 0.5, GridSpec::default()).unwrap();
        let m = moments_from_wave(&w).unwrap();
        assert!((m.x1 - 1.0).abs() < 1e-8 && (m.p1 - 2.0).abs() < 1e-8);
        assert!(m.max_abs_diff(&MomentState::gaussian(1.0, 2.0, 0.5)) < 1e-8);
        assert!(m.satisfies_uncertainty(1e-10));
    }

    #[test]
    fn integrate_rejects_coarse_steps() {
        let o = OperatorCoefficients::constant(20.0, 20.0, 0.0, 0.0);
        assert!(matches!(
            integrate_moments(&o, &MomentState::gaussian(1.0, 0.0, 0.7), 10.0, 100),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(integrate_moments(&o, &MomentState::ground_state(), 1.0, 10).is_err());
    }
}
