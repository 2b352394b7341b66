//! Small numerical building blocks shared by the physics modules:
//! quadrature rules, compensated summation and central differences.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for complex values (componentwise).
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Trapezoid rule for uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    for (i, &v) in values.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc.add(w * v);
    }
    acc.value() * h
}

/// Trapezoid rule for complex samples.
pub fn trapezoid_complex(values: &[Complex64], h: f64) -> Complex64 {
    let n = values.len();
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = CompensatedComplexSum::new();
    for (i, &v) in values.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc.add(v * w);
    }
    acc.value() * h
}

/// Composite Simpson rule over `values[0..=2m]` with spacing `h`.
///
/// Panics if the number of intervals is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let intervals = values.len().saturating_sub(1);
    assert!(intervals % 2 == 0, "Simpson needs an even number of intervals");
    if intervals == 0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    acc.add(values[0]);
    acc.add(values[intervals]);
    for (i, &v) in values.iter().enumerate().take(intervals).skip(1) {
        acc.add(if i % 2 == 1 { 4.0 * v } else { 2.0 * v });
    }
    acc.value() * h / 3.0
}

const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Three-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre3<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL3_NODES
        .iter()
        .zip(GL3_WEIGHTS.iter())
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Adaptive Simpson quadrature with an absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = 0.0_f64;
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48, &mut worst);
    if !value.is_finite() {
        return Err(Error::QuadratureNonConvergence { estimate: f64::INFINITY });
    }
    if worst > tol {
        return Err(Error::QuadratureNonConvergence { estimate: worst });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || depth == 0 || (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
        if depth == 0 {
            *worst = worst.max(delta.abs() / 15.0);
        }
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
}

/// Fourth-order central first derivative of uniformly sampled complex data.
///
/// Points closer than two samples to either edge use a second-order
/// one-sided or centered stencil.
pub fn derivative1(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n < 5 {
        return out;
    }
    for i in 2..n - 2 {
        out[i] = (values[i - 2] - values[i - 1] * 8.0 + values[i + 1] * 8.0 - values[i + 2])
            / (12.0 * h);
    }
    out[1] = (values[2] - values[0]) / (2.0 * h);
    out[n - 2] = (values[n - 1] - values[n - 3]) / (2.0 * h);
    out[0] = (values[1] - values[0]) / h;
    out[n - 1] = (values[n - 1] - values[n - 2]) / h;
    out
}

/// Fourth-order central second derivative of uniformly sampled complex data.
pub fn derivative2(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n < 5 {
        return out;
    }
    let h2 = h * h;
    for i in 2..n - 2 {
        out[i] = (-values[i - 2] + values[i - 1] * 16.0 - values[i] * 30.0 + values[i + 1] * 16.0
            - values[i + 2])
            / (12.0 * h2);
    }
    out[1] = (values[0] - values[1] * 2.0 + values[2]) / h2;
    out[n - 2] = (values[n - 3] - values[n - 2] * 2.0 + values[n - 1]) / h2;
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    out
}

const D1_ORDER8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D2_ORDER8: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

/// Eighth-order central first derivative; the four points nearest each edge
/// fall back to [`derivative1`].
pub fn derivative1_order8(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let mut out = derivative1(values, h);
    let n = values.len();
    if n < 9 {
        return out;
    }
    for i in 4..n - 4 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, w) in D1_ORDER8.iter().enumerate() {
            acc += (values[i + k + 1] - values[i - k - 1]) * *w;
        }
        out[i] = acc / h;
    }
    out
}

/// Eighth-order central second derivative; edges as in [`derivative1_order8`].
pub fn derivative2_order8(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let mut out = derivative2(values, h);
    let n = values.len();
    if n < 9 {
        return out;
    }
    for i in 4..n - 4 {
        let mut acc = values[i] * D2_ORDER8[0];
        for (k, w) in D2_ORDER8.iter().enumerate().skip(1) {
            acc += (values[i + k] + values[i - k]) * *w;
        }
        out[i] = acc / (h * h);
    }
    out
}
