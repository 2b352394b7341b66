//! Scalar functions of time used as Hamiltonian coefficients.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Natural cubic spline through samples on a uniform time grid.
///
/// Outside the sampled range the end cubic pieces are extended, so the
/// spline is finite for every finite time; callers that care check
/// [`CubicSpline::range`].
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    start: f64,
    step: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::Table("a cubic spline needs at least three samples".into()));
        }
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(Error::Table(format!("invalid time step {step}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Table("non-finite sample".into()));
        }
        let second = natural_second_derivatives(&values, step);
        Ok(Self { start, step, values, second })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.start, self.start + self.step * (self.values.len() - 1) as f64)
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.values.len() - 2;
        let pos = (t - self.start) / self.step;
        let i = if pos <= 0.0 { 0 } else { (pos.floor() as usize).min(last) };
        (i, t - (self.start + i as f64 * self.step))
    }

    pub fn value(&self, t: f64) -> f64 {
        let (i, s) = self.locate(t);
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let b = (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0;
        y0 + s * (b + s * (0.5 * m0 + s * (m1 - m0) / (6.0 * h)))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (i, s) = self.locate(t);
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let b = (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0;
        b + s * (m0 + s * (m1 - m0) / (2.0 * h))
    }
}

fn natural_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    // Tridiagonal system (1, 4, 1) M = 6/h^2 (y[i-1] - 2y[i] + y[i+1]) with M_0 = M_n = 0.
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let inner = n - 2;
    let mut diag = vec![4.0; inner];
    let mut rhs: Vec<f64> = (1..n - 1)
        .map(|i| 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]) / (h * h))
        .collect();
    for k in 1..inner {
        let w = 1.0 / diag[k - 1];
        diag[k] -= w;
        rhs[k] -= w * rhs[k - 1];
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for k in (0..inner - 1).rev() {
        m[k + 1] = (rhs[k] - m[k + 2]) / diag[k];
    }
    m
}

/// A real coefficient function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `scale * exp(rate * t)`
    Exponential { scale: f64, rate: f64 },
    Table(Arc<CubicSpline>),
    /// Linear combination `sum_k w_k f_k(t)`.
    Combination(Vec<(f64, Profile)>),
}

impl Profile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Exponential { scale, rate } => scale * (rate * t).exp(),
            Profile::Table(s) => s.value(t),
            Profile::Combination(parts) => parts.iter().map(|(w, p)| w * p.value(t)).sum(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(_) => 0.0,
            Profile::Exponential { scale, rate } => scale * rate * (rate * t).exp(),
            Profile::Table(s) => s.derivative(t),
            Profile::Combination(parts) => parts.iter().map(|(w, p)| w * p.derivative(t)).sum(),
        }
    }

    /// `∫_0^t f`, when an elementary antiderivative is available.
    pub fn integral(&self, t: f64) -> Option<f64> {
        match self {
            Profile::Constant(c) => Some(c * t),
            Profile::Exponential { scale, rate } => {
                if *rate == 0.0 {
                    Some(scale * t)
                } else {
                    Some(scale * (rate * t).exp_m1() / rate)
                }
            }
            Profile::Table(_) => None,
            Profile::Combination(parts) => parts
                .iter()
                .map(|(w, p)| p.integral(t).map(|v| w * v))
                .sum::<Option<f64>>(),
        }
    }

    /// True when the profile does not depend on time.
    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Constant(_) => true,
            Profile::Exponential { scale, rate } => *scale == 0.0 || *rate == 0.0,
            Profile::Table(_) => false,
            Profile::Combination(parts) => parts.iter().all(|(w, p)| *w == 0.0 || p.is_constant()),
        }
    }

    /// Sampled time range for tabulated pieces, if any.
    pub fn table_range(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Table(s) => Some(s.range()),
            Profile::Combination(parts) => parts.iter().filter_map(|(_, p)| p.table_range()).reduce(
                |(a0, a1), (b0, b1)| (a0.max(b0), a1.min(b1)),
            ),
            _ => None,
        }
    }

    pub fn scaled(self, w: f64) -> Profile {
        match self {
            Profile::Constant(c) => Profile::Constant(w * c),
            Profile::Exponential { scale, rate } => Profile::Exponential { scale: w * scale, rate },
            other => Profile::Combination(vec![(w, other)]),
        }
    }

    pub fn plus(self, other: Profile) -> Profile {
        match (self, other) {
            (Profile::Constant(a), Profile::Constant(b)) => Profile::Constant(a + b),
            (a, b) => Profile::Combination(vec![(1.0, a), (1.0, b)]),
        }
    }
}
