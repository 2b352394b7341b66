//! Catalog of quadratic Hamiltonian models.
//!
//! The canonical representation is the PDE form
//!
//! ```text
//! i ψ_t = −a ψ_xx + b x² ψ − i (c x ψ_x + d ψ)
//! ```
//!
//! with real coefficient functions `a, b, c, d` of time (ħ = m = 1). The
//! operator form `H = a p² + b x² + c px + d xp` is available through
//! [`OperatorCoefficients`]; since `px = −i(1 + x∂)` and `xp = −i x∂`,
//! the two are related by `c_pde = c_op + d_op`, `d_pde = c_op`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::adaptive_simpson;
use crate::profile::{CubicSpline, Profile};

/// Absolute tolerance for the adaptive quadrature behind [`h_factor`].
pub const H_QUADRATURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `H = ω₀/2 (p² + x²) − λ px`
    Model1,
    /// `H = ω₀/2 (p² + x²) − λ xp`
    Model2,
    /// `H = ω₀/2 (p² + x²) − λ/2 (px + xp)`
    Shifted,
    /// `a = ω₀/2 e^{−2λt}`, `b = ω₀/2 e^{2λt}`
    Model3,
    /// Plain oscillator `ω₀/2 (p² + ω²/ω₀² x²)` with `ω² = ω₀² − λ²`.
    HarmonicReduced,
    Custom,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Model1 => "model1",
            ModelKind::Model2 => "model2",
            ModelKind::Shifted => "shifted",
            ModelKind::Model3 => "model3",
            ModelKind::HarmonicReduced => "harmonic",
            ModelKind::Custom => "custom",
        }
    }

    pub fn is_builtin(self) -> bool {
        self != ModelKind::Custom
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Damping regime of the characteristic equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    Underdamped,
    Critical,
    Overdamped,
}

/// Regime together with its frequency: `ω = √(ω₀² − λ²)` when underdamped,
/// `κ = √(λ² − ω₀²)` when overdamped, zero when critical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingRegime {
    pub regime: Regime,
    pub omega: f64,
}

impl DampingRegime {
    pub fn classify(omega0: f64, lambda: f64) -> Self {
        let disc = omega0 * omega0 - lambda * lambda;
        if disc > 0.0 {
            DampingRegime { regime: Regime::Underdamped, omega: disc.sqrt() }
        } else if disc < 0.0 {
            DampingRegime { regime: Regime::Overdamped, omega: (-disc).sqrt() }
        } else {
            DampingRegime { regime: Regime::Critical, omega: 0.0 }
        }
    }

    /// `S(t) = sin ωt / ω`, `t`, or `sinh κt / κ` depending on the regime.
    pub fn s(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Underdamped => (self.omega * t).sin() / self.omega,
            Regime::Critical => t,
            Regime::Overdamped => (self.omega * t).sinh() / self.omega,
        }
    }

    /// `C(t) = S'(t)`: `cos ωt`, `1`, or `cosh κt`.
    pub fn c(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Underdamped => (self.omega * t).cos(),
            Regime::Critical => 1.0,
            Regime::Overdamped => (self.omega * t).cosh(),
        }
    }

    /// First positive zero of `S`, if any.
    pub fn first_caustic(&self) -> Option<f64> {
        match self.regime {
            Regime::Underdamped => Some(std::f64::consts::PI / self.omega),
            _ => None,
        }
    }
}

/// Oscillator parameters of a built-in model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn regime(&self) -> DampingRegime {
        DampingRegime::classify(self.omega0, self.lambda)
    }
}

/// Time-dependent coefficients `a, b, c, d` of the PDE form.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    kind: ModelKind,
    params: Option<ModelParams>,
    pub a: Profile,
    pub b: Profile,
    pub c: Profile,
    pub d: Profile,
}

impl CoefficientSet {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// `(ω₀, λ)` for built-in models.
    pub fn params(&self) -> Option<ModelParams> {
        self.params
    }

    pub fn builtin_params(&self) -> Result<ModelParams> {
        self.params.ok_or(Error::CustomModel)
    }

    /// Custom coefficients from arbitrary profiles.
    pub fn custom(a: Profile, b: Profile, c: Profile, d: Profile) -> Self {
        CoefficientSet { kind: ModelKind::Custom, params: None, a, b, c, d }
    }

    /// Built-in model that also accepts a negative `λ`.
    ///
    /// The momentum-space image of Model 1 is Model 2 with `λ → −λ`,
    /// which falls outside the `λ ≥ 0` range of [`builtin_model`].
    pub fn with_signed_lambda(kind: ModelKind, omega0: f64, lambda: f64) -> Result<Self> {
        if !omega0.is_finite() {
            return Err(Error::NonFinite("omega0"));
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("lambda"));
        }
        if omega0 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega0",
                reason: format!("must be > 0, got {omega0}"),
            });
        }
        let half = 0.5 * omega0;
        let (a, b, c, d) = match kind {
            ModelKind::Model1 => (
                Profile::Constant(half),
                Profile::Constant(half),
                Profile::Constant(-lambda),
                Profile::Constant(-lambda),
            ),
            ModelKind::Model2 => (
                Profile::Constant(half),
                Profile::Constant(half),
                Profile::Constant(-lambda),
                Profile::Constant(0.0),
            ),
            ModelKind::Shifted => (
                Profile::Constant(half),
                Profile::Constant(half),
                Profile::Constant(-lambda),
                Profile::Constant(-0.5 * lambda),
            ),
            ModelKind::Model3 => (
                Profile::Exponential { scale: half, rate: -2.0 * lambda },
                Profile::Exponential { scale: half, rate: 2.0 * lambda },
                Profile::Constant(0.0),
                Profile::Constant(0.0),
            ),
            ModelKind::HarmonicReduced => (
                Profile::Constant(half),
                Profile::Constant((omega0 * omega0 - lambda * lambda) / (2.0 * omega0)),
                Profile::Constant(0.0),
                Profile::Constant(0.0),
            ),
            ModelKind::Custom => return Err(Error::CustomModel),
        };
        Ok(CoefficientSet { kind, params: Some(ModelParams { omega0, lambda }), a, b, c, d })
    }

    /// Loads a custom table from CSV with header `t,a,b,c,d` on a uniform
    /// time grid; values in between are cubic-spline interpolated.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Table(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Table(e.to_string()))?.clone();
        let expected = ["t", "a", "b", "c", "d"];
        if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Table(format!(
                "expected header `t,a,b,c,d`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut cols: [Vec<f64>; 5] = Default::default();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Table(e.to_string()))?;
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Table(format!("row {}: malformed number `{field}`", line + 2))
                })?;
                cols[k].push(v);
            }
        }
        let [t, a, b, c, d] = cols;
        if t.len() < 3 {
            return Err(Error::Table("need at least three rows".into()));
        }
        let step = t[1] - t[0];
        for w in t.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0) {
                return Err(Error::Table("time column must be uniformly spaced".into()));
            }
        }
        let spline = |v: Vec<f64>| -> Result<Profile> {
            Ok(Profile::Table(Arc::new(CubicSpline::new(t[0], step, v)?)))
        };
        Ok(Self::custom(spline(a)?, spline(b)?, spline(c)?, spline(d)?))
    }

    /// Operator-form view `H = a p² + b x² + c_op px + d_op xp`.
    pub fn operator_form(&self) -> OperatorCoefficients {
        OperatorCoefficients {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.d.clone(),
            d: self.c.clone().plus(self.d.clone().scaled(-1.0)),
        }
    }

    /// True when no coefficient depends on time.
    pub fn is_autonomous(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d].iter().all(|p| p.is_constant())
    }

    /// Intersection of the sampled ranges of tabulated coefficients.
    pub fn table_range(&self) -> Option<(f64, f64)> {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .filter_map(|p| p.table_range())
            .reduce(|(a0, a1), (b0, b1)| (a0.max(b0), a1.min(b1)))
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::NonFinite("t"));
        }
        if let Some((start, end)) = self.table_range() {
            let slack = 1e-12 * (end - start).abs().max(1.0);
            if t < start - slack || t > end + slack {
                return Err(Error::OutOfTableRange { t, start, end });
            }
        }
        Ok(())
    }
}

/// Coefficients of `H = a p² + b x² + c px + d xp`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCoefficients {
    pub a: Profile,
    pub b: Profile,
    pub c: Profile,
    pub d: Profile,
}

impl OperatorCoefficients {
    pub fn constant(a: f64, b: f64, c: f64, d: f64) -> Self {
        OperatorCoefficients {
            a: Profile::Constant(a),
            b: Profile::Constant(b),
            c: Profile::Constant(c),
            d: Profile::Constant(d),
        }
    }

    /// `(a, b, c, d)` at time `t`.
    pub fn at(&self, t: f64) -> [f64; 4] {
        [self.a.value(t), self.b.value(t), self.c.value(t), self.d.value(t)]
    }

    /// Operator form of a built-in model (Model 1: `c = −λ, d = 0`; Model 2:
    /// `c = 0, d = −λ`; Shifted: `c = d = −λ/2`).
    pub fn builtin(kind: ModelKind, omega0: f64, lambda: f64) -> Result<Self> {
        Ok(builtin_model(kind, omega0, lambda)?.operator_form())
    }
}

/// Built-in model `kind` with frequency `omega0 > 0` and damping `lambda ≥ 0`.
pub fn builtin_model(kind: ModelKind, omega0: f64, lambda: f64) -> Result<CoefficientSet> {
    if lambda.is_finite() && lambda < 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be >= 0, got {lambda}"),
        });
    }
    CoefficientSet::with_signed_lambda(kind, omega0, lambda)
}

/// Converts operator-form coefficients to the canonical PDE form.
pub fn to_pde_form(op: &OperatorCoefficients) -> CoefficientSet {
    CoefficientSet::custom(
        op.a.clone(),
        op.b.clone(),
        op.c.clone().plus(op.d.clone()),
        op.c.clone(),
    )
}

/// `(τ, σ)` of the characteristic equation `μ'' − τ μ' + 4σ μ = 0`:
/// `τ = a'/a − 2c + 4d` and `σ = ab − cd + d² + (d a'/a − d')/2`.
///
/// The `σ` expression is the expanded form of `d/2 (a'/a − d'/d)`, which
/// stays finite when `d ≡ 0`.
pub fn tau_sigma(coeffs: &CoefficientSet, t: f64) -> Result<(f64, f64)> {
    coeffs.check_time(t)?;
    let a = coeffs.a.value(t);
    if a == 0.0 {
        return Err(Error::VanishingA { t });
    }
    let b = coeffs.b.value(t);
    let c = coeffs.c.value(t);
    let d = coeffs.d.value(t);
    let log_da = coeffs.a.derivative(t) / a;
    let dd = coeffs.d.derivative(t);
    let tau = log_da - 2.0 * c + 4.0 * d;
    let sigma = a * b - c * d + d * d + 0.5 * (d * log_da - dd);
    if !tau.is_finite() || !sigma.is_finite() {
        return Err(Error::NonFinite("tau/sigma"));
    }
    Ok((tau, sigma))
}

/// `h(t) = exp(−∫₀ᵗ (c − 2d) dτ)`.
///
/// Uses the closed-form integral when every coefficient has one and falls
/// back to adaptive quadrature (absolute tolerance [`H_QUADRATURE_TOL`]).
pub fn h_factor(coeffs: &CoefficientSet, t: f64) -> Result<f64> {
    coeffs.check_time(t)?;
    if t < 0.0 {
        return Err(Error::InvalidParameter { name: "t", reason: format!("must be >= 0, got {t}") });
    }
    let exponent = match (coeffs.c.integral(t), coeffs.d.integral(t)) {
        (Some(ic), Some(id)) => ic - 2.0 * id,
        _ => damping_integral_quadrature(coeffs, 0.0, t)?,
    };
    Ok((-exponent).exp())
}

/// `h(t)` computed by adaptive quadrature regardless of the model.
pub fn h_factor_quadrature(coeffs: &CoefficientSet, t: f64) -> Result<f64> {
    coeffs.check_time(t)?;
    Ok((-damping_integral_quadrature(coeffs, 0.0, t)?).exp())
}

/// `∫ (c − 2d)` over `[from, to]` by adaptive quadrature.
pub(crate) fn damping_integral_quadrature(coeffs: &CoefficientSet, from: f64, to: f64) -> Result<f64> {
    adaptive_simpson(|s| coeffs.c.value(s) - 2.0 * coeffs.d.value(s), from, to, H_QUADRATURE_TOL)
}

/// Model names accepted on the command line and in config files:
/// `model1 | model2 | shifted | model3 | harmonic | custom:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSelector {
    Builtin(ModelKind),
    Custom(String),
}

impl FromStr for ModelSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim() {
            "model1" => ModelKind::Model1,
            "model2" => ModelKind::Model2,
            "shifted" => ModelKind::Shifted,
            "model3" => ModelKind::Model3,
            "harmonic" => ModelKind::HarmonicReduced,
            other => {
                return match other.strip_prefix("custom:") {
                    Some(path) if !path.is_empty() => Ok(ModelSelector::Custom(path.to_string())),
                    _ => Err(Error::InvalidParameter {
                        name: "model",
                        reason: format!(
                            "unknown model `{other}` (expected model1, model2, shifted, model3, harmonic or custom:<path>)"
                        ),
                    }),
                }
            }
        };
        Ok(ModelSelector::Builtin(kind))
    }
}

impl ModelSelector {
    pub fn build(&self, omega0: f64, lambda: f64) -> Result<CoefficientSet> {
        match self {
            ModelSelector::Builtin(kind) => builtin_model(*kind, omega0, lambda),
            ModelSelector::Custom(path) => CoefficientSet::from_csv_path(path),
        }
    }
}
