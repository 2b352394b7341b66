use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("coefficient a(t) vanishes at t = {t}")]
    VanishingA { t: f64 },

    #[error("operation requires a built-in model, got a custom coefficient set")]
    CustomModel,

    #[error("operation requires the underdamped regime (omega0^2 > lambda^2); got omega0 = {omega0}, lambda = {lambda}")]
    NotUnderdamped { omega0: f64, lambda: f64 },

    #[error("time {t} lies outside the coefficient table range [{start}, {end}]")]
    OutOfTableRange { t: f64, start: f64, end: f64 },

    #[error("adaptive quadrature did not converge (achieved error estimate {estimate:e})")]
    QuadratureNonConvergence { estimate: f64 },

    #[error("step size too large: step-doubling error estimate {per_unit_time:e} per unit time exceeds {limit:e}")]
    StepTooLarge { per_unit_time: f64, limit: f64 },

    #[error("caustic at t = {t}: |mu| = {mu:e} is indistinguishable from zero")]
    Caustic { t: f64, mu: f64 },

    #[error("mu' crosses zero near t = {t} inside the quadrature range")]
    MuPrimeZero { t: f64 },

    #[error("t = {t} lies outside the default validity window (0, {limit}); use the extended window to go past the first caustic")]
    OutsideWindow { t: f64, limit: f64 },

    #[error("time {t} is outside the solved interval [0, {t_end}]")]
    OutsideSolution { t: f64, t_end: f64 },

    #[error("grid is truncation-unsafe: edge amplitude ratio {ratio:e} exceeds {limit:e}")]
    TruncationUnsafe { ratio: f64, limit: f64 },

    #[error("grids do not match")]
    GridMismatch,

    #[error("pole of the antiderivative: A cos t + B sin t = 0 at t = {t}")]
    Pole { t: f64 },

    #[error("|r| = {0} must be < 1")]
    RadiusTooLarge(f64),

    #[error("Parseval defect {defect:e} exceeds {limit:e}; increase n_max (currently {n_max})")]
    ParsevalDefect { defect: f64, limit: f64, n_max: usize },

    #[error("momentum-space tails {tail:e} exceed {limit:e}; the grid aliases")]
    Aliasing { tail: f64, limit: f64 },

    #[error("operation requires time-independent coefficients")]
    NonAutonomous,

    #[error("coefficient table error: {0}")]
    Table(String),
}
