//! Run configuration: TOML with `[model]`, `[grid]`, `[initial]` and `[run]`.
//!
//! Parsing walks the document against a fixed key set so that every
//! problem is reported at once rather than only the first.

use std::fmt;
use std::path::PathBuf;

use qdamp::dynamics::{GaussianSpec, GridSpec};
use qdamp::models::{DampingRegime, ModelSelector, Regime};
use qdamp::ModelKind;
use toml::{Table, Value};

pub const DEFAULT_SEED: u64 = 20240531;

/// Which data path the `moments` command uses for the quadratic moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentPath {
    /// Closed form for underdamped Models 1 and 2, RK4 otherwise.
    Auto,
    ClosedForm,
    RungeKutta,
    /// Moments of the propagated wavefunction.
    Wave,
}

impl MomentPath {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(MomentPath::Auto),
            "closed_form" => Some(MomentPath::ClosedForm),
            "rk4" => Some(MomentPath::RungeKutta),
            "wave" => Some(MomentPath::Wave),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Propagate,
    Kernel,
    Moments,
    Mehler,
    Eigen,
    Verify,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSelector,
    pub omega0: f64,
    pub lambda: f64,
    /// `None` when the config has no `[grid]` section.
    pub grid: Option<GridSpec>,
    pub initial: Option<GaussianSpec>,
    pub times: Vec<f64>,
    pub out: PathBuf,
    pub seed: u64,
    pub moments: MomentPath,
    pub levels: usize,
    pub eps: Vec<f64>,
    pub terms: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSelector::Builtin(ModelKind::Model1),
            omega0: 1.0,
            lambda: 0.6,
            grid: None,
            initial: None,
            times: vec![1.0],
            out: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            moments: MomentPath::Auto,
            levels: 8,
            eps: vec![1e-1, 1e-2, 1e-3],
            terms: vec![50, 100, 200, 400, 800, 1600, 3200, 6400],
        }
    }
}

impl RunConfig {
    pub fn grid(&self) -> GridSpec {
        self.grid.unwrap_or_default()
    }

    pub fn initial(&self) -> GaussianSpec {
        self.initial.unwrap_or_default()
    }

    pub fn regime(&self) -> DampingRegime {
        DampingRegime::classify(self.omega0, self.lambda)
    }

    /// Preconditions that depend on the command about to run.
    pub fn validate_for(&self, command: Command) -> Result<(), ConfigErrors> {
        let mut errors = Vec::new();
        let underdamped = self.regime().regime == Regime::Underdamped;
        let builtin = matches!(self.model, ModelSelector::Builtin(_));
        let needs_underdamped = match command {
            Command::Mehler | Command::Eigen => true,
            Command::Moments => self.moments == MomentPath::ClosedForm,
            _ => false,
        };
        if needs_underdamped && !underdamped {
            errors.push(ConfigError::new(
                "model.lambda",
                format!(
                    "{command:?} needs the underdamped regime (lambda < omega0); got omega0 = {}, lambda = {}",
                    self.omega0, self.lambda
                ),
            ));
        }
        if matches!(command, Command::Mehler | Command::Eigen) && self.model != ModelSelector::Builtin(ModelKind::Shifted) {
            errors.push(ConfigError::new("model.name", format!("{command:?} works on the shifted oscillator; set name = \"shifted\"")));
        }
        if command == Command::Moments && self.moments == MomentPath::ClosedForm {
            if !matches!(self.model, ModelSelector::Builtin(ModelKind::Model1 | ModelKind::Model2)) {
                errors.push(ConfigError::new("run.moments", "closed_form moments exist for model1 and model2 only".into()));
            }
        }
        if matches!(command, Command::Propagate | Command::Kernel) {
            if let (true, Some(limit)) = (builtin, self.regime().first_caustic()) {
                for &t in &self.times {
                    if t >= limit {
                        errors.push(ConfigError::new(
                            "run.times",
                            format!("t = {t} is at or past the first caustic {limit}"),
                        ));
                    }
                }
            }
        }
        if matches!(command, Command::Kernel | Command::Mehler) && self.times.iter().any(|&t| t == 0.0) {
            errors.push(ConfigError::new("run.times", "the kernel is singular at t = 0".into()));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: String) -> Self {
        ConfigError { key: key.to_string(), message }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const SECTIONS: [(&str, &[&str]); 4] = [
    ("model", &["name", "omega0", "lambda"]),
    ("grid", &["x_min", "x_max", "n"]),
    ("initial", &["spec"]),
    ("run", &["times", "out", "seed", "moments", "levels", "eps", "terms"]),
];

struct Collector {
    errors: Vec<ConfigError>,
}

impl Collector {
    fn push(&mut self, key: &str, message: impl Into<String>) {
        self.errors.push(ConfigError::new(key, message.into()));
    }

    fn number(&mut self, key: &str, v: &Value) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.push(key, format!("expected a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn integer(&mut self, key: &str, v: &Value) -> Option<i64> {
        match v {
            Value::Integer(i) => Some(*i),
            other => {
                self.push(key, format!("expected an integer, got {}", other.type_str()));
                None
            }
        }
    }

    fn string<'a>(&mut self, key: &str, v: &'a Value) -> Option<&'a str> {
        match v {
            Value::String(s) => Some(s),
            other => {
                self.push(key, format!("expected a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn array<'a>(&mut self, key: &str, v: &'a Value) -> Option<&'a [Value]> {
        match v {
            Value::Array(a) => Some(a),
            other => {
                self.push(key, format!("expected an array, got {}", other.type_str()));
                None
            }
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigErrors(vec![ConfigError::new("", e.to_string().trim_end().to_string())]))?;
    let mut c = Collector { errors: Vec::new() };
    let mut cfg = RunConfig::default();

    for (name, value) in &doc {
        let Some((_, allowed)) = SECTIONS.iter().find(|(s, _)| s == name) else {
            c.push(name, "unknown section (expected model, grid, initial or run)");
            continue;
        };
        let Value::Table(table) = value else {
            c.push(name, "expected a table");
            continue;
        };
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                c.push(&format!("{name}.{key}"), format!("unknown key (allowed: {})", allowed.join(", ")));
            }
        }
    }

    let section = |name: &str| doc.get(name).and_then(Value::as_table);

    if let Some(model) = section("model") {
        if let Some(v) = model.get("name") {
            if let Some(s) = c.string("model.name", v) {
                match s.parse::<ModelSelector>() {
                    Ok(m) => cfg.model = m,
                    Err(e) => c.push("model.name", e.to_string()),
                }
            }
        }
        if let Some(v) = model.get("omega0").and_then(|v| c.number("model.omega0", v)) {
            if !(v.is_finite() && v > 0.0) {
                c.push("model.omega0", format!("must be finite and > 0, got {v}"));
            }
            cfg.omega0 = v;
        }
        if let Some(v) = model.get("lambda").and_then(|v| c.number("model.lambda", v)) {
            if !(v.is_finite() && v >= 0.0) {
                c.push("model.lambda", format!("must be finite and >= 0, got {v}"));
            }
            cfg.lambda = v;
        }
    }

    if let Some(grid) = section("grid") {
        let mut g = GridSpec::default();
        if let Some(v) = grid.get("x_min").and_then(|v| c.number("grid.x_min", v)) {
            g.x_min = v;
        }
        if let Some(v) = grid.get("x_max").and_then(|v| c.number("grid.x_max", v)) {
            g.x_max = v;
        }
        if let Some(v) = grid.get("n").and_then(|v| c.integer("grid.n", v)) {
            if v < 0 {
                c.push("grid.n", format!("must be positive, got {v}"));
            } else {
                g.n = v as usize;
            }
        }
        if let Err(e) = g.validate() {
            c.push("grid", e.to_string());
        }
        cfg.grid = Some(g);
    }

    if let Some(initial) = section("initial") {
        if let Some(s) = initial.get("spec").and_then(|v| c.string("initial.spec", v)) {
            match s.parse::<GaussianSpec>() {
                Ok(spec) => cfg.initial = Some(spec),
                Err(e) => c.push("initial.spec", e.to_string()),
            }
        }
    }

    if let Some(run) = section("run") {
        if let Some(items) = run.get("times").and_then(|v| c.array("run.times", v)) {
            let mut times = Vec::new();
            for item in items {
                if let Some(t) = c.number("run.times", item) {
                    if !(t.is_finite() && t >= 0.0) {
                        c.push("run.times", format!("times must be finite and >= 0, got {t}"));
                    }
                    times.push(t);
                }
            }
            if times.is_empty() {
                c.push("run.times", "must list at least one time");
            }
            cfg.times = times;
        }
        if let Some(s) = run.get("out").and_then(|v| c.string("run.out", v)) {
            cfg.out = PathBuf::from(s);
        }
        if let Some(v) = run.get("seed").and_then(|v| c.integer("run.seed", v)) {
            if v < 0 {
                c.push("run.seed", format!("must be >= 0, got {v}"));
            } else {
                cfg.seed = v as u64;
            }
        }
        if let Some(s) = run.get("moments").and_then(|v| c.string("run.moments", v)) {
            match MomentPath::parse(s) {
                Some(p) => cfg.moments = p,
                None => c.push("run.moments", format!("expected auto, closed_form, rk4 or wave, got `{s}`")),
            }
        }
        if let Some(v) = run.get("levels").and_then(|v| c.integer("run.levels", v)) {
            if !(0..=400).contains(&v) {
                c.push("run.levels", format!("must be in [0, 400], got {v}"));
            } else {
                cfg.levels = v as usize;
            }
        }
        if let Some(items) = run.get("eps").and_then(|v| c.array("run.eps", v)) {
            let mut eps = Vec::new();
            for item in items {
                if let Some(e) = c.number("run.eps", item) {
                    if !(e.is_finite() && e > 0.0) {
                        c.push("run.eps", format!("eps must be > 0, got {e}"));
                    }
                    eps.push(e);
                }
            }
            cfg.eps = eps;
        }
        if let Some(items) = run.get("terms").and_then(|v| c.array("run.terms", v)) {
            let mut terms = Vec::new();
            for item in items {
                if let Some(n) = c.integer("run.terms", item) {
                    if n < 0 {
                        c.push("run.terms", format!("term counts must be >= 0, got {n}"));
                    } else {
                        terms.push(n as usize);
                    }
                }
            }
            cfg.terms = terms;
        }
    }

    if let (Some(grid), Some(initial)) = (cfg.grid, cfg.initial) {
        if let Err(e) = initial.sample(grid) {
            c.push("initial.spec", format!("does not fit the grid: {e}"));
        }
    }

    if c.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(c.errors))
    }
}
