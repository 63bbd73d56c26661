//! Flat `key = value` run configuration.
//!
//! One key per line; `#` starts a comment; blank lines are ignored. List
//! values are comma separated. Every key has a default, so an empty file is a
//! valid configuration. Unknown and repeated keys are errors.

use std::fmt;
use std::path::Path;

use crate::nanotip::{MapGeometry, TipGeometry};
use crate::quantum_core::PhysicalParams;

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File { path: String, line: usize },
    Override,
    Validation,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Override => f.write_str("command line"),
            Origin::Validation => f.write_str("configuration"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Origin,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{}: key `{k}`: {}", self.origin, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        origin: Origin::Validation,
        key: Some(key.to_string()),
        message: message.into(),
    }
}

/// A value that can appear on the right of `=`.
pub trait ConfigValue: Sized {
    fn parse_value(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        let v: f64 = s.parse().map_err(|_| format!("expected a number, got '{s}'"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("expected a finite number, got '{s}'"))
        }
    }

    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl ConfigValue for u64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse()
            .map_err(|_| format!("expected a non-negative integer, got '{s}'"))
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for usize {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse()
            .map_err(|_| format!("expected a non-negative integer, got '{s}'"))
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for Vec<f64> {
    fn parse_value(s: &str) -> Result<Self, String> {
        let items: Vec<&str> = s.split(',').map(str::trim).collect();
        if items.iter().any(|i| i.is_empty()) {
            return Err(format!("expected a comma-separated list of numbers, got '{s}'"));
        }
        items.into_iter().map(f64::parse_value).collect()
    }

    fn render(&self) -> String {
        self.iter().map(ConfigValue::render).collect::<Vec<_>>().join(",")
    }
}

impl ConfigValue for MapGeometry {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse()
    }

    fn render(&self) -> String {
        match self {
            MapGeometry::A => "A".into(),
            MapGeometry::B => "B".into(),
        }
    }
}

macro_rules! run_config {
    ($( $(#[doc = $doc:literal])* $name:ident : $ty:ty = $default:expr; )*) => {
        /// Every tunable of every command. Each command reads the subset it
        /// needs; the rest are carried along and recorded in the manifest.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $( $(#[doc = $doc])* pub $name: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $( $name: $default, )* }
            }
        }

        impl RunConfig {
            /// All recognised keys.
            pub const KEYS: &'static [&'static str] = &[$( stringify!($name), )*];

            /// Sets `key` from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
                match key {
                    $( stringify!($name) => {
                        self.$name = <$ty as ConfigValue>::parse_value(value)?;
                        Ok(())
                    } )*
                    _ => Err(format!("unknown key (known keys: {})", Self::KEYS.join(", "))),
                }
            }

            /// `(key, value)` pairs in declaration order, in a form that
            /// [`RunConfig::set`] reads back to the same value.
            pub fn pairs(&self) -> Vec<(&'static str, String)> {
                vec![$( (stringify!($name), self.$name.render()), )*]
            }
        }
    };
}

run_config! {
    /// Master seed; every trajectory seed is derived from it.
    seed: u64 = 1;
    /// Trajectory time step [1/γ].
    dt: f64 = 1e-3;
    /// Correlation histogram bin width [1/γ].
    bin_width: f64 = 0.05;
    /// Largest correlation delay [1/γ].
    tau_max: f64 = 20.0;
    /// Longest single trajectory; longer segments are split into
    /// independently seeded pieces of this length.
    chunk: f64 = 1e4;

    /// Drive strength for the undamped two-atom solution [γ].
    omega: f64 = 1.0;
    /// Coupling strengths for the undamped solution [γ].
    delta12_list: Vec<f64> = vec![0.0, 2.0, 10.0];
    /// End time of the undamped solution [1/γ].
    t_max: f64 = 50.0;
    /// Output spacing of the undamped solution [1/γ].
    dt_out: f64 = 0.01;

    omega1: f64 = 1.0;
    omega2: f64 = 1.0;
    delta: f64 = 0.0;
    gamma1: f64 = 1.0;
    gamma2: f64 = 1.0;
    gamma12: f64 = 0.0;
    delta12: f64 = 0.0;
    /// Mean atom number of the Poisson ensemble.
    mu: f64 = 1.0;
    /// Duration of the two-atom segment [1/γ]; the one-atom segment lasts
    /// `t2 · P(1)/P(2)`.
    t2: f64 = 1e5;
    /// Coupling strengths scanned by `sweep` [γ].
    delta12_grid: Vec<f64> = vec![0.0, 1.0, 2.0, 5.0, 10.0];
    /// Collective decay corrections scanned by `sweep` [γ].
    gamma12_grid: Vec<f64> = vec![0.0];

    /// Sphere radius [nm].
    r_tip: f64 = 100.0;
    /// Relative permittivity of the sphere.
    epsilon: f64 = 2.1;
    /// Vacuum transition wavelength [nm].
    wavelength: f64 = 780.0;
    /// Rabi frequency at the calibration point on the sphere surface [γ₀].
    rabi_ref: f64 = 1.0;
    geometry: MapGeometry = MapGeometry::A;
    /// Fixed separation of the mapped pair [nm].
    r12: f64 = 50.0;
    r_min: f64 = 100.0;
    r_max: f64 = 300.0;
    r_steps: usize = 41;
    theta_min: f64 = 0.0;
    theta_max: f64 = 180.0;
    theta_steps: usize = 37;

    /// One-atom realizations of the tip experiment.
    n1: usize = 20;
    /// Two-atom realizations of the tip experiment.
    n2: usize = 10;
    /// Trajectory length per tip realization [1/γ₀].
    duration: f64 = 1e4;
    /// Shell in which emitters are placed [nm].
    r_inner: f64 = 100.0;
    r_outer: f64 = 200.0;
}

impl RunConfig {
    /// Applies the settings in `text`, read from `path`.
    pub fn apply_text(&mut self, text: &str, path: &str) -> Result<(), ConfigError> {
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let origin = Origin::File {
                path: path.to_string(),
                line,
            };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    origin,
                    key: None,
                    message: format!("expected `key = value`, got '{content}'"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                return Err(ConfigError {
                    origin,
                    key: Some(key.to_string()),
                    message: format!("repeated key (first set on line {first})"),
                });
            }
            self.set(key, value).map_err(|message| ConfigError {
                origin: origin.clone(),
                key: Some(key.to_string()),
                message,
            })?;
            seen.push((key.to_string(), line));
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: Origin::File {
                path: shown.clone(),
                line: 0,
            },
            key: None,
            message: format!("cannot read: {e}"),
        })?;
        self.apply_text(&text, &shown)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ConfigError {
                origin: Origin::Override,
                key: None,
                message: format!("expected key=value, got '{assignment}'"),
            });
        };
        let key = key.trim();
        self.set(key, value.trim()).map_err(|message| ConfigError {
            origin: Origin::Override,
            key: Some(key.to_string()),
            message,
        })
    }

    /// The resolved configuration as a file [`RunConfig::apply_text`] accepts.
    pub fn render(&self) -> String {
        self.pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Checks the settings shared by all trajectory commands.
    pub fn validate_sampling(&self) -> Result<(), ConfigError> {
        positive("dt", self.dt)?;
        positive("bin_width", self.bin_width)?;
        positive("chunk", self.chunk)?;
        if self.tau_max < self.bin_width {
            return Err(invalid("tau_max", "must be at least bin_width"));
        }
        if self.chunk < self.dt {
            return Err(invalid("chunk", "must be at least dt"));
        }
        Ok(())
    }

    pub fn validate_analytic(&self) -> Result<(), ConfigError> {
        positive("omega", self.omega)?;
        positive("t_max", self.t_max)?;
        positive("dt_out", self.dt_out)?;
        if self.delta12_list.is_empty() {
            return Err(invalid("delta12_list", "must not be empty"));
        }
        Ok(())
    }

    /// Two-atom parameters for the `g2` and `sweep` commands.
    pub fn pair_params(&self) -> Result<PhysicalParams, ConfigError> {
        let p = PhysicalParams {
            omega1: self.omega1,
            omega2: self.omega2,
            delta: self.delta,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            gamma12: self.gamma12,
            delta12: self.delta12,
        };
        p.validate().map_err(|e| invalid(param_key(&e), e.to_string()))?;
        Ok(p)
    }

    /// Parameters of the one-atom segment: atom 1 alone.
    pub fn single_params(&self) -> Result<PhysicalParams, ConfigError> {
        let p = self.pair_params()?;
        Ok(PhysicalParams {
            omega2: 0.0,
            gamma12: 0.0,
            delta12: 0.0,
            ..p
        })
    }

    pub fn validate_mixture(&self) -> Result<(), ConfigError> {
        positive("mu", self.mu)?;
        positive("t2", self.t2)?;
        if self.gamma1 <= 0.0 {
            return Err(invalid("gamma1", "the one-atom segment needs gamma1 > 0"));
        }
        Ok(())
    }

    pub fn validate_sweep(&self) -> Result<(), ConfigError> {
        if self.delta12_grid.is_empty() {
            return Err(invalid("delta12_grid", "must not be empty"));
        }
        if self.gamma12_grid.is_empty() {
            return Err(invalid("gamma12_grid", "must not be empty"));
        }
        for &g in &self.gamma12_grid {
            if g * g > self.gamma1 * self.gamma2 * (1.0 + 1e-9) {
                return Err(invalid(
                    "gamma12_grid",
                    format!("gamma12 = {g} violates gamma12^2 <= gamma1*gamma2"),
                ));
            }
        }
        Ok(())
    }

    pub fn tip(&self) -> Result<TipGeometry, ConfigError> {
        positive("wavelength", self.wavelength)?;
        let mut tip = TipGeometry::new(self.r_tip, self.epsilon, self.wavelength).map_err(|e| {
            let key = match &e {
                crate::Error::InvalidParameter { name: "k0", .. } => "wavelength",
                other => param_key(other),
            };
            invalid(key, e.to_string())
        })?;
        tip.rabi_ref = self.rabi_ref;
        tip.validate().map_err(|e| invalid(param_key(&e), e.to_string()))?;
        Ok(tip)
    }

    pub fn r_grid(&self) -> Result<Vec<f64>, ConfigError> {
        grid("r_min", self.r_min, self.r_max, self.r_steps)
    }

    pub fn theta_grid(&self) -> Result<Vec<f64>, ConfigError> {
        if self.theta_min < 0.0 || self.theta_max > 180.0 {
            return Err(invalid("theta_min", "polar angles must lie in [0, 180]"));
        }
        grid("theta_min", self.theta_min, self.theta_max, self.theta_steps)
    }

    /// Checks the map settings and returns the sphere.
    pub fn validate_tip_map(&self) -> Result<TipGeometry, ConfigError> {
        positive("r12", self.r12)?;
        positive("r_min", self.r_min)?;
        self.r_grid()?;
        self.theta_grid()?;
        self.tip()
    }

    /// Checks the placement settings and returns the sphere.
    pub fn validate_tip_experiment(&self) -> Result<TipGeometry, ConfigError> {
        if self.n1 == 0 {
            return Err(invalid("n1", "need at least one one-atom realization"));
        }
        positive("duration", self.duration)?;
        if self.r_outer <= self.r_inner {
            return Err(invalid("r_outer", "must exceed r_inner"));
        }
        let tip = self.tip()?;
        if self.r_inner < tip.r_tip {
            return Err(invalid("r_inner", "must not be smaller than r_tip"));
        }
        Ok(tip)
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

fn grid(key: &str, lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, ConfigError> {
    match steps {
        0 => Err(invalid(key, "grid needs at least one point")),
        1 => Ok(vec![lo]),
        _ if hi <= lo => Err(invalid(key, format!("grid end {hi} must exceed start {lo}"))),
        _ => Ok((0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect()),
    }
}

/// Config key responsible for a library validation error.
fn param_key(e: &crate::Error) -> &'static str {
    match e {
        crate::Error::InvalidParameter { name, .. } => name,
        crate::Error::UnphysicalDecay { .. } => "gamma12",
        crate::Error::InsideSphere { .. } => "r_tip",
        _ => "parameters",
    }
}
