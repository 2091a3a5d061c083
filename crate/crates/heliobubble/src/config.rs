//! Plain-text run configuration: `key = value` lines with '#' comments.
//! Every field has a default, every load records which fields the user set,
//! and the resolved configuration can be embedded into output headers in a
//! form that parses back to the identical configuration.

use crate::equilibrium::{
    AlphaMode, BubbleModel, EmissionMode, ALPHA_BOUNDS, MAX_PRESSURE_BAR,
};
use crate::potential::{load_tabulated, PairPotentialSet, PotentialCurve, PotentialError};
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected 'key = value', got {content:?}")]
    Syntax { line: usize, content: String },
    #[error("unknown configuration key {key:?} (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("configuration key {key:?} set twice (line {line})")]
    DuplicateKey { key: String, line: usize },
    #[error("invalid value for {key}: {reason}")]
    BadValue { key: &'static str, reason: String },
    #[error("potential {key}: {source}")]
    Potential {
        key: &'static str,
        source: PotentialError,
    },
}

/// Whether a field still holds its default or was set by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Default,
    User,
}

/// One pair potential as configured: inline analytic parameters or a
/// tabulated file (r [angstrom], V [hartree]).
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Morse { d_e: f64, r_e: f64, a: f64 },
    LennardJones { epsilon: f64, r_m: f64 },
    File(PathBuf),
}

impl PotentialSpec {
    fn parse(key: &'static str, value: &str) -> Result<Self, ConfigError> {
        let bad = |reason: String| ConfigError::BadValue { key, reason };
        let mut parts = value.split_whitespace();
        let kind = parts.next().ok_or_else(|| bad("empty".to_string()))?;
        let rest: Vec<&str> = parts.collect();
        let number = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("{s:?} is not a number")))
        };
        match kind {
            "morse" => match rest.as_slice() {
                [d, r, a] => Ok(PotentialSpec::Morse {
                    d_e: number(d)?,
                    r_e: number(r)?,
                    a: number(a)?,
                }),
                _ => Err(bad(format!(
                    "morse takes 'd_e r_e a', got {} values",
                    rest.len()
                ))),
            },
            "lj" => match rest.as_slice() {
                [e, r] => Ok(PotentialSpec::LennardJones {
                    epsilon: number(e)?,
                    r_m: number(r)?,
                }),
                _ => Err(bad(format!(
                    "lj takes 'epsilon r_m', got {} values",
                    rest.len()
                ))),
            },
            "file" => {
                if rest.is_empty() {
                    Err(bad("file takes a path".to_string()))
                } else {
                    Ok(PotentialSpec::File(PathBuf::from(rest.join(" "))))
                }
            }
            other => Err(bad(format!(
                "unknown potential form {other:?} (morse | lj | file)"
            ))),
        }
    }

    fn build(&self, key: &'static str) -> Result<PotentialCurve, ConfigError> {
        let lift = |source| ConfigError::Potential { key, source };
        match self {
            PotentialSpec::Morse { d_e, r_e, a } => {
                PotentialCurve::morse(*d_e, *r_e, *a).map_err(lift)
            }
            PotentialSpec::LennardJones { epsilon, r_m } => {
                PotentialCurve::lennard_jones(*epsilon, *r_m).map_err(lift)
            }
            PotentialSpec::File(path) => load_tabulated(path).map_err(lift),
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Morse { d_e, r_e, a } => write!(f, "morse {d_e} {r_e} {a}"),
            PotentialSpec::LennardJones { epsilon, r_m } => write!(f, "lj {epsilon} {r_m}"),
            PotentialSpec::File(path) => write!(f, "file {}", path.display()),
        }
    }
}

fn default_potential_spec(curve: &PotentialCurve) -> PotentialSpec {
    let (d_e, r_e, a) = curve
        .morse_parameters()
        .expect("shipped default potentials are Morse curves");
    PotentialSpec::Morse { d_e, r_e, a }
}

/// Resolved run configuration.  Field meanings follow the model types they
/// feed; see [`RunConfig::to_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rho0_g_cm3: f64,
    pub sigma_j_m2: f64,
    pub alpha_mode: AlphaMode,
    pub emission_mode: EmissionMode,
    pub v_s: PotentialSpec,
    pub v_p_sigma: PotentialSpec,
    pub v_p_pi: PotentialSpec,
    pub quad_rel_tol: f64,
    pub quad_max_subdivisions: usize,
    pub p_min_bar: f64,
    pub p_max_bar: f64,
    pub p_steps: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
    user_keys: BTreeSet<&'static str>,
}

const KEYS: [&str; 15] = [
    "rho0_g_cm3",
    "sigma_j_m2",
    "alpha_mode",
    "alpha",
    "emission_mode",
    "v_s",
    "v_p_sigma",
    "v_p_pi",
    "quad_rel_tol",
    "quad_max_subdivisions",
    "p_min_bar",
    "p_max_bar",
    "p_steps",
    "out_dir",
    "seed",
];

impl Default for RunConfig {
    fn default() -> Self {
        let model = BubbleModel::default();
        RunConfig {
            rho0_g_cm3: model.constants.rho0_g_cm3,
            sigma_j_m2: model.constants.sigma_j_m2,
            alpha_mode: model.alpha_mode,
            emission_mode: model.emission_mode,
            v_s: default_potential_spec(&model.potentials.v_s),
            v_p_sigma: default_potential_spec(&model.potentials.v_p_sigma),
            v_p_pi: default_potential_spec(&model.potentials.v_p_pi),
            quad_rel_tol: model.quad.relative_tolerance,
            quad_max_subdivisions: model.quad.max_subdivisions,
            p_min_bar: 0.0,
            p_max_bar: 24.0,
            p_steps: 13,
            out_dir: PathBuf::from("."),
            seed: 0,
            user_keys: BTreeSet::new(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parse `key = value` text.  Unknown keys, repeated keys, malformed
    /// values, and out-of-range values are all rejected by name.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        // alpha feeds whichever alpha_mode ends up selected, so collect the
        // raw value first and resolve after the full file is read
        let mut alpha = match config.alpha_mode {
            AlphaMode::Fixed(a) => a,
            AlphaMode::Joint { initial } => initial,
        };
        let mut joint = matches!(config.alpha_mode, AlphaMode::Joint { .. });

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                content: raw.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let canonical = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| ConfigError::UnknownKey {
                    key: key.to_string(),
                    line,
                })?;
            if !config.user_keys.insert(canonical) {
                return Err(ConfigError::DuplicateKey {
                    key: key.to_string(),
                    line,
                });
            }

            let bad = |key: &'static str, value: &str| ConfigError::BadValue {
                key,
                reason: format!("cannot parse {value:?}"),
            };
            match *canonical {
                "rho0_g_cm3" => {
                    config.rho0_g_cm3 = value.parse().map_err(|_| bad("rho0_g_cm3", value))?
                }
                "sigma_j_m2" => {
                    config.sigma_j_m2 = value.parse().map_err(|_| bad("sigma_j_m2", value))?
                }
                "alpha_mode" => {
                    joint = match value {
                        "fixed" => false,
                        "joint" => true,
                        _ => {
                            return Err(ConfigError::BadValue {
                                key: "alpha_mode",
                                reason: format!("{value:?} is not 'fixed' or 'joint'"),
                            })
                        }
                    }
                }
                "alpha" => alpha = value.parse().map_err(|_| bad("alpha", value))?,
                "emission_mode" => {
                    config.emission_mode = match value {
                        "franck_condon" => EmissionMode::FranckCondon,
                        "adiabatic" => EmissionMode::Adiabatic,
                        _ => {
                            return Err(ConfigError::BadValue {
                                key: "emission_mode",
                                reason: format!("{value:?} is not 'franck_condon' or 'adiabatic'"),
                            })
                        }
                    }
                }
                "v_s" => config.v_s = PotentialSpec::parse("v_s", value)?,
                "v_p_sigma" => config.v_p_sigma = PotentialSpec::parse("v_p_sigma", value)?,
                "v_p_pi" => config.v_p_pi = PotentialSpec::parse("v_p_pi", value)?,
                "quad_rel_tol" => {
                    config.quad_rel_tol = value.parse().map_err(|_| bad("quad_rel_tol", value))?
                }
                "quad_max_subdivisions" => {
                    config.quad_max_subdivisions =
                        value.parse().map_err(|_| bad("quad_max_subdivisions", value))?
                }
                "p_min_bar" => {
                    config.p_min_bar = value.parse().map_err(|_| bad("p_min_bar", value))?
                }
                "p_max_bar" => {
                    config.p_max_bar = value.parse().map_err(|_| bad("p_max_bar", value))?
                }
                "p_steps" => config.p_steps = value.parse().map_err(|_| bad("p_steps", value))?,
                "out_dir" => config.out_dir = PathBuf::from(value),
                "seed" => config.seed = value.parse().map_err(|_| bad("seed", value))?,
                _ => unreachable!("key list covers every match arm"),
            }
        }

        config.alpha_mode = if joint {
            AlphaMode::Joint { initial: alpha }
        } else {
            AlphaMode::Fixed(alpha)
        };
        config.validate()?;
        Ok(config)
    }

    /// Range checks on every field.  Called by the parser; call again after
    /// mutating fields directly (e.g. command-line overrides).
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &'static str, reason: String| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::BadValue { key, reason })
            }
        };
        check(
            self.rho0_g_cm3.is_finite() && self.rho0_g_cm3 > 0.0,
            "rho0_g_cm3",
            format!("{} must be positive", self.rho0_g_cm3),
        )?;
        check(
            self.sigma_j_m2.is_finite() && self.sigma_j_m2 >= 0.0,
            "sigma_j_m2",
            format!("{} must be non-negative", self.sigma_j_m2),
        )?;
        let alpha = self.alpha();
        check(
            alpha.is_finite() && alpha > ALPHA_BOUNDS.0 && alpha < ALPHA_BOUNDS.1,
            "alpha",
            format!(
                "{alpha} outside the supported range ({}, {})",
                ALPHA_BOUNDS.0, ALPHA_BOUNDS.1
            ),
        )?;
        check(
            self.quad_rel_tol.is_finite() && self.quad_rel_tol > 0.0 && self.quad_rel_tol <= 0.1,
            "quad_rel_tol",
            format!("{} must lie in (0, 0.1]", self.quad_rel_tol),
        )?;
        check(
            (4..=10_000).contains(&self.quad_max_subdivisions),
            "quad_max_subdivisions",
            format!("{} must lie in [4, 10000]", self.quad_max_subdivisions),
        )?;
        check(
            self.p_min_bar.is_finite() && self.p_min_bar >= 0.0,
            "p_min_bar",
            format!("{} must be non-negative", self.p_min_bar),
        )?;
        check(
            self.p_max_bar.is_finite() && self.p_max_bar <= MAX_PRESSURE_BAR,
            "p_max_bar",
            format!("{} exceeds the model ceiling {MAX_PRESSURE_BAR}", self.p_max_bar),
        )?;
        check(
            self.p_min_bar <= self.p_max_bar,
            "p_max_bar",
            format!("grid [{}, {}] is inverted", self.p_min_bar, self.p_max_bar),
        )?;
        check(
            (1..=100_000).contains(&self.p_steps),
            "p_steps",
            format!("{} must lie in [1, 100000]", self.p_steps),
        )?;
        check(
            self.p_steps == 1 || self.p_min_bar < self.p_max_bar,
            "p_steps",
            format!(
                "{} points need p_min_bar < p_max_bar, got both {}",
                self.p_steps, self.p_min_bar
            ),
        )?;
        check(
            !self.out_dir.as_os_str().is_empty(),
            "out_dir",
            "must not be empty".to_string(),
        )?;
        Ok(())
    }

    /// The alpha value feeding [`RunConfig::alpha_mode`].
    pub fn alpha(&self) -> f64 {
        match self.alpha_mode {
            AlphaMode::Fixed(a) => a,
            AlphaMode::Joint { initial } => initial,
        }
    }

    pub fn provenance(&self, key: &str) -> Provenance {
        if self.user_keys.contains(key) {
            Provenance::User
        } else {
            Provenance::Default
        }
    }

    /// The evenly spaced pressure grid, `p_steps` points from `p_min_bar`
    /// to `p_max_bar` inclusive.
    pub fn pressure_grid(&self) -> Vec<f64> {
        if self.p_steps == 1 {
            return vec![self.p_min_bar];
        }
        let h = (self.p_max_bar - self.p_min_bar) / (self.p_steps - 1) as f64;
        (0..self.p_steps)
            .map(|i| {
                if i == self.p_steps - 1 {
                    // pin the endpoint; accumulated rounding must not push
                    // the last pressure past the validated maximum
                    self.p_max_bar
                } else {
                    self.p_min_bar + h * i as f64
                }
            })
            .collect()
    }

    pub fn to_potentials(&self) -> Result<PairPotentialSet, ConfigError> {
        Ok(PairPotentialSet {
            v_s: self.v_s.build("v_s")?,
            v_p_sigma: self.v_p_sigma.build("v_p_sigma")?,
            v_p_pi: self.v_p_pi.build("v_p_pi")?,
        })
    }

    /// Assemble the bubble model this configuration describes.
    pub fn to_model(&self) -> Result<BubbleModel, ConfigError> {
        let mut model = BubbleModel {
            potentials: self.to_potentials()?,
            alpha_mode: self.alpha_mode,
            emission_mode: self.emission_mode,
            ..BubbleModel::default()
        };
        model.constants.rho0_g_cm3 = self.rho0_g_cm3;
        model.constants.sigma_j_m2 = self.sigma_j_m2;
        model.quad.relative_tolerance = self.quad_rel_tol;
        model.quad.max_subdivisions = self.quad_max_subdivisions;
        Ok(model)
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "rho0_g_cm3" => self.rho0_g_cm3.to_string(),
            "sigma_j_m2" => self.sigma_j_m2.to_string(),
            "alpha_mode" => match self.alpha_mode {
                AlphaMode::Fixed(_) => "fixed".to_string(),
                AlphaMode::Joint { .. } => "joint".to_string(),
            },
            "alpha" => self.alpha().to_string(),
            "emission_mode" => match self.emission_mode {
                EmissionMode::FranckCondon => "franck_condon".to_string(),
                EmissionMode::Adiabatic => "adiabatic".to_string(),
            },
            "v_s" => self.v_s.to_string(),
            "v_p_sigma" => self.v_p_sigma.to_string(),
            "v_p_pi" => self.v_p_pi.to_string(),
            "quad_rel_tol" => self.quad_rel_tol.to_string(),
            "quad_max_subdivisions" => self.quad_max_subdivisions.to_string(),
            "p_min_bar" => self.p_min_bar.to_string(),
            "p_max_bar" => self.p_max_bar.to_string(),
            "p_steps" => self.p_steps.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "seed" => self.seed.to_string(),
            _ => unreachable!("key list covers every field"),
        }
    }

    /// Every configuration field as `(key, value)` text, in canonical key
    /// order.  Joining them as `key = value` lines yields text that parses
    /// back to this exact configuration.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().map(|&key| (key, self.value_of(key))).collect()
    }

    /// The resolved configuration as output-header comment lines.
    pub fn header_lines(&self) -> Vec<String> {
        self.entries()
            .into_iter()
            .map(|(key, value)| format!("# config: {key} = {value}"))
            .collect()
    }

    /// Recover a configuration from an output file that embedded one via
    /// [`RunConfig::header_lines`].
    pub fn from_embedded(text: &str) -> Result<Self, ConfigError> {
        let body: Vec<String> = text
            .lines()
            .filter_map(|l| l.strip_prefix("# config: "))
            .map(str::to_string)
            .collect();
        Self::parse(&body.join("\n"))
    }
}
