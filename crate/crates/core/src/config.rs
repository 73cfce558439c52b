//! Experiment configuration: JSON schema, validation, deterministic hashing,
//! and the float formatting used by every exported file.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SusyError};

/// C-style `%.17g`: up to 17 significant digits, trailing zeros stripped,
/// scientific notation outside the fixed-point exponent window. Guarantees
/// bit round-trips for f64.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let formatted = format!("{:.16e}", x);
    let (mant, exp_str) = formatted.split_once('e').expect("exponent form");
    let exp: i32 = exp_str.parse().expect("exponent parse");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let trimmed = digits.trim_end_matches('0');
    let trimmed = if trimmed.is_empty() { "0" } else { trimmed };
    let sign = if neg { "-" } else { "" };
    if exp < -4 || exp >= 17 {
        let head = &trimmed[..1];
        let tail = &trimmed[1..];
        if tail.is_empty() {
            format!("{sign}{head}e{exp:+03}")
        } else {
            format!("{sign}{head}.{tail}e{exp:+03}")
        }
    } else if exp >= 0 {
        let ip_len = exp as usize + 1;
        if trimmed.len() <= ip_len {
            let mut ip = trimmed.to_string();
            ip.push_str(&"0".repeat(ip_len - trimmed.len()));
            format!("{sign}{ip}")
        } else {
            format!("{sign}{}.{}", &trimmed[..ip_len], &trimmed[ip_len..])
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{trimmed}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    KitaevChain { mu: f64, t: f64, n: usize },
    ChiralSc { m: f64, nx: usize, ny: usize },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::KitaevChain { mu, t, n } => {
                if !mu.is_finite() || !t.is_finite() {
                    return Err(SusyError::ConfigInvalid(
                        "kitaev parameters must be finite".into(),
                    ));
                }
                if *n == 0 || n % 2 != 0 {
                    return Err(SusyError::ConfigInvalid(
                        "kitaev n must be positive and even".into(),
                    ));
                }
                Ok(())
            }
            ModelSpec::ChiralSc { m, nx, ny } => {
                if !m.is_finite() {
                    return Err(SusyError::ConfigInvalid(
                        "chiral SC m must be finite".into(),
                    ));
                }
                if *nx == 0 || *ny == 0 || nx % 2 != 0 || ny % 2 != 0 {
                    return Err(SusyError::ConfigInvalid(
                        "chiral SC grid sizes must be positive and even".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// The model's closed-form supercharge.
    #[default]
    ClosedForm,
    /// Frame construction from the Hamiltonian.
    General,
    /// Strictly local BDI blocks (Kitaev chain only).
    Bdi,
}

fn default_output_dir() -> String {
    "out".into()
}

fn default_gap_floor() -> f64 {
    crate::DEFAULT_GAP_FLOOR
}

fn default_ode_tol() -> f64 {
    crate::DEFAULT_ODE_TOL
}

fn default_lengths() -> Vec<usize> {
    vec![4, 8, 12]
}

fn default_ray() -> Vec<i64> {
    vec![1]
}

fn default_r_max() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub construction: Construction,
    #[serde(default = "default_lengths")]
    pub subsystem_lengths: Vec<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_gap_floor")]
    pub gap_floor: f64,
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ray")]
    pub ray: Vec<i64>,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    #[serde(default)]
    pub fit_window: Option<(usize, usize)>,
}

impl ExperimentConfig {
    pub fn from_model(model: ModelSpec) -> Self {
        ExperimentConfig {
            model,
            construction: Construction::default(),
            subsystem_lengths: default_lengths(),
            output_dir: default_output_dir(),
            gap_floor: default_gap_floor(),
            ode_tol: default_ode_tol(),
            seed: 0,
            ray: default_ray(),
            r_max: default_r_max(),
            fit_window: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| SusyError::ConfigInvalid(format!("JSON schema violation: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.gap_floor > 0.0 && self.gap_floor.is_finite()) {
            return Err(SusyError::ConfigInvalid(
                "gap_floor must be positive".into(),
            ));
        }
        if !(self.ode_tol > 0.0 && self.ode_tol.is_finite()) {
            return Err(SusyError::ConfigInvalid("ode_tol must be positive".into()));
        }
        if self.subsystem_lengths.iter().any(|&l| l == 0) {
            return Err(SusyError::ConfigInvalid(
                "subsystem lengths must be positive".into(),
            ));
        }
        if self.ray.is_empty() || self.ray.len() > 3 || self.ray.iter().all(|&d| d == 0) {
            return Err(SusyError::ConfigInvalid(
                "ray must be a nonzero lattice vector".into(),
            ));
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical JSON form, embedded in every output.
    /// The output directory does not identify the experiment and is skipped.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = String::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
