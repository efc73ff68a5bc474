//! Run configuration: flat key/value config files plus CLI-flag overrides.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::equilibrium::Normalization;
use crate::kernels::{AngularModel, Family, KernelError, KernelSpec};
use crate::quadrature::QuadratureSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Full run configuration for one suite invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    pub quad: QuadratureSpec,
    pub normalization: Normalization,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kernel: KernelSpec::hard(0.0, 0.5, 1.0, 0.1).expect("default kernel valid"),
            quad: QuadratureSpec::default(),
            normalization: Normalization::UnitMass,
        }
    }
}

impl RunConfig {
    /// Parses the flat `key = value` format. Unknown keys are errors;
    /// omitted keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut family = cfg.kernel.family;
        let mut rho = cfg.kernel.rho;
        let mut gamma = cfg.kernel.gamma;
        let mut c_phi = cfg.kernel.c_phi;
        let mut epsilon = cfg.kernel.epsilon;
        let mut angular = cfg.kernel.angular;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |key: &str, value: &str| ConfigError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            let parse_f64 =
                |key: &str, value: &str| value.parse::<f64>().map_err(|_| bad(key, value));
            let parse_usize =
                |key: &str, value: &str| value.parse::<usize>().map_err(|_| bad(key, value));
            match key {
                "family" => {
                    family = match value {
                        "hard" => Family::Hard,
                        "soft" => Family::Soft,
                        _ => return Err(bad(key, value)),
                    }
                }
                "rho" => rho = parse_f64(key, value)?,
                // `a` and `b` are the family-specific exponent spellings
                "a" => {
                    family = Family::Hard;
                    rho = parse_f64(key, value)?;
                }
                "b" => {
                    family = Family::Soft;
                    rho = -parse_f64(key, value)?;
                }
                "gamma" => gamma = parse_f64(key, value)?,
                "c_phi" => c_phi = parse_f64(key, value)?,
                "epsilon" => epsilon = parse_f64(key, value)?,
                "angular_model" => {
                    angular = match value {
                        "canonical" => AngularModel::Canonical,
                        v => {
                            if let Some(c) = v.strip_prefix("constant:") {
                                AngularModel::Constant(parse_f64(key, c)?)
                            } else {
                                return Err(bad(key, value));
                            }
                        }
                    }
                }
                "radial_order" => cfg.quad.radial_order = parse_usize(key, value)?,
                "sphere_order" => cfg.quad.sphere_order = parse_usize(key, value)?,
                "planar_order" => cfg.quad.planar_order = parse_usize(key, value)?,
                "truncation_r" => cfg.quad.truncation_r = parse_f64(key, value)?,
                "mc_samples" => {
                    cfg.quad.mc_samples = value.parse::<u64>().map_err(|_| bad(key, value))?
                }
                "seed" => cfg.quad.seed = value.parse::<u64>().map_err(|_| bad(key, value))?,
                "tol" => cfg.quad.tol = parse_f64(key, value)?,
                "normalization" => {
                    cfg.normalization = match value {
                        "paperLiteral" => Normalization::PaperLiteral,
                        "unitMass" => Normalization::UnitMass,
                        _ => return Err(bad(key, value)),
                    }
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        cfg.kernel = KernelSpec::new(family, rho, gamma, c_phi, epsilon)?.with_angular(angular);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Serializes losslessly back into the flat format.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let family = match self.kernel.family {
            Family::Hard => "hard",
            Family::Soft => "soft",
        };
        writeln!(out, "family = {family}").unwrap();
        writeln!(out, "rho = {}", self.kernel.rho).unwrap();
        writeln!(out, "gamma = {}", self.kernel.gamma).unwrap();
        writeln!(out, "c_phi = {}", self.kernel.c_phi).unwrap();
        writeln!(out, "epsilon = {}", self.kernel.epsilon).unwrap();
        match self.kernel.angular {
            AngularModel::Canonical => writeln!(out, "angular_model = canonical").unwrap(),
            AngularModel::Constant(c) => writeln!(out, "angular_model = constant:{c}").unwrap(),
        }
        writeln!(out, "radial_order = {}", self.quad.radial_order).unwrap();
        writeln!(out, "sphere_order = {}", self.quad.sphere_order).unwrap();
        writeln!(out, "planar_order = {}", self.quad.planar_order).unwrap();
        writeln!(out, "truncation_r = {}", self.quad.truncation_r).unwrap();
        writeln!(out, "mc_samples = {}", self.quad.mc_samples).unwrap();
        writeln!(out, "seed = {}", self.quad.seed).unwrap();
        writeln!(out, "tol = {}", self.quad.tol).unwrap();
        let norm = match self.normalization {
            Normalization::PaperLiteral => "paperLiteral",
            Normalization::UnitMass => "unitMass",
        };
        writeln!(out, "normalization = {norm}").unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_losslessly() {
        let mut cfg = RunConfig::default();
        cfg.kernel = KernelSpec::soft(1.25, 0.375, 2.5, 0.05).unwrap();
        cfg.quad.truncation_r = 13.75;
        cfg.quad.tol = 3.5e-7;
        cfg.quad.seed = 987654321;
        let text = cfg.to_config_string();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.to_config_string(), text);
        assert_eq!(back.kernel.rho, cfg.kernel.rho);
        assert_eq!(back.quad.tol, cfg.quad.tol);
    }

    #[test]
    fn rejects_invalid_gamma_with_range_message() {
        let err = RunConfig::parse("gamma = 1.5").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(0, 1)"), "message: {msg}");
    }

    #[test]
    fn rejects_unknown_keys_and_syntax() {
        assert!(matches!(
            RunConfig::parse("frobnicate = 3"),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            RunConfig::parse("gamma 0.5"),
            Err(ConfigError::Syntax { .. })
        ));
    }

    #[test]
    fn comments_and_b_exponent() {
        let cfg = RunConfig::parse("# comment\nb = 1.0 # soft exponent\ngamma = 0.5\n").unwrap();
        assert_eq!(cfg.kernel.family, Family::Soft);
        assert_eq!(cfg.kernel.rho, -1.0);
    }
}
