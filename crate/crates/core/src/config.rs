//! Run configuration for the batch front end: defaults, a flat
//! `key=value` config file, and flag overrides (flags win).

use crate::sampler::SamplerConfig;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub sampler: SamplerConfig,
    /// L2 penalty strength for all three model fits.
    pub lambda: f64,
    /// Points per axis of the probability grids.
    pub grid_resolution: usize,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerConfig::default(),
            lambda: 1.0,
            grid_resolution: 100,
            output_dir: PathBuf::from("out"),
            emit_svg: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigError {
    #[error("config key '{key}': {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config line {line}: expected key=value, got '{text}'")]
    Malformed { line: usize, text: String },
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
}

/// Settings given on the command line; `None` means "not provided".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub resolution: Option<usize>,
    pub out: Option<PathBuf>,
    pub no_svg: bool,
    pub exact: bool,
}

impl RunConfig {
    /// Resolve a config from an optional file and flag overrides, then
    /// validate the result. Precedence: defaults < file < flags.
    pub fn resolve(file_text: Option<&str>, flags: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(text) = file_text {
            cfg.apply_file(text)?;
        }
        cfg.apply_flags(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed {
                line: index + 1,
                text: raw.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let invalid = |reason: String| ConfigError::Invalid {
                key: key.to_string(),
                reason,
            };
            match key {
                "n" => self.sampler.n = value.parse().map_err(|e| invalid(format!("{e}")))?,
                "seed" => self.sampler.seed = value.parse().map_err(|e| invalid(format!("{e}")))?,
                "sigma" => {
                    self.sampler.sigma = value.parse().map_err(|e| invalid(format!("{e}")))?
                }
                "lambda" => self.lambda = value.parse().map_err(|e| invalid(format!("{e}")))?,
                "resolution" => {
                    self.grid_resolution = value.parse().map_err(|e| invalid(format!("{e}")))?
                }
                "out" => self.output_dir = PathBuf::from(value),
                "svg" => self.emit_svg = parse_bool(value).map_err(invalid)?,
                "exact" => self.sampler.exact_mode = parse_bool(value).map_err(invalid)?,
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        Ok(())
    }

    fn apply_flags(&mut self, flags: &Overrides) {
        if let Some(seed) = flags.seed {
            self.sampler.seed = seed;
        }
        if let Some(n) = flags.n {
            self.sampler.n = n;
        }
        if let Some(sigma) = flags.sigma {
            self.sampler.sigma = sigma;
        }
        if let Some(lambda) = flags.lambda {
            self.lambda = lambda;
        }
        if let Some(resolution) = flags.resolution {
            self.grid_resolution = resolution;
        }
        if let Some(out) = &flags.out {
            self.output_dir = out.clone();
        }
        if flags.no_svg {
            self.emit_svg = false;
        }
        if flags.exact {
            self.sampler.exact_mode = true;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: String| ConfigError::Invalid {
            key: key.into(),
            reason,
        };
        if self.sampler.n < 1 {
            return Err(invalid("n", "must be >= 1".into()));
        }
        if !(self.sampler.sigma > 0.0) {
            return Err(invalid(
                "sigma",
                format!("must be > 0, got {}", self.sampler.sigma),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(
                "lambda",
                format!("must be finite and >= 0, got {}", self.lambda),
            ));
        }
        if self.grid_resolution < 2 {
            return Err(invalid(
                "resolution",
                format!("must be >= 2, got {}", self.grid_resolution),
            ));
        }
        self.sampler
            .validate()
            .map_err(|reason| ConfigError::Invalid {
                key: "sampler".into(),
                reason,
            })
    }
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected true/false, got '{other}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_means_defaults() {
        let cfg = RunConfig::resolve(Some(""), &Overrides::default()).unwrap();
        assert_eq!(cfg.sampler.n, 1000);
        assert_eq!(cfg.sampler.sigma, 10.0);
        assert_eq!(cfg.lambda, 1.0);
        assert_eq!(cfg.grid_resolution, 100);
        assert!(cfg.emit_svg);
    }

    #[test]
    fn file_values_and_comments() {
        let text = "# comment\nn = 50\nseed=7\nsigma=5.0  # inline comment\nsvg=false\n";
        let cfg = RunConfig::resolve(Some(text), &Overrides::default()).unwrap();
        assert_eq!(cfg.sampler.n, 50);
        assert_eq!(cfg.sampler.seed, 7);
        assert_eq!(cfg.sampler.sigma, 5.0);
        assert!(!cfg.emit_svg);
    }

    #[test]
    fn flags_override_file() {
        let flags = Overrides {
            seed: Some(42),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(Some("seed=7"), &flags).unwrap();
        assert_eq!(cfg.sampler.seed, 42);
    }

    #[test]
    fn bad_values_name_the_key() {
        let err = RunConfig::resolve(Some("sigma=-1"), &Overrides::default()).unwrap_err();
        assert!(
            matches!(err, ConfigError::Invalid { ref key, .. } if key == "sigma"),
            "{err}"
        );
        let err = RunConfig::resolve(Some("volume=11"), &Overrides::default()).unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("volume".into()));
        let err = RunConfig::resolve(Some("n fifty"), &Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 1, .. }));
        let err = RunConfig::resolve(Some("resolution=1"), &Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "resolution"));
    }
}
