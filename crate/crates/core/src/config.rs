//! Run configuration shared by the command-line front end and the verifier.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VortexError};
use crate::numerics::GridSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    /// Highest Fourier mode solved.
    #[serde(rename = "K")]
    pub k_max: usize,
    pub n_theta: usize,
    pub profile_tol: f64,
    pub mode_tol: f64,
    /// Seed of the right-hand-side corpus.
    pub seed: u64,
    pub corpus_size: usize,
    /// Highest mode present in corpus data.
    pub corpus_modes: usize,
    pub oracle_radius: f64,
    pub oracle_n: usize,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSpec::default(),
            k_max: 16,
            n_theta: 128,
            profile_tol: 1e-8,
            mode_tol: 1e-6,
            seed: 1000,
            corpus_size: 20,
            corpus_modes: 8,
            oracle_radius: 10.0,
            oracle_n: 256,
            input: None,
            output: None,
            report: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| VortexError::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| VortexError::Config(format!("{}: {}", path.display(), e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("profile_tol", self.profile_tol),
            ("mode_tol", self.mode_tol),
            ("oracle_radius", self.oracle_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(VortexError::Config(format!("{} must be positive, got {}", name, v)));
            }
        }
        if self.n_theta < 4 * self.k_max + 4 || !self.n_theta.is_power_of_two() {
            return Err(VortexError::Config(format!(
                "n_theta = {} must be a power of two >= 4K + 4 = {}",
                self.n_theta,
                4 * self.k_max + 4
            )));
        }
        if self.corpus_modes > self.k_max {
            return Err(VortexError::Config("corpus_modes exceeds K".into()));
        }
        for p in [&self.output, &self.report].into_iter().flatten() {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty());
            if let Some(d) = dir {
                if !d.is_dir() {
                    return Err(VortexError::Config(format!(
                        "output directory {} does not exist",
                        d.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"K": 8, "n_theta": 64}"#).unwrap();
        assert_eq!(c.k_max, 8);
        assert_eq!(c.seed, 1000);
    }

    #[test]
    fn rejects_bad_values() {
        let c = RunConfig { profile_tol: 0.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(VortexError::Config(_))));
        let c = RunConfig { n_theta: 32, ..Default::default() };
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        let c = RunConfig { report: Some("/no/such/dir/r.json".into()), ..Default::default() };
        assert!(c.validate().is_err());
    }
}
