use crate::error::CliError;
use gerryopt::Taste;
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const DEFAULT_GAMMA: f64 = 6.0;
pub const DEFAULT_GRID: usize = 201;
pub const DEFAULT_OUT: &str = "gerryopt-out";

/// Optional settings read from `--config`. Every key may be omitted.
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub gamma: Option<f64>,
    pub grid: Option<usize>,
    pub taste: Option<Taste>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub refine: Option<usize>,
    pub gammas: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub tol_mass: Option<f64>,
    pub tol_dual: Option<f64>,
    pub tol_gap: Option<f64>,
    pub tol_feasibility: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }
}

/// Values given on the command line; `None` falls through to the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub grid: Option<usize>,
    pub taste: Option<Taste>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub refine: Option<usize>,
    pub gammas: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub tol_mass: Option<f64>,
    pub tol_dual: Option<f64>,
    pub tol_gap: Option<f64>,
    pub tol_feasibility: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Assignments at or below this are inactive.
    pub mass: f64,
    /// Allowed dual-feasibility slack on the active support.
    pub dual: f64,
    /// Allowed primal-dual objective gap.
    pub gap: f64,
    /// Allowed type-mass and threshold residuals.
    pub feasibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { mass: 1e-9, dual: 1e-6, gap: 1e-7, feasibility: 1e-8 }
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub grid: usize,
    pub taste: Taste,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub refine: usize,
    pub gammas: Vec<f64>,
    pub alpha: f64,
    pub tol: Tolerances,
}

impl RunConfig {
    /// Flags win over the config file, which wins over defaults.
    pub fn resolve(flags: Overrides, file: ConfigFile) -> Result<Self, CliError> {
        let d = Tolerances::default();
        let cfg = RunConfig {
            gamma: flags.gamma.or(file.gamma).unwrap_or(DEFAULT_GAMMA),
            grid: flags.grid.or(file.grid).unwrap_or(DEFAULT_GRID),
            taste: flags.taste.or(file.taste).unwrap_or_default(),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            jobs: flags.jobs.or(file.jobs),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            refine: flags.refine.or(file.refine).unwrap_or(1),
            gammas: flags.gammas.or(file.gammas).unwrap_or_default(),
            alpha: flags.alpha.or(file.alpha).unwrap_or(0.1),
            tol: Tolerances {
                mass: flags.tol_mass.or(file.tol_mass).unwrap_or(d.mass),
                dual: flags.tol_dual.or(file.tol_dual).unwrap_or(d.dual),
                gap: flags.tol_gap.or(file.tol_gap).unwrap_or(d.gap),
                feasibility: flags.tol_feasibility.or(file.tol_feasibility).unwrap_or(d.feasibility),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        check_gamma(self.gamma)?;
        for &g in &self.gammas {
            check_gamma(g)?;
        }
        if self.grid < 3 || self.grid % 2 == 0 {
            return Err(CliError::config(format!("grid size must be odd and at least 3, got {}", self.grid)));
        }
        if self.jobs == Some(0) {
            return Err(CliError::config("jobs must be at least 1"));
        }
        if self.refine == 0 {
            return Err(CliError::config("refine factor must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let t = self.tol;
        for (name, v) in [("tol-mass", t.mass), ("tol-dual", t.dual), ("tol-gap", t.gap), ("tol-feasibility", t.feasibility)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("{name} must be a positive number, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_gamma(g: f64) -> Result<(), CliError> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("gamma must be positive and finite, got {g}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = ConfigFile { gamma: Some(2.0), grid: Some(51), seed: Some(9), ..Default::default() };
        let flags = Overrides { gamma: Some(3.0), ..Default::default() };
        let cfg = RunConfig::resolve(flags, file).unwrap();
        assert_eq!(cfg.gamma, 3.0);
        assert_eq!(cfg.grid, 51);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.taste, Taste::Normal);
        assert_eq!(cfg.tol, Tolerances::default());
        assert_eq!(cfg.out, PathBuf::from(DEFAULT_OUT));
    }

    #[test]
    fn rejects_even_or_tiny_grids() {
        for grid in [1, 2, 4, 200] {
            let flags = Overrides { grid: Some(grid), ..Default::default() };
            assert!(RunConfig::resolve(flags, ConfigFile::default()).is_err(), "{grid}");
        }
    }

    #[test]
    fn rejects_bad_gamma() {
        for g in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let flags = Overrides { gamma: Some(g), ..Default::default() };
            assert!(RunConfig::resolve(flags, ConfigFile::default()).is_err());
        }
    }

    #[test]
    fn unknown_config_keys_are_errors() {
        let err = serde_json::from_str::<ConfigFile>(r#"{"gama": 2}"#);
        assert!(err.is_err());
        let ok: ConfigFile = serde_json::from_str(r#"{"gamma": 2, "taste": "logistic"}"#).unwrap();
        assert_eq!(ok.taste, Some(Taste::Logistic));
    }
}
