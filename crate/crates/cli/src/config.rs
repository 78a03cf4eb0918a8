use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::error::CliError;

/// Parameters shared by every subcommand. Each one can come from a flag or
/// from the TOML file passed with `--config`; flags win.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Environment dynamics: east, west, fa1f or isf
    #[arg(long)]
    pub kind: Option<String>,
    /// Flip rate scale of the isf dynamics
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Number of lattice sites L
    #[arg(long, short = 'L')]
    pub sites: Option<usize>,
    /// ring or segment; each command checks it against the topology it needs
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Profile half-width W
    #[arg(long)]
    pub window: Option<usize>,
    /// Starting site of the front run
    #[arg(long)]
    pub origin: Option<usize>,
    #[arg(long)]
    pub inner_horizon: Option<f64>,
    /// Highest series order
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub s_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub y_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rho_grid: Option<Vec<f64>>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the available parallelism)
    #[arg(long, env = "EASTWALK_WORKERS")]
    pub workers: Option<usize>,
    /// Output CSV path; the SVG goes next to it
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),*) => {
        Params { $($field: $flags.$field.or($file.$field)),* }
    };
}

impl Params {
    /// Flag values where present, file values otherwise.
    pub fn over(self, file: Params) -> Params {
        overlay!(self, file; kind, gamma, rho, epsilon, sites, topology, horizon, burn_in,
            replicas, window, origin, inner_horizon, order, s_grid, t_grid, y_grid, eps_grid,
            rho_grid, seed, workers, out)
    }
}

pub fn load(path: &Path) -> Result<Params, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation {
        key: "config".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    toml::from_str(&text).map_err(|e| CliError::Validation {
        key: "config".into(),
        message: e.message().to_string(),
    })
}

/// Combines `--config` (if any) with the flags.
pub fn resolve(config: Option<&Path>, flags: Params) -> Result<Params, CliError> {
    match config {
        Some(path) => Ok(flags.over(load(path)?)),
        None => Ok(flags),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_take_precedence() {
        let file: Params = toml::from_str("replicas = 50\nrho = 0.3\ns-grid = [0.0, 1.5]").unwrap();
        let flags = Params {
            replicas: Some(80),
            ..Params::default()
        };
        let p = flags.over(file);
        assert_eq!(p.replicas, Some(80));
        assert_eq!(p.rho, Some(0.3));
        assert_eq!(p.s_grid, Some(vec![0.0, 1.5]));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<Params>("replicas = 50\nreplcas = 3").unwrap_err();
        assert!(err.message().contains("replcas"));
    }
}
