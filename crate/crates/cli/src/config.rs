//! Optional TOML configuration.
//!
//! ```toml
//! mm = false
//! lattice = 40000
//!
//! [match]
//! gamma = 0.02
//! n_steps = 12
//! currents_kernel = "cauchy"
//! ```
//!
//! The `[match]` table takes the field names of `MatchParams`.

use crate::cli::{KernelArg, ParamArgs};
use crate::error::CliError;
use morpho_core::currents::CurrentsKernel;
use morpho_core::MatchParams;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub mm: Option<bool>,
    pub lattice: Option<usize>,
    #[serde(rename = "match")]
    pub matching: Option<MatchParams>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

impl From<KernelArg> for CurrentsKernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => CurrentsKernel::Gaussian,
            KernelArg::Cauchy => CurrentsKernel::Cauchy,
        }
    }
}

/// Flags over config over defaults.
pub fn merge_params(config: &ConfigFile, flags: &ParamArgs) -> MatchParams {
    let mut p = config.matching.clone().unwrap_or_default();
    if flags.sigma_v.is_some() {
        p.sigma_v = flags.sigma_v;
    }
    if flags.sigma_w.is_some() {
        p.sigma_w = flags.sigma_w;
    }
    if let Some(k) = flags.currents_kernel {
        p.currents_kernel = k.into();
    }
    if let Some(g) = flags.gamma {
        p.gamma = g;
    }
    if let Some(t) = flags.steps {
        p.n_steps = t;
    }
    if let Some(n) = flags.max_iterations {
        p.max_iterations = n;
    }
    if let Some(t) = flags.grad_tol {
        p.grad_tol = t;
    }
    if let Some(t) = flags.rel_j_tol {
        p.rel_j_tol = t;
    }
    if let Some(c) = flags.armijo_c {
        p.armijo_c = c;
    }
    if let Some(n) = flags.max_halvings {
        p.max_halvings = n;
    }
    if flags.max_controls.is_some() {
        p.max_controls = flags.max_controls;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let cfg: ConfigFile = toml::from_str("mm = true\n[match]\ngamma = 0.5\nn_steps = 4\n").unwrap();
        assert_eq!(cfg.mm, Some(true));
        let flags = ParamArgs {
            gamma: Some(0.1),
            currents_kernel: Some(KernelArg::Cauchy),
            ..ParamArgs::default()
        };
        let p = merge_params(&cfg, &flags);
        assert_eq!(p.gamma, 0.1);
        assert_eq!(p.n_steps, 4);
        assert_eq!(p.currents_kernel, CurrentsKernel::Cauchy);
        assert_eq!(p.max_iterations, MatchParams::default().max_iterations);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ConfigFile>("[match]\ngama = 0.5\n").is_err());
        assert!(toml::from_str::<ConfigFile>("verbose = true\n").is_err());
    }

    #[test]
    fn empty_config_is_defaults() {
        let cfg: ConfigFile = toml::from_str("").unwrap();
        assert_eq!(merge_params(&cfg, &ParamArgs::default()), MatchParams::default());
    }
}
