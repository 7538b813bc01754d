//! Configurations of the two-level benchmark figures.
//!
//! All three share the Drude bath `ξ = 1`, `γ = ε_S`, `k_B T = 2ε_S` with the
//! pole-plus-first-Matsubara `K = 2` spectrum and truncation `L = 6`.

use crate::config::{
    BathKind, BathSection, Config, CouplingSection, Decomposition, ModelChoice, OutputSection, PropagationSection,
    SweepParameter, SweepSection, SystemSection,
};
use crate::error::CliError;

pub const NAMES: [&str; 3] = ["fig2", "fig3", "fig4"];

fn base(tag: &str, alpha: f64, lambda: f64) -> Config {
    Config {
        system: SystemSection { epsilon: 1.0, alpha, lambda, initial_bloch: [0.0, 0.0, 1.0] },
        bath: BathSection {
            kind: BathKind::Drude,
            xi: Some(1.0),
            gamma_c: Some(1.0),
            omega0: None,
            c: None,
            temperature: Some(2.0),
            beta: None,
            decomposition: Decomposition::Matsubara,
            terms: 2,
            prony: None,
            imag_tolerance: pcl_core::bath::DEFAULT_IMAG_TOLERANCE,
        },
        coupling: CouplingSection { model: ModelChoice::Both, sign_convention: "even".into(), levels: 6 },
        propagation: PropagationSection::default(),
        output: OutputSection { dir: "out".into(), tag: tag.into() },
        sweep: None,
    }
}

/// `fig2`: α = ε_S, λ = 0.5, both models.
/// `fig3`: PCL λ-sweep {0.5, 1, 2} at α = 2ε_S.
/// `fig4`: PCL α-sweep {0.5, 1, 1.5, 2}ε_S at λ = 0.5.
pub fn preset(name: &str) -> Result<Config, CliError> {
    match name {
        "fig2" => Ok(base("fig2", 1.0, 0.5)),
        "fig3" => {
            let mut c = base("fig3", 2.0, 0.5);
            c.coupling.model = ModelChoice::Pcl;
            c.sweep = Some(SweepSection { parameter: SweepParameter::Lambda, values: vec![0.5, 1.0, 2.0] });
            Ok(c)
        }
        "fig4" => {
            let mut c = base("fig4", 1.0, 0.5);
            c.coupling.model = ModelChoice::Pcl;
            c.sweep = Some(SweepSection { parameter: SweepParameter::Alpha, values: vec![0.5, 1.0, 1.5, 2.0] });
            Ok(c)
        }
        other => Err(CliError::Validation(format!("unknown preset '{other}' (expected one of {})", NAMES.join(", ")))),
    }
}

/// Every member configuration of a preset, with sweeps expanded.
pub fn members(config: &Config) -> Vec<Config> {
    match &config.sweep {
        None => vec![config.clone()],
        Some(s) => s.values.iter().map(|&v| config.with_parameter(s.parameter, v)).collect(),
    }
}
