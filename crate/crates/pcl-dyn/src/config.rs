//! TOML run configuration and its resolution into core objects.

use std::path::Path;

use pcl_core::bath::{
    correlation_fdt, discrete_mode_decompose, matsubara_decompose_drude, prony_fit, validate_spectrum, Branch,
    DissipatonSpectrum, QuadratureConfig, SpectralDensity, SpectrumReport, DEFAULT_IMAG_TOLERANCE,
};
use pcl_core::generator::SystemModel;
use pcl_core::hierarchy::{CouplingKind, SignConvention};
use pcl_core::integrator::PropagationConfig;
use pcl_core::linalg::density_from_bloch;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemSection,
    pub bath: BathSection,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub propagation: PropagationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Two-level benchmark `H_S = ε σ_z`, `S = α σ_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub epsilon: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// Bloch vector of `ρ_S(0)`.
    #[serde(default = "north_pole")]
    pub initial_bloch: [f64; 3],
}

fn north_pole() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKind {
    Drude,
    DiscreteMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decomposition {
    Matsubara,
    Prony,
    /// The two-term form of a single undamped mode.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub kind: BathKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// `k_B T`; exactly one of `temperature` and `beta` must be given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub decomposition: Decomposition,
    #[serde(default = "default_terms")]
    pub terms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prony: Option<PronySection>,
    /// Relative `|Im Σ η| / |Re Σ η|` above which a warning is issued.
    #[serde(default = "default_imag_tolerance")]
    pub imag_tolerance: f64,
}

fn default_terms() -> usize {
    2
}

fn default_imag_tolerance() -> f64 {
    DEFAULT_IMAG_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PronySection {
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Pcl,
    Cl,
    Both,
}

impl ModelChoice {
    pub fn kinds(self) -> Vec<CouplingKind> {
        match self {
            ModelChoice::Pcl => vec![CouplingKind::Pcl],
            ModelChoice::Cl => vec![CouplingKind::Cl],
            ModelChoice::Both => vec![CouplingKind::Pcl, CouplingKind::Cl],
        }
    }
}

impl std::str::FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pcl" => Ok(ModelChoice::Pcl),
            "cl" => Ok(ModelChoice::Cl),
            "both" => Ok(ModelChoice::Both),
            other => Err(format!("unknown model '{other}' (expected pcl, cl or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default = "default_model")]
    pub model: ModelChoice,
    #[serde(default = "default_convention")]
    pub sign_convention: String,
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_model() -> ModelChoice {
    ModelChoice::Both
}

fn default_convention() -> String {
    "even".into()
}

fn default_levels() -> usize {
    6
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self { model: default_model(), sign_convention: default_convention(), levels: default_levels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_t_final() -> f64 {
    50.0
}

fn default_stride() -> usize {
    10
}

impl Default for PropagationSection {
    fn default() -> Self {
        Self { dt: default_dt(), t_final: default_t_final(), stride: default_stride() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; `--out` overrides it.
    #[serde(default = "default_dir")]
    pub dir: String,
    /// File-name prefix.
    #[serde(default = "default_tag")]
    pub tag: String,
}

fn default_dir() -> String {
    "out".into()
}

fn default_tag() -> String {
    "run".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), tag: default_tag() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Lambda,
    Alpha,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration always serializes")
    }

    pub fn beta(&self) -> Result<f64, CliError> {
        let beta = match (self.bath.temperature, self.bath.beta) {
            (Some(t), None) => 1.0 / t,
            (None, Some(b)) => b,
            _ => return Err(CliError::Validation("give exactly one of bath.temperature and bath.beta".into())),
        };
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(CliError::Validation(format!("inverse temperature must be positive, got {beta}")));
        }
        Ok(beta)
    }

    pub fn convention(&self) -> Result<SignConvention, CliError> {
        self.coupling.sign_convention.parse().map_err(CliError::Validation)
    }

    pub fn spectral_density(&self) -> Result<SpectralDensity, CliError> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Validation(format!("bath.{name} is required")));
        let sd = match self.bath.kind {
            BathKind::Drude => SpectralDensity::drude(need(self.bath.xi, "xi")?, need(self.bath.gamma_c, "gamma_c")?),
            BathKind::DiscreteMode => {
                SpectralDensity::discrete_mode(need(self.bath.omega0, "omega0")?, need(self.bath.c, "c")?)
            }
        };
        sd.map_err(CliError::from_core)
    }

    /// The dissipaton spectrum requested by the `[bath]` section.
    pub fn spectrum(&self) -> Result<DissipatonSpectrum, CliError> {
        let beta = self.beta()?;
        let sd = self.spectral_density()?;
        let spec = match (self.bath.kind, self.bath.decomposition, &sd) {
            (BathKind::Drude, Decomposition::Matsubara, _) => matsubara_decompose_drude(&sd, beta, self.bath.terms),
            (BathKind::Drude, Decomposition::Prony, _) => {
                let prony = self
                    .bath
                    .prony
                    .as_ref()
                    .ok_or_else(|| CliError::Validation("prony decomposition needs a [bath.prony] section".into()))?;
                if prony.samples < 2 || !(prony.t_max > 0.0) {
                    return Err(CliError::Validation("bath.prony needs t_max > 0 and samples >= 2".into()));
                }
                let h = prony.t_max / prony.samples as f64;
                let cfg = QuadratureConfig::default();
                let samples = (1..=prony.samples)
                    .map(|j| {
                        let t = j as f64 * h;
                        correlation_fdt(&sd, beta, t, Branch::Forward, &cfg).map(|v| (t, v.value))
                    })
                    .collect::<pcl_core::Result<Vec<_>>>()
                    .map_err(CliError::from_core)?;
                prony_fit(&samples, self.bath.terms, beta).map(|fit| fit.spectrum)
            }
            (BathKind::DiscreteMode, Decomposition::Exact, SpectralDensity::DiscreteMode { omega0, c }) => {
                discrete_mode_decompose(*omega0, *c, beta)
            }
            (kind, dec, _) => {
                return Err(CliError::Validation(format!("decomposition {dec:?} is not available for bath kind {kind:?}")))
            }
        };
        spec.map_err(CliError::from_core)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.system;
        for (name, v) in [("epsilon", s.epsilon), ("alpha", s.alpha), ("lambda", s.lambda)] {
            if !v.is_finite() {
                return Err(CliError::Validation(format!("system.{name} must be finite")));
            }
        }
        let [x, y, z] = s.initial_bloch;
        if x * x + y * y + z * z > 1.0 + 1e-12 {
            return Err(CliError::Validation("system.initial_bloch must lie in the unit ball".into()));
        }
        let p = &self.propagation;
        if !(p.dt > 0.0) || !(p.t_final >= 0.0) || p.stride == 0 {
            return Err(CliError::Validation("propagation needs dt > 0, t_final >= 0 and stride >= 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() || sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Validation("sweep.values must be a non-empty list of finite numbers".into()));
            }
        }
        self.convention()?;
        self.beta()?;
        Ok(())
    }

    /// Copy of the configuration with the sweep parameter set to `value`.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Self {
        let mut out = self.clone();
        match parameter {
            SweepParameter::Lambda => out.system.lambda = value,
            SweepParameter::Alpha => out.system.alpha = value,
        }
        out.sweep = None;
        out
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        self.validate()?;
        let spectrum = self.spectrum()?;
        let report = validate_spectrum(&spectrum, self.bath.imag_tolerance).map_err(CliError::from_core)?;
        let s = &self.system;
        let model = SystemModel::two_level(s.epsilon, s.alpha, s.lambda);
        let [x, y, z] = s.initial_bloch;
        let propagation = PropagationConfig {
            dt: self.propagation.dt,
            t_final: self.propagation.t_final,
            stride: self.propagation.stride,
            initial: density_from_bloch(x, y, z),
        };
        Ok(Resolved {
            model,
            spectrum,
            report,
            kinds: self.coupling.model.kinds(),
            convention: self.convention()?,
            levels: self.coupling.levels,
            propagation,
        })
    }
}

/// Core objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: SystemModel,
    pub spectrum: DissipatonSpectrum,
    pub report: SpectrumReport,
    pub kinds: Vec<CouplingKind>,
    pub convention: SignConvention,
    pub levels: usize,
    pub propagation: PropagationConfig,
}

impl Resolved {
    pub fn g(&self) -> f64 {
        self.spectrum.g_factor(self.model.lambda())
    }
}
