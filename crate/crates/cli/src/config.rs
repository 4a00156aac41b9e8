//! Experiment configuration (TOML).
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Command-line flags override file values.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use matfactor::estimators::Method;
use matfactor::evaluation::Alignment;
use matfactor::io::PanelFormat;
use matfactor::selection::{Demean, SelectionConfig};
use matfactor::simulate::{PlantedTarget, SimulationSpec};
use matfactor::{Error, Result};
use serde::{Deserialize, Serialize};

/// Version of the configuration dialect recorded in every manifest.
pub const CONFIG_FORMAT: &str = "matfactor-toml/1";

/// Simulation design of a study grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Setting {
    /// `p1` fixed, `T = p2` on the grid.
    #[default]
    #[serde(alias = "a")]
    A,
    /// `p2` fixed, `T = p1` on the grid.
    #[serde(alias = "b")]
    B,
    /// Setting A with nonzero factor means.
    #[serde(alias = "d")]
    D,
    /// Setting A with a random entry mean.
    #[serde(alias = "f")]
    F,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub setting: Setting,
    /// Values of the growing dimension.
    pub grid: Vec<usize>,
    /// The dimension held fixed across the grid.
    pub fixed_dim: usize,
    pub k1: usize,
    pub k2: usize,
    pub phi: f64,
    pub psi: f64,
    /// Wrong factor numbers (used on both sides) for the common-component table.
    pub misspecified: Vec<usize>,
    /// Upper bound for the vectorized eigenvalue-ratio selector.
    pub ver_k_max: usize,
    /// Demeaning strategies compared by `select-k-study`; empty means the
    /// one in `[selection]`.
    pub demeans: Vec<Demean>,
    /// Number of recursion steps traced by `recursive-trace`.
    pub steps: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            setting: Setting::A,
            grid: vec![20, 50, 100, 150, 200],
            fixed_dim: 20,
            k1: 3,
            k2: 3,
            phi: 0.1,
            psi: 0.1,
            misspecified: vec![2, 4],
            ver_k_max: 64,
            demeans: Vec::new(),
            steps: 10,
        }
    }
}

impl StudyConfig {
    /// Simulation design at grid value `n`.
    pub fn spec_at(&self, n: usize) -> SimulationSpec {
        let mut s = match self.setting {
            Setting::B => SimulationSpec::new(n, n, self.fixed_dim, self.k1, self.k2),
            _ => SimulationSpec::new(n, self.fixed_dim, n, self.k1, self.k2),
        };
        s.phi = self.phi;
        s.psi = self.psi;
        match self.setting {
            Setting::D => s.factor_mean = vec![1.0; self.k1 * self.k2],
            Setting::F => s.entry_mean = matfactor::simulate::EntryMean::StandardNormal,
            _ => {}
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalityConfig {
    #[serde(rename = "T")]
    pub t: usize,
    pub p1: usize,
    pub p2: usize,
    /// Loading row whose estimation error is standardized.
    pub row: usize,
    pub alignment: Alignment,
    /// Multiplier of the noise column covariance.
    pub noise_scale: f64,
}

impl Default for NormalityConfig {
    fn default() -> Self {
        NormalityConfig { t: 200, p1: 20, p2: 200, row: 0, alignment: Alignment::Procrustes, noise_scale: 1.0 }
    }
}

impl NormalityConfig {
    pub fn spec(&self, seed: u64) -> SimulationSpec {
        let mut s = SimulationSpec::normality(self.t, self.p1, self.p2).with_seed(seed);
        s.noise_scale = self.noise_scale;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PanelConfig {
    pub path: Option<PathBuf>,
    pub format: PanelFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// Factor numbers; both absent means select them from the data.
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub varimax: bool,
    pub varimax_max_iter: usize,
    pub varimax_tol: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig { k1: None, k2: None, varimax: false, varimax_max_iter: 1000, varimax_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RollingConfig {
    pub period_length: usize,
    /// Number of periods the loadings are fitted on.
    pub bandwidth: usize,
    pub k1: usize,
    pub k2: usize,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig { period_length: 12, bandwidth: 10, k1: 2, k2: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaarConfig {
    /// Panel ids of the target series. Its column is dropped from the
    /// panel used for factor extraction.
    pub target_row: Option<String>,
    pub target_col: Option<String>,
    /// Separate `t,value` target file; the whole panel is then used.
    pub target_path: Option<PathBuf>,
    /// Row of the panel whose vector factors feed model 2 when the target
    /// comes from a separate file.
    pub own_row: Option<String>,
    pub window: usize,
    pub k1: usize,
    pub k2: usize,
}

impl Default for FaarConfig {
    fn default() -> Self {
        FaarConfig { target_row: None, target_col: None, target_path: None, own_row: None, window: 80, k1: 2, k2: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    /// Data-generating process; defaults to the study design at the first
    /// grid value. Its seed is replaced by the run seed.
    pub spec: Option<SimulationSpec>,
    /// Optional target series driven by the lagged true factors.
    pub target: Option<PlantedTarget>,
    /// Distance tolerance written into the truth file.
    pub tolerance: f64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig { spec: None, target: None, tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replications: usize,
    pub output_dir: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub study: StudyConfig,
    pub selection: SelectionConfig,
    pub normality: NormalityConfig,
    pub panel: PanelConfig,
    pub estimate: EstimateConfig,
    pub rolling: RollingConfig,
    pub faar: FaarConfig,
    pub generate: GenerateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            replications: 500,
            output_dir: None,
            methods: vec![Method::Initial, Method::Projected],
            study: StudyConfig::default(),
            selection: SelectionConfig::default(),
            normality: NormalityConfig::default(),
            panel: PanelConfig::default(),
            estimate: EstimateConfig::default(),
            rolling: RollingConfig::default(),
            faar: FaarConfig::default(),
            generate: GenerateConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if self.study.grid.is_empty() {
            return bad("study grid must not be empty");
        }
        if self.study.grid.contains(&0) || self.study.fixed_dim == 0 {
            return bad("study dimensions must be positive");
        }
        if self.study.steps == 0 {
            return bad("study steps must be at least 1");
        }
        self.selection.validate()
    }
}
