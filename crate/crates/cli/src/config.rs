//! Experiment configuration: parsing, validation, normalization and hashing.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cheeger_core::{BoxRegion, DomainSpec, PerimeterMode, DEFAULT_BUDGET, DEFAULT_MAX_ITER, DEFAULT_TOL};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Pipelines in dependency order; the derived `Ord` is that order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Eig,
    Sweep,
    Decompose,
    Hk,
    Verify,
    Comb,
    P1sweep,
}

impl Pipeline {
    pub const ALL: [Pipeline; 7] = [
        Pipeline::Eig,
        Pipeline::Sweep,
        Pipeline::Decompose,
        Pipeline::Hk,
        Pipeline::Verify,
        Pipeline::Comb,
        Pipeline::P1sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Eig => "eig",
            Pipeline::Sweep => "sweep",
            Pipeline::Decompose => "decompose",
            Pipeline::Hk => "hk",
            Pipeline::Verify => "verify",
            Pipeline::Comb => "comb",
            Pipeline::P1sweep => "p1sweep",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown pipeline '{s}'"))
    }
}

/// Where the domain comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecSource {
    Builtin { builtin: String },
    File { path: PathBuf },
    Inline(DomainSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eig_tol: f64,
    pub max_iter: usize,
    /// Work limit for exact enumeration.
    pub budget: u64,
    pub local_rounds: usize,
    /// Largest grid (in cells) on which `k >= 2` brute force is tried in 2D+.
    pub bruteforce_cells: usize,
    /// Largest accepted spread of `h_k^p / lambda_k` in the bilateral table.
    pub ratio_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            budget: DEFAULT_BUDGET,
            local_rounds: 10_000,
            bruteforce_cells: 36,
            ratio_band: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombConfig {
    pub teeth: usize,
    pub widths: Vec<f64>,
    pub room: BoxRegion,
}

impl Default for CombConfig {
    fn default() -> Self {
        CombConfig {
            teeth: 4,
            widths: vec![0.25],
            room: BoxRegion::new(vec![[0.0, 2.0], [0.0, 1.0]]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct P1SweepConfig {
    pub p_list: Vec<f64>,
}

impl Default for P1SweepConfig {
    fn default() -> Self {
        P1SweepConfig {
            p_list: vec![2.0, 1.5, 1.2, 1.1],
        }
    }
}

/// An experiment as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: SpecSource,
    pub resolutions: Vec<u32>,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default)]
    pub mode: PerimeterMode,
    pub pipelines: Vec<Pipeline>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub comb: CombConfig,
    #[serde(default)]
    pub p1sweep: P1SweepConfig,
}

fn default_p() -> Vec<f64> {
    vec![2.0]
}

fn default_k() -> Vec<usize> {
    vec![1]
}

/// Validated config with the domain resolved and every list sorted and
/// deduplicated; the hash is taken over this form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedConfig {
    pub spec: DomainSpec,
    pub resolutions: Vec<u32>,
    pub p: Vec<f64>,
    pub k: Vec<usize>,
    pub mode: PerimeterMode,
    pub pipelines: Vec<Pipeline>,
    pub tolerances: Tolerances,
    pub comb: Option<CombConfig>,
    pub p1sweep: Option<P1SweepConfig>,
}

impl NormalizedConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

fn config_err(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses TOML; `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(origin, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Checks every field and resolves the domain; relative domain paths are
    /// taken from `base_dir`.
    pub fn normalize(&self, base_dir: &Path, origin: &str) -> Result<NormalizedConfig> {
        let spec = match &self.spec {
            SpecSource::Builtin { builtin } => DomainSpec::builtin(builtin).ok_or_else(|| {
                config_err(
                    origin,
                    format!(
                        "spec.builtin: unknown spec '{builtin}' (known: {})",
                        DomainSpec::builtin_names().join(", ")
                    ),
                )
            })?,
            SpecSource::File { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| config_err(origin, format!("spec.path: cannot read {}: {e}", full.display())))?;
                DomainSpec::from_toml_str(&text)
                    .map_err(|e| config_err(origin, format!("spec.path: {}: {e}", full.display())))?
            }
            SpecSource::Inline(spec) => {
                spec.validate().map_err(|e| config_err(origin, format!("spec: {e}")))?;
                spec.clone()
            }
        };

        let mut resolutions = self.resolutions.clone();
        if resolutions.is_empty() {
            return Err(config_err(origin, "resolutions: must not be empty"));
        }
        if resolutions.contains(&0) {
            return Err(config_err(origin, "resolutions: must be positive"));
        }
        resolutions.sort_unstable();
        resolutions.dedup();

        let mut k = self.k.clone();
        if k.is_empty() {
            return Err(config_err(origin, "k: must not be empty"));
        }
        if k.contains(&0) {
            return Err(config_err(origin, "k: values must be at least 1"));
        }
        k.sort_unstable();
        k.dedup();

        let mut p = self.p.clone();
        if p.is_empty() {
            return Err(config_err(origin, "p: must not be empty"));
        }
        if let Some(bad) = p.iter().find(|&&v| !(v > 1.0 && v.is_finite())) {
            return Err(config_err(origin, format!("p: {bad} is not in (1, inf)")));
        }
        p.sort_by(f64::total_cmp);
        p.dedup();

        let mut pipelines = self.pipelines.clone();
        if pipelines.is_empty() {
            return Err(config_err(origin, "pipelines: must not be empty"));
        }
        pipelines.sort_unstable();
        pipelines.dedup();

        let t = &self.tolerances;
        if !(t.eig_tol > 0.0) || t.max_iter == 0 || t.budget == 0 {
            return Err(config_err(origin, "tolerances: eig_tol, max_iter and budget must be positive"));
        }

        let comb = pipelines.contains(&Pipeline::Comb).then(|| self.comb.clone());
        let p1sweep = pipelines.contains(&Pipeline::P1sweep).then(|| self.p1sweep.clone());
        Ok(NormalizedConfig {
            spec,
            resolutions,
            p,
            k,
            mode: self.mode,
            pipelines,
            tolerances: self.tolerances.clone(),
            comb,
            p1sweep,
        })
    }
}
