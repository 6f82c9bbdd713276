//! Experiment configuration files.
//!
//! A config is a TOML document; every table rejects unknown keys. Relative
//! paths inside it are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nova_core::cost::ClaimSet;
use nova_core::fit::TrainConfig;
use nova_core::fixed::FixedPointFormat;
use nova_core::func::FunctionId;
use nova_core::profiles::{AcceleratorProfile, ApproximatorKind, ProfileSet, WorkloadSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fitter {
    #[default]
    Mlp,
    Direct,
}

impl Fitter {
    pub fn name(self) -> &'static str {
        match self {
            Fitter::Mlp => "mlp",
            Fitter::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_functions")]
    pub functions: Vec<FunctionId>,
    #[serde(default = "default_breakpoints")]
    pub breakpoints: Vec<usize>,
    #[serde(default)]
    pub format: FixedPointFormat,
    /// Defaults to every bundled profile for `report`, `react` for `sim`.
    pub profile: Option<String>,
    /// Empty means every known workload.
    #[serde(default)]
    pub workloads: Vec<String>,
    /// Empty means every approximator the profile describes.
    #[serde(default)]
    pub kinds: Vec<ApproximatorKind>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub report: ReportSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub data: DataSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

fn default_functions() -> Vec<FunctionId> {
    vec![FunctionId::Exp, FunctionId::Gelu, FunctionId::Sigmoid]
}

fn default_breakpoints() -> Vec<usize> {
    vec![8, 16]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub samples: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Grid size for error metrics and for the direct oracle fit.
    pub eval_samples: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            samples: t.samples,
            iterations: t.iterations,
            learning_rate: t.learning_rate,
            eval_samples: 4096,
        }
    }
}

impl FitSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            samples: self.samples,
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub function: FunctionId,
    pub breakpoints: usize,
    pub fitter: Fitter,
    /// PWL exchange file to simulate instead of fitting one.
    pub pwl_file: Option<PathBuf>,
    pub num_routers: Option<usize>,
    /// Inputs per router; defaults to every neuron.
    pub active_lanes: Option<usize>,
    /// Defaults to every neuron in one base cycle.
    pub lanes_per_cycle: Option<usize>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            function: FunctionId::Gelu,
            breakpoints: 16,
            fitter: Fitter::Mlp,
            pwl_file: None,
            num_routers: None,
            active_lanes: None,
            lanes_per_cycle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    /// Overrides every workload's sequence length.
    pub seq_len: Option<u64>,
    pub breakpoints: usize,
    pub lanes_per_cycle: Option<usize>,
    /// Set both to report the approximator's share of accelerator energy.
    pub accelerator_power_mw: Option<f64>,
    pub inference_time_s: Option<f64>,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            seq_len: None,
            breakpoints: 16,
            lanes_per_cycle: None,
            accelerator_power_mw: None,
            inference_time_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Empty means every profile.
    pub profiles: Vec<String>,
    pub fitter: Fitter,
}

/// Replacement data files; bundled tables are used when unset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub profiles: Option<PathBuf>,
    pub workloads: Option<PathBuf>,
    pub claims: Option<PathBuf>,
}

/// Seeds are recorded in TOML summaries, whose integers are 64-bit signed.
pub const MAX_SEED: u64 = i64::MAX as u64;

/// A parsed config plus command-line overrides and the data it refers to.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub profiles: ProfileSet,
    pub workloads: WorkloadSet,
    pub claims: ClaimSet,
}

impl Experiment {
    pub fn load(config: Option<&Path>, seed: Option<u64>, out_dir: Option<PathBuf>) -> Result<Self> {
        let (mut cfg, base) = match config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let cfg: ExperimentConfig =
                    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (ExperimentConfig::default(), PathBuf::new()),
        };
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        cfg.sim.pwl_file = cfg.sim.pwl_file.as_deref().map(resolve);
        let read = |p: &Option<PathBuf>| -> Result<Option<String>> {
            p.as_deref()
                .map(|p| {
                    let p = resolve(p);
                    fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))
                })
                .transpose()
        };
        let profiles = match read(&cfg.data.profiles)? {
            Some(t) => ProfileSet::from_toml(&t).context("parsing profile data")?,
            None => ProfileSet::builtin(),
        };
        let workloads = match read(&cfg.data.workloads)? {
            Some(t) => WorkloadSet::from_toml(&t).context("parsing workload data")?,
            None => WorkloadSet::builtin(),
        };
        let claims = match read(&cfg.data.claims)? {
            Some(t) => ClaimSet::from_toml(&t).context("parsing claim data")?,
            None => ClaimSet::builtin(),
        };
        let out_dir = out_dir
            .or_else(|| cfg.out_dir.as_deref().map(resolve))
            .unwrap_or_else(|| PathBuf::from("out"));
        let exp = Self {
            seed: seed.or(cfg.seed),
            cfg,
            out_dir,
            profiles,
            workloads,
            claims,
        };
        exp.validate()?;
        Ok(exp)
    }

    fn validate(&self) -> Result<()> {
        if self.seed.is_some_and(|s| s > MAX_SEED) {
            bail!("seed must be at most {MAX_SEED}");
        }
        self.cfg.format.validate()?;
        if let Some(p) = &self.cfg.profile {
            self.profiles.get(p)?;
        }
        for p in &self.cfg.sweep.profiles {
            self.profiles.get(p)?;
        }
        for w in &self.cfg.workloads {
            self.workloads.get(w)?;
        }
        for &b in self.cfg.breakpoints.iter().chain([&self.cfg.sim.breakpoints, &self.cfg.report.breakpoints]) {
            if b == 0 {
                bail!("breakpoint counts must be positive");
            }
        }
        if self.cfg.fit.eval_samples < 2 {
            bail!("fit.eval_samples must be at least 2");
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .context("no seed given: set `seed` in the config or pass --seed")
    }

    pub fn profile_or(&self, default: &str) -> Result<&AcceleratorProfile> {
        Ok(self.profiles.get(self.cfg.profile.as_deref().unwrap_or(default))?)
    }

    pub fn workload_names(&self) -> Vec<String> {
        if self.cfg.workloads.is_empty() {
            self.workloads.names()
        } else {
            self.cfg.workloads.clone()
        }
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.out_dir.join(rel)
    }
}
