//! Accelerator integration profiles, the single-cycle traversal rule and
//! non-linear query counts for transformer workloads.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lut::LutConfig;
use crate::noc::NovaNocConfig;

const PROFILES_TOML: &str = include_str!("../data/profiles.toml");
const WORKLOADS_TOML: &str = include_str!("../data/workloads.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproximatorKind {
    PerNeuronLut,
    PerCoreLut,
    NvdlaSdp,
    NovaNoc,
}

impl ApproximatorKind {
    pub const ALL: [ApproximatorKind; 4] = [
        ApproximatorKind::PerNeuronLut,
        ApproximatorKind::PerCoreLut,
        ApproximatorKind::NvdlaSdp,
        ApproximatorKind::NovaNoc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ApproximatorKind::PerNeuronLut => "per_neuron_lut",
            ApproximatorKind::PerCoreLut => "per_core_lut",
            ApproximatorKind::NvdlaSdp => "nvdla_sdp",
            ApproximatorKind::NovaNoc => "nova_noc",
        }
    }
}

impl fmt::Display for ApproximatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ApproximatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Unknown {
            what: "approximator kind",
            name: s.to_string(),
            known: Self::ALL.iter().map(|k| k.name().to_string()).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximatorEntry {
    pub kind: ApproximatorKind,
    pub area_mm2: f64,
    pub power_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceleratorProfile {
    pub name: String,
    pub num_nova_routers: usize,
    pub neurons_per_router: usize,
    pub onchip_memory_bytes: u64,
    /// At 0.8 V.
    pub base_freq_mhz: f64,
    #[serde(default, rename = "approximator")]
    pub approximator_entries: Vec<ApproximatorEntry>,
}

impl AcceleratorProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("profile {}: {what} must be positive", self.name)));
        if self.num_nova_routers == 0 {
            return bad("num_nova_routers");
        }
        if self.neurons_per_router == 0 {
            return bad("neurons_per_router");
        }
        if self.onchip_memory_bytes == 0 {
            return bad("onchip_memory_bytes");
        }
        if !(self.base_freq_mhz > 0.0 && self.base_freq_mhz.is_finite()) {
            return bad("base_freq_mhz");
        }
        for (i, e) in self.approximator_entries.iter().enumerate() {
            if !(e.area_mm2 > 0.0 && e.power_mw > 0.0 && e.area_mm2.is_finite() && e.power_mw.is_finite()) {
                return Err(Error::Config(format!(
                    "profile {}: approximator {} ({}) needs positive area and power",
                    self.name, i, e.kind
                )));
            }
            if self.approximator_entries[..i].iter().any(|p| p.kind == e.kind) {
                return Err(Error::Config(format!("profile {}: duplicate {} entry", self.name, e.kind)));
            }
        }
        Ok(())
    }

    pub fn entry(&self, kind: ApproximatorKind) -> Option<&ApproximatorEntry> {
        self.approximator_entries.iter().find(|e| e.kind == kind)
    }

    /// Like [`entry`](Self::entry) but a missing entry is a config error.
    pub fn require_entry(&self, kind: ApproximatorKind) -> Result<&ApproximatorEntry> {
        self.entry(kind).ok_or_else(|| {
            Error::Config(format!("profile {} has no hardware data for approximator {kind}", self.name))
        })
    }

    pub fn kinds(&self) -> Vec<ApproximatorKind> {
        self.approximator_entries.iter().map(|e| e.kind).collect()
    }

    /// NoC config for this accelerator; the multiplier is set for
    /// `breakpoints` segments.
    pub fn nova_config(&self, breakpoints: usize, lanes_per_cycle: usize) -> NovaNocConfig {
        NovaNocConfig {
            num_routers: self.num_nova_routers,
            neurons_per_router: self.neurons_per_router,
            base_freq_mhz: self.base_freq_mhz,
            noc_freq_multiplier: breakpoints.div_ceil(crate::noc::LINK_PAIRS).max(1),
            lanes_per_cycle,
            ..NovaNocConfig::default()
        }
    }

    /// LUT baseline sized to one router's neurons. A per-core bank gets one
    /// port per concurrently served lane.
    pub fn lut_config(&self, kind: ApproximatorKind, lanes_per_cycle: usize) -> Result<LutConfig> {
        match kind {
            ApproximatorKind::PerNeuronLut => Ok(LutConfig::per_neuron(self.neurons_per_router, self.base_freq_mhz)),
            ApproximatorKind::PerCoreLut | ApproximatorKind::NvdlaSdp => Ok(LutConfig::per_core(
                self.neurons_per_router,
                lanes_per_cycle,
                self.base_freq_mhz,
            )),
            ApproximatorKind::NovaNoc => Err(Error::InvalidArgument("nova_noc is not a LUT design".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalabilityLimits {
    pub max_single_cycle_routers: usize,
    pub max_noc_freq_ghz: f64,
    pub repeater_spacing_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSet {
    pub scalability: ScalabilityLimits,
    #[serde(rename = "profile")]
    pub profiles: Vec<AcceleratorProfile>,
}

impl ProfileSet {
    pub fn builtin() -> Self {
        Self::from_toml(PROFILES_TOML).expect("bundled profiles.toml is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let set: Self = toml::from_str(text)?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.scalability;
        if l.max_single_cycle_routers == 0 || !(l.max_noc_freq_ghz > 0.0) || !(l.repeater_spacing_mm > 0.0) {
            return Err(Error::Config("scalability limits must be positive".into()));
        }
        for (i, p) in self.profiles.iter().enumerate() {
            p.validate()?;
            if self.profiles[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::Config(format!("duplicate profile {}", p.name)));
            }
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.profiles.iter().map(|p| p.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&AcceleratorProfile> {
        self.profiles.iter().find(|p| p.name == name).ok_or_else(|| Error::Unknown {
            what: "profile",
            name: name.to_string(),
            known: self.names(),
        })
    }
}

/// A bundled profile by name.
pub fn load_profile(name: &str) -> Result<AcceleratorProfile> {
    ProfileSet::builtin().get(name).cloned()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scalability {
    Ok,
    Violation(ScalabilityViolation),
}

impl Scalability {
    pub fn is_ok(&self) -> bool {
        matches!(self, Scalability::Ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityViolation {
    pub routers: usize,
    pub noc_freq_ghz: f64,
    /// Buffered segments a broadcast needs at this router count.
    pub segments: usize,
    /// NoC cycles added to every traversal over a single-cycle line.
    pub extra_noc_cycles: usize,
    pub too_many_routers: bool,
    pub too_fast: bool,
}

impl fmt::Display for ScalabilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut reasons = Vec::new();
        if self.too_many_routers {
            reasons.push(format!("{} routers exceed the single-cycle reach", self.routers));
        }
        if self.too_fast {
            reasons.push(format!("NoC clock {:.3} GHz is above the repeater limit", self.noc_freq_ghz));
        }
        write!(
            f,
            "{}; traversal needs {} buffered segment(s), +{} NoC cycle(s) per broadcast",
            reasons.join(" and "),
            self.segments,
            self.extra_noc_cycles
        )
    }
}

pub fn check_scalability(profile: &AcceleratorProfile, noc_freq_ghz: f64) -> Scalability {
    check_scalability_with(&ProfileSet::builtin().scalability, profile.num_nova_routers, noc_freq_ghz)
}

pub fn check_scalability_with(limits: &ScalabilityLimits, routers: usize, noc_freq_ghz: f64) -> Scalability {
    let too_many_routers = routers > limits.max_single_cycle_routers;
    let too_fast = noc_freq_ghz > limits.max_noc_freq_ghz;
    if !too_many_routers && !too_fast {
        return Scalability::Ok;
    }
    let segments = routers.div_ceil(limits.max_single_cycle_routers).max(1);
    Scalability::Violation(ScalabilityViolation {
        routers,
        noc_freq_ghz,
        segments,
        extra_noc_cycles: segments - 1,
        too_many_routers,
        too_fast,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub model_name: String,
    pub num_layers: u64,
    pub num_heads: u64,
    pub hidden_dim: u64,
    pub ffn_dim: u64,
    pub seq_len: u64,
    #[serde(default)]
    pub count_layernorm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct NonlinearCounts {
    pub softmax_elements: u64,
    pub softmax_rows: u64,
    pub gelu_elements: u64,
    pub layernorm_elements: u64,
}

impl NonlinearCounts {
    /// Lookups per approximated function: one `exp` per softmax element,
    /// one reciprocal per softmax row, one GELU per FFN activation and the
    /// layernorm reciprocal square roots.
    pub fn queries(&self) -> [(crate::func::FunctionId, u64); 3] {
        use crate::func::FunctionId;
        [
            (FunctionId::Exp, self.softmax_elements),
            (FunctionId::Reciprocal, self.softmax_rows + self.layernorm_elements),
            (FunctionId::Gelu, self.gelu_elements),
        ]
    }

    pub fn total(&self) -> u64 {
        self.softmax_elements + self.softmax_rows + self.gelu_elements + self.layernorm_elements
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.num_layers,
            self.num_heads,
            self.hidden_dim,
            self.ffn_dim,
            self.seq_len,
        ];
        if fields.contains(&0) {
            return Err(Error::Config(format!("workload {}: all dimensions must be positive", self.model_name)));
        }
        Ok(())
    }

    pub fn with_seq_len(mut self, seq_len: u64) -> Self {
        self.seq_len = seq_len;
        self
    }
}

/// Non-linear evaluations for one inference sample.
pub fn nonlinear_query_count(w: &WorkloadSpec) -> NonlinearCounts {
    let rows = w.num_layers * w.num_heads * w.seq_len;
    NonlinearCounts {
        softmax_elements: rows * w.seq_len,
        softmax_rows: rows,
        gelu_elements: w.num_layers * w.seq_len * w.ffn_dim,
        // two layernorms per layer, one rsqrt per token each
        layernorm_elements: if w.count_layernorm { 2 * w.num_layers * w.seq_len } else { 0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSet {
    #[serde(rename = "workload")]
    pub workloads: Vec<WorkloadSpec>,
}

impl WorkloadSet {
    pub fn builtin() -> Self {
        Self::from_toml(WORKLOADS_TOML).expect("bundled workloads.toml is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let set: Self = toml::from_str(text)?;
        for w in &set.workloads {
            w.validate()?;
        }
        Ok(set)
    }

    pub fn names(&self) -> Vec<String> {
        self.workloads.iter().map(|w| w.model_name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&WorkloadSpec> {
        self.workloads.iter().find(|w| w.model_name == name).ok_or_else(|| Error::Unknown {
            what: "workload",
            name: name.to_string(),
            known: self.names(),
        })
    }
}

pub fn load_workload(name: &str) -> Result<WorkloadSpec> {
    WorkloadSet::builtin().get(name).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_profiles() {
        let r = load_profile("react").unwrap();
        assert_eq!(
            (r.num_nova_routers, r.neurons_per_router, r.onchip_memory_bytes, r.base_freq_mhz),
            (10, 256, 768 * 1024, 240.0)
        );
        let t = load_profile("tpu_v4_like").unwrap();
        assert_eq!(
            (t.num_nova_routers, t.neurons_per_router, t.onchip_memory_bytes, t.base_freq_mhz),
            (8, 128, 42 * 1024 * 1024, 1400.0)
        );
        assert_eq!(t.require_entry(ApproximatorKind::PerCoreLut).unwrap().power_mw, 1724.94);
        let j = load_profile("jetson_xavier_nx").unwrap();
        assert!(j.entry(ApproximatorKind::PerNeuronLut).is_none());
        assert!(j.require_entry(ApproximatorKind::PerNeuronLut).is_err());
        match load_profile("foo") {
            Err(Error::Unknown { known, .. }) => assert_eq!(known.len(), 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_roundtrip() {
        let set = ProfileSet::builtin();
        assert_eq!(ProfileSet::from_toml(&set.to_toml().unwrap()).unwrap(), set);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = PROFILES_TOML.replacen("base_freq_mhz = 240.0", "base_freq_mhz = 240.0\nbase_frq = 1", 1);
        assert!(ProfileSet::from_toml(&text).is_err());
        assert!("per_neuron".parse::<ApproximatorKind>().is_err());
    }

    #[test]
    fn scalability_rule() {
        let l = ProfileSet::builtin().scalability;
        assert!(check_scalability_with(&l, 10, 1.5).is_ok());
        assert!(check_scalability_with(&l, 1, 0.24).is_ok());
        match check_scalability_with(&l, 11, 1.5) {
            Scalability::Violation(v) => assert_eq!((v.segments, v.extra_noc_cycles), (2, 1)),
            Scalability::Ok => panic!(),
        }
        assert!(!check_scalability_with(&l, 10, 1.6).is_ok());
        let mut prev_ok = true;
        for r in 1..40 {
            let ok = check_scalability_with(&l, r, 1.0).is_ok();
            assert!(prev_ok || !ok);
            prev_ok = ok;
        }
    }

    #[test]
    fn query_counts() {
        let tiny = load_workload("bert_tiny").unwrap();
        let c128 = nonlinear_query_count(&tiny.clone().with_seq_len(128));
        assert_eq!((c128.softmax_elements, c128.gelu_elements), (65536, 131072));
        assert_eq!(c128.layernorm_elements, 0);
        let c1024 = nonlinear_query_count(&tiny.with_seq_len(1024));
        assert_eq!(c1024.softmax_elements, 4_194_304);
        let one = WorkloadSpec {
            model_name: "unit".into(),
            num_layers: 1,
            num_heads: 1,
            hidden_dim: 1,
            ffn_dim: 1,
            seq_len: 1,
            count_layernorm: true,
        };
        let c = nonlinear_query_count(&one);
        assert_eq!((c.softmax_elements, c.layernorm_elements), (1, 2));
    }

    #[test]
    fn query_scaling() {
        let w = load_workload("roberta").unwrap();
        let base = nonlinear_query_count(&w.clone().with_seq_len(64));
        for k in 1..=8u64 {
            let c = nonlinear_query_count(&w.clone().with_seq_len(64 * k));
            assert_eq!(c.softmax_elements, base.softmax_elements * k * k);
            assert_eq!(c.gelu_elements, base.gelu_elements * k);
        }
    }
}
