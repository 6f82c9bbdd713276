//! Area, power and energy accounting from block-level synthesis numbers and
//! simulated cycle counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lut::lut_throughput;
use crate::noc::throughput_for;
use crate::profiles::{nonlinear_query_count, AcceleratorProfile, ApproximatorKind, ProfileSet, WorkloadSet, WorkloadSpec};

const CLAIMS_TOML: &str = include_str!("../data/claims.toml");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kind: ApproximatorKind,
    pub workload: String,
    pub active_base_cycles: u64,
    pub active_time_s: f64,
    pub power_mw: f64,
    /// mW x s.
    pub energy_mj: f64,
    pub area_mm2: f64,
}

/// Energy of `kind` on `profile` while active for `active_base_cycles`.
pub fn energy_per_inference(
    profile: &AcceleratorProfile,
    kind: ApproximatorKind,
    workload: &WorkloadSpec,
    active_base_cycles: u64,
) -> Result<EnergyReport> {
    let entry = profile.require_entry(kind)?;
    let active_time_s = active_base_cycles as f64 / (profile.base_freq_mhz * 1e6);
    Ok(EnergyReport {
        kind,
        workload: workload.model_name.clone(),
        active_base_cycles,
        active_time_s,
        power_mw: entry.power_mw,
        energy_mj: entry.power_mw * active_time_s,
        area_mm2: entry.area_mm2,
    })
}

/// Base cycles `kind` is busy over one inference sample of `workload`.
///
/// Each approximated function is a separate phase. A phase occupies the
/// unit for one base cycle per lane batch; the pipeline fill is not counted,
/// so cycle counts (and energy) scale with the number of queries.
pub fn workload_cycles(
    profile: &AcceleratorProfile,
    kind: ApproximatorKind,
    workload: &WorkloadSpec,
    breakpoints: usize,
    lanes_per_cycle: usize,
) -> Result<u64> {
    let counts = nonlinear_query_count(workload);
    let mut total = 0u64;
    for (_, queries) in counts.queries() {
        let batches = match kind {
            ApproximatorKind::NovaNoc => {
                let cfg = profile.nova_config(breakpoints, lanes_per_cycle);
                throughput_for(&cfg, breakpoints, queries)?.lane_batches
            }
            _ => {
                let cfg = profile.lut_config(kind, lanes_per_cycle)?;
                lut_throughput(&cfg, profile.num_nova_routers, lanes_per_cycle, queries)?.saturating_sub(1)
            }
        };
        total += batches as u64;
    }
    Ok(total)
}

/// One report per approximator entry of `profile`, each run at the
/// profile's full per-router issue rate.
pub fn workload_energy(
    profile: &AcceleratorProfile,
    workload: &WorkloadSpec,
    breakpoints: usize,
    lanes_per_cycle: usize,
) -> Result<Vec<EnergyReport>> {
    profile
        .kinds()
        .into_iter()
        .map(|kind| {
            let cycles = workload_cycles(profile, kind, workload, breakpoints, lanes_per_cycle)?;
            energy_per_inference(profile, kind, workload, cycles)
        })
        .collect()
}

/// Share of total accelerator energy spent in the approximator, for a
/// user-supplied accelerator power and inference time.
pub fn energy_overhead_fraction(report: &EnergyReport, accelerator_power_mw: f64, inference_time_s: f64) -> Result<f64> {
    if !(accelerator_power_mw > 0.0 && inference_time_s > 0.0) {
        return Err(Error::InvalidArgument("accelerator power and inference time must be positive".into()));
    }
    Ok(report.energy_mj / (accelerator_power_mw * inference_time_s))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioPair {
    pub a: ApproximatorKind,
    pub b: ApproximatorKind,
    pub power_ratio: f64,
    pub area_ratio: f64,
    pub energy_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub profile: String,
    /// Every ordered pair of distinct kinds, `a` over `b`.
    pub pairs: Vec<RatioPair>,
}

impl ComparisonReport {
    pub fn get(&self, a: ApproximatorKind, b: ApproximatorKind) -> Option<&RatioPair> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }
}

pub fn compare(profile: &AcceleratorProfile) -> ComparisonReport {
    compare_with_energy(profile, &[])
}

/// [`compare`] plus energy ratios for kinds present in `energy`.
pub fn compare_with_energy(profile: &AcceleratorProfile, energy: &[EnergyReport]) -> ComparisonReport {
    let e = |k: ApproximatorKind| energy.iter().find(|r| r.kind == k).map(|r| r.energy_mj);
    let mut pairs = Vec::new();
    for a in &profile.approximator_entries {
        for b in &profile.approximator_entries {
            if a.kind == b.kind {
                continue;
            }
            let energy_ratio = match (e(a.kind), e(b.kind)) {
                (Some(x), Some(y)) if y > 0.0 => Some(x / y),
                _ => None,
            };
            pairs.push(RatioPair {
                a: a.kind,
                b: b.kind,
                power_ratio: a.power_mw / b.power_mw,
                area_ratio: a.area_mm2 / b.area_mm2,
                energy_ratio,
            });
        }
    }
    ComparisonReport {
        profile: profile.name.clone(),
        pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Power,
    Area,
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    #[default]
    Within,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Claim {
    pub id: String,
    pub description: String,
    pub profile: String,
    pub metric: Metric,
    /// Averaged before dividing by the denominator.
    pub numerator: Vec<ApproximatorKind>,
    pub denominator: ApproximatorKind,
    #[serde(default)]
    pub workload: Option<String>,
    #[serde(default)]
    pub seq_len: Option<u64>,
    #[serde(default)]
    pub check: Check,
    pub expected: f64,
    #[serde(default)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSet {
    #[serde(rename = "claim")]
    pub claims: Vec<Claim>,
}

impl ClaimSet {
    pub fn builtin() -> Self {
        Self::from_toml(CLAIMS_TOML).expect("bundled claims.toml is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let set: Self = toml::from_str(text)?;
        for c in &set.claims {
            if c.numerator.is_empty() {
                return Err(Error::Config(format!("claim {}: empty numerator", c.id)));
            }
            if c.metric == Metric::Energy && c.workload.is_none() {
                return Err(Error::Config(format!("claim {}: energy claims need a workload", c.id)));
            }
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimResult {
    pub id: String,
    pub description: String,
    pub computed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub check: Check,
    pub pass: bool,
}

/// Recomputes one claim; energy claims run the workload with
/// `breakpoints`-segment PWLs at one lane batch per router per cycle.
pub fn evaluate_claim(
    claim: &Claim,
    profiles: &ProfileSet,
    workloads: &WorkloadSet,
    breakpoints: usize,
) -> Result<ClaimResult> {
    let profile = profiles.get(&claim.profile)?;
    let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len() as f64;
    let computed = match claim.metric {
        Metric::Power | Metric::Area => {
            let value = |k| -> Result<f64> {
                let e = profile.require_entry(k)?;
                Ok(if claim.metric == Metric::Power { e.power_mw } else { e.area_mm2 })
            };
            let num = claim.numerator.iter().map(|&k| value(k)).collect::<Result<Vec<_>>>()?;
            mean(num) / value(claim.denominator)?
        }
        Metric::Energy => {
            let name = claim.workload.as_deref().unwrap_or_default();
            let mut w = workloads.get(name)?.clone();
            if let Some(s) = claim.seq_len {
                w.seq_len = s;
            }
            let lanes = profile.neurons_per_router;
            let energy = |k| -> Result<f64> {
                let cycles = workload_cycles(profile, k, &w, breakpoints, lanes)?;
                Ok(energy_per_inference(profile, k, &w, cycles)?.energy_mj)
            };
            let num = claim.numerator.iter().map(|&k| energy(k)).collect::<Result<Vec<_>>>()?;
            mean(num) / energy(claim.denominator)?
        }
    };
    let pass = match claim.check {
        Check::Within => (computed - claim.expected).abs() <= claim.tolerance,
        Check::AtLeast => computed >= claim.expected,
    };
    Ok(ClaimResult {
        id: claim.id.clone(),
        description: claim.description.clone(),
        computed,
        expected: claim.expected,
        tolerance: claim.tolerance,
        check: claim.check,
        pass,
    })
}

pub fn evaluate_claims(set: &ClaimSet, breakpoints: usize) -> Result<Vec<ClaimResult>> {
    let profiles = ProfileSet::builtin();
    let workloads = WorkloadSet::builtin();
    set.claims
        .iter()
        .map(|c| evaluate_claim(c, &profiles, &workloads, breakpoints))
        .collect()
}
