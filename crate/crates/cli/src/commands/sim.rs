use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nova_core::fixed::FixedPointFormat;
use nova_core::lut::{simulate_lut, LutStats};
use nova_core::noc::{simulate_approximation, BroadcastFlit, NovaNocConfig, SimResult};
use nova_core::profiles::{check_scalability_with, AcceleratorProfile, ApproximatorKind, Scalability, ScalabilityLimits};
use nova_core::pwl::{PiecewiseLinearFn, PwlRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Experiment, SimSection};
use crate::output::{write_atomic, write_csv, write_toml, CheckFailed};
use crate::pipeline;

/// Everything a simulation needs, checked before anything is fitted or
/// written.
pub struct Plan {
    pub profile: AcceleratorProfile,
    pub noc: NovaNocConfig,
    pub active_lanes: usize,
    pub luts: Vec<ApproximatorKind>,
    pub format: FixedPointFormat,
    pub seed: u64,
    pub limits: ScalabilityLimits,
}

pub fn plan(
    profile: &AcceleratorProfile,
    sim: &SimSection,
    breakpoints: usize,
    kinds: &[ApproximatorKind],
    format: FixedPointFormat,
    seed: u64,
    limits: ScalabilityLimits,
) -> Result<Plan> {
    let mut profile = profile.clone();
    if let Some(n) = sim.num_routers {
        profile.num_nova_routers = n;
    }
    let active_lanes = sim.active_lanes.unwrap_or(profile.neurons_per_router);
    let lanes_per_cycle = sim.lanes_per_cycle.unwrap_or(profile.neurons_per_router);
    let noc = profile.nova_config(breakpoints, lanes_per_cycle);
    noc.validate()
        .with_context(|| format!("NoC config for profile {}", profile.name))?;
    if active_lanes == 0 || active_lanes > profile.neurons_per_router {
        bail!(
            "sim.active_lanes must be between 1 and {} for profile {}",
            profile.neurons_per_router,
            profile.name
        );
    }
    let mut luts: Vec<ApproximatorKind> = if kinds.is_empty() { profile.kinds() } else { kinds.to_vec() };
    luts.retain(|&k| k != ApproximatorKind::NovaNoc);
    for &k in &luts {
        profile.lut_config(k, lanes_per_cycle)?.validate()?;
    }
    Ok(Plan {
        profile,
        noc,
        active_lanes,
        luts,
        format,
        seed,
        limits,
    })
}

#[derive(Debug, Serialize)]
pub struct NovaSummary {
    pub base_cycles: usize,
    pub noc_cycles: usize,
    pub noc_freq_multiplier: usize,
    pub noc_freq_mhz: f64,
    pub lane_batches: usize,
    pub total_base_cycles: usize,
    pub total_noc_cycles: usize,
    pub broadcast_count: usize,
    pub flit_wire_bits: usize,
}

#[derive(Debug, Serialize)]
pub struct LutSummary {
    pub kind: ApproximatorKind,
    pub total_bytes: usize,
    pub total_reads: usize,
    pub base_cycles: usize,
}

#[derive(Debug, Serialize)]
pub struct SimSummary {
    pub profile: String,
    pub function: String,
    pub breakpoints: usize,
    pub pwl_source: String,
    pub format: String,
    pub seed: u64,
    pub num_routers: usize,
    pub active_lanes: usize,
    pub lanes_per_cycle: usize,
    pub scalability: String,
    pub outputs_match: bool,
    pub nova: NovaSummary,
    pub lut: Vec<LutSummary>,
}

pub struct Outcome {
    pub summary: SimSummary,
    pub output_header: Vec<String>,
    pub output_rows: Vec<Vec<String>>,
    pub trace_csv: String,
    pub mismatch: Option<String>,
}

pub fn load_pwl(path: &Path) -> Result<PiecewiseLinearFn> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(PwlRecord::from_toml(&text)
        .and_then(|r| r.to_pwl())
        .with_context(|| format!("loading PWL {}", path.display()))?)
}

fn draw_inputs(plan: &Plan, pwl: &PiecewiseLinearFn) -> Vec<Vec<f64>> {
    let d = pwl.domain();
    let margin = 0.1 * d.width();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    (0..plan.noc.num_routers)
        .map(|_| {
            (0..plan.active_lanes)
                .map(|_| rng.gen_range(d.lo - margin..=d.hi + margin))
                .collect()
        })
        .collect()
}

pub fn execute(plan: &Plan, pwl: &PiecewiseLinearFn, pwl_source: &str) -> Result<Outcome> {
    let fmt = &plan.format;
    let noc = plan.noc.mapped_for(pwl);
    let inputs = draw_inputs(plan, pwl);
    let nova: SimResult = simulate_approximation(&noc, pwl, &inputs, fmt)?;
    let luts: Vec<(ApproximatorKind, LutStats)> = plan
        .luts
        .iter()
        .map(|&k| -> Result<_> {
            let cfg = plan.profile.lut_config(k, noc.lanes_per_cycle)?;
            Ok((k, simulate_lut(&cfg, pwl, &inputs, fmt)?))
        })
        .collect::<Result<_>>()?;

    let mut header: Vec<String> = ["router", "lane", "input", "input_word", "address", "reference", "nova_noc"]
        .map(String::from)
        .to_vec();
    header.extend(luts.iter().map(|(k, _)| k.to_string()));
    let mut rows = Vec::new();
    let mut mismatch = None;
    for (r, row) in inputs.iter().enumerate() {
        for (l, &x) in row.iter().enumerate() {
            let xq = fmt.quantize(x);
            let reference = pwl.eval_quantized_word(xq, fmt);
            let got = nova.outputs[r][l];
            let lut_words: Vec<i64> = luts.iter().map(|(_, s)| s.outputs[r][l]).collect();
            if mismatch.is_none() && (got != reference || lut_words.iter().any(|&w| w != reference)) {
                mismatch = Some(format!(
                    "router {r} lane {l} input {x}: reference {reference}, nova {got}, LUTs {lut_words:?}"
                ));
            }
            let address = pwl.lookup_address(fmt.dequantize(xq));
            let mut fields = vec![
                r.to_string(),
                l.to_string(),
                x.to_string(),
                xq.to_string(),
                address.to_string(),
                reference.to_string(),
                got.to_string(),
            ];
            fields.extend(lut_words.iter().map(i64::to_string));
            rows.push(fields);
        }
    }

    let scalability = match check_scalability_with(&plan.limits, noc.num_routers, noc.noc_freq_mhz() / 1000.0) {
        Scalability::Ok => "ok".to_string(),
        Scalability::Violation(v) => v.to_string(),
    };
    let summary = SimSummary {
        profile: plan.profile.name.clone(),
        function: pwl.function_id().to_string(),
        breakpoints: pwl.len(),
        pwl_source: pwl_source.to_string(),
        format: fmt.to_string(),
        seed: plan.seed,
        num_routers: noc.num_routers,
        active_lanes: plan.active_lanes,
        lanes_per_cycle: noc.lanes_per_cycle,
        scalability,
        outputs_match: mismatch.is_none(),
        nova: NovaSummary {
            base_cycles: nova.base_cycles,
            noc_cycles: nova.noc_cycles,
            noc_freq_multiplier: nova.noc_freq_multiplier,
            noc_freq_mhz: noc.noc_freq_mhz(),
            lane_batches: nova.lane_batches,
            total_base_cycles: nova.total_base_cycles,
            total_noc_cycles: nova.total_noc_cycles,
            broadcast_count: nova.broadcast_count,
            flit_wire_bits: BroadcastFlit::wire_bits(fmt),
        },
        lut: luts
            .iter()
            .map(|(k, s)| LutSummary {
                kind: *k,
                total_bytes: s.total_bytes,
                total_reads: s.total_reads,
                base_cycles: s.base_cycles,
            })
            .collect(),
    };
    Ok(Outcome {
        summary,
        output_header: header,
        output_rows: rows,
        trace_csv: nova.trace_csv(),
        mismatch,
    })
}

pub fn write(outcome: &Outcome, dir: &Path, trace: bool) -> Result<()> {
    let header: Vec<&str> = outcome.output_header.iter().map(String::as_str).collect();
    write_csv(&dir.join("outputs.csv"), &header, outcome.output_rows.iter().cloned())?;
    write_toml(&dir.join("summary.toml"), &outcome.summary)?;
    if trace {
        write_atomic(&dir.join("trace.csv"), outcome.trace_csv.as_bytes())?;
    }
    Ok(())
}

pub fn run(exp: &Experiment, trace: bool) -> Result<()> {
    let cfg = &exp.cfg;
    let seed = exp.require_seed()?;
    let profile = exp.profile_or("react")?;
    let pwl_from_file = cfg.sim.pwl_file.as_deref().map(load_pwl).transpose()?;
    let breakpoints = pwl_from_file.as_ref().map_or(cfg.sim.breakpoints, PiecewiseLinearFn::len);
    let plan = plan(profile, &cfg.sim, breakpoints, &cfg.kinds, cfg.format, seed, exp.profiles.scalability)?;
    let (pwl, source) = match (pwl_from_file, &cfg.sim.pwl_file) {
        (Some(p), Some(path)) => (p, path.display().to_string()),
        _ => (
            pipeline::fit(cfg.sim.fitter, cfg.sim.function, breakpoints, &cfg.fit, seed)?,
            cfg.sim.fitter.name().to_string(),
        ),
    };
    plan.noc.mapped_for(&pwl).validate_for(&pwl)?;

    let outcome = execute(&plan, &pwl, &source)?;
    write(&outcome, &exp.path("sim"), trace)?;
    let s = &outcome.summary;
    println!(
        "{} {} B={} on {} routers: NOVA base_cycles {} (NoC x{}, {} NoC cycles), {} lane batch(es), total {} cycles",
        s.profile,
        s.function,
        s.breakpoints,
        s.num_routers,
        s.nova.base_cycles,
        s.nova.noc_freq_multiplier,
        s.nova.noc_cycles,
        s.nova.lane_batches,
        s.nova.total_base_cycles
    );
    for l in &s.lut {
        println!("  {:<15} base_cycles {} reads {} bytes/core {}", l.kind.to_string(), l.base_cycles, l.total_reads, l.total_bytes);
    }
    if s.scalability != "ok" {
        eprintln!("warning: {}", s.scalability);
    }
    if let Some(m) = outcome.mismatch {
        return Err(CheckFailed(format!("outputs differ: {m}")).into());
    }
    println!("  outputs match across NOVA, LUT baselines and reference");
    Ok(())
}
