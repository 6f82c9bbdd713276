use anyhow::Result;
use nova_core::func::FunctionId;
use nova_core::pwl::PwlRecord;
use rayon::prelude::*;

use crate::commands::sim::{self, Plan};
use crate::config::{Experiment, SimSection, MAX_SEED};
use crate::output::{write_atomic, write_csv, CheckFailed};
use crate::pipeline::{self, error_row, ERROR_HEADER};

struct Point {
    name: String,
    function: FunctionId,
    breakpoints: usize,
    seed: u64,
    plan: Plan,
}

/// Per-experiment seed; depends only on the base seed and grid position.
fn point_seed(base: u64, index: usize) -> u64 {
    (base ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)) & MAX_SEED
}

pub fn run(exp: &Experiment, trace: bool) -> Result<()> {
    let cfg = &exp.cfg;
    let seed = exp.require_seed()?;
    let profiles: Vec<String> = if cfg.sweep.profiles.is_empty() {
        exp.profiles.names()
    } else {
        cfg.sweep.profiles.clone()
    };

    let mut points = Vec::new();
    for p in &profiles {
        let profile = exp.profiles.get(p)?;
        for &function in &cfg.functions {
            for &breakpoints in &cfg.breakpoints {
                let seed = point_seed(seed, points.len());
                let section = SimSection {
                    function,
                    breakpoints,
                    pwl_file: None,
                    ..cfg.sim.clone()
                };
                let plan = sim::plan(profile, &section, breakpoints, &cfg.kinds, cfg.format, seed, exp.profiles.scalability)?;
                points.push(Point {
                    name: format!("{p}_{function}_b{breakpoints}"),
                    function,
                    breakpoints,
                    seed,
                    plan,
                });
            }
        }
    }

    let fitter = cfg.sweep.fitter;
    let rows = points
        .par_iter()
        .map(|pt| -> Result<(Vec<String>, Option<String>)> {
            let dir = exp.path("sweep").join(&pt.name);
            let pwl = pipeline::fit(fitter, pt.function, pt.breakpoints, &cfg.fit, pt.seed)?;
            let err = pipeline::errors(&pwl, &cfg.fit)?;
            let outcome = sim::execute(&pt.plan, &pwl, fitter.name())?;
            write_atomic(&dir.join("pwl.toml"), PwlRecord::from_pwl(&pwl, Some(cfg.format)).to_toml()?.as_bytes())?;
            write_csv(&dir.join("errors.csv"), &ERROR_HEADER, [error_row(pt.function, pt.breakpoints, &err)])?;
            sim::write(&outcome, &dir, trace)?;
            let s = &outcome.summary;
            let row = vec![
                pt.name.clone(),
                s.profile.clone(),
                pt.function.to_string(),
                pt.breakpoints.to_string(),
                pwl.len().to_string(),
                pt.seed.to_string(),
                err.max_abs_error.to_string(),
                err.rmse.to_string(),
                s.nova.base_cycles.to_string(),
                s.nova.noc_freq_multiplier.to_string(),
                s.nova.total_base_cycles.to_string(),
                s.outputs_match.to_string(),
            ];
            Ok((row, outcome.mismatch.map(|m| format!("{}: {m}", pt.name))))
        })
        .collect::<Result<Vec<_>>>()?;

    let mismatches: Vec<String> = rows.iter().filter_map(|(_, m)| m.clone()).collect();
    write_csv(
        &exp.path("sweep/index.csv"),
        &[
            "experiment",
            "profile",
            "function_id",
            "B",
            "segments",
            "seed",
            "max_abs",
            "rmse",
            "base_cycles",
            "noc_freq_multiplier",
            "total_base_cycles",
            "outputs_match",
        ],
        rows.into_iter().map(|(r, _)| r),
    )?;
    println!("swept {} experiments into {}", points.len(), exp.path("sweep").display());
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CheckFailed(format!("outputs differ in {}", mismatches.join("; "))).into())
    }
}
