use anyhow::{Context, Result};
use nova_core::cost::{
    compare_with_energy, energy_overhead_fraction, energy_per_inference, evaluate_claim, workload_cycles, Check,
    EnergyReport,
};
use nova_core::profiles::{AcceleratorProfile, ApproximatorKind};

use crate::config::Experiment;
use crate::output::{write_csv, CheckFailed};

fn profiles<'a>(exp: &'a Experiment) -> Result<Vec<&'a AcceleratorProfile>> {
    match &exp.cfg.profile {
        Some(name) => Ok(vec![exp.profiles.get(name)?]),
        None => Ok(exp.profiles.profiles.iter().collect()),
    }
}

fn energy_reports(exp: &Experiment, profile: &AcceleratorProfile) -> Result<Vec<(u64, EnergyReport)>> {
    let r = &exp.cfg.report;
    let kinds: Vec<ApproximatorKind> = if exp.cfg.kinds.is_empty() { profile.kinds() } else { exp.cfg.kinds.clone() };
    let lanes = r.lanes_per_cycle.unwrap_or(profile.neurons_per_router);
    let mut out = Vec::new();
    for name in exp.workload_names() {
        let mut w = exp.workloads.get(&name)?.clone();
        if let Some(s) = r.seq_len {
            w.seq_len = s;
        }
        for &kind in &kinds {
            let cycles = workload_cycles(profile, kind, &w, r.breakpoints, lanes)
                .with_context(|| format!("cycle count for {kind} on {}", profile.name))?;
            out.push((w.seq_len, energy_per_inference(profile, kind, &w, cycles)?));
        }
    }
    Ok(out)
}

pub fn run(exp: &Experiment, against_paper: bool) -> Result<()> {
    let r = &exp.cfg.report;
    let mut energy_rows = Vec::new();
    let mut ratio_rows = Vec::new();
    for profile in profiles(exp)? {
        let reports = energy_reports(exp, profile)?;
        println!("{} ({} routers x {} neurons, {} MHz)", profile.name, profile.num_nova_routers, profile.neurons_per_router, profile.base_freq_mhz);
        for (seq_len, e) in &reports {
            println!(
                "  {:<16} {:<15} seq {:>5}: {:>10} cycles {:>12.6e} mJ",
                e.workload,
                e.kind.to_string(),
                seq_len,
                e.active_base_cycles,
                e.energy_mj
            );
            let mut row = vec![
                profile.name.clone(),
                e.workload.clone(),
                e.kind.to_string(),
                seq_len.to_string(),
                e.active_base_cycles.to_string(),
                e.active_time_s.to_string(),
                e.power_mw.to_string(),
                e.energy_mj.to_string(),
                e.area_mm2.to_string(),
            ];
            let overhead = match (r.accelerator_power_mw, r.inference_time_s) {
                (Some(p), Some(t)) => energy_overhead_fraction(e, p, t)?.to_string(),
                _ => String::new(),
            };
            row.push(overhead);
            energy_rows.push(row);
        }
        if profile.approximator_entries.len() < 2 {
            println!("  comparison skipped: {} has fewer than two approximators", profile.name);
            continue;
        }
        let workloads: Vec<String> = exp.workload_names();
        for name in &workloads {
            let per_workload: Vec<EnergyReport> =
                reports.iter().filter(|(_, e)| &e.workload == name).map(|(_, e)| e.clone()).collect();
            let cmp = compare_with_energy(profile, &per_workload);
            for p in &cmp.pairs {
                ratio_rows.push(vec![
                    profile.name.clone(),
                    name.clone(),
                    p.a.to_string(),
                    p.b.to_string(),
                    p.power_ratio.to_string(),
                    p.area_ratio.to_string(),
                    p.energy_ratio.map(|x| x.to_string()).unwrap_or_default(),
                ]);
            }
        }
        let cmp = compare_with_energy(profile, &[]);
        for p in cmp.pairs.iter().filter(|p| p.b == ApproximatorKind::NovaNoc) {
            println!(
                "  {:<15} / nova_noc: power {:>7.3}x area {:>7.3}x",
                p.a.to_string(),
                p.power_ratio,
                p.area_ratio
            );
        }
    }
    write_csv(
        &exp.path("report/energy.csv"),
        &[
            "profile",
            "workload",
            "kind",
            "seq_len",
            "active_base_cycles",
            "active_time_s",
            "power_mw",
            "energy_mj",
            "area_mm2",
            "energy_overhead_fraction",
        ],
        energy_rows,
    )?;
    write_csv(
        &exp.path("report/comparison.csv"),
        &["profile", "workload", "a", "b", "power_ratio", "area_ratio", "energy_ratio"],
        ratio_rows,
    )?;

    if against_paper {
        check_claims(exp)?;
    }
    Ok(())
}

fn check_claims(exp: &Experiment) -> Result<()> {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    println!("claims:");
    for claim in &exp.claims.claims {
        let res = evaluate_claim(claim, &exp.profiles, &exp.workloads, exp.cfg.report.breakpoints)
            .with_context(|| format!("evaluating claim {}", claim.id))?;
        let target = match res.check {
            Check::Within => format!("{} +/- {}", res.expected, res.tolerance),
            Check::AtLeast => format!(">= {}", res.expected),
        };
        let verdict = if res.pass { "PASS" } else { "FAIL" };
        println!("  {verdict} {:<30} computed {:>9.4} expected {:<14} {}", res.id, res.computed, target, res.description);
        if !res.pass {
            failed.push(res.id.clone());
        }
        rows.push(vec![
            res.id,
            res.computed.to_string(),
            res.expected.to_string(),
            res.tolerance.to_string(),
            match res.check {
                Check::Within => "within",
                Check::AtLeast => "at_least",
            }
            .to_string(),
            verdict.to_string(),
        ]);
    }
    write_csv(
        &exp.path("report/claims.csv"),
        &["id", "computed", "expected", "tolerance", "check", "result"],
        rows,
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CheckFailed(format!("claim check failed: {}", failed.join(", "))).into())
    }
}
