use anyhow::Result;
use nova_core::func::FunctionId;
use nova_core::pwl::{ApproxErrorReport, PwlRecord};
use rayon::prelude::*;

use crate::config::{Experiment, Fitter};
use crate::output::{write_atomic, write_csv};
use crate::pipeline::{self, error_row, pwl_file_name, ERROR_HEADER};

struct Fitted {
    function: FunctionId,
    breakpoints: usize,
    mlp: ApproxErrorReport,
    direct: ApproxErrorReport,
}

pub fn run(exp: &Experiment) -> Result<()> {
    let cfg = &exp.cfg;
    if cfg.functions.is_empty() {
        println!("no functions configured, nothing to fit");
        return Ok(());
    }
    let seed = exp.require_seed()?;
    let jobs: Vec<(FunctionId, usize)> = cfg
        .functions
        .iter()
        .flat_map(|&f| cfg.breakpoints.iter().map(move |&b| (f, b)))
        .collect();

    let fitted = jobs
        .par_iter()
        .map(|&(function, breakpoints)| -> Result<Fitted> {
            let name = pwl_file_name(function, breakpoints);
            let mlp = pipeline::fit(Fitter::Mlp, function, breakpoints, &cfg.fit, seed)?;
            let direct = pipeline::fit(Fitter::Direct, function, breakpoints, &cfg.fit, seed)?;
            let record = |p| PwlRecord::from_pwl(p, Some(cfg.format)).to_toml();
            write_atomic(&exp.path("pwl").join(&name), record(&mlp)?.as_bytes())?;
            write_atomic(&exp.path("oracle").join(&name), record(&direct)?.as_bytes())?;
            Ok(Fitted {
                function,
                breakpoints,
                mlp: pipeline::errors(&mlp, &cfg.fit)?,
                direct: pipeline::errors(&direct, &cfg.fit)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    write_csv(
        &exp.path("errors_mlp.csv"),
        &ERROR_HEADER,
        fitted.iter().map(|f| error_row(f.function, f.breakpoints, &f.mlp)),
    )?;
    write_csv(
        &exp.path("errors_direct.csv"),
        &ERROR_HEADER,
        fitted.iter().map(|f| error_row(f.function, f.breakpoints, &f.direct)),
    )?;

    println!(
        "{:<11} {:>3} {:>12} {:>12} {:>12} {:>12} {:>7}",
        "function", "B", "domain", "mlp_max", "direct_max", "mlp_rmse", "ratio"
    );
    for f in &fitted {
        println!(
            "{:<11} {:>3} {:>12} {:>12.4e} {:>12.4e} {:>12.4e} {:>7.3}",
            f.function.to_string(),
            f.breakpoints,
            f.mlp.domain.to_string(),
            f.mlp.max_abs_error,
            f.direct.max_abs_error,
            f.mlp.rmse,
            f.mlp.max_abs_error / f.direct.max_abs_error
        );
    }
    println!("wrote {} PWL files to {}", 2 * fitted.len(), exp.out_dir.display());
    Ok(())
}
