//! Steps shared by several subcommands.

use anyhow::{Context, Result};
use nova_core::fit::{extract_pwl, fit_direct, fit_mlp};
use nova_core::func::FunctionId;
use nova_core::pwl::{error_metrics, ApproxErrorReport, PiecewiseLinearFn};

use crate::config::{FitSection, Fitter};

pub fn fit(fitter: Fitter, function: FunctionId, breakpoints: usize, fit: &FitSection, seed: u64) -> Result<PiecewiseLinearFn> {
    let domain = function.default_domain();
    let pwl = match fitter {
        Fitter::Mlp => {
            let mlp = fit_mlp(function, breakpoints, domain, &fit.train_config(seed))
                .with_context(|| format!("training {function} with {breakpoints} breakpoints"))?;
            extract_pwl(&mlp, function, domain)?
        }
        Fitter::Direct => fit_direct(function, breakpoints, domain, fit.eval_samples)
            .with_context(|| format!("direct fit of {function} with {breakpoints} breakpoints"))?,
    };
    Ok(pwl)
}

pub fn errors(pwl: &PiecewiseLinearFn, fit: &FitSection) -> Result<ApproxErrorReport> {
    Ok(error_metrics(pwl, pwl.function_id(), pwl.domain(), fit.eval_samples)?)
}

pub const ERROR_HEADER: [&str; 7] = ["function_id", "B", "domain", "max_abs", "mean_abs", "rmse", "samples"];

pub fn error_row(function: FunctionId, breakpoints: usize, r: &ApproxErrorReport) -> Vec<String> {
    vec![
        function.to_string(),
        breakpoints.to_string(),
        r.domain.to_string(),
        r.max_abs_error.to_string(),
        r.mean_abs_error.to_string(),
        r.rmse.to_string(),
        r.samples.to_string(),
    ]
}

pub fn pwl_file_name(function: FunctionId, breakpoints: usize) -> String {
    format!("{function}_b{breakpoints}.toml")
}
