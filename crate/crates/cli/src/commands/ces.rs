//! `ces`: score a correlation result against the parameter/FLOP budgets of
//! an architecture. FLOPs default to the analytic estimate for the given
//! resolution and text budget; `--flops` substitutes an externally
//! measured value (counting tools disagree, so the report says which
//! number it used rather than pretending they coincide).

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use boundedreg_core::effscore::{ces, cost_c, efficiency_e, ResourceProfile};

use crate::config::{load_archspec, RunConfig};
use crate::report::{fmt_float, render_csv};

pub struct CesArgs<'a> {
    pub plcc: f64,
    pub archspec: &'a Path,
    pub resolution: u64,
    pub char_limit: u64,
    pub flops_override: Option<f64>,
    pub out: Option<&'a Path>,
}

pub fn run(args: &CesArgs, rc: &RunConfig, hash: &str) -> Result<()> {
    let spec = load_archspec(args.archspec)?;
    let params = spec.param_count().map_err(|e| anyhow!(e))?;
    let estimated = spec
        .profile_for(args.resolution, args.char_limit)
        .map_err(|e| anyhow!(e))
        .context("estimating the resource profile")?;
    let flops = args.flops_override.unwrap_or(estimated.flops);
    let profile = ResourceProfile { params: params.total, flops };

    let c = cost_c(&profile, &rc.ces);
    let e = efficiency_e(c, &rc.ces);
    let score = ces(args.plcc, &profile, &rc.ces);

    let row = format!(
        "{},{},{},{},{},{}",
        fmt_float(args.plcc),
        params.total,
        fmt_float(flops),
        fmt_float(c),
        fmt_float(e),
        fmt_float(score)
    );
    let text = render_csv(hash, rc.seed, "plcc,params,flops,C,E,ces", &[row]);
    match args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
            let path = dir.join("ces.csv");
            std::fs::write(&path, &text)
                .with_context(|| format!("writing report {}", path.display()))?;
        }
        None => print!("{text}"),
    }
    if args.flops_override.is_some() {
        log::info!(
            "ces: using supplied flops {} instead of analytic estimate {}",
            fmt_float(flops),
            fmt_float(estimated.flops)
        );
    }
    Ok(())
}
