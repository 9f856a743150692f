//! `flops`: print the analytic parameter and FLOP model for an
//! architecture at a given input shape. One row per invocation; the
//! numbers are estimates under the archspec file's counting convention.

use std::path::Path;

use anyhow::{anyhow, Context, Result};

use crate::config::{load_archspec, RunConfig};
use crate::report::render_csv;

pub struct FlopsArgs<'a> {
    pub archspec: &'a Path,
    pub resolution: u64,
    pub char_limit: u64,
    pub out: Option<&'a Path>,
}

pub fn run(args: &FlopsArgs, rc: &RunConfig, hash: &str) -> Result<()> {
    let spec = load_archspec(args.archspec)?;
    let params = spec.param_count().map_err(|e| anyhow!(e))?;
    let visual_tokens = spec.visual_token_count(args.resolution).map_err(|e| anyhow!(e))?;
    let text_tokens = spec.text_token_count(args.char_limit);
    let flops = spec.flop_estimate(visual_tokens, text_tokens);

    let row = format!(
        "{},{},{},{},{},{},{}",
        args.resolution,
        args.char_limit,
        visual_tokens,
        text_tokens,
        params.total,
        params.trainable,
        flops
    );
    let text = render_csv(
        hash,
        rc.seed,
        "resolution,char_limit,visual_tokens,text_tokens,params_total,params_trainable,flops",
        &[row],
    );
    match args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
            let path = dir.join("flops.csv");
            std::fs::write(&path, &text)
                .with_context(|| format!("writing report {}", path.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
