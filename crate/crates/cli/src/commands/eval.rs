//! `eval`: score a prediction file against ground truth.

use std::path::PathBuf;

use pcseg_core::{evaluate, Result};

use crate::input::{load_gts, load_predictions};
use crate::util::{to_json_bytes, write_atomic};

pub struct EvalArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let preds = load_predictions(&args.pred)?;
    let gts = load_gts(&args.gt)?;

    let mut classes: Vec<u32> = gts
        .iter()
        .map(|g| g.semantic_class)
        .chain(preds.iter().map(|p| p.semantic_class))
        .collect();
    classes.sort_unstable();
    classes.dedup();

    let report = evaluate(&preds, &gts, &classes);
    let json = to_json_bytes(&report)?;
    print!("{}", String::from_utf8_lossy(&json));
    if let Some(out) = &args.out {
        write_atomic(out, &json)?;
    }
    if let Some(csv) = &args.csv {
        write_atomic(csv, report.to_csv().as_bytes())?;
    }
    Ok(())
}
