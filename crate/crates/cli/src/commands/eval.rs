//! `eval`: IoU matching of predictions against ground truth.

use crate::docs::{load_outlines, to_json_bytes};
use crate::io::{atomic_write, ManifestBuilder};
use crate::{Cli, EvalArgs};
use anyhow::Result;
use craft_kernels::evalkit::match_detections;

pub fn run(args: &EvalArgs, _cli: &Cli) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    manifest.input(&args.pred);
    manifest.input(&args.gt);
    manifest.config(&serde_json::json!({ "iou": args.iou }));
    let preds = load_outlines(&args.pred)?;
    let gts = load_outlines(&args.gt)?;
    let report = match_detections(&preds, &gts, args.iou);
    let bytes = to_json_bytes(&report)?;
    match &args.out {
        Some(path) => {
            atomic_write(path, &bytes)?;
            manifest.output(path);
            manifest.write(path)?;
        }
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
        }
    }
    Ok(())
}
