//! `gtgen`: ground-truth score maps from an annotation file.

use crate::docs::load_file_config;
use crate::io::{atomic_write, ManifestBuilder};
use crate::{Cli, GtgenArgs};
use anyhow::{Context, Result};
use craft_kernels::gtgen::{linkrefiner_gt, Annotation};
use craft_kernels::rastermap::encode_map;

pub fn run(args: &GtgenArgs, cli: &Cli) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    manifest.input(&args.annotation);
    let file_cfg = load_file_config(cli.config.as_deref())?;
    let mut gt_cfg = file_cfg.gt.unwrap_or_default();
    if let Some(alpha) = args.alpha {
        gt_cfg.alpha = alpha;
    }
    if let Some(peak) = args.gaussian_peak {
        gt_cfg.gaussian_peak = peak;
    }
    if let Some(ratio) = args.radius_ratio {
        gt_cfg.gaussian_radius_ratio = ratio;
    }
    manifest.config(&gt_cfg);

    let bytes = std::fs::read(&args.annotation)
        .with_context(|| format!("reading {}", args.annotation.display()))?;
    let annotation: Annotation = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing {}", args.annotation.display()))?;
    annotation
        .validate()
        .with_context(|| format!("validating {}", args.annotation.display()))?;

    let maps = annotation.render(&gt_cfg);
    let mut channels: Vec<_> = maps.channels().map(|c| c.clone()).into();
    if args.link_refiner {
        let polygons: Vec<_> = annotation
            .words
            .iter()
            .filter_map(|w| w.polygon.clone())
            .collect();
        channels.push(linkrefiner_gt(
            &polygons,
            annotation.width,
            annotation.height,
            args.beta,
        ));
    }
    atomic_write(&args.out, &encode_map(&channels)?)?;
    manifest.output(&args.out);
    manifest.write(&args.out)?;
    Ok(())
}
