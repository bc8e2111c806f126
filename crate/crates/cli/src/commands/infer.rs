//! `infer`: detector maps to oriented boxes and optional polygons.

use crate::docs::{load_file_config, to_json_bytes, BoxEntry, BoxesDoc};
use crate::io::{atomic_write, for_each_parallel, ManifestBuilder};
use crate::{Cli, InferArgs};
use anyhow::{bail, Context, Result};
use craft_kernels::gtgen::DetectorMaps;
use craft_kernels::postproc::{extract_boxes, extract_polygons, PostprocConfig};
use craft_kernels::rastermap::read_map;
use std::path::{Path, PathBuf};

pub(crate) fn resolve_postproc(
    cli: &Cli,
    region_threshold: Option<f64>,
    link_threshold: Option<f64>,
    min_blob_area: Option<usize>,
    expand_ratio: Option<f64>,
) -> Result<PostprocConfig> {
    let file_cfg = load_file_config(cli.config.as_deref())?;
    let mut cfg = file_cfg.postproc.unwrap_or_default();
    if let Some(v) = region_threshold {
        cfg.region_threshold = v;
    }
    if let Some(v) = link_threshold {
        cfg.link_threshold = v;
    }
    if let Some(v) = min_blob_area {
        cfg.min_blob_area = v;
    }
    if let Some(v) = expand_ratio {
        cfg.expand_ratio = v;
    }
    Ok(cfg)
}

pub(crate) fn load_detector_maps(path: &Path) -> Result<DetectorMaps> {
    let mut channels = read_map(path).with_context(|| format!("reading {}", path.display()))?;
    if channels.len() < 4 {
        bail!(
            "{}: expected 4 channels (region, link, sin, cos), found {}",
            path.display(),
            channels.len()
        );
    }
    channels.truncate(4);
    DetectorMaps::from_channels(channels)
        .ok_or_else(|| anyhow::anyhow!("{}: channel dimensions differ", path.display()))
}

fn infer_one(
    path: &Path,
    out: &Path,
    cfg: &PostprocConfig,
    polygons: bool,
    stations: usize,
) -> Result<()> {
    let maps = load_detector_maps(path)?;
    let boxes: Vec<BoxEntry> = extract_boxes(&maps, cfg)
        .iter()
        .map(BoxEntry::from)
        .collect();
    let polygons = if polygons {
        Some(
            extract_polygons(&maps.region, &maps.link, cfg, stations)
                .with_context(|| format!("extracting polygons from {}", path.display()))?,
        )
    } else {
        None
    };
    let doc = BoxesDoc { boxes, polygons };
    atomic_write(out, &to_json_bytes(&doc)?)
}

pub fn run(args: &InferArgs, cli: &Cli) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    let cfg = resolve_postproc(
        cli,
        args.region_threshold,
        args.link_threshold,
        args.min_blob_area,
        args.expand_ratio,
    )?;
    manifest.config(&cfg);
    let jobs: Vec<(PathBuf, PathBuf)> = match (&args.out, &args.out_dir, args.maps.len()) {
        (Some(out), None, 1) => vec![(args.maps[0].clone(), out.clone())],
        (Some(_), None, _) => bail!("--out takes a single input; use --out-dir for batches"),
        (None, Some(dir), _) => args
            .maps
            .iter()
            .map(|m| {
                let stem = m.file_stem().unwrap_or_default().to_string_lossy();
                (m.clone(), dir.join(format!("{stem}.boxes.json")))
            })
            .collect(),
        (None, None, _) => bail!("one of --out or --out-dir is required"),
        (Some(_), Some(_), _) => unreachable!("clap conflict"),
    };
    for (input, output) in &jobs {
        manifest.input(input);
        manifest.output(output);
    }
    let anchor = args
        .out_dir
        .clone()
        .or_else(|| args.out.clone())
        .expect("resolved above");
    let results = for_each_parallel(&jobs, |(input, output)| {
        infer_one(input, output, &cfg, args.polygons, args.stations)
    });
    for r in results {
        r?;
    }
    manifest.write(&anchor)?;
    Ok(())
}
