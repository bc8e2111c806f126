//! `rectify`: per-word iterative TPS rectification of detector maps.

use crate::docs::{to_json_bytes, BoxEntry, BoxesDoc};
use crate::io::{atomic_write, for_each_parallel, ManifestBuilder};
use crate::{Cli, RectifyArgs};
use anyhow::{Context, Result};
use craft_kernels::geometry::TextPolygon;
use craft_kernels::postproc::extract_boxes;
use craft_kernels::rastermap::encode_map;
use craft_kernels::rectify::{iterative_rectify, smooth_polygon, ControlPointSet};
use serde::Serialize;

/// Per-word rectification record written next to the warped maps.
#[derive(Serialize)]
struct RectifiedWord {
    index: usize,
    map: String,
    polygon: TextPolygon,
    #[serde(skip_serializing_if = "Option::is_none")]
    smoothed: Option<TextPolygon>,
}

pub fn run(args: &RectifyArgs, cli: &Cli) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    manifest.input(&args.maps);
    let cfg = super::infer::resolve_postproc(
        cli,
        args.region_threshold,
        args.link_threshold,
        args.min_blob_area,
        args.expand_ratio,
    )?;
    manifest.config(&serde_json::json!({
        "postproc": cfg,
        "iters": args.iters,
        "smooth_degree": args.smooth_degree,
    }));

    let maps = super::infer::load_detector_maps(&args.maps)?;
    let boxes = extract_boxes(&maps, &cfg);
    let stem = args
        .maps
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy()
        .into_owned();

    let jobs: Vec<usize> = (0..boxes.len()).collect();
    let results = for_each_parallel(&jobs, |&i| -> Result<RectifiedWord> {
        let init = ControlPointSet::from_box(&boxes[i]);
        let (rectified, finals) = iterative_rectify(&maps, &init, args.iters)
            .with_context(|| format!("rectifying word {i}"))?;
        let name = format!("{stem}_w{i:02}.crmap");
        let channels: Vec<_> = rectified.channels().map(|c| c.clone()).into();
        atomic_write(&args.out_dir.join(&name), &encode_map(&channels)?)?;
        let smoothed = if args.smooth_degree > 0 {
            Some(
                smooth_polygon(&finals, args.smooth_degree)
                    .with_context(|| format!("smoothing word {i}"))?,
            )
        } else {
            None
        };
        Ok(RectifiedWord {
            index: i,
            map: name,
            polygon: finals.to_polygon(),
            smoothed,
        })
    });
    let mut words = Vec::new();
    for r in results {
        words.push(r?);
    }
    for word in &words {
        manifest.output(&args.out_dir.join(&word.map));
    }

    // Detection summary in the boxes-JSON shape, polygons carrying the final
    // (optionally smoothed) control points.
    let doc = BoxesDoc {
        boxes: boxes.iter().map(BoxEntry::from).collect(),
        polygons: Some(
            words
                .iter()
                .map(|w| w.smoothed.clone().unwrap_or_else(|| w.polygon.clone()))
                .collect(),
        ),
    };
    let boxes_path = args.out_dir.join(format!("{stem}.boxes.json"));
    atomic_write(&boxes_path, &to_json_bytes(&doc)?)?;
    manifest.output(&boxes_path);
    let words_path = args.out_dir.join(format!("{stem}.words.json"));
    atomic_write(&words_path, &to_json_bytes(&words)?)?;
    manifest.output(&words_path);
    manifest.write(&args.out_dir)?;
    Ok(())
}
