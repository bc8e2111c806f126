//! `synth`: deterministic scene generation, one annotation/CRMAP pair per
//! seed.

use crate::docs::{load_file_config, to_json_bytes};
use crate::io::{atomic_write, for_each_parallel, ManifestBuilder};
use crate::{Cli, SynthArgs};
use anyhow::{bail, Context, Result};
use craft_kernels::rastermap::encode_map;
use craft_kernels::synth::{generate_scene, Layout, SceneConfig};

fn parse_layouts(names: &[String]) -> Result<Vec<Layout>> {
    let defaults = SceneConfig::default().layouts;
    let mut layouts = Vec::new();
    for name in names {
        let layout = match name.trim() {
            "horizontal" => Layout::Horizontal,
            "rotated" => *defaults
                .iter()
                .find(|l| matches!(l, Layout::Rotated { .. }))
                .unwrap(),
            "arc" => *defaults
                .iter()
                .find(|l| matches!(l, Layout::Arc { .. }))
                .unwrap(),
            other => bail!("unknown layout {other:?} (expected horizontal, rotated, arc)"),
        };
        layouts.push(layout);
    }
    Ok(layouts)
}

pub fn run(args: &SynthArgs, cli: &Cli) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    let file_cfg = load_file_config(cli.config.as_deref())?;
    let mut scene_cfg = file_cfg.scene.unwrap_or_default();
    if let Some(w) = args.width {
        scene_cfg.width = w;
    }
    if let Some(h) = args.height {
        scene_cfg.height = h;
    }
    if let Some(n) = args.words {
        scene_cfg.n_words = n;
    }
    if let Some(sigma) = args.noise_sigma {
        scene_cfg.noise_sigma = sigma;
    }
    if let Some(names) = &args.layouts {
        scene_cfg.layouts = parse_layouts(names)?;
    }
    manifest.config(&scene_cfg);

    let seeds: Vec<u64> = (0..args.count).map(|i| args.seed + i).collect();
    let results = for_each_parallel(&seeds, |&seed| -> Result<Vec<std::path::PathBuf>> {
        let cfg = SceneConfig {
            seed,
            ..scene_cfg.clone()
        };
        let scene =
            generate_scene(&cfg).with_context(|| format!("generating scene for seed {seed}"))?;
        let stem = args.out.join(format!("scene_{seed:06}"));
        let ann_path = stem.with_extension("json");
        let map_path = stem.with_extension("crmap");
        atomic_write(&ann_path, &to_json_bytes(&scene.annotation())?)?;
        let channels: Vec<_> = scene.maps.channels().map(|c| c.clone()).into();
        atomic_write(&map_path, &encode_map(&channels)?)?;
        Ok(vec![ann_path, map_path])
    });
    for result in results {
        for path in result? {
            manifest.output(&path);
        }
    }
    manifest.write(&args.out)?;
    Ok(())
}
