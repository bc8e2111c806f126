//! `render`: CRMAP1 channels as PNG heatmaps.
//!
//! Fixed colormap: value v maps to RGB (v, v^2, 1-v) scaled to 8 bits, so
//! low scores read blue and high scores yellow-white.

use crate::io::{atomic_write, for_each_parallel, ManifestBuilder};
use crate::{Cli, RenderArgs};
use anyhow::{Context, Result};
use craft_kernels::rastermap::{read_map, ScoreMap};
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use std::path::{Path, PathBuf};

fn encode_png(map: &ScoreMap) -> Result<Vec<u8>> {
    let (w, h) = (map.width(), map.height());
    let mut raw = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let v = map.get(x, y).clamp(0.0, 1.0);
            raw.push((v * 255.0).round() as u8);
            raw.push((v * v * 255.0).round() as u8);
            raw.push(((1.0 - v) * 255.0).round() as u8);
        }
    }
    let mut bytes = Vec::new();
    PngEncoder::new(&mut bytes).write_image(&raw, w as u32, h as u32, ExtendedColorType::Rgb8)?;
    Ok(bytes)
}

fn render_one(input: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let channels = read_map(input).with_context(|| format!("reading {}", input.display()))?;
    let stem = input.file_stem().unwrap_or_default().to_string_lossy();
    let mut outputs = Vec::new();
    for (c, map) in channels.iter().enumerate() {
        let path = out_dir.join(format!("{stem}_c{c}.png"));
        atomic_write(&path, &encode_png(map)?)?;
        outputs.push(path);
    }
    Ok(outputs)
}

pub fn run(args: &RenderArgs, _cli: &Cli) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    for input in &args.maps {
        manifest.input(input);
    }
    let results = for_each_parallel(&args.maps, |input| render_one(input, &args.out_dir));
    for r in results {
        for path in r? {
            manifest.output(&path);
        }
    }
    manifest.write(&args.out_dir)?;
    Ok(())
}
