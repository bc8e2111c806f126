//! On-disk JSON documents shared by the subcommands.

use anyhow::{bail, Context, Result};
use craft_kernels::geometry::{OrientedBox, Point, TextPolygon};
use craft_kernels::gtgen::Annotation;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Detection output document: `{"boxes":[...]}` with an optional
/// `"polygons"` list when polygon extraction ran.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxesDoc {
    pub boxes: Vec<BoxEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygons: Option<Vec<TextPolygon>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoxEntry {
    pub center: [f64; 2],
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl From<&OrientedBox> for BoxEntry {
    fn from(b: &OrientedBox) -> Self {
        BoxEntry {
            center: [b.center.x, b.center.y],
            w: b.width,
            h: b.height,
            theta: b.theta,
        }
    }
}

impl BoxEntry {
    pub fn to_box(self) -> OrientedBox {
        OrientedBox::new(
            Point::new(self.center[0], self.center[1]),
            self.w,
            self.h,
            self.theta,
        )
    }
}

/// Loads the polygon outlines of a detection or annotation file: boxes JSON
/// uses its polygons when present (box corners otherwise), and annotation
/// JSON (detected by its `words` key) contributes one outline per word.
pub fn load_outlines(path: &Path) -> Result<Vec<Vec<Point>>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("words").is_some() {
        let ann: Annotation = serde_json::from_value(value)
            .with_context(|| format!("parsing annotation {}", path.display()))?;
        return Ok(ann
            .words
            .iter()
            .map(|w| match &w.polygon {
                Some(p) => p.ring(),
                None => w.hull(),
            })
            .collect());
    }
    if value.get("boxes").is_some() {
        let doc: BoxesDoc = serde_json::from_value(value)
            .with_context(|| format!("parsing boxes {}", path.display()))?;
        if let Some(polygons) = &doc.polygons {
            if !polygons.is_empty() {
                return Ok(polygons.iter().map(|p| p.ring()).collect());
            }
        }
        return Ok(doc
            .boxes
            .iter()
            .map(|b| b.to_box().corners().to_vec())
            .collect());
    }
    bail!(
        "{}: expected a boxes document or an annotation document",
        path.display()
    );
}

/// Optional config file: the same JSON shapes as the in-crate configs.
/// Individual command-line flags take precedence over these values.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct FileConfig {
    #[serde(default)]
    pub scene: Option<craft_kernels::synth::SceneConfig>,
    #[serde(default)]
    pub gt: Option<craft_kernels::gtgen::GtConfig>,
    #[serde(default)]
    pub postproc: Option<craft_kernels::postproc::PostprocConfig>,
}

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let bytes =
        std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing config {}", path.display()))
}

/// JSON bytes with a trailing newline; all documents are written this way so
/// reruns are byte-stable.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
