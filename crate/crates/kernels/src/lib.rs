//! Scene-text geometry and numerics kernels.
//!
//! Everything a character-level text spotter needs around the neural network,
//! with no neural network: ground-truth score-map synthesis from character
//! boxes, detection/recognition losses with analytic gradients, score-map
//! post-processing into oriented boxes and curved-text polygons, and
//! iterative thin-plate-spline rectification. A deterministic synthetic-scene
//! generator ([`synth`]) acts as a stand-in for a perfect detector so the
//! whole pipeline can be exercised round-trip.
//!
//! The universal currency is the [`ScoreMap`]: a single-channel grid of real
//! values in `[0, 1]`. A detector output is a 4-channel bundle
//! ([`DetectorMaps`]): character region, character link, and two orientation
//! channels encoding `(sin θ + 1)/2` and `(cos θ + 1)/2`.
//!
//! Coordinate conventions used throughout:
//! - x grows rightward, y grows downward (image convention);
//! - pixel `(i, j)` has its center at real coordinates `(i, j)` exactly;
//! - quadrilateral corners are stored clockwise (on screen) starting
//!   top-left, which makes the shoelace sum positive under the y-down axis.

pub mod evalkit;
pub mod geometry;
pub mod gtgen;
pub mod losses;
pub mod postproc;
pub mod rastermap;
pub mod rectify;
pub mod synth;

pub use evalkit::EvalReport;
pub use geometry::{Homography, OrientedBox, Point, Quad, TextPolygon};
pub use gtgen::{Annotation, CharBox, DetectorMaps, GtConfig, WordAnnotation};
pub use losses::LossConfig;
pub use postproc::{Blob, PostprocConfig};
pub use rastermap::{BinaryMap, ScoreMap};
pub use rectify::{ControlPointSet, TpsTransform};
pub use synth::{Layout, Scene, SceneConfig, SplitMix64};
