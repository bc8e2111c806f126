//! Shared fixtures for the benchmark targets.

use craft_kernels::synth::{generate_scene, Layout, Scene, SceneConfig};

/// A mixed-layout scene sized like the acceptance harness.
pub fn demo_scene(seed: u64) -> Scene {
    generate_scene(&SceneConfig {
        seed,
        ..SceneConfig::default()
    })
    .expect("default config places its words")
}

/// A single curved word, the rectification workload.
pub fn arc_scene(seed: u64) -> Scene {
    generate_scene(&SceneConfig {
        n_words: 1,
        word_len: (4, 6),
        char_size: (14.0, 20.0),
        layouts: vec![Layout::Arc {
            min_radius: 45.0,
            max_radius: 90.0,
        }],
        seed,
        ..SceneConfig::default()
    })
    .expect("arc config places its word")
}
