//! `gradcheck`: analytic gradients versus central finite differences.

use crate::{Cli, GradcheckArgs};
use anyhow::{bail, Result};
use craft_kernels::losses::{
    grad_check, masked_mse, ohem_mask, orientation_loss, recognition_loss_logprob, LossConfig,
};
use craft_kernels::rastermap::ScoreMap;
use craft_kernels::synth::SplitMix64;

fn random_map(size: usize, rng: &mut SplitMix64) -> ScoreMap {
    ScoreMap::from_fn(size, size, |_, _| rng.next_f64())
}

pub fn run(args: &GradcheckArgs, _cli: &Cli) -> Result<()> {
    let size = args.size;
    let cfg = LossConfig::default();
    let mut worst = [0.0f64; 3];
    for instance in 0..args.instances {
        let mut rng = SplitMix64::new(args.seed ^ instance.wrapping_mul(0x9E37_79B9));

        // Region/link loss with the hard-example selection frozen at the
        // evaluation point.
        let gt = ScoreMap::from_fn(size, size, |_, _| {
            if rng.next_f64() < 0.2 {
                0.5 + 0.5 * rng.next_f64()
            } else {
                0.0
            }
        });
        let pred = random_map(size, &mut rng);
        let mask = ohem_mask(&pred, &gt, &cfg)?;
        worst[0] = worst[0].max(grad_check(|m| masked_mse(m, &gt, &mask), &pred, args.step));

        // Orientation loss, gradients w.r.t. both angle channels.
        let gt_sin = random_map(size, &mut rng);
        let gt_cos = random_map(size, &mut rng);
        let region = random_map(size, &mut rng);
        let pred_sin = random_map(size, &mut rng);
        let pred_cos = random_map(size, &mut rng);
        worst[1] = worst[1].max(grad_check(
            |m| {
                let (v, gs, _) = orientation_loss(m, &pred_cos, &gt_sin, &gt_cos, &region);
                (v, gs)
            },
            &pred_sin,
            args.step,
        ));
        worst[1] = worst[1].max(grad_check(
            |m| {
                let (v, _, gc) = orientation_loss(&pred_sin, m, &gt_sin, &gt_cos, &region);
                (v, gc)
            },
            &pred_cos,
            args.step,
        ));

        // Recognition loss over log-probability inputs.
        let log_probs = ScoreMap::from_fn(size, size, |_, _| (0.05 + 0.9 * rng.next_f64()).ln());
        worst[2] = worst[2].max(grad_check(
            |m| recognition_loss_logprob(m).expect("log-probs stay nonpositive"),
            &log_probs,
            args.step,
        ));
    }

    let mut failed = false;
    for (name, err) in [
        ("region_link_loss", worst[0]),
        ("orientation_loss", worst[1]),
        ("recognition_loss", worst[2]),
    ] {
        let ok = err < args.tolerance;
        failed |= !ok;
        println!(
            "{name:<18} max_rel_err {err:9.3e}  {}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed {
        bail!("gradient check exceeded tolerance {}", args.tolerance);
    }
    Ok(())
}
