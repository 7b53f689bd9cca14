//! Parameter counts and inference timing.

use std::time::Instant;

use diffnum::{Graph, Tensor};

use crate::arch::Architecture;
use crate::error::{Error, Result};
use crate::heads::HeadKind;
use crate::model::{Batch, Model, ModelConfig};
use crate::window::SceneWindow;

fn unit_count(arch: &Architecture, past_len: usize) -> usize {
    arch.upast_spec(past_len).param_count()
        + arch.point_spec().param_count()
        + arch.latent_spec().param_count()
        + arch.decoder_spec().param_count()
}

/// Trainable scalars of a head, from the layer widths alone.
pub fn head_param_count(arch: &Architecture, kind: HeadKind, tau: usize, delta: usize, alpha: usize) -> usize {
    match kind {
        HeadKind::Baseline => delta * unit_count(arch, tau),
        HeadKind::Cascaded => (tau..tau + delta).map(|t| unit_count(arch, t)).sum(),
        HeadKind::Slide => unit_count(arch, alpha),
    }
}

/// Trainable scalars of the social refiner.
pub fn refiner_param_count(arch: &Architecture, tau: usize, delta: usize) -> usize {
    arch.opast_spec(tau).param_count()
        + arch.pfuture_spec(delta).param_count()
        + arch.projection_spec().param_count()
        + 3 * arch.attention_spec().param_count()
        + arch.offsets_spec(delta).param_count()
}

/// What [`Model::count_parameters`] returns, without allocating a model.
pub fn model_param_count(cfg: &ModelConfig) -> usize {
    head_param_count(&cfg.arch, cfg.head, cfg.tau, cfg.delta, cfg.alpha)
        + if cfg.refiner {
            refiner_param_count(&cfg.arch, cfg.tau, cfg.delta)
        } else {
            0
        }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub head: HeadKind,
    pub refiner: bool,
    pub params: usize,
    pub seconds_per_batch: f64,
    pub timed_batches: usize,
    pub rows_per_batch: usize,
}

/// Times single-sample inference over batches of `windows`, after `warmup`
/// untimed batches. Batches cycle through the windows.
pub fn efficiency_report(
    model: &Model,
    windows: &[SceneWindow],
    batch_windows: usize,
    warmup: usize,
    timed: usize,
) -> Result<EfficiencyReport> {
    if windows.is_empty() {
        return Err(Error::EmptyDataset("no windows to time".into()));
    }
    if batch_windows == 0 || timed == 0 {
        return Err(Error::Config("batch and timed batch count must be positive".into()));
    }
    let refs: Vec<&SceneWindow> = windows.iter().cycle().take(batch_windows).collect();
    let batch = Batch::new(&refs, model.config.mask_radius)?;
    let noise: Vec<Tensor> = (0..model.config.delta)
        .map(|_| Tensor::zeros(&[batch.num_rows(), model.latent_dim()]))
        .collect();
    let run = || -> Result<()> {
        let mut g = Graph::new();
        model.forward(&mut g, &batch, false, &noise)?;
        Ok(())
    };
    for _ in 0..warmup {
        run()?;
    }
    let start = Instant::now();
    for _ in 0..timed {
        run()?;
    }
    Ok(EfficiencyReport {
        head: model.config.head,
        refiner: model.config.refiner,
        params: model.count_parameters(),
        seconds_per_batch: start.elapsed().as_secs_f64() / timed as f64,
        timed_batches: timed,
        rows_per_batch: batch.num_rows(),
    })
}
