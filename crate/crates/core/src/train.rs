//! Mini-batch Adam training on the summed multi-task loss.

use diffnum::{adam_step, AdamConfig, Graph, Tensor};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::model::{Batch, Model};
use crate::rng::{normal_tensor, rng_for, TAG_SHUFFLE, TAG_TRAIN_NOISE};
use crate::window::SceneWindow;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Windows per batch.
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            lr: adam.lr,
            epochs: 600,
            batch_size: 512,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
        }
    }
}

impl TrainConfig {
    /// Small-batch settings for CPU-scale runs.
    pub fn desk() -> Self {
        Self {
            lr: 3e-3,
            epochs: 200,
            batch_size: 32,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch must be positive".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config("eps must be positive".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn write_kv(&self, kv: &mut KeyValues) {
        kv.insert("lr", format!("{:?}", self.lr));
        kv.insert("epochs", self.epochs);
        kv.insert("batch", self.batch_size);
        kv.insert("beta1", format!("{:?}", self.beta1));
        kv.insert("beta2", format!("{:?}", self.beta2));
        kv.insert("eps", format!("{:?}", self.eps));
    }

    pub fn read_kv(kv: &mut KeyValues, base: TrainConfig) -> Result<Self> {
        let mut c = base;
        if let Some(v) = kv.take("lr")? {
            c.lr = v;
        }
        if let Some(v) = kv.take("epochs")? {
            c.epochs = v;
        }
        if let Some(v) = kv.take("batch")? {
            c.batch_size = v;
        }
        if let Some(v) = kv.take("beta1")? {
            c.beta1 = v;
        }
        if let Some(v) = kv.take("beta2")? {
            c.beta2 = v;
        }
        if let Some(v) = kv.take("eps")? {
            c.eps = v;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Loss components; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub l_ap: f64,
    pub l_kld: f64,
    pub l_r: f64,
    pub total: f64,
}

impl LossReport {
    pub fn new(l_ap: f64, l_kld: f64, l_r: f64) -> Self {
        Self {
            l_ap,
            l_kld,
            l_r,
            total: l_ap + l_kld + l_r,
        }
    }
}

/// Training-mode noise for one batch: one tensor per future step.
pub fn train_noise(model: &Model, rows: usize, epoch: usize, batch: usize) -> Vec<Tensor> {
    let mut rng = rng_for(model.config.seed, &[TAG_TRAIN_NOISE, epoch as u64, batch as u64]);
    (0..model.config.delta)
        .map(|_| normal_tensor(&mut rng, rows, model.latent_dim()))
        .collect()
}

/// Loss values of one training-mode forward pass, without updating.
pub fn batch_losses(model: &Model, batch: &Batch, noise: &[Tensor]) -> Result<LossReport> {
    let mut g = Graph::new();
    let fwd = model.forward(&mut g, batch, true, noise)?;
    let l = model.losses(&mut g, &fwd)?;
    let v = |x| g.value(x).item();
    Ok(LossReport {
        l_ap: v(l.l_ap),
        l_kld: v(l.l_kld),
        l_r: v(l.l_r),
        total: v(l.total),
    })
}

/// Trains in place and returns one pedestrian-weighted report per epoch.
/// `on_epoch` sees each report as it is produced.
pub fn train(
    model: &mut Model,
    windows: &[SceneWindow],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &LossReport),
) -> Result<Vec<LossReport>> {
    cfg.validate()?;
    if windows.is_empty() {
        return Err(Error::EmptyDataset("no training windows".into()));
    }
    let adam = cfg.adam();
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = rng_for(model.config.seed, &[TAG_SHUFFLE, epoch as u64]);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let (mut sums, mut rows_seen) = ([0.0; 3], 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<&SceneWindow> = chunk.iter().map(|&i| &windows[i]).collect();
            let batch = Batch::new(&refs, model.config.mask_radius)?;
            let rows = batch.num_rows();
            let noise = train_noise(model, rows, epoch, b);
            let diverged = |e: Error| match e {
                Error::Numeric(diffnum::DiffError::NonFinite(_)) => Error::Diverged { epoch, batch: b },
                e => e,
            };
            let mut g = Graph::new();
            let fwd = model.forward(&mut g, &batch, true, &noise).map_err(diverged)?;
            let l = model.losses(&mut g, &fwd).map_err(diverged)?;
            let total = g.value(l.total).item();
            if !total.is_finite() {
                return Err(Error::Diverged { epoch, batch: b });
            }
            g.backward(l.total, &mut model.store).map_err(|e| diverged(e.into()))?;
            adam_step(&mut model.store, &adam);
            for (s, v) in sums.iter_mut().zip([l.l_ap, l.l_kld, l.l_r]) {
                *s += g.value(v).item() * rows as f64;
            }
            rows_seen += rows;
        }
        let n = rows_seen as f64;
        let report = LossReport::new(sums[0] / n, sums[1] / n, sums[2] / n);
        on_epoch(epoch, &report);
        history.push(report);
    }
    Ok(history)
}
