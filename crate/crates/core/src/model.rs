//! A head, an optional social refiner, and the parameters they share a store
//! with.

use diffnum::{Graph, LatentGaussian, ParamId, ParamStore, Tensor, Var};

use crate::arch::Architecture;
use crate::error::{Error, Result};
use crate::heads::{Head, HeadKind, Mode, RawPrediction};
use crate::kv::KeyValues;
use crate::losses;
use crate::rng::{rng_for, TAG_INIT};
use crate::social::{build_mask, PedGroup, Refinement, SocialRefiner, DEFAULT_MASK_RADIUS};
use crate::tracks::Tracks;
use crate::window::{SceneWindow, DEFAULT_DELTA, DEFAULT_TAU};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub tau: usize,
    pub delta: usize,
    /// Slide window length; ignored by the other heads.
    pub alpha: usize,
    pub head: HeadKind,
    pub refiner: bool,
    pub mask_radius: f64,
    pub teacher_forcing: bool,
    pub seed: u64,
    pub arch: Architecture,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            delta: DEFAULT_DELTA,
            alpha: DEFAULT_TAU,
            head: HeadKind::Cascaded,
            refiner: true,
            mask_radius: DEFAULT_MASK_RADIUS,
            teacher_forcing: false,
            seed: 0,
            arch: Architecture::paper(),
        }
    }
}

/// Parses `on`/`off` (also `true`/`false`, `1`/`0`).
pub fn parse_switch(raw: &str) -> Result<bool> {
    match raw {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("expected on or off, got `{other}`"))),
    }
}

pub fn switch_text(on: bool) -> &'static str {
    if on {
        "on"
    } else {
        "off"
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 || self.delta == 0 {
            return Err(Error::Config("tau and delta must be positive".into()));
        }
        if self.head == HeadKind::Slide && (self.alpha == 0 || self.alpha > self.tau) {
            return Err(Error::Config(format!(
                "alpha must satisfy 1 <= alpha <= tau ({}), got {}",
                self.tau, self.alpha
            )));
        }
        if !(self.mask_radius > 0.0 && self.mask_radius.is_finite()) {
            return Err(Error::Config("mask-radius must be positive".into()));
        }
        Ok(())
    }

    pub fn write_kv(&self, kv: &mut KeyValues) {
        kv.insert("tau", self.tau);
        kv.insert("delta", self.delta);
        kv.insert("alpha", self.alpha);
        kv.insert("head", self.head);
        kv.insert("refiner", switch_text(self.refiner));
        kv.insert("mask-radius", format!("{:?}", self.mask_radius));
        kv.insert("teacher-forcing", switch_text(self.teacher_forcing));
        kv.insert("seed", self.seed);
        self.arch.write_kv(kv);
    }

    /// Takes the keys of [`ModelConfig::write_kv`], keeping `base` for absent
    /// ones.
    pub fn read_kv(kv: &mut KeyValues, base: ModelConfig) -> Result<Self> {
        let mut c = base;
        if let Some(v) = kv.take("tau")? {
            c.tau = v;
        }
        if let Some(v) = kv.take("delta")? {
            c.delta = v;
        }
        if let Some(v) = kv.take("alpha")? {
            c.alpha = v;
        }
        if let Some(v) = kv.take::<String>("head")? {
            c.head = v.parse()?;
        }
        if let Some(v) = kv.take::<String>("refiner")? {
            c.refiner = parse_switch(&v)?;
        }
        if let Some(v) = kv.take("mask-radius")? {
            c.mask_radius = v;
        }
        if let Some(v) = kv.take::<String>("teacher-forcing")? {
            c.teacher_forcing = parse_switch(&v)?;
        }
        if let Some(v) = kv.take("seed")? {
            c.seed = v;
        }
        c.arch = Architecture::read_kv(kv, c.arch)?;
        c.validate()?;
        Ok(c)
    }
}

/// Pedestrians of several windows stacked row-wise.
#[derive(Debug, Clone)]
pub struct Batch {
    /// `[rows, 2·tau]` anchored pasts.
    pub past: Tensor,
    /// `[rows, 2·delta]` anchored futures.
    pub future: Tensor,
    pub groups: Vec<PedGroup>,
}

impl Batch {
    pub fn new(windows: &[&SceneWindow], mask_radius: f64) -> Result<Self> {
        let Some(first) = windows.first() else {
            return Err(Error::EmptyDataset("batch without windows".into()));
        };
        let (tau, delta) = (first.tau(), first.delta());
        if windows.iter().any(|w| w.tau() != tau || w.delta() != delta) {
            return Err(Error::Mismatch("windows with different horizons in one batch".into()));
        }
        let pasts: Vec<&Tracks> = windows.iter().map(|w| &w.past).collect();
        let futures: Vec<&Tracks> = windows.iter().map(|w| &w.future).collect();
        let mut groups = Vec::with_capacity(windows.len());
        let mut start = 0;
        for w in windows {
            groups.push(PedGroup {
                rows: start..start + w.num_peds(),
                mask: build_mask(w, mask_radius),
            });
            start += w.num_peds();
        }
        Ok(Self {
            past: Tracks::stack(&pasts)?.to_tensor(),
            future: Tracks::stack(&futures)?.to_tensor(),
            groups,
        })
    }

    /// `copies` stacked replicas of one window, one group each.
    pub fn replicated(window: &SceneWindow, copies: usize, mask_radius: f64) -> Result<Self> {
        let refs = vec![window; copies];
        Self::new(&refs, mask_radius)
    }

    pub fn num_rows(&self) -> usize {
        self.past.rows()
    }
}

/// One forward pass over a batch.
#[derive(Debug, Clone)]
pub struct Forward {
    pub raw: RawPrediction,
    pub refinement: Option<Refinement>,
    pub gt: Var,
    pub past: Var,
}

impl Forward {
    pub fn posteriors(&self) -> &[LatentGaussian] {
        &self.raw.posteriors
    }

    /// The model's final prediction: refined when a refiner is present.
    pub fn prediction(&self) -> Var {
        self.refinement.map_or(self.raw.points, |r| r.refined)
    }
}

/// Loss nodes of one batch.
#[derive(Debug, Clone, Copy)]
pub struct LossVars {
    pub l_ap: Var,
    pub l_kld: Var,
    pub l_r: Var,
    pub total: Var,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub head: Head,
    pub refiner: Option<SocialRefiner>,
}

impl Model {
    /// Freshly initialised from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut rng = rng_for(config.seed, &[TAG_INIT]);
        let head = Head::init(
            config.head,
            &mut store,
            &config.arch,
            config.tau,
            config.delta,
            config.alpha,
            &mut rng,
        )?;
        let refiner = if config.refiner {
            Some(SocialRefiner::init(&mut store, &config.arch, config.tau, config.delta, &mut rng)?)
        } else {
            None
        };
        Ok(Self {
            config,
            store,
            head,
            refiner,
        })
    }

    pub fn count_parameters(&self) -> usize {
        self.head.count_parameters() + self.refiner.as_ref().map_or(0, |r| r.param_count())
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.head.param_ids();
        if let Some(r) = &self.refiner {
            ids.extend(r.param_ids());
        }
        ids
    }

    pub fn latent_dim(&self) -> usize {
        self.head.latent_dim()
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        let (tau, delta) = (self.config.tau, self.config.delta);
        if batch.past.cols() != 2 * tau || batch.future.cols() != 2 * delta {
            return Err(Error::Mismatch(format!(
                "model expects tau={tau}, delta={delta}; batch has tau={}, delta={}",
                batch.past.cols() / 2,
                batch.future.cols() / 2
            )));
        }
        Ok(())
    }

    /// Rolls the head out and refines. `noise` holds one `[rows, latent]`
    /// tensor per future step.
    pub fn forward(
        &self,
        g: &mut Graph,
        batch: &Batch,
        train: bool,
        noise: &[Tensor],
    ) -> Result<Forward> {
        self.check_batch(batch)?;
        let past = g.constant(batch.past.clone());
        let gt = g.constant(batch.future.clone());
        let noise: Vec<Var> = noise.iter().map(|t| g.constant(t.clone())).collect();
        let mode = if train {
            Mode::Train {
                gt_future: gt,
                teacher_forcing: self.config.teacher_forcing,
            }
        } else {
            Mode::Infer
        };
        let raw = self.head.rollout(g, &self.store, past, mode, &noise)?;
        let refinement = match &self.refiner {
            Some(r) => Some(r.refine(g, &self.store, past, raw.points, &batch.groups)?),
            None => None,
        };
        Ok(Forward {
            raw,
            refinement,
            gt,
            past,
        })
    }

    /// The three training losses and their sum. Without a refiner the
    /// regression term is a constant zero.
    pub fn losses(&self, g: &mut Graph, fwd: &Forward) -> Result<LossVars> {
        let n = g.value(fwd.gt).rows();
        let l_ap = losses::average_point_loss(g, fwd.gt, fwd.raw.points, n)?;
        let l_kld = losses::kld_loss(g, &fwd.raw.posteriors, n)?;
        let l_r = match fwd.refinement {
            Some(r) => losses::regression_loss(g, fwd.gt, r.raw, r.offsets, n)?,
            None => g.constant(Tensor::scalar(0.0)),
        };
        let sum = g.add(l_ap, l_kld)?;
        let total = g.add(sum, l_r)?;
        Ok(LossVars {
            l_ap,
            l_kld,
            l_r,
            total,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_kv_round_trip() {
        let cfg = ModelConfig {
            head: HeadKind::Slide,
            alpha: 5,
            refiner: false,
            mask_radius: 1.25,
            seed: 9,
            arch: Architecture::desk(),
            ..ModelConfig::default()
        };
        let mut kv = KeyValues::default();
        cfg.write_kv(&mut kv);
        let back = ModelConfig::read_kv(&mut kv, ModelConfig::default()).unwrap();
        kv.finish().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn alpha_beyond_tau_rejected() {
        let cfg = ModelConfig {
            head: HeadKind::Slide,
            alpha: 9,
            ..ModelConfig::default()
        };
        assert!(matches!(Model::new(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_same_parameters() {
        let cfg = ModelConfig {
            arch: Architecture::paper().narrowed(16),
            seed: 3,
            ..ModelConfig::default()
        };
        let a = Model::new(cfg.clone()).unwrap();
        let b = Model::new(cfg).unwrap();
        for id in a.store.ids() {
            assert_eq!(a.store.value(id), b.store.value(id));
        }
    }
}
