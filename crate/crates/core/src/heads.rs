//! The three trajectory heads: baseline, cascaded and slide.
//!
//! All heads roll out `delta` future points one step at a time and differ
//! only in what each step's CVAE unit sees:
//!
//! * baseline: `delta` independent units, each fed the original past;
//! * cascaded: `delta` unshared units, step `k` fed the past followed by the
//!   `k` points predicted so far (`2·(tau + k)` inputs);
//! * slide: one shared unit fed a window of the most recent `alpha` points,
//!   observed or predicted.

use std::fmt;
use std::str::FromStr;

use diffnum::{Graph, LatentGaussian, ParamId, ParamStore, Var};
use rand::Rng;

use crate::arch::Architecture;
use crate::cvae::CvaeUnit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeadKind {
    Baseline,
    Cascaded,
    Slide,
}

impl HeadKind {
    pub const ALL: [HeadKind; 3] = [HeadKind::Baseline, HeadKind::Cascaded, HeadKind::Slide];
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadKind::Baseline => "baseline",
            HeadKind::Cascaded => "cascaded",
            HeadKind::Slide => "slide",
        })
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(HeadKind::Baseline),
            "cascaded" => Ok(HeadKind::Cascaded),
            "slide" => Ok(HeadKind::Slide),
            other => Err(Error::Config(format!(
                "unknown head `{other}` (expected baseline, cascaded or slide)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Mode {
    /// Encode the ground truth `[rows, 2·delta]`. With `teacher_forcing`
    /// the true point, not the prediction, is appended to later inputs.
    Train {
        gt_future: Var,
        teacher_forcing: bool,
    },
    Infer,
}

/// Pre-refinement rollout in the anchored frame.
#[derive(Debug, Clone)]
pub struct RawPrediction {
    /// `[rows, 2·delta]`
    pub points: Var,
    /// Per step, `[rows, 2]`.
    pub steps: Vec<Var>,
    /// Per step, the input handed to that step's unit.
    pub inputs: Vec<Var>,
    /// Per step posteriors; empty at inference.
    pub posteriors: Vec<LatentGaussian>,
}

#[derive(Debug, Clone)]
pub struct BaselineHead {
    pub tau: usize,
    pub units: Vec<CvaeUnit>,
}

#[derive(Debug, Clone)]
pub struct CascadedHead {
    pub tau: usize,
    pub units: Vec<CvaeUnit>,
}

#[derive(Debug, Clone)]
pub struct SlideHead {
    pub tau: usize,
    pub delta: usize,
    pub alpha: usize,
    pub unit: CvaeUnit,
}

#[derive(Debug, Clone)]
pub enum Head {
    Baseline(BaselineHead),
    Cascaded(CascadedHead),
    Slide(SlideHead),
}

impl Head {
    pub fn init<R: Rng + ?Sized>(
        kind: HeadKind,
        store: &mut ParamStore,
        arch: &Architecture,
        tau: usize,
        delta: usize,
        alpha: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if tau == 0 || delta == 0 {
            return Err(Error::Config("tau and delta must be positive".into()));
        }
        Ok(match kind {
            HeadKind::Baseline => Head::Baseline(BaselineHead {
                tau,
                units: (0..delta)
                    .map(|k| CvaeUnit::init(store, &format!("head.unit{k:02}"), arch, tau, rng))
                    .collect::<Result<_>>()?,
            }),
            HeadKind::Cascaded => Head::Cascaded(CascadedHead {
                tau,
                units: (0..delta)
                    .map(|k| CvaeUnit::init(store, &format!("head.unit{k:02}"), arch, tau + k, rng))
                    .collect::<Result<_>>()?,
            }),
            HeadKind::Slide => {
                if alpha == 0 || alpha > tau {
                    return Err(Error::Config(format!(
                        "slide window alpha must satisfy 1 <= alpha <= tau ({tau}), got {alpha}"
                    )));
                }
                Head::Slide(SlideHead {
                    tau,
                    delta,
                    alpha,
                    unit: CvaeUnit::init(store, "head.unit", arch, alpha, rng)?,
                })
            }
        })
    }

    pub fn kind(&self) -> HeadKind {
        match self {
            Head::Baseline(_) => HeadKind::Baseline,
            Head::Cascaded(_) => HeadKind::Cascaded,
            Head::Slide(_) => HeadKind::Slide,
        }
    }

    pub fn tau(&self) -> usize {
        match self {
            Head::Baseline(h) => h.tau,
            Head::Cascaded(h) => h.tau,
            Head::Slide(h) => h.tau,
        }
    }

    pub fn delta(&self) -> usize {
        match self {
            Head::Baseline(h) => h.units.len(),
            Head::Cascaded(h) => h.units.len(),
            Head::Slide(h) => h.delta,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.unit_for_step(0).latent_dim()
    }

    /// The unit that predicts future step `k` (0-based).
    pub fn unit_for_step(&self, k: usize) -> &CvaeUnit {
        match self {
            Head::Baseline(h) => &h.units[k],
            Head::Cascaded(h) => &h.units[k],
            Head::Slide(h) => &h.unit,
        }
    }

    /// Distinct units, in step order.
    pub fn units(&self) -> Vec<&CvaeUnit> {
        match self {
            Head::Baseline(h) => h.units.iter().collect(),
            Head::Cascaded(h) => h.units.iter().collect(),
            Head::Slide(h) => vec![&h.unit],
        }
    }

    /// Exact number of trainable scalars, biases included.
    pub fn count_parameters(&self) -> usize {
        self.units().iter().map(|u| u.param_count()).sum()
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.units().iter().flat_map(|u| u.param_ids()).collect()
    }

    /// Input of step `k` given the observed past `[rows, 2·tau]` and the
    /// points appended so far.
    fn step_input(&self, g: &mut Graph, past: Var, appended: &[Var], k: usize) -> Result<Var> {
        match self {
            Head::Baseline(_) => Ok(past),
            Head::Cascaded(_) => {
                let mut parts = vec![past];
                parts.extend_from_slice(&appended[..k]);
                Ok(g.concat_cols(&parts)?)
            }
            Head::Slide(h) => {
                if k < h.alpha {
                    let observed = h.alpha - k;
                    let recent = g.slice_cols(past, 2 * (h.tau - observed), 2 * observed)?;
                    let mut parts = vec![recent];
                    parts.extend_from_slice(&appended[..k]);
                    Ok(g.concat_cols(&parts)?)
                } else {
                    Ok(g.concat_cols(&appended[k - h.alpha..k])?)
                }
            }
        }
    }

    /// Rolls out `delta` steps. `past` is `[rows, 2·tau]`; `noise` holds one
    /// `[rows, latent_dim]` tensor per step.
    pub fn rollout(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        past: Var,
        mode: Mode,
        noise: &[Var],
    ) -> Result<RawPrediction> {
        let (tau, delta) = (self.tau(), self.delta());
        let pv = g.value(past);
        if pv.cols() != 2 * tau {
            return Err(Error::Mismatch(format!(
                "head observes {tau} points, past has {} columns",
                pv.cols()
            )));
        }
        let rows = pv.rows();
        if noise.len() != delta {
            return Err(Error::Mismatch(format!(
                "head predicts {delta} steps, got noise for {}",
                noise.len()
            )));
        }
        if let Mode::Train { gt_future, .. } = mode {
            let gt = g.value(gt_future);
            if gt.cols() != 2 * delta || gt.rows() != rows {
                return Err(Error::Mismatch(format!(
                    "ground truth is {:?}, expected [{rows}, {}]",
                    gt.shape(),
                    2 * delta
                )));
            }
        }

        let mut appended = Vec::with_capacity(delta);
        let mut steps = Vec::with_capacity(delta);
        let mut inputs = Vec::with_capacity(delta);
        let mut posteriors = Vec::new();
        for (k, &eps) in noise.iter().enumerate() {
            let input = self.step_input(g, past, &appended, k)?;
            let unit = self.unit_for_step(k);
            let (point, next) = match mode {
                Mode::Train {
                    gt_future,
                    teacher_forcing,
                } => {
                    let gt_point = g.slice_cols(gt_future, 2 * k, 2)?;
                    let out = unit.train_forward(g, store, input, gt_point, eps)?;
                    posteriors.push(out.posterior.expect("training step has a posterior"));
                    (out.point, if teacher_forcing { gt_point } else { out.point })
                }
                Mode::Infer => {
                    let out = unit.infer_forward(g, store, input, eps)?;
                    (out.point, out.point)
                }
            };
            inputs.push(input);
            steps.push(point);
            appended.push(next);
        }
        let points = g.concat_cols(&steps)?;
        Ok(RawPrediction {
            points,
            steps,
            inputs,
            posteriors,
        })
    }
}
