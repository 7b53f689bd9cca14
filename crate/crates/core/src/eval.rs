//! Best-of-K sampling evaluation.
//!
//! Noise is drawn from an independent stream per (window, sample, step), so
//! the first `k` samples are identical whatever the largest `K` requested.

use std::collections::BTreeMap;

use diffnum::{Graph, Tensor};

use crate::error::{Error, Result};
use crate::metrics::{ade_of, displacement_errors};
use crate::model::{Batch, Model};
use crate::rng::{normal_tensor, rng_for, TAG_EVAL_NOISE};
use crate::tracks::Tracks;
use crate::window::SceneWindow;

/// One sampled future for every pedestrian of a window, in the anchored
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePrediction {
    pub raw: Tracks,
    pub offsets: Tracks,
    pub refined: Tracks,
}

/// `K` samples for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub window: usize,
    pub samples: Vec<SamplePrediction>,
}

/// Noise of sample `sample` for all steps of window `window`.
pub fn eval_noise(
    seed: u64,
    window: usize,
    sample: usize,
    rows: usize,
    delta: usize,
    latent: usize,
) -> Vec<Tensor> {
    (0..delta)
        .map(|step| {
            let mut rng = rng_for(seed, &[TAG_EVAL_NOISE, window as u64, sample as u64, step as u64]);
            normal_tensor(&mut rng, rows, latent)
        })
        .collect()
}

/// Samples `k` futures for `window`, which is item `index` of its dataset.
pub fn predict(
    model: &Model,
    window: &SceneWindow,
    index: usize,
    k: usize,
    seed: u64,
) -> Result<PredictionSet> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let n = window.num_peds();
    let (delta, latent) = (model.config.delta, model.latent_dim());
    let batch = Batch::replicated(window, k, model.config.mask_radius)?;
    let per_sample: Vec<Vec<Tensor>> =
        (0..k).map(|j| eval_noise(seed, index, j, n, delta, latent)).collect();
    let noise: Vec<Tensor> = (0..delta)
        .map(|s| {
            let data: Vec<f64> = per_sample.iter().flat_map(|v| v[s].data().to_vec()).collect();
            Tensor::new(&[k * n, latent], data).expect("stacked noise")
        })
        .collect();
    let mut g = Graph::new();
    let fwd = model.forward(&mut g, &batch, false, &noise)?;
    let raw = g.value(fwd.raw.points).clone();
    let offsets = match fwd.refinement {
        Some(r) => g.value(r.offsets).clone(),
        None => Tensor::zeros(raw.shape()),
    };
    let refined = g.value(fwd.prediction()).clone();
    if !refined.all_finite() {
        return Err(Error::Numeric(diffnum::DiffError::NonFinite("prediction")));
    }
    let part = |t: &Tensor, j: usize| {
        let rows: Vec<Vec<f64>> = (j * n..(j + 1) * n).map(|r| t.row(r).to_vec()).collect();
        Tracks::from_tensor(&Tensor::from_rows(&rows).expect("sample rows"))
    };
    Ok(PredictionSet {
        window: index,
        samples: (0..k)
            .map(|j| SamplePrediction {
                raw: part(&raw, j),
                offsets: part(&offsets, j),
                refined: part(&refined, j),
            })
            .collect(),
    })
}

/// Predictions for every window, spread over the available cores.
pub fn predict_all(model: &Model, windows: &[SceneWindow], k: usize, seed: u64) -> Result<Vec<PredictionSet>> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(windows.len().max(1));
    let chunk = windows.len().div_ceil(threads).max(1);
    let results: Vec<Result<Vec<PredictionSet>>> = std::thread::scope(|s| {
        let handles: Vec<_> = windows
            .chunks(chunk)
            .enumerate()
            .map(|(c, ws)| {
                s.spawn(move || {
                    ws.iter()
                        .enumerate()
                        .map(|(i, w)| predict(model, w, c * chunk + i, k, seed))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("prediction thread")).collect()
    });
    let mut out = Vec::with_capacity(windows.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneScore {
    pub scene: String,
    pub ade: f64,
    pub fde: f64,
    pub num_peds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k: usize,
    pub ade: f64,
    pub fde: f64,
    pub num_peds: usize,
    pub per_scene: Vec<SceneScore>,
    /// Mean error of the selected samples at each future step.
    pub per_frame: Vec<f64>,
}

/// Index of the sample with the smallest ADE among the first `k`; ties go
/// to the earlier sample.
pub fn best_of(errors: &[Vec<f64>], k: usize) -> usize {
    let mut best = 0;
    for j in 1..k.min(errors.len()) {
        if ade_of(&errors[j]) < ade_of(&errors[best]) {
            best = j;
        }
    }
    best
}

/// Scores precomputed predictions at each `k` in `ks`.
pub fn score(windows: &[SceneWindow], predictions: &[PredictionSet], ks: &[usize]) -> Result<Vec<EvalReport>> {
    if windows.len() != predictions.len() {
        return Err(Error::Mismatch("one prediction set per window expected".into()));
    }
    if windows.is_empty() {
        return Err(Error::EmptyDataset("no evaluation windows".into()));
    }
    let kmax = predictions.iter().map(|p| p.samples.len()).min().unwrap_or(0);
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > kmax) {
        return Err(Error::Config(format!("k = {k} outside 1..={kmax}")));
    }
    // errors[window][ped][sample][step]
    let mut errors = Vec::with_capacity(windows.len());
    for (w, p) in windows.iter().zip(predictions) {
        let per_sample: Vec<Vec<Vec<f64>>> = p
            .samples
            .iter()
            .map(|s| displacement_errors(&w.future, &s.refined))
            .collect::<Result<_>>()?;
        let per_ped: Vec<Vec<Vec<f64>>> = (0..w.num_peds())
            .map(|i| per_sample.iter().map(|s| s[i].clone()).collect())
            .collect();
        errors.push(per_ped);
    }
    let delta = windows[0].delta();
    Ok(ks
        .iter()
        .map(|&k| {
            let mut scenes: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
            let (mut ade, mut fde, mut n) = (0.0, 0.0, 0usize);
            let mut per_frame = vec![0.0; delta];
            for (w, peds) in windows.iter().zip(&errors) {
                for samples in peds {
                    let e = &samples[best_of(samples, k)];
                    let (a, f) = (ade_of(e), e[e.len() - 1]);
                    ade += a;
                    fde += f;
                    n += 1;
                    for (acc, v) in per_frame.iter_mut().zip(e) {
                        *acc += v;
                    }
                    let s = scenes.entry(&w.scene_id).or_default();
                    s.0 += a;
                    s.1 += f;
                    s.2 += 1;
                }
            }
            EvalReport {
                k,
                ade: ade / n as f64,
                fde: fde / n as f64,
                num_peds: n,
                per_scene: scenes
                    .into_iter()
                    .map(|(scene, (a, f, c))| SceneScore {
                        scene: scene.to_string(),
                        ade: a / c as f64,
                        fde: f / c as f64,
                        num_peds: c,
                    })
                    .collect(),
                per_frame: per_frame.into_iter().map(|v| v / n as f64).collect(),
            }
        })
        .collect())
}

/// Best-of-`k` evaluation for every `k` in `ks`, from one shared set of
/// `max(ks)` samples per window.
pub fn evaluate(model: &Model, windows: &[SceneWindow], ks: &[usize], seed: u64) -> Result<Vec<EvalReport>> {
    let kmax = ks.iter().copied().max().ok_or_else(|| Error::Config("no k given".into()))?;
    if kmax == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if windows.is_empty() {
        return Err(Error::EmptyDataset("no evaluation windows".into()));
    }
    let predictions = predict_all(model, windows, kmax, seed)?;
    score(windows, &predictions, ks)
}
