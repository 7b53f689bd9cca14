#![allow(dead_code)]

use diffnum::gradcheck::{central_differences, flat_grads, max_relative_error, relative_error, DEFAULT_FLOOR};
use diffnum::{Graph, ParamId, ParamStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use seqcvae::arch::Architecture;
use seqcvae::heads::{HeadKind, Mode};
use seqcvae::losses::{average_point_loss, kld_loss, regression_loss};
use seqcvae::model::{Batch, Model, ModelConfig};
use seqcvae::tracks::Tracks;
use seqcvae::window::SceneWindow;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::new(&[rows, cols], (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

/// Random-walk pedestrians scattered over a `spread`-sized square.
pub fn random_window(rng: &mut ChaCha8Rng, n: usize, tau: usize, delta: usize, spread: f64) -> SceneWindow {
    let mut past = Vec::new();
    let mut future = Vec::new();
    for _ in 0..n {
        let mut p = [rng.random_range(0.0..spread), rng.random_range(0.0..spread)];
        let v = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        let mut track = Vec::new();
        for _ in 0..tau + delta {
            track.push(p);
            p = [
                p[0] + v[0] + 0.05 * rng.sample::<f64, _>(StandardNormal),
                p[1] + v[1] + 0.05 * rng.sample::<f64, _>(StandardNormal),
            ];
        }
        future.push(track.split_off(tau));
        past.push(track);
    }
    SceneWindow::from_absolute(
        "random",
        0,
        (1..=n as i64).collect(),
        Tracks::from_rows(past).unwrap(),
        &Tracks::from_rows(future).unwrap(),
    )
    .unwrap()
}

/// Every width divided by 16 (never below 2).
pub fn tiny_config(head: HeadKind, refiner: bool, seed: u64) -> ModelConfig {
    ModelConfig {
        head,
        refiner,
        seed,
        arch: Architecture::paper().narrowed(16),
        ..ModelConfig::default()
    }
}

pub fn step_noise(rng: &mut ChaCha8Rng, model: &Model, rows: usize) -> Vec<Tensor> {
    (0..model.config.delta).map(|_| normal(rng, rows, model.latent_dim())).collect()
}

/// Slow walkers close together: small inputs, every pair within the mask
/// radius of some neighbour.
pub fn small_window(rng: &mut ChaCha8Rng, n: usize, tau: usize, delta: usize) -> SceneWindow {
    let mut past = Vec::new();
    let mut future = Vec::new();
    for _ in 0..n {
        let mut p = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let v = [rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)];
        let mut track = Vec::new();
        for _ in 0..tau + delta {
            track.push(p);
            p = [
                p[0] + v[0] + 0.01 * rng.sample::<f64, _>(StandardNormal),
                p[1] + v[1] + 0.01 * rng.sample::<f64, _>(StandardNormal),
            ];
        }
        future.push(track.split_off(tau));
        past.push(track);
    }
    SceneWindow::from_absolute(
        "small",
        0,
        (1..=n as i64).collect(),
        Tracks::from_rows(past).unwrap(),
        &Tracks::from_rows(future).unwrap(),
    )
    .unwrap()
}

pub struct GradientCheck {
    /// Maximum relative error of `[L_AP, L_KLD, L_R, L_T]`.
    pub errors: [f64; 4],
    /// Scalars whose `±h` stencil straddled a ReLU kink and was re-stepped.
    pub kinks: usize,
}

/// Whether the one-sided slopes at `x ± h` disagree by far more than
/// curvature allows: a ReLU switches inside the stencil.
fn straddles_kink(minus: f64, mid: f64, plus: f64, h: f64) -> bool {
    let (left, right) = ((mid - minus) / h, (plus - mid) / h);
    (right - left).abs() > 1e-2 * left.abs().max(right.abs()).max(DEFAULT_FLOOR)
}

/// Analytic gradients of `[L_AP, L_KLD, L_R, L_T]` over every parameter
/// against central differences with step `h`.
///
/// The regression loss sees the raw prediction as a constant, so the
/// numeric objective recomputes it with the raw prediction frozen at the
/// unperturbed parameters. Scalars whose error exceeds `tol` are tested for
/// a kink inside the stencil, judged from the objective values alone; those
/// that straddle one are re-differenced with the step shrunk tenfold until
/// they do not.
pub fn gradient_check(model: &mut Model, batch: &Batch, noise: &[Tensor], h: f64, tol: f64) -> GradientCheck {
    let ids: Vec<ParamId> = model.param_ids();
    let mut analytic = Vec::new();
    let mut raw_fixed = None;
    for which in 0..4 {
        model.store.zero_grads();
        let mut g = Graph::new();
        let fwd = model.forward(&mut g, batch, true, noise).unwrap();
        let l = model.losses(&mut g, &fwd).unwrap();
        raw_fixed = Some(g.value(fwd.raw.points).clone());
        let target = [l.l_ap, l.l_kld, l.l_r, l.total][which];
        g.backward(target, &mut model.store).unwrap();
        analytic.push(flat_grads(&model.store, &ids));
    }
    model.store.zero_grads();
    let raw_fixed = raw_fixed.unwrap();
    let n = batch.num_rows();
    let objective = |s: &ParamStore| {
        let mut g = Graph::new();
        let past = g.constant(batch.past.clone());
        let gt = g.constant(batch.future.clone());
        let eps: Vec<_> = noise.iter().map(|t| g.constant(t.clone())).collect();
        let mode = Mode::Train {
            gt_future: gt,
            teacher_forcing: model.config.teacher_forcing,
        };
        let raw = model.head.rollout(&mut g, s, past, mode, &eps).unwrap();
        let l_ap = average_point_loss(&mut g, gt, raw.points, n).unwrap();
        let l_ap = g.value(l_ap).item();
        let l_kld = kld_loss(&mut g, &raw.posteriors, n).unwrap();
        let l_kld = g.value(l_kld).item();
        let l_r = match &model.refiner {
            Some(r) => {
                let frozen = g.constant(raw_fixed.clone());
                let out = r.refine(&mut g, s, past, frozen, &batch.groups).unwrap();
                let l = regression_loss(&mut g, gt, out.raw, out.offsets, n).unwrap();
                g.value(l).item()
            }
            None => 0.0,
        };
        vec![l_ap, l_kld, l_r, l_ap + l_kld + l_r]
    };
    let mut numeric = central_differences(&model.store, &ids, h, &objective);

    let mut kinks = 0;
    let mut flat = 0;
    let mut work = model.store.clone();
    let base = objective(&work);
    for &id in &ids {
        for k in 0..work.value(id).len() {
            let i = flat;
            flat += 1;
            if (0..4).all(|j| relative_error(analytic[j][i], numeric[j][i], DEFAULT_FLOOR) <= tol) {
                continue;
            }
            let orig = work.value(id).data()[k];
            let mut step = h;
            let mut kinked = false;
            for _ in 0..4 {
                work.value_mut(id).data_mut()[k] = orig + step;
                let plus = objective(&work);
                work.value_mut(id).data_mut()[k] = orig - step;
                let minus = objective(&work);
                work.value_mut(id).data_mut()[k] = orig;
                if !(0..4).any(|j| straddles_kink(minus[j], base[j], plus[j], step)) {
                    if kinked {
                        for j in 0..4 {
                            numeric[j][i] = (plus[j] - minus[j]) / (2.0 * step);
                        }
                    }
                    break;
                }
                kinked = true;
                step /= 10.0;
            }
            kinks += kinked as usize;
        }
    }
    let mut errors = [0.0; 4];
    for j in 0..4 {
        errors[j] = max_relative_error(&analytic[j], &numeric[j], DEFAULT_FLOOR).0;
    }
    GradientCheck { errors, kinks }
}

/// Inference rollout of the model's head: per-step points and per-step inputs.
pub fn infer_steps(model: &Model, past: &Tensor, noise: &[Tensor]) -> (Vec<Tensor>, Vec<Tensor>) {
    let mut g = Graph::new();
    let p = g.constant(past.clone());
    let eps: Vec<_> = noise.iter().map(|t| g.constant(t.clone())).collect();
    let raw = model.head.rollout(&mut g, &model.store, p, Mode::Infer, &eps).unwrap();
    (
        raw.steps.iter().map(|&v| g.value(v).clone()).collect(),
        raw.inputs.iter().map(|&v| g.value(v).clone()).collect(),
    )
}

/// Sliding-window input of 0-based step `k` for one pedestrian, rebuilt
/// from its observed points and the points predicted before step `k`.
pub fn slide_input_oracle(observed: &[[f64; 2]], predicted: &[[f64; 2]], alpha: usize, k: usize) -> Vec<f64> {
    let tau = observed.len();
    let mut pts: Vec<[f64; 2]> = Vec::new();
    // Predicted frame index tau+j is stored at predicted[j]; the window
    // covers frames tau+k-alpha .. tau+k-1.
    for frame in (tau + k - alpha)..(tau + k) {
        if frame < tau {
            pts.push(observed[frame]);
        } else {
            pts.push(predicted[frame - tau]);
        }
    }
    pts.into_iter().flatten().collect()
}

/// Rows of `t` in the given order.
pub fn permute_rows(t: &Tensor, order: &[usize]) -> Tensor {
    Tensor::from_rows(&order.iter().map(|&i| t.row(i).to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn bits(t: &Tensor) -> Vec<u64> {
    t.data().iter().map(|v| v.to_bits()).collect()
}

/// Refined inference prediction `[rows, 2·delta]` for a batch of windows.
pub fn refined(model: &Model, windows: &[&SceneWindow], noise: &[Tensor]) -> Tensor {
    let batch = Batch::new(windows, model.config.mask_radius).unwrap();
    let mut g = Graph::new();
    let fwd = model.forward(&mut g, &batch, false, noise).unwrap();
    g.value(fwd.prediction()).clone()
}

/// Both windows' pedestrians in one window (absolute coordinates kept).
pub fn merge_windows(a: &SceneWindow, b: &SceneWindow) -> SceneWindow {
    let mut peds = a.peds.clone();
    peds.extend(b.peds.iter().map(|p| p + 1000));
    SceneWindow::from_absolute(
        a.scene_id.clone(),
        a.start_frame,
        peds,
        Tracks::stack(&[&a.absolute_past, &b.absolute_past]).unwrap(),
        &Tracks::stack(&[&a.absolute_future(), &b.absolute_future()]).unwrap(),
    )
    .unwrap()
}

/// The window translated by `(dx, dy)` in scene coordinates.
pub fn translated(w: &SceneWindow, dx: f64, dy: f64) -> SceneWindow {
    let shift = |t: &Tracks| {
        let mut out = t.clone();
        for i in 0..t.num_tracks() {
            for s in 0..t.track_len() {
                let p = t.get(i, s);
                out.set(i, s, [p[0] + dx, p[1] + dy]);
            }
        }
        out
    };
    SceneWindow::from_absolute(
        w.scene_id.clone(),
        w.start_frame,
        w.peds.clone(),
        shift(&w.absolute_past),
        &shift(&w.absolute_future()),
    )
    .unwrap()
}

/// Whether the model's refined prediction permutes exactly with the
/// pedestrians (noise rows permuted alongside).
pub fn equivariant(model: &Model, window: &SceneWindow, order: &[usize], noise: &[Tensor]) -> bool {
    let base = refined(model, &[window], noise);
    let moved_noise: Vec<Tensor> = noise.iter().map(|t| permute_rows(t, order)).collect();
    let moved = refined(model, &[&window.permuted(order)], &moved_noise);
    bits(&moved) == bits(&permute_rows(&base, order))
}

/// Whether a lone pedestrian far from a crowd gets the same refined
/// prediction whatever the crowd does. Row 0 is the loner.
pub fn isolation_holds(model: &Model, rng: &mut ChaCha8Rng, crowd: usize) -> bool {
    let (tau, delta) = (model.config.tau, model.config.delta);
    let loner = translated(&random_window(rng, 1, tau, delta, 1.0), 100.0, 100.0);
    let a = merge_windows(&loner, &random_window(rng, crowd, tau, delta, 3.0));
    let b = merge_windows(&loner, &random_window(rng, crowd, tau, delta, 3.0));
    let mut noise = step_noise(rng, model, crowd + 1);
    let pa = refined(model, &[&a], &noise);
    // Different noise for the crowd only.
    for t in noise.iter_mut() {
        let c = t.cols();
        for v in &mut t.data_mut()[c..] {
            *v = -*v + 0.5;
        }
    }
    let pb = refined(model, &[&b], &noise);
    pa.row(0) == pb.row(0) && pa.row(1) != pb.row(1)
}

pub type Track = Vec<[f64; 2]>;

pub fn random_tracks(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<Track> {
    (0..n)
        .map(|_| (0..len).map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]).collect())
        .collect()
}

pub fn as_tracks(t: &[Track]) -> Tracks {
    Tracks::from_rows(t.to_vec()).unwrap()
}

pub fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])).sqrt()
}

pub fn ade_fde_oracle(gt: &[Track], pred: &[Track]) -> (f64, f64) {
    let n = gt.len() as f64;
    let mut ade = 0.0;
    let mut fde = 0.0;
    for i in 0..gt.len() {
        let d = gt[i].len();
        let mut s = 0.0;
        for t in 0..d {
            s += euclid(gt[i][t], pred[i][t]);
        }
        ade += s / d as f64;
        fde += euclid(gt[i][d - 1], pred[i][d - 1]);
    }
    (ade / n, fde / n)
}

pub fn l_ap_oracle(gt: &[Track], pred: &[Track]) -> f64 {
    let mut s = 0.0;
    for i in 0..gt.len() {
        for t in 0..gt[i].len() {
            let e = euclid(gt[i][t], pred[i][t]);
            s += e * e;
        }
    }
    s / gt.len() as f64
}

pub fn l_r_oracle(gt: &[Track], raw: &[Track], offsets: &[Track]) -> f64 {
    let mut s = 0.0;
    for i in 0..gt.len() {
        for t in 0..gt[i].len() {
            let refined = [raw[i][t][0] + offsets[i][t][0], raw[i][t][1] + offsets[i][t][1]];
            s += euclid(gt[i][t], refined);
        }
    }
    s / gt.len() as f64
}

/// `mu[step][ped][dim]`, likewise `log_var`.
pub fn l_kld_oracle(mu: &[Vec<Vec<f64>>], log_var: &[Vec<Vec<f64>>]) -> f64 {
    let n = mu[0].len();
    let mut s = 0.0;
    for k in 0..mu.len() {
        for i in 0..n {
            for d in 0..mu[k][i].len() {
                let (m, v) = (mu[k][i][d], log_var[k][i][d]);
                s += 0.5 * (m * m + v.exp() - 1.0 - v);
            }
        }
    }
    s / n as f64
}

/// Best-of-`k` ADE and FDE: each pedestrian keeps the first of its lowest
/// ADE samples among `samples[..k]`.
pub fn best_of_k_oracle(gt: &[Track], samples: &[Vec<Track>], k: usize) -> (f64, f64) {
    let mut ade = 0.0;
    let mut fde = 0.0;
    for i in 0..gt.len() {
        let mut best: Option<(f64, f64)> = None;
        for s in &samples[..k] {
            let (a, f) = ade_fde_oracle(&gt[i..=i], &s[i..=i]);
            if best.is_none_or(|(b, _)| a < b) {
                best = Some((a, f));
            }
        }
        let (a, f) = best.unwrap();
        ade += a;
        fde += f;
    }
    (ade / gt.len() as f64, fde / gt.len() as f64)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn tensor_of(tracks: &[Track]) -> Tensor {
    as_tracks(tracks).to_tensor()
}

/// Largest relative disagreement between the library's metrics and losses
/// (plain and differentiable) and the oracles on one random instance.
pub fn metric_instance_error(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.random_range(1..6);
    let delta = rng.random_range(1..13);
    let latent = rng.random_range(1..5);
    let gt = random_tracks(rng, n, delta);
    let raw = random_tracks(rng, n, delta);
    let offsets = random_tracks(rng, n, delta);
    let mu: Vec<Vec<Vec<f64>>> = (0..delta)
        .map(|_| (0..n).map(|_| (0..latent).map(|_| rng.random_range(-2.0..2.0)).collect()).collect())
        .collect();
    let lv: Vec<Vec<Vec<f64>>> = (0..delta)
        .map(|_| (0..n).map(|_| (0..latent).map(|_| rng.random_range(-2.0..2.0)).collect()).collect())
        .collect();
    let (ade_o, fde_o) = ade_fde_oracle(&gt, &raw);
    let (ap_o, r_o, kld_o) = (l_ap_oracle(&gt, &raw), l_r_oracle(&gt, &raw, &offsets), l_kld_oracle(&mu, &lv));

    let (tg, tr, to) = (as_tracks(&gt), as_tracks(&raw), as_tracks(&offsets));
    let pairs: Vec<(Tensor, Tensor)> = (0..delta)
        .map(|k| (Tensor::from_rows(&mu[k]).unwrap(), Tensor::from_rows(&lv[k]).unwrap()))
        .collect();
    let mut errs = vec![
        rel(seqcvae::metrics::ade(&tg, &tr).unwrap(), ade_o),
        rel(seqcvae::metrics::fde(&tg, &tr).unwrap(), fde_o),
        rel(seqcvae::metrics::loss_ap(&tg, &tr).unwrap(), ap_o),
        rel(seqcvae::metrics::loss_r(&tg, &tr, &to).unwrap(), r_o),
        rel(seqcvae::metrics::loss_kld(&pairs, n).unwrap(), kld_o),
    ];

    let mut g = Graph::new();
    let (vg, vr, vo) = (g.constant(tensor_of(&gt)), g.constant(tensor_of(&raw)), g.constant(tensor_of(&offsets)));
    let posts: Vec<diffnum::LatentGaussian> = pairs
        .iter()
        .map(|(m, v)| {
            let (m, v) = (g.constant(m.clone()), g.constant(v.clone()));
            diffnum::LatentGaussian::new(&g, m, v).unwrap()
        })
        .collect();
    let ap = average_point_loss(&mut g, vg, vr, n).unwrap();
    let r = regression_loss(&mut g, vg, vr, vo, n).unwrap();
    let kld = kld_loss(&mut g, &posts, n).unwrap();
    errs.push(rel(g.value(ap).item(), ap_o));
    errs.push(rel(g.value(r).item(), r_o));
    errs.push(rel(g.value(kld).item(), kld_o));
    errs.into_iter().fold(0.0, f64::max)
}
