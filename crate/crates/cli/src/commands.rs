use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use seqcvae::arch::Architecture;
use seqcvae::checkpoint;
use seqcvae::efficiency::{efficiency_report, model_param_count};
use seqcvae::error::Error;
use seqcvae::eval::{best_of, evaluate, predict, EvalReport};
use seqcvae::heads::HeadKind;
use seqcvae::kv::KeyValues;
use seqcvae::metrics::displacement_errors;
use seqcvae::model::{switch_text, Model, ModelConfig};
use seqcvae::scene::{load_scenes, SceneFormat, TrajectoryScene};
use seqcvae::synth::{synth_scenes, SynthConfig};
use seqcvae::train::{train as fit, LossReport, TrainConfig};
use seqcvae::window::{extract_all, SceneWindow};

use crate::layered::{create_dir, flag, layer, require_path, take_path, usage, write_file};
use crate::svg::{render_window, PedTrajectories};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// key = value file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the scene files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    walkers: Option<usize>,
    #[arg(long)]
    turners: Option<usize>,
    #[arg(long)]
    crossing_pairs: Option<usize>,
    #[arg(long)]
    avoidance_pairs: Option<usize>,
    /// Standard deviation of Gaussian jitter added to every point.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    speed_min: Option<f64>,
    #[arg(long)]
    speed_max: Option<f64>,
    /// Crossing pairs pass closer than this.
    #[arg(long)]
    mask_radius: Option<f64>,
    /// Samples per generated track.
    #[arg(long)]
    track_len: Option<usize>,
    /// Frame ids between consecutive samples.
    #[arg(long)]
    frame_step: Option<i64>,
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let mut kv = layer(
        a.config.as_deref(),
        &[
            flag("out", &a.out.as_ref().map(|p| p.display().to_string())),
            flag("seed", &a.seed),
            flag("walkers", &a.walkers),
            flag("turners", &a.turners),
            flag("crossing-pairs", &a.crossing_pairs),
            flag("avoidance-pairs", &a.avoidance_pairs),
            flag("noise-sigma", &a.noise_sigma),
            flag("speed-min", &a.speed_min),
            flag("speed-max", &a.speed_max),
            flag("mask-radius", &a.mask_radius),
            flag("track-len", &a.track_len),
            flag("frame-step", &a.frame_step),
        ],
    )?;
    let out = require_path(&mut kv, "out")?;
    let seed: u64 = kv.take("seed")?.unwrap_or(0);
    let cfg = SynthConfig::from_kv(kv)?;
    let scenes = synth_scenes(&cfg, seed)?;
    create_dir(&out)?;
    for scene in &scenes {
        scene.save(&out.join(format!("{}.txt", scene.scene_id)), SceneFormat::TsvFramePedXy)?;
    }
    let mut resolved = cfg.to_kv();
    resolved.insert("seed", seed);
    resolved.insert("out", out.display());
    write_file(&out.join("synth.cfg"), &resolved.to_text())?;
    println!("wrote {} scenes to {}", scenes.len(), out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scene file or directory of scene files.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Run directory: receives checkpoint/, losses.csv and train.cfg.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base settings: `paper` (full widths, lr 3e-4, 600 epochs, batch 512)
    /// or `desk` (narrow widths, CPU-scale optimiser settings).
    #[arg(long)]
    preset: Option<String>,
    /// baseline, cascaded or slide.
    #[arg(long)]
    head: Option<String>,
    /// on or off.
    #[arg(long)]
    refiner: Option<String>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    delta: Option<usize>,
    /// Slide window length (1 ≤ alpha ≤ tau).
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Windows per batch.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mask_radius: Option<f64>,
    /// Samples between window starts.
    #[arg(long)]
    stride: Option<usize>,
    /// on or off.
    #[arg(long)]
    teacher_forcing: Option<String>,
    /// Comma-separated scene ids left out of training.
    #[arg(long)]
    holdout: Option<String>,
    /// Resolve and write train.cfg, print it, and stop before training.
    #[arg(long)]
    dry_run: bool,
}

fn preset_bases(name: &str) -> Result<(ModelConfig, TrainConfig)> {
    match name {
        "paper" => Ok((ModelConfig::default(), TrainConfig::default())),
        "desk" => Ok((
            ModelConfig {
                arch: Architecture::desk(),
                ..ModelConfig::default()
            },
            TrainConfig::desk(),
        )),
        other => Err(usage(format!("unknown preset `{other}` (expected paper or desk)"))),
    }
}

fn scene_list(raw: Option<String>) -> BTreeSet<String> {
    raw.map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    })
    .unwrap_or_default()
}

fn positive(kv: &mut KeyValues, key: &str, default: usize) -> Result<usize> {
    let v = kv.take(key)?.unwrap_or(default);
    if v == 0 {
        return Err(usage(format!("`{key}` must be positive")));
    }
    Ok(v)
}

fn windows_from(
    scenes: &[TrajectoryScene],
    tau: usize,
    delta: usize,
    stride: usize,
) -> Result<Vec<SceneWindow>> {
    let windows = extract_all(scenes, tau, delta, stride)?;
    if windows.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no pedestrian spans {} consecutive samples",
            tau + delta
        ))
        .into());
    }
    Ok(windows)
}

fn loss_csv(history: &[LossReport]) -> String {
    let mut s = String::from("epoch,l_ap,l_kld,l_r,total\n");
    for (e, r) in history.iter().enumerate() {
        writeln!(s, "{},{:?},{:?},{:?},{:?}", e + 1, r.l_ap, r.l_kld, r.l_r, r.total).unwrap();
    }
    s
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut kv = layer(
        a.config.as_deref(),
        &[
            flag("data", &a.data.as_ref().map(|p| p.display().to_string())),
            flag("out", &a.out.as_ref().map(|p| p.display().to_string())),
            flag("preset", &a.preset),
            flag("head", &a.head),
            flag("refiner", &a.refiner),
            flag("tau", &a.tau),
            flag("delta", &a.delta),
            flag("alpha", &a.alpha),
            flag("lr", &a.lr),
            flag("epochs", &a.epochs),
            flag("batch", &a.batch),
            flag("seed", &a.seed),
            flag("mask-radius", &a.mask_radius),
            flag("stride", &a.stride),
            flag("teacher-forcing", &a.teacher_forcing),
            flag("holdout", &a.holdout),
        ],
    )?;
    let preset: String = kv.take("preset")?.unwrap_or_else(|| "paper".into());
    let (model_base, train_base) = preset_bases(&preset)?;
    let data = require_path(&mut kv, "data")?;
    let out = require_path(&mut kv, "out")?;
    let stride = positive(&mut kv, "stride", 1)?;
    let holdout = scene_list(kv.take("holdout")?);
    let model_cfg = ModelConfig::read_kv(&mut kv, model_base)?;
    let train_cfg = TrainConfig::read_kv(&mut kv, train_base)?;
    kv.finish()?;

    let scenes: Vec<TrajectoryScene> = load_scenes(&data)?
        .into_iter()
        .filter(|s| !holdout.contains(&s.scene_id))
        .collect();
    let windows = windows_from(&scenes, model_cfg.tau, model_cfg.delta, stride)?;

    let mut resolved = KeyValues::default();
    resolved.insert("preset", &preset);
    resolved.insert("data", data.display());
    resolved.insert("out", out.display());
    resolved.insert("stride", stride);
    resolved.insert("holdout", holdout.iter().cloned().collect::<Vec<_>>().join(","));
    model_cfg.write_kv(&mut resolved);
    train_cfg.write_kv(&mut resolved);
    create_dir(&out)?;
    write_file(&out.join("train.cfg"), &resolved.to_text())?;
    if a.dry_run {
        print!("{}", resolved.to_text());
        return Ok(());
    }

    let mut model = Model::new(model_cfg)?;
    eprintln!(
        "training {} head (refiner {}) on {} windows, {} parameters",
        model.config.head,
        switch_text(model.config.refiner),
        windows.len(),
        model.count_parameters()
    );
    let epochs = train_cfg.epochs;
    let history = fit(&mut model, &windows, &train_cfg, |e, r| {
        if (e + 1) % 10 == 0 || e + 1 == epochs {
            eprintln!("epoch {:>4}  total {:.6}", e + 1, r.total);
        }
    })?;
    checkpoint::save(&model, &out.join("checkpoint"))?;
    write_file(&out.join("losses.csv"), &loss_csv(&history))?;
    println!("checkpoint written to {}", out.join("checkpoint").display());
    Ok(())
}

/// Accepts either a checkpoint directory or a run directory containing one.
fn checkpoint_dir(path: &Path) -> PathBuf {
    if path.join(checkpoint::MANIFEST).is_file() {
        path.to_path_buf()
    } else {
        path.join("checkpoint")
    }
}

fn load_model(path: &Path) -> Result<Model> {
    let dir = checkpoint_dir(path);
    checkpoint::load(&dir).with_context(|| format!("loading checkpoint {}", dir.display()))
}

fn parse_ks(raw: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = raw
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("`k` = `{raw}` is not a list of integers")))?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(usage("`k` values must be positive"));
    }
    Ok(ks)
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint directory (or the run directory holding it).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Receives eval.csv, per_frame.csv and eval.cfg.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated sample counts, e.g. `5,20`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stride: Option<usize>,
    /// Only evaluate these comma-separated scene ids.
    #[arg(long)]
    scenes: Option<String>,
    /// Expected observation horizon; must match the checkpoint.
    #[arg(long)]
    tau: Option<usize>,
    /// Expected prediction horizon; must match the checkpoint.
    #[arg(long)]
    delta: Option<usize>,
    /// Expected slide window; must match the checkpoint.
    #[arg(long)]
    alpha: Option<usize>,
}

struct EvalSetup {
    model: Model,
    windows: Vec<SceneWindow>,
    resolved: KeyValues,
    out: PathBuf,
    seed: u64,
    ks: Vec<usize>,
}

fn eval_setup(
    mut kv: KeyValues,
    default_k: &str,
    expect: [Option<usize>; 3],
) -> Result<EvalSetup> {
    let ckpt = require_path(&mut kv, "checkpoint")?;
    let data = require_path(&mut kv, "data")?;
    let out = require_path(&mut kv, "out")?;
    let k_raw: String = kv.take("k")?.unwrap_or_else(|| default_k.into());
    let ks = parse_ks(&k_raw)?;
    let seed: u64 = kv.take("seed")?.unwrap_or(0);
    let stride = positive(&mut kv, "stride", 1)?;
    let only = scene_list(kv.take("scenes")?);
    let tau: Option<usize> = kv.take("tau")?.or(expect[0]);
    let delta: Option<usize> = kv.take("delta")?.or(expect[1]);
    let alpha: Option<usize> = kv.take("alpha")?.or(expect[2]);
    kv.finish()?;

    let model = load_model(&ckpt)?;
    let c = &model.config;
    for (name, want, have) in [("tau", tau, c.tau), ("delta", delta, c.delta), ("alpha", alpha, c.alpha)] {
        if let Some(w) = want {
            if w != have {
                return Err(Error::Mismatch(format!(
                    "{name} = {w} requested but the checkpoint was trained with {name} = {have}"
                ))
                .into());
            }
        }
    }
    let scenes: Vec<TrajectoryScene> = load_scenes(&data)?
        .into_iter()
        .filter(|s| only.is_empty() || only.contains(&s.scene_id))
        .collect();
    let windows = windows_from(&scenes, c.tau, c.delta, stride)?;

    let mut resolved = KeyValues::default();
    resolved.insert("checkpoint", ckpt.display());
    resolved.insert("data", data.display());
    resolved.insert("out", out.display());
    resolved.insert("k", ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","));
    resolved.insert("seed", seed);
    resolved.insert("stride", stride);
    resolved.insert("scenes", only.iter().cloned().collect::<Vec<_>>().join(","));
    resolved.insert("tau", c.tau);
    resolved.insert("delta", c.delta);
    resolved.insert("alpha", c.alpha);
    Ok(EvalSetup {
        model,
        windows,
        resolved,
        out,
        seed,
        ks,
    })
}

fn eval_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("k,ade,fde,scene\n");
    for r in reports {
        for sc in &r.per_scene {
            writeln!(s, "{},{:?},{:?},{}", r.k, sc.ade, sc.fde, sc.scene).unwrap();
        }
        writeln!(s, "{},{:?},{:?},all", r.k, r.ade, r.fde).unwrap();
    }
    s
}

fn per_frame_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("k,frame,ade\n");
    for r in reports {
        for (f, v) in r.per_frame.iter().enumerate() {
            writeln!(s, "{},{},{:?}", r.k, f + 1, v).unwrap();
        }
    }
    s
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let kv = layer(
        a.config.as_deref(),
        &[
            flag("checkpoint", &a.checkpoint.as_ref().map(|p| p.display().to_string())),
            flag("data", &a.data.as_ref().map(|p| p.display().to_string())),
            flag("out", &a.out.as_ref().map(|p| p.display().to_string())),
            flag("k", &a.k),
            flag("seed", &a.seed),
            flag("stride", &a.stride),
            flag("scenes", &a.scenes),
        ],
    )?;
    let s = eval_setup(kv, "20", [a.tau, a.delta, a.alpha])?;
    let reports = evaluate(&s.model, &s.windows, &s.ks, s.seed)?;
    create_dir(&s.out)?;
    write_file(&s.out.join("eval.csv"), &eval_csv(&reports))?;
    write_file(&s.out.join("per_frame.csv"), &per_frame_csv(&reports))?;
    write_file(&s.out.join("eval.cfg"), &s.resolved.to_text())?;
    for r in &reports {
        println!(
            "k={:<3} ade {:.4}  fde {:.4}  ({} pedestrians, {} head)",
            r.k, r.ade, r.fde, r.num_peds, s.model.config.head
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Receives window_NNNN.svg / .csv pairs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum number of windows to draw.
    #[arg(long)]
    windows: Option<usize>,
    /// Samples drawn per window; each pedestrian shows its best one.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    scenes: Option<String>,
}

pub fn plot(a: PlotArgs) -> Result<()> {
    let mut kv = layer(
        a.config.as_deref(),
        &[
            flag("checkpoint", &a.checkpoint.as_ref().map(|p| p.display().to_string())),
            flag("data", &a.data.as_ref().map(|p| p.display().to_string())),
            flag("out", &a.out.as_ref().map(|p| p.display().to_string())),
            flag("windows", &a.windows),
            flag("k", &a.k),
            flag("seed", &a.seed),
            flag("stride", &a.stride),
            flag("scenes", &a.scenes),
        ],
    )?;
    let count = positive(&mut kv, "windows", 4)?;
    let k = kv.get("k").map(str::to_string).unwrap_or_else(|| "20".into());
    if k.contains(',') {
        return Err(usage("plot takes a single `k`"));
    }
    let mut s = eval_setup(kv, &k, [None, None, None])?;
    s.resolved.insert("windows", count);
    let k = s.ks[0];
    create_dir(&s.out)?;
    for (i, w) in s.windows.iter().take(count).enumerate() {
        let set = predict(&s.model, w, i, k, s.seed)?;
        let errors: Vec<Vec<Vec<f64>>> = set
            .samples
            .iter()
            .map(|p| displacement_errors(&w.future, &p.refined))
            .collect::<seqcvae::error::Result<_>>()?;
        let future = w.absolute_future();
        let peds: Vec<PedTrajectories> = (0..w.num_peds())
            .map(|p| {
                let per_sample: Vec<Vec<f64>> = errors.iter().map(|e| e[p].clone()).collect();
                let best = &set.samples[best_of(&per_sample, k)];
                let shift = |pts: &[[f64; 2]]| -> Vec<[f64; 2]> {
                    pts.iter()
                        .map(|q| [q[0] + w.anchor[p][0], q[1] + w.anchor[p][1]])
                        .collect()
                };
                PedTrajectories {
                    ped: w.peds[p],
                    past: w.absolute_past.track(p).to_vec(),
                    truth: future.track(p).to_vec(),
                    raw: shift(best.raw.track(p)),
                    refined: shift(best.refined.track(p)),
                }
            })
            .collect();
        let title = format!("{} frame {}", w.scene_id, w.start_frame);
        let (svg, csv) = render_window(&title, &peds);
        write_file(&s.out.join(format!("window_{i:04}.svg")), &svg)?;
        write_file(&s.out.join(format!("window_{i:04}.csv")), &csv)?;
    }
    write_file(&s.out.join("plot.cfg"), &s.resolved.to_text())?;
    println!(
        "drew {} windows into {}",
        s.windows.len().min(count),
        s.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint directory; repeat for several.
    #[arg(long)]
    checkpoint: Vec<PathBuf>,
    /// Windows to time on; synthetic walkers when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Receives report.md and report.csv; stdout only when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Windows per timed batch.
    #[arg(long)]
    batch: Option<usize>,
    /// Timed batches (at least 20).
    #[arg(long)]
    timed: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also list closed-form counts at the full published widths.
    #[arg(long)]
    paper_widths: bool,
}

struct ReportRow {
    source: String,
    widths: &'static str,
    head: HeadKind,
    refiner: bool,
    params: usize,
    seconds: Option<f64>,
}

pub fn report(a: ReportArgs) -> Result<()> {
    let ckpts = (!a.checkpoint.is_empty()).then(|| {
        a.checkpoint
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(",")
    });
    let mut kv = layer(
        a.config.as_deref(),
        &[
            flag("checkpoint", &ckpts),
            flag("data", &a.data.as_ref().map(|p| p.display().to_string())),
            flag("out", &a.out.as_ref().map(|p| p.display().to_string())),
            flag("batch", &a.batch),
            flag("timed", &a.timed),
            flag("warmup", &a.warmup),
            flag("seed", &a.seed),
            flag("paper-widths", &a.paper_widths.then_some("on")),
        ],
    )?;
    let ckpts: Vec<PathBuf> = kv
        .take::<String>("checkpoint")?
        .map(|s| {
            s.split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(PathBuf::from)
                .collect()
        })
        .unwrap_or_default();
    if ckpts.is_empty() {
        return Err(usage("report needs at least one --checkpoint"));
    }
    let data = take_path(&mut kv, "data")?;
    let out = take_path(&mut kv, "out")?;
    let batch = positive(&mut kv, "batch", 16)?;
    let timed = positive(&mut kv, "timed", 20)?;
    if timed < 20 {
        return Err(usage("`timed` must be at least 20"));
    }
    let warmup: usize = kv.take("warmup")?.unwrap_or(3);
    let seed: u64 = kv.take("seed")?.unwrap_or(0);
    let paper = match kv.take::<String>("paper-widths")? {
        Some(v) => seqcvae::model::parse_switch(&v)?,
        None => false,
    };
    kv.finish()?;

    let mut rows = Vec::new();
    let mut paper_cfgs: Vec<ModelConfig> = Vec::new();
    for path in &ckpts {
        let model = load_model(path)?;
        let c = model.config.clone();
        let scenes = match &data {
            Some(d) => load_scenes(d)?,
            None => synth_scenes(
                &SynthConfig {
                    walkers: 16,
                    track_len: c.tau + c.delta,
                    ..SynthConfig::default()
                },
                seed,
            )?,
        };
        let windows = windows_from(&scenes, c.tau, c.delta, 1)?;
        let eff = efficiency_report(&model, &windows, batch, warmup, timed)?;
        rows.push(ReportRow {
            source: path.display().to_string(),
            widths: "checkpoint",
            head: eff.head,
            refiner: eff.refiner,
            params: eff.params,
            seconds: Some(eff.seconds_per_batch),
        });
        let pc = ModelConfig {
            arch: Architecture::paper(),
            ..c
        };
        if !paper_cfgs.contains(&pc) {
            paper_cfgs.push(pc);
        }
    }
    if paper {
        let mut extra = Vec::new();
        for c in &paper_cfgs {
            let cascaded = ModelConfig {
                head: HeadKind::Cascaded,
                ..c.clone()
            };
            if !paper_cfgs.contains(&cascaded) && !extra.contains(&cascaded) {
                extra.push(cascaded);
            }
        }
        for c in paper_cfgs.iter().chain(&extra) {
            rows.push(ReportRow {
                source: "closed form".into(),
                widths: "paper",
                head: c.head,
                refiner: c.refiner,
                params: model_param_count(c),
                seconds: None,
            });
        }
    }

    let reduction = |r: &ReportRow| -> Option<f64> {
        rows.iter()
            .find(|o| o.widths == r.widths && o.head == HeadKind::Cascaded && o.refiner == r.refiner)
            .map(|o| 100.0 * (1.0 - r.params as f64 / o.params as f64))
    };
    let mut md = String::from(
        "| source | widths | head | refiner | parameters | s/batch | reduction vs cascaded |\n\
         |---|---|---|---|---:|---:|---:|\n",
    );
    let mut csv = String::from("source,widths,head,refiner,params,seconds_per_batch,reduction_pct\n");
    for r in &rows {
        let red = reduction(r);
        writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} | {} |",
            r.source,
            r.widths,
            r.head,
            switch_text(r.refiner),
            r.params,
            r.seconds.map_or("-".into(), |s| format!("{s:.6}")),
            red.map_or("-".into(), |v| format!("{v:.1}%")),
        )
        .unwrap();
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.source,
            r.widths,
            r.head,
            switch_text(r.refiner),
            r.params,
            r.seconds.map_or(String::new(), |s| format!("{s:?}")),
            red.map_or(String::new(), |v| format!("{v:?}")),
        )
        .unwrap();
    }
    print!("{md}");
    if let Some(out) = out {
        create_dir(&out)?;
        write_file(&out.join("report.md"), &md)?;
        write_file(&out.join("report.csv"), &csv)?;
    }
    Ok(())
}
