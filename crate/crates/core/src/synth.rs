//! Synthetic scenes for desk-scale experiments.
//!
//! Four archetypes, each written to its own scene: straight constant-velocity
//! walkers, walkers that begin a constant-rate turn part way along, pairs
//! whose paths cross at close range, and head-on pairs that swerve around
//! each other. Instances of one archetype occupy disjoint frame blocks, so
//! every window holds exactly one instance.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::rng::{rng_for, TAG_SYNTH};
use crate::scene::{Record, TrajectoryScene};
use crate::tracks::Point;

/// Seconds between samples (2.5 Hz).
pub const SAMPLE_PERIOD: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub walkers: usize,
    pub turners: usize,
    pub crossing_pairs: usize,
    pub avoidance_pairs: usize,
    /// Standard deviation of the per-coordinate observation noise.
    pub noise_sigma: f64,
    /// Walking speed range, units per second.
    pub speed_min: f64,
    pub speed_max: f64,
    pub mask_radius: f64,
    /// Samples per generated pedestrian.
    pub track_len: usize,
    pub frame_step: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            walkers: 0,
            turners: 0,
            crossing_pairs: 0,
            avoidance_pairs: 0,
            noise_sigma: 0.0,
            speed_min: 0.8,
            speed_max: 1.6,
            mask_radius: 2.0,
            track_len: 20,
            frame_step: 10,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let total = self.walkers + self.turners + self.crossing_pairs + self.avoidance_pairs;
        if total == 0 {
            return Err(Error::Config("synthetic config has zero archetypes".into()));
        }
        if !(self.speed_min > 0.0 && self.speed_max >= self.speed_min) {
            return Err(Error::Config(format!(
                "need 0 < speed-min <= speed-max, got {} and {}",
                self.speed_min, self.speed_max
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise-sigma must be >= 0".into()));
        }
        if !(self.mask_radius > 0.0) {
            return Err(Error::Config("mask-radius must be > 0".into()));
        }
        if self.track_len < 2 || self.frame_step < 1 {
            return Err(Error::Config("track-len must be >= 2 and frame-step >= 1".into()));
        }
        Ok(())
    }

    /// Reads the keys of [`SynthConfig::to_kv`] on top of the defaults.
    pub fn from_kv(mut kv: KeyValues) -> Result<Self> {
        let mut c = Self::default();
        macro_rules! take {
            ($key:literal, $field:ident) => {
                if let Some(v) = kv.take($key)? {
                    c.$field = v;
                }
            };
        }
        take!("walkers", walkers);
        take!("turners", turners);
        take!("crossing-pairs", crossing_pairs);
        take!("avoidance-pairs", avoidance_pairs);
        take!("noise-sigma", noise_sigma);
        take!("speed-min", speed_min);
        take!("speed-max", speed_max);
        take!("mask-radius", mask_radius);
        take!("track-len", track_len);
        take!("frame-step", frame_step);
        kv.finish()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("walkers", self.walkers);
        kv.insert("turners", self.turners);
        kv.insert("crossing-pairs", self.crossing_pairs);
        kv.insert("avoidance-pairs", self.avoidance_pairs);
        kv.insert("noise-sigma", self.noise_sigma);
        kv.insert("speed-min", self.speed_min);
        kv.insert("speed-max", self.speed_max);
        kv.insert("mask-radius", self.mask_radius);
        kv.insert("track-len", self.track_len);
        kv.insert("frame-step", self.frame_step);
        kv
    }
}

struct Gen<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            self.rng.random_range(lo..hi)
        } else {
            lo
        }
    }

    /// Displacement per sample.
    fn step_length(&mut self) -> f64 {
        self.uniform(self.cfg.speed_min, self.cfg.speed_max) * SAMPLE_PERIOD
    }

    fn heading(&mut self) -> f64 {
        self.uniform(-PI, PI)
    }

    fn origin(&mut self) -> Point {
        [self.uniform(-8.0, 8.0), self.uniform(-8.0, 8.0)]
    }

    fn sample_in(&mut self, lo: f64, hi: f64) -> usize {
        let n = self.cfg.track_len as f64;
        let (a, b) = ((lo * n).round() as usize, (hi * n).round() as usize);
        if b > a {
            self.rng.random_range(a..=b)
        } else {
            a
        }
    }

    fn noisy(&mut self, track: Vec<Point>) -> Vec<Point> {
        let s = self.cfg.noise_sigma;
        if s == 0.0 {
            return track;
        }
        track
            .into_iter()
            .map(|p| {
                let (dx, dy): (f64, f64) = (self.rng.sample(StandardNormal), self.rng.sample(StandardNormal));
                [p[0] + s * dx, p[1] + s * dy]
            })
            .collect()
    }

    fn straight(&mut self) -> Vec<Vec<Point>> {
        let (p0, theta, len) = (self.origin(), self.heading(), self.step_length());
        let v = [len * theta.cos(), len * theta.sin()];
        let track = (0..self.cfg.track_len)
            .map(|t| [p0[0] + t as f64 * v[0], p0[1] + t as f64 * v[1]])
            .collect();
        vec![track]
    }

    fn turner(&mut self) -> Vec<Vec<Point>> {
        let (mut p, mut theta, len) = (self.origin(), self.heading(), self.step_length());
        let onset = self.sample_in(0.25, 0.55);
        let rate = self.uniform(0.1, 0.3) * if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut track = Vec::with_capacity(self.cfg.track_len);
        for t in 0..self.cfg.track_len {
            track.push(p);
            if t >= onset {
                theta += rate;
            }
            p = [p[0] + len * theta.cos(), p[1] + len * theta.sin()];
        }
        vec![track]
    }

    fn crossing(&mut self) -> Vec<Vec<Point>> {
        let meet = self.sample_in(0.3, 0.6) as f64;
        let c = self.origin();
        let ta = self.heading();
        let tb = ta + self.uniform(PI / 3.0, 2.0 * PI / 3.0) * if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let (la, lb) = (self.step_length(), self.step_length());
        let miss_len = self.uniform(0.0, 0.5 * self.cfg.mask_radius);
        let miss_dir = self.heading();
        let miss = [miss_len * miss_dir.cos(), miss_len * miss_dir.sin()];
        let line = |origin: Point, theta: f64, l: f64, t: f64| {
            [origin[0] + (t - meet) * l * theta.cos(), origin[1] + (t - meet) * l * theta.sin()]
        };
        let cb = [c[0] + miss[0], c[1] + miss[1]];
        let n = self.cfg.track_len;
        vec![
            (0..n).map(|t| line(c, ta, la, t as f64)).collect(),
            (0..n).map(|t| line(cb, tb, lb, t as f64)).collect(),
        ]
    }

    fn avoidance(&mut self) -> Vec<Vec<Point>> {
        let meet = self.sample_in(0.4, 0.7) as f64;
        let c = self.origin();
        let theta = self.heading();
        let (la, lb) = (self.step_length(), self.step_length());
        let swerve = self.uniform(0.15, 0.25) * self.cfg.mask_radius;
        let (u, normal) = ([theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]);
        let width = 2.5;
        let bump = |t: f64| (-((t - meet) / width).powi(2)).exp();
        let walk = |dir: f64, l: f64, side: f64, t: f64| {
            let along = dir * (t - meet) * l;
            let lateral = side * swerve * bump(t);
            [
                c[0] + along * u[0] + lateral * normal[0],
                c[1] + along * u[1] + lateral * normal[1],
            ]
        };
        let n = self.cfg.track_len;
        vec![
            (0..n).map(|t| walk(1.0, la, 1.0, t as f64)).collect(),
            (0..n).map(|t| walk(-1.0, lb, -1.0, t as f64)).collect(),
        ]
    }
}

#[derive(Clone, Copy)]
enum Archetype {
    Walker,
    Turner,
    Crossing,
    Avoidance,
}

/// Generates one scene per archetype with a nonzero count, deterministically
/// from `seed`.
pub fn synth_scenes(cfg: &SynthConfig, seed: u64) -> Result<Vec<TrajectoryScene>> {
    cfg.validate()?;
    let kinds = [
        ("walkers", Archetype::Walker, cfg.walkers),
        ("turners", Archetype::Turner, cfg.turners),
        ("crossing", Archetype::Crossing, cfg.crossing_pairs),
        ("avoidance", Archetype::Avoidance, cfg.avoidance_pairs),
    ];
    let block = (cfg.track_len as i64 + 1) * cfg.frame_step;
    let mut scenes = Vec::new();
    for (tag, (name, kind, count)) in kinds.into_iter().enumerate() {
        if count == 0 {
            continue;
        }
        let mut gen = Gen {
            cfg,
            rng: rng_for(seed, &[TAG_SYNTH, tag as u64]),
        };
        let mut records = Vec::new();
        let mut next_ped = 1;
        for k in 0..count {
            let tracks = match kind {
                Archetype::Walker => gen.straight(),
                Archetype::Turner => gen.turner(),
                Archetype::Crossing => gen.crossing(),
                Archetype::Avoidance => gen.avoidance(),
            };
            for track in tracks {
                let track = gen.noisy(track);
                for (t, p) in track.into_iter().enumerate() {
                    records.push(Record {
                        frame: k as i64 * block + t as i64 * cfg.frame_step,
                        ped: next_ped,
                        x: p[0],
                        y: p[1],
                    });
                }
                next_ped += 1;
            }
        }
        scenes.push(TrajectoryScene::new(name, records, Some(cfg.frame_step))?);
    }
    Ok(scenes)
}
