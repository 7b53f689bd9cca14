//! Slicing scenes into fixed-horizon prediction windows.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::scene::TrajectoryScene;
use crate::tracks::{Point, Tracks};

/// Observation horizon in samples (3.2 s at 2.5 Hz).
pub const DEFAULT_TAU: usize = 8;
/// Prediction horizon in samples (4.8 s at 2.5 Hz).
pub const DEFAULT_DELTA: usize = 12;

/// One prediction instance: `N` pedestrians co-present over `tau + delta`
/// consecutive samples.
///
/// `past` and `future` are translated per pedestrian so that the last
/// observed point sits at the origin; `absolute_past` keeps scene
/// coordinates for distance computations.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneWindow {
    pub scene_id: String,
    pub start_frame: i64,
    pub peds: Vec<i64>,
    pub past: Tracks,
    pub future: Tracks,
    pub anchor: Vec<Point>,
    pub absolute_past: Tracks,
}

impl SceneWindow {
    /// Builds an anchored window from absolute coordinates.
    pub fn from_absolute(
        scene_id: impl Into<String>,
        start_frame: i64,
        peds: Vec<i64>,
        absolute_past: Tracks,
        absolute_future: &Tracks,
    ) -> Result<Self> {
        let (n, tau) = (absolute_past.num_tracks(), absolute_past.track_len());
        if n == 0 || tau == 0 || absolute_future.track_len() == 0 {
            return Err(Error::Mismatch("window needs pedestrians and non-empty horizons".into()));
        }
        if absolute_future.num_tracks() != n || peds.len() != n {
            return Err(Error::Mismatch(format!(
                "{} ids, {} pasts, {} futures",
                peds.len(),
                n,
                absolute_future.num_tracks()
            )));
        }
        let anchor: Vec<Point> = (0..n).map(|i| absolute_past.get(i, tau - 1)).collect();
        let shift = |tracks: &Tracks| {
            let mut out = tracks.clone();
            for i in 0..n {
                for t in 0..tracks.track_len() {
                    let p = tracks.get(i, t);
                    out.set(i, t, [p[0] - anchor[i][0], p[1] - anchor[i][1]]);
                }
            }
            out
        };
        Ok(Self {
            scene_id: scene_id.into(),
            start_frame,
            peds,
            past: shift(&absolute_past),
            future: shift(absolute_future),
            anchor,
            absolute_past,
        })
    }

    pub fn num_peds(&self) -> usize {
        self.peds.len()
    }

    pub fn tau(&self) -> usize {
        self.past.track_len()
    }

    pub fn delta(&self) -> usize {
        self.future.track_len()
    }

    /// Absolute ground-truth future.
    pub fn absolute_future(&self) -> Tracks {
        let mut out = self.future.clone();
        for i in 0..self.num_peds() {
            for t in 0..self.delta() {
                let p = self.future.get(i, t);
                out.set(i, t, [p[0] + self.anchor[i][0], p[1] + self.anchor[i][1]]);
            }
        }
        out
    }

    /// The same window with pedestrians reordered: row `k` of the result is
    /// row `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            scene_id: self.scene_id.clone(),
            start_frame: self.start_frame,
            peds: order.iter().map(|&i| self.peds[i]).collect(),
            past: self.past.select(order),
            future: self.future.select(order),
            anchor: order.iter().map(|&i| self.anchor[i]).collect(),
            absolute_past: self.absolute_past.select(order),
        }
    }
}

/// Every window of `tau + delta` samples, starting every `stride` samples
/// from the scene's first frame. Pedestrians missing any sample of a window
/// are left out of it; windows with nobody left are skipped.
pub fn extract_windows(
    scene: &TrajectoryScene,
    tau: usize,
    delta: usize,
    stride: usize,
) -> Result<Vec<SceneWindow>> {
    if tau == 0 || delta == 0 || stride == 0 {
        return Err(Error::Config(format!(
            "tau, delta and stride must be positive (got {tau}, {delta}, {stride})"
        )));
    }
    let step = scene.frame_step;
    let mut by_ped: HashMap<i64, HashMap<i64, Point>> = HashMap::new();
    for r in &scene.records {
        by_ped.entry(r.ped).or_default().insert(r.frame, [r.x, r.y]);
    }
    let frames: BTreeSet<i64> = scene.records.iter().map(|r| r.frame).collect();
    let Some(&first) = frames.iter().next() else {
        return Ok(Vec::new());
    };
    let peds = scene.pedestrians();
    let span = (tau + delta) as i64;
    let pitch = stride as i64 * step;

    let mut windows = Vec::new();
    for &start in frames.iter().filter(|&&f| (f - first) % pitch == 0) {
        let mut ids = Vec::new();
        let mut past_rows = Vec::new();
        let mut future_rows = Vec::new();
        for &ped in &peds {
            let track = &by_ped[&ped];
            let pts: Option<Vec<Point>> = (0..span)
                .map(|j| track.get(&(start + j * step)).copied())
                .collect();
            if let Some(pts) = pts {
                ids.push(ped);
                past_rows.push(pts[..tau].to_vec());
                future_rows.push(pts[tau..].to_vec());
            }
        }
        if ids.is_empty() {
            continue;
        }
        windows.push(SceneWindow::from_absolute(
            scene.scene_id.clone(),
            start,
            ids,
            Tracks::from_rows(past_rows)?,
            &Tracks::from_rows(future_rows)?,
        )?);
    }
    Ok(windows)
}

/// Windows of several scenes, concatenated in scene order.
pub fn extract_all(
    scenes: &[TrajectoryScene],
    tau: usize,
    delta: usize,
    stride: usize,
) -> Result<Vec<SceneWindow>> {
    let mut out = Vec::new();
    for s in scenes {
        out.extend(extract_windows(s, tau, delta, stride)?);
    }
    Ok(out)
}
