use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use proptest::prelude::*;
use seqcvae::error::Error;
use seqcvae::scene::{load_scenes, parse_scene_text, Record, SceneFormat, TrajectoryScene};
use seqcvae::split::{make_splits, SplitMode};
use seqcvae::synth::{synth_scenes, SynthConfig};
use seqcvae::tracks::distance;
use seqcvae::window::{extract_windows, SceneWindow};

fn origin() -> &'static Path {
    Path::new("test.txt")
}

fn record(frame: i64, ped: i64) -> Record {
    Record {
        frame,
        ped,
        x: frame as f64 * 0.25 + ped as f64,
        y: -(frame as f64) * 0.5,
    }
}

/// Brute-force windows: for every start frame on the stride grid, the
/// pedestrians having a record at each of the `tau + delta` frames.
fn brute_windows(records: &[Record], step: i64, tau: usize, delta: usize, stride: usize) -> Vec<(i64, Vec<i64>)> {
    let present: BTreeSet<(i64, i64)> = records.iter().map(|r| (r.frame, r.ped)).collect();
    let peds: BTreeSet<i64> = records.iter().map(|r| r.ped).collect();
    let frames: BTreeSet<i64> = records.iter().map(|r| r.frame).collect();
    let first = *frames.iter().next().unwrap();
    let mut out = Vec::new();
    for &f in &frames {
        if (f - first) % (stride as i64 * step) != 0 {
            continue;
        }
        let ids: Vec<i64> = peds
            .iter()
            .copied()
            .filter(|&p| (0..(tau + delta) as i64).all(|j| present.contains(&(f + j * step, p))))
            .collect();
        if !ids.is_empty() {
            out.push((f, ids));
        }
    }
    out
}

#[test]
fn tsv_and_csv_parse_to_the_same_scene() {
    let tsv = "# comment\n0 1 1.0 2.0\n\n10\t1\t1.5\t2.5\n0 2 -1 0\n";
    let csv = "frame,ped,x,y\n0,1,1.0,2.0\n10,1,1.5,2.5\n0.0,2,-1,0\n";
    let a = parse_scene_text(tsv, SceneFormat::TsvFramePedXy, "s", origin()).unwrap();
    let b = parse_scene_text(csv, SceneFormat::CsvSdd, "s", origin()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.frame_step, 10);
    assert_eq!(a.pedestrians(), vec![1, 2]);
}

#[test]
fn interleaved_records_sort_by_pedestrian_then_frame() {
    let text = "20 2 0 0\n0 1 0 0\n10 2 0 0\n10 1 0 0\n0 2 0 0\n";
    let s = parse_scene_text(text, SceneFormat::TsvFramePedXy, "s", origin()).unwrap();
    let mut expect: Vec<(i64, i64)> = vec![(20, 2), (0, 1), (10, 2), (10, 1), (0, 2)]
        .into_iter()
        .map(|(f, p)| (p, f))
        .collect();
    expect.sort();
    let got: Vec<(i64, i64)> = s.records.iter().map(|r| (r.ped, r.frame)).collect();
    assert_eq!(got, expect);
}

#[test]
fn duplicate_record_names_the_line() {
    let text = "0 1 0 0\n10 1 0 0\n0 1 5 5\n";
    match parse_scene_text(text, SceneFormat::TsvFramePedXy, "s", origin()) {
        Err(Error::DuplicateRecord { line, frame, ped, .. }) => assert_eq!((line, frame, ped), (3, 0, 1)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_lines_are_parse_errors() {
    for text in ["0 1 0\n", "0 1 x 0\n", "0.5 1 0 0\n", "0 1 nan 0\n"] {
        let err = parse_scene_text(text, SceneFormat::TsvFramePedXy, "s", origin()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{text:?}: {err}");
    }
    let err = parse_scene_text("0,1,0,0\n", SceneFormat::CsvSdd, "s", origin()).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }));
}

#[test]
fn saved_scenes_load_back_from_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = synth_scenes(
        &SynthConfig {
            walkers: 3,
            crossing_pairs: 2,
            noise_sigma: 0.03,
            ..SynthConfig::default()
        },
        4,
    )
    .unwrap();
    scenes[0].save(&dir.path().join("walkers.txt"), SceneFormat::TsvFramePedXy).unwrap();
    scenes[1].save(&dir.path().join("crossing.csv"), SceneFormat::CsvSdd).unwrap();
    let mut loaded = load_scenes(dir.path()).unwrap();
    loaded.sort_by(|a, b| b.scene_id.cmp(&a.scene_id));
    assert_eq!(loaded, scenes);
}

#[test]
fn gaps_exclude_pedestrians_from_windows() {
    let mut records: Vec<Record> = (0..10).map(|f| record(f, 1)).collect();
    records.extend((0..10).filter(|&f| f != 6).map(|f| record(f, 2)));
    let scene = TrajectoryScene::new("g", records, Some(1)).unwrap();
    let windows = extract_windows(&scene, 3, 2, 1).unwrap();
    assert_eq!(windows.len(), 6);
    for w in &windows {
        let covers_gap = (w.start_frame..w.start_frame + 5).contains(&6);
        assert_eq!(w.peds, if covers_gap { vec![1] } else { vec![1, 2] }, "start {}", w.start_frame);
    }
}

#[test]
fn windows_are_anchored_at_the_last_observation() {
    let records: Vec<Record> = (0..6).map(|f| record(f * 10, 3)).collect();
    let scene = TrajectoryScene::new("a", records.clone(), None).unwrap();
    let w: &SceneWindow = &extract_windows(&scene, 4, 2, 1).unwrap()[0];
    let last = &records[3];
    assert_eq!(w.anchor, vec![[last.x, last.y]]);
    assert_eq!(w.past.get(0, 3), [0.0, 0.0]);
    for t in 0..2 {
        let r = &records[4 + t];
        assert_eq!(w.absolute_future().get(0, t), [r.x, r.y]);
        assert_eq!(w.future.get(0, t), [r.x - last.x, r.y - last.y]);
    }
}

proptest! {
    #[test]
    fn windows_match_brute_force_copresence(
        spans in prop::collection::vec((0i64..30, 1i64..25), 1..6),
        holes in prop::collection::vec((0i64..55, 0usize..6), 0..8),
        tau in 1usize..5,
        delta in 1usize..5,
        stride in 1usize..4,
    ) {
        let step = 2;
        let holes: BTreeSet<(i64, usize)> = holes.into_iter().collect();
        let mut records = Vec::new();
        for (p, &(start, len)) in spans.iter().enumerate() {
            for f in start..start + len {
                if !holes.contains(&(f, p)) {
                    records.push(record(f * step, p as i64 + 1));
                }
            }
        }
        prop_assume!(!records.is_empty());
        let scene = TrajectoryScene::new("p", records.clone(), Some(step)).unwrap();
        let got: Vec<(i64, Vec<i64>)> = extract_windows(&scene, tau, delta, stride)
            .unwrap()
            .into_iter()
            .map(|w| (w.start_frame, w.peds))
            .collect();
        prop_assert_eq!(got, brute_windows(&records, step, tau, delta, stride));
    }

    #[test]
    fn single_track_window_count(len in 1usize..40, tau in 1usize..6, delta in 1usize..6, stride in 1usize..5) {
        let records: Vec<Record> = (0..len as i64).map(|f| record(f, 1)).collect();
        let scene = TrajectoryScene::new("c", records, Some(1)).unwrap();
        let span = tau + delta;
        let expect = if len < span { 0 } else { (len - span) / stride + 1 };
        prop_assert_eq!(extract_windows(&scene, tau, delta, stride).unwrap().len(), expect);
    }

    #[test]
    fn text_round_trip(
        pts in prop::collection::btree_map((0i64..50, 1i64..6), (-1e3f64..1e3, -1e3f64..1e3), 1..40),
        csv in any::<bool>(),
    ) {
        let records: Vec<Record> = pts.iter().map(|(&(frame, ped), &(x, y))| Record { frame, ped, x, y }).collect();
        let scene = TrajectoryScene::new("rt", records, None).unwrap();
        let format = if csv { SceneFormat::CsvSdd } else { SceneFormat::TsvFramePedXy };
        let back = parse_scene_text(&scene.to_text(format), format, "rt", origin()).unwrap();
        prop_assert_eq!(back, scene);
    }
}

#[test]
fn leave_one_out_splits_are_disjoint_and_cover_every_scene() {
    let names: Vec<String> = ["eth", "hotel", "univ", "zara1", "zara2"].iter().map(|s| s.to_string()).collect();
    let plans = make_splits(&names, SplitMode::LeaveOneOut).unwrap();
    assert_eq!(plans.len(), 5);
    let mut held = BTreeMap::new();
    for p in &plans {
        assert!(p.train_scenes.is_disjoint(&p.test_scenes));
        assert_eq!(p.train_scenes.len() + p.test_scenes.len(), 5);
        for t in &p.test_scenes {
            *held.entry(t.clone()).or_insert(0) += 1;
        }
    }
    assert!(held.values().all(|&c| c == 1) && held.len() == 5);
    assert!(make_splits(&names[..1], SplitMode::LeaveOneOut).is_err());
    assert!(make_splits(&names, SplitMode::Fixed { test: vec!["nowhere".into()] }).is_err());
}

#[test]
fn synthetic_scenes_are_seeded() {
    let cfg = SynthConfig {
        walkers: 2,
        turners: 2,
        crossing_pairs: 2,
        avoidance_pairs: 2,
        noise_sigma: 0.05,
        ..SynthConfig::default()
    };
    assert_eq!(synth_scenes(&cfg, 9).unwrap(), synth_scenes(&cfg, 9).unwrap());
    assert_ne!(synth_scenes(&cfg, 9).unwrap(), synth_scenes(&cfg, 10).unwrap());
    let names: Vec<String> = synth_scenes(&cfg, 9).unwrap().into_iter().map(|s| s.scene_id).collect();
    assert_eq!(names, ["walkers", "turners", "crossing", "avoidance"]);
    assert!(synth_scenes(&SynthConfig::default(), 9).is_err());
}

#[test]
fn crossing_pairs_come_within_the_mask_radius() {
    let cfg = SynthConfig {
        crossing_pairs: 20,
        ..SynthConfig::default()
    };
    let scene = &synth_scenes(&cfg, 3).unwrap()[0];
    let mut by_frame: BTreeMap<i64, Vec<[f64; 2]>> = BTreeMap::new();
    for r in &scene.records {
        by_frame.entry(r.frame).or_default().push([r.x, r.y]);
    }
    let block = (cfg.track_len as i64 + 1) * cfg.frame_step;
    for k in 0..20 {
        let closest = by_frame
            .range(k * block..(k + 1) * block)
            .filter(|(_, pts)| pts.len() == 2)
            .map(|(_, pts)| distance(pts[0], pts[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(closest < cfg.mask_radius, "pair {k}: closest approach {closest}");
    }
}
