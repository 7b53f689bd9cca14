mod common;

use common::{bits, equivariant, isolation_holds, random_window, refined, rng, step_noise, tiny_config};
use diffnum::Tensor;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use seqcvae::heads::HeadKind;
use seqcvae::model::Model;
use seqcvae::social::{build_mask, mask_from_positions};
use seqcvae::synth::{synth_scenes, SynthConfig};
use seqcvae::tracks::distance;
use seqcvae::window::extract_all;

#[test]
fn full_model_is_permutation_equivariant() {
    for head in HeadKind::ALL {
        let model = Model::new(tiny_config(head, true, 40)).unwrap();
        let mut r = rng(41);
        for _ in 0..5 {
            let n = 2 + r.random_range(0..5);
            let w = random_window(&mut r, n, 8, 12, 3.0);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut r);
            let noise = step_noise(&mut r, &model, n);
            assert!(equivariant(&model, &w, &order, &noise), "{head}");
        }
    }
}

#[test]
fn isolated_pedestrian_is_unaffected_by_the_crowd() {
    for head in HeadKind::ALL {
        let model = Model::new(tiny_config(head, true, 42)).unwrap();
        let mut r = rng(43);
        for crowd in 1..4 {
            assert!(isolation_holds(&model, &mut r, crowd), "{head}, crowd {crowd}");
        }
    }
}

#[test]
fn batched_windows_match_separate_runs() {
    let model = Model::new(tiny_config(HeadKind::Cascaded, true, 44)).unwrap();
    let mut r = rng(45);
    let a = random_window(&mut r, 3, 8, 12, 1.0);
    let b = random_window(&mut r, 2, 8, 12, 1.0);
    let noise = step_noise(&mut r, &model, 5);
    let split = |rows: std::ops::Range<usize>| -> Vec<Tensor> {
        noise
            .iter()
            .map(|t| Tensor::from_rows(&rows.clone().map(|i| t.row(i).to_vec()).collect::<Vec<_>>()).unwrap())
            .collect()
    };
    let both = refined(&model, &[&a, &b], &noise);
    let pa = refined(&model, &[&a], &split(0..3));
    let pb = refined(&model, &[&b], &split(3..5));
    let rows: Vec<Vec<f64>> = (0..5).map(|i| both.row(i).to_vec()).collect();
    let joined: Vec<Vec<f64>> = (0..3).map(|i| pa.row(i).to_vec()).chain((0..2).map(|i| pb.row(i).to_vec())).collect();
    assert_eq!(rows, joined);
}

#[test]
fn without_refiner_the_prediction_is_raw() {
    let model = Model::new(tiny_config(HeadKind::Slide, false, 46)).unwrap();
    let mut r = rng(47);
    let w = random_window(&mut r, 3, 8, 12, 1.0);
    let noise = step_noise(&mut r, &model, 3);
    let (steps, _) = common::infer_steps(&model, &w.past.to_tensor(), &noise);
    let got = refined(&model, &[&w], &noise);
    for (k, s) in steps.iter().enumerate() {
        for i in 0..3 {
            assert_eq!(&got.row(i)[2 * k..2 * k + 2], s.row(i));
        }
    }
    assert_eq!(bits(&got).len(), 3 * 24);
}

#[test]
fn masks_of_synthetic_windows_are_symmetric_with_unit_diagonal() {
    let cfg = SynthConfig {
        walkers: 4,
        turners: 4,
        crossing_pairs: 4,
        avoidance_pairs: 4,
        noise_sigma: 0.02,
        ..SynthConfig::default()
    };
    let windows = extract_all(&synth_scenes(&cfg, 48).unwrap(), 8, 12, 1).unwrap();
    assert!(!windows.is_empty());
    for w in &windows {
        let m = build_mask(w, 2.0);
        for i in 0..w.num_peds() {
            assert!(m.get(i, i));
            for j in 0..w.num_peds() {
                assert_eq!(m.get(i, j), m.get(j, i));
                let near = distance(w.absolute_past.get(i, 7), w.absolute_past.get(j, 7)) <= 2.0;
                assert_eq!(m.get(i, j), near);
            }
        }
    }
}

proptest! {
    #[test]
    fn mask_matches_pairwise_distances(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..10),
        radius in 0.1f64..4.0,
    ) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        let m = mask_from_positions(&pts, radius);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                prop_assert_eq!(m.get(i, j), i == j || distance(pts[i], pts[j]) <= radius);
            }
        }
    }
}
