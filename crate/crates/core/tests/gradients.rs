mod common;

use common::{gradient_check, rng, small_window, step_noise, tiny_config};
use seqcvae::heads::HeadKind;
use seqcvae::model::{Batch, Model, ModelConfig};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn check(head: HeadKind, refiner: bool, teacher_forcing: bool) {
    let mut model = Model::new(ModelConfig {
        tau: 4,
        delta: 3,
        alpha: 2,
        teacher_forcing,
        ..tiny_config(head, refiner, 30)
    })
    .unwrap();
    let mut r = rng(31);
    let a = small_window(&mut r, 3, 4, 3);
    let b = small_window(&mut r, 2, 4, 3);
    let batch = Batch::new(&[&a, &b], 2.0).unwrap();
    let noise = step_noise(&mut r, &model, 5);
    let check = gradient_check(&mut model, &batch, &noise, H, TOL);
    for (name, e) in ["L_AP", "L_KLD", "L_R", "L_T"].iter().zip(check.errors) {
        assert!(e < TOL, "{head} refiner={refiner} tf={teacher_forcing}: {name} error {e:e}");
    }
}

#[test]
fn baseline_gradients() {
    check(HeadKind::Baseline, true, false);
}

#[test]
fn cascaded_gradients() {
    check(HeadKind::Cascaded, true, false);
    check(HeadKind::Cascaded, false, false);
}

#[test]
fn slide_gradients() {
    check(HeadKind::Slide, true, false);
}

#[test]
fn teacher_forced_gradients() {
    check(HeadKind::Cascaded, true, true);
    check(HeadKind::Slide, true, true);
}
