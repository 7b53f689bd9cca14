//! Loss values and displacement metrics on plain trajectories.

use diffnum::{kl_standard_normal_value, Tensor};

use crate::error::{Error, Result};
use crate::tracks::{distance, Tracks};

fn check_same(what: &str, a: &Tracks, b: &Tracks) -> Result<()> {
    if a.num_tracks() != b.num_tracks() || a.track_len() != b.track_len() {
        return Err(Error::Mismatch(format!(
            "{what}: {}x{} vs {}x{}",
            a.num_tracks(),
            a.track_len(),
            b.num_tracks(),
            b.track_len()
        )));
    }
    Ok(())
}

/// Mean over pedestrians of the summed squared point errors.
pub fn loss_ap(gt: &Tracks, pred: &Tracks) -> Result<f64> {
    check_same("loss_ap", gt, pred)?;
    let s: f64 = gt
        .points()
        .iter()
        .zip(pred.points())
        .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
        .sum();
    Ok(s / gt.num_tracks() as f64)
}

/// Mean over pedestrians of the summed KL terms. Each entry is one step's
/// `(mu, log_var)`, both `[n, latent_dim]`.
pub fn loss_kld(posteriors: &[(Tensor, Tensor)], n: usize) -> Result<f64> {
    let mut s = 0.0;
    for (mu, lv) in posteriors {
        if mu.shape() != lv.shape() || mu.rows() != n {
            return Err(Error::Mismatch(format!(
                "posterior shapes {:?} / {:?} for {n} pedestrians",
                mu.shape(),
                lv.shape()
            )));
        }
        s += kl_standard_normal_value(mu.data(), lv.data());
    }
    Ok(s / n as f64)
}

/// Mean over pedestrians of the summed unsquared residual norms.
pub fn loss_r(gt: &Tracks, raw: &Tracks, offsets: &Tracks) -> Result<f64> {
    check_same("loss_r", gt, raw)?;
    check_same("loss_r", gt, offsets)?;
    let s: f64 = gt
        .points()
        .iter()
        .zip(raw.points())
        .zip(offsets.points())
        .map(|((g, r), o)| (g[0] - r[0] - o[0]).hypot(g[1] - r[1] - o[1]))
        .sum();
    Ok(s / gt.num_tracks() as f64)
}

/// Per pedestrian, per step Euclidean errors.
pub fn displacement_errors(gt: &Tracks, pred: &Tracks) -> Result<Vec<Vec<f64>>> {
    check_same("displacement", gt, pred)?;
    Ok((0..gt.num_tracks())
        .map(|i| {
            gt.track(i)
                .iter()
                .zip(pred.track(i))
                .map(|(&a, &b)| distance(a, b))
                .collect()
        })
        .collect())
}

/// Mean over steps of one pedestrian's errors.
pub fn ade_of(errors: &[f64]) -> f64 {
    errors.iter().sum::<f64>() / errors.len() as f64
}

/// Mean displacement error over all pedestrians and steps.
pub fn ade(gt: &Tracks, pred: &Tracks) -> Result<f64> {
    let errs = displacement_errors(gt, pred)?;
    Ok(errs.iter().map(|e| ade_of(e)).sum::<f64>() / errs.len() as f64)
}

/// Mean displacement error at the last step.
pub fn fde(gt: &Tracks, pred: &Tracks) -> Result<f64> {
    let errs = displacement_errors(gt, pred)?;
    Ok(errs.iter().map(|e| e[e.len() - 1]).sum::<f64>() / errs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(points: Vec<[f64; 2]>) -> Tracks {
        Tracks::from_rows(vec![points]).unwrap()
    }

    #[test]
    fn hand_values() {
        let gt = one(vec![[3.0, 4.0], [1.0, 1.0]]);
        let pred = one(vec![[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(ade(&gt, &pred).unwrap(), 2.5);
        assert_eq!(fde(&gt, &pred).unwrap(), 0.0);
        assert_eq!(loss_ap(&gt, &pred).unwrap(), 25.0);
        let zero = Tracks::zeros(1, 2);
        assert_eq!(loss_r(&gt, &pred, &zero).unwrap(), 5.0);
        assert_eq!(loss_r(&gt, &zero, &gt).unwrap(), 0.0);
    }

    #[test]
    fn duplicating_pedestrians_keeps_the_mean() {
        let gt = one(vec![[1.0, 2.0], [0.5, -1.0]]);
        let pred = one(vec![[0.0, 0.0], [2.0, 2.0]]);
        let gt2 = Tracks::stack(&[&gt, &gt]).unwrap();
        let pred2 = Tracks::stack(&[&pred, &pred]).unwrap();
        assert_eq!(loss_ap(&gt, &pred).unwrap(), loss_ap(&gt2, &pred2).unwrap());
    }

    #[test]
    fn kld_closed_form() {
        let mu = Tensor::new(&[1, 3], vec![1.0, 0.0, 0.0]).unwrap();
        let lv = Tensor::zeros(&[1, 3]);
        assert_eq!(loss_kld(&[(mu, lv.clone())], 1).unwrap(), 0.5);
        assert_eq!(loss_kld(&[(Tensor::zeros(&[1, 3]), lv)], 1).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(loss_ap(&Tracks::zeros(1, 2), &Tracks::zeros(2, 2)).is_err());
        assert!(ade(&Tracks::zeros(1, 2), &Tracks::zeros(1, 3)).is_err());
    }
}
