//! Training losses on the graph.
//!
//! Every loss is summed over pedestrians and steps and divided by the number
//! of pedestrians `n` in the batch.

use diffnum::{Graph, LatentGaussian, Var};

use crate::error::{Error, Result};

fn check_same(g: &Graph, what: &str, a: Var, b: Var) -> Result<()> {
    if g.value(a).shape() != g.value(b).shape() {
        return Err(Error::Mismatch(format!(
            "{what}: {:?} vs {:?}",
            g.value(a).shape(),
            g.value(b).shape()
        )));
    }
    Ok(())
}

/// Squared point error: `Σ ‖gt − pred‖² / n`.
pub fn average_point_loss(g: &mut Graph, gt: Var, pred: Var, n: usize) -> Result<Var> {
    check_same(g, "average point loss", gt, pred)?;
    let diff = g.sub(gt, pred)?;
    let s = g.sum_squares(diff);
    Ok(g.scale(s, 1.0 / n as f64))
}

/// `Σ KL(posterior ‖ N(0, I)) / n` over every step of a rollout.
pub fn kld_loss(g: &mut Graph, posteriors: &[LatentGaussian], n: usize) -> Result<Var> {
    let mut total: Option<Var> = None;
    for post in posteriors {
        let kl = g.kl_std_normal(post.mu, post.log_var)?;
        total = Some(match total {
            None => kl,
            Some(t) => g.add(t, kl)?,
        });
    }
    let total = match total {
        Some(t) => t,
        None => g.constant(diffnum::Tensor::scalar(0.0)),
    };
    Ok(g.scale(total, 1.0 / n as f64))
}

/// Unsquared residual after refinement: `Σ ‖gt − raw − offsets‖ / n`.
pub fn regression_loss(g: &mut Graph, gt: Var, raw: Var, offsets: Var, n: usize) -> Result<Var> {
    check_same(g, "regression loss", gt, raw)?;
    check_same(g, "regression loss", gt, offsets)?;
    let residual = g.sub(gt, raw)?;
    let residual = g.sub(residual, offsets)?;
    let len = g.value(residual).len();
    let points = g.reshape(residual, &[len / 2, 2])?;
    let norms = g.row_norms(points)?;
    let s = g.sum(norms);
    Ok(g.scale(s, 1.0 / n as f64))
}
