use crate::error::{mismatch, Result};
use crate::graph::{Graph, Var};

/// Diagonal Gaussian posterior, one row per sample: `mu` and `log_var` are
/// both `[rows, latent_dim]`. Variance is `exp(log_var)` and so always positive.
#[derive(Debug, Clone, Copy)]
pub struct LatentGaussian {
    pub mu: Var,
    pub log_var: Var,
}

impl LatentGaussian {
    pub fn new(g: &Graph, mu: Var, log_var: Var) -> Result<Self> {
        if g.value(mu).shape() != g.value(log_var).shape() {
            return Err(mismatch(
                "latent_gaussian",
                format!("{:?} vs {:?}", g.value(mu).shape(), g.value(log_var).shape()),
            ));
        }
        Ok(Self { mu, log_var })
    }

    /// Splits `[rows, 2d]` encoder output into `mu = [.., :d]`, `log_var = [.., d:]`.
    pub fn split(g: &mut Graph, params: Var) -> Result<Self> {
        let width = g.value(params).cols();
        if width % 2 != 0 {
            return Err(mismatch("latent_gaussian", format!("odd width {width}")));
        }
        let d = width / 2;
        let mu = g.slice_cols(params, 0, d)?;
        let log_var = g.slice_cols(params, d, d)?;
        Ok(Self { mu, log_var })
    }

    pub fn latent_dim(&self, g: &Graph) -> usize {
        g.value(self.mu).cols()
    }
}

/// `mu + exp(0.5 · log_var) ⊙ noise`
pub fn sample_reparameterized(g: &mut Graph, q: &LatentGaussian, noise: Var) -> Result<Var> {
    if g.value(noise).shape() != g.value(q.mu).shape() {
        return Err(mismatch(
            "sample_reparameterized",
            format!(
                "noise {:?} vs latent {:?}",
                g.value(noise).shape(),
                g.value(q.mu).shape()
            ),
        ));
    }
    let half = g.scale(q.log_var, 0.5);
    let sigma = g.exp(half)?;
    let spread = g.mul(sigma, noise)?;
    g.add(q.mu, spread)
}

/// `KL(q ‖ N(0, I))` summed over all rows and dimensions.
pub fn kl_standard_normal(g: &mut Graph, q: &LatentGaussian) -> Result<Var> {
    g.kl_std_normal(q.mu, q.log_var)
}

/// Plain-value form of [`kl_standard_normal`] for a single Gaussian.
pub fn kl_standard_normal_value(mu: &[f64], log_var: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(log_var)
        .map(|(&m, &l)| m * m + l.exp() - 1.0 - l)
        .sum::<f64>()
}
