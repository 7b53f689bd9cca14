//! One conditional VAE unit: predicts the next point of every pedestrian
//! from its updated past trajectory.

use diffnum::{sample_reparameterized, Graph, LatentGaussian, Mlp, ParamId, ParamStore, Var};
use rand::Rng;

use crate::arch::Architecture;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CvaeUnit {
    e_upast: Mlp,
    e_point: Mlp,
    e_latent: Mlp,
    d_latent: Mlp,
    latent_dim: usize,
}

/// Output of one unit for a batch of pedestrians.
#[derive(Debug, Clone, Copy)]
pub struct StepPrediction {
    /// `[rows, 2]` predicted next points.
    pub point: Var,
    /// Posterior, present only when the ground-truth point was encoded.
    pub posterior: Option<LatentGaussian>,
    pub z: Var,
    pub f_upast: Var,
}

impl CvaeUnit {
    /// A unit whose updated past holds `past_len` points.
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        arch: &Architecture,
        past_len: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            e_upast: Mlp::init(store, &format!("{prefix}.e_upast"), arch.upast_spec(past_len), rng)?,
            e_point: Mlp::init(store, &format!("{prefix}.e_point"), arch.point_spec(), rng)?,
            e_latent: Mlp::init(store, &format!("{prefix}.e_latent"), arch.latent_spec(), rng)?,
            d_latent: Mlp::init(store, &format!("{prefix}.d_latent"), arch.decoder_spec(), rng)?,
            latent_dim: arch.latent_dim,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// Points per updated past.
    pub fn past_len(&self) -> usize {
        self.e_upast.spec().input_width() / 2
    }

    pub fn decoder(&self) -> &Mlp {
        &self.d_latent
    }

    pub fn param_count(&self) -> usize {
        [&self.e_upast, &self.e_point, &self.e_latent, &self.d_latent]
            .iter()
            .map(|m| m.param_count())
            .sum()
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        [&self.e_upast, &self.e_point, &self.e_latent, &self.d_latent]
            .iter()
            .flat_map(|m| m.param_ids())
            .collect()
    }

    /// Parameters used at inference (the past encoder and the decoder).
    pub fn inference_param_ids(&self) -> Vec<ParamId> {
        self.e_upast.param_ids().chain(self.d_latent.param_ids()).collect()
    }

    fn check(&self, g: &Graph, updated_past: Var, noise: Var) -> Result<()> {
        let (pw, pr) = (g.value(updated_past).cols(), g.value(updated_past).rows());
        if pw != self.e_upast.spec().input_width() {
            return Err(Error::Mismatch(format!(
                "updated past has width {pw}, unit expects {}",
                self.e_upast.spec().input_width()
            )));
        }
        let n = g.value(noise);
        if n.cols() != self.latent_dim || n.rows() != pr {
            return Err(Error::Mismatch(format!(
                "noise is {:?}, expected [{pr}, {}]",
                n.shape(),
                self.latent_dim
            )));
        }
        Ok(())
    }

    fn decode(&self, g: &mut Graph, store: &ParamStore, z: Var, f_upast: Var) -> Result<Var> {
        let input = g.concat_cols(&[z, f_upast])?;
        Ok(self.d_latent.forward(g, store, input)?)
    }

    /// Encodes the ground-truth point, samples `z` from the posterior with the
    /// given unit noise, and decodes `concat(z, f_upast)`.
    pub fn train_forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        updated_past: Var,
        gt_point: Var,
        noise: Var,
    ) -> Result<StepPrediction> {
        self.check(g, updated_past, noise)?;
        let gt = g.value(gt_point);
        if gt.cols() != 2 || gt.rows() != g.value(updated_past).rows() {
            return Err(Error::Mismatch(format!("ground-truth point is {:?}", gt.shape())));
        }
        let f_upast = self.e_upast.forward(g, store, updated_past)?;
        let f_point = self.e_point.forward(g, store, gt_point)?;
        let joint = g.concat_cols(&[f_upast, f_point])?;
        let stats = self.e_latent.forward(g, store, joint)?;
        let posterior = LatentGaussian::split(g, stats)?;
        let z = sample_reparameterized(g, &posterior, noise)?;
        let point = self.decode(g, store, z, f_upast)?;
        Ok(StepPrediction {
            point,
            posterior: Some(posterior),
            z,
            f_upast,
        })
    }

    /// Decodes with `z` drawn from the prior: the noise itself.
    pub fn infer_forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        updated_past: Var,
        noise: Var,
    ) -> Result<StepPrediction> {
        self.check(g, updated_past, noise)?;
        let f_upast = self.e_upast.forward(g, store, updated_past)?;
        let point = self.decode(g, store, noise, f_upast)?;
        Ok(StepPrediction {
            point,
            posterior: None,
            z: noise,
            f_upast,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::normal_tensor;
    use diffnum::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(arch: &Architecture, t: usize) -> (ParamStore, CvaeUnit, ChaCha8Rng) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = CvaeUnit::init(&mut store, "u", arch, t, &mut rng).unwrap();
        (store, u, rng)
    }

    #[test]
    fn train_forward_shapes() {
        let arch = Architecture::paper().narrowed(8);
        let (store, u, mut rng) = unit(&arch, 8);
        let mut g = Graph::new();
        let past = g.constant(normal_tensor(&mut rng, 3, 16));
        let gt = g.constant(normal_tensor(&mut rng, 3, 2));
        let noise = g.constant(normal_tensor(&mut rng, 3, arch.latent_dim));
        let out = u.train_forward(&mut g, &store, past, gt, noise).unwrap();
        assert_eq!(g.value(out.point).shape(), &[3, 2]);
        let q = out.posterior.unwrap();
        assert_eq!(g.value(q.mu).shape(), &[3, arch.latent_dim]);
        assert_eq!(g.value(q.log_var).shape(), &[3, arch.latent_dim]);
    }

    #[test]
    fn paper_unit_shapes_and_latent_size() {
        let arch = Architecture::paper();
        let (store, u, mut rng) = unit(&arch, 8);
        assert_eq!(u.latent_dim(), 16);
        let mut g = Graph::new();
        let past = g.constant(normal_tensor(&mut rng, 3, 16));
        let gt = g.constant(normal_tensor(&mut rng, 3, 2));
        let noise = g.constant(normal_tensor(&mut rng, 3, 16));
        let out = u.train_forward(&mut g, &store, past, gt, noise).unwrap();
        assert_eq!(g.value(out.point).shape(), &[3, 2]);
        assert_eq!(g.value(out.posterior.unwrap().mu).shape(), &[3, 16]);
    }

    #[test]
    fn zeroed_decoder_output_is_its_bias() {
        let arch = Architecture::paper().narrowed(8);
        let (mut store, u, mut rng) = unit(&arch, 8);
        let (w, b) = u.decoder().last_layer();
        let shape = store.value(w).shape().to_vec();
        store.set_value(w, Tensor::zeros(&shape)).unwrap();
        store.set_value(b, Tensor::new(&[1, 2], vec![0.25, -1.5]).unwrap()).unwrap();
        let mut g = Graph::new();
        let past = g.constant(normal_tensor(&mut rng, 4, 16));
        let gt = g.constant(normal_tensor(&mut rng, 4, 2));
        let noise = g.constant(normal_tensor(&mut rng, 4, arch.latent_dim));
        let out = u.train_forward(&mut g, &store, past, gt, noise).unwrap();
        for r in 0..4 {
            assert_eq!(g.value(out.point).row(r), &[0.25, -1.5]);
        }
    }

    #[test]
    fn width_mismatch_rejected() {
        let arch = Architecture::paper().narrowed(8);
        let (store, u, mut rng) = unit(&arch, 8);
        let mut g = Graph::new();
        let past = g.constant(normal_tensor(&mut rng, 2, 18));
        let noise = g.constant(normal_tensor(&mut rng, 2, arch.latent_dim));
        assert!(matches!(u.infer_forward(&mut g, &store, past, noise), Err(Error::Mismatch(_))));
    }

    #[test]
    fn inference_is_deterministic_and_noise_dependent() {
        let arch = Architecture::paper().narrowed(8);
        let (store, u, mut rng) = unit(&arch, 8);
        let past = normal_tensor(&mut rng, 2, 16);
        let n1 = normal_tensor(&mut rng, 2, arch.latent_dim);
        let n2 = normal_tensor(&mut rng, 2, arch.latent_dim);
        let run = |noise: &Tensor| {
            let mut g = Graph::new();
            let p = g.constant(past.clone());
            let n = g.constant(noise.clone());
            let out = u.infer_forward(&mut g, &store, p, n).unwrap();
            g.value(out.point).clone()
        };
        assert_eq!(run(&n1), run(&n1));
        assert_ne!(run(&n1), run(&n2));
    }

    #[test]
    fn posterior_mean_path_agrees_with_inference() {
        let arch = Architecture::paper().narrowed(8);
        let (store, u, mut rng) = unit(&arch, 8);
        let past = normal_tensor(&mut rng, 3, 16);
        let gt = normal_tensor(&mut rng, 3, 2);
        // Zero noise makes the training sample equal the posterior mean.
        let mut g = Graph::new();
        let (p, t) = (g.constant(past.clone()), g.constant(gt));
        let zero = g.constant(Tensor::zeros(&[3, arch.latent_dim]));
        let trained = u.train_forward(&mut g, &store, p, t, zero).unwrap();
        let mu = g.value(trained.posterior.unwrap().mu).clone();
        let mut h = Graph::new();
        let (p2, m2) = (h.constant(past), h.constant(mu));
        let inferred = u.infer_forward(&mut h, &store, p2, m2).unwrap();
        assert_eq!(g.value(trained.f_upast), h.value(inferred.f_upast));
        assert_eq!(g.value(trained.point), h.value(inferred.point));
    }
}
