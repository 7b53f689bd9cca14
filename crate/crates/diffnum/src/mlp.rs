use rand::Rng;

use crate::error::{mismatch, DiffError, Result};
use crate::graph::{Graph, Var};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Layer widths of a fully connected network, input first.
///
/// Every layer has a bias; ReLU follows every layer except the last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    widths: Vec<usize>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(DiffError::InvalidSpec(format!(
                "need at least input and output widths, got {widths:?}"
            )));
        }
        if widths.contains(&0) {
            return Err(DiffError::InvalidSpec(format!(
                "widths must be positive, got {widths:?}"
            )));
        }
        Ok(Self { widths })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("len >= 2")
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// `Σ (w_i · w_{i+1} + w_{i+1})`
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// An [`MlpSpec`] bound to parameters in a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<(ParamId, ParamId)>,
}

impl Mlp {
    /// Registers `{prefix}.l{i}.w` / `{prefix}.l{i}.b`, drawn uniformly from
    /// `±sqrt(1 / fan_in)`.
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        spec: MlpSpec,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(spec.num_layers());
        for (i, w) in spec.widths().windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (1.0 / fan_in as f64).sqrt();
            let mut draw = |n: usize| -> Vec<f64> {
                (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
            };
            let weight = Tensor::new(&[fan_in, fan_out], draw(fan_in * fan_out))?;
            let bias = Tensor::new(&[1, fan_out], draw(fan_out))?;
            let wid = store.add(format!("{prefix}.l{i}.w"), weight)?;
            let bid = store.add(format!("{prefix}.l{i}.b"), bias)?;
            layers.push((wid, bid));
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    /// `(weight, bias)` of layer `i`.
    pub fn layer(&self, i: usize) -> (ParamId, ParamId) {
        self.layers[i]
    }

    pub fn last_layer(&self) -> (ParamId, ParamId) {
        *self.layers.last().expect("at least one layer")
    }

    pub fn param_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.layers.iter().flat_map(|&(w, b)| [w, b])
    }

    pub fn param_count(&self) -> usize {
        self.spec.param_count()
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var> {
        let width = g.value(x).cols();
        if width != self.spec.input_width() {
            return Err(mismatch(
                "mlp_forward",
                format!("input width {width}, expected {}", self.spec.input_width()),
            ));
        }
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let (wv, bv) = (g.param(store, w), g.param(store, b));
            h = g.linear(h, wv, bv)?;
            if i != last {
                h = g.relu(h);
            }
        }
        Ok(h)
    }
}
