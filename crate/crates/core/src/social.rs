//! Socially-aware offset regression.
//!
//! Each pedestrian's observed past and raw predicted future are encoded,
//! mixed with nearby pedestrians of the same window through masked
//! attention, and decoded into per-step offsets that are added to the raw
//! prediction.

use std::ops::Range;

use diffnum::{Graph, Mlp, ParamId, ParamStore, Tensor, Var};
use rand::Rng;

use crate::arch::Architecture;
use crate::error::{Error, Result};
use crate::tracks::{distance, Point};
use crate::window::SceneWindow;

pub const DEFAULT_MASK_RADIUS: f64 = 2.0;

/// Binary adjacency between the pedestrians of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialMask {
    matrix: Tensor,
}

impl SocialMask {
    pub fn num_peds(&self) -> usize {
        self.matrix.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.matrix.get(i, j) != 0.0
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    /// Self-connections only.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            matrix: Tensor::new(&[n, n], data).expect("square mask"),
        }
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = order.len();
        let mut data = vec![0.0; n * n];
        for (i, &oi) in order.iter().enumerate() {
            for (j, &oj) in order.iter().enumerate() {
                data[i * n + j] = self.matrix.get(oi, oj);
            }
        }
        Self {
            matrix: Tensor::new(&[n, n], data).expect("square mask"),
        }
    }
}

/// Connects every pair of positions at most `radius` apart.
pub fn mask_from_positions(positions: &[Point], radius: f64) -> SocialMask {
    let n = positions.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j || distance(positions[i], positions[j]) <= radius {
                data[i * n + j] = 1.0;
            }
        }
    }
    SocialMask {
        matrix: Tensor::new(&[n, n], data).expect("square mask"),
    }
}

/// Mask at the last observed frame, in absolute coordinates.
pub fn build_mask(window: &SceneWindow, radius: f64) -> SocialMask {
    let last = window.tau() - 1;
    let positions: Vec<Point> = (0..window.num_peds())
        .map(|i| window.absolute_past.get(i, last))
        .collect();
    mask_from_positions(&positions, radius)
}

/// Rows `rows` of a batch belong to one window with the given mask.
#[derive(Debug, Clone)]
pub struct PedGroup {
    pub rows: Range<usize>,
    pub mask: SocialMask,
}

#[derive(Debug, Clone, Copy)]
pub struct Refinement {
    /// `[rows, 2·delta]`
    pub offsets: Var,
    /// The raw prediction with gradients stopped.
    pub raw: Var,
    /// `raw + offsets`
    pub refined: Var,
}

#[derive(Debug, Clone)]
pub struct SocialRefiner {
    e_opast: Mlp,
    e_pfuture: Mlp,
    projection: Mlp,
    query: Mlp,
    key: Mlp,
    value: Mlp,
    d_offsets: Mlp,
}

impl SocialRefiner {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        arch: &Architecture,
        tau: usize,
        delta: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut mlp = |name: &str, spec| Mlp::init(store, &format!("refiner.{name}"), spec, rng);
        Ok(Self {
            e_opast: mlp("e_opast", arch.opast_spec(tau))?,
            e_pfuture: mlp("e_pfuture", arch.pfuture_spec(delta))?,
            projection: mlp("proj", arch.projection_spec())?,
            query: mlp("query", arch.attention_spec())?,
            key: mlp("key", arch.attention_spec())?,
            value: mlp("value", arch.attention_spec())?,
            d_offsets: mlp("d_offsets", arch.offsets_spec(delta))?,
        })
    }

    fn mlps(&self) -> [&Mlp; 7] {
        [
            &self.e_opast,
            &self.e_pfuture,
            &self.projection,
            &self.query,
            &self.key,
            &self.value,
            &self.d_offsets,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.mlps().iter().map(|m| m.param_count()).sum()
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.mlps().iter().flat_map(|m| m.param_ids()).collect()
    }

    pub fn offsets_decoder(&self) -> &Mlp {
        &self.d_offsets
    }

    pub fn tau(&self) -> usize {
        self.e_opast.spec().input_width() / 2
    }

    pub fn delta(&self) -> usize {
        self.d_offsets.spec().output_width() / 2
    }

    /// Mixes the `[n, 2·feature]` features of one window's pedestrians.
    ///
    /// The features are projected to the social width, attended over the
    /// masked neighbourhood, and the pooled values are appended to the
    /// projection. Every reduction over pedestrians is order-independent, so
    /// permuting the rows permutes the output bit for bit.
    pub fn social_pool(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        features: Var,
        mask: &SocialMask,
    ) -> Result<Var> {
        let n = g.value(features).rows();
        if mask.num_peds() != n {
            return Err(Error::Mismatch(format!(
                "mask covers {} pedestrians, features have {n} rows",
                mask.num_peds()
            )));
        }
        let h = self.projection.forward(g, store, features)?;
        let q = self.query.forward(g, store, h)?;
        let k = self.key.forward(g, store, h)?;
        let v = self.value.forward(g, store, h)?;
        let d = self.key.spec().output_width() as f64;
        let logits = g.matmul_bt(q, k)?;
        let logits = g.scale(logits, 1.0 / d.sqrt());
        let attention = g.masked_softmax_rows(logits, mask.matrix())?;
        let pooled = g.matmul_sorted(attention, v)?;
        Ok(g.concat_cols(&[h, pooled])?)
    }

    /// Predicts offsets for a batch. `past` is `[rows, 2·tau]`, `raw` is
    /// `[rows, 2·delta]`; `groups` must tile the rows in order.
    pub fn refine(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        past: Var,
        raw: Var,
        groups: &[PedGroup],
    ) -> Result<Refinement> {
        let rows = g.value(past).rows();
        if g.value(raw).shape() != [rows, 2 * self.delta()] {
            return Err(Error::Mismatch(format!(
                "raw prediction is {:?}, expected [{rows}, {}]",
                g.value(raw).shape(),
                2 * self.delta()
            )));
        }
        let mut next = 0;
        for group in groups {
            if group.rows.start != next || group.rows.len() != group.mask.num_peds() {
                return Err(Error::Mismatch("pedestrian groups do not tile the batch".into()));
            }
            next = group.rows.end;
        }
        if next != rows {
            return Err(Error::Mismatch("pedestrian groups do not tile the batch".into()));
        }

        let raw = g.detach(raw);
        let f_opast = self.e_opast.forward(g, store, past)?;
        let f_pfuture = self.e_pfuture.forward(g, store, raw)?;
        let features = g.concat_cols(&[f_opast, f_pfuture])?;
        let pooled = if groups.len() == 1 {
            self.social_pool(g, store, features, &groups[0].mask)?
        } else {
            let mut parts = Vec::with_capacity(groups.len());
            for group in groups {
                let idx: Vec<usize> = group.rows.clone().collect();
                let f = g.gather_rows(features, &idx)?;
                parts.push(self.social_pool(g, store, f, &group.mask)?);
            }
            g.concat_rows(&parts)?
        };
        let offsets = self.d_offsets.forward(g, store, pooled)?;
        let refined = g.add(raw, offsets)?;
        Ok(Refinement {
            offsets,
            raw,
            refined,
        })
    }
}
