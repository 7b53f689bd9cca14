//! Sub-network widths.

use diffnum::MlpSpec;

use crate::error::{Error, Result};
use crate::kv::KeyValues;

/// Hidden widths and feature sizes of every sub-network. Input and output
/// widths fixed by the data (`2t`, `2`, `2δ`) are not stored here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    /// Width of `f_upast`, `f_point`, `f_opast` and `f_pfuture`.
    pub feature_dim: usize,
    pub latent_dim: usize,
    /// Width of the query/key/value space of the social pooling layer.
    pub social_dim: usize,
    pub upast_hidden: Vec<usize>,
    pub point_hidden: Vec<usize>,
    pub latent_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub opast_hidden: Vec<usize>,
    pub pfuture_hidden: Vec<usize>,
    pub offsets_hidden: Vec<usize>,
}

fn spec(widths: Vec<usize>) -> MlpSpec {
    MlpSpec::new(widths).expect("architecture widths are positive")
}

fn chain(input: usize, hidden: &[usize], output: usize) -> MlpSpec {
    let mut w = Vec::with_capacity(hidden.len() + 2);
    w.push(input);
    w.extend_from_slice(hidden);
    w.push(output);
    spec(w)
}

impl Architecture {
    /// Full-size widths:
    ///
    /// | network   | widths                          |
    /// |-----------|---------------------------------|
    /// | E_upast   | 2t × 512 × 256 × 16             |
    /// | E_point   | 2 × 8 × 16 × 16                 |
    /// | E_latent  | 32 × 8 × 50 × 32                |
    /// | D_latent  | 32 × 1024 × 512 × 1024 × 2      |
    /// | E_opast   | 16 × 512 × 256 × 16             |
    /// | E_pfuture | 24 × 512 × 256 × 16             |
    /// | D_offsets | 32 × 1024 × 512 × 1024 × 24     |
    pub fn paper() -> Self {
        Self {
            feature_dim: 16,
            latent_dim: 16,
            social_dim: 16,
            upast_hidden: vec![512, 256],
            point_hidden: vec![8, 16],
            latent_hidden: vec![8, 50],
            decoder_hidden: vec![1024, 512, 1024],
            opast_hidden: vec![512, 256],
            pfuture_hidden: vec![512, 256],
            offsets_hidden: vec![1024, 512, 1024],
        }
    }

    /// Every width divided by `factor`, never below 2.
    pub fn narrowed(&self, factor: usize) -> Self {
        let f = |w: usize| (w / factor).max(2);
        let v = |ws: &[usize]| ws.iter().map(|&w| f(w)).collect();
        Self {
            feature_dim: f(self.feature_dim),
            latent_dim: f(self.latent_dim),
            social_dim: f(self.social_dim),
            upast_hidden: v(&self.upast_hidden),
            point_hidden: v(&self.point_hidden),
            latent_hidden: v(&self.latent_hidden),
            decoder_hidden: v(&self.decoder_hidden),
            opast_hidden: v(&self.opast_hidden),
            pfuture_hidden: v(&self.pfuture_hidden),
            offsets_hidden: v(&self.offsets_hidden),
        }
    }

    /// Small widths for CPU-scale experiments: the wide layers shrink 4×
    /// and the latent space to 4 dimensions; feature widths are kept.
    pub fn desk() -> Self {
        let p = Self::paper();
        let v = |ws: &[usize]| ws.iter().map(|&w| w / 4).collect();
        Self {
            latent_dim: 4,
            upast_hidden: v(&p.upast_hidden),
            decoder_hidden: v(&p.decoder_hidden),
            opast_hidden: v(&p.opast_hidden),
            pfuture_hidden: v(&p.pfuture_hidden),
            offsets_hidden: v(&p.offsets_hidden),
            ..p
        }
    }

    pub fn upast_spec(&self, past_len: usize) -> MlpSpec {
        chain(2 * past_len, &self.upast_hidden, self.feature_dim)
    }

    pub fn point_spec(&self) -> MlpSpec {
        chain(2, &self.point_hidden, self.feature_dim)
    }

    pub fn latent_spec(&self) -> MlpSpec {
        chain(2 * self.feature_dim, &self.latent_hidden, 2 * self.latent_dim)
    }

    pub fn decoder_spec(&self) -> MlpSpec {
        chain(self.latent_dim + self.feature_dim, &self.decoder_hidden, 2)
    }

    pub fn opast_spec(&self, tau: usize) -> MlpSpec {
        chain(2 * tau, &self.opast_hidden, self.feature_dim)
    }

    pub fn pfuture_spec(&self, delta: usize) -> MlpSpec {
        chain(2 * delta, &self.pfuture_hidden, self.feature_dim)
    }

    pub fn projection_spec(&self) -> MlpSpec {
        spec(vec![2 * self.feature_dim, self.social_dim])
    }

    pub fn attention_spec(&self) -> MlpSpec {
        spec(vec![self.social_dim, self.social_dim])
    }

    pub fn offsets_spec(&self, delta: usize) -> MlpSpec {
        chain(2 * self.social_dim, &self.offsets_hidden, 2 * delta)
    }

    pub fn write_kv(&self, kv: &mut KeyValues) {
        let list = |ws: &[usize]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",");
        kv.insert("arch.feature-dim", self.feature_dim);
        kv.insert("arch.latent-dim", self.latent_dim);
        kv.insert("arch.social-dim", self.social_dim);
        kv.insert("arch.upast-hidden", list(&self.upast_hidden));
        kv.insert("arch.point-hidden", list(&self.point_hidden));
        kv.insert("arch.latent-hidden", list(&self.latent_hidden));
        kv.insert("arch.decoder-hidden", list(&self.decoder_hidden));
        kv.insert("arch.opast-hidden", list(&self.opast_hidden));
        kv.insert("arch.pfuture-hidden", list(&self.pfuture_hidden));
        kv.insert("arch.offsets-hidden", list(&self.offsets_hidden));
    }

    /// Reads the keys of [`Architecture::write_kv`]; missing keys keep `base`.
    pub fn read_kv(kv: &mut KeyValues, base: Architecture) -> Result<Self> {
        fn dim(kv: &mut KeyValues, key: &str, into: &mut usize) -> Result<()> {
            if let Some(v) = kv.take::<usize>(key)? {
                if v == 0 {
                    return Err(Error::Config(format!("`{key}` must be positive")));
                }
                *into = v;
            }
            Ok(())
        }
        fn list(kv: &mut KeyValues, key: &str, into: &mut Vec<usize>) -> Result<()> {
            if let Some(raw) = kv.take::<String>(key)? {
                let parsed: std::result::Result<Vec<usize>, _> =
                    raw.split(',').map(|s| s.trim().parse::<usize>()).collect();
                match parsed {
                    Ok(ws) if !ws.is_empty() && !ws.contains(&0) => *into = ws,
                    _ => return Err(Error::Config(format!("`{key}` = `{raw}` is not a width list"))),
                }
            }
            Ok(())
        }
        let mut a = base;
        dim(kv, "arch.feature-dim", &mut a.feature_dim)?;
        dim(kv, "arch.latent-dim", &mut a.latent_dim)?;
        dim(kv, "arch.social-dim", &mut a.social_dim)?;
        list(kv, "arch.upast-hidden", &mut a.upast_hidden)?;
        list(kv, "arch.point-hidden", &mut a.point_hidden)?;
        list(kv, "arch.latent-hidden", &mut a.latent_hidden)?;
        list(kv, "arch.decoder-hidden", &mut a.decoder_hidden)?;
        list(kv, "arch.opast-hidden", &mut a.opast_hidden)?;
        list(kv, "arch.pfuture-hidden", &mut a.pfuture_hidden)?;
        list(kv, "arch.offsets-hidden", &mut a.offsets_hidden)?;
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_widths() {
        let a = Architecture::paper();
        assert_eq!(a.upast_spec(8).widths(), &[16, 512, 256, 16]);
        assert_eq!(a.upast_spec(19).widths(), &[38, 512, 256, 16]);
        assert_eq!(a.point_spec().widths(), &[2, 8, 16, 16]);
        assert_eq!(a.latent_spec().widths(), &[32, 8, 50, 32]);
        assert_eq!(a.decoder_spec().widths(), &[32, 1024, 512, 1024, 2]);
        assert_eq!(a.opast_spec(8).widths(), &[16, 512, 256, 16]);
        assert_eq!(a.pfuture_spec(12).widths(), &[24, 512, 256, 16]);
        assert_eq!(a.offsets_spec(12).widths(), &[32, 1024, 512, 1024, 24]);
    }

    #[test]
    fn narrowing_by_16_floors_at_2() {
        let a = Architecture::paper().narrowed(16);
        assert_eq!(a.decoder_spec().widths(), &[4, 64, 32, 64, 2]);
        assert_eq!(a.latent_spec().widths(), &[4, 2, 3, 4]);
        assert_eq!(a.point_spec().widths(), &[2, 2, 2, 2]);
        assert_eq!(a.offsets_spec(12).widths(), &[4, 64, 32, 64, 24]);
    }

    #[test]
    fn kv_round_trip() {
        let a = Architecture::paper().narrowed(4);
        let mut kv = KeyValues::default();
        a.write_kv(&mut kv);
        let back = Architecture::read_kv(&mut kv, Architecture::paper()).unwrap();
        assert_eq!(back, a);
        kv.finish().unwrap();
    }
}
