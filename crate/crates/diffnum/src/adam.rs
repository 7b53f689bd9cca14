use crate::params::ParamStore;

/// Adam hyper-parameters. The default learning rate is `3e-4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update over every parameter, then clears the
/// gradients and advances the step counter.
pub fn adam_step(store: &mut ParamStore, cfg: &AdamConfig) {
    let parts = store.adam_parts();
    *parts.step += 1;
    let t = *parts.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((value, grad), m), v) in parts
        .values
        .iter_mut()
        .zip(parts.grads.iter_mut())
        .zip(parts.m.iter_mut())
        .zip(parts.v.iter_mut())
    {
        let it = value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()));
        for ((p, &g), (mi, vi)) in it {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        grad.fill(0.0);
    }
}
