//! Central finite-difference gradient oracle.
//!
//! This path never touches the tape: it only perturbs parameter values and
//! re-evaluates a caller-supplied objective.

use crate::params::{ParamId, ParamStore};

/// Gradient-check scale below which differences are treated as absolute.
pub const DEFAULT_FLOOR: f64 = 1e-5;

/// `∂f_j/∂θ` for every scalar `θ` of the listed parameters, by central
/// differences with step `h`. `f` may return several objectives at once;
/// the result is indexed `[objective][flat scalar index]`, scalars ordered by
/// `ids` then row-major within each tensor.
pub fn central_differences<F>(store: &ParamStore, ids: &[ParamId], h: f64, mut f: F) -> Vec<Vec<f64>>
where
    F: FnMut(&ParamStore) -> Vec<f64>,
{
    let mut work = store.clone();
    let n_obj = f(&work).len();
    let mut out = vec![Vec::new(); n_obj];
    for &id in ids {
        for k in 0..store.value(id).len() {
            let orig = store.value(id).data()[k];
            work.value_mut(id).data_mut()[k] = orig + h;
            let plus = f(&work);
            work.value_mut(id).data_mut()[k] = orig - h;
            let minus = f(&work);
            work.value_mut(id).data_mut()[k] = orig;
            for j in 0..n_obj {
                out[j].push((plus[j] - minus[j]) / (2.0 * h));
            }
        }
    }
    out
}

/// Accumulated analytic gradients of the listed parameters, flattened in the
/// same order as [`central_differences`].
pub fn flat_grads(store: &ParamStore, ids: &[ParamId]) -> Vec<f64> {
    ids.iter()
        .flat_map(|&id| store.grad(id).data().iter().copied())
        .collect()
}

/// `|a − b| / max(|a|, |b|, floor)`
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Largest [`relative_error`] over paired entries, with its index.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> (f64, usize) {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n, floor))
        .enumerate()
        .fold((0.0, 0), |best, (i, e)| if e > best.0 { (e, i) } else { best })
}
