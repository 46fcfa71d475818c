//! Central-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{Graph, ParamId, ParamStore, Var};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub eps: f64,
    /// Coordinates to sample; every coordinate is checked when the store has fewer.
    pub samples: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            samples: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coordinates_checked: usize,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

/// Relative error with denominator `max(|a|, |b|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the graph's analytic gradient with central differences.
///
/// `loss_fn` builds the scalar loss from the store's current values; it must
/// be deterministic (disable dropout). The store's gradients are zeroed before
/// and left holding the analytic gradient afterwards.
pub fn grad_check<F>(mut loss_fn: F, store: &mut ParamStore, cfg: GradCheckConfig) -> Result<GradCheckReport>
where
    F: FnMut(&mut Graph, &ParamStore) -> Result<Var>,
{
    let eval = |loss_fn: &mut F, store: &ParamStore| -> Result<f64> {
        let mut g = Graph::new();
        let loss = loss_fn(&mut g, store)?;
        let v = g.scalar(loss)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("grad_check: loss evaluated to {v}")));
        }
        Ok(v)
    };

    store.zero_grad();
    {
        let mut g = Graph::new();
        let loss = loss_fn(&mut g, store)?;
        let v = g.scalar(loss)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("grad_check: loss evaluated to {v}")));
        }
        g.backward(loss, store)?;
    }

    let coords: Vec<(ParamId, usize)> = store
        .ids()
        .flat_map(|id| (0..store.value(id).len()).map(move |k| (id, k)))
        .collect();
    let chosen: Vec<usize> = if coords.len() <= cfg.samples {
        (0..coords.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut v = sample(&mut rng, coords.len(), cfg.samples).into_vec();
        v.sort_unstable();
        v
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        coordinates_checked: chosen.len(),
        worst: None,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    for ci in chosen {
        let (id, k) = coords[ci];
        let analytic = store.grad(id).values()[k];
        let orig = store.value(id).values()[k];
        store.value_mut(id).values_mut()[k] = orig + cfg.eps;
        let plus = eval(&mut loss_fn, store);
        store.value_mut(id).values_mut()[k] = orig - cfg.eps;
        let minus = eval(&mut loss_fn, store);
        store.value_mut(id).values_mut()[k] = orig;
        let numeric = (plus? - minus?) / (2.0 * cfg.eps);
        let err = relative_error(analytic, numeric);
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = err.max(report.max_rel_error);
            report.worst = Some((store.name(id).to_string(), k));
            report.worst_analytic = analytic;
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}
