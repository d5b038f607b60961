//! Central-difference gradient checking for anything built on the tape.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tape::{Gradients, ParamId, ParamStore};
use crate::error::{F2sError, Result};

/// A scalar function of a parameter store. When `grads` is `Some`, the
/// analytic gradient must be added into it.
pub trait ScalarObjective {
    fn eval(&self, params: &ParamStore, grads: Option<&mut Gradients>) -> Result<f64>;
}

impl<F> ScalarObjective for F
where
    F: Fn(&ParamStore, Option<&mut Gradients>) -> Result<f64>,
{
    fn eval(&self, params: &ParamStore, grads: Option<&mut Gradients>) -> Result<f64> {
        self(params, grads)
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Check at most this many randomly chosen entries per parameter tensor.
    /// `None` checks every entry.
    pub max_entries_per_param: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-3,
            max_entries_per_param: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_param: Option<String>,
    pub worst_index: usize,
    pub entries_checked: usize,
}

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

pub fn grad_check<O: ScalarObjective + ?Sized>(
    objective: &O,
    point: &ParamStore,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut analytic = Gradients::zeros_like(point);
    let f0 = objective.eval(point, Some(&mut analytic))?;
    if !f0.is_finite() {
        return Err(F2sError::Numeric("objective is not finite at the check point".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut probe = point.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_param: None,
        worst_index: 0,
        entries_checked: 0,
    };
    let ids: Vec<ParamId> = point.ids().collect();
    for id in ids {
        let len = point.values(id).len();
        let entries: Vec<usize> = match opts.max_entries_per_param {
            Some(k) if k < len => {
                let mut picked = sample(&mut rng, len, k).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..len).collect(),
        };
        for i in entries {
            let orig = point.values(id)[i];
            probe.values_mut(id)[i] = orig + opts.step;
            let up = objective.eval(&probe, None)?;
            probe.values_mut(id)[i] = orig - opts.step;
            let down = objective.eval(&probe, None)?;
            probe.values_mut(id)[i] = orig;
            if !up.is_finite() || !down.is_finite() {
                return Err(F2sError::Numeric(format!(
                    "objective not finite when perturbing {}[{i}]",
                    point.name(id)
                )));
            }
            let numeric = (up - down) / (2.0 * opts.step);
            let err = relative_error(analytic.get(id)[i], numeric);
            report.entries_checked += 1;
            if report.worst_param.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst_param = Some(point.name(id).to_string());
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}
