//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use super::tape::{Gradients, ParamStore};
use crate::error::{F2sError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.ids().map(|id| vec![0.0; params.values(id).len()]).collect();
        AdamState {
            config,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    pub fn first_moment(&self, index: usize) -> &[f64] {
        &self.m[index]
    }
}

/// One Adam update. Gradients are checked for finiteness before anything is
/// modified, so a rejected step leaves both `params` and `state` untouched.
///
/// With `round_to_f32` set, updated values are snapped to the nearest 32-bit
/// float so a serialized checkpoint holds exactly what training used.
pub fn adam_step(
    params: &mut ParamStore,
    grads: &Gradients,
    state: &mut AdamState,
    round_to_f32: bool,
) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(F2sError::config("optimizer state does not match parameter count"));
    }
    for id in params.ids() {
        let g = grads.get(id);
        if g.len() != params.values(id).len() {
            return Err(F2sError::config(format!(
                "gradient for {} has {} entries, expected {}",
                params.name(id),
                g.len(),
                params.values(id).len()
            )));
        }
        if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
            return Err(F2sError::Numeric(format!(
                "non-finite gradient for parameter {} at index {pos}",
                params.name(id)
            )));
        }
    }

    state.t += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for id in params.ids() {
        let g = grads.get(id);
        let m = &mut state.m[id.0];
        let v = &mut state.v[id.0];
        let theta = params.values_mut(id);
        for i in 0..theta.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            let mut next = theta[i] - lr * m_hat / (v_hat.sqrt() + eps);
            if round_to_f32 {
                next = next as f32 as f64;
            }
            theta[i] = next;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("theta", vec![1], vec![v]).unwrap();
        s
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = ParamStore::new();
        p.add("a", vec![3], vec![0.1, -0.2, 0.3]).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(&p, AdamConfig::default());
        let g = Gradients::zeros_like(&p);
        for _ in 0..5 {
            adam_step(&mut p, &g, &mut st, false).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(st.step_count(), 5);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = scalar_store(1.0);
        let mut st = AdamState::new(&p, AdamConfig::default());
        let mut g = Gradients::zeros_like(&p);
        g.get_mut(crate::numerics::ParamId(0))[0] = 0.5;
        adam_step(&mut p, &g, &mut st, false).unwrap();
        // m_hat = 0.5, v_hat = 0.25 => delta = -lr * 0.5 / (0.5 + 1e-8)
        let expected = 1.0 - 1e-4 * 0.5 / (0.5 + 1e-8);
        let got = p.values(crate::numerics::ParamId(0))[0];
        assert!((got - expected).abs() < 1e-15);
        assert!((got - (1.0 - 1e-4)).abs() < 1e-10);
    }

    #[test]
    fn identical_runs_are_identical() {
        let run = || {
            let mut p = scalar_store(0.3);
            let mut st = AdamState::new(&p, AdamConfig::default());
            for k in 0..20 {
                let mut g = Gradients::zeros_like(&p);
                g.get_mut(crate::numerics::ParamId(0))[0] = (k as f64 * 0.37).sin();
                adam_step(&mut p, &g, &mut st, true).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_aborts_without_mutation() {
        let mut p = scalar_store(0.3);
        let mut st = AdamState::new(&p, AdamConfig::default());
        let mut g = Gradients::zeros_like(&p);
        g.get_mut(crate::numerics::ParamId(0))[0] = f64::NAN;
        let err = adam_step(&mut p, &g, &mut st, false).unwrap_err().to_string();
        assert!(err.contains("theta"), "{err}");
        assert_eq!(st.step_count(), 0);
        assert_eq!(p.values(crate::numerics::ParamId(0))[0], 0.3);
    }
}
