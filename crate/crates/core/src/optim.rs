//! Adaptive-moment optimizer shared by the generator and the discriminators.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// Decay applied directly to the parameters (AdamW).
    Decoupled,
    /// Decay folded into the gradient as an L2 penalty (classic Adam).
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub mode: DecayMode,
}

impl AdamConfig {
    pub fn new(weight_decay: f64, mode: DecayMode) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, cfg: &AdamConfig) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let mut g = grads[i];
            match cfg.mode {
                DecayMode::L2 => g += cfg.weight_decay * params[i],
                DecayMode::Decoupled => params[i] -= lr * cfg.weight_decay * params[i],
            }
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }

    /// `t` followed by the `m` and `v` vectors.
    pub fn to_f64s(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + 2 * self.m.len());
        out.push(self.t as f64);
        out.extend_from_slice(&self.m);
        out.extend_from_slice(&self.v);
        out
    }

    pub fn from_f64s(values: &[f64]) -> Option<Self> {
        if values.is_empty() || (values.len() - 1) % 2 != 0 {
            return None;
        }
        let n = (values.len() - 1) / 2;
        Some(Self {
            t: values[0] as u64,
            m: values[1..1 + n].to_vec(),
            v: values[1 + n..].to_vec(),
        })
    }
}
