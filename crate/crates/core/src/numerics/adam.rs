use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && self.beta1 > 0.0
            && (0.0..1.0).contains(&self.beta2)
            && self.beta2 > 0.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Bias-corrected adaptive-moment optimizer state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub(crate) step: u64,
    pub(crate) m_weights: Vec<Array2<f64>>,
    pub(crate) v_weights: Vec<Array2<f64>>,
    pub(crate) m_biases: Vec<Array1<f64>>,
    pub(crate) v_biases: Vec<Array1<f64>>,
}

impl Adam {
    pub fn new(net: &Mlp, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let zw: Vec<_> = net.weights().iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        let zb: Vec<_> = net.biases().iter().map(|b| Array1::zeros(b.raw_dim())).collect();
        Ok(Self {
            config,
            step: 0,
            m_weights: zw.clone(),
            v_weights: zw,
            m_biases: zb.clone(),
            v_biases: zb,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    fn matches(&self, net: &Mlp) -> bool {
        self.m_weights.len() == net.weights().len()
            && self
                .m_weights
                .iter()
                .zip(net.weights())
                .all(|(m, w)| m.dim() == w.dim())
            && self
                .m_biases
                .iter()
                .zip(net.biases())
                .all(|(m, b)| m.dim() == b.dim())
    }

    /// Applies one update to `net`. Gradients are rejected before any state
    /// changes if they contain a non-finite entry.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if !self.matches(net) {
            return Err(Error::Architecture("optimizer state does not match network".into()));
        }
        if grads.weights.len() != net.weights().len()
            || grads.weights.iter().zip(net.weights()).any(|(g, w)| g.dim() != w.dim())
            || grads.biases.iter().zip(net.biases()).any(|(g, b)| g.dim() != b.dim())
        {
            return Err(Error::Architecture("gradient shapes do not match network".into()));
        }
        if !grads.all_finite() {
            return Err(Error::NonFinite("gradients passed to the optimizer".into()));
        }

        self.step += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);

        let (weights, biases) = net.parameters_mut();
        for l in 0..weights.len() {
            Zip::from(&mut weights[l])
                .and(&mut self.m_weights[l])
                .and(&mut self.v_weights[l])
                .and(&grads.weights[l])
                .for_each(|p, m, v, &g| update(p, m, v, g, lr, b1, b2, c1, c2, eps));
            Zip::from(&mut biases[l])
                .and(&mut self.m_biases[l])
                .and(&mut self.v_biases[l])
                .and(&grads.biases[l])
                .for_each(|p, m, v, &g| update(p, m, v, g, lr, b1, b2, c1, c2, eps));
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update(p: &mut f64, m: &mut f64, v: &mut f64, g: f64, lr: f64, b1: f64, b2: f64, c1: f64, c2: f64, eps: f64) {
    *m = b1 * *m + (1.0 - b1) * g;
    *v = b2 * *v + (1.0 - b2) * g * g;
    let m_hat = *m / c1;
    let v_hat = *v / c2;
    *p -= lr * m_hat / (v_hat.sqrt() + eps);
}
