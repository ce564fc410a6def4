use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    step: u64,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    eps_hat: f64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Fresh state for parameter tensors of the given sizes, default betas.
    pub fn new(shapes: &[usize], learning_rate: f64) -> Result<Self> {
        Self::with_betas(shapes, learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(
        shapes: &[usize],
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        eps_hat: f64,
    ) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {learning_rate}")));
        }
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::config("betas must lie in [0, 1)"));
        }
        if !(eps_hat > 0.0) {
            return Err(Error::config("eps_hat must be positive"));
        }
        Ok(Self {
            step: 0,
            learning_rate,
            beta1,
            beta2,
            eps_hat,
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// One Adam step with bias correction. `params` and `grads` must line up
    /// tensor by tensor with the shapes the state was built for.
    pub fn update(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != self.first_moment.len() {
            return Err(Error::dim(format!(
                "adam state tracks {} tensors, got {} params and {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            let n = self.first_moment[i].len();
            if p.len() != n || g.len() != n {
                return Err(Error::dim(format!(
                    "tensor {i}: expected {n} entries, got {} params and {} grads",
                    p.len(),
                    g.len()
                )));
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.eps_hat);

        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + (1.0 - b1) * gj;
                v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
