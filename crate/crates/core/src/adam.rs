//! Adam with bias correction; one moment pair per trainable tensor,
//! updated in the fixed tensor order so runs are bit-reproducible.

use crate::neural::{Gradients, ModelParams};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;
pub const DEFAULT_LR: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step_count: u64,
    pub lr: f64,
}

impl AdamState {
    /// Zero moments shaped like the params' trainable tensors.
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        let shapes: Vec<usize> = (0..7).map(|k| params.view(k).len()).collect();
        AdamState {
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
            lr,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One Adam update, in place.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        self.step_count += 1;
        let t = self.step_count as f64;
        let bc1 = 1.0 - BETA1.powf(t);
        let bc2 = 1.0 - BETA2.powf(t);
        for k in 0..7 {
            let g = grads.view(k);
            let p = params.view_mut(k);
            let m = &mut self.first_moment[k];
            let v = &mut self.second_moment[k];
            debug_assert_eq!(g.len(), p.len());
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + EPS);
            }
        }
    }
}
