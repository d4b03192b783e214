use serde::{Deserialize, Serialize};

use super::{Gradients, ParameterStore};
use crate::error::Result;

/// Adam with bias correction. Moment buffers are created lazily on the first step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Option<ParameterStore>,
    v: Option<ParameterStore>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: None,
            v: None,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParameterStore, grads: &Gradients) -> Result<()> {
        params.check_same_layout(grads)?;
        let m = self.m.get_or_insert_with(|| params.zeros_like());
        let v = self.v.get_or_insert_with(|| params.zeros_like());
        m.check_same_layout(params)?;
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let layers = params
            .iter_mut()
            .zip(grads.iter())
            .zip(m.iter_mut().zip(v.iter_mut()));
        for (((_, p), (_, g)), ((_, mm), (_, vv))) in layers {
            let p = p.data_mut();
            let (mm, vv) = (mm.data_mut(), vv.data_mut());
            for (k, &gk) in g.data().iter().enumerate() {
                mm[k] = self.beta1 * mm[k] + (1.0 - self.beta1) * gk;
                vv[k] = self.beta2 * vv[k] + (1.0 - self.beta2) * gk * gk;
                let update = self.lr * (mm[k] / c1) / ((vv[k] / c2).sqrt() + self.eps);
                if update != 0.0 {
                    p[k] -= update;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    fn scalar(v: f64) -> ParameterStore {
        let mut p = ParameterStore::new();
        p.insert("w.0.weight", Matrix::filled(1, 1, v)).unwrap();
        p
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let mut p = scalar(1.0);
        let g = scalar(0.5);
        let mut opt = Adam::new(0.1);
        opt.step(&mut p, &g).unwrap();
        // m̂ = 0.5, v̂ = 0.25 → update = 0.1 · 0.5 / (0.5 + 1e-8)
        let expected = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
        assert_eq!(p.get("w.0.weight").unwrap().get(0, 0), expected);

        opt.step(&mut p, &scalar(-1.0)).unwrap();
        let (g2, m1) = (-1.0, 0.05);
        let m = 0.9 * m1 + 0.1 * g2;
        let v = 0.999 * 0.00025 + 0.001 * g2 * g2;
        let m_hat = m / (1.0 - 0.81);
        let v_hat = v / (1.0 - 0.999f64 * 0.999);
        let expected = expected - 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p.get("w.0.weight").unwrap().get(0, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_and_zero_lr_keep_parameters() {
        let mut p = scalar(0.3);
        Adam::new(0.1).step(&mut p, &scalar(0.0)).unwrap();
        assert_eq!(p, scalar(0.3));
        let mut p = scalar(0.3);
        Adam::new(0.0).step(&mut p, &scalar(2.0)).unwrap();
        assert_eq!(p, scalar(0.3));
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let mut p = scalar(1.0);
        let mut g = ParameterStore::new();
        g.insert("other", Matrix::zeros(1, 1)).unwrap();
        assert!(Adam::new(0.1).step(&mut p, &g).is_err());
    }
}
