use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bias-corrected Adam. Moment buffers are created on the first step and
/// keyed by the position of each parameter slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        Self {
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("Adam eps must be > 0"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("Adam learning rate must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        self.validate()?;
        if params.len() != grads.len() {
            return Err(Error::Shape {
                op: "adam_step",
                left: format!("{} parameter groups", params.len()),
                right: format!("{} gradient groups", grads.len()),
            });
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::Shape {
                op: "adam_step",
                left: format!("{} parameter groups", params.len()),
                right: format!("{} moment groups", self.m.len()),
            });
        }
        for (i, (p, g)) in params.iter().zip(&grads).enumerate() {
            if p.len() != g.len() || p.len() != self.m[i].len() {
                return Err(Error::Shape {
                    op: "adam_step",
                    left: format!("group {i}: {} params", p.len()),
                    right: format!("{} grads, {} moments", g.len(), self.m[i].len()),
                });
            }
        }

        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .into_iter()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_closed_form() {
        let mut st = AdamState::new(1e-3);
        let mut p = vec![0.0];
        st.step(vec![&mut p], vec![&[1.0]]).unwrap();
        // m_hat = v_hat = 1 after bias correction
        let expected = -1e-3 / (1.0 + 1e-8);
        assert_eq!(p[0], expected);
        assert!((p[0] - -9.99999995e-4).abs() < 1e-11);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut st = AdamState::new(1e-2);
        let mut p = vec![1.5, -2.0];
        st.step(vec![&mut p], vec![&[0.0, 0.0]]).unwrap();
        assert_eq!(p, vec![1.5, -2.0]);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn groups_are_independent() {
        let grads_a = [0.3, -1.0, 2.0];
        let grads_b = [0.7, 0.01];
        let mut split = AdamState::new(1e-2);
        let mut joint = AdamState::new(1e-2);
        let mut a = vec![1.0, 2.0, 3.0];
        let mut b = vec![-1.0, 0.5];
        let mut ab = vec![1.0, 2.0, 3.0, -1.0, 0.5];
        for k in 0..5 {
            let s = 1.0 + k as f64;
            let ga: Vec<f64> = grads_a.iter().map(|g| g * s).collect();
            let gb: Vec<f64> = grads_b.iter().map(|g| g / s).collect();
            let gab: Vec<f64> = ga.iter().chain(&gb).cloned().collect();
            split.step(vec![&mut a, &mut b], vec![&ga, &gb]).unwrap();
            joint.step(vec![&mut ab], vec![&gab]).unwrap();
        }
        let concat: Vec<f64> = a.iter().chain(&b).cloned().collect();
        assert_eq!(concat, ab);
    }

    #[test]
    fn mismatched_groups_rejected() {
        let mut st = AdamState::new(1e-3);
        let mut p = vec![0.0; 2];
        assert!(st.step(vec![&mut p], vec![&[1.0]]).is_err());
        let mut bad = AdamState::new(1e-3);
        bad.beta1 = 1.0;
        assert!(bad.step(vec![&mut p], vec![&[1.0, 1.0]]).is_err());
    }
}
