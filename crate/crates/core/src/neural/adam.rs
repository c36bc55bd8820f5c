use crate::error::{MadError, Result};

pub const DEFAULT_LR: f64 = 1e-4;

/// Bias-corrected Adam over a list of parameter blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(block_sizes: &[usize], lr: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(MadError::invalid("learning rate must be positive"));
        }
        Ok(AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[Vec<f64>]) -> Result<()> {
        if params.len() != self.m.len()
            || grads.len() != self.m.len()
            || params.iter().zip(grads).zip(&self.m).any(|((p, g), m)| p.len() != m.len() || g.len() != m.len())
        {
            return Err(MadError::invalid("Adam: parameter/gradient shapes differ from the state"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
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
        let mut s = AdamState::new(&[1], 1e-4).unwrap();
        let mut p = [0.0];
        s.step(&mut [&mut p], &[vec![1.0]]).unwrap();
        assert!((p[0] + 1e-4 / (1.0 + 1e-8)).abs() < 1e-18);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = AdamState::new(&[3], 1e-3).unwrap();
        let mut p = [1.0, -2.0, 0.5];
        for _ in 0..5 {
            s.step(&mut [&mut p], &[vec![0.0; 3]]).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 0.5]);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(&[2], 1e-3).unwrap();
        let mut p = [0.0; 3];
        assert!(s.step(&mut [&mut p], &[vec![0.0; 3]]).is_err());
    }
}
