/// Adam over a list of flat parameter buffers.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(shapes: &[usize], beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update. `params` and `grads` must match the shapes given
    /// to [`Adam::new`].
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter buffer count");
        assert_eq!(grads.len(), self.m.len(), "gradient buffer count");
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(p.len(), g.len(), "gradient length");
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adam(n: usize) -> Adam {
        Adam::new(&[n], 0.9, 0.999, 1e-8)
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut opt = adam(3);
        let mut p = vec![1.0, -2.0, 0.5];
        for _ in 0..50 {
            opt.step(&mut [&mut p], &[&[0.0; 3]], 0.01);
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        for g in [3.0, -0.02, 1e4] {
            let mut opt = adam(1);
            let mut p = vec![0.0];
            opt.step(&mut [&mut p], &[&[g]], 0.001);
            assert!((p[0] + 0.001 * f64::signum(g)).abs() < 1e-9, "g={g} p={}", p[0]);
        }
    }

    #[test]
    fn descends_a_quadratic() {
        let mut opt = adam(1);
        let mut w = vec![1.0];
        for _ in 0..100 {
            let g = [2.0 * w[0]];
            opt.step(&mut [&mut w], &[&g], 0.1);
        }
        assert!(w[0].abs() < 0.1, "w = {}", w[0]);
        assert_eq!(opt.steps(), 100);
    }
}
