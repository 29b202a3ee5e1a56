/// Standard deviation of the additive gradient noise.
pub const NOISE_STD: f64 = 0.1;

/// `L(w) = ½ wᵀQw` with `Q` diagonal and eigenvalues log-spaced over
/// `[1e-2, 1e2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    eigenvalues: Vec<f64>,
}

impl Quadratic {
    pub(crate) fn new(dim: usize) -> Self {
        let last = (dim - 1) as f64;
        let eigenvalues = (0..dim)
            .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / last))
            .collect();
        Self { eigenvalues }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn condition_number(&self) -> f64 {
        self.eigenvalues[self.dim() - 1] / self.eigenvalues[0]
    }

    /// Noise-free loss.
    pub fn loss(&self, w: &[f64]) -> f64 {
        0.5 * self.eigenvalues.iter().zip(w).map(|(l, w)| l * w * w).sum::<f64>()
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.eigenvalues.iter().zip(w).map(|(l, w)| l * w).collect()
    }

    /// `L(w) + ξᵀw` and its gradient `Qw + ξ`.
    pub(crate) fn loss_and_grad(&self, w: &[f64], noise: &[f64]) -> (f64, Vec<f64>) {
        let loss = self.loss(w) + noise.iter().zip(w).map(|(n, w)| n * w).sum::<f64>();
        let grad = self
            .gradient(w)
            .into_iter()
            .zip(noise)
            .map(|(g, n)| g + n)
            .collect();
        (loss, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::TaskInstance;
    use approx::assert_relative_eq;

    #[test]
    fn geometry() {
        let q = Quadratic::new(100);
        assert_eq!(q.loss(&[0.0; 100]), 0.0);
        assert_relative_eq!(q.condition_number(), 1e4, max_relative = 1e-12);
        assert_relative_eq!(q.eigenvalues()[0], 1e-2, max_relative = 1e-12);
        assert_relative_eq!(q.eigenvalues()[99], 1e2, max_relative = 1e-12);
    }

    #[test]
    fn noise_has_zero_mean_at_origin() {
        let t = TaskInstance::quadratic(100, 3).unwrap();
        let zero = vec![0.0; 100];
        let mut sum = vec![0.0; 100];
        let mut count = 0.0;
        for epoch in 0..20 {
            for batch in 0..t.batches_per_epoch() {
                let (loss, g) = t.minibatch_loss_and_grad(&zero, epoch, batch).unwrap();
                assert_eq!(loss, 0.0);
                sum.iter_mut().zip(&g).for_each(|(s, g)| *s += g);
                count += 1.0;
            }
        }
        // 400 draws of N(0, 0.01) per coordinate: SE 0.005
        for s in sum {
            assert!((s / count).abs() < 0.025);
        }
    }

    #[test]
    fn full_batch_descent_is_monotone() {
        let q = Quadratic::new(100);
        let mut w = vec![1.0; 100];
        let mut prev = q.loss(&w);
        for _ in 0..1000 {
            let g = q.gradient(&w);
            w.iter_mut().zip(g).for_each(|(w, g)| *w -= 1e-3 * g);
            let loss = q.loss(&w);
            assert!(loss <= prev);
            prev = loss;
        }
        assert!(prev < q.loss(&[1.0; 100]));
    }
}
