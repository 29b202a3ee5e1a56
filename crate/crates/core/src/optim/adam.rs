use crate::error::Result;
use crate::optim::sgd::check_gradient;

/// Adam moments; `step` counts completed updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            first: vec![0.0; dim],
            second: vec![0.0; dim],
            step: 0,
        }
    }
}

/// Bias-corrected Adam update.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    check_gradient(grads)?;
    state.step += 1;
    let t = i32::try_from(state.step).unwrap_or(i32::MAX);
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((w, &g), m), u) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *u = beta2 * *u + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let u_hat = *u / c2;
        *w -= lr * m_hat / (u_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn first_step_is_sign_like() {
        for g in [3.0, -0.25, 1e3] {
            let mut w = [0.0];
            let mut s = AdamState::new(1);
            adam_step(&mut w, &[g], &mut s, 0.01, 0.9, 0.999, 1e-8).unwrap();
            let rel = 1e-8 / f64::abs(g);
            assert!((w[0] + 0.01 * f64::signum(g)).abs() <= 0.01 * rel + 1e-15);
        }
    }

    #[test]
    fn zero_gradient_keeps_weights() {
        let mut w = [1.5, -2.0];
        let mut s = AdamState::new(2);
        for _ in 0..5 {
            adam_step(&mut w, &[0.0, 0.0], &mut s, 0.1, 0.9, 0.999, 1e-8).unwrap();
        }
        assert_eq!(w, [1.5, -2.0]);
        assert_eq!(s.step, 5);
    }

    #[test]
    fn plug_in_value() {
        let mut w = [0.0];
        let mut s = AdamState::new(1);
        adam_step(&mut w, &[3.0], &mut s, 0.1, 0.9, 0.999, 1e-8).unwrap();
        assert_abs_diff_eq!(w[0], -0.1 * 3.0 / (3.0 + 1e-8), epsilon = 1e-12);
        assert_abs_diff_eq!(w[0], -0.0999999997, epsilon = 1e-10);
    }

    proptest! {
        #[test]
        fn zero_betas_reduce_to_normalized_sgd(
            g in prop::collection::vec(-50.0f64..50.0, 1..8),
            lr in 1e-4f64..1.0,
            eps in 1e-10f64..1e-2,
        ) {
            let mut w = vec![0.5; g.len()];
            let mut s = AdamState::new(g.len());
            let expected: Vec<f64> = g.iter().map(|g| 0.5 - lr * g / (g.abs() + eps)).collect();
            adam_step(&mut w, &g, &mut s, lr, 0.0, 0.0, eps).unwrap();
            prop_assert_eq!(w, expected);
        }
    }
}
