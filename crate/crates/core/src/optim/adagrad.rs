use crate::error::Result;
use crate::optim::sgd::check_gradient;

pub const DEFAULT_ADAGRAD_EPS: f64 = 1e-10;

/// `G ← G + g²`, `w ← w − γg / (√G + ε)`.
pub fn adagrad_step(
    params: &mut [f64],
    grads: &[f64],
    accumulator: &mut [f64],
    lr: f64,
    eps: f64,
) -> Result<()> {
    check_gradient(grads)?;
    for ((w, &g), acc) in params.iter_mut().zip(grads).zip(accumulator.iter_mut()) {
        *acc += g * g;
        *w -= lr * g / (acc.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_step_normalizes() {
        let mut w = [0.0];
        let mut acc = [0.0];
        adagrad_step(&mut w, &[4.0], &mut acc, 0.1, DEFAULT_ADAGRAD_EPS).unwrap();
        assert_abs_diff_eq!(w[0], -0.1, epsilon = 1e-10);
        assert_eq!(acc[0], 16.0);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut w = [2.0];
        let mut acc = [3.0];
        adagrad_step(&mut w, &[0.0], &mut acc, 0.1, DEFAULT_ADAGRAD_EPS).unwrap();
        assert_eq!((w[0], acc[0]), (2.0, 3.0));
    }

    #[test]
    fn second_step_uses_accumulator() {
        let mut w = [0.0];
        let mut acc = [0.0];
        adagrad_step(&mut w, &[1.0], &mut acc, 1.0, DEFAULT_ADAGRAD_EPS).unwrap();
        let before = w[0];
        adagrad_step(&mut w, &[1.0], &mut acc, 1.0, DEFAULT_ADAGRAD_EPS).unwrap();
        assert_abs_diff_eq!(w[0] - before, -1.0 / 2f64.sqrt(), epsilon = 1e-9);
    }
}
