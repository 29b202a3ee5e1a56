use crate::error::{Error, Result};

pub(crate) fn check_gradient(grads: &[f64]) -> Result<()> {
    match grads.iter().position(|g| !g.is_finite()) {
        Some(i) => Err(Error::Diverged(format!("non-finite gradient at coordinate {i}"))),
        None => Ok(()),
    }
}

/// Decoupled weight decay followed by a heavy-ball step:
/// `w ← (1 − λ)w`, `v ← μv + g`, `w ← w − γv`.
pub fn sgd_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    check_gradient(grads)?;
    let shrink = 1.0 - weight_decay;
    for ((w, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *w *= shrink;
        *v = momentum * *v + g;
        *w -= lr * *v;
    }
    Ok(())
}
