/// Poly learning-rate decay, `γ_t = γ_0 (1 − t/T)^p`; zero once `t ≥ T`.
pub fn poly_decay(initial_lr: f64, step: u64, total_steps: u64, power: f64) -> f64 {
    if step >= total_steps {
        return 0.0;
    }
    initial_lr * (1.0 - step as f64 / total_steps as f64).powf(power)
}

/// Early-stopping rule on a per-epoch validation loss history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopping {
    /// Non-improving epochs tolerated; training stops on the next one.
    pub patience: usize,
    pub max_epochs: usize,
    /// An epoch improves only if it beats the best loss by this fraction.
    pub rel_delta: f64,
}

impl EarlyStopping {
    pub fn new(max_epochs: usize) -> Self {
        Self {
            patience: 2,
            max_epochs,
            rel_delta: 1e-4,
        }
    }

    pub fn should_stop(&self, val_losses: &[f64]) -> bool {
        early_stop(val_losses, self.patience, self.max_epochs, self.rel_delta)
    }
}

/// True once more than `patience` consecutive epochs failed to improve the
/// best loss by `rel_delta` (relative), or `max_epochs` have run. A
/// non-finite loss always stops.
pub fn early_stop(val_losses: &[f64], patience: usize, max_epochs: usize, rel_delta: f64) -> bool {
    let Some((&first, rest)) = val_losses.split_first() else {
        return false;
    };
    if val_losses.len() >= max_epochs || val_losses.iter().any(|l| !l.is_finite()) {
        return true;
    }
    let mut best = first;
    let mut stale = 0;
    for &loss in rest {
        if best - loss > rel_delta * best.abs() {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
        }
    }
    stale > patience
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_endpoints() {
        assert_eq!(poly_decay(0.3, 0, 100, 2.0), 0.3);
        assert_eq!(poly_decay(0.3, 100, 100, 2.0), 0.0);
        assert_eq!(poly_decay(0.3, 150, 100, 2.0), 0.0);
        assert_eq!(poly_decay(0.4, 50, 100, 1.0), 0.2);
    }

    #[test]
    fn plateau_stops_after_patience() {
        assert!(!early_stop(&[1.0, 1.0, 1.0], 2, 100, 1e-4));
        assert!(early_stop(&[1.0, 1.0, 1.0, 1.0], 2, 100, 1e-4));
    }

    #[test]
    fn improving_runs_until_max_epochs() {
        let losses: Vec<f64> = (0..10).map(|i| 1.0 / (i + 1) as f64).collect();
        for n in 1..10 {
            assert!(!early_stop(&losses[..n], 2, 10, 1e-4));
        }
        assert!(early_stop(&losses, 2, 10, 1e-4));
    }

    #[test]
    fn relative_threshold() {
        // 0.5 -> 0.49999 improves by 2e-5 relative, below 1e-4
        let h = [1.0, 0.5, 0.49999, 0.49998, 0.49997];
        assert!(!early_stop(&h[..4], 2, 100, 1e-4));
        assert!(early_stop(&h, 2, 100, 1e-4));
        assert!(!early_stop(&h[..4], 2, 100, 1e-6));
    }

    #[test]
    fn divergence_stops() {
        assert!(early_stop(&[1.0, f64::NAN], 2, 100, 1e-4));
        assert!(!early_stop(&[], 2, 100, 1e-4));
    }
}
