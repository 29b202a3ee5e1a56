use std::f64::consts::PI;

use rand::Rng;

use super::{gaussian_vec, train_size, Dataset, Validation};

const INPUTS: usize = 2;
const HIDDEN: usize = 32;
const CLASSES: usize = 2;

/// Two interleaved spirals, one per class, classified by a
/// 2 → 32 tanh → 2 softmax perceptron.
///
/// Parameter layout: `W1` (hidden × inputs, row-major), `b1`, `W2`
/// (classes × hidden, row-major), `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) train: Dataset,
    pub(crate) val: Dataset,
}

const W1: usize = 0;
const B1: usize = W1 + HIDDEN * INPUTS;
const W2: usize = B1 + HIDDEN;
const B2: usize = W2 + CLASSES * HIDDEN;
const DIM: usize = B2 + CLASSES;

struct Forward {
    hidden: [f64; HIDDEN],
    probs: [f64; CLASSES],
    loss: f64,
}

impl Mlp {
    pub(crate) fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut inputs = Vec::with_capacity(n * INPUTS);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let t: f64 = rng.random_range(0.05..1.0);
            let angle = 3.0 * PI * t + label as f64 * PI;
            let noise = gaussian_vec(rng, 2, 0.03);
            inputs.push(t * angle.cos() + noise[0]);
            inputs.push(t * angle.sin() + noise[1]);
            labels.push(label);
        }
        let data = Dataset {
            features: INPUTS,
            inputs,
            labels,
        };
        let (train, val) = data.split(train_size(n), rng);
        Self { train, val }
    }

    pub fn dim(&self) -> usize {
        DIM
    }

    /// Gaussian weights scaled by `1/√fan_in`, zero biases.
    pub(crate) fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; DIM];
        p[W1..B1].copy_from_slice(&gaussian_vec(rng, HIDDEN * INPUTS, (INPUTS as f64).powf(-0.5)));
        p[W2..B2].copy_from_slice(&gaussian_vec(rng, CLASSES * HIDDEN, (HIDDEN as f64).powf(-0.5)));
        p
    }

    fn forward(&self, p: &[f64], x: &[f64], label: usize) -> Forward {
        let mut hidden = [0.0; HIDDEN];
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &p[W1 + j * INPUTS..W1 + (j + 1) * INPUTS];
            *h = (row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + p[B1 + j]).tanh();
        }
        let mut logits = [0.0; CLASSES];
        for (k, z) in logits.iter_mut().enumerate() {
            let row = &p[W2 + k * HIDDEN..W2 + (k + 1) * HIDDEN];
            *z = row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + p[B2 + k];
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
        let mut probs = [0.0; CLASSES];
        for (q, z) in probs.iter_mut().zip(&logits) {
            *q = (z - norm).exp();
        }
        Forward {
            hidden,
            probs,
            loss: norm - logits[label],
        }
    }

    pub(crate) fn loss_and_grad(&self, p: &[f64], batch: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; DIM];
        let mut loss = 0.0;
        for &i in batch {
            let x = self.train.row(i);
            let label = self.train.labels[i];
            let f = self.forward(p, x, label);
            loss += f.loss;
            let mut dlogits = f.probs;
            dlogits[label] -= 1.0;
            let mut dhidden = [0.0; HIDDEN];
            for (k, dz) in dlogits.iter().enumerate() {
                for j in 0..HIDDEN {
                    grad[W2 + k * HIDDEN + j] += dz * f.hidden[j];
                    dhidden[j] += dz * p[W2 + k * HIDDEN + j];
                }
                grad[B2 + k] += dz;
            }
            for j in 0..HIDDEN {
                let da = dhidden[j] * (1.0 - f.hidden[j] * f.hidden[j]);
                for (m, xm) in x.iter().enumerate() {
                    grad[W1 + j * INPUTS + m] += da * xm;
                }
                grad[B1 + j] += da;
            }
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    /// Mean cross-entropy and accuracy on the validation split.
    pub(crate) fn validation(&self, p: &[f64]) -> Validation {
        let (mut loss, mut correct) = (0.0, 0usize);
        for i in 0..self.val.len() {
            let label = self.val.labels[i];
            let f = self.forward(p, self.val.row(i), label);
            loss += f.loss;
            let predicted = if f.probs[1] > f.probs[0] { 1 } else { 0 };
            if predicted == label {
                correct += 1;
            }
        }
        let n = self.val.len() as f64;
        Validation {
            loss: loss / n,
            objective: correct as f64 / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::tasks::TaskInstance;

    #[test]
    fn parameter_count() {
        assert_eq!(TaskInstance::mlp(0).unwrap().dim(), 162);
    }

    #[test]
    fn untrained_accuracy_is_chance() {
        let t = TaskInstance::mlp(1).unwrap();
        let mean = (0..40)
            .map(|s| t.evaluate(&t.init_params(s)).unwrap())
            .sum::<f64>()
            / 40.0;
        assert!((mean - 0.5).abs() < 0.05, "{mean}");
    }

    #[test]
    fn losses_are_positive() {
        let t = TaskInstance::mlp(2).unwrap();
        for s in 0..10 {
            let p = t.init_params(s);
            assert!(t.validation(&p).unwrap().loss > 0.0);
            for b in 0..t.batches_per_epoch() {
                assert!(t.minibatch_loss(&p, 0, b).unwrap() > 0.0);
            }
        }
    }
}
