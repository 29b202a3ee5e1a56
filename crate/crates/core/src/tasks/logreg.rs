use rand::Rng;

use super::{gaussian_vec, sigmoid, softplus, train_size, Dataset};

/// Binary logistic regression on two unit-covariance Gaussian clusters at
/// `±m`, `m = (2/√d)·1`, so the means sit 4 standard deviations apart.
/// Parameters are the weights followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    pub(crate) train: Dataset,
    pub(crate) val: Dataset,
}

impl LogReg {
    pub(crate) fn new<R: Rng + ?Sized>(n: usize, features: usize, rng: &mut R) -> Self {
        let shift = 2.0 / (features as f64).sqrt();
        let mut inputs = Vec::with_capacity(n * features);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let sign = if label == 1 { 1.0 } else { -1.0 };
            inputs.extend(gaussian_vec(rng, features, 1.0).into_iter().map(|z| z + sign * shift));
            labels.push(label);
        }
        let data = Dataset {
            features,
            inputs,
            labels,
        };
        let (train, val) = data.split(train_size(n), rng);
        Self { train, val }
    }

    pub fn dim(&self) -> usize {
        self.train.features + 1
    }

    pub(crate) fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut w = gaussian_vec(rng, self.train.features, 1.0 / (self.train.features as f64).sqrt());
        w.push(0.0);
        w
    }

    fn logit(&self, params: &[f64], x: &[f64]) -> f64 {
        let d = x.len();
        params[..d].iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + params[d]
    }

    /// Mean cross-entropy `softplus(z) − y·z`.
    fn mean_loss(&self, data: &Dataset, params: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
        let (mut sum, mut count) = (0.0, 0usize);
        for i in idx {
            let z = self.logit(params, data.row(i));
            sum += softplus(z) - data.labels[i] as f64 * z;
            count += 1;
        }
        sum / count as f64
    }

    pub(crate) fn loss_and_grad(&self, params: &[f64], batch: &[usize]) -> (f64, Vec<f64>) {
        let d = self.train.features;
        let mut grad = vec![0.0; d + 1];
        for &i in batch {
            let x = self.train.row(i);
            let r = sigmoid(self.logit(params, x)) - self.train.labels[i] as f64;
            grad[..d].iter_mut().zip(x).for_each(|(g, x)| *g += r * x);
            grad[d] += r;
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        let loss = self.mean_loss(&self.train, params, batch.iter().copied());
        (loss, grad)
    }

    pub fn validation_loss(&self, params: &[f64]) -> f64 {
        self.mean_loss(&self.val, params, 0..self.val.len())
    }

    pub fn validation_accuracy(&self, params: &[f64]) -> f64 {
        let correct = (0..self.val.len())
            .filter(|&i| (self.logit(params, self.val.row(i)) > 0.0) == (self.val.labels[i] == 1))
            .count();
        correct as f64 / self.val.len() as f64
    }

    pub fn train_len(&self) -> usize {
        self.train.len()
    }

    pub fn val_len(&self) -> usize {
        self.val.len()
    }
}
