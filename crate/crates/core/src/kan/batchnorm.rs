use super::{ParamGroup, ParamSlot};
use crate::error::{arg_err, shape_err, Error, Result};
use crate::numerics::Matrix;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug)]
struct BnCache {
    x_hat: Matrix,
    inv_std: Vec<f64>,
    mode: Mode,
}

/// Per-feature batch normalization with a learnable affine map.
///
/// Train mode standardizes with the biased batch variance and folds the
/// batch statistics into the running estimates with momentum 0.1. Eval mode
/// standardizes with the running estimates.
#[derive(Clone, Debug)]
pub struct BatchNorm1d {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
    mode: Mode,
    grad_gamma: Vec<f64>,
    grad_beta: Vec<f64>,
    cache: Option<BnCache>,
}

impl BatchNorm1d {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
            mode: Mode::Train,
            grad_gamma: vec![0.0; features],
            grad_beta: vec![0.0; features],
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn grad_gamma(&self) -> &[f64] {
        &self.grad_gamma
    }

    pub fn grad_beta(&self) -> &[f64] {
        &self.grad_beta
    }

    fn check_features(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.features() {
            return shape_err(format!(
                "batch norm over {} features got {} columns",
                self.features(),
                x.cols()
            ));
        }
        Ok(())
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        self.check_features(x)?;
        let (x_hat, inv_std) = match self.mode {
            Mode::Train => {
                let (mean, var) = batch_stats(x)?;
                let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
                let x_hat = standardize(x, &mean, &inv_std);
                let m = self.momentum;
                for f in 0..self.features() {
                    self.running_mean[f] = (1.0 - m) * self.running_mean[f] + m * mean[f];
                    self.running_var[f] = (1.0 - m) * self.running_var[f] + m * var[f];
                }
                (x_hat, inv_std)
            }
            Mode::Eval => {
                let inv_std = self.running_inv_std();
                (standardize(x, &self.running_mean, &inv_std), inv_std)
            }
        };
        let y = self.affine(&x_hat);
        self.cache = Some(BnCache {
            x_hat,
            inv_std,
            mode: self.mode,
        });
        Ok(y)
    }

    /// Eval-mode normalization that leaves the layer untouched.
    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        self.check_features(x)?;
        Ok(self.affine(&standardize(x, &self.running_mean, &self.running_inv_std())))
    }

    fn running_inv_std(&self) -> Vec<f64> {
        self.running_var
            .iter()
            .map(|v| 1.0 / (v + self.eps).sqrt())
            .collect()
    }

    fn affine(&self, x_hat: &Matrix) -> Matrix {
        let mut y = x_hat.clone();
        for b in 0..y.rows() {
            for (f, v) in y.row_mut(b).iter_mut().enumerate() {
                *v = self.gamma[f] * *v + self.beta[f];
            }
        }
        y
    }

    /// Back-propagates `d_y`, storing the affine gradients and returning the
    /// gradient with respect to the layer input.
    pub fn backward(&mut self, d_y: &Matrix) -> Result<Matrix> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("batch norm backward before forward".into()))?;
        if d_y.shape() != cache.x_hat.shape() {
            return shape_err(format!(
                "upstream gradient {:?} does not match cached batch {:?}",
                d_y.shape(),
                cache.x_hat.shape()
            ));
        }
        let (batch, features) = d_y.shape();
        let mut sum_dy = vec![0.0; features];
        let mut sum_dy_xhat = vec![0.0; features];
        for b in 0..batch {
            for f in 0..features {
                let g = d_y[(b, f)];
                sum_dy[f] += g;
                sum_dy_xhat[f] += g * cache.x_hat[(b, f)];
            }
        }
        let mut dx = Matrix::zeros(batch, features);
        match cache.mode {
            Mode::Train => {
                let n = batch as f64;
                for b in 0..batch {
                    for f in 0..features {
                        let scale = self.gamma[f] * cache.inv_std[f] / n;
                        dx[(b, f)] = scale
                            * (n * d_y[(b, f)] - sum_dy[f] - cache.x_hat[(b, f)] * sum_dy_xhat[f]);
                    }
                }
            }
            Mode::Eval => {
                for b in 0..batch {
                    for f in 0..features {
                        dx[(b, f)] = d_y[(b, f)] * self.gamma[f] * cache.inv_std[f];
                    }
                }
            }
        }
        self.grad_gamma = sum_dy_xhat;
        self.grad_beta = sum_dy;
        Ok(dx)
    }

    pub fn params(&mut self) -> [ParamSlot<'_>; 2] {
        [
            ParamSlot {
                group: ParamGroup::BnGamma,
                value: &mut self.gamma,
                grad: &self.grad_gamma,
            },
            ParamSlot {
                group: ParamGroup::BnBeta,
                value: &mut self.beta,
                grad: &self.grad_beta,
            },
        ]
    }
}

/// Per-feature mean and biased variance.
fn batch_stats(x: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let (batch, features) = x.shape();
    if batch < 2 {
        return arg_err(format!("train-mode batch norm needs a batch of at least 2, got {batch}"));
    }
    let n = batch as f64;
    let mut mean = vec![0.0; features];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; features];
    for row in x.iter_rows() {
        for f in 0..features {
            let d = row[f] - mean[f];
            var[f] += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    Ok((mean, var))
}

fn standardize(x: &Matrix, mean: &[f64], inv_std: &[f64]) -> Matrix {
    let mut out = x.clone();
    for b in 0..out.rows() {
        for (f, v) in out.row_mut(b).iter_mut().enumerate() {
            *v = (*v - mean[f]) * inv_std[f];
        }
    }
    out
}
