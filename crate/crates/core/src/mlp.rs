//! Conventional dense layer `σ(W·x + b)` used as the comparison baseline.

use std::fmt;
use std::str::FromStr;

use crate::error::{arg_err, shape_err, Error, Result};
use crate::kan::{BatchNorm1d, Mode, ParamGroup, ParamSlot};
use crate::numerics::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    fn slope(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let a = self.apply(z);
                a * (1.0 - a)
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => arg_err(format!("unknown activation '{other}'")),
        }
    }
}

#[derive(Clone, Debug)]
struct MlpCache {
    x_hat: Matrix,
    pre: Matrix,
}

#[derive(Clone, Debug)]
pub struct MlpLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub bn: Option<BatchNorm1d>,
    grad_weight: Matrix,
    grad_bias: Vec<f64>,
    cache: Option<MlpCache>,
}

impl MlpLayer {
    /// `W ~ U(−1/√n_in, 1/√n_in)`, `b = 0`.
    pub fn new(
        n_in: usize,
        n_out: usize,
        activation: Activation,
        batchnorm: bool,
        rng: &mut Rng,
    ) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return arg_err("layer dimensions must be positive");
        }
        let bound = 1.0 / (n_in as f64).sqrt();
        let weight = Matrix::new(n_out, n_in, rng.uniform(-bound, bound, n_in * n_out)?)?;
        Self::from_parts(
            weight,
            vec![0.0; n_out],
            activation,
            batchnorm.then(|| BatchNorm1d::new(n_in)),
        )
    }

    pub fn from_parts(
        weight: Matrix,
        bias: Vec<f64>,
        activation: Activation,
        bn: Option<BatchNorm1d>,
    ) -> Result<Self> {
        let (n_out, n_in) = weight.shape();
        if bias.len() != n_out {
            return shape_err(format!("{} biases for {n_out} outputs", bias.len()));
        }
        if let Some(bn) = &bn {
            if bn.features() != n_in {
                return shape_err(format!("batch norm over {} features for {n_in} inputs", bn.features()));
            }
        }
        Ok(Self {
            grad_weight: Matrix::zeros(n_out, n_in),
            grad_bias: vec![0.0; n_out],
            weight,
            bias,
            activation,
            bn,
            cache: None,
        })
    }

    pub fn n_in(&self) -> usize {
        self.weight.cols()
    }

    pub fn n_out(&self) -> usize {
        self.weight.rows()
    }

    pub fn grad_weight(&self) -> &Matrix {
        &self.grad_weight
    }

    pub fn grad_bias(&self) -> &[f64] {
        &self.grad_bias
    }

    pub fn set_mode(&mut self, mode: Mode) {
        if let Some(bn) = &mut self.bn {
            bn.set_mode(mode);
        }
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_in() {
            return shape_err(format!("layer expects {} inputs, got {}", self.n_in(), x.cols()));
        }
        Ok(())
    }

    /// `X̂·Wᵀ + b`, each entry summed over inputs in ascending order.
    fn pre_activation(&self, x_hat: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(x_hat.rows(), self.n_out());
        for b in 0..x_hat.rows() {
            let x = x_hat.row(b);
            for o in 0..self.n_out() {
                let mut acc = 0.0;
                for (xj, wj) in x.iter().zip(self.weight.row(o)) {
                    acc += xj * wj;
                }
                z[(b, o)] = acc + self.bias[o];
            }
        }
        z
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let x_hat = match &mut self.bn {
            Some(bn) => bn.forward(x)?,
            None => x.clone(),
        };
        let pre = self.pre_activation(&x_hat);
        let out = pre.map(|z| self.activation.apply(z));
        self.cache = Some(MlpCache { x_hat, pre });
        Ok(out)
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let x_hat = match &self.bn {
            Some(bn) => bn.infer(x)?,
            None => x.clone(),
        };
        Ok(self.pre_activation(&x_hat).map(|z| self.activation.apply(z)))
    }

    pub fn backward(&mut self, d_out: &Matrix) -> Result<Matrix> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("MLP backward before forward".into()))?;
        if d_out.shape() != cache.pre.shape() {
            return shape_err(format!(
                "upstream gradient {:?} does not match forward output {:?}",
                d_out.shape(),
                cache.pre.shape()
            ));
        }
        let (batch, n_out, n_in) = (d_out.rows(), self.n_out(), self.n_in());
        let mut d_pre = Matrix::zeros(batch, n_out);
        for b in 0..batch {
            for o in 0..n_out {
                d_pre[(b, o)] = d_out[(b, o)] * self.activation.slope(cache.pre[(b, o)]);
            }
        }
        let mut grad_weight = Matrix::zeros(n_out, n_in);
        let mut grad_bias = vec![0.0; n_out];
        let mut d_x_hat = Matrix::zeros(batch, n_in);
        for b in 0..batch {
            let x = cache.x_hat.row(b);
            for o in 0..n_out {
                let g = d_pre[(b, o)];
                grad_bias[o] += g;
                for (gw, xj) in grad_weight.row_mut(o).iter_mut().zip(x) {
                    *gw += g * xj;
                }
                for (dx, wj) in d_x_hat.row_mut(b).iter_mut().zip(self.weight.row(o)) {
                    *dx += g * wj;
                }
            }
        }
        self.grad_weight = grad_weight;
        self.grad_bias = grad_bias;
        match &mut self.bn {
            Some(bn) => bn.backward(&d_x_hat),
            None => Ok(d_x_hat),
        }
    }

    pub fn params(&mut self) -> Vec<ParamSlot<'_>> {
        let mut slots = vec![
            ParamSlot {
                group: ParamGroup::Weight,
                value: self.weight.as_mut_slice(),
                grad: self.grad_weight.as_slice(),
            },
            ParamSlot {
                group: ParamGroup::Bias,
                value: &mut self.bias,
                grad: &self.grad_bias,
            },
        ];
        if let Some(bn) = &mut self.bn {
            slots.extend(bn.params());
        }
        slots
    }
}
