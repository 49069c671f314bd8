use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::batchnorm::Mode;
use super::{ParamGroup, ParamSlot, WavKanLayer};
use crate::error::{arg_err, shape_err, Error, Result};
use crate::mlp::{Activation, MlpLayer};
use crate::numerics::{Matrix, Rng};
use crate::wavelets::WaveletKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    WavKan,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::WavKan => "wavkan",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wavkan" | "wav-kan" | "wav_kan" => Ok(ModelKind::WavKan),
            "mlp" => Ok(ModelKind::Mlp),
            other => arg_err(format!("unknown model '{other}' (expected wavkan or mlp)")),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Layer {
    WavKan(WavKanLayer),
    Mlp(MlpLayer),
}

impl Layer {
    pub fn n_in(&self) -> usize {
        match self {
            Layer::WavKan(l) => l.n_in(),
            Layer::Mlp(l) => l.n_in(),
        }
    }

    pub fn n_out(&self) -> usize {
        match self {
            Layer::WavKan(l) => l.n_out(),
            Layer::Mlp(l) => l.n_out(),
        }
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::WavKan(l) => l.forward(x),
            Layer::Mlp(l) => l.forward(x),
        }
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::WavKan(l) => l.infer(x),
            Layer::Mlp(l) => l.infer(x),
        }
    }

    pub fn backward(&mut self, d_out: &Matrix) -> Result<Matrix> {
        match self {
            Layer::WavKan(l) => l.backward(d_out),
            Layer::Mlp(l) => l.backward(d_out),
        }
    }

    pub fn set_mode(&mut self, mode: Mode) {
        match self {
            Layer::WavKan(l) => l.set_mode(mode),
            Layer::Mlp(l) => l.set_mode(mode),
        }
    }

    pub fn params(&mut self) -> Vec<ParamSlot<'_>> {
        match self {
            Layer::WavKan(l) => l.params(),
            Layer::Mlp(l) => l.params(),
        }
    }

    fn has_batchnorm(&self) -> bool {
        match self {
            Layer::WavKan(l) => l.bn.is_some(),
            Layer::Mlp(l) => l.bn.is_some(),
        }
    }
}

/// Learnable and non-learnable parameter totals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamCount {
    pub learnable: usize,
    pub by_group: BTreeMap<ParamGroup, usize>,
    /// Batch-norm running mean and variance entries.
    pub non_learnable: usize,
}

impl ParamCount {
    pub fn group(&self, group: ParamGroup) -> usize {
        self.by_group.get(&group).copied().unwrap_or(0)
    }

    /// Edge parameters `w`, `τ`, `s` of Wav-KAN layers.
    pub fn wavelet_params(&self) -> usize {
        self.group(ParamGroup::Weight) + self.group(ParamGroup::Translation) + self.group(ParamGroup::Scale)
    }
}

/// Ordered stack of layers whose widths chain through `layout`.
#[derive(Clone, Debug)]
pub struct Network {
    layers: Vec<Layer>,
    layout: Vec<usize>,
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Argument("a network needs at least one layer".into()))?;
        let mut layout = vec![first.n_in()];
        for (k, layer) in layers.iter().enumerate() {
            let prev = *layout.last().expect("non-empty");
            if layer.n_in() != prev {
                return shape_err(format!(
                    "layer {k} takes {} inputs but the previous layer emits {prev}",
                    layer.n_in()
                ));
            }
            layout.push(layer.n_out());
        }
        Ok(Self { layers, layout })
    }

    pub fn wavkan(layout: &[usize], kind: WaveletKind, batchnorm: bool, rng: &mut Rng) -> Result<Self> {
        check_layout(layout)?;
        let layers = layout
            .windows(2)
            .map(|w| WavKanLayer::new(w[0], w[1], kind, batchnorm, rng).map(Layer::WavKan))
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    /// ReLU hidden layers and an identity output layer.
    pub fn mlp(layout: &[usize], batchnorm: bool, rng: &mut Rng) -> Result<Self> {
        check_layout(layout)?;
        let last = layout.len() - 2;
        let layers = layout
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let act = if k == last { Activation::Identity } else { Activation::Relu };
                MlpLayer::new(w[0], w[1], act, batchnorm, rng).map(Layer::Mlp)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn build(model: ModelKind, layout: &[usize], kind: WaveletKind, batchnorm: bool, rng: &mut Rng) -> Result<Self> {
        match model {
            ModelKind::WavKan => Self::wavkan(layout, kind, batchnorm, rng),
            ModelKind::Mlp => Self::mlp(layout, batchnorm, rng),
        }
    }

    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layout[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layout.last().expect("layout has at least two entries")
    }

    pub fn set_mode(&mut self, mode: Mode) {
        for layer in &mut self.layers {
            layer.set_mode(mode);
        }
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return shape_err(format!(
                "network expects {} features, got {}",
                self.input_dim(),
                x.cols()
            ));
        }
        Ok(())
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    /// Eval-mode forward through every layer. Leaves all state untouched.
    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    pub fn backward(&mut self, d_out: &Matrix) -> Result<Matrix> {
        let mut g = d_out.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    /// Every learnable tensor, layer by layer in declaration order.
    pub fn params(&mut self) -> Vec<ParamSlot<'_>> {
        self.layers.iter_mut().flat_map(Layer::params).collect()
    }

    pub fn clamp_scales(&mut self) {
        for layer in &mut self.layers {
            if let Layer::WavKan(l) = layer {
                l.clamp_scales();
            }
        }
    }

    pub fn param_count(&self) -> ParamCount {
        let mut by_group = BTreeMap::new();
        let mut non_learnable = 0;
        for layer in &self.layers {
            let (n_in, n_out) = (layer.n_in(), layer.n_out());
            let mut add = |g, n| *by_group.entry(g).or_insert(0) += n;
            match layer {
                Layer::WavKan(_) => {
                    add(ParamGroup::Weight, n_in * n_out);
                    add(ParamGroup::Translation, n_in * n_out);
                    add(ParamGroup::Scale, n_in * n_out);
                }
                Layer::Mlp(_) => {
                    add(ParamGroup::Weight, n_in * n_out);
                    add(ParamGroup::Bias, n_out);
                }
            }
            if layer.has_batchnorm() {
                add(ParamGroup::BnGamma, n_in);
                add(ParamGroup::BnBeta, n_in);
                non_learnable += 2 * n_in;
            }
        }
        ParamCount {
            learnable: by_group.values().sum(),
            by_group,
            non_learnable,
        }
    }
}

fn check_layout(layout: &[usize]) -> Result<()> {
    if layout.len() < 2 {
        return arg_err(format!("layout needs at least two node counts, got {layout:?}"));
    }
    if layout.contains(&0) {
        return arg_err(format!("layout entries must be positive, got {layout:?}"));
    }
    Ok(())
}
