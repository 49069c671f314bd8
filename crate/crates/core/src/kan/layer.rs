use rayon::prelude::*;

use super::batchnorm::{BatchNorm1d, Mode};
use super::{ParamGroup, ParamSlot};
use crate::error::{shape_err, Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::wavelets::WaveletKind;

/// Lower bound enforced on every scale after each update.
pub const MIN_SCALE: f64 = 1e-3;

/// Forward intermediates, laid out `[batch][n_out][n_in]`.
#[derive(Clone, Debug, Default)]
struct EdgeCache {
    batch: usize,
    x_hat: Option<Matrix>,
    u: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
}

/// One Wav-KAN layer: every edge `(i, j)` applies
/// `w[i,j] · ψ((x̂_j − τ[i,j]) / s[i,j])` and node `i` sums its edges.
/// `x̂` is the optionally batch-normalized input.
#[derive(Clone, Debug)]
pub struct WavKanLayer {
    n_in: usize,
    n_out: usize,
    kind: WaveletKind,
    pub w: Matrix,
    pub tau: Matrix,
    pub s: Matrix,
    pub bn: Option<BatchNorm1d>,
    grad_w: Matrix,
    grad_tau: Matrix,
    grad_s: Matrix,
    cache: EdgeCache,
}

impl WavKanLayer {
    /// `w ~ U(−1/√n_in, 1/√n_in)`, `τ = 0`, `s = 1`.
    pub fn new(n_in: usize, n_out: usize, kind: WaveletKind, batchnorm: bool, rng: &mut Rng) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return Err(Error::Argument("layer dimensions must be positive".into()));
        }
        let bound = 1.0 / (n_in as f64).sqrt();
        let w = Matrix::new(n_out, n_in, rng.uniform(-bound, bound, n_out * n_in)?)?;
        Self::from_parts(
            kind,
            w,
            Matrix::zeros(n_out, n_in),
            Matrix::ones(n_out, n_in),
            batchnorm.then(|| BatchNorm1d::new(n_in)),
        )
    }

    pub fn from_parts(
        kind: WaveletKind,
        w: Matrix,
        tau: Matrix,
        s: Matrix,
        bn: Option<BatchNorm1d>,
    ) -> Result<Self> {
        let (n_out, n_in) = w.shape();
        if tau.shape() != w.shape() || s.shape() != w.shape() {
            return shape_err(format!(
                "w {:?}, tau {:?} and s {:?} must share one shape",
                w.shape(),
                tau.shape(),
                s.shape()
            ));
        }
        if let Some(bn) = &bn {
            if bn.features() != n_in {
                return shape_err(format!("batch norm over {} features for {n_in} inputs", bn.features()));
            }
        }
        let mut layer = Self {
            n_in,
            n_out,
            kind,
            w,
            tau,
            s,
            bn,
            grad_w: Matrix::zeros(n_out, n_in),
            grad_tau: Matrix::zeros(n_out, n_in),
            grad_s: Matrix::zeros(n_out, n_in),
            cache: EdgeCache::default(),
        };
        layer.clamp_scales();
        Ok(layer)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn kind(&self) -> &WaveletKind {
        &self.kind
    }

    pub fn grad_w(&self) -> &Matrix {
        &self.grad_w
    }

    pub fn grad_tau(&self) -> &Matrix {
        &self.grad_tau
    }

    pub fn grad_s(&self) -> &Matrix {
        &self.grad_s
    }

    pub fn set_mode(&mut self, mode: Mode) {
        if let Some(bn) = &mut self.bn {
            bn.set_mode(mode);
        }
    }

    /// Edge function `w·ψ((t − τ)/s)` of edge `(out_node, in_node)`, with
    /// `t` taken after normalization.
    pub fn edge_value(&self, out_node: usize, in_node: usize, t: f64) -> f64 {
        let (i, j) = (out_node, in_node);
        self.w[(i, j)] * self.kind.value_and_slope((t - self.tau[(i, j)]) / self.s[(i, j)]).0
    }

    pub fn clamp_scales(&mut self) {
        for v in self.s.as_mut_slice() {
            if *v < MIN_SCALE {
                *v = MIN_SCALE;
            }
        }
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_in {
            return shape_err(format!("layer expects {} inputs, got {}", self.n_in, x.cols()));
        }
        Ok(())
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let x_hat = match &mut self.bn {
            Some(bn) => bn.forward(x)?,
            None => x.clone(),
        };
        let batch = x.rows();
        let (n_in, n_out) = (self.n_in, self.n_out);
        let edges = n_in * n_out;
        let cache = &mut self.cache;
        for buf in [&mut cache.u, &mut cache.psi, &mut cache.dpsi] {
            buf.clear();
            buf.resize(batch * edges, 0.0);
        }
        let mut out = Matrix::zeros(batch, n_out);
        if edges > 0 && batch > 0 {
            let (w, tau, s, kind) = (&self.w, &self.tau, &self.s, &self.kind);
            out.as_mut_slice()
                .par_chunks_mut(n_out)
                .zip(cache.u.par_chunks_mut(edges))
                .zip(cache.psi.par_chunks_mut(edges))
                .zip(cache.dpsi.par_chunks_mut(edges))
                .enumerate()
                .for_each(|(b, (((out_row, u), psi), dpsi))| {
                    let x_row = x_hat.row(b);
                    for i in 0..n_out {
                        let (w_i, tau_i, s_i) = (w.row(i), tau.row(i), s.row(i));
                        let mut acc = 0.0;
                        for j in 0..n_in {
                            let e = i * n_in + j;
                            let arg = (x_row[j] - tau_i[j]) / s_i[j];
                            let (p, dp) = kind.value_and_slope(arg);
                            u[e] = arg;
                            psi[e] = p;
                            dpsi[e] = dp;
                            acc += w_i[j] * p;
                        }
                        out_row[i] = acc;
                    }
                });
        }
        cache.batch = batch;
        cache.x_hat = Some(x_hat);
        Ok(out)
    }

    /// Eval-mode forward without caching or touching running statistics.
    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let x_hat = match &self.bn {
            Some(bn) => bn.infer(x)?,
            None => x.clone(),
        };
        let (n_in, n_out) = (self.n_in, self.n_out);
        let mut out = Matrix::zeros(x.rows(), n_out);
        if n_out == 0 {
            return Ok(out);
        }
        out.as_mut_slice()
            .par_chunks_mut(n_out)
            .enumerate()
            .for_each(|(b, out_row)| {
                let x_row = x_hat.row(b);
                for (i, o) in out_row.iter_mut().enumerate() {
                    let (w_i, tau_i, s_i) = (self.w.row(i), self.tau.row(i), self.s.row(i));
                    let mut acc = 0.0;
                    for j in 0..n_in {
                        acc += w_i[j] * self.kind.value_and_slope((x_row[j] - tau_i[j]) / s_i[j]).0;
                    }
                    *o = acc;
                }
            });
        Ok(out)
    }

    /// Stores gradients for `w`, `τ`, `s` (and the batch-norm affine, if
    /// present) and returns the gradient with respect to the layer input.
    ///
    /// With `u = (x̂ − τ)/s` each edge contributes `∂/∂w = ψ(u)`,
    /// `∂/∂τ = −(w/s)ψ′(u)`, `∂/∂s = −(w·u/s)ψ′(u)` and
    /// `∂/∂x̂ = (w/s)ψ′(u)`. Batch sums run in ascending batch order.
    pub fn backward(&mut self, d_out: &Matrix) -> Result<Matrix> {
        let cache = &self.cache;
        let x_hat = cache
            .x_hat
            .as_ref()
            .ok_or_else(|| Error::State("Wav-KAN backward before forward".into()))?;
        if d_out.shape() != (cache.batch, self.n_out) {
            return shape_err(format!(
                "upstream gradient {:?} does not match forward output ({}, {})",
                d_out.shape(),
                cache.batch,
                self.n_out
            ));
        }
        let (batch, n_in, n_out) = (cache.batch, self.n_in, self.n_out);
        let edges = n_in * n_out;
        let (w, s) = (&self.w, &self.s);

        let mut grad_w = Matrix::zeros(n_out, n_in);
        let mut grad_tau = Matrix::zeros(n_out, n_in);
        let mut grad_s = Matrix::zeros(n_out, n_in);
        if edges > 0 {
            grad_w
                .as_mut_slice()
                .par_chunks_mut(n_in)
                .zip(grad_tau.as_mut_slice().par_chunks_mut(n_in))
                .zip(grad_s.as_mut_slice().par_chunks_mut(n_in))
                .enumerate()
                .for_each(|(i, ((gw, gt), gs))| {
                    let (w_i, s_i) = (w.row(i), s.row(i));
                    for b in 0..batch {
                        let g = d_out[(b, i)];
                        let base = b * edges + i * n_in;
                        for j in 0..n_in {
                            let e = base + j;
                            gw[j] += g * cache.psi[e];
                            let common = g * w_i[j] / s_i[j] * cache.dpsi[e];
                            gt[j] -= common;
                            gs[j] -= common * cache.u[e];
                        }
                    }
                });
        }

        let mut d_x_hat = Matrix::zeros(batch, n_in);
        if n_in > 0 {
            d_x_hat
                .as_mut_slice()
                .par_chunks_mut(n_in)
                .enumerate()
                .for_each(|(b, dx)| {
                    for i in 0..n_out {
                        let g = d_out[(b, i)];
                        let (w_i, s_i) = (w.row(i), s.row(i));
                        let base = b * edges + i * n_in;
                        for j in 0..n_in {
                            dx[j] += g * w_i[j] / s_i[j] * cache.dpsi[base + j];
                        }
                    }
                });
        }
        debug_assert_eq!(x_hat.shape(), d_x_hat.shape());

        self.grad_w = grad_w;
        self.grad_tau = grad_tau;
        self.grad_s = grad_s;
        match &mut self.bn {
            Some(bn) => bn.backward(&d_x_hat),
            None => Ok(d_x_hat),
        }
    }

    /// Learnable tensors in declaration order: `w`, `τ`, `s`, then the
    /// batch-norm affine pair.
    pub fn params(&mut self) -> Vec<ParamSlot<'_>> {
        let mut slots = vec![
            ParamSlot {
                group: ParamGroup::Weight,
                value: self.w.as_mut_slice(),
                grad: self.grad_w.as_slice(),
            },
            ParamSlot {
                group: ParamGroup::Translation,
                value: self.tau.as_mut_slice(),
                grad: self.grad_tau.as_slice(),
            },
            ParamSlot {
                group: ParamGroup::Scale,
                value: self.s.as_mut_slice(),
                grad: self.grad_s.as_slice(),
            },
        ];
        if let Some(bn) = &mut self.bn {
            slots.extend(bn.params());
        }
        slots
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelets::WaveletFamily;

    fn random_layer(seed: u64, n_in: usize, n_out: usize, kind: WaveletKind, bn: bool) -> WavKanLayer {
        let mut rng = Rng::new(seed);
        let mut layer = WavKanLayer::new(n_in, n_out, kind, bn, &mut rng).unwrap();
        let n = n_in * n_out;
        layer.tau = Matrix::new(n_out, n_in, rng.uniform(-0.5, 0.5, n).unwrap()).unwrap();
        layer.s = Matrix::new(n_out, n_in, rng.uniform(0.6, 1.6, n).unwrap()).unwrap();
        layer
    }

    fn random_input(seed: u64, rows: usize, cols: usize) -> Matrix {
        Matrix::new(rows, cols, Rng::new(seed).uniform(-2.0, 2.0, rows * cols).unwrap()).unwrap()
    }

    #[test]
    fn single_edge_reduces_to_the_mother_wavelet() {
        for kind in WaveletKind::all_default() {
            let mut layer = WavKanLayer::from_parts(
                kind,
                Matrix::ones(1, 1),
                Matrix::zeros(1, 1),
                Matrix::ones(1, 1),
                None,
            )
            .unwrap();
            let out = layer.forward(&Matrix::filled(1, 1, 0.7)).unwrap();
            assert_eq!(out[(0, 0)], kind.psi(0.7).unwrap());
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut layer = random_layer(1, 3, 2, WaveletKind::morlet(), true);
        layer.w = Matrix::zeros(2, 3);
        let out = layer.forward(&random_input(2, 5, 3)).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    /// Triple loop: edge activations Ψ[b][i][j], then row sums over j.
    #[test]
    fn forward_equals_reference_loop() {
        let kind = WaveletKind::mexican_hat();
        let mut layer = random_layer(3, 3, 2, kind, false);
        let x = random_input(4, 4, 3);
        let out = layer.forward(&x).unwrap();
        for b in 0..4 {
            let mut edge_matrix = Matrix::zeros(2, 3);
            for i in 0..2 {
                for j in 0..3 {
                    let arg = (x[(b, j)] - layer.tau[(i, j)]) / layer.s[(i, j)];
                    edge_matrix[(i, j)] = layer.w[(i, j)] * kind.psi(arg).unwrap();
                }
            }
            let summed = edge_matrix.row_sum().unwrap();
            for i in 0..2 {
                assert_eq!(out[(b, i)], summed[(i, 0)]);
            }
        }
        assert_eq!(layer.infer(&x).unwrap(), out);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut a = random_layer(5, 20, 7, WaveletKind::dog(), true);
        let mut b = a.clone();
        let x = random_input(6, 33, 20);
        assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
    }

    #[test]
    fn translation_gradient_at_centre() {
        // u = 0 at x̂ = τ, so grad_τ = −(w/s)·ψ′(0)
        let mut layer = WavKanLayer::from_parts(
            WaveletKind::dog(),
            Matrix::filled(1, 1, 2.0),
            Matrix::filled(1, 1, 0.5),
            Matrix::ones(1, 1),
            None,
        )
        .unwrap();
        layer.forward(&Matrix::filled(1, 1, 0.5)).unwrap();
        layer.backward(&Matrix::ones(1, 1)).unwrap();
        assert_eq!(layer.grad_tau()[(0, 0)], -2.0);
        assert_eq!(layer.grad_s()[(0, 0)], 0.0);
        assert_eq!(layer.grad_w()[(0, 0)], 0.0);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut layer = random_layer(7, 4, 3, WaveletKind::shannon(), true);
        layer.forward(&random_input(8, 6, 4)).unwrap();
        let dx = layer.backward(&Matrix::zeros(6, 3)).unwrap();
        assert!(dx.as_slice().iter().all(|&v| v == 0.0));
        for slot in layer.params() {
            assert!(slot.grad.iter().all(|&v| v == 0.0), "{}", slot.group);
        }
    }

    #[test]
    fn errors() {
        let mut layer = random_layer(9, 3, 2, WaveletKind::dog(), true);
        assert!(matches!(layer.backward(&Matrix::zeros(2, 2)), Err(Error::State(_))));
        assert!(matches!(layer.forward(&Matrix::zeros(4, 2)), Err(Error::Shape(_))));
        assert!(matches!(layer.forward(&Matrix::zeros(1, 3)), Err(Error::Argument(_))));
        layer.forward(&random_input(1, 4, 3)).unwrap();
        assert!(matches!(layer.backward(&Matrix::zeros(5, 2)), Err(Error::Shape(_))));
        assert!(WavKanLayer::from_parts(
            WaveletKind::dog(),
            Matrix::zeros(2, 3),
            Matrix::zeros(3, 2),
            Matrix::zeros(2, 3),
            None
        )
        .is_err());
    }

    #[test]
    fn scales_are_clamped() {
        let layer = WavKanLayer::from_parts(
            WaveletKind::of(WaveletFamily::Morlet),
            Matrix::ones(1, 2),
            Matrix::zeros(1, 2),
            Matrix::from_rows(&[[-3.0, 1e-6]]).unwrap(),
            None,
        )
        .unwrap();
        assert!(layer.s.as_slice().iter().all(|&v| v == MIN_SCALE));
    }

    #[test]
    fn parameter_layout() {
        let mut layer = random_layer(11, 5, 4, WaveletKind::dog(), true);
        let groups: Vec<_> = layer.params().iter().map(|p| (p.group, p.value.len())).collect();
        assert_eq!(
            groups,
            vec![
                (ParamGroup::Weight, 20),
                (ParamGroup::Translation, 20),
                (ParamGroup::Scale, 20),
                (ParamGroup::BnGamma, 5),
                (ParamGroup::BnBeta, 5),
            ]
        );
    }
}
