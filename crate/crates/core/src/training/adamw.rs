use crate::error::{shape_err, Result};
use crate::kan::ParamSlot;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with decoupled weight decay.
///
/// Per element, with bias corrections `c1 = 1 − β1^t`, `c2 = 1 − β2^t`:
///
/// ```text
/// m ← β1·m + (1 − β1)·g
/// v ← β2·v + (1 − β2)·g²
/// θ ← θ·(1 − lr·λ)                       (decaying groups only)
/// θ ← θ − lr·(m/c1) / (√(v/c2) + eps)
/// ```
#[derive(Clone, Debug)]
pub struct AdamW {
    cfg: AdamWConfig,
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig) -> Self {
        Self {
            cfg,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.cfg
    }

    /// First and second moments, one pair per parameter tensor.
    pub fn moments(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.moments
    }

    pub fn step(&mut self, params: &mut [ParamSlot<'_>]) -> Result<()> {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| (vec![0.0; p.value.len()], vec![0.0; p.value.len()]))
                .collect();
        }
        if self.moments.len() != params.len() {
            return shape_err(format!(
                "optimizer tracks {} tensors, got {}",
                self.moments.len(),
                params.len()
            ));
        }
        for (k, (p, (m, _))) in params.iter().zip(&self.moments).enumerate() {
            if p.value.len() != m.len() || p.grad.len() != m.len() {
                return shape_err(format!(
                    "tensor {k}: {} values and {} gradients for {} moment entries",
                    p.value.len(),
                    p.grad.len(),
                    m.len()
                ));
            }
        }

        self.step += 1;
        let AdamWConfig {
            lr,
            weight_decay,
            beta1,
            beta2,
            eps,
        } = self.cfg;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let shrink = 1.0 - lr * weight_decay;
        for (p, (m, v)) in params.iter_mut().zip(&mut self.moments) {
            let decays = p.group.decays();
            for (k, theta) in p.value.iter_mut().enumerate() {
                let g = p.grad[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                if decays {
                    *theta *= shrink;
                }
                *theta -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kan::ParamGroup;
    use crate::numerics::Rng;

    fn slot<'a>(group: ParamGroup, value: &'a mut [f64], grad: &'a [f64]) -> ParamSlot<'a> {
        ParamSlot { group, value, grad }
    }

    #[test]
    fn zero_gradient_applies_only_decay() {
        let cfg = AdamWConfig::default();
        let mut opt = AdamW::new(cfg);
        let mut w = [0.5, -2.0];
        let mut tau = [0.3, 0.7];
        let mut s = [1.2, 0.9];
        let zeros = [0.0, 0.0];
        opt.step(&mut [
            slot(ParamGroup::Weight, &mut w, &zeros),
            slot(ParamGroup::Translation, &mut tau, &zeros),
            slot(ParamGroup::Scale, &mut s, &zeros),
        ])
        .unwrap();
        let shrink = 1.0 - cfg.lr * cfg.weight_decay;
        assert_eq!(w, [0.5 * shrink, -2.0 * shrink]);
        assert_eq!(tau, [0.3, 0.7]);
        assert_eq!(s, [1.2, 0.9]);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        };
        for g in [0.37, -4.0, 1e-3] {
            let mut opt = AdamW::new(cfg);
            let mut theta = [1.0];
            opt.step(&mut [slot(ParamGroup::Weight, &mut theta, &[g])]).unwrap();
            let expected = 1.0 - cfg.lr * g / (g.abs() + cfg.eps);
            assert!((theta[0] - expected).abs() < 1e-15, "{g}");
        }
    }

    #[test]
    fn shape_changes_are_rejected() {
        let mut opt = AdamW::new(AdamWConfig::default());
        let mut a = [1.0, 2.0];
        opt.step(&mut [slot(ParamGroup::Weight, &mut a, &[0.1, 0.1])]).unwrap();
        let mut b = [1.0];
        assert!(opt.step(&mut [slot(ParamGroup::Weight, &mut b, &[0.1])]).is_err());
        assert!(opt.step(&mut [slot(ParamGroup::Weight, &mut a, &[0.1])]).is_err());
        assert_eq!(opt.step_count(), 1);
    }

    /// Loss ½·Σ c_k (θ_k − a_k)² with c_k > 0.
    #[test]
    fn one_step_decreases_random_quadratics() {
        let mut rng = Rng::new(99);
        for trial in 0..100 {
            let n = 1 + rng.below(6);
            let curvature = rng.uniform(0.1, 5.0, n).unwrap();
            let target = rng.uniform(-2.0, 2.0, n).unwrap();
            let mut theta = rng.uniform(-2.0, 2.0, n).unwrap();
            let loss = |th: &[f64]| {
                th.iter()
                    .zip(&curvature)
                    .zip(&target)
                    .map(|((t, c), a)| 0.5 * c * (t - a).powi(2))
                    .sum::<f64>()
            };
            let grad: Vec<f64> = (0..n).map(|k| curvature[k] * (theta[k] - target[k])).collect();
            let before = loss(&theta);
            let lr = [1e-2, 1e-3, 1e-4][trial % 3];
            let mut opt = AdamW::new(AdamWConfig {
                lr,
                weight_decay: 0.0,
                ..AdamWConfig::default()
            });
            opt.step(&mut [slot(ParamGroup::Weight, &mut theta, &grad)]).unwrap();
            assert!(loss(&theta) < before, "trial {trial}");
        }
    }

    #[test]
    fn second_moment_stays_non_negative() {
        let mut opt = AdamW::new(AdamWConfig::default());
        let mut rng = Rng::new(3);
        let mut theta = vec![0.0; 8];
        for _ in 0..20 {
            let g = rng.uniform(-10.0, 10.0, 8).unwrap();
            opt.step(&mut [slot(ParamGroup::Scale, &mut theta, &g)]).unwrap();
        }
        assert!(opt.moments()[0].1.iter().all(|&v| v >= 0.0));
    }
}
