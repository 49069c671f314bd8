use super::WaveletKind;
use crate::error::{arg_err, Result};

/// Relative tolerance on spacing deviations when validating a grid.
const UNIFORM_GRID_RTOL: f64 = 1e-9;

/// A real signal sampled on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    times: Vec<f64>,
    values: Vec<f64>,
    step: f64,
}

impl SampledSignal {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return arg_err(format!(
                "{} sample times but {} values",
                times.len(),
                values.len()
            ));
        }
        if times.len() < 2 {
            return arg_err("a sampled signal needs at least two points");
        }
        let step = times[1] - times[0];
        if !(step > 0.0) || !step.is_finite() {
            return arg_err("sample times must be strictly increasing");
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - step).abs() > UNIFORM_GRID_RTOL * step.max(w[1].abs()) {
                return arg_err(format!("non-uniform grid near t = {}", w[0]));
            }
        }
        Ok(Self {
            times,
            values,
            step,
        })
    }

    /// Samples `f` at `n` evenly spaced points covering `[start, end]`.
    pub fn from_fn(start: f64, end: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 || !(end > start) {
            return arg_err("need n >= 2 and end > start");
        }
        let h = (end - start) / (n - 1) as f64;
        let times: Vec<f64> = (0..n).map(|k| start + k as f64 * h).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

/// Wavelet coefficient of `signal` at scale `s` and shift `tau`:
/// trapezoid quadrature of `g(t) · s^(−1/2) · ψ((t − τ)/s)`.
pub fn cwt_coefficient(signal: &SampledSignal, kind: &WaveletKind, s: f64, tau: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return arg_err(format!("scale must be positive, got {s}"));
    }
    if !tau.is_finite() {
        return arg_err(format!("shift must be finite, got {tau}"));
    }
    let norm = 1.0 / s.sqrt();
    let last = signal.times.len() - 1;
    let mut acc = 0.0;
    for (k, (&t, &g)) in signal.times.iter().zip(&signal.values).enumerate() {
        let w = if k == 0 || k == last { 0.5 } else { 1.0 };
        acc += w * g * norm * kind.value_and_slope((t - tau) / s).0;
    }
    Ok(acc * signal.step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn self_match(kind: WaveletKind) -> SampledSignal {
        SampledSignal::from_fn(-12.0, 12.0, 8193, |t| kind.value_and_slope(t).0).unwrap()
    }

    #[test]
    fn mexican_hat_has_unit_energy() {
        let k = WaveletKind::mexican_hat();
        let c = cwt_coefficient(&self_match(k), &k, 1.0, 0.0).unwrap();
        assert!((c - 1.0).abs() < 1e-6, "{c}");
    }

    #[test]
    fn constant_signal_gives_zero() {
        let g = SampledSignal::from_fn(-40.0, 40.0, 16001, |_| 3.0).unwrap();
        for k in WaveletKind::all_default() {
            for (s, tau) in [(1.0, 0.0), (0.5, 3.0), (2.0, -5.0)] {
                let c = cwt_coefficient(&g, &k, s, tau).unwrap();
                // bounded by the Morlet Gaussian tail, far below this
                assert!(c.abs() < 1e-4, "{k} s={s} tau={tau}: {c}");
            }
        }
    }

    #[test]
    fn shift_covariance() {
        let k = WaveletKind::mexican_hat();
        let base = cwt_coefficient(&self_match(k), &k, 1.0, 0.0).unwrap();
        let shifted =
            SampledSignal::from_fn(-12.0, 12.0, 8193, |t| k.value_and_slope(t - 2.0).0).unwrap();
        let c = cwt_coefficient(&shifted, &k, 1.0, 2.0).unwrap();
        assert!((c - base).abs() < 1e-6, "{c} vs {base}");
    }

    #[test]
    fn argument_errors() {
        let g = self_match(WaveletKind::dog());
        let k = WaveletKind::dog();
        assert!(cwt_coefficient(&g, &k, 0.0, 0.0).is_err());
        assert!(cwt_coefficient(&g, &k, -1.0, 0.0).is_err());
        assert!(SampledSignal::new(vec![0.0, 1.0, 3.0], vec![0.0; 3]).is_err());
        assert!(SampledSignal::new(vec![0.0], vec![0.0]).is_err());
        assert!(SampledSignal::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }
}
