use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use super::WaveletKind;
use crate::error::{arg_err, Result};

pub const MIN_GRID_POINTS: usize = 1024;
pub const MIN_DOMAIN_HALFWIDTH: f64 = 8.0;

/// Zero-padding factor applied before the FFT; refines the ω grid.
const FFT_PADDING: usize = 4;

/// Numerical evidence for the zero-mean and admissibility criteria.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    /// Estimate of `∫ |ψ̂(ω)|²/ω dω` over `[omega_min, omega_max]`.
    pub c_psi: f64,
    /// `|∫ ψ(t) dt|` over `[−T, T]`, trapezoid rule.
    pub zero_mean_residual: f64,
    pub grid_points: usize,
    pub domain_halfwidth: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl AdmissibilityReport {
    pub fn passes(&self, residual_tol: f64) -> bool {
        self.zero_mean_residual < residual_tol && self.c_psi.is_finite() && self.c_psi > 0.0
    }
}

/// Checks the zero-mean and admissibility criteria for `kind` on a uniform
/// grid of `grid_points` samples spanning `[−T, T]`.
///
/// The Fourier magnitude comes from a zero-padded FFT of the trapezoid
/// weighted samples, so `|ψ̂(ω_k)| = h·|X_k|` at `ω_k = 2πk/(N·h)`. The ω
/// integral runs from `2π/T`, which skips the integrable singularity at the
/// origin, to the sampling Nyquist limit `π/h`.
pub fn check_criteria(
    kind: &WaveletKind,
    domain_halfwidth: f64,
    grid_points: usize,
) -> Result<AdmissibilityReport> {
    if grid_points < MIN_GRID_POINTS {
        return arg_err(format!(
            "need at least {MIN_GRID_POINTS} grid points, got {grid_points}"
        ));
    }
    if !(domain_halfwidth >= MIN_DOMAIN_HALFWIDTH) || !domain_halfwidth.is_finite() {
        return arg_err(format!(
            "domain half-width must be at least {MIN_DOMAIN_HALFWIDTH}, got {domain_halfwidth}"
        ));
    }
    let n = grid_points;
    let t_max = domain_halfwidth;
    let h = 2.0 * t_max / (n - 1) as f64;

    let weighted: Vec<f64> = (0..n)
        .map(|k| {
            let t = -t_max + k as f64 * h;
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            w * kind.value_and_slope(t).0
        })
        .collect();

    let mut integral = 0.0;
    for &v in &weighted {
        integral += v;
    }
    let zero_mean_residual = (integral * h).abs();

    let padded_len = FFT_PADDING * n;
    let mut buf: Vec<Complex<f64>> = weighted
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded_len)
        .collect();
    FftPlanner::new()
        .plan_fft_forward(padded_len)
        .process(&mut buf);

    let d_omega = 2.0 * PI / (padded_len as f64 * h);
    let omega_lo = 2.0 * PI / t_max;
    let omega_hi = PI / h;
    let k_lo = (omega_lo / d_omega).ceil() as usize;
    let k_hi = ((omega_hi / d_omega).floor() as usize).min(padded_len / 2);

    let integrand = |k: usize| {
        let omega = k as f64 * d_omega;
        let mag = h * buf[k].norm();
        mag * mag / omega
    };
    let mut c_psi = 0.0;
    for k in k_lo..=k_hi {
        let w = if k == k_lo || k == k_hi { 0.5 } else { 1.0 };
        c_psi += w * integrand(k);
    }
    c_psi *= d_omega;

    Ok(AdmissibilityReport {
        c_psi,
        zero_mean_residual,
        grid_points: n,
        domain_halfwidth: t_max,
        omega_min: k_lo as f64 * d_omega,
        omega_max: k_hi as f64 * d_omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelets::WaveletFamily;

    #[test]
    fn mexican_hat_zero_mean() {
        let r = check_criteria(&WaveletKind::mexican_hat(), 12.0, 8192).unwrap();
        assert!(r.zero_mean_residual < 1e-8, "{r:?}");
    }

    #[test]
    fn dog_is_odd() {
        for n in [1024, 4097, 8192] {
            let r = check_criteria(&WaveletKind::dog(), 12.0, n).unwrap();
            assert!(r.zero_mean_residual < 1e-15, "{r:?}");
        }
    }

    #[test]
    fn morlet_residual_is_the_gaussian_tail() {
        let r = check_criteria(&WaveletKind::morlet(), 12.0, 8192).unwrap();
        let closed_form = (2.0 * PI).sqrt() * (-12.5f64).exp();
        assert!((r.zero_mean_residual - closed_form).abs() < 1e-9, "{r:?}");
        assert!(r.zero_mean_residual < 1e-4);
    }

    #[test]
    fn shannon_mean_is_removed() {
        let r = check_criteria(&WaveletKind::shannon(), 12.0, 8192).unwrap();
        assert!(r.zero_mean_residual < 1e-8, "{r:?}");
    }

    /// |ψ̂(ω)| = C·√(2π)·ω²·e^(−ω²/2) for the unit Mexican hat, so the
    /// truncated admissibility integral is π·C²·(1 + a²)·e^(−a²) for lower
    /// limit a (upper limit effectively infinite).
    #[test]
    fn mexican_hat_c_psi_matches_closed_form() {
        let r = check_criteria(&WaveletKind::mexican_hat(), 12.0, 8192).unwrap();
        let c2 = 4.0 / (3.0 * PI.sqrt());
        let a = r.omega_min;
        let expected = PI * c2 * (1.0 + a * a) * (-a * a).exp();
        assert!((r.c_psi - expected).abs() / expected < 1e-3, "{} vs {expected}", r.c_psi);
    }

    #[test]
    fn c_psi_positive_and_finite_for_all() {
        for k in WaveletKind::all_default() {
            let r = check_criteria(&k, 12.0, 8192).unwrap();
            assert!(r.c_psi > 0.0 && r.c_psi < 1e6, "{k}: {r:?}");
            assert!(r.passes(1e-4), "{k}: {r:?}");
        }
    }

    #[test]
    fn low_omega0_morlet_fails_zero_mean() {
        let k = WaveletKind::of(WaveletFamily::Morlet).with_omega0(0.5).unwrap();
        let r = check_criteria(&k, 12.0, 8192).unwrap();
        let closed_form = (2.0 * PI).sqrt() * (-0.125f64).exp();
        assert!((r.zero_mean_residual - closed_form).abs() < 1e-6);
        assert!(!r.passes(1e-4));
    }

    #[test]
    fn rejects_coarse_grids() {
        let k = WaveletKind::dog();
        assert!(check_criteria(&k, 12.0, 1023).is_err());
        assert!(check_criteria(&k, 7.9, 8192).is_err());
        assert!(check_criteria(&k, f64::NAN, 8192).is_err());
    }
}
