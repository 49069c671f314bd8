use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{arg_err, Error, Result};

pub const DEFAULT_OMEGA0: f64 = 5.0;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_SHANNON_HALFWIDTH: f64 = 4.0;

/// Below this |t| the sinc ratio is replaced by its Taylor series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WaveletFamily {
    MexicanHat,
    Morlet,
    Dog,
    Shannon,
}

impl WaveletFamily {
    pub const ALL: [WaveletFamily; 4] = [
        WaveletFamily::MexicanHat,
        WaveletFamily::Morlet,
        WaveletFamily::Dog,
        WaveletFamily::Shannon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::MexicanHat => "mexican_hat",
            WaveletFamily::Morlet => "morlet",
            WaveletFamily::Dog => "dog",
            WaveletFamily::Shannon => "shannon",
        }
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mexican_hat" | "mexicanhat" | "mexhat" => Ok(WaveletFamily::MexicanHat),
            "morlet" => Ok(WaveletFamily::Morlet),
            "dog" => Ok(WaveletFamily::Dog),
            "shannon" => Ok(WaveletFamily::Shannon),
            other => arg_err(format!(
                "unknown wavelet '{other}' (expected mexican_hat, morlet, dog or shannon)"
            )),
        }
    }
}

/// A mother wavelet together with its fixed shape constants.
///
/// * Mexican hat: `2/(√(3σ)·π^¼) · (t²/σ² − 1) · exp(−t²/2σ²)`
/// * Morlet: `cos(ω₀t) · exp(−t²/2σ²)`
/// * DOG: `−d/dt exp(−t²/2σ²) = (t/σ²) · exp(−t²/2σ²)`
/// * Shannon: `(sin(t)/t − c) · w(t)`, with the Hann window
///   `w(t) = cos²(πt/2H)` on `|t| ≤ H` and `c` the window-weighted mean of
///   the sinc term, which makes the wavelet integrate to zero.
///
/// With σ = 1 the Gaussian kinds reduce to their textbook unit forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveletKind {
    family: WaveletFamily,
    omega0: f64,
    sigma: f64,
    shannon_halfwidth: f64,
    shannon_offset: f64,
}

impl WaveletKind {
    pub fn new(
        family: WaveletFamily,
        omega0: f64,
        sigma: f64,
        shannon_halfwidth: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("omega0", omega0),
            ("sigma", sigma),
            ("shannon_halfwidth", shannon_halfwidth),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return arg_err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        let shannon_offset = if family == WaveletFamily::Shannon {
            windowed_sinc_mean(shannon_halfwidth)
        } else {
            0.0
        };
        Ok(Self {
            family,
            omega0,
            sigma,
            shannon_halfwidth,
            shannon_offset,
        })
    }

    pub fn of(family: WaveletFamily) -> Self {
        Self::new(
            family,
            DEFAULT_OMEGA0,
            DEFAULT_SIGMA,
            DEFAULT_SHANNON_HALFWIDTH,
        )
        .expect("defaults are valid")
    }

    pub fn mexican_hat() -> Self {
        Self::of(WaveletFamily::MexicanHat)
    }

    pub fn morlet() -> Self {
        Self::of(WaveletFamily::Morlet)
    }

    pub fn dog() -> Self {
        Self::of(WaveletFamily::Dog)
    }

    pub fn shannon() -> Self {
        Self::of(WaveletFamily::Shannon)
    }

    pub fn all_default() -> [WaveletKind; 4] {
        WaveletFamily::ALL.map(Self::of)
    }

    pub fn with_omega0(self, omega0: f64) -> Result<Self> {
        Self::new(self.family, omega0, self.sigma, self.shannon_halfwidth)
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn shannon_halfwidth(&self) -> f64 {
        self.shannon_halfwidth
    }

    /// Mean removed from the windowed sinc (zero for the other families).
    pub fn shannon_offset(&self) -> f64 {
        self.shannon_offset
    }

    pub fn psi(&self, t: f64) -> Result<f64> {
        check_finite(t)?;
        Ok(self.value_and_slope(t).0)
    }

    pub fn psi_prime(&self, t: f64) -> Result<f64> {
        check_finite(t)?;
        Ok(self.value_and_slope(t).1)
    }

    /// `(ψ(t), ψ′(t))` without input validation; the hot path of the layers.
    #[inline]
    pub fn value_and_slope(&self, t: f64) -> (f64, f64) {
        match self.family {
            WaveletFamily::MexicanHat => {
                let s2 = self.sigma * self.sigma;
                let amp = 2.0 / ((3.0 * self.sigma).sqrt() * PI.powf(0.25));
                let q = t * t / s2;
                let g = (-0.5 * q).exp();
                (amp * (q - 1.0) * g, amp * (t / s2) * (3.0 - q) * g)
            }
            WaveletFamily::Morlet => {
                let s2 = self.sigma * self.sigma;
                let g = (-0.5 * t * t / s2).exp();
                let (sin, cos) = (self.omega0 * t).sin_cos();
                (cos * g, -(self.omega0 * sin + t / s2 * cos) * g)
            }
            WaveletFamily::Dog => {
                let s2 = self.sigma * self.sigma;
                let g = (-0.5 * t * t / s2).exp();
                (t / s2 * g, (1.0 - t * t / s2) / s2 * g)
            }
            WaveletFamily::Shannon => {
                let h = self.shannon_halfwidth;
                if t.abs() > h {
                    return (0.0, 0.0);
                }
                let (sinc, dsinc) = sinc_ratio(t);
                let arg = PI * t / (2.0 * h);
                let (sin, cos) = arg.sin_cos();
                let window = cos * cos;
                let dwindow = -(PI / (2.0 * h)) * 2.0 * sin * cos;
                let centred = sinc - self.shannon_offset;
                (centred * window, dsinc * window + centred * dwindow)
            }
        }
    }
}

impl fmt::Display for WaveletKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            WaveletFamily::Morlet => write!(f, "morlet(omega0={}, sigma={})", self.omega0, self.sigma),
            WaveletFamily::Shannon => {
                write!(f, "shannon(halfwidth={})", self.shannon_halfwidth)
            }
            other => write!(f, "{other}(sigma={})", self.sigma),
        }
    }
}

fn check_finite(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        arg_err(format!("wavelet argument must be finite, got {t}"))
    }
}

/// `sin(t)/t` and its derivative, with the removable singularity at 0
/// handled by the series `1 − t²/6 + t⁴/120`.
fn sinc_ratio(t: f64) -> (f64, f64) {
    if t.abs() < SINC_SERIES_CUTOFF {
        let t2 = t * t;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            -t / 3.0 + t * t2 / 30.0,
        )
    } else {
        let (sin, cos) = t.sin_cos();
        (sin / t, (t * cos - sin) / (t * t))
    }
}

/// Window-weighted mean of `sin(t)/t` under the Hann window of half-width
/// `h`. The window integrates to exactly `h`.
fn windowed_sinc_mean(h: f64) -> f64 {
    const PANELS: usize = 4096;
    let step = 2.0 * h / PANELS as f64;
    let f = |t: f64| {
        let c = (PI * t / (2.0 * h)).cos();
        sinc_ratio(t).0 * c * c
    };
    // composite Simpson
    let mut acc = f(-h) + f(h);
    for k in 1..PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(-h + k as f64 * step);
    }
    acc * step / 3.0 / h
}
