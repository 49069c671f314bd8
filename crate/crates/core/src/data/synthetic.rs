use std::fmt;
use std::str::FromStr;

use super::DatasetSplit;
use crate::error::{arg_err, Error, Result};
use crate::numerics::{Matrix, Rng};

/// Every synthetic set has this many features.
pub const SYNTHETIC_DIM: usize = 4;

/// Toy classification problems. Labels alternate `0, 1, 0, 1, …` so any
/// `n ≥ 2` covers both classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Two isotropic Gaussian blobs centred at `±1.5·(1,1,1,1)`, σ = 0.5.
    TwoBlobs,
    /// Points on two concentric shells, radii 1 and 2, radial noise σ = 0.1.
    Rings,
    /// XOR of the signs of the first two features; the other two are noise.
    Checker,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::TwoBlobs => "two_blobs",
            Regime::Rings => "rings",
            Regime::Checker => "checker",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_blobs" => Ok(Regime::TwoBlobs),
            "rings" => Ok(Regime::Rings),
            "checker" => Ok(Regime::Checker),
            other => arg_err(format!(
                "unknown synthetic regime '{other}' (expected two_blobs, rings or checker)"
            )),
        }
    }
}

fn sample(regime: Regime, class: usize, rng: &mut Rng) -> [f64; SYNTHETIC_DIM] {
    let mut x = [0.0; SYNTHETIC_DIM];
    match regime {
        Regime::TwoBlobs => {
            let centre = if class == 0 { -1.5 } else { 1.5 };
            for v in &mut x {
                *v = rng.normal(centre, 0.5);
            }
        }
        Regime::Rings => {
            let mut norm = 0.0;
            for v in &mut x {
                *v = rng.normal(0.0, 1.0);
                norm += *v * *v;
            }
            let norm = norm.sqrt().max(1e-12);
            let radius = (1.0 + class as f64) + rng.normal(0.0, 0.1);
            for v in &mut x {
                *v *= radius / norm;
            }
        }
        Regime::Checker => {
            // class 1 iff exactly one of the first two coordinates is positive
            let first_positive = rng.below(2) == 1;
            let second_positive = first_positive ^ (class == 1);
            let magnitude = |rng: &mut Rng| rng.uniform_one(0.05, 1.0);
            x[0] = if first_positive { 1.0 } else { -1.0 } * magnitude(rng);
            x[1] = if second_positive { 1.0 } else { -1.0 } * magnitude(rng);
            x[2] = rng.uniform_one(-1.0, 1.0);
            x[3] = rng.uniform_one(-1.0, 1.0);
        }
    }
    x
}

/// Deterministic toy set of `n` samples with features min-max scaled into
/// `[0, 1]` per column.
pub fn make_synthetic(regime: Regime, n: usize, seed: u64) -> Result<DatasetSplit> {
    if n < 2 {
        return arg_err(format!("a synthetic set needs at least 2 samples, got {n}"));
    }
    let mut rng = Rng::new(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let mut data = Vec::with_capacity(n * SYNTHETIC_DIM);
    for &class in &labels {
        data.extend(sample(regime, class, &mut rng));
    }
    let mut features = Matrix::new(n, SYNTHETIC_DIM, data)?;
    for f in 0..SYNTHETIC_DIM {
        let column = (0..n).map(|b| features[(b, f)]);
        let lo = column.clone().fold(f64::INFINITY, f64::min);
        let hi = column.fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for b in 0..n {
            features[(b, f)] = if span > 0.0 { (features[(b, f)] - lo) / span } else { 0.5 };
        }
    }
    DatasetSplit::new(features, labels, 2)
}
