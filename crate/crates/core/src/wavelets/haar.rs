use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{arg_err, Error, Result};

/// Orthonormal Haar coefficients: the coarsest approximation plus one detail
/// band per level, finest band first.
#[derive(Clone, Debug, PartialEq)]
pub struct DwtCoeffs {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
}

impl DwtCoeffs {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn coefficient_count(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    /// Per-level detail energies, finest first.
    pub fn detail_energies(&self) -> Vec<f64> {
        self.details
            .iter()
            .map(|d| d.iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn energy(&self) -> f64 {
        self.approx.iter().map(|v| v * v).sum::<f64>() + self.detail_energies().iter().sum::<f64>()
    }

    /// Adds `more` levels by splitting the current approximation. Existing
    /// detail bands are kept as they are.
    pub fn deepen(&mut self, more: usize) -> Result<()> {
        for _ in 0..more {
            if self.approx.len() < 2 || !self.approx.len().is_multiple_of(2) {
                return arg_err(format!(
                    "cannot split an approximation of length {}",
                    self.approx.len()
                ));
            }
            let (a, d) = analysis_step(&self.approx);
            self.approx = a;
            self.details.push(d);
        }
        Ok(())
    }
}

/// One analysis step: `a[i] = (x[2i] + x[2i+1])/√2`, `d[i] = (x[2i] − x[2i+1])/√2`.
fn analysis_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.chunks_exact(2)
        .map(|p| ((p[0] + p[1]) * FRAC_1_SQRT_2, (p[0] - p[1]) * FRAC_1_SQRT_2))
        .unzip()
}

pub fn haar_decompose(x: &[f64], levels: usize) -> Result<DwtCoeffs> {
    if x.is_empty() || !x.len().is_power_of_two() {
        return arg_err(format!("signal length {} is not a power of two", x.len()));
    }
    let max_levels = x.len().trailing_zeros() as usize;
    if levels == 0 || levels > max_levels {
        return arg_err(format!(
            "levels must be in 1..={max_levels} for length {}, got {levels}",
            x.len()
        ));
    }
    let mut coeffs = DwtCoeffs {
        approx: x.to_vec(),
        details: Vec::with_capacity(levels),
    };
    coeffs.deepen(levels)?;
    Ok(coeffs)
}

pub fn haar_reconstruct(c: &DwtCoeffs) -> Result<Vec<f64>> {
    let mut approx = c.approx.clone();
    for (level, detail) in c.details.iter().enumerate().rev() {
        if detail.len() != approx.len() {
            return Err(Error::Argument(format!(
                "level {} has {} details for {} approximation coefficients",
                level + 1,
                detail.len(),
                approx.len()
            )));
        }
        approx = approx
            .iter()
            .zip(detail)
            .flat_map(|(&a, &d)| [(a + d) * FRAC_1_SQRT_2, (a - d) * FRAC_1_SQRT_2])
            .collect();
    }
    Ok(approx)
}
