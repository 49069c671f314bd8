//! Mother wavelets, numerical checks of the wavelet criteria, CWT
//! coefficients and the Haar multiresolution transform.

mod criteria;
mod cwt;
mod haar;
mod kind;

pub use criteria::{check_criteria, AdmissibilityReport, MIN_DOMAIN_HALFWIDTH, MIN_GRID_POINTS};
pub use cwt::{cwt_coefficient, SampledSignal};
pub use haar::{haar_decompose, haar_reconstruct, DwtCoeffs};
pub use kind::{
    WaveletFamily, WaveletKind, DEFAULT_OMEGA0, DEFAULT_SHANNON_HALFWIDTH, DEFAULT_SIGMA,
};
