use std::fmt;

/// Role of a parameter tensor. Drives weight-decay eligibility and the
/// per-group parameter accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamGroup {
    /// Wav-KAN edge weights `w` or MLP weight matrices.
    Weight,
    Translation,
    Scale,
    Bias,
    BnGamma,
    BnBeta,
}

impl ParamGroup {
    /// Only weights take decoupled weight decay.
    pub fn decays(self) -> bool {
        matches!(self, ParamGroup::Weight)
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Weight => "weight",
            ParamGroup::Translation => "translation",
            ParamGroup::Scale => "scale",
            ParamGroup::Bias => "bias",
            ParamGroup::BnGamma => "bn_gamma",
            ParamGroup::BnBeta => "bn_beta",
        }
    }
}

impl fmt::Display for ParamGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mutable view of one parameter tensor next to its latest gradient.
pub struct ParamSlot<'a> {
    pub group: ParamGroup,
    pub value: &'a mut [f64],
    pub grad: &'a [f64],
}
