use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest argument at which a modulus is evaluated.
///
/// `(log 1/s)^-gamma` blows up at `s = 1`; below `e^-1` it stays in `(0, 1)`
/// and increasing.
pub const S_MAX: f64 = 0.3;

/// `delta(s) = s^beta` (Holder) or `delta(s) = (log 1/s)^-gamma` (log-Holder).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawFamily")]
pub enum ModulusFamily {
    Holder { beta: f64 },
    LogHolder { gamma: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawFamily {
    Holder { beta: f64 },
    LogHolder { gamma: f64 },
}

impl TryFrom<RawFamily> for ModulusFamily {
    type Error = Error;

    fn try_from(raw: RawFamily) -> Result<Self> {
        match raw {
            RawFamily::Holder { beta } => ModulusFamily::holder(beta),
            RawFamily::LogHolder { gamma } => ModulusFamily::log_holder(gamma),
        }
    }
}

impl ModulusFamily {
    pub fn holder(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta <= 1.0 {
            Ok(ModulusFamily::Holder { beta })
        } else {
            Err(Error::param("beta", "holder requires 0 < β ≤ 1"))
        }
    }

    pub fn log_holder(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(ModulusFamily::LogHolder { gamma })
        } else {
            Err(Error::param("gamma", "log_holder requires γ > 0"))
        }
    }

    pub fn exponent(&self) -> f64 {
        match *self {
            ModulusFamily::Holder { beta } => beta,
            ModulusFamily::LogHolder { gamma } => gamma,
        }
    }

    /// Same family with another exponent.
    pub fn with_exponent(&self, e: f64) -> Result<Self> {
        match self {
            ModulusFamily::Holder { .. } => Self::holder(e),
            ModulusFamily::LogHolder { .. } => Self::log_holder(e),
        }
    }

    pub fn is_holder(&self) -> bool {
        matches!(self, ModulusFamily::Holder { .. })
    }

    pub fn label(&self) -> String {
        match self {
            ModulusFamily::Holder { beta } => format!("holder({beta})"),
            ModulusFamily::LogHolder { gamma } => format!("log_holder({gamma})"),
        }
    }

    /// `delta(s)` without the domain check; callers guarantee `0 < s <= S_MAX`.
    pub(crate) fn value_unchecked(&self, s: f64) -> f64 {
        match *self {
            ModulusFamily::Holder { beta } => s.powf(beta),
            ModulusFamily::LogHolder { gamma } => (1.0 / s).ln().powf(-gamma),
        }
    }
}

pub fn modulus_value(m: &ModulusFamily, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= S_MAX) {
        return Err(Error::ModulusDomain { s, s_max: S_MAX });
    }
    Ok(m.value_unchecked(s))
}

/// Bounds `coeff0 * exp(-+ beta * budget)` on a transported Holder coefficient.
pub fn sandwich_bounds(coeff0: f64, beta: f64, budget: f64) -> Result<(f64, f64)> {
    if !(coeff0 >= 0.0) {
        return Err(Error::param("coeff0", "must be non-negative"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param("beta", "holder requires 0 < β ≤ 1"));
    }
    if !(budget >= 0.0) {
        return Err(Error::param("budget", "must be non-negative"));
    }
    Ok((coeff0 * (-beta * budget).exp(), coeff0 * (beta * budget).exp()))
}
