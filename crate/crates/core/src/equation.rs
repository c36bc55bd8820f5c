use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MadError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceMode {
    /// `f = 0`: Laplace or homogeneous Helmholtz.
    Zero,
    /// Arbitrary source term.
    General,
}

/// `lap u + k u = f` with `k >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub k: f64,
    pub source: SourceMode,
}

impl EquationSpec {
    pub fn new(k: f64, source: SourceMode) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(MadError::invalid(format!("coefficient k must be finite and >= 0, got {k}")));
        }
        Ok(EquationSpec { k, source })
    }

    pub fn laplace() -> Self {
        EquationSpec { k: 0.0, source: SourceMode::Zero }
    }

    pub fn poisson() -> Self {
        EquationSpec { k: 0.0, source: SourceMode::General }
    }

    pub fn helmholtz(k: f64) -> Result<Self> {
        Self::new(k, SourceMode::Zero)
    }

    pub fn with_source(self, source: SourceMode) -> Self {
        EquationSpec { source, ..self }
    }

    pub fn has_source(&self) -> bool {
        self.source == SourceMode::General
    }

    pub fn family(&self) -> &'static str {
        match (self.k > 0.0, self.source) {
            (false, SourceMode::Zero) => "laplace",
            (false, SourceMode::General) => "poisson",
            (true, _) => "helmholtz",
        }
    }

    /// Parses the CLI family name; `k` only matters for Helmholtz.
    pub fn from_family(name: &str, k: f64) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "laplace" => Ok(Self::laplace()),
            "poisson" => Ok(Self::poisson()),
            "helmholtz" => {
                if k <= 0.0 {
                    return Err(MadError::invalid("helmholtz needs --k > 0"));
                }
                Self::helmholtz(k)
            }
            other => Err(MadError::invalid(format!("unknown equation '{other}'"))),
        }
    }

    pub(crate) fn source_code(&self) -> u8 {
        match self.source {
            SourceMode::Zero => 0,
            SourceMode::General => 1,
        }
    }

    pub(crate) fn from_codes(source: u8, k: f64) -> Result<Self> {
        let source = match source {
            0 => SourceMode::Zero,
            1 => SourceMode::General,
            c => return Err(MadError::Format(format!("unknown source mode code {c}"))),
        };
        Self::new(k, source)
    }
}

impl fmt::Display for EquationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = match self.source {
            SourceMode::Zero => "f = 0",
            SourceMode::General => "general f",
        };
        write!(f, "{} (k = {}, {src})", self.family(), self.k)
    }
}

impl FromStr for SourceMode {
    type Err = MadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(SourceMode::Zero),
            "general" => Ok(SourceMode::General),
            other => Err(MadError::invalid(format!("unknown source mode '{other}'"))),
        }
    }
}
