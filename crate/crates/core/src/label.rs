use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Binary class tag. `Ma` (microaneurysm) is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "MA")]
    Ma,
    #[serde(rename = "NORMAL")]
    Normal,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Ma, Label::Normal];

    pub fn is_positive(self) -> bool {
        self == Label::Ma
    }

    /// `+1` for MA, `-1` for NORMAL.
    pub fn sign(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            -1.0
        }
    }

    /// Binary target used by the logistic models: 1 for MA, 0 for NORMAL.
    pub fn target(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            0.0
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Ma => "MA",
            Label::Normal => "NORMAL",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MA" => Ok(Label::Ma),
            "NORMAL" => Ok(Label::Normal),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}
