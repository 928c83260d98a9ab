//! Non-Galois cubic fields: enumeration through binary cubic forms, local
//! splitting statistics, and the lower-order terms of the averaged one-level
//! density of their Dedekind zeta functions.

pub mod asym;
pub mod cubic_enum;
pub mod density;
pub mod euler;
pub mod family;
pub mod numkernel;
pub mod primes;
pub mod quad;
pub mod ratios;

use std::fmt;
use std::str::FromStr;

/// Signature of the family: `Plus` for totally real fields (D > 0),
/// `Minus` for complex cubic fields (D < 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn matches(self, disc: i64) -> bool {
        match self {
            Sign::Plus => disc > 0,
            Sign::Minus => disc < 0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Sign {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" | "plus" | "pos" => Ok(Sign::Plus),
            "-" | "minus" | "neg" => Ok(Sign::Minus),
            other => Err(format!("unknown sign '{other}', expected + or -")),
        }
    }
}
