use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretized emission level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Level {
    Low = 1,
    Medium = 2,
    High = 3,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Medium, Level::High];

    /// Zero-based position (low = 0).
    #[inline]
    pub fn index(self) -> usize {
        self as usize - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    #[inline]
    pub fn value(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for Level {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Level::Low),
            2 => Ok(Level::Medium),
            3 => Ok(Level::High),
            other => Err(Error::InvalidInput(format!("level must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl TryFrom<i64> for Level {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        u8::try_from(v)
            .map_err(|_| Error::InvalidInput(format!("level must be 1, 2 or 3, got {v}")))
            .and_then(Level::try_from)
    }
}

impl From<Level> for u8 {
    fn from(l: Level) -> u8 {
        l.value()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(Level::try_from(2u8).unwrap(), Level::Medium);
        assert!(Level::try_from(0u8).is_err());
        assert!(Level::try_from(4i64).is_err());
        assert_eq!(Level::High.index(), 2);
        assert_eq!(Level::from_index(0), Some(Level::Low));
        assert_eq!(Level::from_index(3), None);
    }
}
