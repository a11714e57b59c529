use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Serialize, Serializer};

/// A nonnegative real or `+inf`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);

    /// Panics on negative or NaN input.
    pub fn finite(v: f64) -> Self {
        assert!(v.is_finite() && v >= 0.0, "ExtReal::finite({v})");
        ExtReal(v)
    }

    /// Clamps tiny negative rounding residue to zero.
    pub(crate) fn from_nonneg(v: f64) -> Self {
        assert!(!v.is_nan(), "ExtReal from NaN");
        ExtReal(v.max(0.0))
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn to_f64(self) -> f64 {
        self.0
    }

    pub fn finite_value(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal(self.0 + rhs.0)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_and_orders() {
        let a = ExtReal::finite(2.0);
        assert_eq!(a + ExtReal::INFINITY, ExtReal::INFINITY);
        assert!(a < ExtReal::INFINITY);
        assert_eq!(ExtReal::INFINITY.to_string(), "inf");
        assert_eq!(serde_json::to_string(&ExtReal::INFINITY).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&a).unwrap(), "2.0");
    }

    #[test]
    #[should_panic]
    fn negative_rejected() {
        ExtReal::finite(-1.0);
    }
}
