//! Exact dyadic rationals: integer numerators over a power-of-two denominator.
//!
//! Every quantity the search and the validators touch (processing times, loads,
//! potentials, gaps) is an integer multiple of 2^-scale_log2, so all arithmetic
//! and comparisons stay exact integer operations. Values keep the scale they
//! were constructed with; comparisons align scales by shifting, never rounding.

use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest supported scale exponent. Keeps aligned i128 arithmetic
/// (loads, potentials, 4*delta products) far from overflow.
pub const MAX_SCALE_LOG2: u32 = 96;

/// An exact value `num / 2^scale_log2`.
#[derive(Debug, Clone, Copy)]
pub struct Dyadic {
    num: i128,
    scale_log2: u32,
}

impl Dyadic {
    pub fn new(num: i128, scale_log2: u32) -> Self {
        assert!(scale_log2 <= MAX_SCALE_LOG2 + 8, "scale out of range");
        Dyadic { num, scale_log2 }
    }

    pub fn zero(scale_log2: u32) -> Self {
        Dyadic::new(0, scale_log2)
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn scale_log2(&self) -> u32 {
        self.scale_log2
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    pub fn abs(&self) -> Self {
        Dyadic::new(self.num.checked_abs().expect("abs overflow"), self.scale_log2)
    }

    /// Same numerator at scale+1, i.e. exactly half the value.
    pub fn half(&self) -> Self {
        Dyadic::new(self.num, self.scale_log2 + 1)
    }

    pub fn mul_int(&self, k: i128) -> Self {
        Dyadic::new(self.num.checked_mul(k).expect("mul overflow"), self.scale_log2)
    }

    /// Numerators aligned to the larger of the two scales.
    fn aligned(&self, other: &Self) -> (i128, i128, u32) {
        let s = self.scale_log2.max(other.scale_log2);
        let a = self
            .num
            .checked_shl(s - self.scale_log2)
            .expect("scale alignment overflow");
        let b = other
            .num
            .checked_shl(s - other.scale_log2)
            .expect("scale alignment overflow");
        (a, b, s)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b, s) = self.aligned(other);
        Dyadic::new(a.checked_add(b).expect("add overflow"), s)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (a, b, s) = self.aligned(other);
        Dyadic::new(a.checked_sub(b).expect("sub overflow"), s)
    }

    /// Exact string at the stored scale, e.g. "26/2^4".
    pub fn exact_string(&self) -> String {
        format!("{}/2^{}", self.num, self.scale_log2)
    }

    /// Lowest-terms string: "13/8", "5", "0", "-3/4".
    pub fn reduced_string(&self) -> String {
        if self.num == 0 {
            return "0".to_string();
        }
        let tz = (self.num.trailing_zeros()).min(self.scale_log2);
        let p = self.num >> tz;
        let s = self.scale_log2 - tz;
        if s == 0 {
            format!("{p}")
        } else {
            format!("{p}/{}", 1u128 << s)
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 * f64::exp2(-(self.scale_log2 as f64))
    }

    /// Parses "num/2^s", or a bare integer as scale 0.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("expected \"num/2^s\", got {s:?}"));
        let (num_str, scale_str) = match s.split_once('/') {
            Some((n, d)) => {
                let e = d.strip_prefix("2^").ok_or_else(bad)?;
                (n, Some(e))
            }
            None => (s, None),
        };
        let num: i128 = num_str.trim().parse().map_err(|_| bad())?;
        let scale: u32 = match scale_str {
            Some(e) => e.trim().parse().map_err(|_| bad())?,
            None => 0,
        };
        if scale > MAX_SCALE_LOG2 + 8 {
            return Err(Error::InconsistentScale(format!(
                "scale_log2 {scale} exceeds maximum {}",
                MAX_SCALE_LOG2 + 8
            )));
        }
        Ok(Dyadic::new(num, scale))
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        let (a, b, _) = self.aligned(other);
        a == b
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl std::fmt::Display for Dyadic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.exact_string())
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.exact_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Dyadic::parse(&s).map_err(D::Error::custom)
    }
}
