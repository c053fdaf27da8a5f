use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A nonnegative real number or `+inf`.
///
/// Hitting and meeting times live here. The value is never negative and never
/// NaN; the constructor rejects both.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ExtendedValue(f64);

impl ExtendedValue {
    pub const ZERO: ExtendedValue = ExtendedValue(0.0);
    pub const INFINITY: ExtendedValue = ExtendedValue(f64::INFINITY);

    pub fn new(value: f64) -> Option<Self> {
        // Adding 0.0 maps -0.0 to 0.0, keeping Eq and Ord consistent.
        (value >= 0.0).then_some(ExtendedValue(value + 0.0))
    }

    /// Panics on negative or NaN input.
    pub fn finite(value: f64) -> Self {
        assert!(
            value >= 0.0 && value.is_finite(),
            "not a finite nonnegative value: {value}"
        );
        ExtendedValue(value)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        !self.0.is_finite()
    }

    /// Scales by a nonnegative weight with the `0 * inf = 0` convention.
    pub fn scale(self, weight: f64) -> Self {
        debug_assert!(weight >= 0.0);
        if weight == 0.0 {
            ExtendedValue::ZERO
        } else {
            ExtendedValue(self.0 * weight)
        }
    }
}

impl Eq for ExtendedValue {}

impl PartialOrd for ExtendedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::ops::Add for ExtendedValue {
    type Output = ExtendedValue;
    fn add(self, rhs: Self) -> Self {
        ExtendedValue(self.0 + rhs.0)
    }
}

impl From<ExtendedValue> for f64 {
    fn from(v: ExtendedValue) -> f64 {
        v.0
    }
}

impl TryFrom<f64> for ExtendedValue {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        ExtendedValue::new(value).ok_or_else(|| {
            Error::InvalidArgument(format!("{value} is not a nonnegative extended real"))
        })
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.pad("inf")
        } else if let Some(precision) = f.precision() {
            write!(f, "{:.*}", precision, self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

// JSON has no infinity literal, so `+inf` travels as the string "inf".
impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExtendedVisitor;

        impl Visitor<'_> for ExtendedVisitor {
            type Value = ExtendedValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtendedValue, E> {
                ExtendedValue::new(v).ok_or_else(|| E::custom(format!("negative value {v}")))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtendedValue, E> {
                Ok(ExtendedValue(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtendedValue, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtendedValue, E> {
                match v {
                    "inf" | "+inf" => Ok(ExtendedValue::INFINITY),
                    other => Err(E::custom(format!("unexpected string `{other}`"))),
                }
            }
        }

        deserializer.deserialize_any(ExtendedVisitor)
    }
}

/// Which bound a query asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Upper,
    Lower,
}

impl Sense {
    /// Whether `candidate` strictly improves on `incumbent` in this sense.
    pub(crate) fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Sense::Upper => candidate > incumbent,
            Sense::Lower => candidate < incumbent,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Upper => "upper",
            Sense::Lower => "lower",
        })
    }
}

impl std::str::FromStr for Sense {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Sense::Upper),
            "lower" => Ok(Sense::Lower),
            other => Err(Error::InvalidArgument(format!(
                "sense must be `upper` or `lower`, got `{other}`"
            ))),
        }
    }
}
