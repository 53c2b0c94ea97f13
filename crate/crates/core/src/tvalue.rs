//! A real value that may legitimately be infinite.
//!
//! The t statistic returns a signed infinity when both samples have zero
//! variance but different means. JSON has no infinities, so such values are
//! written as the strings `"inf"` / `"-inf"` (and `"nan"`), finite values as
//! plain numbers.

use serde::de::{self, Deserializer, Visitor};
use serde::{Serialize, Serializer};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct TValue(pub f64);

impl TValue {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<f64> for TValue {
    fn from(v: f64) -> Self {
        TValue(v)
    }
}

impl Serialize for TValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> serde::Deserialize<'de> for TValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = TValue;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<TValue, E> {
                Ok(TValue(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<TValue, E> {
                Ok(TValue(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<TValue, E> {
                Ok(TValue(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<TValue, E> {
                match v {
                    "inf" => Ok(TValue(f64::INFINITY)),
                    "-inf" => Ok(TValue(f64::NEG_INFINITY)),
                    "nan" => Ok(TValue(f64::NAN)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}
