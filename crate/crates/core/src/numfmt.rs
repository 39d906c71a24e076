//! Fixed-precision number formatting shared by the text exporters.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats `v` with 17 significant digits, enough to round-trip any f64.
pub fn sig17(v: f64) -> String {
    if v == 0.0 {
        // avoid "-0.0000000000000000e0"
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// f64 that serializes to JSON with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(sig17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}
