//! Fixed 17-significant-digit number formatting for CSV and JSON output.

use serde::de::{Deserialize, Deserializer};
use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats a float with 17 significant digits. Non-finite values become
/// `NaN`, `inf` or `-inf`.
pub fn f17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A float that serializes to JSON with 17 significant digits.
///
/// Non-finite values serialize as `null`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct F17(pub f64);

impl From<f64> for F17 {
    fn from(x: f64) -> Self {
        F17(x)
    }
}

impl From<F17> for f64 {
    fn from(x: F17) -> Self {
        x.0
    }
}

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(f17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for F17 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let x = Option::<f64>::deserialize(deserializer)?;
        Ok(F17(x.unwrap_or(f64::NAN)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(f17(std::f64::consts::PI), "3.1415926535897931e0");
        assert_eq!(f17(0.0), "0.0000000000000000e0");
        let back: f64 = f17(0.1 + 0.2).parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn json_round_trip() {
        let s = serde_json::to_string(&vec![F17(1.0 / 3.0), F17(f64::NAN)]).unwrap();
        assert_eq!(s, "[3.3333333333333331e-1,null]");
        let v: Vec<F17> = serde_json::from_str(&s).unwrap();
        assert_eq!(v[0].0, 1.0 / 3.0);
        assert!(v[1].0.is_nan());
    }
}
