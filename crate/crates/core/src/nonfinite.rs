//! Serde for `f64` fields that may be non-finite. JSON has no encoding for
//! them, so they are written as the strings `"inf"`, `"-inf"` and `"nan"`.

use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_str("nan")
    } else if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    struct V;
    impl Visitor<'_> for V {
        type Value = f64;
        fn expecting(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
            f.write_str("a number, \"inf\", \"-inf\" or \"nan\"")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::custom("expected \"inf\", \"-inf\" or \"nan\"")),
            }
        }
    }
    d.deserialize_any(V)
}

#[cfg(test)]
mod tests {
    #[derive(serde::Serialize, serde::Deserialize)]
    struct W(#[serde(with = "super")] f64);

    #[test]
    fn non_finite_round_trip() {
        for x in [1.5, f64::INFINITY, f64::NEG_INFINITY, f64::NAN, 0.0] {
            let text = serde_json::to_string(&W(x)).unwrap();
            let back: W = serde_json::from_str(&text).unwrap();
            assert!(back.0 == x || (x.is_nan() && back.0.is_nan()), "{text}");
        }
        assert_eq!(serde_json::to_string(&W(f64::NAN)).unwrap(), "\"nan\"");
        assert!(serde_json::from_str::<W>("\"huge\"").is_err());
    }
}
