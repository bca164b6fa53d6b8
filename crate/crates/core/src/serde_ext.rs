//! Serialization of `f64` values that may be infinite (JSON has no infinity).

use serde::Serializer;

/// Writes finite values as numbers and non-finite ones as `"inf"`, `"-inf"`, `"nan"`.
pub fn f64_or_sentinel<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}
