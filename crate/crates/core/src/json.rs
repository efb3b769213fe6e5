//! JSON emission with fixed-width scientific floats.
//!
//! Every float in an emitted document is written with 17 significant
//! digits (`{:.16e}`), enough to reproduce the exact binary value on
//! parse, and stable byte for byte across runs. Non-finite values map
//! to `null`.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

/// serde_json formatter that renders floats in 17-significant-digit
/// scientific notation.
pub struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.8e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Serializes a value to a JSON string with scientific float formatting.
pub fn to_string_sci<V: Serialize>(value: &V) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory serialization cannot fail");
    String::from_utf8(out).expect("serde_json emits utf-8")
}

/// Formats one scalar the same way the JSON writer does; used by the
/// CSV emitters so every float in every artifact has the same shape.
pub fn fmt_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        "null".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_17_significant_digits() {
        assert_eq!(to_string_sci(&0.5f64), "5.0000000000000000e-1");
        assert_eq!(to_string_sci(&f64::INFINITY), "null");
        let parsed: f64 = "5.0000000000000000e-1".parse().unwrap();
        assert_eq!(parsed, 0.5);
    }

    #[test]
    fn round_trips_awkward_values() {
        for &v in &[1.0f64 / 3.0, 2.0 / 3.0, 1e-300, 6.02214076e23, -0.1] {
            let s = to_string_sci(&v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
