use std::io;

use nalgebra::Matrix2;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use jetq_core::linalg::CMatrix;
use jetq_core::Complex64;

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty printer that writes every float with 17 significant digits.
pub struct FixedFloatFormatter<'a>(PrettyFormatter<'a>);

impl FixedFloatFormatter<'_> {
    pub fn new() -> Self {
        FixedFloatFormatter(PrettyFormatter::new())
    }
}

pub fn format_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

impl Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_string(v: &Value) -> String {
    use serde::Serialize;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::new());
    v.serialize(&mut ser)
        .expect("serializing a json value to memory");
    let mut s = String::from_utf8(buf).expect("json is utf-8");
    s.push('\n');
    s
}

/// Non-finite floats become `null`.
pub fn real(v: f64) -> Value {
    json!(v)
}

pub fn complex(c: Complex64) -> Value {
    json!([c.re, c.im])
}

pub fn complex_vec(v: &[Complex64]) -> Value {
    Value::Array(v.iter().copied().map(complex).collect())
}

pub fn matrix(m: &CMatrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().copied().map(complex).collect()))
            .collect(),
    )
}

pub fn real_matrix2(m: &Matrix2<f64>) -> Value {
    json!([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_string(&json!({"x": 0.1, "n": 3, "bad": real(f64::NAN)}));
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"bad\": null"));
    }

    #[test]
    fn complex_is_pair() {
        assert_eq!(complex(Complex64::new(1.0, -2.0)), json!([1.0, -2.0]));
    }
}
