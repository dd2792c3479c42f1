//! Number formatting shared by every writer.

use std::fmt::Write;

/// 17 significant digits in scientific notation; parses back to the same
/// `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn join_floats(xs: &[f64], sep: char) -> String {
    let mut out = String::new();
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(sep);
        }
        write!(out, "{}", float(*x)).unwrap();
    }
    out
}
