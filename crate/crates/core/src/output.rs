//! Deterministic text output: 17-significant-digit floats and CSV helpers.

use std::io::{self, Write};

/// Formats a float with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 {
        // Normalise -0 so identical inputs produce identical bytes.
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// Writes a header line followed by rows of floats.
pub fn write_float_csv<W: Write, I>(mut w: W, header: &str, rows: I) -> io::Result<()>
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    writeln!(w, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.as_ref().iter().map(|&v| fmt17(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
