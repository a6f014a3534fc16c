//! CSV matrix files.
//!
//! Matrices are stored row-major, one matrix row per line. A first line of
//! non-numeric labels is treated as a header and skipped, and lines starting
//! with `#` (such as the `# m n` line written by [`write_matrix`]) are ignored.
//! Floats are written with 17 significant digits so that a write/read cycle is
//! bit-exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Parses a matrix from CSV text. `origin` is used in error messages only.
pub fn parse_matrix(text: impl Read, origin: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text);
    let parse_err = |message: String| Error::Parse { path: origin.to_path_buf(), message };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => rows.push(values),
            Err(_) if rows.is_empty() && line == 0 => continue,
            Err(e) => return Err(parse_err(format!("record {}: {e}", line + 1))),
        }
    }
    let Some(first) = rows.first() else {
        return Err(parse_err("no numeric rows".into()));
    };
    let ncols = first.len();
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(parse_err(format!("row {} has a different number of fields", i + 1)));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let file = File::open(path)?;
    parse_matrix(file, path)
}

/// Writes `a` with a leading `# m n` line.
pub fn write_matrix(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_matrix_to(&mut out, a)?;
    out.flush()?;
    Ok(())
}

pub fn write_matrix_to(out: &mut impl Write, a: &DMatrix<f64>) -> Result<()> {
    writeln!(out, "# {} {}", a.nrows(), a.ncols())?;
    let mut line = String::new();
    for i in 0..a.nrows() {
        line.clear();
        for j in 0..a.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&fmt_f64(a[(i, j)]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let a = DMatrix::from_fn(4, 3, |i, j| ((i * 7 + j * 3) as f64).sin().abs() / 3.0 + 1e-300);
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, &a).unwrap();
        let b = parse_matrix(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn header_and_comments() {
        let text = "# 2 2\nb1,b2\n1, 2\n\n3,4\n";
        let a = parse_matrix(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn ragged_and_garbage_rejected() {
        assert!(parse_matrix("1,2\n3\n".as_bytes(), Path::new("mem")).is_err());
        assert!(parse_matrix("1,2\n3,x\n".as_bytes(), Path::new("mem")).is_err());
        assert!(parse_matrix("# only a comment\n".as_bytes(), Path::new("mem")).is_err());
    }
}
