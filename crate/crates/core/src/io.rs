//! CSV input and output.
//!
//! Numeric output uses 17 significant digits so values round-trip exactly.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(csv::WriterBuilder::new().has_headers(false).from_path(path)?)
}

/// Writes a matrix, one row per line, no header.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = writer(path)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an angular-frequency matrix converted to Hz.
pub fn write_matrix_hz(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_matrix(path, &(m / std::f64::consts::TAU))
}

/// Writes a table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// [`write_table`] into any writer.
pub fn write_table_to<W: std::io::Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a square numeric CSV matrix without a header.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), message };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| parse_err(format!("line {}: {f:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(parse_err("empty matrix".into()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(parse_err(format!(
            "expected a square {n}x{n} matrix, row {} has {} entries",
            i + 1,
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Reads a numeric table with a header row.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), message };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| parse_err(format!("line {}: {f:?}: {e}", line + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Reads a matrix stored in Hz and converts it to rad/s.
pub fn read_matrix_hz(path: &Path) -> Result<DMatrix<f64>> {
    Ok(read_matrix(path)? * std::f64::consts::TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matrices_round_trip_bitwise(vals in proptest::collection::vec(-1e12f64..1e12, 9)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("m.csv");
            let m = DMatrix::from_row_slice(3, 3, &vals);
            write_matrix(&p, &m).unwrap();
            prop_assert_eq!(read_matrix(&p).unwrap(), m);
        }
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let rows = vec![vec![fmt_f64(1.0), fmt_f64(-2.5)], vec![fmt_f64(3.0), fmt_f64(0.1)]];
        write_table(&p, &["a", "b"], &rows).unwrap();
        let (h, r) = read_table(&p).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(r, vec![vec![1.0, -2.5], vec![3.0, 0.1]]);
        std::fs::write(&p, "a\nx\n").unwrap();
        assert!(matches!(read_table(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }
}
