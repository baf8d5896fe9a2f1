//! Dense CSV and Matrix Market readers and writers.
//!
//! Writers print 17 significant digits so that every `f64` round-trips.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use std::fs;
use std::path::Path;

fn fmt_value<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

fn parse_value<T: Scalar>(tok: &str, line: usize) -> Result<T> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("not a number: '{}'", tok.trim()) })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite value '{}'", tok.trim()) });
    }
    Ok(T::of(v))
}

/// Parses comma-separated rows. With `header`, the first line is skipped.
/// Blank lines are ignored.
pub fn read_csv_str<T: Scalar>(text: &str, header: bool) -> Result<Matrix<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if header && i == 0 {
            continue;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line.split(',').map(|t| parse_value(t, i + 1)).collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, message: "no data rows".into() });
    }
    Matrix::from_rows(&rows)
}

pub fn read_csv_file<T: Scalar>(path: &Path, header: bool) -> Result<Matrix<T>> {
    read_csv_str(&fs::read_to_string(path)?, header)
}

pub fn write_csv_string<T: Scalar>(x: &Matrix<T>) -> String {
    let mut out = String::new();
    for i in 0..x.rows() {
        let line: Vec<String> = x.row(i).iter().map(|&v| fmt_value(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv_file<T: Scalar>(x: &Matrix<T>, path: &Path) -> Result<()> {
    fs::write(path, write_csv_string(x))?;
    Ok(())
}

/// Parses Matrix Market `array` (column-major dense) or `coordinate`
/// (sparse, materialized dense) files with `real` or `integer` fields and
/// `general` or `symmetric` symmetry.
pub fn read_matrix_market_str<T: Scalar>(text: &str) -> Result<Matrix<T>> {
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let tokens: Vec<String> = banner.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse { line: 1, message: "missing %%MatrixMarket matrix banner".into() });
    }
    let format = tokens[2].as_str();
    let field = tokens[3].as_str();
    let symmetry = tokens[4].as_str();
    if !matches!(field, "real" | "integer" | "double") {
        return Err(Error::Parse { line: 1, message: format!("unsupported field '{}'", field) });
    }
    let symmetric = match symmetry {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse { line: 1, message: format!("unsupported symmetry '{}'", other) }),
    };
    let mut data_lines = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line_no, size_line) =
        data_lines.next().ok_or(Error::Parse { line: 2, message: "missing size line".into() })?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| Error::Parse { line: size_line_no + 1, message: format!("bad size '{}'", t) })
        })
        .collect::<Result<_>>()?;
    match format {
        "array" => {
            if sizes.len() != 2 {
                return Err(Error::Parse { line: size_line_no + 1, message: "array size line needs 'rows cols'".into() });
            }
            let (m, n) = (sizes[0], sizes[1]);
            let mut x = Matrix::zeros(m, n);
            let mut count = 0usize;
            let expected = if symmetric { n * (n + 1) / 2 } else { m * n };
            let mut positions = Vec::with_capacity(expected);
            for j in 0..n {
                let start = if symmetric { j } else { 0 };
                for i in start..m {
                    positions.push((i, j));
                }
            }
            for (ln, l) in data_lines {
                for tok in l.split_whitespace() {
                    let v = parse_value::<T>(tok, ln + 1)?;
                    let &(i, j) = positions.get(count).ok_or(Error::Parse {
                        line: ln + 1,
                        message: "more values than the declared size".into(),
                    })?;
                    x[(i, j)] = v;
                    if symmetric {
                        x[(j, i)] = v;
                    }
                    count += 1;
                }
            }
            if count != expected {
                return Err(Error::Parse { line: 0, message: format!("expected {} values, found {}", expected, count) });
            }
            Ok(x)
        }
        "coordinate" => {
            if sizes.len() != 3 {
                return Err(Error::Parse { line: size_line_no + 1, message: "coordinate size line needs 'rows cols nnz'".into() });
            }
            let (m, n, nnz) = (sizes[0], sizes[1], sizes[2]);
            let mut x = Matrix::zeros(m, n);
            let mut count = 0;
            for (ln, l) in data_lines {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(Error::Parse { line: ln + 1, message: "expected 'row col value'".into() });
                }
                let idx = |s: &str, bound: usize| -> Result<usize> {
                    let v: usize = s.parse().map_err(|_| Error::Parse { line: ln + 1, message: format!("bad index '{}'", s) })?;
                    if v == 0 || v > bound {
                        return Err(Error::Parse { line: ln + 1, message: format!("index {} outside 1..={}", v, bound) });
                    }
                    Ok(v - 1)
                };
                let (i, j) = (idx(t[0], m)?, idx(t[1], n)?);
                let v = parse_value::<T>(t[2], ln + 1)?;
                x[(i, j)] += v;
                if symmetric && i != j {
                    x[(j, i)] += v;
                }
                count += 1;
            }
            if count != nnz {
                return Err(Error::Parse { line: 0, message: format!("expected {} entries, found {}", nnz, count) });
            }
            Ok(x)
        }
        other => Err(Error::Parse { line: 1, message: format!("unsupported format '{}'", other) }),
    }
}

pub fn read_matrix_market_file<T: Scalar>(path: &Path) -> Result<Matrix<T>> {
    read_matrix_market_str(&fs::read_to_string(path)?)
}

/// Dense `array real general` output.
pub fn write_matrix_market_string<T: Scalar>(x: &Matrix<T>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{} {}\n", x.rows(), x.cols()));
    for j in 0..x.cols() {
        for i in 0..x.rows() {
            out.push_str(&fmt_value(x.get(i, j)));
            out.push('\n');
        }
    }
    out
}

pub fn write_matrix_market_file<T: Scalar>(x: &Matrix<T>, path: &Path) -> Result<()> {
    fs::write(path, write_matrix_market_string(x))?;
    Ok(())
}

/// Reads by extension: `.mtx` as Matrix Market, anything else as CSV.
pub fn read_matrix_file<T: Scalar>(path: &Path, csv_header: bool) -> Result<Matrix<T>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("mtx") => read_matrix_market_file(path),
        _ => read_csv_file(path, csv_header),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_and_without_header() {
        let x: Matrix<f64> = read_csv_str("1,2\n3,4\n", false).unwrap();
        assert_eq!(x, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let y: Matrix<f64> = read_csv_str("a,b\n1,2\n", true).unwrap();
        assert_eq!(y.shape(), (1, 2));
        assert!(matches!(read_csv_str::<f64>("1,2\n3\n", false), Err(Error::Parse { line: 2, .. })));
        assert!(read_csv_str::<f64>("1,x\n", false).is_err());
        assert!(read_csv_str::<f64>("1,nan\n", false).is_err());
        assert!(read_csv_str::<f64>("", false).is_err());
    }

    #[test]
    fn matrix_market_array_and_coordinate() {
        let a: Matrix<f64> = read_matrix_market_str("%%MatrixMarket matrix array real general\n% c\n2 2\n1\n3\n2\n4\n").unwrap();
        assert_eq!(a, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let c: Matrix<f64> =
            read_matrix_market_str("%%MatrixMarket matrix coordinate real general\n2 3 2\n1 1 5\n2 3 -1.5\n").unwrap();
        assert_eq!(c, Matrix::from_rows(&[[5.0, 0.0, 0.0], [0.0, 0.0, -1.5]]).unwrap());
        let s: Matrix<f64> =
            read_matrix_market_str("%%MatrixMarket matrix coordinate integer symmetric\n2 2 2\n1 1 1\n2 1 7\n").unwrap();
        assert_eq!(s, Matrix::from_rows(&[[1.0, 7.0], [7.0, 0.0]]).unwrap());
        assert!(read_matrix_market_str::<f64>("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").is_err());
        assert!(read_matrix_market_str::<f64>("not a banner\n").is_err());
    }

    #[test]
    fn writers_round_trip_bits() {
        let x = Matrix::from_rows(&[[0.1, 1.0 / 3.0, -2.5e-300], [std::f64::consts::PI, 1e300, 0.0]]).unwrap();
        let back: Matrix<f64> = read_csv_str(&write_csv_string(&x), false).unwrap();
        assert_eq!(back, x);
        let back: Matrix<f64> = read_matrix_market_str(&write_matrix_market_string(&x)).unwrap();
        assert_eq!(back, x);
    }
}
