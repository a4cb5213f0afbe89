//! Plain-text matrix files.
//!
//! The first line is `m n complex_flag`. Each following line holds one row:
//! `re im` pairs when the flag is 1, bare real parts when it is 0. Values are
//! written with 17 significant digits, so a write/read cycle is bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{c64, is_real, CMatrix, CVector};

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes `h`; real matrices get flag 0 and one value per entry.
pub fn format_matrix(h: &CMatrix) -> String {
    let real = is_real(h.iter());
    let mut out = format!("{} {} {}\n", h.nrows(), h.ncols(), u8::from(!real));
    for i in 0..h.nrows() {
        let fields: Vec<String> = h
            .row(i)
            .iter()
            .map(|z| {
                if real {
                    number(z.re)
                } else {
                    format!("{} {}", number(z.re), number(z.im))
                }
            })
            .collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the text of a matrix file; `path` only labels errors.
pub fn parse_matrix(text: &str, path: &Path) -> Result<CMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header 'm n complex_flag'".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(err(hline, format!("expected 'm n complex_flag', got '{header}'")));
    }
    let count = |s: &str| s.parse::<usize>().map_err(|e| err(hline, format!("{s}: {e}")));
    let (m, n) = (count(head[0])?, count(head[1])?);
    let complex = match head[2] {
        "0" => false,
        "1" => true,
        other => return Err(err(hline, format!("complex_flag must be 0 or 1, got {other}"))),
    };
    let width = if complex { 2 * n } else { n };
    let mut h = CMatrix::zeros(m, n);
    for i in 0..m {
        let (lno, row) = lines
            .next()
            .ok_or_else(|| err(hline, format!("expected {m} rows, found {i}")))?;
        let vals = row
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|e| err(lno, format!("{s}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != width {
            return Err(err(lno, format!("expected {width} values, got {}", vals.len())));
        }
        if let Some(bad) = vals.iter().find(|v| !v.is_finite()) {
            return Err(err(lno, format!("non-finite entry {bad}")));
        }
        for j in 0..n {
            h[(i, j)] = if complex {
                c64(vals[2 * j], vals[2 * j + 1])
            } else {
                c64(vals[j], 0.0)
            };
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(err(lno, format!("trailing data after {m} rows")));
    }
    Ok(h)
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(&text, path)
}

pub fn write_matrix(h: &CMatrix, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, format_matrix(h)).map_err(io)
}

/// Reads a vector stored as an `m × 1` (or `1 × n`) matrix file.
pub fn read_vector(path: &Path) -> Result<CVector> {
    let h = read_matrix(path)?;
    match h.shape() {
        (_, 1) => Ok(h.column(0).into_owned()),
        (1, _) => Ok(h.row(0).transpose()),
        (m, n) => Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected a single row or column, got {m}x{n}"),
        }),
    }
}

pub fn write_vector(v: &CVector, path: &Path) -> Result<()> {
    write_matrix(&CMatrix::from_column_slice(v.len(), 1, v.as_slice()), path)
}
