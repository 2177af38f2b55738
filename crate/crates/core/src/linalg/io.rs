//! Plain-text matrix files.
//!
//! The native format is a header line `m n` followed by `m` lines of `n`
//! whitespace-separated decimals. Lines starting with `#` and blank lines are
//! skipped. Files whose name ends in `.csv` are read as headerless CSV instead.
//!
//! Entries are written with Rust's shortest round-trip float formatting, so
//! reading back a written file reproduces the matrix bit for bit.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{LinalgError, Matrix};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of input: expected {expected} rows, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("line {line}: {source}")]
    Matrix {
        line: usize,
        #[source]
        source: LinalgError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_row(text: &str, line: usize, sep: Option<char>, expected: Option<usize>) -> Result<Vec<f64>, ParseError> {
    let fields: Vec<&str> = match sep {
        Some(c) => text.split(c).map(str::trim).collect(),
        None => text.split_whitespace().collect(),
    };
    if let Some(n) = expected {
        if fields.len() != n {
            return Err(syntax(line, format!("expected {n} entries, found {}", fields.len())));
        }
    }
    fields
        .iter()
        .map(|f| {
            let x: f64 = f
                .parse()
                .map_err(|_| syntax(line, format!("invalid number {f:?}")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(syntax(line, format!("non-finite entry {f:?}")))
            }
        })
        .collect()
}

/// Parses the native `m n` + rows format from a reader.
pub fn read_matrix_from<R: Read>(reader: R) -> Result<Matrix, ParseError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut data = Vec::new();
    let mut rows_read = 0;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        match header {
            None => {
                let dims: Vec<&str> = text.split_whitespace().collect();
                if dims.len() != 2 {
                    return Err(syntax(line_no, "header must be \"<rows> <cols>\""));
                }
                let parse_dim = |s: &str| {
                    s.parse::<usize>()
                        .ok()
                        .filter(|&d| d > 0)
                        .ok_or_else(|| syntax(line_no, format!("invalid dimension {s:?}")))
                };
                let (m, n) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
                data.reserve(m * n);
                header = Some((m, n, line_no));
            }
            Some((m, n, _)) => {
                if rows_read == m {
                    return Err(syntax(line_no, format!("extra row beyond the declared {m}")));
                }
                data.extend(parse_row(text, line_no, None, Some(n))?);
                rows_read += 1;
            }
        }
    }
    let (m, n, header_line) = header.ok_or_else(|| syntax(1, "missing header"))?;
    if rows_read != m {
        return Err(ParseError::Truncated {
            expected: m,
            found: rows_read,
        });
    }
    Matrix::new(m, n, data).map_err(|source| ParseError::Matrix {
        line: header_line,
        source,
    })
}

/// Parses the native format from a string.
pub fn parse_matrix(text: &str) -> Result<Matrix, ParseError> {
    read_matrix_from(text.as_bytes())
}

fn read_csv<R: Read>(reader: R) -> Result<Matrix, ParseError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let expected = rows.first().map(Vec::len);
        rows.push(parse_row(text, idx + 1, Some(','), expected)?);
    }
    if rows.is_empty() {
        return Err(syntax(1, "empty CSV input"));
    }
    Matrix::from_rows(&rows).map_err(|source| ParseError::Matrix { line: 1, source })
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a matrix file, choosing CSV for `.csv` paths.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix, ParseError> {
    let path = path.as_ref();
    let file = fs::File::open(path)?;
    if is_csv(path) {
        read_csv(file)
    } else {
        read_matrix_from(file)
    }
}

/// Writes the native format.
pub fn write_matrix_to<W: Write>(mut out: W, m: &Matrix) -> io::Result<()> {
    writeln!(out, "{} {}", m.rows(), m.cols())?;
    write_rows(&mut out, m, ' ')
}

fn write_rows<W: Write>(out: &mut W, m: &Matrix, sep: char) -> io::Result<()> {
    for row in m.rows_iter() {
        let mut first = true;
        for x in row {
            if !first {
                write!(out, "{sep}")?;
            }
            write!(out, "{x}")?;
            first = false;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a matrix file; `.csv` paths get headerless CSV.
pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> io::Result<()> {
    let path = path.as_ref();
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    if is_csv(path) {
        write_rows(&mut out, m, ',')?;
    } else {
        write_matrix_to(&mut out, m)?;
    }
    out.flush()
}
