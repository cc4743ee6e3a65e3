//! File-format helpers shared by every module.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Formats with 12 significant digits, independent of locale.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub(crate) fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.kind() {
        csv::ErrorKind::Io(_) => match err.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
            _ => unreachable!(),
        },
        _ => Error::Parse { path: path.to_path_buf(), line, msg: err.to_string() },
    }
}

pub(crate) fn parse_field<T: FromStr>(path: &Path, line: u64, field: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field.parse().map_err(|e: T::Err| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("cannot parse `{field}`: {e}"),
    })
}

/// Opens a file for writing. Refuses to replace an existing file unless
/// `overwrite` is set.
pub fn create_output(path: &Path, overwrite: bool) -> Result<BufWriter<File>> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = if overwrite {
        File::create(path).map_err(io_err)?
    } else {
        File::options().write(true).create_new(true).open(path).map_err(io_err)?
    };
    Ok(BufWriter::new(file))
}

/// Writes a header plus rows of numbers as CSV.
pub fn write_numeric_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_num(*x)))?;
    }
    w.flush().map_err(|source| Error::Io { path: "<csv>".into(), source })?;
    Ok(())
}

/// Reads a numeric CSV whose header must equal `header`.
/// Rows come back with their 1-based line numbers.
pub fn read_numeric_csv(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, e))?;
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        let found: Vec<_> = found.iter().collect();
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: if found.iter().all(|f| f.is_empty()) {
                format!("empty file, expected header `{}`", header.join(","))
            } else {
                format!("expected header `{}`, found `{}`", header.join(","), found.join(","))
            },
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record.iter().map(|f| parse_field::<f64>(path, line, f)).collect::<Result<Vec<_>>>()?;
        rows.push((line, row));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(857000.0), "857000");
        assert_eq!(fmt_num(3.939e-4), "0.0003939");
        assert_eq!(fmt_num(1.599e10), "15990000000");
        assert_eq!(fmt_num(-2.5e-9), "-2.5e-9");
        assert_eq!(fmt_num(6.02214076e23), "6.02214076e23");
        let x = 0.123_456_789_012_345_6;
        assert_eq!(fmt_num(x).parse::<f64>().unwrap(), round_sig(x));
    }
}
