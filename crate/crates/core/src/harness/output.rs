//! CSV emission.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A row that knows its CSV header and cell text.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Formats `x` with 12 significant digits, fixed notation for moderate
/// magnitudes and scientific otherwise. NaN becomes an empty cell.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to the value [`format_sig`] writes.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("round trip")
}

/// Writes `rows` with a header line. Fails without creating the file when
/// `rows` is empty.
pub fn emit_csv<R: CsvRecord>(rows: &[R], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid(format!("no rows to write to {}", path.display())));
    }
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(csv_err)?;
    writer.write_record(R::header()).map_err(csv_err)?;
    for row in rows {
        writer.write_record(row.fields()).map_err(csv_err)?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Pair(i32, f64);

    impl CsvRecord for Pair {
        fn header() -> &'static [&'static str] {
            &["id", "value"]
        }
        fn fields(&self) -> Vec<String> {
            vec![self.0.to_string(), format_sig(self.1)]
        }
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.5), "1.5");
        assert_eq!(format_sig(-1.597437077524575), "-1.59743707752");
        assert_eq!(format_sig(123456789012345.0), "1.23456789012e14");
        assert_eq!(format_sig(1e-12), "1e-12");
        assert_eq!(format_sig(0.000123), "0.000123");
        assert_eq!(format_sig(20.0), "20");
        assert_eq!(format_sig(f64::NAN), "");
    }

    #[test]
    fn empty_rows_create_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        assert!(emit_csv::<Pair>(&[], &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        emit_csv(&[Pair(1, 0.25), Pair(2, -3.0)], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "id,value\r\n1,0.25\r\n2,-3\r\n");
    }

    #[test]
    fn unwritable_path_reports_it() {
        let err = emit_csv(&[Pair(1, 1.0)], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }

    proptest! {
        #[test]
        fn round_trip_keeps_twelve_digits(x in prop::num::f64::NORMAL) {
            let parsed: f64 = format_sig(x).parse().unwrap();
            prop_assert_eq!(parsed, round_sig(x));
            prop_assert!(((parsed - x) / x).abs() <= 5e-12);
        }
    }
}
