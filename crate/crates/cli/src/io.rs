//! CSV encoding of traces and spectra.

use std::path::Path;

use nvmech::analysis::PowerSpectrum;
use nvmech::ensemble::SignalTrace;
use nvmech::units::{angular_to_mhz, s_to_us, us_to_s};

use crate::error::{CliError, CliResult};

/// Unit of the first CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abscissa {
    /// Seconds on disk as microseconds.
    TimeUs,
    /// Plain number (depth in µm, area in µs, index).
    Raw,
}

impl Abscissa {
    fn encode(self, v: f64) -> f64 {
        match self {
            Abscissa::TimeUs => s_to_us(v),
            Abscissa::Raw => v,
        }
    }
}

fn to_string(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn sci(v: f64) -> String {
    format!("{v:e}")
}

pub fn trace_csv(trace: &SignalTrace<f64>, abscissa: Abscissa, header: &str) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record([header, "mean", "stderr"]).map_err(err)?;
    for i in 0..trace.len() {
        w.write_record([
            sci(abscissa.encode(trace.abscissa[i])),
            sci(trace.mean[i]),
            sci(trace.stderr[i]),
        ])
        .map_err(err)?;
    }
    to_string(w)
}

/// Several traces sharing one abscissa, side by side.
pub fn table_csv(header: &[String], columns: &[Vec<f64>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    let rows = columns.first().map_or(0, Vec::len);
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| sci(c[i]))).map_err(err)?;
    }
    to_string(w)
}

pub fn spectrum_csv(s: &PowerSpectrum<f64>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["frequency_mhz", "power"]).map_err(err)?;
    for (f, p) in s.frequency.iter().zip(&s.power) {
        w.write_record([sci(angular_to_mhz(*f)), sci(*p)]).map_err(err)?;
    }
    to_string(w)
}

/// Reads a trace CSV. The first column is time in µs; `stderr` is optional.
pub fn read_trace(path: &Path) -> CliResult<SignalTrace<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_trace(&text).map_err(|e| match e {
        CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_trace(text: &str) -> CliResult<SignalTrace<f64>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::schema(e.to_string()))?.clone();
    if header.len() < 2 {
        return Err(CliError::schema("trace needs at least two columns"));
    }
    let mean_col = header.iter().position(|h| h == "mean").unwrap_or(1);
    let se_col = header.iter().position(|h| h == "stderr");
    let (mut x, mut y, mut e) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|err| CliError::schema(err.to_string()))?;
        let num = |col: usize| -> CliResult<f64> {
            let field = rec.get(col).ok_or_else(|| CliError::schema(format!("row {}: missing column", line + 2)))?;
            field
                .parse::<f64>()
                .map_err(|_| CliError::schema(format!("row {}: `{field}` is not a number", line + 2)))
        };
        x.push(us_to_s(num(0)?));
        y.push(num(mean_col)?);
        e.push(match se_col {
            Some(c) => num(c)?,
            None => 0.0,
        });
    }
    Ok(SignalTrace {
        abscissa: x,
        mean: y,
        stderr: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip() {
        let t = SignalTrace {
            abscissa: vec![0.0, 2e-8, 4e-8],
            mean: vec![0.1, -0.25, 1.0 / 3.0],
            stderr: vec![0.0, 1e-3, 2e-3],
        };
        let text = trace_csv(&t, Abscissa::TimeUs, "abscissa").unwrap();
        assert!(text.starts_with("abscissa,mean,stderr\n"));
        let back = parse_trace(&text).unwrap();
        assert_eq!(back.mean, t.mean);
        for (a, b) in back.abscissa.iter().zip(&t.abscissa) {
            assert!((a - b).abs() < 1e-20);
        }
    }

    #[test]
    fn bad_numbers_are_schema_errors() {
        let r = parse_trace("abscissa,mean\n0,abc\n");
        assert!(matches!(r, Err(CliError::Schema(_))));
    }
}
