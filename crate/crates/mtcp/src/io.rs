//! Text formats for matrix series.
//!
//! `mts-text`: a header line `MTS v1 <p> <q> <n>`, then `n` slices of `p`
//! lines with `q` whitespace-separated numbers, slices separated by a blank
//! line. Values are written with Rust's shortest round-trip formatting, so
//! reading a written file gives back the same bits.
//!
//! `csv-long`: header `t,i,j,value` with 1-based indices; an empty value marks
//! a missing entry.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use mtcp_core::series::SeriesMask;
use mtcp_core::MatrixSeries;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MTS_MAGIC: &str = "MTS";
pub const MTS_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    MtsText,
    CsvLong,
}

impl Format {
    /// `csv-long` for a `.csv` extension, `mts-text` otherwise.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::CsvLong,
            _ => Format::MtsText,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::MtsText => "mts-text",
            Format::CsvLong => "csv-long",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mts-text" => Ok(Format::MtsText),
            "csv-long" => Ok(Format::CsvLong),
            other => Err(format!("unknown format {other:?} (expected mts-text or csv-long)")),
        }
    }
}

/// A loaded series; masked entries hold 0 until imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub series: MatrixSeries,
    pub mask: SeriesMask,
}

pub fn load_series(path: &Path, format: Option<Format>) -> Result<Loaded> {
    let file = File::open(path).map_err(Error::io(path))?;
    match format.unwrap_or_else(|| Format::from_path(path)) {
        Format::MtsText => {
            let series = read_mts(BufReader::new(file))?;
            let mask = SeriesMask::empty(series.p(), series.q(), series.n());
            Ok(Loaded { series, mask })
        }
        Format::CsvLong => read_csv_long(file),
    }
}

pub fn save_series(path: &Path, series: &MatrixSeries) -> Result<()> {
    save_slices(path, series.slices())
}

pub fn save_slices(path: &Path, slices: &[DMatrix<f64>]) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    write_mts_slices(&mut w, slices).map_err(Error::io(path))?;
    w.flush().map_err(Error::io(path))
}

pub fn write_mts<W: Write + ?Sized>(w: &mut W, series: &MatrixSeries) -> std::io::Result<()> {
    write_mts_slices(w, series.slices())
}

/// Writes any list of equally shaped slices, including fewer than a series
/// needs (forecast output).
pub fn write_mts_slices<W: Write + ?Sized>(w: &mut W, slices: &[DMatrix<f64>]) -> std::io::Result<()> {
    let (p, q) = slices.first().map_or((0, 0), |m| m.shape());
    writeln!(w, "{MTS_MAGIC} {MTS_VERSION} {p} {q} {}", slices.len())?;
    for (t, y) in slices.iter().enumerate() {
        if t > 0 {
            writeln!(w)?;
        }
        for i in 0..p {
            for j in 0..q {
                if j > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{}", y[(i, j)])?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn read_mts<R: BufRead>(reader: R) -> Result<MatrixSeries> {
    Ok(MatrixSeries::new(read_mts_slices(reader)?)?)
}

/// Parses an `mts-text` file without the minimum-length check.
pub fn read_mts_slices<R: BufRead>(reader: R) -> Result<Vec<DMatrix<f64>>> {
    let mut lines = reader.lines().enumerate();
    let (p, q, n) = match lines.next() {
        Some((_, line)) => parse_header(&line.map_err(|e| parse_err(1, e))?)?,
        None => return Err(parse_err(1, "empty file")),
    };
    let mut slices = Vec::with_capacity(n);
    let mut current = DMatrix::zeros(p, q);
    let mut row = 0;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| parse_err(line_no, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if row != 0 {
                return Err(parse_err(
                    line_no,
                    format!("slice {} ends after {row} of {p} rows", slices.len() + 1),
                ));
            }
            continue;
        }
        if slices.len() == n {
            return Err(Error::Core(mtcp_core::Error::DimensionMismatch(format!(
                "line {line_no}: data beyond the {n} slices declared in the header"
            ))));
        }
        let mut count = 0;
        for token in trimmed.split_whitespace() {
            if count == q {
                return Err(Error::Core(mtcp_core::Error::DimensionMismatch(format!(
                    "line {line_no}: more than {q} values"
                ))));
            }
            current[(row, count)] = token
                .parse::<f64>()
                .map_err(|_| parse_err(line_no, format!("non-numeric token {token:?}")))?;
            count += 1;
        }
        if count != q {
            return Err(Error::Core(mtcp_core::Error::DimensionMismatch(format!(
                "line {line_no}: {count} values, expected {q}"
            ))));
        }
        row += 1;
        if row == p {
            slices.push(std::mem::replace(&mut current, DMatrix::zeros(p, q)));
            row = 0;
        }
    }
    if slices.len() != n || row != 0 {
        return Err(Error::Core(mtcp_core::Error::DimensionMismatch(format!(
            "header declares {n} slices, found {} complete",
            slices.len()
        ))));
    }
    Ok(slices)
}

fn parse_header(line: &str) -> Result<(usize, usize, usize)> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != MTS_MAGIC {
        return Err(parse_err(
            1,
            format!("expected \"{MTS_MAGIC} {MTS_VERSION} <p> <q> <n>\", got {line:?}"),
        ));
    }
    if tokens[1] != MTS_VERSION {
        return Err(parse_err(1, format!("unsupported version {:?}", tokens[1])));
    }
    let dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(1, format!("bad dimension {s:?}")))
    };
    let (p, q, n) = (dim(tokens[2])?, dim(tokens[3])?, dim(tokens[4])?);
    if p == 0 || q == 0 {
        return Err(parse_err(1, "dimensions must be positive"));
    }
    Ok((p, q, n))
}

fn parse_err(line: usize, message: impl ToString) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

/// Reads `csv-long`. Dimensions are the largest indices seen; every cell of
/// the `p x q x n` grid must appear exactly once, with an empty value for a
/// missing entry.
pub fn read_csv_long<R: Read>(reader: R) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "i", "j", "value"] {
        return Err(parse_err(
            1,
            format!(
                "expected header t,i,j,value, got {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        ));
    }
    let mut entries = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record?;
        if record.len() != 4 {
            return Err(parse_err(line, format!("{} fields, expected 4", record.len())));
        }
        let index = |k: usize| -> Result<usize> {
            match record[k].parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(parse_err(line, format!("bad 1-based index {:?}", &record[k]))),
            }
        };
        let (t, i, j) = (index(0)?, index(1)?, index(2)?);
        let value = match &record[3] {
            "" => None,
            v => Some(
                v.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("non-numeric token {v:?}")))?,
            ),
        };
        entries.push((t, i, j, value));
    }
    if entries.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    let n = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
    let p = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
    let q = entries.iter().map(|e| e.2).max().unwrap_or(0) + 1;
    let mut slices = vec![DMatrix::zeros(p, q); n];
    let mut mask = SeriesMask::empty(p, q, n);
    let mut seen = HashSet::with_capacity(entries.len());
    for (t, i, j, value) in entries {
        if !seen.insert((t, i, j)) {
            return Err(Error::Core(mtcp_core::Error::DimensionMismatch(format!(
                "entry (t={}, i={}, j={}) appears twice",
                t + 1,
                i + 1,
                j + 1
            ))));
        }
        match value {
            Some(v) => slices[t][(i, j)] = v,
            None => mask.set_missing(i, j, t),
        }
    }
    if seen.len() != p * q * n {
        return Err(Error::Core(mtcp_core::Error::DimensionMismatch(format!(
            "{} of {} entries present for a {p}x{q}x{n} series",
            seen.len(),
            p * q * n
        ))));
    }
    Ok(Loaded {
        series: MatrixSeries::new(slices)?,
        mask,
    })
}

/// Writes `csv-long`, leaving masked entries empty.
pub fn write_csv_long<W: Write>(w: W, series: &MatrixSeries, mask: Option<&SeriesMask>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "i", "j", "value"])?;
    for t in 0..series.n() {
        for i in 0..series.p() {
            for j in 0..series.q() {
                let value = if mask.is_some_and(|m| m.is_missing(i, j, t)) {
                    String::new()
                } else {
                    series.get(i, j, t).to_string()
                };
                wtr.write_record([(t + 1).to_string(), (i + 1).to_string(), (j + 1).to_string(), value])?;
            }
        }
    }
    wtr.flush().map_err(Error::io("<csv output>"))?;
    Ok(())
}
