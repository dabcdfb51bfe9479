//! Reading delimited tables, the quadratic feature expansion, and the
//! on-disk dataset formats.
//!
//! Two dataset formats are supported:
//!
//! * binary: `BSSD` magic, little-endian `u32` version, `u64` n and p, a
//!   standardized flag byte, length-prefixed UTF-8 name and column names, X
//!   in row-major `f64`, then y;
//! * text: a `#bss-dataset` line followed by CSV with a header whose last
//!   column is the response. Floats are written in shortest round-trip form.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"BSSD";
const VERSION: u32 = 1;
const TEXT_MARKER: &str = "#bss-dataset";
const MISSING: [&str; 6] = ["", "NA", "na", "NaN", "nan", "?"];

/// Which column of a table is the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseSelector {
    Name(String),
    /// One-based column index.
    Index(usize),
    Last,
}

impl FromStr for ResponseSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<usize>() {
            Ok(0) => Err(Error::InvalidArgument("response index is one-based".into())),
            Ok(i) => Ok(ResponseSelector::Index(i)),
            Err(_) if s.eq_ignore_ascii_case("last") => Ok(ResponseSelector::Last),
            Err(_) => Ok(ResponseSelector::Name(s.to_string())),
        }
    }
}

/// A numeric table with a designated response column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub column_names: Vec<String>,
    /// n × m values, response included.
    pub values: DMatrix<f64>,
    /// Zero-based index of the response column.
    pub response: usize,
    /// Rows dropped while reading because of missing cells.
    pub dropped_rows: usize,
}

impl RawTable {
    pub fn new(column_names: Vec<String>, values: DMatrix<f64>, response: usize) -> Result<Self> {
        if column_names.len() != values.ncols() {
            return Err(Error::Shape(format!("{} names for {} columns", column_names.len(), values.ncols())));
        }
        if response >= values.ncols() {
            return Err(Error::InvalidArgument(format!("response column {} out of range", response + 1)));
        }
        Ok(Self { column_names, values, response, dropped_rows: 0 })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn predictor_count(&self) -> usize {
        self.values.ncols() - 1
    }

    pub fn predictor_names(&self) -> Vec<String> {
        self.column_names.iter().enumerate().filter(|(j, _)| *j != self.response).map(|(_, s)| s.clone()).collect()
    }

    pub fn predictors(&self) -> DMatrix<f64> {
        let cols: Vec<usize> = (0..self.values.ncols()).filter(|&j| j != self.response).collect();
        self.values.select_columns(&cols)
    }

    pub fn response_values(&self) -> Vec<f64> {
        self.values.column(self.response).iter().copied().collect()
    }
}

fn resolve(names: &[String], selector: &ResponseSelector) -> Result<usize> {
    match selector {
        ResponseSelector::Last => Ok(names.len() - 1),
        ResponseSelector::Index(i) if *i >= 1 && *i <= names.len() => Ok(i - 1),
        ResponseSelector::Index(i) => {
            Err(Error::InvalidArgument(format!("response index {i} out of range 1..={}", names.len())))
        }
        ResponseSelector::Name(n) => names
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| Error::InvalidArgument(format!("no column named `{n}`"))),
    }
}

/// Reads a comma-separated file with a header row.
///
/// Rows with a missing cell (empty, `NA`, `NaN`, `?`) are dropped and counted;
/// any other non-numeric cell is an error naming its line and column.
pub fn read_delimited(path: &Path, selector: &ResponseSelector) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_path(path)?;
    let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::Shape("header row has no columns".into()));
    }
    let response = resolve(&names, selector)?;
    let m = names.len();
    let mut data = Vec::new();
    let mut dropped = 0;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != m {
            return Err(Error::Ragged { row: line, expected: m, found: record.len() });
        }
        if record.iter().any(|c| MISSING.contains(&c)) {
            dropped += 1;
            continue;
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: c + 1,
                name: names[c].clone(),
                value: cell.to_string(),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with missing values", path.display());
    }
    let values = DMatrix::from_row_slice(rows, m, &data);
    let mut table = RawTable::new(names, values, response)?;
    table.dropped_rows = dropped;
    Ok(table)
}

/// Appends all squares and pairwise products of the predictors, ordered as
/// `X1², X1X2, X2², X1X3, X2X3, X3², …`. The response stays last.
pub fn quadratic_expand(table: &RawTable) -> RawTable {
    let base = table.predictors();
    let names = table.predictor_names();
    let (n, m) = base.shape();
    let total = m + m * (m + 1) / 2;
    let mut values = DMatrix::zeros(n, total + 1);
    let mut out_names = names.clone();
    values.columns_mut(0, m).copy_from(&base);
    let mut c = m;
    for j in 0..m {
        for i in 0..=j {
            for r in 0..n {
                values[(r, c)] = base[(r, i)] * base[(r, j)];
            }
            out_names.push(if i == j { format!("{}^2", names[i]) } else { format!("{}*{}", names[i], names[j]) });
            c += 1;
        }
    }
    for (r, v) in table.response_values().into_iter().enumerate() {
        values[(r, total)] = v;
    }
    out_names.push(table.column_names[table.response].clone());
    RawTable { column_names: out_names, values, response: total, dropped_rows: table.dropped_rows }
}

/// Standardizes the predictors (and optionally the response) into a [`Dataset`].
pub fn to_dataset(table: &RawTable, name: &str, standardize_y: bool) -> Result<Dataset> {
    if table.n() < 2 {
        return Err(Error::Shape(format!("need at least 2 rows, got {}", table.n())));
    }
    if table.predictor_count() == 0 {
        return Err(Error::Shape("table has no predictor columns".into()));
    }
    let data = Dataset::new(name, table.predictors(), table.response_values())?
        .with_column_names(table.predictor_names())?
        .standardize()?;
    if standardize_y {
        data.standardize_response()
    } else {
        Ok(data)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("bad path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn is_text_path(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("csv" | "txt"))
}

/// Saves in the text format for `.csv`/`.txt` paths and in binary otherwise.
pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let bytes = if is_text_path(path) { encode_text(data)? } else { encode_binary(data) };
    atomic_write(path, &bytes)
}

/// Loads either format, detected from the file contents.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        decode_binary(&bytes)
    } else if bytes.starts_with(TEXT_MARKER.as_bytes()) {
        decode_text(&bytes)
    } else {
        Err(Error::Corrupt(format!("{} is not a dataset file", path.display())))
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_binary(data: &Dataset) -> Vec<u8> {
    let (n, p) = (data.n(), data.p());
    let mut out = Vec::with_capacity(32 + 8 * n * (p + 1));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(p as u64).to_le_bytes());
    out.push(u8::from(data.is_standardized()));
    put_str(&mut out, data.name());
    for name in data.column_names() {
        put_str(&mut out, name);
    }
    for i in 0..n {
        for j in 0..p {
            out.extend_from_slice(&data.x()[(i, j)].to_le_bytes());
        }
    }
    for v in data.y() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Corrupt(format!("truncated at byte {} (wanted {len} more of {})", self.pos, self.bytes.len()))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::Corrupt("invalid UTF-8 in header".into()))
    }
}

pub fn decode_binary(bytes: &[u8]) -> Result<Dataset> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Corrupt("bad magic bytes".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Version(version));
    }
    let n = usize::try_from(c.u64()?).map_err(|_| Error::Corrupt("n overflows".into()))?;
    let p = usize::try_from(c.u64()?).map_err(|_| Error::Corrupt("p overflows".into()))?;
    let standardized = match c.take(1)?[0] {
        0 => false,
        1 => true,
        other => return Err(Error::Corrupt(format!("bad standardized flag {other}"))),
    };
    let expected = n.checked_mul(p + 1).and_then(|v| v.checked_mul(8));
    if expected.is_none_or(|e| e > bytes.len()) {
        return Err(Error::Corrupt(format!("header claims {n}x{p} values, file has {} bytes", bytes.len())));
    }
    let name = c.string()?;
    let names = (0..p).map(|_| c.string()).collect::<Result<Vec<_>>>()?;
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = c.f64()?;
        }
    }
    let y = (0..n).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    if c.pos != bytes.len() {
        return Err(Error::Corrupt(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Dataset::new(name, x, y)?.with_column_names(names)?.assume_standardized(standardized)
}

pub fn encode_text(data: &Dataset) -> Result<Vec<u8>> {
    let mut out = format!(
        "{TEXT_MARKER} version={VERSION} standardized={} name={}\n",
        data.is_standardized(),
        data.name()
    )
    .into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut header: Vec<&str> = data.column_names().iter().map(String::as_str).collect();
        header.push("y");
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(data.p() + 1);
        for i in 0..data.n() {
            row.clear();
            row.extend((0..data.p()).map(|j| data.x()[(i, j)].to_string()));
            row.push(data.y()[i].to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(io::Error::from)?;
    }
    Ok(out)
}

pub fn decode_text(bytes: &[u8]) -> Result<Dataset> {
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Corrupt("missing header".into()))?;
    let meta = std::str::from_utf8(&bytes[..newline]).map_err(|_| Error::Corrupt("invalid UTF-8 header".into()))?;
    let mut version = None;
    let mut standardized = None;
    let mut name = String::new();
    let rest = meta.strip_prefix(TEXT_MARKER).ok_or_else(|| Error::Corrupt("missing marker".into()))?.trim_start();
    let (fields, tail) = match rest.find("name=") {
        Some(pos) => (&rest[..pos], &rest[pos + 5..]),
        None => (rest, ""),
    };
    name.push_str(tail.trim_end_matches('\r'));
    for kv in fields.split_whitespace() {
        match kv.split_once('=') {
            Some(("version", v)) => version = v.parse::<u32>().ok(),
            Some(("standardized", v)) => standardized = v.parse::<bool>().ok(),
            _ => return Err(Error::Corrupt(format!("unexpected header field `{kv}`"))),
        }
    }
    match version {
        Some(VERSION) => {}
        Some(v) => return Err(Error::Version(v)),
        None => return Err(Error::Corrupt("missing version".into())),
    }
    let standardized = standardized.ok_or_else(|| Error::Corrupt("missing standardized flag".into()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(&bytes[newline + 1..]);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::Corrupt("text dataset needs at least one predictor and the response".into()));
    }
    let p = header.len() - 1;
    let mut xs = Vec::new();
    let mut y = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Corrupt(e.to_string()))?;
        if record.len() != p + 1 {
            return Err(Error::Ragged { row: i + 3, expected: p + 1, found: record.len() });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: i + 3,
                column: c + 1,
                name: header[c].clone(),
                value: cell.to_string(),
            })?;
            if c < p {
                xs.push(v);
            } else {
                y.push(v);
            }
        }
    }
    let x = DMatrix::from_row_slice(y.len(), p, &xs);
    Dataset::new(name, x, y)?.with_column_names(header[..p].to_vec())?.assume_standardized(standardized)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(m: usize) -> RawTable {
        let n = 4;
        let mut names: Vec<String> = (1..=m).map(|j| format!("X{j}")).collect();
        names.push("y".into());
        let values = DMatrix::from_fn(n, m + 1, |i, j| (i + 1) as f64 * (j + 2) as f64 + (i * j) as f64);
        RawTable::new(names, values, m).unwrap()
    }

    #[test]
    fn expansion_order_for_two_predictors() {
        let e = quadratic_expand(&table(2));
        assert_eq!(e.column_names, vec!["X1", "X2", "X1^2", "X1*X2", "X2^2", "y"]);
        let t = table(2);
        for r in 0..4 {
            let (a, b) = (t.values[(r, 0)], t.values[(r, 1)]);
            assert_eq!(e.values[(r, 3)], a * b);
            assert_eq!(e.values[(r, 4)], b * b);
            assert_eq!(e.values[(r, 5)], t.values[(r, 2)]);
        }
    }

    #[test]
    fn expansion_counts() {
        assert_eq!(quadratic_expand(&table(1)).predictor_names(), vec!["X1", "X1^2"]);
        assert_eq!(quadratic_expand(&table(8)).predictor_count(), 44);
    }

    #[test]
    fn selector_parsing() {
        assert_eq!("3".parse::<ResponseSelector>().unwrap(), ResponseSelector::Index(3));
        assert_eq!("ozone".parse::<ResponseSelector>().unwrap(), ResponseSelector::Name("ozone".into()));
        assert!("0".parse::<ResponseSelector>().is_err());
    }

    #[test]
    fn binary_rejects_bad_version_and_truncation() {
        let x = DMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 + 0.5);
        let d = Dataset::new("t", x, vec![1.0, 2.0, 3.5]).unwrap();
        let mut bytes = encode_binary(&d);
        assert_eq!(decode_binary(&bytes).unwrap(), d);
        assert!(matches!(decode_binary(&bytes[..bytes.len() - 3]), Err(Error::Corrupt(_))));
        bytes[4] = 9;
        assert!(matches!(decode_binary(&bytes), Err(Error::Version(9))));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let x = DMatrix::from_fn(3, 2, |i, j| ((i + 1) as f64 / 3.0).powi(j as i32 + 1) * 1e-7);
        let d = Dataset::new("a name, with comma", x, vec![0.1, 1.0 / 3.0, -2e300]).unwrap();
        assert_eq!(decode_text(&encode_text(&d).unwrap()).unwrap(), d);
    }
}
