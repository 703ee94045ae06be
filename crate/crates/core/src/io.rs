//! CSV ingestion and output formats.
//!
//! Input files are UTF-8 CSV with a header row. Lines starting with `#` are
//! comments, so the metadata headers this tool writes can be piped straight
//! back in. Errors carry the 1-based line number of the offending row.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Read;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::analysis::GroupCorrelation;
use crate::error::{Error, Result};
use crate::resampling::{AccumulationPoint, BootstrapReport};
use crate::stats::TrendFit;
use crate::tally::{FrequencySpectrum, ObservationRecord};

/// Parsed long-format observation table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LongTable {
    pub records: Vec<ObservationRecord>,
    /// Header names beyond `sample_id`, `species_id` and `count`.
    pub extra_columns: Vec<String>,
}

struct Table {
    headers: Vec<String>,
    rows: Vec<(usize, StringRecord)>,
}

fn line_of(pos: Option<&csv::Position>) -> usize {
    pos.map(|p| p.line() as usize).unwrap_or(0)
}

fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(reader);
    let header_line;
    let headers: Vec<String> = {
        let h = rdr.headers().map_err(csv_error)?;
        header_line = line_of(h.position()).max(1);
        h.iter().map(str::to_owned).collect()
    };
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::schema(header_line, "missing header row"));
    }
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::schema(header_line, format!("duplicate header `{h}`")));
        }
    }
    let mut rows = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(csv_error)?;
        rows.push((line_of(record.position()), record));
    }
    Ok(Table { headers, rows })
}

fn csv_error(e: csv::Error) -> Error {
    let row = line_of(e.position());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => Error::schema(row, format!("invalid UTF-8: {err}")),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::schema(row, format!("expected {expected_len} fields, found {len}")),
        other => Error::schema(row, format!("{other:?}")),
    }
}

fn column(headers: &[String], name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn require(headers: &[String], name: &str) -> Result<usize> {
    column(headers, name).ok_or_else(|| Error::schema(1, format!("missing required column `{name}`")))
}

fn parse_count(raw: &str, row: usize, what: &str) -> Result<u64> {
    raw.parse::<u64>()
        .map_err(|_| Error::schema(row, format!("{what} `{raw}` is not a non-negative integer")))
}

/// Long format: `sample_id,species_id,count[,<group columns>...]`.
///
/// `species_id` is required. `sample_id` may be absent or blank (the record
/// then has no sample), and `count` defaults to 1 when absent or blank.
pub fn read_long_csv<R: Read>(reader: R) -> Result<LongTable> {
    let table = read_table(reader)?;
    let species_col = require(&table.headers, "species_id")?;
    let sample_col = column(&table.headers, "sample_id");
    let count_col = column(&table.headers, "count");
    let extra: Vec<(usize, String)> = table
        .headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != species_col && Some(*i) != sample_col && Some(*i) != count_col)
        .map(|(i, h)| (i, h.clone()))
        .collect();

    let mut records = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let species = row.get(species_col).unwrap_or("");
        if species.is_empty() {
            return Err(Error::schema(*line, "empty species_id"));
        }
        let count = match count_col.and_then(|c| row.get(c)).filter(|s| !s.is_empty()) {
            Some(raw) => parse_count(raw, *line, "count")?,
            None => 1,
        };
        let sample = sample_col.and_then(|c| row.get(c)).unwrap_or("");
        let mut record = ObservationRecord::new(sample, species, count).with_row(*line);
        for (i, name) in &extra {
            let value = row.get(*i).unwrap_or("");
            if !value.is_empty() {
                record = record.with_attribute(name.clone(), value);
            }
        }
        records.push(record);
    }
    Ok(LongTable {
        records,
        extra_columns: extra.into_iter().map(|(_, h)| h).collect(),
    })
}

/// Histogram format: `species_id,count`, one line per species.
pub fn read_histogram_csv<R: Read>(reader: R) -> Result<Vec<(String, u64)>> {
    let table = read_table(reader)?;
    let species_col = require(&table.headers, "species_id")?;
    let count_col = require(&table.headers, "count")?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let species = row.get(species_col).unwrap_or("");
        if species.is_empty() {
            return Err(Error::schema(*line, "empty species_id"));
        }
        if !seen.insert(species.to_owned()) {
            return Err(Error::schema(*line, format!("duplicate species `{species}`")));
        }
        let count = parse_count(row.get(count_col).unwrap_or(""), *line, "count")?;
        out.push((species.to_owned(), count));
    }
    Ok(out)
}

/// Spectrum format: `r,f_r` with `r` strictly increasing and at least 1.
pub fn read_spectrum_csv<R: Read>(reader: R) -> Result<Vec<(u64, u64)>> {
    let table = read_table(reader)?;
    let r_col = require(&table.headers, "r")?;
    let f_col = require(&table.headers, "f_r")?;
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let r = parse_count(row.get(r_col).unwrap_or(""), *line, "r")?;
        let f = parse_count(row.get(f_col).unwrap_or(""), *line, "f_r")?;
        if r == 0 {
            return Err(Error::schema(*line, "r must be at least 1"));
        }
        if let Some(&(prev, _)) = out.last() {
            if r <= prev {
                return Err(Error::schema(*line, format!("r={r} does not increase after r={prev}")));
            }
        }
        out.push((r, f));
    }
    Ok(out)
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.starts_with('#') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn spectrum_csv(spec: &FrequencySpectrum) -> String {
    let mut out = String::from("r,f_r\n");
    for (r, f) in spec.iter() {
        let _ = writeln!(out, "{r},{f}");
    }
    out
}

/// Spectrum of several groups: `group,r,f_r`.
pub fn grouped_spectrum_csv<'a>(groups: impl IntoIterator<Item = (&'a str, FrequencySpectrum)>) -> String {
    let mut out = String::from("group,r,f_r\n");
    for (key, spec) in groups {
        for (r, f) in spec.iter() {
            let _ = writeln!(out, "{},{r},{f}", field(key));
        }
    }
    out
}

pub fn histogram_csv<'a>(counts: impl IntoIterator<Item = (&'a String, &'a u64)>) -> String {
    let mut out = String::from("species_id,count\n");
    for (species, count) in counts {
        let _ = writeln!(out, "{},{count}", field(species));
    }
    out
}

/// Long format with an optional trailing group column.
pub fn long_csv(records: &[ObservationRecord], group_column: Option<&str>) -> String {
    let mut out = String::from("sample_id,species_id,count");
    if let Some(g) = group_column {
        out.push(',');
        out.push_str(&field(g));
    }
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{}",
            field(r.sample_id.as_deref().unwrap_or("")),
            field(&r.species_id),
            r.count
        );
        if let Some(g) = group_column {
            let _ = write!(out, ",{}", field(r.attributes.get(g).map(String::as_str).unwrap_or("")));
        }
        out.push('\n');
    }
    out
}

pub fn accumulation_csv(points: &[AccumulationPoint]) -> String {
    let mut out = String::from("k,replicates,mean_s_obs,mean_s_hat,sd_s_hat\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{:.3},{:.3},{:.3}",
            p.k, p.replicates, p.mean_s_obs, p.mean_s_hat, p.sd_s_hat
        );
    }
    out
}

pub fn bootstrap_csv(report: &BootstrapReport) -> String {
    let mut out = String::from("metric,point,lower,upper,level,replicates,seed\n");
    for b in [&report.s_hat, &report.coverage] {
        let _ = writeln!(
            out,
            "{},{:.3},{:.3},{:.3},{},{},{}",
            b.metric, b.point, b.lower, b.upper, b.level, b.replicates, b.seed
        );
    }
    out
}

/// `x_name,y_name,n,slope,intercept,r,p_value`. The p-value is written in
/// scientific notation so very small values survive the rounding.
pub fn correlation_csv(corr: &GroupCorrelation) -> String {
    let r = &corr.result;
    format!(
        "x_name,y_name,n,slope,intercept,r,p_value\n{},{},{},{:.3},{:.3},{:.3},{:.3e}\n",
        field(&corr.x_name),
        field(&corr.y_name),
        r.n_points,
        r.slope,
        r.intercept,
        r.r,
        r.p_value
    )
}

/// `x,fit,lower,upper`; the band columns are blank when no band was computed.
pub fn trend_csv(fit: &TrendFit, lo: f64, hi: f64, points: usize) -> String {
    let mut out = String::from("x,fit,lower,upper\n");
    match &fit.band {
        Some(band) => {
            for p in band {
                let _ = writeln!(out, "{:.3},{:.3},{:.3},{:.3}", p.x, p.fit, p.lower, p.upper);
            }
        }
        None => {
            for (x, y) in fit.grid(lo, hi, points) {
                let _ = writeln!(out, "{x:.3},{y:.3},,");
            }
        }
    }
    out
}

/// Reads two named numeric columns from a CSV table.
pub fn read_xy_columns<R: Read>(reader: R, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let table = read_table(reader)?;
    let xc = require(&table.headers, x)?;
    let yc = require(&table.headers, y)?;
    let mut xs = Vec::with_capacity(table.rows.len());
    let mut ys = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let parse = |c: usize, name: &str| -> Result<f64> {
            let raw = row.get(c).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::schema(*line, format!("{name} `{raw}` is not a number")))
        };
        xs.push(parse(xc, x)?);
        ys.push(parse(yc, y)?);
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_format_basics() {
        let data = "# comment\nsample_id,species_id,count,genre\nm1,a,2,Reel\nm1,b,,Jig\n,c,3,Reel\n";
        let t = read_long_csv(data.as_bytes()).unwrap();
        assert_eq!(t.extra_columns, ["genre"]);
        assert_eq!(t.records.len(), 3);
        assert_eq!(t.records[1].count, 1);
        assert_eq!(t.records[2].sample_id, None);
        assert_eq!(t.records[0].attributes["genre"], "Reel");
        assert_eq!(t.records[0].row, 3);
    }

    #[test]
    fn count_column_is_optional() {
        let t = read_long_csv("species_id\na\nb\n".as_bytes()).unwrap();
        assert!(t.records.iter().all(|r| r.count == 1 && r.sample_id.is_none()));
    }

    #[test]
    fn rejects_non_integer_counts_with_row() {
        let err = read_long_csv("sample_id,species_id,count\nm,a,1\nm,b,2.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { row: 3, .. }), "{err:?}");
        let err = read_long_csv("sample_id,species_id,count\nm,b,-1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { row: 2, .. }), "{err:?}");
    }

    #[test]
    fn rejects_duplicate_headers() {
        let err = read_long_csv("species_id,count,count\na,1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { row: 1, .. }), "{err:?}");
        assert!(read_histogram_csv("species_id,species_id\n".as_bytes()).is_err());
    }

    #[test]
    fn missing_species_column() {
        assert!(read_long_csv("sample_id,count\nm,1\n".as_bytes()).is_err());
    }

    #[test]
    fn ragged_rows_are_row_addressed() {
        let err = read_long_csv("sample_id,species_id,count\nm,a,1\nm,b\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { row: 3, .. }), "{err:?}");
    }

    #[test]
    fn spectrum_must_increase() {
        assert_eq!(read_spectrum_csv("r,f_r\n1,5\n2,3\n7,1\n".as_bytes()).unwrap(), vec![(1, 5), (2, 3), (7, 1)]);
        let err = read_spectrum_csv("r,f_r\n2,5\n2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { row: 3, .. }));
        assert!(read_spectrum_csv("r,f_r\n0,5\n".as_bytes()).is_err());
        assert!(read_spectrum_csv("r,f_r\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn histogram_rejects_duplicates() {
        let err = read_histogram_csv("species_id,count\na,1\na,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { row: 3, .. }));
    }

    #[test]
    fn long_csv_round_trips_through_reader() {
        let recs = vec![
            ObservationRecord::new("s,1", "a\"b", 2).with_attribute("g", "x"),
            ObservationRecord::unsampled("#c", 1).with_attribute("g", "y"),
        ];
        let text = long_csv(&recs, Some("g"));
        let back = read_long_csv(text.as_bytes()).unwrap();
        assert_eq!(back.records.len(), 2);
        assert_eq!(back.records[0].sample_id.as_deref(), Some("s,1"));
        assert_eq!(back.records[0].species_id, "a\"b");
        assert_eq!(back.records[1].species_id, "#c");
        assert_eq!(back.records[1].attributes["g"], "y");
    }
}
