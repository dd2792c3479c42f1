//! Delimited text tables: reference tables, observed statistics and weighted
//! samples.
//!
//! Reference tables have a header row. Parameter and statistic columns are
//! recognised by a `param_` / `stat_` name prefix (stripped on load and added
//! back on write) unless explicit column lists are given. Other columns are
//! ignored.

use std::io::{Read, Write};

use abc_adjust_core::data::{SampleLabel, SimulationTable, WeightedSample};
use abc_adjust_core::linalg::Matrix;

use crate::format::float;
use crate::{Error, Result};

pub const PARAM_PREFIX: &str = "param_";
pub const STAT_PREFIX: &str = "stat_";
pub const WEIGHT_COLUMN: &str = "weight";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableFormat {
    /// Field delimiter; detected from the header when `None`.
    pub delimiter: Option<u8>,
    /// Explicit parameter columns (header names, used verbatim).
    pub params: Option<Vec<String>>,
    /// Explicit statistic columns (header names, used verbatim).
    pub stats: Option<Vec<String>>,
}

/// Picks the most frequent of comma, tab and semicolon in `header`.
pub fn detect_delimiter(header: &str) -> u8 {
    b",\t;"
        .iter()
        .copied()
        .max_by_key(|d| (header.bytes().filter(|b| b == d).count(), *d == b','))
        .unwrap_or(b',')
}

pub fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "," | "comma" => Ok(b','),
        "\t" | "\\t" | "tab" => Ok(b'\t'),
        ";" | "semicolon" => Ok(b';'),
        other => Err(Error::config(format!("unsupported delimiter `{other}`"))),
    }
}

fn read_all(mut source: impl Read) -> Result<String> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::parse(0, format!("unreadable input: {e}")))?;
    Ok(text)
}

fn parse_cell(cell: &str, line: usize, column: &str) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| {
        Error::parse(
            line,
            format!("non-numeric value `{}` in column `{column}`", cell.trim()),
        )
    })
}

/// Numeric rows of a headed table, restricted to the selected columns.
struct Columns {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_columns(text: &str, delimiter: Option<u8>, selected: &[usize]) -> Result<Columns> {
    let first = text.lines().next().unwrap_or("");
    let delimiter = delimiter.unwrap_or_else(|| detect_delimiter(first));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        rows.push(
            selected
                .iter()
                .map(|&j| parse_cell(&record[j], line, &header[j]))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(Columns { header, rows })
}

fn header_of(text: &str, delimiter: Option<u8>) -> Result<Vec<String>> {
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .ok_or_else(|| Error::parse(1, "missing header row"))?;
    let delimiter = delimiter.unwrap_or_else(|| detect_delimiter(first));
    Ok(first
        .split(delimiter as char)
        .map(|s| s.trim().to_string())
        .collect())
}

fn select(header: &[String], explicit: Option<&[String]>, prefix: &str) -> Result<Vec<(usize, String)>> {
    match explicit {
        Some(names) => {
            let mut picked: Vec<(usize, String)> = names
                .iter()
                .map(|n| {
                    header
                        .iter()
                        .position(|h| h == n)
                        .map(|j| (j, n.clone()))
                        .ok_or_else(|| Error::config(format!("column `{n}` not in table header")))
                })
                .collect::<Result<_>>()?;
            picked.sort_by_key(|(j, _)| *j);
            Ok(picked)
        }
        None => Ok(header
            .iter()
            .enumerate()
            .filter_map(|(j, h)| h.strip_prefix(prefix).map(|n| (j, n.to_string())))
            .collect()),
    }
}

pub fn load_table(source: impl Read, format: &TableFormat) -> Result<SimulationTable> {
    let text = read_all(source)?;
    let header = header_of(&text, format.delimiter)?;
    let params = select(&header, format.params.as_deref(), PARAM_PREFIX)?;
    let stats = select(&header, format.stats.as_deref(), STAT_PREFIX)?;
    if params.is_empty() {
        return Err(abc_adjust_core::Error::NoColumns("parameter").into());
    }
    if stats.is_empty() {
        return Err(abc_adjust_core::Error::NoColumns("statistic").into());
    }
    let selected: Vec<usize> = params.iter().chain(&stats).map(|(j, _)| *j).collect();
    let cols = read_columns(&text, format.delimiter, &selected)?;
    debug_assert_eq!(cols.header, header);
    let n = cols.rows.len();
    if n == 0 {
        return Err(abc_adjust_core::Error::EmptyTable.into());
    }
    let (p, q) = (params.len(), stats.len());
    let mut theta = Vec::with_capacity(n * p);
    let mut s = Vec::with_capacity(n * q);
    for row in &cols.rows {
        theta.extend_from_slice(&row[..p]);
        s.extend_from_slice(&row[p..]);
    }
    Ok(SimulationTable::new(
        Matrix::from_vec(n, p, theta)?,
        Matrix::from_vec(n, q, s)?,
        params.into_iter().map(|(_, n)| n).collect(),
        stats.into_iter().map(|(_, n)| n).collect(),
    )?)
}

pub fn write_table(mut sink: impl Write, table: &SimulationTable, delimiter: u8) -> std::io::Result<()> {
    let d = delimiter as char;
    let header: Vec<String> = table
        .param_names()
        .iter()
        .map(|n| format!("{PARAM_PREFIX}{n}"))
        .chain(table.stat_names().iter().map(|n| format!("{STAT_PREFIX}{n}")))
        .collect();
    writeln!(sink, "{}", header.join(&d.to_string()))?;
    let mut line = String::new();
    for i in 0..table.n() {
        line.clear();
        for (j, x) in table.theta().row(i).iter().chain(table.stats().row(i)).enumerate() {
            if j > 0 {
                line.push(d);
            }
            line.push_str(&float(*x));
        }
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

/// Observed statistics, either as a one-row headed table (columns matched to
/// `stat_names` by name, `stat_` prefix optional) or as a flat list of
/// numbers separated by whitespace, commas, tabs or semicolons.
pub fn load_observed(source: impl Read, stat_names: &[String]) -> Result<Vec<f64>> {
    let text = read_all(source)?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let tokens = |l: &str| -> Vec<String> {
        l.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    };
    let Some(&(first_line, first)) = lines.first() else {
        return Err(Error::parse(1, "observed statistics file is empty"));
    };
    let head = tokens(first);
    if head.iter().all(|t| t.parse::<f64>().is_ok()) {
        let mut values = Vec::new();
        for (line, l) in &lines {
            for t in tokens(l) {
                values.push(parse_cell(&t, *line, "observed")?);
            }
        }
        return Ok(values);
    }
    if lines.len() != 2 {
        return Err(Error::parse(
            first_line,
            format!("headed observed table must have exactly one data row, found {}", lines.len() - 1),
        ));
    }
    let (line, row) = lines[1];
    let values = tokens(row);
    if values.len() != head.len() {
        return Err(Error::parse(
            line,
            format!("expected {} fields, found {}", head.len(), values.len()),
        ));
    }
    let names: Vec<&str> = head
        .iter()
        .map(|h| h.strip_prefix(STAT_PREFIX).unwrap_or(h))
        .collect();
    stat_names
        .iter()
        .map(|want| {
            let j = names
                .iter()
                .position(|n| n == want)
                .ok_or_else(|| Error::parse(first_line, format!("observed file lacks statistic `{want}`")))?;
            parse_cell(&values[j], line, want)
        })
        .collect()
}

pub fn write_observed(mut sink: impl Write, stat_names: &[String], values: &[f64]) -> std::io::Result<()> {
    let header: Vec<String> = stat_names.iter().map(|n| format!("{STAT_PREFIX}{n}")).collect();
    writeln!(sink, "{}", header.join(","))?;
    let row: Vec<String> = values.iter().map(|x| float(*x)).collect();
    writeln!(sink, "{}", row.join(","))
}

/// Weighted sample: one `param_<name>` column per parameter plus `weight`.
pub fn write_sample(mut sink: impl Write, sample: &WeightedSample, param_names: &[String]) -> std::io::Result<()> {
    let mut header: Vec<String> = param_names.iter().map(|n| format!("{PARAM_PREFIX}{n}")).collect();
    header.push(WEIGHT_COLUMN.to_string());
    writeln!(sink, "{}", header.join(","))?;
    for i in 0..sample.len() {
        let mut row: Vec<String> = sample.values().row(i).iter().map(|x| float(*x)).collect();
        row.push(float(sample.weights()[i]));
        writeln!(sink, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a file written by [`write_sample`]; a missing `weight` column means
/// equal weights.
pub fn load_sample(source: impl Read) -> Result<(WeightedSample, Vec<String>)> {
    let text = read_all(source)?;
    let header = header_of(&text, None)?;
    let params = select(&header, None, PARAM_PREFIX)?;
    if params.is_empty() {
        return Err(abc_adjust_core::Error::NoColumns("parameter").into());
    }
    let weight = header.iter().position(|h| h == WEIGHT_COLUMN);
    let mut selected: Vec<usize> = params.iter().map(|(j, _)| *j).collect();
    selected.extend(weight);
    let cols = read_columns(&text, None, &selected)?;
    let p = params.len();
    let n = cols.rows.len();
    if n == 0 {
        return Err(abc_adjust_core::Error::EmptyTable.into());
    }
    let mut values = Vec::with_capacity(n * p);
    let mut w = Vec::with_capacity(n);
    for row in &cols.rows {
        values.extend_from_slice(&row[..p]);
        w.push(if weight.is_some() { row[p] } else { 1.0 });
    }
    let sample = WeightedSample::from_raw(&Matrix::from_vec(n, p, values)?, &w, SampleLabel::Rejection)?;
    Ok((sample, params.into_iter().map(|(_, n)| n).collect()))
}
