//! CSV and JSON file formats.
//!
//! Inputs:
//! - regions file, header `Region,Population,Area`;
//! - cases file, header `Region,Day1,...,DayN`, same region set as the
//!   regions file;
//! - combined table, header `Region,Population,Area,Day1,...,DayN` (an
//!   `Area (Hectares)` header and bare day numbers are accepted too);
//! - dataset file, covariate columns followed by a response column `y`;
//! - value file, one numeric column with a header.
//!
//! Outputs are written whole: CSV for draws and time series, pretty JSON
//! with a trailing newline for reports.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use bglr_core::pipeline::{DayFitRecord, FitReport, ModelOutcome, RegionRecord};
use bglr_core::{Chain, Dataset};
use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters reported per day in the time series, in column order.
pub const SERIES_PARAMS: [(&str, &str); 5] = [("β0", "b0"), ("β1", "b1"), ("bp0", "bp0"), ("bp1", "bp1"), ("alpha", "alpha")];

struct Table {
    path: PathBuf,
    header: Vec<String>,
    /// Data rows with their 1-based line numbers.
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let row = e.position().map_or(0, |p| p.line() as usize);
                Error::Parse { path: path.into(), row, column: None, message: e.to_string() }
            })?;
            let line = rec.position().map_or(records.len() + 1, |p| p.line() as usize);
            if rec.iter().all(str::is_empty) {
                continue;
            }
            records.push((line, rec.iter().map(str::to_owned).collect::<Vec<_>>()));
        }
        let mut it = records.into_iter();
        let (_, header) =
            it.next().ok_or_else(|| Error::Parse { path: path.into(), row: 1, column: None, message: "file is empty".into() })?;
        let table = Self { path: path.into(), header, rows: it.collect() };
        for (line, row) in &table.rows {
            if row.len() != table.header.len() {
                return Err(table.error(*line, None, format!("expected {} fields, found {}", table.header.len(), row.len())));
            }
        }
        Ok(table)
    }

    fn error(&self, row: usize, column: Option<usize>, message: impl Into<String>) -> Error {
        Error::Parse { path: self.path.clone(), row, column: column.map(|c| self.header[c].clone()), message: message.into() }
    }

    fn schema(&self, message: impl Into<String>) -> Error {
        Error::Schema { path: self.path.clone(), message: message.into() }
    }

    fn require_no_rows_missing(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(self.error(2, None, "no data rows"));
        }
        Ok(())
    }

    fn f64_at(&self, line: usize, row: &[String], col: usize) -> Result<f64> {
        let cell = &row[col];
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error(line, Some(col), format!("expected a finite number, found {cell:?}"))),
        }
    }

    fn count_at(&self, line: usize, row: &[String], col: usize) -> Result<u64> {
        let cell = &row[col];
        cell.parse::<u64>().map_err(|_| self.error(line, Some(col), format!("expected a non-negative whole number, found {cell:?}")))
    }

    fn expect_header(&self, col: usize, accepted: &[&str]) -> Result<()> {
        match self.header.get(col) {
            Some(h) if accepted.iter().any(|a| h.eq_ignore_ascii_case(a)) => Ok(()),
            Some(h) => Err(self.error(1, Some(col), format!("expected header {:?}, found {h:?}", accepted[0]))),
            None => Err(self.error(1, None, format!("missing column {:?}", accepted[0]))),
        }
    }

    /// Checks `Day1..DayN` (or `1..N`) headers from `first` on and returns N.
    fn day_columns(&self, first: usize) -> Result<usize> {
        let n = self.header.len().saturating_sub(first);
        if n == 0 {
            return Err(self.error(1, None, "no day columns"));
        }
        for (k, h) in self.header[first..].iter().enumerate() {
            let want = k + 1;
            let digits = h.strip_prefix("Day").or_else(|| h.strip_prefix("day")).unwrap_or(h).trim();
            if digits.parse::<usize>().ok() != Some(want) {
                return Err(self.error(1, Some(first + k), format!("expected day column Day{want}")));
            }
        }
        Ok(n)
    }

    fn unique_names(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (line, row) in &self.rows {
            if row[0].is_empty() {
                return Err(self.error(*line, Some(0), "empty region name"));
            }
            if !seen.insert(row[0].as_str()) {
                return Err(self.error(*line, Some(0), format!("duplicate region {:?}", row[0])));
            }
        }
        Ok(())
    }
}

/// Validated regions with the shape of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRegions {
    pub records: Vec<RegionRecord>,
    pub n_rows: usize,
    pub n_days: usize,
}

fn finish(records: Vec<RegionRecord>, n_days: usize, path: &Path) -> Result<LoadedRegions> {
    for r in &records {
        r.validate().map_err(|e| Error::Schema { path: path.into(), message: e.to_string() })?;
    }
    Ok(LoadedRegions { n_rows: records.len(), n_days, records })
}

fn region_row(table: &Table, line: usize, row: &[String], cases: Vec<u64>) -> Result<RegionRecord> {
    let region = row[0].clone();
    let population = table.f64_at(line, row, 1)?;
    let area_hectares = table.f64_at(line, row, 2)?;
    if population <= 0.0 || area_hectares <= 0.0 {
        let what = if population <= 0.0 { "population" } else { "area" };
        return Err(table.error(line, Some(if population <= 0.0 { 1 } else { 2 }), format!("region {region}: {what} must be positive")));
    }
    Ok(RegionRecord { region, population, area_hectares, daily_cases: cases })
}

fn expect_region_headers(table: &Table) -> Result<()> {
    table.expect_header(0, &["Region"])?;
    table.expect_header(1, &["Population"])?;
    table.expect_header(2, &["Area", "Area (Hectares)", "Area_hectares"])
}

/// Joins a regions file and a cases file; rows keep the regions file order.
pub fn load_regions(regions_path: &Path, cases_path: &Path) -> Result<LoadedRegions> {
    let regions = Table::read(regions_path)?;
    expect_region_headers(&regions)?;
    if regions.header.len() != 3 {
        return Err(regions.error(1, Some(3), "regions file has exactly three columns"));
    }
    regions.require_no_rows_missing()?;
    regions.unique_names()?;

    let cases = Table::read(cases_path)?;
    cases.expect_header(0, &["Region"])?;
    let n_days = cases.day_columns(1)?;
    cases.require_no_rows_missing()?;
    cases.unique_names()?;

    let mut by_name: HashMap<&str, (usize, &Vec<String>)> = cases.rows.iter().map(|(l, r)| (r[0].as_str(), (*l, r))).collect();
    let mut records = Vec::with_capacity(regions.rows.len());
    for (line, row) in &regions.rows {
        let (cline, crow) = by_name.remove(row[0].as_str()).ok_or_else(|| cases.schema(format!("region {:?} has no cases row", row[0])))?;
        let counts = (1..=n_days).map(|c| cases.count_at(cline, crow, c)).collect::<Result<Vec<_>>>()?;
        records.push(region_row(&regions, *line, row, counts)?);
    }
    if let Some((name, (line, _))) = by_name.into_iter().min_by_key(|(_, (l, _))| *l) {
        return Err(cases.error(line, Some(0), format!("region {name:?} is not in {}", regions_path.display())));
    }
    finish(records, n_days, regions_path)
}

/// Reads the single-table layout `Region,Population,Area,Day1,...`.
pub fn load_table(path: &Path) -> Result<LoadedRegions> {
    let table = Table::read(path)?;
    expect_region_headers(&table)?;
    let n_days = table.day_columns(3)?;
    table.require_no_rows_missing()?;
    table.unique_names()?;
    let records = table
        .rows
        .iter()
        .map(|(line, row)| {
            let counts = (3..3 + n_days).map(|c| table.count_at(*line, row, c)).collect::<Result<Vec<_>>>()?;
            region_row(&table, *line, row, counts)
        })
        .collect::<Result<Vec<_>>>()?;
    finish(records, n_days, path)
}

/// Reads covariate columns and a response column named `y`; the intercept
/// is added.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let table = Table::read(path)?;
    let y_col = table.header.iter().position(|h| h == "y").ok_or_else(|| table.error(1, None, "no response column \"y\""))?;
    table.require_no_rows_missing()?;
    let mut covariates = vec![Vec::with_capacity(table.rows.len()); table.header.len() - 1];
    let mut response = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let mut k = 0;
        for col in 0..row.len() {
            let v = table.f64_at(*line, row, col)?;
            if col == y_col {
                response.push(v);
            } else {
                covariates[k].push(v);
                k += 1;
            }
        }
    }
    Dataset::from_columns(&covariates, response).map_err(|e| table.schema(e.to_string()))
}

/// Reads the first column of a CSV with a header.
pub fn load_values(path: &Path) -> Result<Vec<f64>> {
    let table = Table::read(path)?;
    table.require_no_rows_missing()?;
    table.rows.iter().map(|(line, row)| table.f64_at(*line, row, 0)).collect()
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json { path: path.into(), source: e })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), source: e })
}

/// Renders rows as CSV text.
pub fn csv_text<I, R>(header: &[String], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Shortest text that reads back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Writes one value per line under the header `x`.
pub fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    write_text(path, &values_csv(values))
}

pub fn values_csv(values: &[f64]) -> String {
    csv_text(&["x".to_owned()], values.iter().map(|v| [num(*v)]))
}

/// Post-burn-in draws: `chain,iteration,<parameters>,log_post`.
pub fn chains_csv(chains: &[Chain]) -> String {
    let names = chains.first().map(|c| c.names.clone()).unwrap_or_default();
    let header: Vec<String> =
        ["chain".to_owned(), "iteration".to_owned()].into_iter().chain(names).chain(["log_post".to_owned()]).collect();
    let rows = chains.iter().enumerate().flat_map(|(k, c)| {
        c.draws_iter().enumerate().map(move |(t, d)| {
            [k.to_string(), t.to_string()].into_iter().chain(d.iter().map(|v| num(*v))).chain([num(c.log_posterior[t])]).collect::<Vec<_>>()
        })
    });
    csv_text(&header, rows)
}

/// A one-covariate dataset in the layout [`load_dataset`] reads.
pub fn dataset_csv(x: &[f64], y: &[f64]) -> String {
    csv_text(&["x".to_owned(), "y".to_owned()], x.iter().zip(y).map(|(a, b)| [num(*a), num(*b)]))
}

pub fn regions_csv(regions: &[RegionRecord]) -> String {
    csv_text(
        &["Region", "Population", "Area"].map(str::to_owned),
        regions.iter().map(|r| [r.region.clone(), num(r.population), num(r.area_hectares)]),
    )
}

pub fn cases_csv(regions: &[RegionRecord]) -> String {
    let n_days = regions.first().map_or(0, |r| r.daily_cases.len());
    let header: Vec<String> = std::iter::once("Region".to_owned()).chain((1..=n_days).map(|d| format!("Day{d}"))).collect();
    csv_text(
        &header,
        regions.iter().map(|r| std::iter::once(r.region.clone()).chain(r.daily_cases.iter().map(u64::to_string)).collect::<Vec<_>>()),
    )
}

fn status<T>(o: &ModelOutcome<T>) -> &'static str {
    match o {
        ModelOutcome::Fitted(_) => "fitted",
        ModelOutcome::Failed(_) => "failed",
        ModelOutcome::Skipped => "skipped",
    }
}

fn bayes_columns(model: &str, shape: bool) -> Vec<String> {
    let mut cols = vec![format!("{model}_status"), format!("{model}_converged")];
    for (_, short) in SERIES_PARAMS.iter().filter(|(n, _)| shape || *n != "alpha") {
        for stat in ["mean", "median", "sd", "q025", "q975", "rhat"] {
            cols.push(format!("{model}_{short}_{stat}"));
        }
    }
    cols.extend([format!("{model}_max_rhat"), format!("{model}_dic"), format!("{model}_p_dic")]);
    cols
}

fn bayes_cells(o: &ModelOutcome<FitReport>, shape: bool) -> Vec<String> {
    let fit = o.fitted();
    let mut cells = vec![status(o).to_owned(), fit.map(|f| f.converged.to_string()).unwrap_or_default()];
    for (name, _) in SERIES_PARAMS.iter().filter(|(n, _)| shape || *n != "alpha") {
        let p = fit.and_then(|f| f.summary.get(name));
        let rhat = fit.and_then(|f| f.rhat.as_ref()).and_then(|r| r.names.iter().position(|n| n == name).map(|j| r.rhat[j]));
        cells.extend([p.map(|p| p.mean), p.map(|p| p.median), p.map(|p| p.sd), p.map(|p| p.q025), p.map(|p| p.q975), rhat].map(opt));
    }
    let max_rhat = fit.and_then(|f| f.rhat.as_ref()).map(|r| r.rhat.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    cells.extend([max_rhat, fit.map(|f| f.dic.dic), fit.map(|f| f.dic.p_dic)].map(opt));
    cells
}

/// Column names of the time series, in order.
pub fn series_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "day",
        "n_included",
        "n_excluded_zero",
        "unfittable",
        "seed",
        "slr_status",
        "slr_b0",
        "slr_b1",
        "slr_b0_se",
        "slr_b1_se",
        "slr_rss",
    ]
    .map(str::to_owned)
    .to_vec();
    h.extend(bayes_columns("bnr", false));
    h.extend(bayes_columns("bglr", true));
    h.extend(["delta_b0", "delta_b1", "dic_difference"].map(str::to_owned));
    h
}

/// One row per day; empty cells mark values that do not exist for that day.
pub fn series_csv(records: &[DayFitRecord]) -> String {
    let rows = records.iter().map(|r| {
        let slr = r.slr.fitted();
        let mut row = vec![
            r.day_index.to_string(),
            r.n_included.to_string(),
            r.n_excluded_zero.to_string(),
            r.unfittable.is_some().to_string(),
            r.seed.to_string(),
            status(&r.slr).to_owned(),
        ];
        row.extend(
            [
                slr.map(|s| s.beta[0]),
                slr.map(|s| s.beta[1]),
                slr.map(|s| s.standard_errors[0]),
                slr.map(|s| s.standard_errors[1]),
                slr.map(|s| s.rss),
            ]
            .map(opt),
        );
        row.extend(bayes_cells(&r.bnr, false));
        row.extend(bayes_cells(&r.bglr, true));
        row.extend([r.mean_difference("β0"), r.mean_difference("β1"), r.dic_difference].map(opt));
        row
    });
    csv_text(&series_header(), rows)
}
