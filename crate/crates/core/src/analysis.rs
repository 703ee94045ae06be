//! Per-group estimation tables, pooled totals, top-N selection and
//! proxy/coverage correlation across groups.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, DiversityProxies};
use crate::par::{self, Execution};
use crate::stats::{self, RegressionResult};
use crate::tally::{FrequencySpectrum, GroupedDataset, Mode, Tally};

/// Label of the pooled row.
pub const TOTAL_KEY: &str = "Total";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReportRow {
    pub group_key: String,
    pub types: u64,
    pub tokens_or_samples: u64,
    pub ttr_or_str: f64,
    pub f1: u64,
    pub f2: u64,
    pub coverage: f64,
    pub s_hat: f64,
    pub estimator_name: String,
    /// Set when the `f2 = 0` completion was used for this row.
    pub fallback: bool,
}

impl GroupReportRow {
    pub fn from_spectrum(key: impl Into<String>, spec: &FrequencySpectrum, correction: bool) -> Result<Self> {
        let est = estimators::estimate(spec, correction)?;
        let proxies = DiversityProxies::from_counts(spec.s_obs(), spec.total(), spec.mode());
        Ok(GroupReportRow {
            group_key: key.into(),
            types: est.s_obs,
            tokens_or_samples: spec.total(),
            ttr_or_str: proxies.ratio(),
            f1: est.f1,
            f2: est.f2,
            coverage: est.coverage,
            s_hat: est.s_hat,
            estimator_name: est.estimator_name.to_string(),
            fallback: est.estimator_name.is_fallback(),
        })
    }

    pub fn from_tally(key: impl Into<String>, tally: &Tally, correction: bool) -> Result<Self> {
        Self::from_spectrum(key, &tally.spectrum(), correction)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    Group,
    Types,
    Tokens,
    Ratio,
    F1,
    F2,
    Coverage,
    SHat,
}

impl FromStr for SortKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "group" => SortKey::Group,
            "types" => SortKey::Types,
            "tokens" | "samples" => SortKey::Tokens,
            "ratio" | "ttr" | "str" => SortKey::Ratio,
            "f1" => SortKey::F1,
            "f2" => SortKey::F2,
            "coverage" => SortKey::Coverage,
            "s_hat" => SortKey::SHat,
            other => return Err(Error::InvalidArgument(format!("unknown sort column `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    pub small_sample_correction: bool,
    pub sort: SortKey,
    pub descending: bool,
    pub execution: Execution,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            small_sample_correction: false,
            sort: SortKey::Coverage,
            descending: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub group_field: String,
    pub mode: Mode,
    pub rows: Vec<GroupReportRow>,
    pub total: GroupReportRow,
}

fn compare(a: &GroupReportRow, b: &GroupReportRow, key: SortKey) -> Ordering {
    match key {
        SortKey::Group => Ordering::Equal,
        SortKey::Types => a.types.cmp(&b.types),
        SortKey::Tokens => a.tokens_or_samples.cmp(&b.tokens_or_samples),
        SortKey::Ratio => a.ttr_or_str.total_cmp(&b.ttr_or_str),
        SortKey::F1 => a.f1.cmp(&b.f1),
        SortKey::F2 => a.f2.cmp(&b.f2),
        SortKey::Coverage => a.coverage.total_cmp(&b.coverage),
        SortKey::SHat => a.s_hat.total_cmp(&b.s_hat),
    }
}

/// Sorts rows by `key`; ties (and [`SortKey::Group`]) fall back to the group key, ascending.
pub fn sort_rows(rows: &mut [GroupReportRow], key: SortKey, descending: bool) {
    rows.sort_by(|a, b| {
        let primary = compare(a, b, key);
        let primary = if descending { primary.reverse() } else { primary };
        let ord = match key {
            SortKey::Group if descending => b.group_key.cmp(&a.group_key),
            _ => primary,
        };
        ord.then_with(|| a.group_key.cmp(&b.group_key))
    });
}

/// One row per group plus a total row estimated on the pooled tally.
pub fn report(dataset: &GroupedDataset, opts: &ReportOptions) -> Result<Report> {
    let entries: Vec<(&String, &Tally)> = dataset.groups().iter().collect();
    let rows = par::map_slice(opts.execution, &entries, |(key, tally)| {
        GroupReportRow::from_tally(key.as_str(), tally, opts.small_sample_correction)
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    sort_rows(&mut rows, opts.sort, opts.descending);
    let total = GroupReportRow::from_tally(TOTAL_KEY, &dataset.pooled(), opts.small_sample_correction)?;
    Ok(Report {
        group_field: dataset.group_field().to_owned(),
        mode: dataset.mode(),
        rows,
        total,
    })
}

/// Report for ungrouped data: no group rows, only the total.
pub fn report_single(spec: &FrequencySpectrum, small_sample_correction: bool) -> Result<Report> {
    Ok(Report {
        group_field: "dataset".to_owned(),
        mode: spec.mode(),
        rows: Vec::new(),
        total: GroupReportRow::from_spectrum(TOTAL_KEY, spec, small_sample_correction)?,
    })
}

/// How group size is measured for [`top_n`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SizeMeasure {
    /// Tokens (abundance) or samples (incidence).
    #[default]
    Observations,
    Types,
}

/// The `n` largest groups; ties go to the lexicographically smaller key.
pub fn top_n(dataset: &GroupedDataset, n: usize, measure: SizeMeasure) -> Result<GroupedDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("top-n needs n >= 1".into()));
    }
    if n > dataset.len() {
        log::info!(
            "requested the top {n} groups but only {} exist; keeping all",
            dataset.len()
        );
    }
    let size = |t: &Tally| match measure {
        SizeMeasure::Observations => t.total(),
        SizeMeasure::Types => t.types() as u64,
    };
    let mut ranked: Vec<(&String, u64)> = dataset.groups().iter().map(|(k, t)| (k, size(t))).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    dataset.subset(ranked.into_iter().take(n).map(|(k, _)| k.as_str()))
}

/// Which diversity proxy goes on the x axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyAxis {
    Ttr,
    OneMinusTtr,
    Str,
}

impl ProxyAxis {
    pub fn name(self) -> &'static str {
        match self {
            ProxyAxis::Ttr => "ttr",
            ProxyAxis::OneMinusTtr => "one_minus_ttr",
            ProxyAxis::Str => "str",
        }
    }
}

impl FromStr for ProxyAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ttr" => Ok(ProxyAxis::Ttr),
            "one-minus-ttr" | "one_minus_ttr" => Ok(ProxyAxis::OneMinusTtr),
            "str" => Ok(ProxyAxis::Str),
            other => Err(Error::InvalidArgument(format!("unknown proxy `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupCorrelation {
    pub x_name: String,
    pub y_name: String,
    pub result: RegressionResult,
    pub points: Vec<(String, f64, f64)>,
    /// Groups whose estimate used the `f2 = 0` completion.
    pub fallback_groups: Vec<String>,
}

/// Correlates a per-group diversity proxy with per-group coverage.
pub fn per_group_correlation(
    dataset: &GroupedDataset,
    x: ProxyAxis,
    small_sample_correction: bool,
) -> Result<GroupCorrelation> {
    match (x, dataset.mode()) {
        (ProxyAxis::Str, Mode::Abundance) => {
            return Err(Error::InvalidArgument("STR needs incidence data".into()))
        }
        (ProxyAxis::Ttr | ProxyAxis::OneMinusTtr, Mode::Incidence) => {
            return Err(Error::InvalidArgument("TTR needs abundance data".into()))
        }
        _ => {}
    }
    if dataset.len() < 3 {
        return Err(Error::InsufficientPoints {
            points: dataset.len(),
            degree: 1,
        });
    }
    let mut points = Vec::with_capacity(dataset.len());
    let mut fallback_groups = Vec::new();
    for (key, tally) in dataset.groups() {
        let row = GroupReportRow::from_tally(key.as_str(), tally, small_sample_correction)?;
        if row.fallback {
            fallback_groups.push(key.clone());
        }
        let xv = match x {
            ProxyAxis::OneMinusTtr => 1.0 - row.ttr_or_str,
            _ => row.ttr_or_str,
        };
        points.push((key.clone(), xv, row.coverage));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
    Ok(GroupCorrelation {
        x_name: x.name().to_owned(),
        y_name: "coverage".to_owned(),
        result: stats::pearson(&xs, &ys)?,
        points,
        fallback_groups,
    })
}

const CSV_HEADER: &str = "group,types,tokens_or_samples,ttr_or_str,f1,f2,coverage,s_hat,estimator,fallback";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn csv_row(row: &GroupReportRow) -> String {
    format!(
        "{},{},{},{:.3},{},{},{:.3},{:.3},{},{}",
        csv_field(&row.group_key),
        row.types,
        row.tokens_or_samples,
        row.ttr_or_str,
        row.f1,
        row.f2,
        row.coverage,
        row.s_hat,
        row.estimator_name,
        row.fallback
    )
}

impl Report {
    /// CSV with one line per group and the pooled row last. Reals are
    /// rounded to three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in self.rows.iter().chain(std::iter::once(&self.total)) {
            out.push_str(&csv_row(row));
            out.push('\n');
        }
        out
    }

    /// Markdown table with columns `Group | Types | Tokens | TTR | f1 | f2 | Coverage`
    /// (`Samples`/`STR` for incidence data); fallback rows are marked `†`.
    pub fn to_markdown(&self) -> String {
        let (tokens, ratio) = match self.mode {
            Mode::Abundance => ("Tokens", "TTR"),
            Mode::Incidence => ("Samples", "STR"),
        };
        let mut title: Vec<char> = self.group_field.chars().collect();
        if let Some(c) = title.first_mut() {
            *c = c.to_ascii_uppercase();
        }
        let title: String = title.into_iter().collect();
        let mut out = String::new();
        let _ = writeln!(out, "| {title} | Types | {tokens} | {ratio} | f1 | f2 | Coverage |");
        out.push_str("|:--|--:|--:|--:|--:|--:|--:|\n");
        let cell = |row: &GroupReportRow, bold: bool| {
            let wrap = |s: String| if bold { format!("**{s}**") } else { s };
            let marker = if row.fallback { " †" } else { "" };
            format!(
                "| {}{} | {} | {} | {} | {} | {} | {} |\n",
                wrap(row.group_key.replace('|', "\\|")),
                marker,
                wrap(row.types.to_string()),
                wrap(row.tokens_or_samples.to_string()),
                wrap(format!("{:.3}", row.ttr_or_str)),
                wrap(row.f1.to_string()),
                wrap(row.f2.to_string()),
                wrap(format!("{:.3}", row.coverage)),
            )
        };
        for row in &self.rows {
            out.push_str(&cell(row, false));
        }
        out.push_str(&cell(&self.total, true));
        out
    }
}
