use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Read};

use serde::Serialize;
use silentspecies::analysis::{self, ProxyAxis, Report, ReportOptions, SizeMeasure, SortKey};
use silentspecies::io as sio;
use silentspecies::resampling::{self, AccumulateOptions, AccumulationPoint, BootstrapOptions};
use silentspecies::stats::{self, BandOptions};
use silentspecies::synth::{self, AbundanceModel, PopulationSpec};
use silentspecies::tally::{self, AbundanceTally, FrequencySpectrum, GroupedDataset, IncidenceTally, Mode, Tally};
use silentspecies::Error;

use crate::args::*;
use crate::output::{render, write_output, Meta};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag combination not caught by the parser; exit code 2.
    Usage(String),
    /// Data or computation failure; exit code 1.
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(Error::InvalidArgument(format!("json: {e}")))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("UsageError", m.clone()),
            CliError::Data(e) => (e.kind(), e.to_string()),
        };
        write!(f, "error[{kind}]: {}", msg.replace(['\n', '\r'], " "))
    }
}

type CliResult<T> = Result<T, CliError>;

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Abundance => Mode::Abundance,
            ModeArg::Incidence => Mode::Incidence,
        }
    }
}

impl From<SortArg> for SortKey {
    fn from(s: SortArg) -> Self {
        match s {
            SortArg::Group => SortKey::Group,
            SortArg::Types => SortKey::Types,
            SortArg::Tokens => SortKey::Tokens,
            SortArg::Ratio => SortKey::Ratio,
            SortArg::F1 => SortKey::F1,
            SortArg::F2 => SortKey::F2,
            SortArg::Coverage => SortKey::Coverage,
            SortArg::SHat => SortKey::SHat,
        }
    }
}

fn estimator_label(mode: Mode, correction: bool) -> &'static str {
    match (mode, correction) {
        (Mode::Abundance, _) => "chao1",
        (Mode::Incidence, false) => "chao2",
        (Mode::Incidence, true) => "chao2+correction",
    }
}

fn open(input: Option<&std::path::Path>, stdin: bool) -> CliResult<Box<dyn Read>> {
    match (input, stdin) {
        (Some(path), false) => Ok(Box::new(BufReader::new(File::open(path)?))),
        (None, true) => Ok(Box::new(io::stdin().lock())),
        _ => Err(CliError::Usage("exactly one of --input or --stdin is required".into())),
    }
}

/// Raw input in whichever format was requested.
enum Loaded {
    Records(Vec<tally::ObservationRecord>),
    Histogram(Vec<(String, u64)>),
    Spectrum(Vec<(u64, u64)>),
}

struct Input {
    loaded: Loaded,
    mode: Mode,
    samples: Option<u64>,
}

impl Input {
    fn read(args: &InputArgs) -> CliResult<Self> {
        let reader = open(args.input.as_deref(), args.stdin)?;
        let loaded = match args.input_format {
            InputFormat::Long => Loaded::Records(sio::read_long_csv(reader)?.records),
            InputFormat::Histogram => Loaded::Histogram(sio::read_histogram_csv(reader)?),
            InputFormat::Spectrum => Loaded::Spectrum(sio::read_spectrum_csv(reader)?),
        };
        Ok(Input {
            loaded,
            mode: args.mode.into(),
            samples: args.samples,
        })
    }

    fn samples(&self) -> CliResult<u64> {
        self.samples
            .ok_or_else(|| CliError::Usage("--samples is required for incidence histograms and spectra".into()))
    }

    fn tally(&self) -> CliResult<Tally> {
        Ok(match (&self.loaded, self.mode) {
            (Loaded::Records(r), mode) => tally::tally(r, mode)?,
            (Loaded::Histogram(h), Mode::Abundance) => AbundanceTally::from_counts(h.iter().map(|(s, c)| (s, *c)))?.into(),
            (Loaded::Histogram(h), Mode::Incidence) => {
                IncidenceTally::from_incidences(h.iter().map(|(s, c)| (s, *c)), self.samples()?)?.into()
            }
            (Loaded::Spectrum(_), _) => {
                return Err(CliError::Usage("this command needs per-species data, not a spectrum".into()))
            }
        })
    }

    fn spectrum(&self) -> CliResult<FrequencySpectrum> {
        match &self.loaded {
            Loaded::Spectrum(pairs) => Ok(match self.mode {
                Mode::Abundance => FrequencySpectrum::abundance(pairs.iter().copied())?,
                Mode::Incidence => FrequencySpectrum::incidence(pairs.iter().copied(), self.samples()?)?,
            }),
            _ => Ok(self.tally()?.spectrum()),
        }
    }

    fn grouped(&self, field: &str) -> CliResult<GroupedDataset> {
        match &self.loaded {
            Loaded::Records(r) => Ok(tally::group_by(r, field, self.mode)?),
            _ => Err(CliError::Usage("--group-by needs long-format input".into())),
        }
    }
}

fn emit<T: Serialize>(
    meta: &Meta,
    format: OutputFormat,
    out: &OutputArgs,
    csv: impl FnOnce() -> String,
    markdown: impl FnOnce() -> Option<String>,
    json: &T,
) -> CliResult<()> {
    let body = render(meta, format, csv, markdown, json)?;
    write_output(out.output.as_deref(), &body)?;
    Ok(())
}

fn emit_report(meta: &Meta, format: OutputFormat, out: &OutputArgs, report: &Report) -> CliResult<()> {
    emit(meta, format, out, || report.to_csv(), || Some(report.to_markdown()), report)
}

pub fn run(cli: Cli, argv: &[String]) -> CliResult<()> {
    match cli.command {
        Command::Tally(a) => tally_cmd(a, argv),
        Command::Estimate(a) => estimate_cmd(a, argv),
        Command::Report(a) => report_cmd(a, argv),
        Command::Accumulate(a) => accumulate_cmd(a, argv),
        Command::Bootstrap(a) => bootstrap_cmd(a, argv),
        Command::Correlate(a) => correlate_cmd(a, argv),
        Command::Synth(a) => synth_cmd(a, argv),
    }
}

fn tally_cmd(a: TallyArgs, argv: &[String]) -> CliResult<()> {
    let input = Input::read(&a.input)?;
    let meta = Meta::new(argv, a.seed, "none");
    if let Some(field) = &a.group_by {
        let ds = input.grouped(field)?;
        let spectra: BTreeMap<&str, FrequencySpectrum> =
            ds.groups().iter().map(|(k, t)| (k.as_str(), t.spectrum())).collect();
        return match a.emit {
            EmitArg::Spectrum => emit(
                &meta,
                a.format,
                &a.output,
                || sio::grouped_spectrum_csv(spectra.iter().map(|(k, s)| (*k, s.clone()))),
                || None,
                &spectra,
            ),
            EmitArg::Histogram => Err(CliError::Usage("--emit histogram cannot be combined with --group-by".into())),
        };
    }
    match a.emit {
        EmitArg::Spectrum => {
            let spec = input.spectrum()?;
            emit(&meta, a.format, &a.output, || sio::spectrum_csv(&spec), || None, &spec)
        }
        EmitArg::Histogram => {
            let t = input.tally()?;
            let counts = match &t {
                Tally::Abundance(t) => t.counts(),
                Tally::Incidence(t) => t.incidences(),
            };
            emit(&meta, a.format, &a.output, || sio::histogram_csv(counts), || None, &t)
        }
    }
}

fn estimate_cmd(a: EstimateArgs, argv: &[String]) -> CliResult<()> {
    let input = Input::read(&a.input)?;
    let correction = a.estimator.correction;
    let meta = Meta::new(argv, a.seed, estimator_label(input.mode, correction));
    let report = match &a.group_by {
        Some(field) => analysis::report(
            &input.grouped(field)?,
            &ReportOptions {
                small_sample_correction: correction,
                sort: a.sort.sort_by.into(),
                descending: !a.sort.ascending,
                ..ReportOptions::default()
            },
        )?,
        None => analysis::report_single(&input.spectrum()?, correction)?,
    };
    emit_report(&meta, a.format, &a.output, &report)
}

fn report_cmd(a: ReportArgs, argv: &[String]) -> CliResult<()> {
    let input = Input::read(&a.input)?;
    let correction = a.estimator.correction;
    let meta = Meta::new(argv, a.seed, estimator_label(input.mode, correction));
    let mut ds = input.grouped(&a.group_by)?;
    if let Some(n) = a.top_n {
        let measure = match a.size_by {
            SizeArg::Observations => SizeMeasure::Observations,
            SizeArg::Types => SizeMeasure::Types,
        };
        if n > ds.len() {
            eprintln!("note: --top-n {n} exceeds the {} groups present; keeping all", ds.len());
        }
        ds = analysis::top_n(&ds, n, measure)?;
    }
    let report = analysis::report(
        &ds,
        &ReportOptions {
            small_sample_correction: correction,
            sort: a.sort.sort_by.into(),
            descending: !a.sort.ascending,
            ..ReportOptions::default()
        },
    )?;
    emit_report(&meta, a.format, &a.output, &report)
}

#[derive(Serialize)]
struct GroupCurve<'a> {
    group: &'a str,
    points: Vec<AccumulationPoint>,
}

fn accumulate_cmd(a: AccumulateArgs, argv: &[String]) -> CliResult<()> {
    let input = Input::read(&a.input)?;
    let meta = Meta::new(argv, a.seed, estimator_label(input.mode, a.estimator.correction));
    let opts = AccumulateOptions {
        replicates: a.replicates,
        seed: a.seed,
        small_sample_correction: a.estimator.correction,
        ..AccumulateOptions::default()
    };
    match &a.group_by {
        None => {
            let points = resampling::accumulate_tally(&input.tally()?, &a.sizes, &opts)?;
            emit(&meta, a.format, &a.output, || sio::accumulation_csv(&points), || None, &points)
        }
        Some(field) => {
            let ds = input.grouped(field)?;
            let mut curves = Vec::with_capacity(ds.len());
            for (key, t) in ds.groups() {
                curves.push(GroupCurve {
                    group: key,
                    points: resampling::accumulate_tally(t, &a.sizes, &opts)?,
                });
            }
            let csv = || {
                let mut out = String::from("group,k,replicates,mean_s_obs,mean_s_hat,sd_s_hat\n");
                for c in &curves {
                    for line in sio::accumulation_csv(&c.points).lines().skip(1) {
                        out.push_str(&format!("{},{line}\n", csv_field(c.group)));
                    }
                }
                out
            };
            emit(&meta, a.format, &a.output, csv, || None, &curves)
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.starts_with('#') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn bootstrap_cmd(a: BootstrapArgs, argv: &[String]) -> CliResult<()> {
    let input = Input::read(&a.input)?;
    let meta = Meta::new(argv, a.seed, estimator_label(input.mode, a.estimator.correction));
    let report = resampling::bootstrap_ci(
        &input.tally()?,
        &BootstrapOptions {
            replicates: a.replicates,
            level: a.level,
            seed: a.seed,
            small_sample_correction: a.estimator.correction,
            ..BootstrapOptions::default()
        },
    )?;
    emit(&meta, a.format, &a.output, || sio::bootstrap_csv(&report), || None, &report)
}

fn correlate_cmd(a: CorrelateArgs, argv: &[String]) -> CliResult<()> {
    let mode: Mode = a.mode.into();
    let meta = Meta::new(argv, a.seed, estimator_label(mode, a.estimator.correction));

    let (x_name, y_name, xs, ys) = if let Some(path) = &a.points {
        if a.group_by.is_some() {
            return Err(CliError::Usage("--points cannot be combined with --group-by".into()));
        }
        let (xc, yc) = (a.x_column.clone().unwrap_or_default(), a.y_column.clone().unwrap_or_default());
        let (xs, ys) = sio::read_xy_columns(BufReader::new(File::open(path)?), &xc, &yc)?;
        (xc, yc, xs, ys)
    } else {
        let field = a
            .group_by
            .as_deref()
            .ok_or_else(|| CliError::Usage("--group-by and --x are required with observation input".into()))?;
        let axis = match a.x.ok_or_else(|| CliError::Usage("--x is required with --group-by".into()))? {
            ProxyArg::Ttr => ProxyAxis::Ttr,
            ProxyArg::OneMinusTtr => ProxyAxis::OneMinusTtr,
            ProxyArg::Str => ProxyAxis::Str,
        };
        let reader = open(a.input.as_deref(), a.stdin)?;
        let records = sio::read_long_csv(reader)?.records;
        let ds = tally::group_by(&records, field, mode)?;
        let corr = analysis::per_group_correlation(&ds, axis, a.estimator.correction)?;
        if !corr.fallback_groups.is_empty() {
            log::warn!(
                "groups using the f2 = 0 completion: {}",
                corr.fallback_groups.join(", ")
            );
        }
        if a.trend.is_none() {
            return emit(&meta, a.format, &a.output, || sio::correlation_csv(&corr), || None, &corr);
        }
        let xs = corr.points.iter().map(|p| p.1).collect();
        let ys = corr.points.iter().map(|p| p.2).collect();
        (corr.x_name, corr.y_name, xs, ys)
    };

    match a.trend {
        Some(degree) => {
            let band = BandOptions {
                replicates: a.band_replicates,
                level: a.level,
                seed: a.seed,
                grid_points: a.grid,
                ..BandOptions::default()
            };
            let fit = stats::polyfit(&xs, &ys, degree, &band)?;
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            emit(&meta, a.format, &a.output, || sio::trend_csv(&fit, lo, hi, a.grid), || None, &fit)
        }
        None => {
            let corr = analysis::GroupCorrelation {
                x_name,
                y_name,
                result: stats::pearson(&xs, &ys)?,
                points: Vec::new(),
                fallback_groups: Vec::new(),
            };
            emit(&meta, a.format, &a.output, || sio::correlation_csv(&corr), || None, &corr)
        }
    }
}

fn synth_cmd(a: SynthArgs, argv: &[String]) -> CliResult<()> {
    let distribution = match a.distribution {
        DistributionArg::Uniform => AbundanceModel::Uniform,
        DistributionArg::Zipf => AbundanceModel::Zipf {
            alpha: a.alpha.unwrap_or(1.0),
        },
        DistributionArg::Lognormal => AbundanceModel::LogNormal {
            sigma: a.sigma.unwrap_or(1.0),
        },
    };
    let population = synth::generate(&PopulationSpec {
        s_true: a.species,
        distribution,
        seed: a.seed,
    })?;
    let meta = Meta::new(argv, a.seed, "none");
    let records = match (a.tokens, a.sites) {
        (Some(n), None) => synth::abundance_records(&synth::sample(&population, n, a.seed)?),
        (None, Some(m)) => {
            let per_site = a
                .per_site
                .ok_or_else(|| CliError::Usage("--per-site is required with --sites".into()))?;
            let sites = synth::sample_site_species(&population, m, per_site, a.detection.unwrap_or(1.0), a.seed)?;
            synth::site_records(&population, &sites)
        }
        _ => return Err(CliError::Usage("give either --tokens or --sites".into())),
    };
    let body = format!("{}{}", meta.csv_header(), sio::long_csv(&records, None));
    write_output(a.output.output.as_deref(), &body)?;
    Ok(())
}
