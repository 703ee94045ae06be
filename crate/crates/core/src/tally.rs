//! Observation records, abundance and incidence tallies, and frequency spectra.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Sample assigned to abundance records that carry no sample id.
pub const DEFAULT_SAMPLE: &str = "_default";

/// Whether species are counted per occurrence or per sample containing them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Abundance,
    Incidence,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Abundance => "abundance",
            Mode::Incidence => "incidence",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abundance" => Ok(Mode::Abundance),
            "incidence" => Ok(Mode::Incidence),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// One row of observational data: `count` occurrences of a species in a sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationRecord {
    pub sample_id: Option<String>,
    pub species_id: String,
    pub count: u64,
    /// Extra columns (genre, composer, institution, ...) used for grouping.
    pub attributes: BTreeMap<String, String>,
    /// Source row for diagnostics; 0 when the record was built in memory.
    pub row: usize,
}

impl ObservationRecord {
    pub fn new(sample_id: impl AsRef<str>, species_id: impl AsRef<str>, count: u64) -> Self {
        let sample = sample_id.as_ref().trim();
        ObservationRecord {
            sample_id: (!sample.is_empty()).then(|| sample.to_owned()),
            species_id: species_id.as_ref().trim().to_owned(),
            count,
            attributes: BTreeMap::new(),
            row: 0,
        }
    }

    /// Record without sample membership (pure abundance data).
    pub fn unsampled(species_id: impl AsRef<str>, count: u64) -> Self {
        ObservationRecord::new("", species_id, count)
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl AsRef<str>) -> Self {
        self.attributes
            .insert(key.into(), value.as_ref().trim().to_owned());
        self
    }

    pub fn with_row(mut self, row: usize) -> Self {
        self.row = row;
        self
    }

    pub fn sample_or_default(&self) -> &str {
        self.sample_id.as_deref().unwrap_or(DEFAULT_SAMPLE)
    }

    fn row_or(&self, index: usize) -> usize {
        if self.row == 0 {
            index + 1
        } else {
            self.row
        }
    }
}

fn check_species(record: &ObservationRecord, index: usize) -> Result<()> {
    if record.species_id.is_empty() {
        return Err(Error::schema(record.row_or(index), "empty species_id"));
    }
    Ok(())
}

/// Species → number of occurrences. Every stored count is at least 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbundanceTally {
    counts: BTreeMap<String, u64>,
    n: u64,
}

impl AbundanceTally {
    /// Builds a tally from `(species, count)` pairs, summing repeated species
    /// and dropping zero totals.
    pub fn from_counts<S, I>(pairs: I) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, u64)>,
    {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for (species, count) in pairs {
            if count == 0 {
                continue;
            }
            let key = species.as_ref().trim();
            if key.is_empty() {
                return Err(Error::InvalidArgument("empty species_id".into()));
            }
            *counts.entry(key.to_owned()).or_default() += count;
        }
        Self::from_map(counts)
    }

    fn from_map(counts: BTreeMap<String, u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = counts.values().sum();
        Ok(AbundanceTally { counts, n })
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn get(&self, species: &str) -> u64 {
        self.counts.get(species).copied().unwrap_or(0)
    }

    /// Total number of tokens.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of distinct species observed.
    pub fn types(&self) -> usize {
        self.counts.len()
    }

    pub fn spectrum(&self) -> FrequencySpectrum {
        FrequencySpectrum::build(Mode::Abundance, self.counts.values().copied(), self.n)
    }

    pub fn merge(&self, other: &AbundanceTally) -> AbundanceTally {
        let mut counts = self.counts.clone();
        for (species, count) in &other.counts {
            *counts.entry(species.clone()).or_default() += count;
        }
        AbundanceTally {
            n: self.n + other.n,
            counts,
        }
    }

    /// Species index (in key order) of every token, in key order.
    pub(crate) fn token_species(&self) -> Vec<u32> {
        let mut tokens = Vec::with_capacity(self.n as usize);
        for (idx, &count) in self.counts.values().enumerate() {
            tokens.extend(std::iter::repeat_n(idx as u32, count as usize));
        }
        tokens
    }
}

/// Species → number of distinct samples containing it, plus the sample count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IncidenceTally {
    incidences: BTreeMap<String, u64>,
    m: u64,
    /// Per-sample species lists (indices into the key order of `incidences`),
    /// kept when the tally was built from raw records so samples can be resampled.
    #[serde(skip)]
    sites: Option<Vec<Vec<u32>>>,
}

impl IncidenceTally {
    /// Tally from pre-aggregated incidences. Sample membership is unknown, so
    /// sample-level resampling is unavailable on the result.
    pub fn from_incidences<S, I>(pairs: I, m: u64) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, u64)>,
    {
        if m == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut incidences = BTreeMap::new();
        for (species, value) in pairs {
            if value == 0 {
                continue;
            }
            if value > m {
                return Err(Error::InvalidArgument(format!(
                    "incidence {value} of `{}` exceeds sample count {m}",
                    species.as_ref()
                )));
            }
            let key = species.as_ref().trim();
            if key.is_empty() {
                return Err(Error::InvalidArgument("empty species_id".into()));
            }
            if incidences.insert(key.to_owned(), value).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate species `{key}`")));
            }
        }
        if incidences.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(IncidenceTally {
            incidences,
            m,
            sites: None,
        })
    }

    /// Tally from the species present in each sample. Repeats within a sample
    /// collapse to one incidence; samples with no species are ignored.
    pub fn from_sites<I, J, S>(sites: I) -> Result<Self>
    where
        I: IntoIterator<Item = J>,
        J: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let sets: Vec<BTreeSet<String>> = sites
            .into_iter()
            .map(|site| {
                site.into_iter()
                    .map(|s| s.as_ref().trim().to_owned())
                    .filter(|s| !s.is_empty())
                    .collect::<BTreeSet<_>>()
            })
            .filter(|set| !set.is_empty())
            .collect();
        Self::from_site_sets(&sets)
    }

    fn from_site_sets<S: AsRef<str> + Ord>(sets: &[BTreeSet<S>]) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut incidences: BTreeMap<String, u64> = BTreeMap::new();
        for set in sets {
            for species in set {
                *incidences.entry(species.as_ref().to_owned()).or_default() += 1;
            }
        }
        let index: BTreeMap<&str, u32> = incidences
            .keys()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i as u32))
            .collect();
        let sites = sets
            .iter()
            .map(|set| set.iter().map(|s| index[s.as_ref()]).collect())
            .collect();
        Ok(IncidenceTally {
            m: sets.len() as u64,
            incidences: incidences.clone(),
            sites: Some(sites),
        })
    }

    pub fn incidences(&self) -> &BTreeMap<String, u64> {
        &self.incidences
    }

    pub fn get(&self, species: &str) -> u64 {
        self.incidences.get(species).copied().unwrap_or(0)
    }

    /// Number of samples.
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn types(&self) -> usize {
        self.incidences.len()
    }

    /// Per-sample species indices, when sample membership is known.
    pub fn sites(&self) -> Option<&[Vec<u32>]> {
        self.sites.as_deref()
    }

    pub fn spectrum(&self) -> FrequencySpectrum {
        FrequencySpectrum::build(Mode::Incidence, self.incidences.values().copied(), self.m)
    }

    /// Pools two tallies over disjoint sets of samples.
    pub fn merge(&self, other: &IncidenceTally) -> IncidenceTally {
        let mut incidences = self.incidences.clone();
        for (species, value) in &other.incidences {
            *incidences.entry(species.clone()).or_default() += value;
        }
        let sites = match (&self.sites, &other.sites) {
            (Some(a), Some(b)) => {
                let index: BTreeMap<&str, u32> = incidences
                    .keys()
                    .enumerate()
                    .map(|(i, k)| (k.as_str(), i as u32))
                    .collect();
                let remap = |tally: &IncidenceTally, sites: &[Vec<u32>]| -> Vec<Vec<u32>> {
                    let names: Vec<&str> = tally.incidences.keys().map(String::as_str).collect();
                    sites
                        .iter()
                        .map(|site| site.iter().map(|&i| index[names[i as usize]]).collect())
                        .collect()
                };
                let mut merged = remap(self, a);
                merged.extend(remap(other, b));
                Some(merged)
            }
            _ => None,
        };
        IncidenceTally {
            incidences,
            m: self.m + other.m,
            sites,
        }
    }
}

/// Either kind of tally.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Tally {
    Abundance(AbundanceTally),
    Incidence(IncidenceTally),
}

impl Tally {
    pub fn mode(&self) -> Mode {
        match self {
            Tally::Abundance(_) => Mode::Abundance,
            Tally::Incidence(_) => Mode::Incidence,
        }
    }

    pub fn types(&self) -> usize {
        match self {
            Tally::Abundance(t) => t.types(),
            Tally::Incidence(t) => t.types(),
        }
    }

    /// Tokens (abundance) or samples (incidence).
    pub fn total(&self) -> u64 {
        match self {
            Tally::Abundance(t) => t.n(),
            Tally::Incidence(t) => t.m(),
        }
    }

    pub fn spectrum(&self) -> FrequencySpectrum {
        match self {
            Tally::Abundance(t) => t.spectrum(),
            Tally::Incidence(t) => t.spectrum(),
        }
    }

    pub fn merge(&self, other: &Tally) -> Result<Tally> {
        match (self, other) {
            (Tally::Abundance(a), Tally::Abundance(b)) => Ok(Tally::Abundance(a.merge(b))),
            (Tally::Incidence(a), Tally::Incidence(b)) => Ok(Tally::Incidence(a.merge(b))),
            _ => Err(Error::InvalidArgument(
                "cannot merge abundance and incidence tallies".into(),
            )),
        }
    }
}

impl From<AbundanceTally> for Tally {
    fn from(t: AbundanceTally) -> Self {
        Tally::Abundance(t)
    }
}

impl From<IncidenceTally> for Tally {
    fn from(t: IncidenceTally) -> Self {
        Tally::Incidence(t)
    }
}

/// Sums counts per species. Zero counts are dropped; an input with nothing
/// left is an [`Error::EmptyDataset`].
pub fn tally_abundance(records: &[ObservationRecord]) -> Result<AbundanceTally> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        check_species(record, i)?;
        if record.count > 0 {
            *counts.entry(record.species_id.clone()).or_default() += record.count;
        }
    }
    AbundanceTally::from_map(counts)
}

/// Counts, per species, the distinct samples holding at least one positive record.
pub fn tally_incidence(records: &[ObservationRecord]) -> Result<IncidenceTally> {
    let mut sites: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        check_species(record, i)?;
        let sample = record.sample_id.as_deref().ok_or_else(|| {
            Error::schema(record.row_or(i), "missing sample_id in incidence mode")
        })?;
        if record.count > 0 {
            sites
                .entry(sample)
                .or_default()
                .insert(record.species_id.as_str());
        }
    }
    let sets: Vec<BTreeSet<&str>> = sites.into_values().collect();
    IncidenceTally::from_site_sets(&sets)
}

pub fn tally(records: &[ObservationRecord], mode: Mode) -> Result<Tally> {
    match mode {
        Mode::Abundance => tally_abundance(records).map(Tally::Abundance),
        Mode::Incidence => tally_incidence(records).map(Tally::Incidence),
    }
}

/// `f_r`: number of species seen exactly `r` times (abundance) or in exactly
/// `r` samples (incidence). Stored sparsely; only nonzero `f_r` are kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencySpectrum {
    freqs: BTreeMap<u64, u64>,
    mode: Mode,
    total: u64,
}

impl FrequencySpectrum {
    fn build(mode: Mode, values: impl Iterator<Item = u64>, total: u64) -> Self {
        let mut freqs = BTreeMap::new();
        for v in values {
            *freqs.entry(v).or_default() += 1;
        }
        FrequencySpectrum { freqs, mode, total }
    }

    fn validate_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<BTreeMap<u64, u64>> {
        let mut freqs = BTreeMap::new();
        for (r, f) in pairs {
            if r == 0 {
                return Err(Error::InvalidArgument("spectrum keys must be >= 1".into()));
            }
            if freqs.contains_key(&r) {
                return Err(Error::InvalidArgument(format!("duplicate spectrum key r={r}")));
            }
            freqs.insert(r, f);
        }
        freqs.retain(|_, f| *f > 0);
        if freqs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(freqs)
    }

    /// Abundance spectrum from `(r, f_r)` pairs; `n` is derived as `Σ r·f_r`.
    pub fn abundance(pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let freqs = Self::validate_pairs(pairs)?;
        let total = freqs.iter().map(|(r, f)| r * f).sum();
        Ok(FrequencySpectrum {
            freqs,
            mode: Mode::Abundance,
            total,
        })
    }

    /// Incidence spectrum over `m` samples; every `r` must be at most `m`.
    pub fn incidence(pairs: impl IntoIterator<Item = (u64, u64)>, m: u64) -> Result<Self> {
        let freqs = Self::validate_pairs(pairs)?;
        if let Some((&r, _)) = freqs.last_key_value() {
            if r > m {
                return Err(Error::InvalidArgument(format!(
                    "incidence r={r} exceeds sample count {m}"
                )));
            }
        }
        Ok(FrequencySpectrum {
            freqs,
            mode: Mode::Incidence,
            total: m,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn f(&self, r: u64) -> u64 {
        self.freqs.get(&r).copied().unwrap_or(0)
    }

    pub fn singletons(&self) -> u64 {
        self.f(1)
    }

    pub fn doubletons(&self) -> u64 {
        self.f(2)
    }

    pub fn s_obs(&self) -> u64 {
        self.freqs.values().sum()
    }

    /// `n` in abundance mode, `m` in incidence mode.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.freqs.iter().map(|(&r, &f)| (r, f))
    }

    pub fn freqs(&self) -> &BTreeMap<u64, u64> {
        &self.freqs
    }
}

/// Tallies keyed by the value of one grouping attribute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupedDataset {
    group_field: String,
    mode: Mode,
    groups: BTreeMap<String, Tally>,
}

impl GroupedDataset {
    pub fn new(
        group_field: impl Into<String>,
        mode: Mode,
        groups: BTreeMap<String, Tally>,
    ) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some((key, _)) = groups.iter().find(|(_, t)| t.mode() != mode) {
            return Err(Error::InvalidArgument(format!(
                "group `{key}` is not a {mode} tally"
            )));
        }
        Ok(GroupedDataset {
            group_field: group_field.into(),
            mode,
            groups,
        })
    }

    pub fn group_field(&self) -> &str {
        &self.group_field
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn groups(&self) -> &BTreeMap<String, Tally> {
        &self.groups
    }

    pub fn get(&self, key: &str) -> Option<&Tally> {
        self.groups.get(key)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Union of every group, merged in key order.
    pub fn pooled(&self) -> Tally {
        let mut iter = self.groups.values();
        let first = iter.next().expect("grouped dataset is never empty").clone();
        iter.fold(first, |acc, t| {
            acc.merge(t).expect("groups share one mode")
        })
    }

    /// Keeps only the named groups.
    pub fn subset<'a>(&self, keys: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let groups = keys
            .into_iter()
            .filter_map(|k| self.groups.get_key_value(k))
            .map(|(k, t)| (k.clone(), t.clone()))
            .collect();
        GroupedDataset::new(self.group_field.clone(), self.mode, groups)
    }
}

/// Partitions records by `group_field` and tallies each group.
pub fn group_by(records: &[ObservationRecord], group_field: &str, mode: Mode) -> Result<GroupedDataset> {
    group_by_with(records, group_field, mode, Execution::default())
}

pub fn group_by_with(
    records: &[ObservationRecord],
    group_field: &str,
    mode: Mode,
    exec: Execution,
) -> Result<GroupedDataset> {
    let mut parts: BTreeMap<&str, Vec<ObservationRecord>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        let key = record
            .attributes
            .get(group_field)
            .map(String::as_str)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| {
                Error::schema(
                    record.row_or(i),
                    format!("missing group attribute `{group_field}`"),
                )
            })?;
        let mut owned = record.clone();
        owned.row = record.row_or(i);
        parts.entry(key).or_default().push(owned);
    }
    let parts: Vec<(&str, Vec<ObservationRecord>)> = parts.into_iter().collect();
    let tallies = par::map_slice(exec, &parts, |(_, recs)| tally(recs, mode));
    let mut groups = BTreeMap::new();
    for ((key, _), result) in parts.iter().zip(tallies) {
        match result {
            Ok(t) => {
                groups.insert((*key).to_owned(), t);
            }
            Err(Error::EmptyDataset) => {
                log::warn!("group `{key}` has no positive counts and was dropped");
            }
            Err(e) => return Err(e),
        }
    }
    GroupedDataset::new(group_field, mode, groups)
}
