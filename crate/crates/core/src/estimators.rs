//! Chao richness estimators, coverage, and type-token style diversity proxies.
//!
//! The classic estimate of unseen species is `f1² / (2·f2)`. It is undefined
//! when there are no doubletons, in which case the bias-corrected completion
//! `f1·(f1−1) / (2·(f2+1))` is used and the estimate is labelled `-bc`.
//! Since the unseen count is a lower bound, coverage `S_obs / Ŝ` is an upper
//! bound on the fraction of species already observed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tally::{FrequencySpectrum, Mode, Tally};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorName {
    #[serde(rename = "chao1")]
    Chao1,
    #[serde(rename = "chao1-bc")]
    Chao1Bc,
    #[serde(rename = "chao2")]
    Chao2,
    #[serde(rename = "chao2-bc")]
    Chao2Bc,
}

impl EstimatorName {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorName::Chao1 => "chao1",
            EstimatorName::Chao1Bc => "chao1-bc",
            EstimatorName::Chao2 => "chao2",
            EstimatorName::Chao2Bc => "chao2-bc",
        }
    }

    /// True when the `f2 = 0` completion replaced the classic formula.
    pub fn is_fallback(self) -> bool {
        matches!(self, EstimatorName::Chao1Bc | EstimatorName::Chao2Bc)
    }
}

impl fmt::Display for EstimatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chao1" => Ok(EstimatorName::Chao1),
            "chao1-bc" => Ok(EstimatorName::Chao1Bc),
            "chao2" => Ok(EstimatorName::Chao2),
            "chao2-bc" => Ok(EstimatorName::Chao2Bc),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub replicates: usize,
}

/// One richness estimate: `s_hat = s_obs + f0_hat`, `coverage = s_obs / s_hat`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichnessEstimate {
    pub s_obs: u64,
    pub f1: u64,
    pub f2: u64,
    pub f0_hat: f64,
    pub s_hat: f64,
    pub coverage: f64,
    pub estimator_name: EstimatorName,
    pub ci: Option<ConfidenceInterval>,
}

impl RichnessEstimate {
    pub fn with_ci(mut self, ci: ConfidenceInterval) -> Self {
        self.ci = Some(ci);
        self
    }
}

/// Singleton/doubleton summary; all Chao arithmetic needs nothing more.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpectrumSummary {
    pub s_obs: u64,
    pub f1: u64,
    pub f2: u64,
}

impl SpectrumSummary {
    pub fn new(s_obs: u64, f1: u64, f2: u64) -> Self {
        SpectrumSummary { s_obs, f1, f2 }
    }
}

impl From<&FrequencySpectrum> for SpectrumSummary {
    fn from(spec: &FrequencySpectrum) -> Self {
        SpectrumSummary {
            s_obs: spec.s_obs(),
            f1: spec.singletons(),
            f2: spec.doubletons(),
        }
    }
}

/// Unseen-species count, and whether the `f2 = 0` completion was needed.
fn unseen(f1: u64, f2: u64) -> (f64, bool) {
    let f1 = f1 as f64;
    if f2 > 0 {
        (f1 * f1 / (2.0 * f2 as f64), false)
    } else {
        (f1 * (f1 - 1.0).max(0.0) / 2.0, true)
    }
}

fn finish(summary: SpectrumSummary, f0_hat: f64, name: EstimatorName) -> RichnessEstimate {
    let s_obs = summary.s_obs as f64;
    let s_hat = s_obs + f0_hat;
    RichnessEstimate {
        s_obs: summary.s_obs,
        f1: summary.f1,
        f2: summary.f2,
        f0_hat,
        s_hat,
        coverage: if f0_hat == 0.0 { 1.0 } else { s_obs / s_hat },
        estimator_name: name,
        ci: None,
    }
}

/// Chao1 from `(S_obs, f1, f2)` alone.
pub fn chao1_from_summary(summary: SpectrumSummary) -> RichnessEstimate {
    let (f0, fallback) = unseen(summary.f1, summary.f2);
    let name = if fallback {
        EstimatorName::Chao1Bc
    } else {
        EstimatorName::Chao1
    };
    finish(summary, f0, name)
}

/// Chao2 from `(S_obs, Q1, Q2)` over `m` samples.
pub fn chao2_from_summary(
    summary: SpectrumSummary,
    m: u64,
    small_sample_correction: bool,
) -> Result<RichnessEstimate> {
    let (mut f0, fallback) = unseen(summary.f1, summary.f2);
    if small_sample_correction {
        if m < 2 {
            return Err(Error::InsufficientSamples { m });
        }
        f0 *= (m - 1) as f64 / m as f64;
    }
    let name = if fallback {
        EstimatorName::Chao2Bc
    } else {
        EstimatorName::Chao2
    };
    Ok(finish(summary, f0, name))
}

/// Abundance-based Chao1.
pub fn chao1(spec: &FrequencySpectrum) -> Result<RichnessEstimate> {
    if spec.mode() != Mode::Abundance {
        return Err(Error::InvalidArgument(
            "chao1 needs an abundance spectrum; use chao2 for incidence data".into(),
        ));
    }
    Ok(chao1_from_summary(spec.into()))
}

/// Incidence-based Chao2. With `small_sample_correction` the unseen count is
/// scaled by `(m−1)/m`.
pub fn chao2(spec: &FrequencySpectrum, small_sample_correction: bool) -> Result<RichnessEstimate> {
    if spec.mode() != Mode::Incidence {
        return Err(Error::InvalidArgument(
            "chao2 needs an incidence spectrum; use chao1 for abundance data".into(),
        ));
    }
    chao2_from_summary(spec.into(), spec.total(), small_sample_correction)
}

/// Dispatches on the spectrum's mode.
pub fn estimate(spec: &FrequencySpectrum, small_sample_correction: bool) -> Result<RichnessEstimate> {
    match spec.mode() {
        Mode::Abundance => chao1(spec),
        Mode::Incidence => chao2(spec, small_sample_correction),
    }
}

pub fn estimate_tally(tally: &Tally, small_sample_correction: bool) -> Result<RichnessEstimate> {
    estimate(&tally.spectrum(), small_sample_correction)
}

/// `s_obs / s_hat`: an upper bound on the true fraction of species observed.
pub fn coverage_of(s_obs: f64, s_hat: f64) -> f64 {
    s_obs / s_hat
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityProxies {
    pub types: u64,
    pub tokens_or_samples: u64,
    /// Types per token; abundance data only.
    pub ttr: Option<f64>,
    /// Samples per type; incidence data only. May exceed 1.
    #[serde(rename = "str")]
    pub str_: Option<f64>,
}

impl DiversityProxies {
    pub fn from_counts(types: u64, tokens_or_samples: u64, mode: Mode) -> Self {
        let (t, n) = (types as f64, tokens_or_samples as f64);
        match mode {
            Mode::Abundance => DiversityProxies {
                types,
                tokens_or_samples,
                ttr: Some(t / n),
                str_: None,
            },
            Mode::Incidence => DiversityProxies {
                types,
                tokens_or_samples,
                ttr: None,
                str_: Some(n / t),
            },
        }
    }

    /// TTR for abundance data, STR for incidence data.
    pub fn ratio(&self) -> f64 {
        self.ttr.or(self.str_).expect("one ratio is always set")
    }
}

pub fn diversity_proxies(tally: &Tally) -> DiversityProxies {
    DiversityProxies::from_counts(tally.types() as u64, tally.total(), tally.mode())
}
