//! Subsample accumulation curves and percentile-bootstrap intervals.
//!
//! Every replicate draws from its own seeded stream and results are reduced
//! in replicate order, so outputs are bit-identical for any thread count.

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    chao1_from_summary, chao2_from_summary, ConfidenceInterval, RichnessEstimate, SpectrumSummary,
};
use crate::par::{self, Execution};
use crate::rng;
use crate::tally::{AbundanceTally, IncidenceTally, Tally};

const ACCUMULATE_STREAM: u64 = 1 << 32;
const BOOTSTRAP_STREAM: u64 = 2 << 32;

/// Replicate counts below this only get a warning.
pub const RECOMMENDED_REPLICATES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationPoint {
    pub k: u64,
    pub replicates: usize,
    pub mean_s_obs: f64,
    pub mean_s_hat: f64,
    pub sd_s_hat: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccumulateOptions {
    pub replicates: usize,
    pub seed: u64,
    /// Applies to incidence data only.
    pub small_sample_correction: bool,
    pub execution: Execution,
}

impl Default for AccumulateOptions {
    fn default() -> Self {
        AccumulateOptions {
            replicates: 1000,
            seed: rng::DEFAULT_SEED,
            small_sample_correction: false,
            execution: Execution::default(),
        }
    }
}

/// `s_obs`, `f1`, `f2` of a count vector indexed by species.
fn summarize(counts: &[u32]) -> SpectrumSummary {
    let (mut s_obs, mut f1, mut f2) = (0, 0, 0);
    for &c in counts {
        match c {
            0 => {}
            1 => {
                s_obs += 1;
                f1 += 1;
            }
            2 => {
                s_obs += 1;
                f2 += 1;
            }
            _ => s_obs += 1,
        }
    }
    SpectrumSummary::new(s_obs, f1, f2)
}

fn validate_sizes(sizes: &[u64], available: u64, replicates: usize) -> Result<()> {
    if replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be at least 1".into()));
    }
    for &k in sizes {
        if k == 0 {
            return Err(Error::InvalidSize);
        }
        if k > available {
            return Err(Error::SubsampleTooLarge { k, available });
        }
    }
    Ok(())
}

fn reduce(k: u64, draws: &[(u64, f64)]) -> AccumulationPoint {
    let reps = draws.len() as f64;
    let mean_s_obs = draws.iter().map(|d| d.0 as f64).sum::<f64>() / reps;
    let mean_s_hat = draws.iter().map(|d| d.1).sum::<f64>() / reps;
    let sd_s_hat = if draws.len() > 1 {
        let ss: f64 = draws.iter().map(|d| (d.1 - mean_s_hat).powi(2)).sum();
        (ss / (reps - 1.0)).sqrt()
    } else {
        0.0
    };
    AccumulationPoint {
        k,
        replicates: draws.len(),
        mean_s_obs,
        mean_s_hat,
        sd_s_hat,
    }
}

/// For each `k`, draws `replicates` subsamples of `k` tokens without
/// replacement, re-estimates Chao1 and averages.
pub fn accumulate(
    tally: &AbundanceTally,
    sizes: &[u64],
    opts: &AccumulateOptions,
) -> Result<Vec<AccumulationPoint>> {
    validate_sizes(sizes, tally.n(), opts.replicates)?;
    let tokens = tally.token_species();
    let species = tally.types();
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(si, &k)| {
            let draws = par::map_indexed(opts.execution, opts.replicates, |rep| {
                let mut r = rng::stream(opts.seed, ACCUMULATE_STREAM | si as u64, rep as u64);
                let mut counts = vec![0u32; species];
                for i in index::sample(&mut r, tokens.len(), k as usize) {
                    counts[tokens[i] as usize] += 1;
                }
                let est = chao1_from_summary(summarize(&counts));
                (est.s_obs, est.s_hat)
            });
            reduce(k, &draws)
        })
        .collect())
}

/// Incidence analogue of [`accumulate`]: draws `k` whole samples without
/// replacement and re-estimates Chao2 over those `k` samples.
pub fn accumulate_samples(
    tally: &IncidenceTally,
    sizes: &[u64],
    opts: &AccumulateOptions,
) -> Result<Vec<AccumulationPoint>> {
    let sites = tally.sites().ok_or_else(|| {
        Error::InvalidArgument("sample-level resampling needs per-sample records".into())
    })?;
    validate_sizes(sizes, tally.m(), opts.replicates)?;
    if opts.small_sample_correction && sizes.contains(&1) {
        return Err(Error::InsufficientSamples { m: 1 });
    }
    let species = tally.types();
    sizes
        .iter()
        .enumerate()
        .map(|(si, &k)| {
            let draws = par::map_indexed(opts.execution, opts.replicates, |rep| {
                let mut r = rng::stream(opts.seed, ACCUMULATE_STREAM | si as u64, rep as u64);
                let mut counts = vec![0u32; species];
                for i in index::sample(&mut r, sites.len(), k as usize) {
                    for &s in &sites[i] {
                        counts[s as usize] += 1;
                    }
                }
                chao2_from_summary(summarize(&counts), k, opts.small_sample_correction)
                    .map(|est| (est.s_obs, est.s_hat))
            });
            let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;
            Ok(reduce(k, &draws))
        })
        .collect()
}

/// Dispatches on the tally's mode.
pub fn accumulate_tally(
    tally: &Tally,
    sizes: &[u64],
    opts: &AccumulateOptions,
) -> Result<Vec<AccumulationPoint>> {
    match tally {
        Tally::Abundance(t) => accumulate(t, sizes, opts),
        Tally::Incidence(t) => accumulate_samples(t, sizes, opts),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub small_sample_correction: bool,
    pub execution: Execution,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            replicates: 1000,
            level: 0.95,
            seed: rng::DEFAULT_SEED,
            small_sample_correction: false,
            execution: Execution::default(),
        }
    }
}

/// Percentile interval for one metric. `lower <= upper` always holds, but the
/// point estimate may fall outside the interval for skewed data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub metric: String,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// Plug-in estimate with the `s_hat` interval attached.
    pub estimate: RichnessEstimate,
    pub s_hat: BootstrapResult,
    pub coverage: BootstrapResult,
}

/// Linear-interpolation quantile of an ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn interval(metric: &str, point: f64, mut values: Vec<f64>, opts: &BootstrapOptions) -> BootstrapResult {
    values.sort_by(f64::total_cmp);
    let alpha = (1.0 - opts.level) / 2.0;
    BootstrapResult {
        metric: metric.to_owned(),
        point,
        lower: percentile(&values, alpha),
        upper: percentile(&values, 1.0 - alpha),
        level: opts.level,
        replicates: opts.replicates,
        seed: opts.seed,
    }
}

/// Multinomial resample of `n` tokens from the tally's own proportions,
/// drawn as a chain of conditional binomials.
fn resample_abundance(counts: &[u64], n: u64, r: &mut rng::Rng, out: &mut [u32]) {
    let mut remaining_draws = n;
    let mut remaining_mass = n;
    for (slot, &c) in out.iter_mut().zip(counts) {
        if remaining_draws == 0 {
            *slot = 0;
            continue;
        }
        let x = if c == remaining_mass {
            remaining_draws
        } else {
            let p = c as f64 / remaining_mass as f64;
            Binomial::new(remaining_draws, p)
                .expect("probability lies in [0, 1]")
                .sample(r)
        };
        *slot = x as u32;
        remaining_draws -= x;
        remaining_mass -= c;
    }
}

/// Percentile bootstrap for `s_hat` and coverage. Abundance data resamples
/// `n` tokens with replacement; incidence data resamples `m` samples.
pub fn bootstrap_ci(tally: &Tally, opts: &BootstrapOptions) -> Result<BootstrapReport> {
    if opts.replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be at least 1".into()));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level {} is outside (0, 1)",
            opts.level
        )));
    }
    if opts.replicates < RECOMMENDED_REPLICATES {
        log::warn!(
            "{} bootstrap replicates requested; at least {RECOMMENDED_REPLICATES} are recommended",
            opts.replicates
        );
    }

    let (point, draws): (RichnessEstimate, Vec<(f64, f64)>) = match tally {
        Tally::Abundance(t) => {
            let point = chao1_from_summary((&t.spectrum()).into());
            let counts: Vec<u64> = t.counts().values().copied().collect();
            let draws = par::map_indexed(opts.execution, opts.replicates, |rep| {
                let mut r = rng::stream(opts.seed, BOOTSTRAP_STREAM, rep as u64);
                let mut out = vec![0u32; counts.len()];
                resample_abundance(&counts, t.n(), &mut r, &mut out);
                let est = chao1_from_summary(summarize(&out));
                (est.s_hat, est.coverage)
            });
            (point, draws)
        }
        Tally::Incidence(t) => {
            let sites = t.sites().ok_or_else(|| {
                Error::InvalidArgument("sample-level resampling needs per-sample records".into())
            })?;
            let m = t.m();
            let point = chao2_from_summary((&t.spectrum()).into(), m, opts.small_sample_correction)?;
            let species = t.types();
            let draws = par::map_indexed(opts.execution, opts.replicates, |rep| {
                let mut r = rng::stream(opts.seed, BOOTSTRAP_STREAM, rep as u64);
                let mut counts = vec![0u32; species];
                for _ in 0..sites.len() {
                    for &s in &sites[r.random_range(0..sites.len())] {
                        counts[s as usize] += 1;
                    }
                }
                let est = chao2_from_summary(summarize(&counts), m, opts.small_sample_correction)
                    .expect("m already validated");
                (est.s_hat, est.coverage)
            });
            (point, draws)
        }
    };

    let s_hat = interval("s_hat", point.s_hat, draws.iter().map(|d| d.0).collect(), opts);
    let coverage = interval("coverage", point.coverage, draws.iter().map(|d| d.1).collect(), opts);
    let estimate = point.with_ci(ConfidenceInterval {
        lower: s_hat.lower,
        upper: s_hat.upper,
        level: opts.level,
        replicates: opts.replicates,
    });
    Ok(BootstrapReport {
        estimate,
        s_hat,
        coverage,
    })
}
