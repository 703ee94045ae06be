//! Synthetic populations with known richness, used as ground truth for the
//! estimators and as demo input for the command-line pipeline.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng as _;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tally::{AbundanceTally, IncidenceTally, ObservationRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AbundanceModel {
    Uniform,
    Zipf { alpha: f64 },
    LogNormal { sigma: f64 },
}

impl fmt::Display for AbundanceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbundanceModel::Uniform => write!(f, "uniform"),
            AbundanceModel::Zipf { alpha } => write!(f, "zipf(alpha={alpha})"),
            AbundanceModel::LogNormal { sigma } => write!(f, "lognormal(sigma={sigma})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub s_true: usize,
    pub distribution: AbundanceModel,
    pub seed: u64,
}

/// Relative abundances of `s_true` species, summing to 1.
#[derive(Clone, Debug)]
pub struct Population {
    probabilities: Vec<f64>,
    sampler: WeightedAliasIndex<f64>,
}

impl Population {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn s_true(&self) -> usize {
        self.probabilities.len()
    }

    /// Zero-padded id of species `i`, so ids sort in rank order.
    pub fn species_id(&self, i: usize) -> String {
        let width = self.s_true().to_string().len();
        format!("sp{i:0width$}")
    }
}

fn normalize(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut p: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // Push the rounding residue onto the largest entry.
    let residue = 1.0 - p.iter().sum::<f64>();
    if let Some(max) = p.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *max += residue;
    }
    p
}

pub fn generate(spec: &PopulationSpec) -> Result<Population> {
    if spec.s_true == 0 {
        return Err(Error::InvalidSpec("s_true must be at least 1".into()));
    }
    let weights: Vec<f64> = match spec.distribution {
        AbundanceModel::Uniform => vec![1.0; spec.s_true],
        AbundanceModel::Zipf { alpha } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidSpec(format!("zipf alpha must be > 0, got {alpha}")));
            }
            (1..=spec.s_true).map(|i| (i as f64).powf(-alpha)).collect()
        }
        AbundanceModel::LogNormal { sigma } => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidSpec(format!("lognormal sigma must be > 0, got {sigma}")));
            }
            let dist = LogNormal::new(0.0, sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            let mut r = rng::seeded(spec.seed);
            let mut w: Vec<f64> = (0..spec.s_true).map(|_| dist.sample(&mut r)).collect();
            w.sort_by(|a, b| b.total_cmp(a));
            w
        }
    };
    let probabilities = normalize(weights);
    let sampler = WeightedAliasIndex::new(probabilities.clone())
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    Ok(Population {
        probabilities,
        sampler,
    })
}

/// Multinomial draw of `n` tokens.
pub fn sample(population: &Population, n: u64, seed: u64) -> Result<AbundanceTally> {
    let mut counts = vec![0u64; population.s_true()];
    let mut r = rng::seeded(seed);
    for _ in 0..n {
        counts[population.sampler.sample(&mut r)] += 1;
    }
    AbundanceTally::from_counts(
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (population.species_id(i), c)),
    )
}

/// Species present in each of `m` sites, each site drawing `per_site_n`
/// tokens and detecting each token independently with probability `detection`.
pub fn sample_site_species(
    population: &Population,
    m: usize,
    per_site_n: u64,
    detection: f64,
    seed: u64,
) -> Result<Vec<BTreeSet<usize>>> {
    if !(detection > 0.0 && detection <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "detection probability must be in (0, 1], got {detection}"
        )));
    }
    let mut r = rng::seeded(seed);
    let sites = (0..m)
        .map(|_| {
            let mut present = BTreeSet::new();
            for _ in 0..per_site_n {
                let s = population.sampler.sample(&mut r);
                if detection >= 1.0 || r.random_bool(detection) {
                    present.insert(s);
                }
            }
            present
        })
        .collect();
    Ok(sites)
}

/// Incidence tally over `m` synthetic sites. Sites where nothing was detected
/// do not count towards the tally's sample total.
pub fn sample_sites(
    population: &Population,
    m: usize,
    per_site_n: u64,
    detection: f64,
    seed: u64,
) -> Result<IncidenceTally> {
    let sites = sample_site_species(population, m, per_site_n, detection, seed)?;
    IncidenceTally::from_sites(
        sites
            .iter()
            .map(|site| site.iter().map(|&s| population.species_id(s)).collect::<Vec<_>>()),
    )
}

/// Long-format records for an abundance draw (one record per observed species).
pub fn abundance_records(tally: &AbundanceTally) -> Vec<ObservationRecord> {
    tally
        .counts()
        .iter()
        .map(|(species, &count)| ObservationRecord::new("synthetic", species, count))
        .collect()
}

/// Long-format records for a site draw (one record per site and present species).
pub fn site_records(population: &Population, sites: &[BTreeSet<usize>]) -> Vec<ObservationRecord> {
    let width = sites.len().to_string().len();
    sites
        .iter()
        .enumerate()
        .flat_map(|(i, site)| {
            let sample = format!("site{i:0width$}");
            site.iter()
                .map(move |&s| ObservationRecord::new(&sample, population.species_id(s), 1))
        })
        .collect()
}
