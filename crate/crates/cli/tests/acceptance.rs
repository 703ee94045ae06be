//! Acceptance checks. One PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use silentspecies::estimators::{chao1, chao1_from_summary, coverage_of, DiversityProxies, SpectrumSummary};
use silentspecies::resampling::{accumulate, AccumulateOptions};
use silentspecies::stats::pearson;
use silentspecies::synth::{self, AbundanceModel, PopulationSpec};
use silentspecies::tally::{self, Mode, ObservationRecord};
use silentspecies::{io as sio, rng};

/// (genre, types, tokens, ttr, f1, f2, coverage)
const SESSION_GENRES: [(&str, u64, u64, f64, u64, u64, f64); 12] = [
    ("March", 390, 4212, 0.093, 110, 63, 0.802),
    ("Slide", 269, 5318, 0.051, 72, 36, 0.789),
    ("Slip Jig", 430, 10351, 0.042, 126, 69, 0.789),
    ("Hornpipe", 749, 12925, 0.058, 234, 134, 0.786),
    ("Strathspey", 361, 2504, 0.144, 112, 59, 0.773),
    ("Barndance", 329, 2698, 0.122, 114, 67, 0.772),
    ("Reel", 4272, 104131, 0.041, 1192, 558, 0.770),
    ("Polka", 835, 11857, 0.070, 271, 145, 0.767),
    ("Three-Two", 101, 516, 0.196, 34, 17, 0.748),
    ("Waltz", 922, 8104, 0.114, 329, 166, 0.739),
    ("Jig", 2896, 70826, 0.041, 931, 421, 0.738),
    ("Mazurka", 109, 888, 0.123, 48, 12, 0.532),
];
const SESSION_TOTAL: (u64, u64, f64, u64, u64, f64) = (11663, 234330, 0.050, 3573, 1747, 0.761);

const COMPOSERS: [(&str, u64, u64, f64, u64, u64, f64); 36] = [
    ("Koželuch", 361, 16598, 0.022, 77, 74, 0.900),
    ("Mozart", 466, 15272, 0.031, 157, 82, 0.756),
    ("Beethoven", 1722, 50052, 0.034, 732, 301, 0.659),
    ("Corelli", 490, 14314, 0.034, 191, 66, 0.639),
    ("Couperin", 333, 9472, 0.035, 147, 40, 0.552),
    ("Schütz", 471, 11709, 0.040, 161, 74, 0.729),
    ("Schubert", 308, 6200, 0.050, 0, 71, 1.000),
    ("J. S. Bach", 931, 18493, 0.050, 390, 143, 0.636),
    ("Scarlatti", 733, 12490, 0.059, 275, 153, 0.748),
    ("C. P. E. Bach", 698, 11191, 0.062, 290, 116, 0.658),
    ("J. C. Bach", 314, 5063, 0.062, 132, 53, 0.656),
    ("Monteverdi", 232, 3289, 0.071, 111, 38, 0.589),
    ("Mendelssohn", 1094, 14758, 0.074, 448, 181, 0.664),
    ("Chopin", 726, 9125, 0.080, 226, 137, 0.796),
    ("Tchaikovsky", 278, 3059, 0.091, 52, 67, 0.932),
    ("Frescobaldi", 536, 5318, 0.101, 248, 85, 0.597),
    ("Peri", 316, 2884, 0.110, 151, 57, 0.612),
    ("Pleyel", 179, 1567, 0.114, 67, 44, 0.778),
    ("Dvořák", 177, 1539, 0.115, 53, 47, 0.856),
    ("Pergolesi", 141, 1189, 0.119, 58, 16, 0.573),
    ("Grieg", 1038, 8236, 0.126, 193, 340, 0.950),
    ("Händel", 44, 350, 0.126, 9, 12, 0.929),
    ("R. Schumann", 265, 1840, 0.144, 105, 52, 0.714),
    ("Liszt", 755, 5070, 0.149, 324, 161, 0.698),
    ("Sweelinck", 86, 501, 0.172, 37, 15, 0.653),
    ("W. F. Bach", 314, 1753, 0.179, 158, 56, 0.585),
    ("C. Schumann", 247, 1326, 0.186, 99, 43, 0.684),
    ("Medtner", 1332, 6508, 0.205, 669, 257, 0.605),
    ("Poulenc", 77, 278, 0.277, 18, 28, 0.930),
    ("Wagner", 402, 1433, 0.281, 224, 50, 0.445),
    ("Debussy", 291, 1013, 0.287, 120, 65, 0.724),
    ("Ravel", 276, 861, 0.321, 113, 64, 0.735),
    ("Mahler", 219, 595, 0.368, 129, 42, 0.525),
    ("Rachmaninoff", 456, 1141, 0.400, 280, 87, 0.503),
    ("Schulhoff", 251, 488, 0.514, 137, 61, 0.620),
    ("Bartók", 709, 1191, 0.595, 513, 104, 0.359),
];
const COMPOSER_TOTAL: (u64, u64, f64, u64, u64, f64) = (6015, 246166, 0.024, 2488, 1097, 0.681);

/// (genre, chant ids, manuscripts, str, f1, f2, printed coverage, our coverage)
#[allow(clippy::type_complexity)]
const CANTUS_GENRES: [(&str, u64, u64, f64, u64, u64, f64, f64); 17] = [
    ("A", 11158, 231, 0.021, 4714, 1542, 0.569, 0.60761800861645),
    ("R", 5099, 213, 0.042, 2151, 714, 0.553, 0.6114600451303487),
    ("V", 8163, 214, 0.026, 3919, 1068, 0.502, 0.5316759287750175),
    ("W", 926, 185, 0.200, 292, 127, 0.679, 0.7339391140457081),
    ("I", 600, 181, 0.302, 250, 106, 0.596, 0.6705324196099104),
    ("In", 207, 50, 0.242, 41, 5, 0.573, 0.5518528392428685),
    ("InV", 286, 32, 0.112, 82, 32, 0.745, 0.7313408981940227),
    ("Gr", 154, 90, 0.584, 28, 9, 0.733, 0.7795275590551182),
    ("GrV", 207, 68, 0.329, 53, 11, 0.666, 0.6184978948798044),
    ("Al", 405, 73, 0.180, 159, 62, 0.624, 0.6651567528906902),
    ("AlV", 38, 29, 0.763, 24, 3, 0.197, 0.2835820895522388),
    ("Of", 158, 43, 0.272, 25, 17, 0.810, 0.895781223945306),
    ("OfV", 263, 13, 0.049, 44, 39, 0.901, 0.9137639198218263),
    ("Cm", 198, 42, 0.212, 27, 8, 0.731, 0.812933025404157),
    ("CmV", 154, 4, 0.026, 135, 16, 0.183, 0.21284498769058005),
    ("Tc", 47, 21, 0.447, 10, 6, 0.797, 0.8493975903614458),
    ("TcV", 203, 21, 0.103, 44, 27, 0.846, 0.8498992091797178),
];

struct Suite {
    failed: usize,
    total: usize,
}

impl Suite {
    fn check(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        println!("{} [{id}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn coverage(s_obs: u64, f1: u64, f2: u64) -> f64 {
    chao1_from_summary(SpectrumSummary::new(s_obs, f1, f2)).coverage
}

/// Largest deviation between computed and printed coverage over `rows`.
fn worst<'a>(rows: impl IntoIterator<Item = (&'a str, u64, u64, u64, f64)>) -> (f64, &'a str) {
    rows.into_iter()
        .map(|(name, s, f1, f2, printed)| ((coverage(s, f1, f2) - printed).abs(), name))
        .fold((0.0, ""), |a, b| if b.0 > a.0 { b } else { a })
}

fn criterion_table2(suite: &mut Suite) {
    let (t, _, _, f1, f2, c) = SESSION_TOTAL;
    let rows = SESSION_GENRES
        .iter()
        .map(|r| (r.0, r.1, r.4, r.5, r.6))
        .chain([("Total", t, f1, f2, c)]);
    let (dev, at) = worst(rows);
    suite.check(
        "1",
        "tune genre coverage, 12 genres + total, tol 0.0015",
        dev <= 0.0015,
        format!("max |dev| = {dev:.5} ({at})"),
    );
}

fn criterion_table3(suite: &mut Suite) {
    let (t, _, _, f1, f2, c) = COMPOSER_TOTAL;
    let rows = COMPOSERS
        .iter()
        .map(|r| (r.0, r.1, r.4, r.5, r.6))
        .chain([("Total", t, f1, f2, c)]);
    let (dev, at) = worst(rows);
    let schubert = coverage(308, 0, 71);
    suite.check(
        "2",
        "composer coverage, 36 composers + total, tol 0.002",
        dev <= 0.002 && schubert == 1.0,
        format!("max |dev| = {dev:.5} ({at}); f1 = 0 row = {schubert}"),
    );
}

fn criterion_rism(suite: &mut Suite) {
    let cases = [(48524.0, 78432.0, 0.619, 0.0005), (20778.0, 32989.0, 0.630, 0.001), (34090.0, 53561.0, 0.635, 0.0015)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (s_obs, s_hat, want, tol) in cases {
        let got = coverage_of(s_obs, s_hat);
        pass &= (got - want).abs() <= tol;
        detail.push(format!("{got:.4} vs {want}±{tol}"));
    }
    suite.check("3", "collection-level coverage bounds", pass, detail.join("; "));
}

fn criterion_ontology(suite: &mut Suite) {
    let got = coverage_of(81.0, 85.0);
    suite.check(
        "4",
        "81 of 85 concepts",
        (got - 0.9529).abs() <= 0.00005,
        format!("{got:.6}"),
    );
}

fn criterion_ratios(suite: &mut Suite) {
    let mut dev: f64 = 0.0;
    let ttr_rows = SESSION_GENRES
        .iter()
        .chain(COMPOSERS.iter())
        .map(|r| (r.1, r.2, r.3))
        .chain([SESSION_TOTAL, COMPOSER_TOTAL].map(|t| (t.0, t.1, t.2)));
    let mut n_ttr = 0;
    for (types, tokens, printed) in ttr_rows {
        let ttr = DiversityProxies::from_counts(types, tokens, Mode::Abundance).ttr.unwrap();
        dev = dev.max((ttr - printed).abs());
        n_ttr += 1;
    }
    let mut str_dev: f64 = 0.0;
    for r in &CANTUS_GENRES {
        let s = DiversityProxies::from_counts(r.1, r.2, Mode::Incidence).str_.unwrap();
        str_dev = str_dev.max((s - r.3).abs());
    }
    suite.check(
        "5",
        "TTR for tune genres and composers, STR for chant genres, tol 0.001",
        dev <= 0.001 && str_dev <= 0.001,
        format!("{n_ttr} TTR rows max |dev| = {dev:.5}; {} STR rows max |dev| = {str_dev:.5}", CANTUS_GENRES.len()),
    );
}

fn criterion_correlation(suite: &mut Suite) {
    let ttr: Vec<f64> = SESSION_GENRES.iter().map(|r| r.1 as f64 / r.2 as f64).collect();
    let cov: Vec<f64> = SESSION_GENRES.iter().map(|r| coverage(r.1, r.4, r.5)).collect();
    let one_minus: Vec<f64> = ttr.iter().map(|t| 1.0 - t).collect();
    let reported = pearson(&one_minus, &cov).unwrap();
    let raw = pearson(&ttr, &cov).unwrap();
    let pass = (reported.r - 0.28).abs() <= 0.02
        && (reported.p_value - 0.35).abs() <= 0.05
        && (raw.r + reported.r).abs() <= 1e-12
        && (raw.p_value - reported.p_value).abs() <= 1e-12;
    suite.check(
        "6",
        "Pearson of proxy vs coverage over 12 genres",
        pass,
        format!(
            "r(1-TTR, coverage) = {:.4}, p = {:.4}; r(TTR, coverage) = {:.4}",
            reported.r, reported.p_value, raw.r
        ),
    );
}

fn populations() -> Vec<(String, AbundanceModel, usize)> {
    let mut out = Vec::new();
    for s in [100, 500, 1000] {
        out.push((format!("uniform S={s}"), AbundanceModel::Uniform, s));
        out.push((format!("zipf S={s}"), AbundanceModel::Zipf { alpha: 1.0 }, s));
    }
    out
}

const SEEDS: u64 = 200;

fn criterion_properties(suite: &mut Suite) {
    let start = Instant::now();

    // (a) and (c): plug-in estimates on sparse and dense draws.
    let mut violations = 0;
    let mut draws = 0;
    let mut dense_ratios = Vec::new();
    for (label, model, s) in populations() {
        let pop = synth::generate(&PopulationSpec {
            s_true: s,
            distribution: model,
            seed: 1,
        })
        .unwrap();
        let mut dense_sum = 0.0;
        for seed in 0..SEEDS {
            let mut sizes = vec![s as u64 / 2, s as u64, 5 * s as u64];
            if model == AbundanceModel::Uniform {
                sizes.push(50 * s as u64);
            }
            for n in sizes {
                let est = chao1(&synth::sample(&pop, n, seed).unwrap().spectrum()).unwrap();
                draws += 1;
                if est.s_hat < est.s_obs as f64 {
                    violations += 1;
                }
                if n == 50 * s as u64 {
                    dense_sum += est.s_hat;
                }
            }
        }
        if model == AbundanceModel::Uniform {
            dense_ratios.push((label, dense_sum / SEEDS as f64 / s as f64));
        }
    }
    suite.check(
        "7a",
        "s_hat >= S_obs on synthetic draws",
        violations == 0,
        format!("{violations} violations in {draws} draws"),
    );
    let ok = dense_ratios.iter().all(|(_, r)| (0.9..=1.02).contains(r));
    suite.check(
        "7c",
        "uniform mean s_hat within [0.9, 1.02] S_true at n = 50 S_true",
        ok,
        dense_ratios
            .iter()
            .map(|(l, r)| format!("{l}: {r:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
    );

    // (b): accumulation curves, 1000 replicates per size.
    let mut worst_drop: f64 = 0.0;
    let mut curves = 0;
    for (_, model, s) in populations() {
        let pop = synth::generate(&PopulationSpec {
            s_true: s,
            distribution: model,
            seed: 1,
        })
        .unwrap();
        let n = s as u64;
        let sizes: Vec<u64> = (1..=5).map(|i| i * n / 5).collect();
        for seed in 0..SEEDS {
            let t = synth::sample(&pop, n, seed).unwrap();
            let opts = AccumulateOptions {
                replicates: 1000,
                seed,
                ..AccumulateOptions::default()
            };
            let points = accumulate(&t, &sizes, &opts).unwrap();
            for w in points.windows(2) {
                worst_drop = worst_drop.max(w[0].mean_s_obs - w[1].mean_s_obs);
            }
            curves += 1;
        }
    }
    suite.check(
        "7b",
        "accumulation mean S_obs non-decreasing in k (slack 1.0)",
        worst_drop <= 1.0,
        format!("{curves} curves, largest drop {worst_drop:.3}"),
    );

    // (d): spectrum against a brute-force oracle.
    let mut r = rng::seeded(7);
    let mut mismatches = 0;
    let cases = 1000;
    for _ in 0..cases {
        let len = r.random_range(1..=50);
        let records: Vec<ObservationRecord> = (0..len)
            .map(|_| {
                ObservationRecord::new(
                    format!("s{}", r.random_range(0..5)),
                    format!("sp{}", r.random_range(0..12)),
                    r.random_range(0..6),
                )
            })
            .collect();
        if !oracle_agrees(&records) {
            mismatches += 1;
        }
    }
    suite.check(
        "7d",
        "spectrum matches brute force on small inputs",
        mismatches == 0,
        format!("{mismatches} mismatches in {cases} cases"),
    );

    let elapsed = start.elapsed();
    suite.check(
        "7",
        "property suite runtime under 2 minutes",
        elapsed < Duration::from_secs(120),
        format!("{:.1}s", elapsed.as_secs_f64()),
    );
}

/// Recounts abundance and incidence spectra with nested loops only.
fn oracle_agrees(records: &[ObservationRecord]) -> bool {
    let mut species: Vec<&str> = Vec::new();
    for rec in records {
        if rec.count > 0 && !species.contains(&rec.species_id.as_str()) {
            species.push(&rec.species_id);
        }
    }
    let mut abundance = BTreeMap::new();
    let mut incidence = BTreeMap::new();
    let mut samples = BTreeSet::new();
    for sp in &species {
        let mut total = 0;
        let mut seen_in: Vec<&str> = Vec::new();
        for rec in records {
            if rec.species_id == *sp && rec.count > 0 {
                total += rec.count;
                let sample = rec.sample_id.as_deref().unwrap();
                if !seen_in.contains(&sample) {
                    seen_in.push(sample);
                }
                samples.insert(sample);
            }
        }
        *abundance.entry(total).or_insert(0u64) += 1;
        *incidence.entry(seen_in.len() as u64).or_insert(0u64) += 1;
    }

    let got_a = tally::tally(records, Mode::Abundance);
    let got_i = tally::tally(records, Mode::Incidence);
    if species.is_empty() {
        return got_a.is_err() && got_i.is_err();
    }
    let (Ok(a), Ok(i)) = (got_a, got_i) else {
        return false;
    };
    let n: u64 = records.iter().map(|r| r.count).sum();
    a.spectrum().freqs() == &abundance
        && a.spectrum().total() == n
        && i.spectrum().freqs() == &incidence
        && i.total() == samples.len() as u64
}

fn write_grouped_input(dir: &Path) {
    let mut records = Vec::new();
    for (g, alpha) in [("alpha", 0.8), ("beta", 1.0), ("gamma", 1.2), ("delta", 1.4), ("epsilon", 1.6)] {
        let pop = synth::generate(&PopulationSpec {
            s_true: 400,
            distribution: AbundanceModel::Zipf { alpha },
            seed: 3,
        })
        .unwrap();
        let t = synth::sample(&pop, 1500, 11).unwrap();
        for rec in synth::abundance_records(&t) {
            records.push(rec.with_attribute("genre", g));
        }
    }
    fs::write(dir.join("grouped.csv"), sio::long_csv(&records, Some("genre"))).unwrap();
}

fn criterion_cli_determinism(suite: &mut Suite) {
    let bin = env!("CARGO_BIN_EXE_silentspecies");
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("synth.csv", vec!["synth", "--species", "300", "--alpha", "1.1", "--tokens", "2000", "--seed", "7"]),
        (
            "sites.csv",
            vec!["synth", "--distribution", "uniform", "--species", "80", "--sites", "12", "--per-site", "10"],
        ),
        ("tally.csv", vec!["tally", "--input", "synth.csv"]),
        ("estimate.csv", vec!["estimate", "--input", "synth.csv"]),
        ("report.md", vec!["report", "--input", "grouped.csv", "--group-by", "genre"]),
        ("report.json", vec!["report", "--input", "grouped.csv", "--group-by", "genre", "--format", "json"]),
        ("accumulate.csv", vec!["accumulate", "--input", "synth.csv", "--sizes", "250,500,1000,2000", "--replicates", "300"]),
        (
            "accumulate_inc.csv",
            vec!["accumulate", "--input", "sites.csv", "--mode", "incidence", "--sizes", "2,6,12", "--replicates", "300"],
        ),
        ("bootstrap.csv", vec!["bootstrap", "--input", "synth.csv", "--replicates", "300", "--seed", "9"]),
        ("bootstrap_inc.csv", vec!["bootstrap", "--input", "sites.csv", "--mode", "incidence", "--replicates", "300"]),
        ("correlate.csv", vec!["correlate", "--input", "grouped.csv", "--group-by", "genre", "--x", "ttr"]),
        (
            "trend.csv",
            vec!["correlate", "--input", "grouped.csv", "--group-by", "genre", "--x", "ttr", "--trend", "1", "--band-replicates", "200"],
        ),
    ];

    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let threads = ["1", "1", "4"];
    let mut failures = Vec::new();
    for (dir, t) in dirs.iter().zip(threads) {
        write_grouped_input(dir.path());
        for (out, args) in &runs {
            let status = Command::new(bin)
                .args(args)
                .args(["-o", out])
                .current_dir(dir.path())
                .env("SILENTSPECIES_THREADS", t)
                .status()
                .unwrap();
            if !status.success() {
                failures.push(format!("{out} exited with {status}"));
            }
        }
    }
    for (out, _) in &runs {
        let bytes: Vec<Vec<u8>> = dirs.iter().map(|d| fs::read(d.path().join(out)).unwrap_or_default()).collect();
        if bytes[0].is_empty() {
            failures.push(format!("{out} is empty"));
        }
        if bytes[0] != bytes[1] {
            failures.push(format!("{out} differs between repeated runs"));
        }
        if bytes[0] != bytes[2] {
            failures.push(format!("{out} differs between 1 and 4 threads"));
        }
    }
    suite.check(
        "8",
        "CLI output byte-identical across repeats and 1 vs 4 threads",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} outputs x 3 runs identical", runs.len())
        } else {
            failures.join("; ")
        },
    );
}

fn criterion_table1_locked(suite: &mut Suite) {
    let mut worst: f64 = 0.0;
    for r in &CANTUS_GENRES {
        let est = silentspecies::estimators::chao2_from_summary(SpectrumSummary::new(r.1, r.4, r.5), r.2, false).unwrap();
        worst = worst.max((est.coverage - r.7).abs());
    }
    let a = &CANTUS_GENRES[0];
    let a_cov = coverage(a.1, a.4, a.5);
    let gap = a_cov - a.6;
    suite.check(
        "9",
        "chant genre coverage locked to our arithmetic, printed values not matched",
        worst <= 1e-12 && (a_cov - 0.608).abs() <= 0.0005 && gap > 0.03,
        format!("max |dev| vs locked = {worst:.1e}; genre A computes {a_cov:.3} vs printed {}", a.6),
    );
}

fn main() {
    let mut suite = Suite { failed: 0, total: 0 };
    criterion_table2(&mut suite);
    criterion_table3(&mut suite);
    criterion_rism(&mut suite);
    criterion_ontology(&mut suite);
    criterion_ratios(&mut suite);
    criterion_correlation(&mut suite);
    criterion_properties(&mut suite);
    criterion_cli_determinism(&mut suite);
    criterion_table1_locked(&mut suite);

    println!("{} of {} criteria passed", suite.total - suite.failed, suite.total);
    if suite.failed > 0 {
        std::process::exit(1);
    }
}
