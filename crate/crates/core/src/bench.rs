//! Measurement harness: false-positive rate, query latency, construction time,
//! and a grid runner that writes one CSV row per cell.

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use crate::bucketing::BucketingFilter;
use crate::error::{Error, Result};
use crate::grafite::{GrafiteFilter, FULL_UNIVERSE};
use crate::workloads::{self, QueryWorkload};

/// Column order of the benchmark CSV.
pub const CSV_HEADER: [&str; 10] = [
    "filter",
    "dataset",
    "n",
    "bpk",
    "range_size",
    "corr_degree",
    "fpr",
    "ns_per_query",
    "construct_s",
    "seed",
];

/// Default bits-per-key sweep.
pub const DEFAULT_BUDGETS: [f64; 11] = [8., 10., 12., 14., 16., 18., 20., 22., 24., 26., 28.];

/// Common surface of the filters under test.
pub trait RangeFilter {
    fn name(&self) -> &'static str;
    /// `true` unless the filter proves `[a, b]` holds no key; requires `a ≤ b`.
    fn may_contain(&self, a: u64, b: u64) -> bool;
    fn size_in_bits(&self) -> u64;
    fn key_count(&self) -> u64;

    fn bits_per_key(&self) -> f64 {
        self.size_in_bits() as f64 / self.key_count() as f64
    }
}

impl RangeFilter for GrafiteFilter {
    fn name(&self) -> &'static str {
        "grafite"
    }

    fn may_contain(&self, a: u64, b: u64) -> bool {
        GrafiteFilter::may_contain(self, a, b)
    }

    fn size_in_bits(&self) -> u64 {
        GrafiteFilter::size_in_bits(self)
    }

    fn key_count(&self) -> u64 {
        GrafiteFilter::key_count(self)
    }
}

impl RangeFilter for BucketingFilter {
    fn name(&self) -> &'static str {
        "bucketing"
    }

    fn may_contain(&self, a: u64, b: u64) -> bool {
        BucketingFilter::may_contain(self, a, b)
    }

    fn size_in_bits(&self) -> u64 {
        BucketingFilter::size_in_bits(self)
    }

    fn key_count(&self) -> u64 {
        BucketingFilter::key_count(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FprMeasurement {
    pub positives: u64,
    pub queries: u64,
}

impl FprMeasurement {
    pub fn fpr(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.positives as f64 / self.queries as f64
        }
    }
}

/// Fraction of `NotEmpty` answers on a workload of truly empty ranges.
pub fn measure_fpr<F: RangeFilter + ?Sized>(filter: &F, ranges: &[(u64, u64)]) -> FprMeasurement {
    let positives = ranges
        .iter()
        .filter(|&&(a, b)| filter.may_contain(a, b))
        .count() as u64;
    FprMeasurement {
        positives,
        queries: ranges.len() as u64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryTiming {
    pub ns_per_query: f64,
    /// Digest of the answers; identical across runs over the same workload.
    pub checksum: u64,
}

/// Mean latency of a single-threaded pass over `ranges`, after `warmup_rounds`
/// untimed passes.
pub fn measure_query_time<F: RangeFilter + ?Sized>(
    filter: &F,
    ranges: &[(u64, u64)],
    warmup_rounds: usize,
) -> QueryTiming {
    let pass = || {
        let mut checksum = 0u64;
        for (i, &(a, b)) in ranges.iter().enumerate() {
            if filter.may_contain(black_box(a), black_box(b)) {
                checksum = checksum.rotate_left(5) ^ i as u64;
            }
        }
        black_box(checksum)
    };
    for _ in 0..warmup_rounds {
        pass();
    }
    let start = Instant::now();
    let checksum = pass();
    let elapsed = start.elapsed().as_nanos() as f64;
    QueryTiming {
        ns_per_query: elapsed / ranges.len().max(1) as f64,
        checksum,
    }
}

#[derive(Debug, Clone)]
pub struct ConstructionTiming<F> {
    pub median_seconds: f64,
    pub samples: Vec<f64>,
    /// The filter produced by the last repetition.
    pub filter: F,
}

/// Median wall time of `repeats` calls to `builder` (at least one).
pub fn measure_construction<F, B>(
    keys: &[u64],
    mut builder: B,
    repeats: usize,
) -> Result<ConstructionTiming<F>>
where
    B: FnMut(&[u64]) -> Result<F>,
{
    let mut samples = Vec::with_capacity(repeats.max(1));
    let mut filter = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let f = builder(black_box(keys))?;
        samples.push(start.elapsed().as_secs_f64());
        filter = Some(f);
    }
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median_seconds = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    Ok(ConstructionTiming {
        median_seconds,
        samples,
        filter: filter.expect("at least one repetition"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Grafite,
    Bucketing,
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grafite" => Ok(FilterKind::Grafite),
            "bucketing" => Ok(FilterKind::Bucketing),
            other => Err(Error::Config(format!("unknown filter {other:?}"))),
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::Grafite => "grafite",
            FilterKind::Bucketing => "bucketing",
        })
    }
}

/// Where the keys come from: `uniform:N` or a binary key file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSpec {
    Uniform(usize),
    File(PathBuf),
}

impl FromStr for DatasetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("uniform:") {
            Some(n) => {
                let n: usize = parse_count(n)
                    .ok_or_else(|| Error::Config(format!("bad key count in {s:?}")))?;
                if n == 0 {
                    return Err(Error::Config("key count must be positive".into()));
                }
                Ok(DatasetSpec::Uniform(n))
            }
            None if s.is_empty() => Err(Error::Config("empty dataset".into())),
            None => Ok(DatasetSpec::File(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Uniform(n) => write!(f, "uniform:{n}"),
            DatasetSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Accepts plain integers plus `1e6`-style and `10^6`-style counts.
pub fn parse_count(s: &str) -> Option<usize> {
    let s = s.trim().replace('_', "");
    if let Ok(n) = s.parse() {
        return Some(n);
    }
    if let Some((base, exp)) = s.split_once('^') {
        let (base, exp): (usize, u32) = (base.parse().ok()?, exp.parse().ok()?);
        return base.checked_pow(exp);
    }
    let v: f64 = s.parse().ok()?;
    (v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63)).then_some(v as usize)
}

impl DatasetSpec {
    pub fn load(&self, universe: u128, seed: u64) -> Result<Vec<u64>> {
        match self {
            DatasetSpec::Uniform(n) => workloads::gen_uniform_keys(*n, universe, seed),
            DatasetSpec::File(path) => workloads::load_binary_dataset(path),
        }
    }
}

/// Which columns a run fills in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurements {
    pub fpr: bool,
    pub query_time: bool,
    pub construction: bool,
}

impl Measurements {
    pub const ALL: Self = Self {
        fpr: true,
        query_time: true,
        construction: true,
    };
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub filters: Vec<FilterKind>,
    pub dataset: DatasetSpec,
    pub budgets: Vec<f64>,
    pub range_sizes: Vec<u64>,
    /// `None` is the uncorrelated workload.
    pub workloads: Vec<Option<f64>>,
    pub queries: usize,
    pub seed: u64,
    pub universe: u128,
    pub measure: Measurements,
    pub warmup_rounds: usize,
    pub construction_repeats: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            filters: vec![FilterKind::Grafite, FilterKind::Bucketing],
            dataset: DatasetSpec::Uniform(100_000),
            budgets: DEFAULT_BUDGETS.to_vec(),
            range_sizes: vec![1, 32, 1024],
            workloads: vec![None],
            queries: 1_000_000,
            seed: 42,
            universe: FULL_UNIVERSE,
            measure: Measurements::ALL,
            warmup_rounds: 1,
            construction_repeats: 3,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.filters.is_empty() {
            return fail("no filters selected".into());
        }
        if self.budgets.is_empty() || self.range_sizes.is_empty() || self.workloads.is_empty() {
            return fail("budget, range-size and workload lists must be non-empty".into());
        }
        if self.queries == 0 {
            return fail("query count must be positive".into());
        }
        if self.universe == 0 || self.universe > FULL_UNIVERSE {
            return fail(format!("universe {} outside [1, 2^64]", self.universe));
        }
        for &b in &self.budgets {
            if !(b.is_finite() && b > 0.0) {
                return fail(format!("bits per key {b} must be positive"));
            }
            if self.filters.contains(&FilterKind::Grafite)
                && (b.fract() != 0.0 || !(3.0..=64.0).contains(&b))
            {
                return fail(format!(
                    "grafite needs an integer budget in [3, 64], got {b}"
                ));
            }
        }
        if let Some(&l) = self.range_sizes.iter().find(|&&l| l == 0) {
            return fail(format!("range size {l} must be positive"));
        }
        for d in self.workloads.iter().flatten() {
            if !(0.0..=1.0).contains(d) {
                return fail(format!("correlation degree {d} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Number of cells in the full grid.
    pub fn grid_size(&self) -> usize {
        self.filters.len() * self.budgets.len() * self.range_sizes.len() * self.workloads.len()
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub filter: String,
    pub dataset: String,
    pub n: u64,
    /// Measured bits per key.
    pub bpk: f64,
    pub range_size: u64,
    pub corr_degree: Option<f64>,
    pub fpr: Option<f64>,
    pub ns_per_query: Option<f64>,
    pub construct_s: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub positives: Option<u64>,
    #[serde(skip)]
    pub queries: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct SkippedCell {
    pub filter: FilterKind,
    pub budget: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub rows: Vec<BenchResult>,
    pub skipped: Vec<SkippedCell>,
}

/// Space of an explicit encoding of `n` keys from `[0, u)`, `log2(u/n) + 2`.
pub fn explicit_encoding_bits_per_key(n: usize, universe: u128) -> f64 {
    (universe as f64 / n as f64).log2() + 2.0
}

fn workload_seed(seed: u64, range_idx: usize, workload_idx: usize) -> u64 {
    // splitmix64 finaliser over the cell coordinates
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(1 + range_idx as u64))
        .wrapping_add(0xD1B5_4A32_D192_ED03u64.wrapping_mul(1 + workload_idx as u64));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Built {
    Grafite(GrafiteFilter),
    Bucketing(BucketingFilter),
}

impl Built {
    fn as_filter(&self) -> &dyn RangeFilter {
        match self {
            Built::Grafite(f) => f,
            Built::Bucketing(f) => f,
        }
    }
}

fn build_filter(
    kind: FilterKind,
    keys: &[u64],
    budget: f64,
    universe: u128,
    seed: u64,
) -> Result<Built> {
    Ok(match kind {
        FilterKind::Grafite => Built::Grafite(
            crate::grafite::GrafiteBuilder::with_budget(budget as u32, None)
                .seed(seed)
                .universe(universe)
                .build(keys)?,
        ),
        FilterKind::Bucketing => {
            Built::Bucketing(BucketingFilter::build_with_budget(keys, budget, universe)?)
        }
    })
}

/// Runs every (filter, budget, range size, workload) cell and writes the CSV to `out`.
pub fn run_suite<W: Write>(config: &SuiteConfig, out: W) -> Result<SuiteReport> {
    config.validate()?;
    let keys = config.dataset.load(config.universe, config.seed)?;
    if let Some(&k) = keys.last().filter(|&&k| k as u128 >= config.universe) {
        return Err(Error::OutOfUniverse {
            value: k,
            universe: config.universe,
        });
    }
    let dataset = config.dataset.to_string();
    let threshold = explicit_encoding_bits_per_key(keys.len(), config.universe);

    let mut workloads: Vec<Vec<QueryWorkload>> = Vec::with_capacity(config.range_sizes.len());
    for (ri, &ell) in config.range_sizes.iter().enumerate() {
        let mut row = Vec::with_capacity(config.workloads.len());
        for (wi, degree) in config.workloads.iter().enumerate() {
            let seed = workload_seed(config.seed, ri, wi);
            let w = match degree {
                None => {
                    workloads::gen_uncorrelated_queries(config.queries, ell, config.universe, seed)?
                }
                Some(d) => workloads::gen_correlated_queries(
                    &keys,
                    config.queries,
                    ell,
                    *d,
                    config.universe,
                    seed,
                )?,
            };
            row.push(workloads::enforce_empty(&w, &keys)?);
        }
        workloads.push(row);
    }

    let mut writer = csv::Writer::from_writer(out);
    let mut report = SuiteReport::default();
    for &kind in &config.filters {
        for &budget in &config.budgets {
            if budget > threshold {
                let reason = format!(
                    "{budget} bits/key exceeds the explicit encoding at {threshold:.2} bits/key"
                );
                warn!("skipping {kind} at {budget} bits/key: {reason}");
                report.skipped.push(SkippedCell {
                    filter: kind,
                    budget,
                    reason,
                });
                continue;
            }
            let (built, construct_s) = if config.measure.construction {
                let t = measure_construction(
                    &keys,
                    |k| build_filter(kind, k, budget, config.universe, config.seed),
                    config.construction_repeats,
                )?;
                (t.filter, Some(t.median_seconds))
            } else {
                (
                    build_filter(kind, &keys, budget, config.universe, config.seed)?,
                    None,
                )
            };
            let filter = built.as_filter();
            info!(
                "{kind} at {budget} bits/key: {:.3} measured",
                filter.bits_per_key()
            );
            for (ri, &ell) in config.range_sizes.iter().enumerate() {
                for (wi, degree) in config.workloads.iter().enumerate() {
                    let ranges = &workloads[ri][wi].ranges;
                    let fpr = config.measure.fpr.then(|| measure_fpr(filter, ranges));
                    let ns = config.measure.query_time.then(|| {
                        measure_query_time(filter, ranges, config.warmup_rounds).ns_per_query
                    });
                    let row = BenchResult {
                        filter: kind.to_string(),
                        dataset: dataset.clone(),
                        n: keys.len() as u64,
                        bpk: filter.bits_per_key(),
                        range_size: ell,
                        corr_degree: *degree,
                        fpr: fpr.map(|m| m.fpr()),
                        ns_per_query: ns,
                        construct_s,
                        seed: config.seed,
                        positives: fpr.map(|m| m.positives),
                        queries: fpr.map(|m| m.queries),
                    };
                    writer.serialize(&row)?;
                    report.rows.push(row);
                }
            }
        }
    }
    if report.rows.is_empty() {
        // Still emit the header so downstream readers see a valid file.
        writer.write_record(CSV_HEADER)?;
    }
    writer.flush()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_helpers() {
        assert_eq!(parse_count("100000"), Some(100_000));
        assert_eq!(parse_count("1e6"), Some(1_000_000));
        assert_eq!(parse_count("10^5"), Some(100_000));
        assert_eq!(parse_count("1_000"), Some(1000));
        assert_eq!(parse_count("x"), None);
        assert_eq!(parse_count("1.5"), None);
        assert_eq!(
            "uniform:10".parse::<DatasetSpec>().unwrap(),
            DatasetSpec::Uniform(10)
        );
        assert!(matches!(
            "keys.bin".parse::<DatasetSpec>().unwrap(),
            DatasetSpec::File(_)
        ));
        assert!("uniform:abc".parse::<DatasetSpec>().is_err());
        assert!("uniform:0".parse::<DatasetSpec>().is_err());
        assert_eq!(
            "Grafite".parse::<FilterKind>().unwrap(),
            FilterKind::Grafite
        );
        assert!("surf".parse::<FilterKind>().is_err());
    }

    #[test]
    fn fpr_extremes() {
        let keys = workloads::gen_uniform_keys(1000, 1 << 32, 1).unwrap();
        let w = workloads::gen_uncorrelated_queries(2000, 16, 1 << 32, 2).unwrap();
        let w = workloads::enforce_empty(&w, &keys).unwrap();
        let single = BucketingFilter::build(&keys, 1 << 32, 1 << 32).unwrap();
        assert_eq!(measure_fpr(&single, &w.ranges).fpr(), 1.0);
        let exact = crate::grafite::GrafiteBuilder::with_budget(40, None)
            .universe(1 << 32)
            .build(&keys)
            .unwrap();
        assert_eq!(exact.reduced_universe(), 1 << 32);
        assert_eq!(measure_fpr(&exact, &w.ranges).fpr(), 0.0);
    }

    #[test]
    fn timing_is_reproducible() {
        let keys = workloads::gen_uniform_keys(1000, FULL_UNIVERSE, 1).unwrap();
        let f = GrafiteFilter::build_with_budget(&keys, 10, None, 1).unwrap();
        let w = workloads::gen_uncorrelated_queries(5000, 4, FULL_UNIVERSE, 2).unwrap();
        let t1 = measure_query_time(&f, &w.ranges, 1);
        let t2 = measure_query_time(&f, &w.ranges, 0);
        assert_eq!(t1.checksum, t2.checksum);
        assert!(t1.ns_per_query.is_finite() && t1.ns_per_query > 0.0);
    }

    #[test]
    fn construction_median() {
        let keys = workloads::gen_uniform_keys(1000, FULL_UNIVERSE, 1).unwrap();
        let t = measure_construction(
            &keys,
            |k| GrafiteFilter::build_with_budget(k, 12, None, 3),
            1,
        )
        .unwrap();
        assert_eq!(t.samples.len(), 1);
        assert_eq!(t.median_seconds, t.samples[0]);
        let mut outputs = Vec::new();
        let t = measure_construction(
            &keys,
            |k| {
                let f = GrafiteFilter::build_with_budget(k, 12, None, 3)?;
                outputs.push(f.to_bytes());
                Ok(f)
            },
            4,
        )
        .unwrap();
        assert_eq!(t.samples.len(), 4);
        assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn config_validation() {
        let ok = SuiteConfig {
            queries: 10,
            dataset: DatasetSpec::Uniform(100),
            ..SuiteConfig::default()
        };
        assert!(ok.validate().is_ok());
        let bad = [
            SuiteConfig {
                filters: vec![],
                ..ok.clone()
            },
            SuiteConfig {
                budgets: vec![12.5],
                ..ok.clone()
            },
            SuiteConfig {
                budgets: vec![-1.0],
                ..ok.clone()
            },
            SuiteConfig {
                range_sizes: vec![0],
                ..ok.clone()
            },
            SuiteConfig {
                workloads: vec![Some(2.0)],
                ..ok.clone()
            },
            SuiteConfig {
                queries: 0,
                ..ok.clone()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
        let bucketing_only = SuiteConfig {
            filters: vec![FilterKind::Bucketing],
            budgets: vec![12.5],
            ..ok
        };
        assert!(bucketing_only.validate().is_ok());
    }

    #[test]
    fn full_grid_row_count() {
        let config = SuiteConfig {
            dataset: DatasetSpec::Uniform(500),
            budgets: vec![8.0, 12.0],
            range_sizes: vec![1, 16],
            workloads: vec![None, Some(0.5)],
            queries: 500,
            universe: 1 << 24,
            construction_repeats: 1,
            ..SuiteConfig::default()
        };
        let mut out = Vec::new();
        let report = run_suite(&config, &mut out).unwrap();
        assert!(report.skipped.is_empty());
        assert_eq!(report.rows.len(), config.grid_size());
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(text.lines().count(), 1 + config.grid_size());
        let seeds: std::collections::HashSet<_> = (0..3)
            .flat_map(|r| (0..3).map(move |w| workload_seed(u64::MAX, r, w)))
            .collect();
        assert_eq!(seeds.len(), 9);
    }
}
