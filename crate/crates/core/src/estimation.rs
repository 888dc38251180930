//! Estimation of gamma and of the type distribution from precinct returns,
//! with the sample filters, a synthetic-returns simulator and descriptive
//! summaries (share histogram, district swing deviations, cross-election
//! quantile curves).

use crate::error::{Error, Result};
use crate::taste::{normal_cdf, normal_inv_cdf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

/// Precincts with fewer two-party votes than this are dropped.
pub const MIN_VOTES: u64 = 50;

/// One precinct in one election.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecinctRecord {
    pub state: String,
    pub year: i32,
    pub precinct_id: String,
    pub district_id: String,
    pub total_votes: u64,
    pub rep_share: f64,
    #[serde(with = "flag")]
    pub contested: bool,
}

mod flag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match String::deserialize(d)?.trim() {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(D::Error::custom(format!("contested must be 0 or 1, got `{other}`"))),
        }
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "state",
    "year",
    "precinct_id",
    "district_id",
    "total_votes",
    "rep_share",
    "contested",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestMode {
    /// The first malformed row is an error.
    #[default]
    Strict,
    /// Malformed rows are reported and skipped.
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MalformedRow {
    pub line: u64,
    pub message: String,
}

/// Row counts through the sample filters.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FilterReport {
    pub rows_read: usize,
    pub malformed: Vec<MalformedRow>,
    pub dropped_uncontested: usize,
    pub dropped_low_votes: usize,
    pub dropped_extreme_share: usize,
    pub kept: usize,
}

impl FilterReport {
    pub fn dropped(&self) -> usize {
        self.dropped_uncontested + self.dropped_low_votes + self.dropped_extreme_share
    }
}

/// Reads precinct rows and applies the sample filters.
pub fn ingest<R: Read>(reader: R, mode: IngestMode) -> Result<(Vec<PrecinctRecord>, FilterReport)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Malformed {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let mut raw = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {
                let parsed = raw
                    .deserialize::<PrecinctRecord>(Some(&headers))
                    .map_err(|e| e.to_string())
                    .and_then(validate);
                match parsed {
                    Ok(r) => records.push(r),
                    Err(message) => {
                        let line = raw.position().map_or(line, |p| p.line());
                        if mode == IngestMode::Strict {
                            return Err(Error::Malformed { line, message });
                        }
                        malformed.push(MalformedRow { line, message });
                    }
                }
            }
            Err(e) => {
                let line = e.position().map_or(line, |p| p.line());
                if mode == IngestMode::Strict {
                    return Err(Error::Malformed { line, message: e.to_string() });
                }
                malformed.push(MalformedRow { line, message: e.to_string() });
            }
        }
    }
    let rows_read = records.len() + malformed.len();
    let (kept, mut report) = apply_filters(records);
    report.rows_read = rows_read;
    report.malformed = malformed;
    Ok((kept, report))
}

pub fn ingest_path(path: &Path, mode: IngestMode) -> Result<(Vec<PrecinctRecord>, FilterReport)> {
    ingest(std::fs::File::open(path)?, mode)
}

fn validate(r: PrecinctRecord) -> std::result::Result<PrecinctRecord, String> {
    if r.total_votes == 0 {
        return Err("total_votes must be positive".into());
    }
    if !(0.0..=1.0).contains(&r.rep_share) {
        return Err(format!("rep_share {} is outside [0, 1]", r.rep_share));
    }
    Ok(r)
}

/// Drops, in order: every year of a district that is uncontested in any
/// year; precincts with fewer than [`MIN_VOTES`] votes; precincts with a
/// share of exactly 0 or 1.
pub fn apply_filters(records: Vec<PrecinctRecord>) -> (Vec<PrecinctRecord>, FilterReport) {
    let mut report = FilterReport {
        rows_read: records.len(),
        ..FilterReport::default()
    };
    let uncontested: HashSet<(String, String)> = records
        .iter()
        .filter(|r| !r.contested)
        .map(|r| (r.state.clone(), r.district_id.clone()))
        .collect();
    let mut kept = Vec::with_capacity(records.len());
    for r in records {
        if uncontested.contains(&(r.state.clone(), r.district_id.clone())) {
            report.dropped_uncontested += 1;
        } else if r.total_votes < MIN_VOTES {
            report.dropped_low_votes += 1;
        } else if r.rep_share <= 0.0 || r.rep_share >= 1.0 {
            report.dropped_extreme_share += 1;
        } else {
            kept.push(r);
        }
    }
    report.kept = kept.len();
    (kept, report)
}

pub fn write_records<W: Write>(out: W, records: &[PrecinctRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// moments

/// `w = Phi^-1(v)` for every record.
pub fn probit_transform(records: &[PrecinctRecord]) -> Result<Vec<f64>> {
    records.iter().map(|r| probit(r.rep_share)).collect()
}

pub fn probit(v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(normal_inv_cdf(v))
    } else {
        Err(Error::ShareOutOfRange(v))
    }
}

/// Vote-weighted mean of `w` within each election, keyed by year.
pub fn election_means(records: &[PrecinctRecord]) -> Result<BTreeMap<i32, f64>> {
    let mut acc: BTreeMap<i32, (f64, f64)> = BTreeMap::new();
    for r in records {
        let w = probit(r.rep_share)?;
        let e = acc.entry(r.year).or_default();
        e.0 += r.total_votes as f64 * w;
        e.1 += r.total_votes as f64;
    }
    Ok(acc.into_iter().map(|(y, (sw, k))| (y, sw / k)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    /// `(year, w_t)`.
    pub election_means: Vec<(i32, f64)>,
    pub grand_mean: f64,
    pub elections: usize,
    pub n_precincts: usize,
}

/// Exact interval for gamma from the chi-square pivot
/// `(T - 1) gamma^2 / gamma_hat^2`.
pub fn gamma_interval(gamma_hat: f64, elections: usize, alpha: f64) -> Result<(f64, f64)> {
    if elections < 2 {
        return Err(Error::TooFewElections(elections));
    }
    let df = (elections - 1) as f64;
    let chi = ChiSquared::new(df).map_err(|e| Error::InvalidInstance(e.to_string()))?;
    let lo = (chi.inverse_cdf(alpha / 2.0) / df).sqrt() * gamma_hat;
    let hi = (chi.inverse_cdf(1.0 - alpha / 2.0) / df).sqrt() * gamma_hat;
    Ok((lo, hi))
}

/// `gamma_hat = 1 / sd(w_t)` over elections, with its `1 - alpha` interval.
pub fn estimate_gamma(records: &[PrecinctRecord], alpha: f64) -> Result<GammaEstimate> {
    if records.is_empty() {
        return Err(Error::NoData);
    }
    let means = election_means(records)?;
    gamma_from_means(&means, alpha, count_precincts(records))
}

fn gamma_from_means(means: &BTreeMap<i32, f64>, alpha: f64, n_precincts: usize) -> Result<GammaEstimate> {
    let t = means.len();
    if t < 2 {
        return Err(Error::TooFewElections(t));
    }
    let grand_mean = means.values().sum::<f64>() / t as f64;
    let var = means.values().map(|w| (w - grand_mean).powi(2)).sum::<f64>() / (t - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let gamma_hat = 1.0 / var.sqrt();
    let (ci_low, ci_high) = gamma_interval(gamma_hat, t, alpha)?;
    Ok(GammaEstimate {
        gamma_hat,
        ci_low,
        ci_high,
        alpha,
        election_means: means.iter().map(|(&y, &w)| (y, w)).collect(),
        grand_mean,
        elections: t,
        n_precincts,
    })
}

fn count_precincts(records: &[PrecinctRecord]) -> usize {
    records
        .iter()
        .map(|r| (r.state.as_str(), r.precinct_id.as_str()))
        .collect::<HashSet<_>>()
        .len()
}

/// One row of the estimates table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateEstimate {
    pub state: String,
    pub gamma_hat: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    #[serde(rename = "T")]
    pub elections: usize,
    pub n_precincts: usize,
    #[serde(skip)]
    pub error: Option<String>,
}

/// Label of the row pooling every state.
pub const POOLED: &str = "ALL";

/// Estimates per state (sorted by state) followed by a pooled row. States
/// whose estimate fails keep a row with empty estimates.
pub fn estimate_by_state(records: &[PrecinctRecord], alpha: f64) -> Result<Vec<StateEstimate>> {
    if records.is_empty() {
        return Err(Error::NoData);
    }
    let mut by_state: BTreeMap<&str, Vec<PrecinctRecord>> = BTreeMap::new();
    for r in records {
        by_state.entry(r.state.as_str()).or_default().push(r.clone());
    }
    let groups: Vec<(String, Vec<PrecinctRecord>)> = by_state
        .into_iter()
        .map(|(s, v)| (s.to_string(), v))
        .chain(std::iter::once((POOLED.to_string(), records.to_vec())))
        .collect();
    Ok(groups
        .par_iter()
        .map(|(state, recs)| {
            let elections = recs.iter().map(|r| r.year).collect::<BTreeSet<_>>().len();
            let n_precincts = count_precincts(recs);
            match estimate_gamma(recs, alpha) {
                Ok(e) => StateEstimate {
                    state: state.clone(),
                    gamma_hat: Some(e.gamma_hat),
                    ci_low: Some(e.ci_low),
                    ci_high: Some(e.ci_high),
                    elections,
                    n_precincts,
                    error: None,
                },
                Err(e) => StateEstimate {
                    state: state.clone(),
                    gamma_hat: None,
                    ci_low: None,
                    ci_high: None,
                    elections,
                    n_precincts,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

pub fn write_estimates<W: Write>(out: W, rows: &[StateEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FMoments {
    pub mean: f64,
    pub sd: f64,
}

/// Mean `w` (the average of the election means) and the vote-weighted
/// within-election standard deviation of `w_nt`.
pub fn estimate_f_moments(records: &[PrecinctRecord]) -> Result<FMoments> {
    if records.is_empty() {
        return Err(Error::NoData);
    }
    let means = election_means(records)?;
    let mean = means.values().sum::<f64>() / means.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for r in records {
        let k = r.total_votes as f64;
        num += k * (probit(r.rep_share)? - means[&r.year]).powi(2);
        den += k;
    }
    Ok(FMoments { mean, sd: (num / den).sqrt() })
}

// ---------------------------------------------------------------------------
// simulation

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TypeSpec {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Default for TypeSpec {
    fn default() -> Self {
        TypeSpec::Uniform { lo: -1.0, hi: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub types: TypeSpec,
    pub gamma: f64,
    pub elections: usize,
    pub n_precincts: usize,
    pub votes_per_precinct: u64,
    pub n_districts: usize,
    pub seed: u64,
    pub state: String,
    pub first_year: i32,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            types: TypeSpec::default(),
            gamma: 14.75,
            elections: 3,
            n_precincts: 1000,
            votes_per_precinct: 1000,
            n_districts: 10,
            seed: 0,
            state: "SIM".into(),
            first_year: 2016,
        }
    }
}

/// Draws precinct types once and one aggregate shock `r_t ~ N(0, 1/gamma^2)`
/// per election, and records `v = Phi(s - r_t)` with a fixed vote count.
pub fn simulate_returns(spec: &SimulationSpec) -> Result<Vec<PrecinctRecord>> {
    if !(spec.gamma > 0.0) || spec.elections == 0 || spec.n_precincts == 0 || spec.votes_per_precinct == 0 {
        return Err(Error::InvalidInstance("simulation parameters must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let types: Vec<f64> = match spec.types {
        TypeSpec::Uniform { lo, hi } => (0..spec.n_precincts).map(|_| rng.random_range(lo..hi)).collect(),
        TypeSpec::Normal { mean, sd } => {
            let d = Normal::new(mean, sd).map_err(|e| Error::InvalidInstance(e.to_string()))?;
            (0..spec.n_precincts).map(|_| d.sample(&mut rng)).collect()
        }
    };
    let shock = Normal::new(0.0, 1.0 / spec.gamma).map_err(|e| Error::InvalidInstance(e.to_string()))?;
    let districts = spec.n_districts.max(1);
    let mut out = Vec::with_capacity(spec.elections * spec.n_precincts);
    for t in 0..spec.elections {
        let r = shock.sample(&mut rng);
        for (n, &s) in types.iter().enumerate() {
            out.push(PrecinctRecord {
                state: spec.state.clone(),
                year: spec.first_year + 2 * t as i32,
                precinct_id: format!("p{n}"),
                district_id: format!("d{}", n % districts),
                total_votes: spec.votes_per_precinct,
                rep_share: normal_cdf(s - r),
                contested: true,
            });
        }
    }
    Ok(out)
}

/// Share of `replications` simulated samples whose interval covers the true
/// gamma. Replication `i` uses seed `spec.seed + i`.
pub fn interval_coverage(spec: &SimulationSpec, replications: usize, alpha: f64) -> Result<f64> {
    let hits: Result<Vec<bool>> = (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = spec.clone();
            s.seed = spec.seed.wrapping_add(i);
            let e = estimate_gamma(&simulate_returns(&s)?, alpha)?;
            Ok(e.ci_low <= spec.gamma && spec.gamma <= e.ci_high)
        })
        .collect();
    let hits = hits?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / replications.max(1) as f64)
}

// ---------------------------------------------------------------------------
// descriptive summaries

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Share of the total weight in each bin.
    pub shares: Vec<f64>,
    /// Weight share falling outside the edges.
    pub below: f64,
    pub above: f64,
}

impl Histogram {
    /// Bins `[e_i, e_{i+1})`, the last one closed.
    pub fn build(edges: Vec<f64>, values: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let nb = edges.len() - 1;
        let mut counts = vec![0.0; nb];
        let (mut below, mut above, mut total) = (0.0, 0.0, 0.0);
        let (lo, hi) = (edges[0], edges[nb]);
        for (x, w) in values {
            total += w;
            if x < lo - 1e-12 {
                below += w;
            } else if x > hi + 1e-12 {
                above += w;
            } else {
                let b = edges[1..].partition_point(|&e| e <= x + 1e-12).min(nb - 1);
                counts[b] += w;
            }
        }
        let norm = if total > 0.0 { total } else { 1.0 };
        Histogram {
            edges,
            shares: counts.iter().map(|c| c / norm).collect(),
            below: below / norm,
            above: above / norm,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_low", "bin_high", "share"])?;
        for (i, s) in self.shares.iter().enumerate() {
            w.write_record([self.edges[i].to_string(), self.edges[i + 1].to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `lo, lo + step, ..., hi` computed from integer multiples.
pub fn bin_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

/// Vote-weighted histogram of precinct shares on `{0, .05, ..., 1}`.
pub fn share_histogram(records: &[PrecinctRecord]) -> Histogram {
    Histogram::build(
        bin_edges(0.0, 1.0, 20),
        records.iter().map(|r| (r.rep_share, r.total_votes as f64)),
    )
}

/// District vote shares by year, keyed by `(state, district)`.
pub fn district_shares(records: &[PrecinctRecord]) -> BTreeMap<(String, String), BTreeMap<i32, f64>> {
    let mut acc: BTreeMap<(String, String), BTreeMap<i32, (f64, f64)>> = BTreeMap::new();
    for r in records {
        let e = acc
            .entry((r.state.clone(), r.district_id.clone()))
            .or_default()
            .entry(r.year)
            .or_default();
        e.0 += r.total_votes as f64 * r.rep_share;
        e.1 += r.total_votes as f64;
    }
    acc.into_iter()
        .map(|(k, years)| (k, years.into_iter().map(|(y, (v, n))| (y, v / n)).collect()))
        .collect()
}

/// Deviations of each district-year share from the district's mean share
/// over years, for districts observed in at least two elections.
pub fn swing_deviations(records: &[PrecinctRecord]) -> Vec<f64> {
    let mut out = Vec::new();
    for years in district_shares(records).values() {
        if years.len() < 2 {
            continue;
        }
        let mean = years.values().sum::<f64>() / years.len() as f64;
        out.extend(years.values().map(|v| v - mean));
    }
    out
}

/// Histogram of district swing deviations on `{-.25, -.225, ..., .25}`.
pub fn swing_histogram(records: &[PrecinctRecord]) -> Histogram {
    Histogram::build(bin_edges(-0.25, 0.25, 20), swing_deviations(records).into_iter().map(|d| (d, 1.0)))
}

/// Vote-weighted empirical quantile function of one election's shares.
#[derive(Debug, Clone)]
pub struct WeightedQuantiles {
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl WeightedQuantiles {
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = points.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        let mut values = Vec::with_capacity(points.len());
        let mut cum = Vec::with_capacity(points.len());
        for (v, w) in points {
            acc += w;
            values.push(v);
            cum.push(acc / total);
        }
        WeightedQuantiles { values, cum }
    }

    /// Smallest value whose cumulative weight reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let i = self.cum.partition_point(|&c| c < p - 1e-12).min(self.values.len() - 1);
        self.values[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqPoint {
    pub year: i32,
    pub p: f64,
    pub v_base: f64,
    pub v_year: f64,
}

/// Quantile-matched curves: for each year and level `p`, the share at the
/// `p`-quantile of the base year against the share at the `p`-quantile of
/// that year. This traces `J_t^-1(J_base(v))` without matching precincts.
pub fn qq_curves(records: &[PrecinctRecord], base_year: i32, levels: &[f64]) -> Result<Vec<QqPoint>> {
    let mut by_year: BTreeMap<i32, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        by_year.entry(r.year).or_default().push((r.rep_share, r.total_votes as f64));
    }
    let quantiles: BTreeMap<i32, WeightedQuantiles> =
        by_year.into_iter().map(|(y, pts)| (y, WeightedQuantiles::new(pts))).collect();
    let base = quantiles
        .get(&base_year)
        .ok_or_else(|| Error::InvalidInstance(format!("no records for base year {base_year}")))?;
    let mut out = Vec::new();
    for (&year, q) in &quantiles {
        for &p in levels {
            out.push(QqPoint { year, p, v_base: base.quantile(p), v_year: q.quantile(p) });
        }
    }
    Ok(out)
}

/// Levels `0.01, 0.02, ..., 0.99`.
pub fn default_levels() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

pub fn write_qq<W: Write>(out: W, points: &[QqPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
