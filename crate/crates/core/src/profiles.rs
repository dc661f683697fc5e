//! Batches of seeded runs, empirical backtrack-count distributions, and
//! phase-transition sweeps.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::latin::{generate, GeneratorSpec, PartialLatinSquare};
use crate::seed::{derive_seed, STREAM_GENERATOR, STREAM_SOLVER};
use crate::solver::{solve, HeuristicConfig, OutcomeKind, Strategy};

pub const RUNSET_SCHEMA_VERSION: u32 = 1;
pub const DISTRIBUTION_SCHEMA_VERSION: u32 = 1;

/// Slack used when comparing accumulated probabilities.
pub const PROB_EPS: f64 = 1e-12;

/// Where each run's instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    /// Every run solves the same instance.
    Instance { rows: Vec<Vec<Option<u8>>> },
    /// Every run generates a fresh instance with a seed derived from its index.
    Generated { order: usize, fill_fraction: f64 },
}

impl Source {
    pub fn instance(square: &PartialLatinSquare) -> Self {
        Source::Instance {
            rows: square.rows(),
        }
    }

    pub fn generated(order: usize, fill_fraction: f64) -> Result<Self> {
        GeneratorSpec::new(order, fill_fraction, 0)?;
        Ok(Source::Generated {
            order,
            fill_fraction,
        })
    }

    fn fixed_square(&self) -> Result<Option<PartialLatinSquare>> {
        match self {
            Source::Instance { rows } => {
                let square = PartialLatinSquare::from_rows(rows)?;
                square.ensure_valid()?;
                Ok(Some(square))
            }
            Source::Generated { .. } => Ok(None),
        }
    }
}

/// A [`HeuristicConfig`] without its seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicTemplate {
    pub strategy: Strategy,
    pub cutoff: Option<u64>,
}

impl HeuristicTemplate {
    pub fn new(strategy: Strategy, cutoff: Option<u64>) -> Self {
        Self { strategy, cutoff }
    }

    pub fn config(&self, seed: u64) -> HeuristicConfig {
        HeuristicConfig::new(self.strategy, seed, self.cutoff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Sat,
    Unsat,
    Cutoff,
    GenerationFailed,
}

impl From<OutcomeKind> for RunOutcome {
    fn from(k: OutcomeKind) -> Self {
        match k {
            OutcomeKind::Sat => RunOutcome::Sat,
            OutcomeKind::Unsat => RunOutcome::Unsat,
            OutcomeKind::Cutoff => RunOutcome::Cutoff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    /// Solver seed.
    pub seed: u64,
    /// Generator seed, for generated sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
    pub outcome: RunOutcome,
    pub backtracks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub source: Source,
    pub heuristic: HeuristicTemplate,
    pub runs: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSet {
    pub schema_version: u32,
    pub meta: RunMeta,
    pub records: Vec<RunRecord>,
}

impl RunSet {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: RunSet = serde_json::from_str(text)?;
        if set.schema_version != RUNSET_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: set.schema_version,
                expected: RUNSET_SCHEMA_VERSION,
            });
        }
        let contiguous = set.records.iter().enumerate().all(|(i, r)| r.run_index == i);
        if !contiguous || set.records.len() != set.meta.runs {
            return Err(Error::InvalidDistribution(
                "run indices must be contiguous from 0 and match the run count".into(),
            ));
        }
        Ok(set)
    }

    pub fn count(&self, outcome: RunOutcome) -> usize {
        self.records.iter().filter(|r| r.outcome == outcome).count()
    }
}

fn run_one(
    fixed: Option<&PartialLatinSquare>,
    source: &Source,
    heuristic: &HeuristicTemplate,
    master_seed: u64,
    index: usize,
) -> RunRecord {
    let seed = derive_seed(master_seed, index as u64, STREAM_SOLVER);
    let (square, instance_seed) = match (fixed, source) {
        (Some(sq), _) => (Ok(sq.clone()), None),
        (
            None,
            Source::Generated {
                order,
                fill_fraction,
            },
        ) => {
            let gseed = derive_seed(master_seed, index as u64, STREAM_GENERATOR);
            let spec = GeneratorSpec {
                order: *order,
                fill_fraction: *fill_fraction,
                seed: gseed,
            };
            (generate(&spec), Some(gseed))
        }
        (None, Source::Instance { .. }) => unreachable!("fixed instance resolved up front"),
    };
    match square {
        Ok(square) => {
            let res = solve(&square, &heuristic.config(seed)).expect("instances are valid");
            RunRecord {
                run_index: index,
                seed,
                instance_seed,
                outcome: res.outcome.kind().into(),
                backtracks: res.backtracks,
            }
        }
        Err(_) => RunRecord {
            run_index: index,
            seed,
            instance_seed,
            outcome: RunOutcome::GenerationFailed,
            backtracks: 0,
        },
    }
}

/// Runs `runs` seeded solves. Run `i` uses solver seed
/// `derive_seed(master_seed, i, STREAM_SOLVER)` and, for generated sources,
/// instance seed `derive_seed(master_seed, i, STREAM_GENERATOR)`. The result
/// does not depend on `exec`.
pub fn collect(
    source: &Source,
    heuristic: HeuristicTemplate,
    runs: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<RunSet> {
    if runs == 0 {
        return Err(Error::EmptyRunSet);
    }
    let fixed = source.fixed_square()?;
    let records = exec.map_indexed(runs, |i| {
        run_one(fixed.as_ref(), source, &heuristic, master_seed, i)
    });
    Ok(RunSet {
        schema_version: RUNSET_SCHEMA_VERSION,
        meta: RunMeta {
            source: source.clone(),
            heuristic,
            runs,
            master_seed,
        },
        records,
    })
}

/// Which records enter a distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DistributionOptions {
    /// Drop UNSAT records and condition on the rest.
    pub sat_only: bool,
}

/// A discrete law over backtrack counts, with the probability of exceeding the
/// cutoff kept as a separate censored tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct EmpiricalDistribution {
    support: Vec<u64>,
    pmf: Vec<f64>,
    censored_mass: f64,
    meta: DistributionMeta,
    // cdf[i] = P[A <= support[i]]; tail[i] = P[A > support[i]]
    cdf: Vec<f64>,
    tail: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_meta: Option<RunMeta>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    schema_version: u32,
    support: Vec<u64>,
    pmf: Vec<f64>,
    censored_mass: f64,
    #[serde(default)]
    meta: DistributionMeta,
}

impl TryFrom<RawDistribution> for EmpiricalDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        if raw.schema_version != DISTRIBUTION_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: raw.schema_version,
                expected: DISTRIBUTION_SCHEMA_VERSION,
            });
        }
        Ok(Self::new(raw.support, raw.pmf, raw.censored_mass)?.with_meta(raw.meta))
    }
}

impl From<EmpiricalDistribution> for RawDistribution {
    fn from(d: EmpiricalDistribution) -> Self {
        RawDistribution {
            schema_version: DISTRIBUTION_SCHEMA_VERSION,
            support: d.support,
            pmf: d.pmf,
            censored_mass: d.censored_mass,
            meta: d.meta,
        }
    }
}

/// Summary statistics. Mean and std need an uncensored law; quantiles need
/// the cdf to reach the requested level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub median: Option<u64>,
    pub quantiles: Vec<(f64, Option<u64>)>,
    pub censored_mass: f64,
}

pub const SUMMARY_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

impl EmpiricalDistribution {
    /// Validates and builds a distribution. Zero-probability points are kept.
    pub fn new(support: Vec<u64>, pmf: Vec<f64>, censored_mass: f64) -> Result<Self> {
        if support.len() != pmf.len() {
            return Err(Error::InvalidDistribution(format!(
                "support has {} points but pmf has {}",
                support.len(),
                pmf.len()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution("support must be strictly ascending".into()));
        }
        if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution("pmf entries must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&censored_mass) {
            return Err(Error::InvalidDistribution(format!(
                "censored mass {censored_mass} outside [0, 1]"
            )));
        }
        let total: f64 = pmf.iter().sum::<f64>() + censored_mass;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} differs from 1"
            )));
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        let mut tail = vec![0.0; pmf.len()];
        let mut acc = censored_mass;
        for i in (0..pmf.len()).rev() {
            tail[i] = acc;
            acc += pmf[i];
        }
        Ok(Self {
            support,
            pmf,
            censored_mass,
            meta: DistributionMeta::default(),
            cdf,
            tail,
        })
    }

    /// Builds from unordered `(value, probability)` pairs, merging duplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, f64)>, censored_mass: f64) -> Result<Self> {
        let mut pairs: Vec<(u64, f64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        let mut support: Vec<u64> = Vec::with_capacity(pairs.len());
        let mut pmf: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            if support.last() == Some(&x) {
                *pmf.last_mut().expect("parallel vectors") += p;
            } else {
                support.push(x);
                pmf.push(p);
            }
        }
        Self::new(support, pmf, censored_mass)
    }

    pub fn point_mass(x: u64) -> Self {
        Self::new(vec![x], vec![1.0], 0.0).expect("point mass is valid")
    }

    /// Relative frequencies of the given observations.
    pub fn from_samples(samples: &[u64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyRunSet);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let n = sorted.len() as f64;
        let mut support = Vec::new();
        let mut pmf = Vec::new();
        for chunk in sorted.chunk_by(|a, b| a == b) {
            support.push(chunk[0]);
            pmf.push(chunk.len() as f64 / n);
        }
        Self::new(support, pmf, 0.0)
    }

    pub fn with_meta(mut self, meta: DistributionMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.meta.label = Some(label.into());
        self
    }

    pub fn meta(&self) -> &DistributionMeta {
        &self.meta
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn censored_mass(&self) -> f64 {
        self.censored_mass
    }

    pub fn is_point_mass(&self) -> bool {
        self.censored_mass == 0.0 && self.pmf.iter().filter(|p| **p > 0.0).count() == 1
    }

    /// `P[A = x]`.
    pub fn prob(&self, x: u64) -> f64 {
        match self.support.binary_search(&x) {
            Ok(i) => self.pmf[i],
            Err(_) => 0.0,
        }
    }

    /// `P[A <= x]`.
    pub fn cdf(&self, x: u64) -> f64 {
        match self.support.partition_point(|&s| s <= x) {
            0 => 0.0,
            k => self.cdf[k - 1],
        }
    }

    /// `P[A > x]`, including the censored tail. Summed from the top, so it is
    /// exactly the censored mass at and beyond the largest support point.
    pub fn survival(&self, x: u64) -> f64 {
        match self.support.partition_point(|&s| s <= x) {
            0 => self.tail.first().map_or(self.censored_mass, |t| t + self.pmf[0]),
            k => self.tail[k - 1],
        }
    }

    fn require_uncensored(&self) -> Result<()> {
        if self.censored_mass > 0.0 {
            return Err(Error::Censored {
                mass: self.censored_mass,
                threshold: 0.0,
            });
        }
        Ok(())
    }

    pub fn mean(&self) -> Result<f64> {
        self.require_uncensored()?;
        Ok(self.support.iter().zip(&self.pmf).map(|(&x, p)| x as f64 * p).sum())
    }

    /// Population standard deviation.
    pub fn std(&self) -> Result<f64> {
        let mean = self.mean()?;
        let var: f64 = self
            .support
            .iter()
            .zip(&self.pmf)
            .map(|(&x, p)| (x as f64 - mean).powi(2) * p)
            .sum();
        Ok(var.sqrt())
    }

    /// Smallest support point whose cdf reaches `q`. `None` if the censored
    /// tail keeps the cdf below `q`.
    pub fn quantile(&self, q: f64) -> Option<u64> {
        let i = self.cdf.partition_point(|&c| c < q - PROB_EPS);
        self.support.get(i).copied()
    }

    pub fn summary(&self) -> Summary {
        let quantiles_ok = self.censored_mass < 0.5;
        let q = |level: f64| if quantiles_ok { self.quantile(level) } else { None };
        Summary {
            mean: self.mean().ok(),
            std: self.std().ok(),
            median: q(0.5),
            quantiles: SUMMARY_LEVELS.iter().map(|&l| (l, q(l))).collect(),
            censored_mass: self.censored_mass,
        }
    }

    /// First-order stochastic dominance for a smaller-is-better cost: `self`'s
    /// cdf is at or above `other`'s at every point of the union of supports
    /// and strictly above at one or more. Both censored masses must not exceed
    /// `censor_threshold`.
    pub fn dominates(&self, other: &EmpiricalDistribution, censor_threshold: f64) -> Result<bool> {
        for d in [self, other] {
            if d.censored_mass > censor_threshold {
                return Err(Error::Censored {
                    mass: d.censored_mass,
                    threshold: censor_threshold,
                });
            }
        }
        let mut strict = false;
        for x in union_support(&[self, other]) {
            let (a, b) = (self.cdf(x), other.cdf(x));
            if a < b - PROB_EPS {
                return Ok(false);
            }
            strict |= a > b + PROB_EPS;
        }
        Ok(strict)
    }

    /// Moves the censored tail onto the single point `at`, which must exceed
    /// every support point. The result is the law of `min(A, at)`.
    pub fn cap_censored(&self, at: u64) -> Result<Self> {
        if self.censored_mass == 0.0 {
            return Ok(self.clone());
        }
        if self.support.last().is_some_and(|&m| m >= at) {
            return Err(Error::InvalidDistribution(format!(
                "cap {at} must exceed the largest observed value"
            )));
        }
        let mut support = self.support.clone();
        let mut pmf = self.pmf.clone();
        support.push(at);
        pmf.push(self.censored_mass);
        Ok(Self::new(support, pmf, 0.0)?.with_meta(self.meta.clone()))
    }

    /// `x,pmf,cdf` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,pmf,cdf\n");
        for ((x, p), c) in self.support.iter().zip(&self.pmf).zip(&self.cdf) {
            s.push_str(&format!("{x},{p},{c}\n"));
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Ascending union of the supports.
pub fn union_support(dists: &[&EmpiricalDistribution]) -> Vec<u64> {
    let mut xs: Vec<u64> = dists.iter().flat_map(|d| d.support.iter().copied()).collect();
    xs.sort_unstable();
    xs.dedup();
    xs
}

/// `pmf(x) = #{non-cutoff runs with x backtracks} / n` and
/// `censored_mass = #{cutoff runs} / n`, where `n` counts the runs that
/// produced an instance (minus UNSAT runs under `sat_only`).
pub fn to_distribution(runs: &RunSet, options: DistributionOptions) -> Result<EmpiricalDistribution> {
    let kept: Vec<&RunRecord> = runs
        .records
        .iter()
        .filter(|r| r.outcome != RunOutcome::GenerationFailed)
        .filter(|r| !(options.sat_only && r.outcome == RunOutcome::Unsat))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyRunSet);
    }
    let n = kept.len() as f64;
    let mut finished: Vec<u64> = kept
        .iter()
        .filter(|r| r.outcome != RunOutcome::Cutoff)
        .map(|r| r.backtracks)
        .collect();
    finished.sort_unstable();
    let censored = kept.len() - finished.len();
    let mut support = Vec::new();
    let mut pmf = Vec::new();
    for chunk in finished.chunk_by(|a, b| a == b) {
        support.push(chunk[0]);
        pmf.push(chunk.len() as f64 / n);
    }
    let censored_mass = censored as f64 / n;
    let dist = EmpiricalDistribution::new(support, pmf, censored_mass)?;
    Ok(dist.with_meta(DistributionMeta {
        label: Some(runs.meta.heuristic.strategy.name().to_string()),
        runs: Some(kept.len()),
        cutoff: runs.meta.heuristic.cutoff,
        run_meta: Some(runs.meta.clone()),
    }))
}

/// One row of a phase-transition sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub fill: f64,
    pub instances: usize,
    /// Lower median of backtracks over solved or censored runs (censored runs
    /// count at the cutoff).
    pub median_backtracks: Option<u64>,
    pub mean_backtracks: Option<f64>,
    pub frac_sat: f64,
    pub frac_unsat: f64,
    pub frac_cutoff: f64,
    pub gen_failures: usize,
}

pub const PHASE_CSV_HEADER: &str =
    "fill,instances,median_backtracks,mean_backtracks,frac_sat,frac_unsat,frac_cutoff,gen_failures";

impl PhaseRow {
    pub fn csv_line(&self) -> String {
        let na = |o: Option<String>| o.unwrap_or_else(|| "NA".into());
        format!(
            "{},{},{},{},{},{},{},{}",
            self.fill,
            self.instances,
            na(self.median_backtracks.map(|m| m.to_string())),
            na(self.mean_backtracks.map(|m| m.to_string())),
            self.frac_sat,
            self.frac_unsat,
            self.frac_cutoff,
            self.gen_failures
        )
    }
}

pub fn phase_csv(rows: &[PhaseRow]) -> String {
    let mut s = format!("{PHASE_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// `start, start + step, ..` up to `stop` inclusive, each rounded to 10
/// decimals so that printed values stay short.
pub fn fill_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || stop < start {
        return vec![start];
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10)
        .collect()
}

/// Generates `instances_per_point` fresh instances per fill fraction and
/// solves each once. Instance `k` of point `p` uses index
/// `p * instances_per_point + k` for both its generator and solver seeds.
pub fn phase_sweep(
    order: usize,
    fills: &[f64],
    instances_per_point: usize,
    heuristic: HeuristicTemplate,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<PhaseRow>> {
    if instances_per_point == 0 {
        return Err(Error::EmptyRunSet);
    }
    for &f in fills {
        GeneratorSpec::new(order, f, 0)?;
    }
    let total = fills.len() * instances_per_point;
    let records = exec.map_indexed(total, |i| {
        let fill = fills[i / instances_per_point];
        let source = Source::Generated {
            order,
            fill_fraction: fill,
        };
        run_one(None, &source, &heuristic, master_seed, i)
    });
    Ok(fills
        .iter()
        .zip(records.chunks(instances_per_point))
        .map(|(&fill, recs)| phase_row(fill, recs))
        .collect())
}

fn phase_row(fill: f64, recs: &[RunRecord]) -> PhaseRow {
    let solved: Vec<&RunRecord> = recs
        .iter()
        .filter(|r| r.outcome != RunOutcome::GenerationFailed)
        .collect();
    let n = solved.len();
    let frac = |o: RunOutcome| {
        if n == 0 {
            0.0
        } else {
            solved.iter().filter(|r| r.outcome == o).count() as f64 / n as f64
        }
    };
    let mut costs: Vec<u64> = solved.iter().map(|r| r.backtracks).collect();
    costs.sort_unstable();
    PhaseRow {
        fill,
        instances: recs.len(),
        median_backtracks: (n > 0).then(|| costs[(n - 1) / 2]),
        mean_backtracks: (n > 0).then(|| costs.iter().map(|&c| c as f64).sum::<f64>() / n as f64),
        frac_sat: frac(RunOutcome::Sat),
        frac_unsat: frac(RunOutcome::Unsat),
        frac_cutoff: frac(RunOutcome::Cutoff),
        gen_failures: recs.len() - n,
    }
}

/// Fill of the row with the largest median backtrack count. Equal medians
/// are ranked by mean, then the lower fill wins.
pub fn peak_fill(rows: &[PhaseRow]) -> Option<f64> {
    rows.iter()
        .filter(|r| r.median_backtracks.is_some())
        .max_by(|a, b| {
            a.median_backtracks
                .cmp(&b.median_backtracks)
                .then_with(|| {
                    a.mean_backtracks
                        .partial_cmp(&b.mean_backtracks)
                        .unwrap_or(Ordering::Equal)
                })
                .then_with(|| b.fill.partial_cmp(&a.fill).unwrap_or(Ordering::Equal))
        })
        .map(|r| r.fill)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Outcome;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    fn record(i: usize, outcome: RunOutcome, backtracks: u64) -> RunRecord {
        RunRecord {
            run_index: i,
            seed: i as u64,
            instance_seed: None,
            outcome,
            backtracks,
        }
    }

    fn runset(records: Vec<RunRecord>) -> RunSet {
        RunSet {
            schema_version: RUNSET_SCHEMA_VERSION,
            meta: RunMeta {
                source: Source::Generated {
                    order: 3,
                    fill_fraction: 0.0,
                },
                heuristic: HeuristicTemplate::new(Strategy::BrelazS, Some(9)),
                runs: records.len(),
                master_seed: 0,
            },
            records,
        }
    }

    #[test]
    fn counting_distribution() {
        let rs = runset(vec![
            record(0, RunOutcome::Sat, 0),
            record(1, RunOutcome::Sat, 0),
            record(2, RunOutcome::Unsat, 5),
            record(3, RunOutcome::Sat, 5),
        ]);
        let d = to_distribution(&rs, DistributionOptions::default()).unwrap();
        assert_eq!(d.support(), &[0, 5]);
        assert_eq!(d.pmf(), &[0.5, 0.5]);
        assert_eq!(d.censored_mass(), 0.0);

        let d = to_distribution(&rs, DistributionOptions { sat_only: true }).unwrap();
        assert_eq!(d.support(), &[0, 5]);
        assert!((d.pmf()[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn all_censored() {
        let rs = runset(vec![record(0, RunOutcome::Cutoff, 9), record(1, RunOutcome::Cutoff, 9)]);
        let d = to_distribution(&rs, DistributionOptions::default()).unwrap();
        assert!(d.support().is_empty());
        assert_eq!(d.censored_mass(), 1.0);
        assert_eq!(d.cdf(100), 0.0);
        assert_eq!(d.survival(100), 1.0);
        assert!(d.mean().is_err());
        assert_eq!(d.summary().median, None);
    }

    #[test]
    fn empty_runset_is_an_error() {
        assert!(matches!(
            to_distribution(&runset(vec![]), DistributionOptions::default()),
            Err(Error::EmptyRunSet)
        ));
        assert!(matches!(
            to_distribution(
                &runset(vec![record(0, RunOutcome::GenerationFailed, 0)]),
                DistributionOptions::default()
            ),
            Err(Error::EmptyRunSet)
        ));
    }

    #[test]
    fn cdf_and_survival_examples() {
        let d = EmpiricalDistribution::point_mass(3);
        assert_eq!(d.cdf(2), 0.0);
        assert_eq!(d.survival(2), 1.0);
        assert_eq!(d.survival(3), 0.0);
        assert_eq!(d.cdf(3), 1.0);
        let d = EmpiricalDistribution::new(vec![4, 9], vec![0.25, 0.5], 0.25).unwrap();
        assert_eq!(d.cdf(3), 0.0);
        assert_eq!(d.cdf(9), 0.75);
        assert_eq!(d.survival(9), 0.25);
        assert_eq!(d.survival(5), 0.75);
    }

    #[test]
    fn summary_examples() {
        let d = EmpiricalDistribution::point_mass(7);
        let s = d.summary();
        assert_eq!(s.mean, Some(7.0));
        assert_eq!(s.std, Some(0.0));
        assert_eq!(s.median, Some(7));

        let d = EmpiricalDistribution::new(vec![1, 2], vec![0.75, 0.25], 0.0).unwrap();
        let s = d.summary();
        assert_eq!(s.mean, Some(1.25));
        assert!((s.std.unwrap() - 0.1875f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.median, Some(1));
        assert_eq!(d.quantile(0.75), Some(1));
        assert_eq!(d.quantile(0.8), Some(2));

        let d = EmpiricalDistribution::new(vec![1], vec![0.6], 0.4).unwrap();
        assert!(matches!(d.mean(), Err(Error::Censored { .. })));
        assert_eq!(d.quantile(0.5), Some(1));
        assert_eq!(d.quantile(0.9), None);
        let d = EmpiricalDistribution::new(vec![1], vec![0.5], 0.5).unwrap();
        assert_eq!(d.summary().median, None);
    }

    #[test]
    fn dominance_examples() {
        let one = EmpiricalDistribution::point_mass(1);
        let two = EmpiricalDistribution::point_mass(2);
        assert!(!one.dominates(&one, 0.0).unwrap());
        assert!(one.dominates(&two, 0.0).unwrap());
        assert!(!two.dominates(&one, 0.0).unwrap());
        let censored = EmpiricalDistribution::new(vec![1], vec![0.9], 0.1).unwrap();
        assert!(matches!(censored.dominates(&two, 0.0), Err(Error::Censored { .. })));
        assert!(censored.dominates(&two, 0.2).is_ok());
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(EmpiricalDistribution::new(vec![2, 1], vec![0.5, 0.5], 0.0).is_err());
        assert!(EmpiricalDistribution::new(vec![1], vec![0.5], 0.0).is_err());
        assert!(EmpiricalDistribution::new(vec![1, 2], vec![1.5, -0.5], 0.0).is_err());
        assert!(EmpiricalDistribution::new(vec![1], vec![1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn cap_moves_tail() {
        let d = EmpiricalDistribution::new(vec![1, 5], vec![0.5, 0.25], 0.25).unwrap();
        let c = d.cap_censored(10).unwrap();
        assert_eq!(c.support(), &[1, 5, 10]);
        assert_eq!(c.censored_mass(), 0.0);
        assert_eq!(c.mean().unwrap(), 0.5 + 1.25 + 2.5);
        assert!(d.cap_censored(5).is_err());
    }

    #[test]
    fn distribution_json_round_trip_and_csv() {
        let d = EmpiricalDistribution::new(vec![0, 3, 8], vec![0.2, 0.3, 0.4], 0.1)
            .unwrap()
            .with_label("brelaz-s");
        let back = EmpiricalDistribution::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
        assert_eq!(d.to_csv().lines().next(), Some("x,pmf,cdf"));
        assert_eq!(d.to_csv().lines().count(), 4);
        let bad = d.to_json().unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(EmpiricalDistribution::from_json(&bad).is_err());
    }

    #[test]
    fn single_run_matches_direct_solve() {
        let square = PartialLatinSquare::new_empty(6).unwrap();
        let template = HeuristicTemplate::new(Strategy::RBrelazR, Some(1000));
        let rs = collect(&Source::instance(&square), template, 1, 99, Execution::Sequential).unwrap();
        assert_eq!(rs.records.len(), 1);
        let r = &rs.records[0];
        let direct = solve(&square, &template.config(r.seed)).unwrap();
        assert_eq!(r.backtracks, direct.backtracks);
        assert!(matches!(direct.outcome, Outcome::Sat(_)));
        assert_eq!(r.outcome, RunOutcome::Sat);
        assert_eq!(r.seed, derive_seed(99, 0, STREAM_SOLVER));
    }

    #[test]
    fn collect_is_deterministic_and_order_independent() {
        let source = Source::generated(7, 0.4).unwrap();
        let template = HeuristicTemplate::new(Strategy::BrelazR, Some(500));
        let a = collect(&source, template, 64, 5, Execution::Sequential).unwrap();
        let b = collect(&source, template, 64, 5, Execution::Parallel).unwrap();
        let c = collect(&source, template, 64, 5, Execution::Jobs(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a.records.iter().enumerate().all(|(i, r)| r.run_index == i));
        let back = RunSet::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn generation_failures_are_recorded() {
        let source = Source::generated(5, 1.0).unwrap();
        let template = HeuristicTemplate::new(Strategy::BrelazS, None);
        let rs = collect(&source, template, 30, 1, Execution::Sequential).unwrap();
        assert!(rs.count(RunOutcome::GenerationFailed) > 0);
    }

    #[test]
    fn peak_prefers_median_then_mean() {
        let row = |fill, median, mean| PhaseRow {
            fill,
            instances: 1,
            median_backtracks: Some(median),
            mean_backtracks: Some(mean),
            frac_sat: 1.0,
            frac_unsat: 0.0,
            frac_cutoff: 0.0,
            gen_failures: 0,
        };
        assert_eq!(peak_fill(&[row(0.1, 0, 9.0), row(0.2, 3, 1.0), row(0.3, 2, 50.0)]), Some(0.2));
        assert_eq!(peak_fill(&[row(0.1, 1, 2.0), row(0.2, 1, 8.0), row(0.3, 1, 4.0)]), Some(0.2));
        assert_eq!(peak_fill(&[row(0.1, 1, 2.0), row(0.2, 1, 2.0)]), Some(0.1));
        assert_eq!(peak_fill(&[]), None);
    }

    #[test]
    fn fill_range_steps() {
        let f = fill_range(0.1, 0.6, 0.05);
        assert_eq!(f.len(), 11);
        assert_eq!(f[4], 0.3);
        assert_eq!(f[10], 0.6);
        assert_eq!(fill_range(0.4, 0.4, 0.05), vec![0.4]);
    }

    #[test]
    fn phase_sweep_low_fill_is_easy_and_deterministic() {
        let template = HeuristicTemplate::new(Strategy::RBrelazR, Some(100_000));
        let rows = phase_sweep(6, &[0.0, 0.4], 20, template, 3, Execution::Parallel).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].median_backtracks, Some(0));
        assert_eq!(rows[0].frac_sat, 1.0);
        let again = phase_sweep(6, &[0.0, 0.4], 20, template, 3, Execution::Sequential).unwrap();
        assert_eq!(rows, again);
        let csv = phase_csv(&rows);
        assert!(csv.starts_with(PHASE_CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
    }

    fn arb_dist() -> impl proptest::strategy::Strategy<Value = EmpiricalDistribution> {
        prop::collection::vec((0u64..30, 1u32..100), 1..8).prop_map(|pts| {
            let total: u32 = pts.iter().map(|p| p.1).sum();
            EmpiricalDistribution::from_pairs(
                pts.into_iter().map(|(x, w)| (x, f64::from(w) / f64::from(total))),
                0.0,
            )
            .unwrap()
        })
    }

    fn arb_runset() -> impl proptest::strategy::Strategy<Value = RunSet> {
        prop::collection::vec((0u8..3, 0u64..20), 1..60).prop_map(|v| {
            runset(
                v.into_iter()
                    .enumerate()
                    .map(|(i, (k, b))| {
                        let o = [RunOutcome::Sat, RunOutcome::Unsat, RunOutcome::Cutoff][k as usize];
                        record(i, o, if o == RunOutcome::Cutoff { 20 } else { b })
                    })
                    .collect(),
            )
        })
    }

    use proptest::strategy::Strategy as _;

    proptest! {
        #[test]
        fn mass_is_preserved_and_cdf_tops_out(rs in arb_runset()) {
            let d = to_distribution(&rs, DistributionOptions::default()).unwrap();
            let total: f64 = d.pmf().iter().sum::<f64>() + d.censored_mass();
            prop_assert!((total - 1.0).abs() < 1e-9);
            let top = d.support().last().copied().unwrap_or(0);
            prop_assert!((d.cdf(top) - (1.0 - d.censored_mass())).abs() < 1e-9);
            for x in 0..25 {
                prop_assert!((d.cdf(x) + d.survival(x) - 1.0).abs() < 1e-12);
            }
            if d.censored_mass() == 0.0 {
                let avg = rs.records.iter().map(|r| r.backtracks as f64).sum::<f64>() / rs.records.len() as f64;
                prop_assert!((d.mean().unwrap() - avg).abs() < 1e-9);
            }
        }

        #[test]
        fn dominance_is_asymmetric_and_orders_means(a in arb_dist(), b in arb_dist()) {
            prop_assert!(!a.dominates(&a, 0.0).unwrap());
            let ab = a.dominates(&b, 0.0).unwrap();
            let ba = b.dominates(&a, 0.0).unwrap();
            prop_assert!(!(ab && ba));
            if ab {
                prop_assert!(a.mean().unwrap() <= b.mean().unwrap() + 1e-12);
            }
        }

        #[test]
        fn json_round_trip(d in arb_dist()) {
            prop_assert_eq!(EmpiricalDistribution::from_json(&d.to_json().unwrap()).unwrap(), d);
        }
    }
}
