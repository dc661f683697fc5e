//! Exact runtime law of a portfolio of independent runs.
//!
//! A portfolio runs `n_i` independent copies of algorithm `i` on `N = Σ n_i`
//! processors and stops at the first finisher, so its cost is
//! `X = min` over all copies. Two routes compute `P[X = x]`:
//!
//! * the survival product, `P[X > x] = Π P[A_i > x]^{n_i}`, differenced over
//!   the ascending union of supports (the default path);
//! * the binomial sum: some `i ≥ 1` processors hit exactly `x` and the rest
//!   exceed it, summed over how those `i` split across the algorithms.
//!
//! They agree to rounding and are tested against each other and against
//! brute-force enumeration of joint outcomes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::profiles::{union_support, EmpiricalDistribution};

/// Largest processor count for the binomial route; `C(64, k)` fits in `u64`.
pub const MAX_BINOMIAL_PROCESSORS: u32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub distribution: EmpiricalDistribution,
    pub processors: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    components: Vec<Component>,
}

impl PortfolioSpec {
    /// Every component needs at least one processor and an uncensored law.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidPortfolio("no components".into()));
        }
        for c in &components {
            if c.processors == 0 {
                return Err(Error::InvalidPortfolio("component with zero processors".into()));
            }
            uncensored(&c.distribution)?;
        }
        Ok(Self { components })
    }

    /// Pairs `dists[i]` with `allocation[i]` processors, skipping zeros.
    pub fn from_allocation(dists: &[EmpiricalDistribution], allocation: &[u32]) -> Result<Self> {
        if dists.len() != allocation.len() {
            return Err(Error::InvalidPortfolio(format!(
                "{} distributions but {} allocation entries",
                dists.len(),
                allocation.len()
            )));
        }
        Self::new(
            dists
                .iter()
                .zip(allocation)
                .filter(|(_, &n)| n > 0)
                .map(|(d, &n)| Component {
                    distribution: d.clone(),
                    processors: n,
                })
                .collect(),
        )
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn total_processors(&self) -> u32 {
        self.components.iter().map(|c| c.processors).sum()
    }
}

fn uncensored(d: &EmpiricalDistribution) -> Result<()> {
    if d.censored_mass() > 0.0 {
        return Err(Error::Censored {
            mass: d.censored_mass(),
            threshold: 0.0,
        });
    }
    Ok(())
}

/// Exact `C(n, k)`.
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 1..=u128::from(k) {
        acc = acc * (u128::from(n - k) + j) / j;
    }
    u64::try_from(acc).expect("binomial fits in u64 for n <= 64")
}

fn from_points(points: Vec<(u64, f64)>) -> Result<EmpiricalDistribution> {
    let (support, pmf): (Vec<u64>, Vec<f64>) = points.into_iter().filter(|(_, p)| *p > 0.0).unzip();
    EmpiricalDistribution::new(support, pmf, 0.0)
}

/// Law of the minimum of `n` independent copies of `dist`, by
/// `P[X=x] = Σ_{i=1}^{n} C(n,i) P[A=x]^i P[A>x]^{n-i}`.
pub fn portfolio_pmf_single(dist: &EmpiricalDistribution, n: u32) -> Result<EmpiricalDistribution> {
    uncensored(dist)?;
    check_binomial_range(n)?;
    let points = dist
        .support()
        .iter()
        .map(|&x| {
            let (p, s) = (dist.prob(x), dist.survival(x));
            let px: f64 = (1..=n)
                .map(|i| binomial(n, i) as f64 * p.powi(i as i32) * s.powi((n - i) as i32))
                .sum();
            (x, px)
        })
        .collect();
    from_points(points)
}

fn check_binomial_range(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidPortfolio("zero processors".into()));
    }
    if n > MAX_BINOMIAL_PROCESSORS {
        return Err(Error::InvalidPortfolio(format!(
            "binomial route supports at most {MAX_BINOMIAL_PROCESSORS} processors, got {n}"
        )));
    }
    Ok(())
}

/// Law of the portfolio minimum via the survival product.
pub fn portfolio_pmf(spec: &PortfolioSpec) -> Result<EmpiricalDistribution> {
    let dists: Vec<&EmpiricalDistribution> = spec.components.iter().map(|c| &c.distribution).collect();
    let mut prev = 1.0f64;
    let mut points = Vec::new();
    for x in union_support(&dists) {
        let surv: f64 = spec
            .components
            .iter()
            .map(|c| c.distribution.survival(x).powi(c.processors as i32))
            .product();
        points.push((x, prev - surv));
        prev = surv;
    }
    from_points(points)
}

/// Law of the portfolio minimum via the binomial sum. Two components use the
/// double sum over `i` and `i'` with `i'' = i - i'`; any other count uses the
/// product of one binomial term per component over every split of `i`.
pub fn portfolio_pmf_binomial(spec: &PortfolioSpec) -> Result<EmpiricalDistribution> {
    let total = spec.total_processors();
    check_binomial_range(total)?;
    let dists: Vec<&EmpiricalDistribution> = spec.components.iter().map(|c| &c.distribution).collect();
    let points = union_support(&dists)
        .into_iter()
        .map(|x| {
            let px = match spec.components.as_slice() {
                [a, b] => two_component_term(a, b, x),
                comps => many_component_term(comps, x),
            };
            (x, px)
        })
        .collect();
    from_points(points)
}

fn binomial_term(n: u32, k: u32, p: f64, s: f64) -> f64 {
    binomial(n, k) as f64 * p.powi(k as i32) * s.powi((n - k) as i32)
}

fn two_component_term(a: &Component, b: &Component, x: u64) -> f64 {
    let (n1, n2) = (a.processors, b.processors);
    let (p1, s1) = (a.distribution.prob(x), a.distribution.survival(x));
    let (p2, s2) = (b.distribution.prob(x), b.distribution.survival(x));
    let mut sum = 0.0;
    for i in 1..=(n1 + n2) {
        for i1 in 0..=n1 {
            // i'' = i - i'; the term vanishes outside 0..=n2.
            let Some(i2) = i.checked_sub(i1).filter(|&i2| i2 <= n2) else {
                continue;
            };
            sum += binomial_term(n1, i1, p1, s1) * binomial_term(n2, i2, p2, s2);
        }
    }
    sum
}

fn many_component_term(comps: &[Component], x: u64) -> f64 {
    let terms: Vec<(u32, f64, f64)> = comps
        .iter()
        .map(|c| (c.processors, c.distribution.prob(x), c.distribution.survival(x)))
        .collect();
    let total: u32 = comps.iter().map(|c| c.processors).sum();
    (1..=total).map(|i| split_sum(&terms, i)).sum()
}

/// Σ over `(k_1, .., k_m)` with `Σ k_j = remaining`, `0 <= k_j <= n_j`, of
/// `Π C(n_j, k_j) p_j^{k_j} s_j^{n_j - k_j}`.
fn split_sum(terms: &[(u32, f64, f64)], remaining: u32) -> f64 {
    match terms {
        [] => {
            if remaining == 0 {
                1.0
            } else {
                0.0
            }
        }
        [(n, p, s), rest @ ..] => (0..=remaining.min(*n))
            .map(|k| binomial_term(*n, k, *p, *s) * split_sum(rest, remaining - k))
            .sum(),
    }
}

/// A portfolio law with its mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioStats {
    pub pmf: EmpiricalDistribution,
    pub mean: f64,
    pub std: f64,
}

pub fn stats(pmf: &EmpiricalDistribution) -> Result<PortfolioStats> {
    Ok(PortfolioStats {
        pmf: pmf.clone(),
        mean: pmf.mean()?,
        std: pmf.std()?,
    })
}

/// One allocation vector and its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationStats {
    pub allocation: Vec<u32>,
    pub stats: PortfolioStats,
}

/// Every `(n_1, .., n_m)` with `Σ n_i = total`, in ascending lexicographic order.
pub fn allocations(m: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(m: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if m == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=total {
            prefix.push(k);
            rec(m - 1, total - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        rec(m, total, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

/// Evaluates every allocation of `total` processors across `dists`.
pub fn enumerate_portfolios(
    dists: &[EmpiricalDistribution],
    total: u32,
    exec: Execution,
) -> Result<Vec<AllocationStats>> {
    if dists.is_empty() || total == 0 {
        return Err(Error::InvalidPortfolio(
            "need at least one distribution and one processor".into(),
        ));
    }
    for d in dists {
        uncensored(d)?;
    }
    let allocs = allocations(dists.len(), total);
    exec.map_indexed(allocs.len(), |i| {
        let spec = PortfolioSpec::from_allocation(dists, &allocs[i])?;
        Ok(AllocationStats {
            allocation: allocs[i].clone(),
            stats: stats(&portfolio_pmf(&spec)?)?,
        })
    })
    .into_iter()
    .collect()
}

/// Indices of the portfolios not dominated in (mean, std): no other has both
/// coordinates `<=` with one strictly smaller. Exact ties are all kept.
pub fn efficient_frontier(portfolios: &[AllocationStats]) -> Vec<usize> {
    let dominated = |p: &PortfolioStats, q: &PortfolioStats| {
        q.mean <= p.mean && q.std <= p.std && (q.mean < p.mean || q.std < p.std)
    };
    (0..portfolios.len())
        .filter(|&i| {
            !portfolios
                .iter()
                .any(|q| dominated(&portfolios[i].stats, &q.stats))
        })
        .collect()
}

/// Index of the smallest mean, first on ties.
pub fn min_mean(portfolios: &[AllocationStats]) -> Option<usize> {
    (0..portfolios.len()).reduce(|best, i| {
        if portfolios[i].stats.mean < portfolios[best].stats.mean {
            i
        } else {
            best
        }
    })
}

/// Stochastic dominance between two portfolio laws.
pub fn portfolio_dominates(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<bool> {
    a.dominates(b, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub allocation: Vec<u32>,
    pub mean: f64,
    pub std: f64,
    pub on_frontier: bool,
}

/// Rows in enumeration order with the frontier flag set.
pub fn frontier_rows(portfolios: &[AllocationStats]) -> Vec<FrontierRow> {
    let frontier = efficient_frontier(portfolios);
    portfolios
        .iter()
        .enumerate()
        .map(|(i, p)| FrontierRow {
            allocation: p.allocation.clone(),
            mean: p.stats.mean,
            std: p.stats.std,
            on_frontier: frontier.contains(&i),
        })
        .collect()
}

/// `n1,..,nM,mean,std,on_frontier` with a header row.
pub fn frontier_csv(rows: &[FrontierRow]) -> String {
    let m = rows.first().map_or(0, |r| r.allocation.len());
    let mut s: String = (1..=m).map(|i| format!("n{i},")).collect();
    s.push_str("mean,std,on_frontier\n");
    for r in rows {
        for n in &r.allocation {
            s.push_str(&format!("{n},"));
        }
        s.push_str(&format!("{},{},{}\n", r.mean, r.std, u8::from(r.on_frontier)));
    }
    s
}
