//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver or the portfolio routines it is used to check.
#![allow(dead_code)]

use std::collections::BTreeMap;

use qcp_core::profiles::EmpiricalDistribution;
use qcp_core::PartialLatinSquare;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// All Latin squares of order `n` by plain row-major backtracking.
pub fn all_latin_squares(n: usize) -> Vec<Vec<u8>> {
    fn rec(n: usize, cell: usize, grid: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cell == n * n {
            out.push(grid.clone());
            return;
        }
        let (r, c) = (cell / n, cell % n);
        for v in 0..n as u8 {
            let clash = (0..c).any(|k| grid[r * n + k] == v) || (0..r).any(|k| grid[k * n + c] == v);
            if !clash {
                grid[cell] = v;
                rec(n, cell + 1, grid, out);
            }
        }
    }
    let mut out = Vec::new();
    rec(n, 0, &mut vec![0; n * n], &mut out);
    out
}

/// True when some Latin square in `squares` agrees with every filled cell.
pub fn completable(square: &PartialLatinSquare, squares: &[Vec<u8>]) -> bool {
    squares.iter().any(|ls| {
        square
            .cells()
            .iter()
            .zip(ls)
            .all(|(c, v)| c.is_none_or(|x| x == *v))
    })
}

/// Every valid partial Latin square of order `n` (feasible for n <= 3).
pub fn all_partial_squares(n: usize) -> Vec<PartialLatinSquare> {
    let cells = n * n;
    let base = n + 1;
    let total = base.pow(cells as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut rest = code;
        let mut rows = vec![vec![None; n]; n];
        for idx in 0..cells {
            let d = rest % base;
            rest /= base;
            rows[idx / n][idx % n] = if d == 0 { None } else { Some((d - 1) as u8) };
        }
        let sq = PartialLatinSquare::from_rows(&rows).unwrap();
        if sq.is_valid() {
            out.push(sq);
        }
    }
    out
}

/// Exact law of the minimum over all processors by enumerating every joint
/// outcome. `components` pairs a distribution with its copy count.
pub fn brute_force_min(components: &[(&EmpiricalDistribution, u32)]) -> BTreeMap<u64, f64> {
    let slots: Vec<&EmpiricalDistribution> = components
        .iter()
        .flat_map(|(d, n)| std::iter::repeat_n(*d, *n as usize))
        .collect();
    let mut out = BTreeMap::new();
    let mut idx = vec![0usize; slots.len()];
    loop {
        let mut p = 1.0;
        let mut min = u64::MAX;
        for (slot, &i) in slots.iter().zip(&idx) {
            p *= slot.pmf()[i];
            min = min.min(slot.support()[i]);
        }
        *out.entry(min).or_insert(0.0) += p;
        // odometer increment
        let mut k = 0;
        loop {
            if k == slots.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < slots[k].support().len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// A random distribution with `points` support values drawn from `1..=max_value`.
pub fn random_dist(rng: &mut ChaCha8Rng, points: usize, max_value: u64) -> EmpiricalDistribution {
    let mut values: Vec<u64> = Vec::new();
    while values.len() < points {
        let v = rng.random_range(1..=max_value);
        if !values.contains(&v) {
            values.push(v);
        }
    }
    let weights: Vec<f64> = (0..points).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    EmpiricalDistribution::from_pairs(values.into_iter().zip(weights.into_iter().map(|w| w / total)), 0.0)
        .unwrap()
}

/// Inverse-cdf sampler over a distribution's raw support and pmf.
pub struct Sampler {
    values: Vec<u64>,
    cumulative: Vec<f64>,
}

impl Sampler {
    pub fn new(d: &EmpiricalDistribution) -> Self {
        let mut acc = 0.0;
        let cumulative = d
            .pmf()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self {
            values: d.support().to_vec(),
            cumulative,
        }
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        let u: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.values.len() - 1);
        self.values[i]
    }
}

/// Mean of the simulated minimum over `samples` portfolio draws.
pub fn monte_carlo_min_mean(
    components: &[(&EmpiricalDistribution, u32)],
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let samplers: Vec<(Sampler, u32)> = components.iter().map(|(d, n)| (Sampler::new(d), *n)).collect();
    let mut total = 0.0;
    for _ in 0..samples {
        let mut min = u64::MAX;
        for (s, n) in &samplers {
            for _ in 0..*n {
                min = min.min(s.draw(rng));
            }
        }
        total += min as f64;
    }
    total / samples as f64
}
