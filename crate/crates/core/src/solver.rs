//! Complete backtracking search with forward checking over the
//! quasigroup-completion CSP.
//!
//! One variable per cell, domain `0..order`, all-different on every row and
//! column. Variables are chosen First-Fail (smallest remaining domain), ties
//! broken by the number of unassigned cells sharing the row or column (most
//! for Brelaz, fewest for reverse Brelaz), remaining ties uniformly at random.
//!
//! A backtrack is counted whenever a non-root node runs out of candidate
//! values and the search retracts its parent's assignment. Exhausting the
//! root proves the instance unsatisfiable and is not counted.
//!
//! The run's generator is consumed per node in a fixed order: one draw for the
//! variable tie-break (only when more than one cell ties), then one shuffle of
//! the candidate values (random value order only).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::latin::{full_mask, PartialLatinSquare};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Prefer the cell sharing constraints with the most unassigned cells.
    Brelaz,
    /// Prefer the cell sharing constraints with the fewest unassigned cells.
    ReverseBrelaz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueOrder {
    /// Ascending by value.
    Systematic,
    /// Uniformly random permutation per node.
    Random,
}

/// The four named search strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "brelaz-s")]
    BrelazS,
    #[serde(rename = "brelaz-r")]
    BrelazR,
    #[serde(rename = "r-brelaz-s")]
    RBrelazS,
    #[serde(rename = "r-brelaz-r")]
    RBrelazR,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::BrelazS,
        Strategy::BrelazR,
        Strategy::RBrelazS,
        Strategy::RBrelazR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::BrelazS => "brelaz-s",
            Strategy::BrelazR => "brelaz-r",
            Strategy::RBrelazS => "r-brelaz-s",
            Strategy::RBrelazR => "r-brelaz-r",
        }
    }

    pub fn tie_break(self) -> TieBreak {
        match self {
            Strategy::BrelazS | Strategy::BrelazR => TieBreak::Brelaz,
            Strategy::RBrelazS | Strategy::RBrelazR => TieBreak::ReverseBrelaz,
        }
    }

    pub fn value_order(self) -> ValueOrder {
        match self {
            Strategy::BrelazS | Strategy::RBrelazS => ValueOrder::Systematic,
            Strategy::BrelazR | Strategy::RBrelazR => ValueOrder::Random,
        }
    }

    pub fn from_parts(tie_break: TieBreak, value_order: ValueOrder) -> Self {
        match (tie_break, value_order) {
            (TieBreak::Brelaz, ValueOrder::Systematic) => Strategy::BrelazS,
            (TieBreak::Brelaz, ValueOrder::Random) => Strategy::BrelazR,
            (TieBreak::ReverseBrelaz, ValueOrder::Systematic) => Strategy::RBrelazS,
            (TieBreak::ReverseBrelaz, ValueOrder::Random) => Strategy::RBrelazR,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                format!("unknown heuristic `{s}` (expected brelaz-s, brelaz-r, r-brelaz-s or r-brelaz-r)")
            })
    }
}

/// Search configuration for a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub tie_break: TieBreak,
    pub value_order: ValueOrder,
    pub seed: u64,
    /// Maximum number of backtracks; `None` is unbounded.
    pub cutoff: Option<u64>,
}

impl HeuristicConfig {
    pub fn new(strategy: Strategy, seed: u64, cutoff: Option<u64>) -> Self {
        Self {
            tie_break: strategy.tie_break(),
            value_order: strategy.value_order(),
            seed,
            cutoff,
        }
    }

    pub fn strategy(&self) -> Strategy {
        Strategy::from_parts(self.tie_break, self.value_order)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Sat(PartialLatinSquare),
    Unsat,
    Cutoff,
}

impl Outcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            Outcome::Sat(_) => OutcomeKind::Sat,
            Outcome::Unsat => OutcomeKind::Unsat,
            Outcome::Cutoff => OutcomeKind::Cutoff,
        }
    }
}

/// Outcome without the completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Sat,
    Unsat,
    Cutoff,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeKind::Sat => "sat",
            OutcomeKind::Unsat => "unsat",
            OutcomeKind::Cutoff => "cutoff",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub outcome: Outcome,
    pub backtracks: u64,
    /// Assignments attempted.
    pub nodes: u64,
}

#[derive(Debug, Clone, Copy)]
enum TrailEntry {
    Domain { cell: u16, old: u64 },
    Assign { cell: u16 },
}

/// Mutable search state: current values, forward-checked domains, and the
/// undo trail.
#[derive(Debug, Clone)]
pub struct SearchState {
    order: usize,
    values: Vec<Option<u8>>,
    domains: Vec<u64>,
    row_unassigned: Vec<u32>,
    col_unassigned: Vec<u32>,
    unassigned: usize,
    trail: Vec<TrailEntry>,
    initial_wipeout: bool,
    ties: Vec<u16>,
}

impl SearchState {
    /// Builds the root state. Domains of empty cells exclude every value
    /// already present in their row or column.
    pub fn new(square: &PartialLatinSquare) -> Result<Self> {
        square.ensure_valid()?;
        let n = square.order();
        let full = full_mask(n);
        let mut row_used = vec![0u64; n];
        let mut col_used = vec![0u64; n];
        let mut row_unassigned = vec![n as u32; n];
        let mut col_unassigned = vec![n as u32; n];
        let mut unassigned = n * n;
        for r in 0..n {
            for c in 0..n {
                if let Some(v) = square.get(r, c) {
                    row_used[r] |= 1 << v;
                    col_used[c] |= 1 << v;
                    row_unassigned[r] -= 1;
                    col_unassigned[c] -= 1;
                    unassigned -= 1;
                }
            }
        }
        let mut domains = vec![0u64; n * n];
        let mut initial_wipeout = false;
        for r in 0..n {
            for c in 0..n {
                let idx = r * n + c;
                domains[idx] = match square.get(r, c) {
                    Some(v) => 1 << v,
                    None => {
                        let d = full & !(row_used[r] | col_used[c]);
                        initial_wipeout |= d == 0;
                        d
                    }
                };
            }
        }
        Ok(Self {
            order: n,
            values: square.cells().to_vec(),
            domains,
            row_unassigned,
            col_unassigned,
            unassigned,
            trail: Vec::new(),
            initial_wipeout,
            ties: Vec::with_capacity(n * n),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Remaining domain of a cell as a bitset over values.
    pub fn domain(&self, cell: usize) -> u64 {
        self.domains[cell]
    }

    pub fn value(&self, cell: usize) -> Option<u8> {
        self.values[cell]
    }

    pub fn unassigned_count(&self) -> usize {
        self.unassigned
    }

    /// True when some empty cell had no consistent value at the root.
    pub fn has_initial_wipeout(&self) -> bool {
        self.initial_wipeout
    }

    /// Unassigned cells sharing a row or column with `cell`, excluding itself.
    pub fn degree(&self, cell: usize) -> u32 {
        let (r, c) = (cell / self.order, cell % self.order);
        let own = u32::from(self.values[cell].is_none());
        self.row_unassigned[r] + self.col_unassigned[c] - 2 * own
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn to_square(&self) -> PartialLatinSquare {
        let rows: Vec<Vec<Option<u8>>> = self.values.chunks(self.order).map(<[_]>::to_vec).collect();
        PartialLatinSquare::from_rows(&rows).expect("state values stay in range")
    }

    /// First-Fail with (reverse) Brelaz tie-breaking; remaining ties drawn
    /// uniformly from `rng`. Returns `None` when every cell is assigned.
    pub fn select_variable(&mut self, tie_break: TieBreak, rng: &mut ChaCha8Rng) -> Option<usize> {
        self.ties.clear();
        let mut best: Option<(u32, u32)> = None;
        for cell in 0..self.values.len() {
            if self.values[cell].is_some() {
                continue;
            }
            let size = self.domains[cell].count_ones();
            let degree = self.degree(cell);
            // Smaller key is better.
            let key = match tie_break {
                TieBreak::Brelaz => (size, u32::MAX - degree),
                TieBreak::ReverseBrelaz => (size, degree),
            };
            match best {
                Some(b) if key > b => {}
                Some(b) if key == b => self.ties.push(cell as u16),
                _ => {
                    best = Some(key);
                    self.ties.clear();
                    self.ties.push(cell as u16);
                }
            }
        }
        match self.ties.len() {
            0 => None,
            1 => Some(usize::from(self.ties[0])),
            k => Some(usize::from(self.ties[rng.random_range(0..k)])),
        }
    }

    /// Candidate values of `cell`: ascending, or shuffled with `rng`.
    pub fn order_values(&self, cell: usize, order: ValueOrder, rng: &mut ChaCha8Rng) -> Vec<u8> {
        let mut values = domain_values(self.domains[cell]);
        if order == ValueOrder::Random && values.len() > 1 {
            values.shuffle(rng);
        }
        values
    }

    /// Assigns `value` to the unassigned `cell` and removes it from the
    /// domains of every unassigned peer. Returns `false` on a domain wipeout.
    /// The state stays consistent either way; undo with [`Self::undo_to`].
    pub fn assign(&mut self, cell: usize, value: u8) -> bool {
        debug_assert!(self.values[cell].is_none());
        let n = self.order;
        let (r, c) = (cell / n, cell % n);
        self.trail.push(TrailEntry::Assign { cell: cell as u16 });
        self.values[cell] = Some(value);
        self.row_unassigned[r] -= 1;
        self.col_unassigned[c] -= 1;
        self.unassigned -= 1;

        let bit = 1u64 << value;
        let mut ok = true;
        let peers = (0..n)
            .filter(move |&k| k != c)
            .map(move |k| r * n + k)
            .chain((0..n).filter(move |&k| k != r).map(move |k| k * n + c));
        for peer in peers {
            if self.values[peer].is_some() {
                continue;
            }
            let old = self.domains[peer];
            if old & bit != 0 {
                self.trail.push(TrailEntry::Domain {
                    cell: peer as u16,
                    old,
                });
                let new = old & !bit;
                self.domains[peer] = new;
                ok &= new != 0;
            }
        }
        ok
    }

    /// Undoes every change recorded after `mark`.
    pub fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().expect("trail longer than mark") {
                TrailEntry::Domain { cell, old } => self.domains[usize::from(cell)] = old,
                TrailEntry::Assign { cell } => {
                    let cell = usize::from(cell);
                    let (r, c) = (cell / self.order, cell % self.order);
                    self.values[cell] = None;
                    self.row_unassigned[r] += 1;
                    self.col_unassigned[c] += 1;
                    self.unassigned += 1;
                }
            }
        }
    }
}

/// Values present in a domain bitset, ascending.
pub fn domain_values(mut domain: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(domain.count_ones() as usize);
    while domain != 0 {
        out.push(domain.trailing_zeros() as u8);
        domain &= domain - 1;
    }
    out
}

struct Frame {
    cell: usize,
    values: Vec<u8>,
    next: usize,
    mark: usize,
}

/// Runs one complete search on `square`. Fails only on an invalid square.
pub fn solve(square: &PartialLatinSquare, config: &HeuristicConfig) -> Result<SolveResult> {
    let mut state = SearchState::new(square)?;
    let mut rng = rng_from_seed(config.seed);
    let mut backtracks = 0u64;
    let mut nodes = 0u64;
    if state.has_initial_wipeout() {
        return Ok(SolveResult {
            outcome: Outcome::Unsat,
            backtracks,
            nodes,
        });
    }

    let mut frames: Vec<Frame> = Vec::with_capacity(state.unassigned_count());
    loop {
        let Some(cell) = state.select_variable(config.tie_break, &mut rng) else {
            return Ok(SolveResult {
                outcome: Outcome::Sat(state.to_square()),
                backtracks,
                nodes,
            });
        };
        let values = state.order_values(cell, config.value_order, &mut rng);
        frames.push(Frame {
            cell,
            values,
            next: 0,
            mark: state.mark(),
        });

        loop {
            let top = frames.last_mut().expect("non-empty frame stack");
            state.undo_to(top.mark);
            if top.next < top.values.len() {
                let value = top.values[top.next];
                top.next += 1;
                nodes += 1;
                if state.assign(top.cell, value) {
                    break;
                }
                continue;
            }
            frames.pop();
            if frames.is_empty() {
                return Ok(SolveResult {
                    outcome: Outcome::Unsat,
                    backtracks,
                    nodes,
                });
            }
            backtracks += 1;
            if let Some(limit) = config.cutoff {
                if backtracks > limit {
                    return Ok(SolveResult {
                        outcome: Outcome::Cutoff,
                        backtracks: limit,
                        nodes,
                    });
                }
            }
        }
    }
}
