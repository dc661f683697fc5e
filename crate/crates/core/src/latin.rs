//! Partial Latin squares: construction, validation, random generation and
//! the text/JSON instance formats.
//!
//! Symbols are the integers `0..order`. A cell is either empty (`None`) or
//! holds one symbol.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Largest supported order. Domains are stored as `u64` bitsets.
pub const MAX_ORDER: usize = 64;

/// Schema version written into structured instance files.
pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

/// An `order × order` grid where each cell is empty or holds a symbol in `0..order`.
///
/// Construction checks shape and symbol range only. Row and column uniqueness
/// is reported by [`PartialLatinSquare::validate`]; the parsers and the solver
/// reject squares that fail it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialLatinSquare {
    order: usize,
    cells: Vec<Option<u8>>,
}

/// A single row or column constraint violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Row { row: usize, value: u8 },
    Column { col: usize, value: u8 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Row { row, value } => write!(f, "row {row} repeats value {value}"),
            Violation::Column { col, value } => write!(f, "column {col} repeats value {value}"),
        }
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidOrder(order));
    }
    Ok(())
}

impl PartialLatinSquare {
    pub fn new_empty(order: usize) -> Result<Self> {
        check_order(order)?;
        Ok(Self {
            order,
            cells: vec![None; order * order],
        })
    }

    /// Builds a square from rows. Fails on a non-square grid or a symbol `>= order`.
    pub fn from_rows(rows: &[Vec<Option<u8>>]) -> Result<Self> {
        let order = rows.len();
        check_order(order)?;
        let mut cells = Vec::with_capacity(order * order);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != order {
                return Err(Error::Shape {
                    order,
                    detail: format!("row {r} has {} cells", row.len()),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if let Some(v) = v {
                    if usize::from(v) >= order {
                        return Err(Error::ValueOutOfRange {
                            row: r,
                            col: c,
                            value: v.into(),
                            order,
                        });
                    }
                }
                cells.push(v);
            }
        }
        Ok(Self { order, cells })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<u8> {
        self.cells[row * self.order + col]
    }

    /// Sets or clears a cell. Panics if the position or value is out of range.
    pub fn set(&mut self, row: usize, col: usize, value: Option<u8>) {
        assert!(row < self.order && col < self.order, "cell out of bounds");
        if let Some(v) = value {
            assert!(usize::from(v) < self.order, "value out of range");
        }
        self.cells[row * self.order + col] = value;
    }

    /// Row-major cells.
    pub fn cells(&self) -> &[Option<u8>] {
        &self.cells
    }

    pub fn rows(&self) -> Vec<Vec<Option<u8>>> {
        self.cells.chunks(self.order).map(<[_]>::to_vec).collect()
    }

    pub fn filled_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// True when `other` agrees with every filled cell of `self`.
    pub fn is_extended_by(&self, other: &PartialLatinSquare) -> bool {
        self.order == other.order
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.is_none() || a == b)
    }

    /// Lists every repeated value per row, then per column. Empty iff the
    /// square is a valid partial Latin square.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.order;
        let mut out = Vec::new();
        for r in 0..n {
            let mut seen = 0u64;
            let mut reported = 0u64;
            for c in 0..n {
                if let Some(v) = self.get(r, c) {
                    let bit = 1u64 << v;
                    if seen & bit != 0 && reported & bit == 0 {
                        out.push(Violation::Row { row: r, value: v });
                        reported |= bit;
                    }
                    seen |= bit;
                }
            }
        }
        for c in 0..n {
            let mut seen = 0u64;
            let mut reported = 0u64;
            for r in 0..n {
                if let Some(v) = self.get(r, c) {
                    let bit = 1u64 << v;
                    if seen & bit != 0 && reported & bit == 0 {
                        out.push(Violation::Column { col: c, value: v });
                        reported |= bit;
                    }
                    seen |= bit;
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            return Ok(());
        }
        let text = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidSquare(text))
    }

    /// Renders the text instance format: `order N` then `N` rows of tokens.
    pub fn to_text(&self) -> String {
        let mut s = format!("order {}\n", self.order);
        for row in self.cells.chunks(self.order) {
            let line = row
                .iter()
                .map(|c| match c {
                    Some(v) => v.to_string(),
                    None => ".".to_string(),
                })
                .collect::<Vec<_>>()
                .join(" ");
            s.push_str(&line);
            s.push('\n');
        }
        s
    }

    /// Parses the text instance format. Blank lines are skipped; the grid must
    /// be a valid partial Latin square.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (header_line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `order N` header".into(),
        })?;
        let mut head = header.split_whitespace();
        let order = match (head.next(), head.next(), head.next()) {
            (Some("order"), Some(n), None) => n.parse::<usize>().map_err(|_| Error::Parse {
                line: header_line,
                message: format!("bad order `{n}`"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line: header_line,
                    message: "expected `order N`".into(),
                })
            }
        };
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Parse {
                line: header_line,
                message: Error::InvalidOrder(order).to_string(),
            });
        }

        let mut rows = Vec::with_capacity(order);
        let mut col_seen = vec![0u64; order];
        let mut last_line = header_line;
        for (line_no, line) in lines {
            last_line = line_no;
            if rows.len() == order {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {order} rows, found more"),
                });
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != order {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {order} tokens, found {}", tokens.len()),
                });
            }
            let mut row = Vec::with_capacity(order);
            for tok in tokens {
                if tok == "." {
                    row.push(None);
                    continue;
                }
                let v: usize = tok.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad token `{tok}`"),
                })?;
                if v >= order {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("value {v} out of range for order {order}"),
                    });
                }
                let (r, c, bit) = (rows.len(), row.len(), 1u64 << v);
                let violation = if row.contains(&Some(v as u8)) {
                    Some(Violation::Row { row: r, value: v as u8 })
                } else if col_seen[c] & bit != 0 {
                    Some(Violation::Column { col: c, value: v as u8 })
                } else {
                    None
                };
                if let Some(violation) = violation {
                    return Err(Error::Parse {
                        line: line_no,
                        message: violation.to_string(),
                    });
                }
                col_seen[c] |= bit;
                row.push(Some(v as u8));
            }
            rows.push(row);
        }
        if rows.len() != order {
            return Err(Error::Parse {
                line: last_line + 1,
                message: format!("expected {order} rows, found {}", rows.len()),
            });
        }
        let square = Self::from_rows(&rows)?;
        square.ensure_valid().map_err(|e| Error::Parse {
            line: header_line,
            message: e.to_string(),
        })?;
        Ok(square)
    }
}

impl fmt::Display for PartialLatinSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for PartialLatinSquare {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_text(s)
    }
}

/// Parameters of the random instance generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub order: usize,
    pub fill_fraction: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(order: usize, fill_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            order,
            fill_fraction,
            seed,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        check_order(self.order)?;
        if !(0.0..=1.0).contains(&self.fill_fraction) {
            return Err(Error::InvalidFillFraction(self.fill_fraction));
        }
        Ok(())
    }

    /// `⌈fill_fraction · order²⌉`, with products within 1e-9 of an integer
    /// snapped to it (so 0.43 · 100 is 43, not 44).
    pub fn target_count(&self) -> usize {
        let cells = (self.order * self.order) as f64;
        let exact = self.fill_fraction * cells;
        let rounded = exact.round();
        let target = if (exact - rounded).abs() < 1e-9 {
            rounded
        } else {
            exact.ceil()
        };
        (target as usize).min(self.order * self.order)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Draws a random partial Latin square.
///
/// Repeatedly picks a uniformly random cell from the pool of empty cells, then
/// a uniformly random value consistent with its row and column. A cell with no
/// consistent value leaves the pool. Fails when the pool empties before the
/// target count is reached. Completability is not checked.
pub fn generate(spec: &GeneratorSpec) -> Result<PartialLatinSquare> {
    spec.check()?;
    let n = spec.order;
    let target = spec.target_count();
    let mut rng = rng_from_seed(spec.seed);
    let mut square = PartialLatinSquare::new_empty(n)?;
    let mut row_used = vec![0u64; n];
    let mut col_used = vec![0u64; n];
    let full = full_mask(n);
    let mut pool: Vec<usize> = (0..n * n).collect();
    let mut placed = 0;

    while placed < target {
        if pool.is_empty() {
            return Err(Error::PlacementExhausted { placed, target });
        }
        let j = rng.random_range(0..pool.len());
        let idx = pool[j];
        let (r, c) = (idx / n, idx % n);
        let allowed = full & !(row_used[r] | col_used[c]);
        pool.swap_remove(j);
        if allowed == 0 {
            continue;
        }
        let k = rng.random_range(0..allowed.count_ones());
        let v = nth_set_bit(allowed, k);
        square.cells[idx] = Some(v);
        row_used[r] |= 1 << v;
        col_used[c] |= 1 << v;
        placed += 1;
    }
    Ok(square)
}

#[inline]
pub(crate) fn full_mask(order: usize) -> u64 {
    if order >= 64 {
        u64::MAX
    } else {
        (1u64 << order) - 1
    }
}

/// Index of the `k`-th (0-based) set bit of `mask`.
pub(crate) fn nth_set_bit(mut mask: u64, k: u32) -> u8 {
    for _ in 0..k {
        mask &= mask - 1;
    }
    mask.trailing_zeros() as u8
}

/// Structured (JSON) instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub order: usize,
    pub rows: Vec<Vec<Option<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

impl InstanceFile {
    pub fn new(square: &PartialLatinSquare, generator: Option<GeneratorSpec>) -> Self {
        Self {
            schema_version: INSTANCE_SCHEMA_VERSION,
            order: square.order(),
            rows: square.rows(),
            generator,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.schema_version != INSTANCE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: file.schema_version,
                expected: INSTANCE_SCHEMA_VERSION,
            });
        }
        Ok(file)
    }

    /// Checked conversion to a valid square.
    pub fn square(&self) -> Result<PartialLatinSquare> {
        let square = PartialLatinSquare::from_rows(&self.rows)?;
        if square.order() != self.order {
            return Err(Error::Shape {
                order: self.order,
                detail: format!("{} rows", square.order()),
            });
        }
        square.ensure_valid()?;
        Ok(square)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn new_empty_sizes() {
        assert_eq!(PartialLatinSquare::new_empty(1).unwrap().cells().len(), 1);
        let sq = PartialLatinSquare::new_empty(4).unwrap();
        assert_eq!(sq.cells().len(), 16);
        assert_eq!(sq.filled_count(), 0);
        let sq = PartialLatinSquare::new_empty(20).unwrap();
        assert!(sq.cells().iter().all(Option::is_none));
        assert!(matches!(
            PartialLatinSquare::new_empty(0),
            Err(Error::InvalidOrder(0))
        ));
    }

    #[test]
    fn validate_reports_duplicates() {
        assert!(PartialLatinSquare::new_empty(3).unwrap().validate().is_empty());
        let sq = PartialLatinSquare::from_rows(&[vec![Some(0), Some(0)], vec![None, None]]).unwrap();
        assert_eq!(sq.validate(), vec![Violation::Row { row: 0, value: 0 }]);
        let sq = PartialLatinSquare::from_rows(&[vec![Some(1), None], vec![Some(1), None]]).unwrap();
        assert_eq!(sq.validate(), vec![Violation::Column { col: 0, value: 1 }]);
    }

    #[test]
    fn from_rows_rejects_bad_shape_and_range() {
        assert!(matches!(
            PartialLatinSquare::from_rows(&[vec![None, None], vec![None]]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            PartialLatinSquare::from_rows(&[vec![Some(2), None], vec![None, None]]),
            Err(Error::ValueOutOfRange { value: 2, .. })
        ));
    }

    #[test]
    fn generate_small_cases() {
        let sq = generate(&GeneratorSpec::new(5, 0.0, 7).unwrap()).unwrap();
        assert_eq!(sq, PartialLatinSquare::new_empty(5).unwrap());
        let sq = generate(&GeneratorSpec::new(4, 0.25, 1).unwrap()).unwrap();
        assert_eq!(sq.filled_count(), 4);
        assert!(sq.is_valid());
    }

    #[test]
    fn target_count_uses_ceiling() {
        let t = |n, f| GeneratorSpec::new(n, f, 0).unwrap().target_count();
        assert_eq!(t(10, 0.43), 43);
        assert_eq!(t(10, 0.425), 43);
        assert_eq!(t(3, 0.01), 1);
        assert_eq!(t(3, 1.0), 9);
        assert_eq!(t(20, 0.1), 40);
    }

    #[test]
    fn generator_spec_rejects_bad_fill() {
        assert!(matches!(
            GeneratorSpec::new(4, 1.5, 0),
            Err(Error::InvalidFillFraction(_))
        ));
        assert!(GeneratorSpec::new(4, -0.1, 0).is_err());
    }

    #[test]
    fn full_fill_eventually_exhausts_or_completes() {
        // Order 6 at fill 1.0: random greedy placement almost always gets stuck.
        let mut exhausted = 0;
        for seed in 0..20 {
            match generate(&GeneratorSpec::new(6, 1.0, seed).unwrap()) {
                Ok(sq) => assert!(sq.is_complete() && sq.is_valid()),
                Err(Error::PlacementExhausted { placed, target }) => {
                    assert!(placed < target);
                    exhausted += 1;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(exhausted > 0);
    }

    #[test]
    fn text_format_is_exact() {
        let sq = PartialLatinSquare::new_empty(2).unwrap();
        assert_eq!(sq.to_text(), "order 2\n. .\n. .\n");
        let sq = PartialLatinSquare::from_rows(&[vec![Some(0), None], vec![None, Some(0)]]).unwrap();
        assert_eq!(sq.to_text(), "order 2\n0 .\n. 0\n");
    }

    #[test]
    fn parse_errors() {
        let err = PartialLatinSquare::parse_text("order 2\n0 2\n. .\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = PartialLatinSquare::parse_text("order 2\n0 .\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = PartialLatinSquare::parse_text("order 2\n0 . .\n. .\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = PartialLatinSquare::parse_text("order 2\n0 0\n. .\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = PartialLatinSquare::parse_text("order 3\n\n0 . .\n. 1 .\n0 . .\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        let err = PartialLatinSquare::parse_text("ordr 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = PartialLatinSquare::parse_text("order 2\n. .\n. .\n. .\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn json_rejects_wrong_schema() {
        let sq = PartialLatinSquare::new_empty(3).unwrap();
        let mut file = InstanceFile::new(&sq, None);
        file.schema_version = 99;
        let text = serde_json::to_string(&file).unwrap();
        assert!(matches!(
            InstanceFile::from_json(&text),
            Err(Error::SchemaVersion { found: 99, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn generated_squares_are_valid_and_deterministic(
            order in 2usize..=10,
            fill in 0.0f64..=0.6,
            seed in any::<u64>(),
        ) {
            let spec = GeneratorSpec::new(order, fill, seed).unwrap();
            match generate(&spec) {
                Ok(sq) => {
                    prop_assert!(sq.validate().is_empty());
                    prop_assert_eq!(sq.filled_count(), spec.target_count());
                    prop_assert_eq!(generate(&spec).unwrap(), sq);
                }
                Err(Error::PlacementExhausted { .. }) => {}
                Err(e) => prop_assert!(false, "unexpected error {}", e),
            }
        }

        #[test]
        fn text_and_json_round_trip(
            order in 1usize..=12,
            fill in 0.0f64..=0.7,
            seed in any::<u64>(),
        ) {
            let spec = GeneratorSpec::new(order, fill, seed).unwrap();
            if let Ok(sq) = generate(&spec) {
                prop_assert_eq!(PartialLatinSquare::parse_text(&sq.to_text()).unwrap(), sq.clone());
                let file = InstanceFile::new(&sq, Some(spec));
                let back = InstanceFile::from_json(&file.to_json().unwrap()).unwrap();
                prop_assert_eq!(back.square().unwrap(), sq);
                prop_assert_eq!(back.generator, Some(spec));
            }
        }
    }
}
