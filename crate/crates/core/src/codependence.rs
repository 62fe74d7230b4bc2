//! Orientation/location co-dependence: contingency tables, per-cell 2x2
//! chi-square tests, Bonferroni screening.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::pose::{Handedness, Location, Orientation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodepError {
    CellOutOfRange { row: usize, col: usize },
    EmptyTable,
}

impl fmt::Display for CodepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodepError::CellOutOfRange { row, col } => {
                write!(f, "cell ({row}, {col}) outside the table")
            }
            CodepError::EmptyTable => f.write_str("contingency table has no observations"),
        }
    }
}

/// Count matrix of co-occurring orientation (rows) and location (columns)
/// categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn zeros(row_labels: Vec<String>, col_labels: Vec<String>) -> Self {
        let counts = alloc::vec![alloc::vec![0; col_labels.len()]; row_labels.len()];
        Self {
            row_labels,
            col_labels,
            counts,
        }
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_total(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

fn orientation_location_zeros() -> ContingencyTable {
    ContingencyTable::zeros(
        Orientation::ALL.iter().map(|o| String::from(o.code())).collect(),
        Location::ALL.iter().map(|l| String::from(l.code())).collect(),
    )
}

/// Counts (orientation, location) co-occurrences over the full 8x7 grid.
pub fn build_contingency(
    pairs: impl IntoIterator<Item = (Orientation, Location)>,
) -> ContingencyTable {
    let mut table = orientation_location_zeros();
    for (o, l) in pairs {
        table.counts[o.index()][l.index()] += 1;
    }
    table
}

/// One table per hand, right first.
pub fn build_contingency_by_hand(
    triples: impl IntoIterator<Item = (Handedness, Orientation, Location)>,
) -> [(Handedness, ContingencyTable); 2] {
    let mut right = orientation_location_zeros();
    let mut left = orientation_location_zeros();
    for (hand, o, l) in triples {
        let table = match hand {
            Handedness::Right => &mut right,
            Handedness::Left => &mut left,
        };
        table.counts[o.index()][l.index()] += 1;
    }
    [(Handedness::Right, right), (Handedness::Left, left)]
}

/// 2x2 collapse of the global table around one cell: the cell itself, the
/// rest of its row, the rest of its column, and everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalTable2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl LocalTable2x2 {
    pub fn grand(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

pub fn local_2x2(table: &ContingencyTable, i: usize, j: usize) -> Result<LocalTable2x2, CodepError> {
    if i >= table.row_labels.len() || j >= table.col_labels.len() {
        return Err(CodepError::CellOutOfRange { row: i, col: j });
    }
    if table.grand_total() == 0 {
        return Err(CodepError::EmptyTable);
    }
    let a = table.counts[i][j];
    let b = table.row_total(i) - a;
    let c = table.col_total(j) - a;
    let d = table.grand_total() - a - b - c;
    Ok(LocalTable2x2 { a, b, c, d })
}

/// Pearson chi-square test of independence on a 2x2 table, no continuity
/// correction. Returns `None` when any marginal is zero (untestable).
///
/// With one degree of freedom the p-value has the closed form
/// `p = erfc(sqrt(x / 2))`.
pub fn chi_square_2x2(t: &LocalTable2x2) -> Option<(f64, f64)> {
    let (a, b, c, d) = (t.a as f64, t.b as f64, t.c as f64, t.d as f64);
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let col2 = b + d;
    if row1 == 0.0 || row2 == 0.0 || col1 == 0.0 || col2 == 0.0 {
        return None;
    }
    let n = row1 + row2;
    let diff = a * d - b * c;
    let statistic = n * diff * diff / (row1 * row2 * col1 * col2);
    let p = libm::erfc(libm::sqrt(statistic / 2.0));
    Some((statistic, p))
}

/// One testable cell of a significance report.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTest {
    pub row: usize,
    pub col: usize,
    pub count: u64,
    pub statistic: f64,
    pub p: f64,
    pub significant: bool,
}

/// Per-cell chi-square results under a Bonferroni-adjusted threshold.
/// Untestable cells (a zero marginal) are excluded and do not count
/// toward `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceReport {
    pub alpha: f64,
    /// Number of tests actually performed.
    pub m: usize,
    /// `alpha / m`; equals `alpha` when nothing was testable.
    pub threshold: f64,
    pub cells: Vec<CellTest>,
}

/// Runs the chi-square test for every testable cell of the table and flags
/// cells with `p < alpha / m`.
pub fn bonferroni_screen(table: &ContingencyTable, alpha: f64) -> SignificanceReport {
    let mut tested: Vec<(usize, usize, u64, f64, f64)> = Vec::new();
    for i in 0..table.row_labels.len() {
        for j in 0..table.col_labels.len() {
            let local = match local_2x2(table, i, j) {
                Ok(local) => local,
                Err(_) => continue,
            };
            if let Some((statistic, p)) = chi_square_2x2(&local) {
                tested.push((i, j, local.a, statistic, p));
            }
        }
    }
    let m = tested.len();
    let threshold = if m == 0 { alpha } else { alpha / m as f64 };
    let cells = tested
        .into_iter()
        .map(|(row, col, count, statistic, p)| CellTest {
            row,
            col,
            count,
            statistic,
            p,
            significant: p < threshold,
        })
        .collect();
    SignificanceReport {
        alpha,
        m,
        threshold,
        cells,
    }
}
