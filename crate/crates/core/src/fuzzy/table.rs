use std::fmt::Write as _;

use super::{
    defuzzify_centroid, fuzzify, infer, round_level, FuzzyError, MembershipFamily, RuleBase,
};

/// Input levels per axis (-6..=6).
pub const TABLE_LEVELS: usize = 13;
const HALF: i32 = 6;
const OUT_HALF: i32 = 7;

static GOLDEN_TEXT: &str = include_str!("../../data/lookup_table.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableOrigin {
    Golden,
    Compiled,
}

/// Quantized (e, ec) -> output level map. Row index is `e + 6`, column index
/// is `ec + 6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTable {
    cells: [[i8; TABLE_LEVELS]; TABLE_LEVELS],
    origin: TableOrigin,
}

impl LookupTable {
    /// The shipped table used by the runtime scheduler.
    pub fn golden() -> Self {
        Self::parse(GOLDEN_TEXT, TableOrigin::Golden).expect("shipped table is well-formed")
    }

    /// Parses a 13x13 grid of whitespace-separated integers. Blank lines and
    /// lines starting with `#` are ignored. Rows are e = -6..6 and columns
    /// ec = -6..6.
    pub fn parse(text: &str, origin: TableOrigin) -> Result<Self, FuzzyError> {
        let mut cells = [[0i8; TABLE_LEVELS]; TABLE_LEVELS];
        let mut row = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |msg: String| FuzzyError::TableSyntax {
                line: lineno + 1,
                msg,
            };
            if row == TABLE_LEVELS {
                return Err(syntax(format!("more than {TABLE_LEVELS} rows")));
            }
            let mut col = 0usize;
            for tok in line.split_whitespace() {
                if col == TABLE_LEVELS {
                    return Err(syntax(format!("more than {TABLE_LEVELS} columns")));
                }
                let v: i32 = tok
                    .parse()
                    .map_err(|_| syntax(format!("`{tok}` is not an integer")))?;
                if !(-OUT_HALF..=OUT_HALF).contains(&v) {
                    return Err(syntax(format!("value {v} outside -7..7")));
                }
                cells[row][col] = v as i8;
                col += 1;
            }
            if col != TABLE_LEVELS {
                return Err(syntax(format!(
                    "expected {TABLE_LEVELS} columns, found {col}"
                )));
            }
            row += 1;
        }
        if row != TABLE_LEVELS {
            return Err(FuzzyError::TableSyntax {
                line: text.lines().count(),
                msg: format!("expected {TABLE_LEVELS} rows, found {row}"),
            });
        }
        Ok(Self { cells, origin })
    }

    pub fn from_cells(cells: [[i8; TABLE_LEVELS]; TABLE_LEVELS], origin: TableOrigin) -> Self {
        Self { cells, origin }
    }

    pub fn origin(&self) -> TableOrigin {
        self.origin
    }

    pub fn lookup(&self, e_q: i32, ec_q: i32) -> Result<i32, FuzzyError> {
        for v in [e_q, ec_q] {
            if !(-HALF..=HALF).contains(&v) {
                return Err(FuzzyError::OutOfRange {
                    value: f64::from(v),
                    min: -HALF,
                    max: HALF,
                });
            }
        }
        Ok(i32::from(
            self.cells[(e_q + HALF) as usize][(ec_q + HALF) as usize],
        ))
    }

    pub fn cells(&self) -> &[[i8; TABLE_LEVELS]; TABLE_LEVELS] {
        &self.cells
    }

    /// Non-increasing along every row (growing ec) and every column (growing e).
    pub fn check_monotone(&self) -> Result<(), FuzzyError> {
        for r in 0..TABLE_LEVELS {
            for c in 0..TABLE_LEVELS {
                if c + 1 < TABLE_LEVELS && self.cells[r][c] < self.cells[r][c + 1] {
                    return Err(FuzzyError::TableInvariant(format!(
                        "row e={} increases at ec={}",
                        r as i32 - HALF,
                        c as i32 + 1 - HALF
                    )));
                }
                if r + 1 < TABLE_LEVELS && self.cells[r][c] < self.cells[r + 1][c] {
                    return Err(FuzzyError::TableInvariant(format!(
                        "column ec={} increases at e={}",
                        c as i32 - HALF,
                        r as i32 + 1 - HALF
                    )));
                }
            }
        }
        Ok(())
    }

    /// Renders the grid in the same format [`LookupTable::parse`] reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.cells {
            let line: Vec<String> = row.iter().map(|v| format!("{v:>2}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn diff(&self, reference: &LookupTable) -> TableDiff {
        let mut delta = [[0i8; TABLE_LEVELS]; TABLE_LEVELS];
        for (r, row) in delta.iter_mut().enumerate() {
            for (c, d) in row.iter_mut().enumerate() {
                *d = self.cells[r][c] - reference.cells[r][c];
            }
        }
        TableDiff { delta }
    }
}

/// Cell-wise `candidate - reference`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDiff {
    pub delta: [[i8; TABLE_LEVELS]; TABLE_LEVELS],
}

impl TableDiff {
    pub fn cells_within(&self, tolerance: i8) -> usize {
        self.delta
            .iter()
            .flatten()
            .filter(|d| d.abs() <= tolerance)
            .count()
    }

    pub fn exact_matches(&self) -> usize {
        self.cells_within(0)
    }

    pub fn max_abs(&self) -> i8 {
        self.delta
            .iter()
            .flatten()
            .map(|d| d.abs())
            .max()
            .unwrap_or(0)
    }

    pub fn report(&self, compiled: &LookupTable, golden: &LookupTable) -> String {
        let total = TABLE_LEVELS * TABLE_LEVELS;
        let within = self.cells_within(1);
        let mut out = String::new();
        let _ = writeln!(out, "# compiled - golden, rows e=-6..6, columns ec=-6..6");
        for row in &self.delta {
            let line: Vec<String> = row.iter().map(|v| format!("{v:>2}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "exact_matches = {}/{total}", self.exact_matches());
        let _ = writeln!(
            out,
            "within_one_level = {within}/{total} ({:.1}%)",
            100.0 * within as f64 / total as f64
        );
        let _ = writeln!(out, "max_abs_diff = {}", self.max_abs());
        let _ = writeln!(
            out,
            "compiled_monotone = {}",
            compiled.check_monotone().is_ok()
        );
        let _ = writeln!(out, "golden_monotone = {}", golden.check_monotone().is_ok());
        let _ = writeln!(out);
        let _ = writeln!(out, "# compiled table");
        out.push_str(&compiled.to_text());
        out
    }
}

/// Runs fuzzify, infer and centroid defuzzification for all 169 quantized
/// input pairs, rounding each centroid half away from zero.
pub fn compile_lookup_table(
    rules: &RuleBase,
    in_family: &MembershipFamily,
    out_family: &MembershipFamily,
) -> Result<LookupTable, FuzzyError> {
    let mut cells = [[0i8; TABLE_LEVELS]; TABLE_LEVELS];
    for (r, row) in cells.iter_mut().enumerate() {
        let mu_e = fuzzify(f64::from(r as i32 - HALF), in_family)?;
        for (c, cell) in row.iter_mut().enumerate() {
            let mu_ec = fuzzify(f64::from(c as i32 - HALF), in_family)?;
            let agg = infer(&mu_e, &mu_ec, rules, out_family)?;
            let level = round_level(defuzzify_centroid(&agg)?);
            *cell = level.clamp(-OUT_HALF, OUT_HALF) as i8;
        }
    }
    let table = LookupTable::from_cells(cells, TableOrigin::Compiled);
    table.check_monotone()?;
    Ok(table)
}

/// The scheduler rule base compiled with the default membership functions.
pub fn compile_scheduler_table() -> Result<LookupTable, FuzzyError> {
    compile_lookup_table(
        &RuleBase::scheduler(),
        &MembershipFamily::default_input(),
        &MembershipFamily::default_output(),
    )
}
