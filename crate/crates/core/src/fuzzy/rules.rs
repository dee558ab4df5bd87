use super::membership::Label;
use super::FuzzyError;

/// Complete 5x5 rule matrix: `matrix[e][ec]` is the output label for the
/// pair of input labels, both indexed in NB, NS, ZE, PS, PB order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleBase {
    matrix: [[Label; 5]; 5],
}

impl RuleBase {
    pub fn new(matrix: [[Label; 5]; 5]) -> Result<Self, FuzzyError> {
        if matrix.iter().flatten().any(|l| !Label::OUTPUT.contains(l)) {
            return Err(FuzzyError::InvalidRuleBase(
                "consequent outside the output label set".into(),
            ));
        }
        Ok(Self { matrix })
    }

    /// The utilization-regulation rule base: large overload (negative error)
    /// enlarges periods quickly, underload shrinks them gently.
    pub fn scheduler() -> Self {
        use Label::*;
        Self {
            matrix: [
                [PB, PB, PB, PB, PM],
                [PB, PB, PM, PS, ZE],
                [PM, PS, ZE, ZE, NS],
                [PS, ZE, ZE, NS, NM],
                [ZE, NS, NM, NB, NB],
            ],
        }
    }

    /// Parses five lines of five labels each.
    pub fn parse(text: &str) -> Result<Self, FuzzyError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if rows.len() != 5 {
            return Err(FuzzyError::InvalidRuleBase(format!(
                "expected 5 rule rows, found {}",
                rows.len()
            )));
        }
        let mut matrix = [[Label::ZE; 5]; 5];
        for (r, row) in rows.iter().enumerate() {
            let cells: Vec<&str> = row.split_whitespace().collect();
            if cells.len() != 5 {
                return Err(FuzzyError::InvalidRuleBase(format!(
                    "rule row {} has {} entries",
                    r + 1,
                    cells.len()
                )));
            }
            for (c, cell) in cells.iter().enumerate() {
                matrix[r][c] = cell.parse()?;
            }
        }
        Self::new(matrix)
    }

    pub fn consequent(&self, e: usize, ec: usize) -> Label {
        self.matrix[e][ec]
    }

    pub fn rules(&self) -> impl Iterator<Item = (usize, usize, Label)> + '_ {
        self.matrix
            .iter()
            .enumerate()
            .flat_map(|(e, row)| row.iter().enumerate().map(move |(ec, &l)| (e, ec, l)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn has_twenty_five_rules() {
        assert_eq!(RuleBase::scheduler().rules().count(), 25);
    }

    #[test]
    fn parsed_matrix_matches_builtin() {
        let text =
            "PB PB PB PB PM\nPB PB PM PS ZE\nPM PS ZE ZE NS\nPS ZE ZE NS NM\nZE NS NM NB NB\n";
        assert_eq!(RuleBase::parse(text).unwrap(), RuleBase::scheduler());
    }

    #[test]
    fn overload_rows_enlarge_periods() {
        // e = U_R - U < 0 under overload; NB error with steady ec must map to PB.
        let rb = RuleBase::scheduler();
        assert_eq!(rb.consequent(0, 2), Label::PB);
        assert_eq!(rb.consequent(4, 2), Label::NM);
        assert_eq!(rb.consequent(2, 2), Label::ZE);
    }

    #[test]
    fn rejects_short_rows() {
        assert!(RuleBase::parse("PB PB\nPB\nPB\nPB\nPB").is_err());
        assert!(RuleBase::parse("PB PB PB PB XX\n".repeat(5).as_str()).is_err());
    }
}
