//! Mamdani inference over quantized universes.
//!
//! The runtime scheduler never runs inference: it reads a precompiled
//! [`LookupTable`]. Inference exists to build and audit that table offline.
//! The pipeline for a single table cell is
//! [`fuzzify`] → [`infer`] (max-min) → [`defuzzify_centroid`] → rounding.

mod membership;
mod rules;
mod table;

pub use membership::{Label, MembershipFamily, QuantizedUniverse};
pub use rules::RuleBase;
pub use table::{
    compile_lookup_table, compile_scheduler_table, LookupTable, TableDiff, TableOrigin,
    TABLE_LEVELS,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("value {value} outside quantized universe [{min}, {max}]")]
    OutOfRange { value: f64, min: i32, max: i32 },
    #[error("aggregated output set has no positive membership")]
    DegenerateSet,
    #[error("membership vector is all zero or has the wrong length")]
    InvalidMembership,
    #[error("invalid membership family: {0}")]
    InvalidFamily(String),
    #[error("invalid rule base: {0}")]
    InvalidRuleBase(String),
    #[error("unknown linguistic label `{0}`")]
    UnknownLabel(String),
    #[error("look-up table line {line}: {msg}")]
    TableSyntax { line: usize, msg: String },
    #[error("look-up table violates invariant: {0}")]
    TableInvariant(String),
}

/// Per-label degrees of one crisp input, in the family's label order.
pub type Memberships = Vec<f64>;

/// A fuzzy set sampled on every level of a quantized output universe.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSet {
    universe: QuantizedUniverse,
    degrees: Vec<f64>,
}

impl OutputSet {
    pub fn new(universe: QuantizedUniverse, degrees: Vec<f64>) -> Result<Self, FuzzyError> {
        if degrees.len() != universe.level_count()
            || degrees.iter().any(|d| !(0.0..=1.0).contains(d))
        {
            return Err(FuzzyError::InvalidMembership);
        }
        Ok(Self { universe, degrees })
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree_at(&self, level: i32) -> f64 {
        self.degrees[(level - self.universe.min_level()) as usize]
    }

    pub fn universe(&self) -> &QuantizedUniverse {
        &self.universe
    }

    fn levels_with_degrees(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.universe
            .levels()
            .zip(&self.degrees)
            .map(|(l, &d)| (f64::from(l), d))
    }
}

pub fn fuzzify(x: f64, family: &MembershipFamily) -> Result<Memberships, FuzzyError> {
    let universe = family.universe();
    if !universe.contains(x) {
        return Err(FuzzyError::OutOfRange {
            value: x,
            min: universe.min_level(),
            max: universe.max_level(),
        });
    }
    Ok((0..family.labels().len())
        .map(|i| family.degree(i, x))
        .collect())
}

/// Max-min inference: each rule fires at the minimum of its antecedent
/// degrees, clips its consequent at that strength, and the clipped sets are
/// merged by pointwise maximum.
pub fn infer(
    mu_e: &[f64],
    mu_ec: &[f64],
    rules: &RuleBase,
    out_family: &MembershipFamily,
) -> Result<OutputSet, FuzzyError> {
    let valid = |mu: &[f64]| {
        mu.len() == Label::INPUT.len()
            && mu.iter().all(|d| (0.0..=1.0).contains(d))
            && mu.iter().any(|&d| d > 0.0)
    };
    if !valid(mu_e) || !valid(mu_ec) {
        return Err(FuzzyError::InvalidMembership);
    }
    let universe = *out_family.universe();
    let mut agg = vec![0.0; universe.level_count()];
    for (e, ec, label) in rules.rules() {
        let strength = mu_e[e].min(mu_ec[ec]);
        if strength <= 0.0 {
            continue;
        }
        let idx = out_family.index_of(label).ok_or_else(|| {
            FuzzyError::InvalidRuleBase(format!("{} missing from output family", label.as_str()))
        })?;
        for (slot, level) in agg.iter_mut().zip(universe.levels()) {
            let clipped = out_family.degree(idx, f64::from(level)).min(strength);
            if clipped > *slot {
                *slot = clipped;
            }
        }
    }
    Ok(OutputSet {
        universe,
        degrees: agg,
    })
}

/// Centre of gravity over the discrete output levels.
pub fn defuzzify_centroid(agg: &OutputSet) -> Result<f64, FuzzyError> {
    let (num, den) = agg
        .levels_with_degrees()
        .fold((0.0, 0.0), |(n, d), (l, mu)| (n + l * mu, d + mu));
    if den <= 0.0 {
        return Err(FuzzyError::DegenerateSet);
    }
    Ok(num / den)
}

/// Round half away from zero.
pub(crate) fn round_level(x: f64) -> i32 {
    x.round() as i32
}
