//! Quantized universes and piecewise-linear membership families.

use super::FuzzyError;

/// An odd, zero-centred set of integer levels `-half..=half` together with the
/// real interval it quantizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizedUniverse {
    half: i32,
    span: (f64, f64),
}

impl QuantizedUniverse {
    pub fn new(half: i32, span: (f64, f64)) -> Result<Self, FuzzyError> {
        if half <= 0 {
            return Err(FuzzyError::InvalidFamily(format!(
                "universe half-width must be positive, got {half}"
            )));
        }
        if !(span.0 < span.1) || !span.0.is_finite() || !span.1.is_finite() {
            return Err(FuzzyError::InvalidFamily(format!(
                "universe span {span:?} is not a finite increasing interval"
            )));
        }
        Ok(Self { half, span })
    }

    /// Error and change-of-error inputs: 13 levels over [-0.3, 0.3].
    pub fn input() -> Self {
        Self {
            half: 6,
            span: (-0.3, 0.3),
        }
    }

    /// Period rescaling output: 15 levels over [0.5, 1.5].
    pub fn output() -> Self {
        Self {
            half: 7,
            span: (0.5, 1.5),
        }
    }

    pub fn half_width(&self) -> i32 {
        self.half
    }

    pub fn min_level(&self) -> i32 {
        -self.half
    }

    pub fn max_level(&self) -> i32 {
        self.half
    }

    pub fn level_count(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        -self.half..=self.half
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= f64::from(-self.half) && x <= f64::from(self.half)
    }
}

/// Linguistic value names used by the rule base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NB,
    NM,
    NS,
    ZE,
    PS,
    PM,
    PB,
}

impl Label {
    pub const INPUT: [Label; 5] = [Label::NB, Label::NS, Label::ZE, Label::PS, Label::PB];
    pub const OUTPUT: [Label; 7] = [
        Label::NB,
        Label::NM,
        Label::NS,
        Label::ZE,
        Label::PS,
        Label::PM,
        Label::PB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NB => "NB",
            Label::NM => "NM",
            Label::NS => "NS",
            Label::ZE => "ZE",
            Label::PS => "PS",
            Label::PM => "PM",
            Label::PB => "PB",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = FuzzyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "NB" => Label::NB,
            "NM" => Label::NM,
            "NS" => Label::NS,
            "ZE" => Label::ZE,
            "PS" => Label::PS,
            "PM" => Label::PM,
            "PB" => Label::PB,
            other => return Err(FuzzyError::UnknownLabel(other.to_string())),
        })
    }
}

/// Triangular membership families whose neighbouring labels overlap fully:
/// each label rises linearly from the previous peak to its own and falls to
/// the next one. The first and last labels hold 1 beyond their peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipFamily {
    universe: QuantizedUniverse,
    labels: Vec<Label>,
    peaks: Vec<f64>,
}

impl MembershipFamily {
    pub fn triangular(
        universe: QuantizedUniverse,
        labels: &[Label],
        peaks: &[i32],
    ) -> Result<Self, FuzzyError> {
        if labels.len() != peaks.len() || labels.len() < 2 {
            return Err(FuzzyError::InvalidFamily(format!(
                "{} labels for {} peaks",
                labels.len(),
                peaks.len()
            )));
        }
        if peaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FuzzyError::InvalidFamily(
                "peaks must be strictly increasing".into(),
            ));
        }
        if peaks.iter().any(|&p| !universe.contains(f64::from(p))) {
            return Err(FuzzyError::InvalidFamily(
                "every peak must lie inside the universe".into(),
            ));
        }
        Ok(Self {
            universe,
            labels: labels.to_vec(),
            peaks: peaks.iter().map(|&p| f64::from(p)).collect(),
        })
    }

    /// NB..PB over -6..6 with peaks every third level.
    pub fn default_input() -> Self {
        Self::triangular(
            QuantizedUniverse::input(),
            &Label::INPUT,
            &[-6, -3, 0, 3, 6],
        )
        .expect("static family")
    }

    /// NB..PB over -7..7 with peaks every second level from -6 to 6.
    pub fn default_output() -> Self {
        Self::triangular(
            QuantizedUniverse::output(),
            &Label::OUTPUT,
            &[-6, -4, -2, 0, 2, 4, 6],
        )
        .expect("static family")
    }

    pub fn universe(&self) -> &QuantizedUniverse {
        &self.universe
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn peak_of(&self, label: Label) -> Option<f64> {
        self.index_of(label).map(|i| self.peaks[i])
    }

    pub fn index_of(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Degree of `label_index` at `x`; `x` is not range-checked here.
    pub fn degree(&self, label_index: usize, x: f64) -> f64 {
        let peak = self.peaks[label_index];
        let last = self.peaks.len() - 1;
        if x == peak {
            1.0
        } else if x < peak {
            if label_index == 0 {
                return 1.0;
            }
            let left = self.peaks[label_index - 1];
            ((x - left) / (peak - left)).max(0.0)
        } else {
            if label_index == last {
                return 1.0;
            }
            let right = self.peaks[label_index + 1];
            ((right - x) / (right - peak)).max(0.0)
        }
    }

    /// Membership function of one label sampled on every level of the universe.
    pub fn shape(&self, label_index: usize) -> Vec<f64> {
        self.universe
            .levels()
            .map(|l| self.degree(label_index, f64::from(l)))
            .collect()
    }
}
