//! Evaluation scoring and performance categorization.
//!
//! Every call is graded by an evaluator on a list of questions, each scored
//! 0..=5 where 0 means "not applicable". A call's score is the mean of its
//! applicable questions; a month pools all applicable questions of all of its
//! evaluated calls. Scores are kept as exact rationals so that category
//! boundaries never flip because of float rounding.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational score.
pub type Score = Ratio<u64>;

/// Number of questions on a customer-service evaluation form.
pub const CUSTOMER_SERVICE_QUESTIONS: usize = 11;
/// Allowed question count range for business-need forms (product specific).
pub const BUSINESS_NEED_QUESTIONS: std::ops::RangeInclusive<usize> = 8..=16;
/// Calls normally evaluated per agent per month.
pub const CALLS_PER_MONTH: usize = 6;

/// A single question grade. 0 = not applicable, 1 = not met .. 5 = far exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuestionScore(u8);

impl QuestionScore {
    pub fn new(value: i64) -> Result<Self> {
        if (0..=5).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(Error::InvalidQuestionScore(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_applicable(self) -> bool {
        self.0 != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationKind {
    CustomerService,
    BusinessNeed,
}

impl EvaluationKind {
    pub fn name(self) -> &'static str {
        match self {
            EvaluationKind::CustomerService => "customer-service",
            EvaluationKind::BusinessNeed => "business-need",
        }
    }
}

impl fmt::Display for EvaluationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EvaluationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "customer-service" | "cs" => Ok(EvaluationKind::CustomerService),
            "business-need" | "bn" => Ok(EvaluationKind::BusinessNeed),
            other => Err(Error::Config(format!("unknown target `{other}`"))),
        }
    }
}

/// One evaluated call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallEvaluation {
    kind: EvaluationKind,
    scores: Vec<QuestionScore>,
    product_id: u32,
}

impl CallEvaluation {
    /// Validates the question count for the form kind.
    pub fn new(kind: EvaluationKind, scores: Vec<QuestionScore>, product_id: u32) -> Result<Self> {
        let count = scores.len();
        match kind {
            EvaluationKind::CustomerService if count != CUSTOMER_SERVICE_QUESTIONS => {
                return Err(Error::QuestionCount {
                    kind: kind.name(),
                    count,
                    expected: "exactly 11",
                })
            }
            EvaluationKind::BusinessNeed if !BUSINESS_NEED_QUESTIONS.contains(&count) => {
                return Err(Error::QuestionCount {
                    kind: kind.name(),
                    count,
                    expected: "8 to 16",
                })
            }
            _ => {}
        }
        Ok(Self {
            kind,
            scores,
            product_id,
        })
    }

    /// Convenience constructor from raw integers.
    pub fn from_values(kind: EvaluationKind, values: &[i64], product_id: u32) -> Result<Self> {
        let scores = values
            .iter()
            .map(|&v| QuestionScore::new(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, scores, product_id)
    }

    pub fn kind(&self) -> EvaluationKind {
        self.kind
    }

    pub fn product_id(&self) -> u32 {
        self.product_id
    }

    pub fn scores(&self) -> &[QuestionScore] {
        &self.scores
    }

    fn applicable_totals(&self) -> (u64, u64) {
        self.scores
            .iter()
            .filter(|s| s.is_applicable())
            .fold((0, 0), |(sum, n), s| (sum + u64::from(s.value()), n + 1))
    }
}

/// Pooled score: sum of applicable grades over their count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonthlyScore {
    sum: u64,
    applicable_count: u64,
}

impl MonthlyScore {
    fn from_totals(sum: u64, applicable_count: u64) -> Result<Self> {
        if applicable_count == 0 {
            return Err(Error::AllQuestionsNotApplicable);
        }
        Ok(Self {
            sum,
            applicable_count,
        })
    }

    pub fn value(&self) -> Score {
        Ratio::new(self.sum, self.applicable_count)
    }

    pub fn applicable_count(&self) -> u64 {
        self.applicable_count
    }

    /// Sum of the applicable question scores.
    pub fn sum(&self) -> u64 {
        self.sum
    }

    pub fn to_f64(&self) -> f64 {
        self.sum as f64 / self.applicable_count as f64
    }

    /// Half-up rounding to two decimals, e.g. `8/3` displays as `2.67`.
    pub fn display(&self) -> String {
        format_ratio_2dp(self.value())
    }
}

impl fmt::Display for MonthlyScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

/// Score of a single call.
pub fn call_score(evaluation: &CallEvaluation) -> Result<MonthlyScore> {
    let (sum, n) = evaluation.applicable_totals();
    MonthlyScore::from_totals(sum, n)
}

/// Pools all applicable questions of all calls. This is not the mean of the
/// per-call scores.
pub fn monthly_score(calls: &[CallEvaluation]) -> Result<MonthlyScore> {
    let first = calls.first().ok_or(Error::NoCalls)?;
    if calls.iter().any(|c| c.kind != first.kind) {
        return Err(Error::MixedEvaluationKinds);
    }
    if calls.len() != CALLS_PER_MONTH {
        log::warn!(
            "monthly score pooled over {} calls (usually {CALLS_PER_MONTH})",
            calls.len()
        );
    }
    let (sum, n) = calls
        .iter()
        .map(CallEvaluation::applicable_totals)
        .fold((0, 0), |(s, n), (cs, cn)| (s + cs, n + cn));
    MonthlyScore::from_totals(sum, n)
}

/// Performance classes in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    NotMet,
    MetSome,
    Met,
    Exceeded,
    FarExceeded,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::NotMet,
        Category::MetSome,
        Category::Met,
        Category::Exceeded,
        Category::FarExceeded,
    ];
}

/// Halves of the `Met` class, split at 3.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetSub {
    Met1,
    Met2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PerformanceCategory {
    pub label: Category,
    pub met_sub: Option<MetSub>,
}

impl PerformanceCategory {
    pub const fn new(label: Category) -> Self {
        Self {
            label,
            met_sub: None,
        }
    }

    pub const fn met(sub: MetSub) -> Self {
        Self {
            label: Category::Met,
            met_sub: Some(sub),
        }
    }

    /// Human-readable class name as used in reports.
    pub fn name(&self) -> &'static str {
        match (self.label, self.met_sub) {
            (Category::NotMet, _) => "Not Met",
            (Category::MetSome, _) => "Met Some",
            (Category::Met, None) => "Met",
            (Category::Met, Some(MetSub::Met1)) => "Met 1",
            (Category::Met, Some(MetSub::Met2)) => "Met 2",
            (Category::Exceeded, _) => "Exceeded",
            (Category::FarExceeded, _) => "Far Exceeded",
        }
    }

    /// Parses either a report name ("Met Some") or a compact key ("met-some", "met1").
    pub fn parse(s: &str) -> Option<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Some(match key.as_str() {
            "notmet" => Self::new(Category::NotMet),
            "metsome" => Self::new(Category::MetSome),
            "met" => Self::new(Category::Met),
            "met1" => Self::met(MetSub::Met1),
            "met2" => Self::met(MetSub::Met2),
            "exceeded" => Self::new(Category::Exceeded),
            "farexceeded" => Self::new(Category::FarExceeded),
            _ => return None,
        })
    }

    /// Numeric code used in the dataset CSV when a quality column carries a
    /// category instead of a raw score: 1..=5 for the five labels, 31/32 for the
    /// met halves.
    pub fn code(&self) -> u8 {
        match (self.label, self.met_sub) {
            (Category::Met, Some(MetSub::Met1)) => 31,
            (Category::Met, Some(MetSub::Met2)) => 32,
            (label, _) => label as u8 + 1,
        }
    }
}

impl fmt::Display for PerformanceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn r(num: u64, den: u64) -> Score {
    Ratio::new(num, den)
}

/// Shared boundary logic; `below(b)` answers `score < b`.
fn categorize_by(below: impl Fn(Score) -> bool, split_met: bool) -> PerformanceCategory {
    let label = if below(r(2, 1)) {
        Category::NotMet
    } else if below(r(3, 1)) {
        Category::MetSome
    } else if below(r(4, 1)) {
        Category::Met
    } else if below(r(19, 4)) {
        Category::Exceeded
    } else {
        Category::FarExceeded
    };
    let met_sub = (split_met && label == Category::Met).then(|| {
        if below(r(7, 2)) {
            MetSub::Met1
        } else {
            MetSub::Met2
        }
    });
    PerformanceCategory { label, met_sub }
}

/// Categorizes an exact score. Lower bounds are inclusive.
pub fn categorize(score: Score, split_met: bool) -> Result<PerformanceCategory> {
    if score < r(1, 1) || score > r(5, 1) {
        return Err(Error::ScoreOutOfRange(ratio_to_f64(score)));
    }
    Ok(categorize_by(|b| score < b, split_met))
}

/// Categorizes a score read from data. All boundaries are dyadic rationals, so
/// the comparisons against `f64` are exact.
pub fn categorize_f64(score: f64, split_met: bool) -> Result<PerformanceCategory> {
    if !(1.0..=5.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    Ok(categorize_by(|b| score < ratio_to_f64(b), split_met))
}

pub(crate) fn ratio_to_f64(r: Score) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Half-up rounding of a non-negative rational to two decimals.
pub fn format_ratio_2dp(value: Score) -> String {
    let (num, den) = (u128::from(*value.numer()), u128::from(*value.denom()));
    let hundredths = (num * 200 + den) / (2 * den);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// `100 * num / den` rounded half-up to two decimals, e.g. `873/1448` -> `60.29`.
pub fn format_percent_2dp(num: u64, den: u64) -> String {
    if den == 0 {
        return "-".to_string();
    }
    format_ratio_2dp(Ratio::new(num * 100, den))
}
