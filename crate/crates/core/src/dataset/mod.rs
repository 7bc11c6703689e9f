//! Monthly agent records: schema, CSV I/O, cleaning, scaling and splitting.

mod clean;
mod csv_io;
mod scaling;
mod split;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use clean::{
    clean, rejection_log_csv, CleanOptions, CleanOutcome, RejectReason, Rejection,
    DEFAULT_MIN_CLASS_SIZE,
};
pub use csv_io::{load_csv, read_csv, write_csv, write_csv_path, CSV_HEADER};
pub use scaling::{apply_scaling, fit_scaling, ProductRanges, Range, ScalingParams};
pub use split::{split, split_sizes, Split, PAPER_RATIOS};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::scoring::{EvaluationKind, PerformanceCategory};

/// A calendar month. Rendered as `mm/01/yyyy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    /// 1..=12
    pub month: u8,
}

impl Month {
    pub fn new(year: i32, month: u8) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    /// Months since year 0, for arithmetic.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        Self {
            year: ordinal.div_euclid(12) as i32,
            month: (ordinal.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut parts = s.split('/');
        let (m, d, y) = (parts.next()?, parts.next()?, parts.next()?);
        if parts.next().is_some() || m.len() != 2 || d != "01" || y.len() != 4 {
            return None;
        }
        Self::new(y.parse().ok()?, m.parse().ok()?)
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}/01/{:04}", self.month, self.year)
    }
}

/// A quality column holds either a raw monthly score or an already assigned
/// category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QualityValue {
    Score(f64),
    Category(PerformanceCategory),
}

impl fmt::Display for QualityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QualityValue::Score(s) => write!(f, "{s}"),
            QualityValue::Category(c) => f.write_str(c.name()),
        }
    }
}

/// One agent-month. Optional fields are empty CSV cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub agent_id: u32,
    pub date: Month,
    pub training: Option<bool>,
    pub product_id: u32,
    pub customer_service: Option<QualityValue>,
    pub business_needs: Option<QualityValue>,
    /// Monthly average after-call work, seconds.
    pub acw_seconds: Option<i64>,
    /// Fraction of scheduled time logged in.
    pub adherence: Option<f64>,
    /// Monthly absences.
    pub attendance: Option<i64>,
    /// Fraction of logged-in time on personal activity.
    pub aux: Option<f64>,
}

impl EvaluationRecord {
    pub fn quality(&self, target: EvaluationKind) -> Option<QualityValue> {
        match target {
            EvaluationKind::CustomerService => self.customer_service,
            EvaluationKind::BusinessNeed => self.business_needs,
        }
    }
}

/// The eight model inputs, in feature-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    Agent,
    Date,
    Training,
    Product,
    Acw,
    Adherence,
    Aux,
    Attendance,
}

impl Attribute {
    pub const ALL: [Attribute; 8] = [
        Attribute::Agent,
        Attribute::Date,
        Attribute::Training,
        Attribute::Product,
        Attribute::Acw,
        Attribute::Adherence,
        Attribute::Aux,
        Attribute::Attendance,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Agent => "Agent",
            Attribute::Date => "Date",
            Attribute::Training => "Training",
            Attribute::Product => "Product",
            Attribute::Acw => "ACW",
            Attribute::Adherence => "Adherence",
            Attribute::Aux => "Aux",
            Attribute::Attendance => "Attendance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const N_FEATURES: usize = 8;

/// Eight scaled components in `[0, 1]`, ordered as [`Attribute::ALL`].
pub type FeatureVector = [f64; N_FEATURES];

/// How scaling parameters are fit during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// Fit on the training portion of each split or fold.
    #[default]
    TrainOnly,
    /// Fit once on every retained record.
    AllData,
}

/// Cleaned, labeled records ready for modeling.
///
/// `features`/`scaling` are fit on all retained records; evaluation protocols
/// refit on their own training portion through [`CleanDataset::scaled_on`].
#[derive(Debug, Clone)]
pub struct CleanDataset {
    pub records: Vec<EvaluationRecord>,
    pub labels: Vec<PerformanceCategory>,
    pub target: EvaluationKind,
    pub split_met: bool,
    pub scaling_mode: ScalingMode,
    pub scaling: ScalingParams,
    pub features: FeatureMatrix,
    pub class_census: BTreeMap<PerformanceCategory, usize>,
}

impl CleanDataset {
    pub fn new(
        records: Vec<EvaluationRecord>,
        labels: Vec<PerformanceCategory>,
        target: EvaluationKind,
        split_met: bool,
        scaling_mode: ScalingMode,
    ) -> Result<Self> {
        if records.len() != labels.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} records but {} labels",
                records.len(),
                labels.len()
            )));
        }
        let scaling = fit_scaling(&records)?;
        let features = scale_all(&records, &scaling);
        let mut class_census = BTreeMap::new();
        for l in &labels {
            *class_census.entry(*l).or_insert(0) += 1;
        }
        Ok(Self {
            records,
            labels,
            target,
            split_met,
            scaling_mode,
            scaling,
            features,
            class_census,
        })
    }

    /// Cleans then builds.
    pub fn from_records(
        records: Vec<EvaluationRecord>,
        options: &CleanOptions,
        scaling_mode: ScalingMode,
    ) -> Result<(Self, Vec<Rejection>)> {
        let outcome = clean(records, options);
        let ds = Self::new(
            outcome.records,
            outcome.labels,
            options.target,
            options.split_met,
            scaling_mode,
        )?;
        Ok((ds, outcome.rejections))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Retained classes in ascending order.
    pub fn classes(&self) -> Vec<PerformanceCategory> {
        self.class_census.keys().copied().collect()
    }

    /// One-vs-rest labels: `true` for members of `class`.
    pub fn binary_labels(&self, class: PerformanceCategory) -> Vec<bool> {
        self.labels.iter().map(|l| *l == class).collect()
    }

    /// Feature matrix for every record, scaled with parameters fit on the
    /// records at `fit_indices` (or on everything in [`ScalingMode::AllData`]).
    pub fn scaled_on(&self, fit_indices: &[usize]) -> Result<FeatureMatrix> {
        match self.scaling_mode {
            ScalingMode::AllData => Ok(self.features.clone()),
            ScalingMode::TrainOnly => {
                let subset: Vec<EvaluationRecord> = fit_indices
                    .iter()
                    .map(|&i| self.records[i].clone())
                    .collect();
                let params = fit_scaling(&subset)?;
                Ok(scale_all(&self.records, &params))
            }
        }
    }
}

fn scale_all(records: &[EvaluationRecord], params: &ScalingParams) -> FeatureMatrix {
    let mut m = FeatureMatrix::zeros(records.len(), N_FEATURES);
    for (i, r) in records.iter().enumerate() {
        m.row_mut(i).copy_from_slice(&apply_scaling(r, params));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_format() {
        let m = Month::parse("09/01/2001").unwrap();
        assert_eq!(m, Month::new(2001, 9).unwrap());
        assert_eq!(m.to_string(), "09/01/2001");
        assert_eq!(
            Month::from_ordinal(m.ordinal() + 4).to_string(),
            "01/01/2002"
        );
        assert!(Month::parse("2001-09-01").is_none());
        assert!(Month::parse("09/15/2001").is_none());
        assert!(Month::parse("13/01/2001").is_none());
    }

    #[test]
    fn attribute_order_matches_tables() {
        let names: Vec<_> = Attribute::ALL.iter().map(|a| a.name()).collect();
        assert_eq!(
            names,
            [
                "Agent",
                "Date",
                "Training",
                "Product",
                "ACW",
                "Adherence",
                "Aux",
                "Attendance"
            ]
        );
        for (i, a) in Attribute::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Attribute::parse(a.name()), Some(*a));
        }
    }
}
