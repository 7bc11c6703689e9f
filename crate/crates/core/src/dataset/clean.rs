use std::collections::BTreeMap;
use std::fmt;

use super::{EvaluationRecord, QualityValue};
use crate::scoring::{categorize_f64, EvaluationKind, PerformanceCategory};

/// Default smallest class kept for training.
pub const DEFAULT_MIN_CLASS_SIZE: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanOptions {
    pub target: EvaluationKind,
    pub min_class_size: usize,
    /// Split `Met` into `Met 1`/`Met 2` at 3.5.
    pub split_met: bool,
}

impl CleanOptions {
    pub fn new(target: EvaluationKind) -> Self {
        Self {
            target,
            min_class_size: DEFAULT_MIN_CLASS_SIZE,
            split_met: target == EvaluationKind::CustomerService,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    MissingValue(&'static str),
    QualityOutOfRange,
    NegativeTimeManagement(&'static str),
    SmallClass(PerformanceCategory),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::MissingValue(c) => write!(f, "MissingValue({c})"),
            RejectReason::QualityOutOfRange => f.write_str("QualityOutOfRange"),
            RejectReason::NegativeTimeManagement(c) => write!(f, "NegativeTimeManagement({c})"),
            RejectReason::SmallClass(c) => write!(f, "SmallClass({})", c.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based position in the input (the CSV data row).
    pub row: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct CleanOutcome {
    pub records: Vec<EvaluationRecord>,
    pub labels: Vec<PerformanceCategory>,
    pub rejections: Vec<Rejection>,
}

fn record_defect(
    r: &EvaluationRecord,
    options: &CleanOptions,
) -> Result<PerformanceCategory, RejectReason> {
    let quality =
        r.quality(options.target)
            .ok_or(RejectReason::MissingValue(match options.target {
                EvaluationKind::CustomerService => "customer_service",
                EvaluationKind::BusinessNeed => "business_needs",
            }))?;
    r.training.ok_or(RejectReason::MissingValue("training"))?;
    let acw = r
        .acw_seconds
        .ok_or(RejectReason::MissingValue("acw_seconds"))?;
    let adherence = r.adherence.ok_or(RejectReason::MissingValue("adherence"))?;
    let attendance = r
        .attendance
        .ok_or(RejectReason::MissingValue("attendance"))?;
    let aux = r.aux.ok_or(RejectReason::MissingValue("aux"))?;

    let category = match quality {
        QualityValue::Score(s) => {
            categorize_f64(s, options.split_met).map_err(|_| RejectReason::QualityOutOfRange)?
        }
        QualityValue::Category(c) => c,
    };
    if acw < 0 {
        return Err(RejectReason::NegativeTimeManagement("acw_seconds"));
    }
    if adherence < 0.0 {
        return Err(RejectReason::NegativeTimeManagement("adherence"));
    }
    if attendance < 0 {
        return Err(RejectReason::NegativeTimeManagement("attendance"));
    }
    if aux < 0.0 {
        return Err(RejectReason::NegativeTimeManagement("aux"));
    }
    Ok(category)
}

/// Removes invalid records, categorizes the target and drops classes smaller
/// than `min_class_size`. Every input record ends up either retained or in the
/// rejection log.
pub fn clean(records: Vec<EvaluationRecord>, options: &CleanOptions) -> CleanOutcome {
    let mut rejections = Vec::new();
    let mut valid = Vec::with_capacity(records.len());
    for (i, r) in records.into_iter().enumerate() {
        match record_defect(&r, options) {
            Ok(label) => valid.push((i + 1, r, label)),
            Err(reason) => rejections.push(Rejection { row: i + 1, reason }),
        }
    }

    let mut census: BTreeMap<PerformanceCategory, usize> = BTreeMap::new();
    for (_, _, label) in &valid {
        *census.entry(*label).or_default() += 1;
    }
    for (class, count) in &census {
        if *count < options.min_class_size {
            log::info!(
                "dropping class {} with {count} records (minimum {})",
                class.name(),
                options.min_class_size
            );
        }
    }

    let mut out = CleanOutcome {
        rejections,
        ..Default::default()
    };
    for (row, r, label) in valid {
        if census[&label] < options.min_class_size {
            out.rejections.push(Rejection {
                row,
                reason: RejectReason::SmallClass(label),
            });
        } else {
            out.records.push(r);
            out.labels.push(label);
        }
    }
    out.rejections.sort_by_key(|r| r.row);
    out
}

/// `row,reason` CSV.
pub fn rejection_log_csv(rejections: &[Rejection]) -> String {
    let mut s = String::from("row,reason\n");
    for r in rejections {
        s.push_str(&format!("{},{}\n", r.row, r.reason));
    }
    s
}
