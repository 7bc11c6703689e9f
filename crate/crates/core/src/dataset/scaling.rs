//! Min-max scaling into `[0, 1]`.
//!
//! After-call work, adherence and aux are scaled per product: the same raw
//! value can be short for one product and long for another. Agent, product and
//! attendance use global ranges (agent and product ids are nominal but are
//! scaled as ordinals). Dates map to months since the earliest observed month
//! over the observed span.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvaluationRecord, FeatureVector, Month};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        values.into_iter().fold(None, |acc, v| {
            Some(match acc {
                None => Range { min: v, max: v },
                Some(r) => Range {
                    min: r.min.min(v),
                    max: r.max.max(v),
                },
            })
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    /// Degenerate ranges map everything to 0.5; out-of-range values clamp.
    pub fn scale(&self, value: f64) -> f64 {
        if self.is_degenerate() {
            return 0.5;
        }
        let v = (value - self.min) / (self.max - self.min);
        if !(0.0..=1.0).contains(&v) {
            log::trace!("clamping {value} outside [{}, {}]", self.min, self.max);
        }
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductRanges {
    pub acw: Range,
    pub adherence: Range,
    pub aux: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub per_product: BTreeMap<u32, ProductRanges>,
    /// Fallback for products unseen at fit time.
    pub global_time: ProductRanges,
    pub agent: Range,
    pub product: Range,
    pub attendance: Range,
    pub date_origin: Month,
    /// Months between the earliest and latest observed month.
    pub date_span: u32,
}

fn time_ranges<'a>(records: impl Iterator<Item = &'a EvaluationRecord> + Clone) -> ProductRanges {
    let unit = Range { min: 0.0, max: 0.0 };
    ProductRanges {
        acw: Range::of(
            records
                .clone()
                .filter_map(|r| r.acw_seconds.map(|v| v as f64)),
        )
        .unwrap_or(unit),
        adherence: Range::of(records.clone().filter_map(|r| r.adherence)).unwrap_or(unit),
        aux: Range::of(records.filter_map(|r| r.aux)).unwrap_or(unit),
    }
}

pub fn fit_scaling(records: &[EvaluationRecord]) -> Result<ScalingParams> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut by_product: BTreeMap<u32, Vec<&EvaluationRecord>> = BTreeMap::new();
    for r in records {
        by_product.entry(r.product_id).or_default().push(r);
    }
    let per_product: BTreeMap<u32, ProductRanges> = by_product
        .into_iter()
        .map(|(p, rs)| (p, time_ranges(rs.into_iter())))
        .collect();
    for (p, ranges) in &per_product {
        if ranges.acw.is_degenerate() {
            log::debug!("product {p}: degenerate acw range {:?}", ranges.acw);
        }
    }

    let months = records.iter().map(|r| r.date.ordinal());
    let first = months.clone().min().expect("non-empty");
    let last = months.max().expect("non-empty");

    let unit = Range { min: 0.0, max: 0.0 };
    Ok(ScalingParams {
        per_product,
        global_time: time_ranges(records.iter()),
        agent: Range::of(records.iter().map(|r| f64::from(r.agent_id))).unwrap_or(unit),
        product: Range::of(records.iter().map(|r| f64::from(r.product_id))).unwrap_or(unit),
        attendance: Range::of(
            records
                .iter()
                .filter_map(|r| r.attendance.map(|v| v as f64)),
        )
        .unwrap_or(unit),
        date_origin: Month::from_ordinal(first),
        date_span: (last - first) as u32,
    })
}

/// Maps a record to the 8-component feature vector.
///
/// Missing values (which cleaning removes) land on the midpoint 0.5.
pub fn apply_scaling(record: &EvaluationRecord, params: &ScalingParams) -> FeatureVector {
    let time = match params.per_product.get(&record.product_id) {
        Some(r) => r,
        None => {
            log::warn!(
                "product {} unseen when fitting scaling; using global ranges",
                record.product_id
            );
            &params.global_time
        }
    };
    let opt = |v: Option<f64>, range: &Range| v.map_or(0.5, |v| range.scale(v));
    let date = if params.date_span == 0 {
        0.5
    } else {
        ((record.date.ordinal() - params.date_origin.ordinal()) as f64
            / f64::from(params.date_span))
        .clamp(0.0, 1.0)
    };
    [
        params.agent.scale(f64::from(record.agent_id)),
        date,
        record.training.map_or(0.5, |t| if t { 1.0 } else { 0.0 }),
        params.product.scale(f64::from(record.product_id)),
        opt(record.acw_seconds.map(|v| v as f64), &time.acw),
        opt(record.adherence, &time.adherence),
        opt(record.aux, &time.aux),
        opt(record.attendance.map(|v| v as f64), &params.attendance),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Attribute, QualityValue};
    use proptest::prelude::*;

    fn rec(agent: u32, month: u8, product: u32, acw: i64) -> EvaluationRecord {
        EvaluationRecord {
            agent_id: agent,
            date: Month::new(2001, month).unwrap(),
            training: Some(agent.is_multiple_of(2)),
            product_id: product,
            customer_service: Some(QualityValue::Score(3.0)),
            business_needs: Some(QualityValue::Score(3.0)),
            acw_seconds: Some(acw),
            adherence: Some(0.9),
            attendance: Some(i64::from(agent % 4)),
            aux: Some(0.05),
        }
    }

    #[test]
    fn single_product_range() {
        let p = fit_scaling(&[rec(1, 1, 7, 100), rec(2, 2, 7, 200)]).unwrap();
        assert_eq!(
            p.per_product[&7].acw,
            Range {
                min: 100.0,
                max: 200.0
            }
        );
        assert_eq!(
            apply_scaling(&rec(3, 1, 7, 150), &p)[Attribute::Acw.index()],
            0.5
        );
    }

    #[test]
    fn products_never_pooled() {
        let recs = [
            rec(1, 1, 1, 100),
            rec(2, 1, 1, 200),
            rec(3, 1, 2, 150),
            rec(4, 1, 2, 400),
        ];
        let p = fit_scaling(&recs).unwrap();
        assert_eq!(
            p.per_product[&1].acw,
            Range {
                min: 100.0,
                max: 200.0
            }
        );
        assert_eq!(
            p.per_product[&2].acw,
            Range {
                min: 150.0,
                max: 400.0
            }
        );
        let acw = Attribute::Acw.index();
        assert_eq!(apply_scaling(&rec(9, 1, 1, 150), &p)[acw], 0.5);
        assert_eq!(apply_scaling(&rec(9, 1, 2, 150), &p)[acw], 0.0);
    }

    #[test]
    fn degenerate_range_maps_to_half() {
        let p = fit_scaling(&[rec(1, 1, 7, 180), rec(2, 1, 7, 180)]).unwrap();
        assert!(p.per_product[&7].acw.is_degenerate());
        assert_eq!(
            apply_scaling(&rec(1, 1, 7, 180), &p)[Attribute::Acw.index()],
            0.5
        );
        // single month: degenerate date span
        assert_eq!(
            apply_scaling(&rec(1, 1, 7, 180), &p)[Attribute::Date.index()],
            0.5
        );
    }

    #[test]
    fn date_endpoints_and_clamping() {
        let p = fit_scaling(&[rec(1, 3, 7, 100), rec(2, 9, 7, 200)]).unwrap();
        let d = Attribute::Date.index();
        assert_eq!(apply_scaling(&rec(1, 3, 7, 100), &p)[d], 0.0);
        assert_eq!(apply_scaling(&rec(1, 9, 7, 100), &p)[d], 1.0);
        assert_eq!(apply_scaling(&rec(1, 12, 7, 100), &p)[d], 1.0);
        assert_eq!(
            apply_scaling(&rec(1, 6, 7, 1000), &p)[Attribute::Acw.index()],
            1.0
        );
    }

    #[test]
    fn unseen_product_uses_global() {
        let p = fit_scaling(&[rec(1, 1, 1, 100), rec(2, 1, 2, 300)]).unwrap();
        assert_eq!(
            apply_scaling(&rec(1, 1, 99, 200), &p)[Attribute::Acw.index()],
            0.5
        );
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(fit_scaling(&[]), Err(Error::EmptyDataset)));
    }

    proptest! {
        #[test]
        fn in_sample_values_span_unit_interval(
            rows in proptest::collection::vec((1u32..50, 1u8..=12, 1u32..4, 0i64..600), 2..60)
        ) {
            let recs: Vec<_> = rows.iter().map(|&(a, m, p, acw)| rec(a, m, p, acw)).collect();
            let params = fit_scaling(&recs).unwrap();
            let feats: Vec<_> = recs.iter().map(|r| apply_scaling(r, &params)).collect();
            for f in &feats {
                prop_assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            // per-product extremes hit 0 and 1
            for (prod, ranges) in &params.per_product {
                if ranges.acw.is_degenerate() { continue; }
                let col: Vec<f64> = recs.iter().zip(&feats)
                    .filter(|(r, _)| r.product_id == *prod)
                    .map(|(_, f)| f[Attribute::Acw.index()]).collect();
                prop_assert!(col.contains(&0.0) && col.contains(&1.0));
            }
        }

        #[test]
        fn other_products_do_not_affect_scaling(
            base in proptest::collection::vec(0i64..600, 2..20),
            other in proptest::collection::vec(0i64..600, 1..20),
        ) {
            let mine: Vec<_> = base.iter().map(|&a| rec(1, 1, 5, a)).collect();
            let mut mixed = mine.clone();
            mixed.extend(other.iter().map(|&a| rec(1, 1, 6, a)));
            let p1 = fit_scaling(&mine).unwrap();
            let p2 = fit_scaling(&mixed).unwrap();
            for r in &mine {
                let (a, b) = (apply_scaling(r, &p1), apply_scaling(r, &p2));
                for attr in [Attribute::Acw, Attribute::Adherence, Attribute::Aux] {
                    prop_assert_eq!(a[attr.index()], b[attr.index()]);
                }
            }
        }
    }
}
