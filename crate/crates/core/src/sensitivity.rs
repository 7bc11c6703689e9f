//! Input importance by removal: retrain without one attribute at a time and
//! count misclassifications on a fixed evaluation partition. More errors
//! means a more important attribute (rank 1).

use serde::{Deserialize, Serialize};

use crate::dataset::{split, Attribute, CleanDataset, N_FEATURES};
use crate::error::{Error, Result};
use crate::evaluation::{
    align, cell_seed, finish_csv, kfold_partition, EvaluationOptions, Protocol, FOLD_STREAM,
    SPLIT_STREAM,
};
use crate::exec::derive_seed;
use crate::models::{train, ClassifierSpec, LabeledSet, ModelKind};
use crate::scoring::PerformanceCategory;
use crate::FeatureMatrix;

/// Name of the hybrid model's leaf-id input in reports.
pub const LEAF_ATTRIBUTE: &str = "Note";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRanking {
    pub class: PerformanceCategory,
    pub kind: ModelKind,
    pub attributes: Vec<String>,
    /// Misclassifications after removing each attribute; `None` when the
    /// retraining failed.
    pub errors: Vec<Option<u64>>,
    /// 1 = most important. Failed attributes rank last.
    pub ranks: Vec<usize>,
    pub failures: Vec<(String, String)>,
}

impl SensitivityRanking {
    pub fn rank_of(&self, attribute: &str) -> Option<usize> {
        let i = self.attributes.iter().position(|a| a == attribute)?;
        Some(self.ranks[i])
    }
}

/// Ranks by descending error, then attribute position.
pub fn ranks_from_errors(errors: &[Option<u64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| match (errors[a], errors[b]) {
        (Some(x), Some(y)) => y.cmp(&x).then(a.cmp(&b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });
    let mut ranks = vec![0; errors.len()];
    for (r, i) in order.into_iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

/// What gets trained when one input is removed.
fn reduced(
    spec: &ClassifierSpec,
    removed: usize,
    n_base: usize,
) -> (ClassifierSpec, Option<usize>) {
    match spec {
        ClassifierSpec::Hybrid(p) if removed == n_base => {
            (ClassifierSpec::Mlp(p.mlp.clone()), None)
        }
        other => (other.clone(), Some(removed)),
    }
}

struct Partition {
    /// (training indices, evaluation indices, scaled features) per round.
    rounds: Vec<(Vec<usize>, Vec<usize>, FeatureMatrix)>,
}

fn partition(
    dataset: &CleanDataset,
    protocol: Protocol,
    options: &EvaluationOptions,
) -> Result<Partition> {
    let rounds = match protocol {
        Protocol::Holdout => {
            let s = split(
                dataset.len(),
                options.ratios,
                derive_seed(options.seed, SPLIT_STREAM),
            )?;
            let x = dataset.scaled_on(&s.train)?;
            vec![(s.train, s.validation, x)]
        }
        Protocol::KFold { k } => {
            let folds = kfold_partition(dataset.len(), k, derive_seed(options.seed, FOLD_STREAM))?;
            let mut rounds = Vec::with_capacity(k);
            for f in 0..folds.len() {
                let train: Vec<usize> = folds
                    .iter()
                    .enumerate()
                    .filter(|(g, _)| *g != f)
                    .flat_map(|(_, v)| v.iter().copied())
                    .collect();
                let x = dataset.scaled_on(&train)?;
                rounds.push((train, folds[f].clone(), x));
            }
            rounds
        }
    };
    Ok(Partition { rounds })
}

fn removal_error(
    spec: &ClassifierSpec,
    removed: usize,
    part: &Partition,
    labels: &[bool],
    seed: u64,
) -> Result<u64> {
    let (spec, column) = reduced(spec, removed, N_FEATURES);
    let mut errors = 0;
    for (round, (train_idx, eval_idx, x)) in part.rounds.iter().enumerate() {
        let x = match column {
            Some(c) => x.without_column(c),
            None => x.clone(),
        };
        let pick = |idx: &[usize]| {
            LabeledSet::new(x.select_rows(idx), idx.iter().map(|&i| labels[i]).collect())
        };
        let (train_set, eval_set) = (pick(train_idx), pick(eval_idx));
        let selection = (part.rounds.len() == 1).then_some(&eval_set);
        let model = train(
            &spec,
            &train_set,
            selection,
            derive_seed(seed, round as u64),
        )?;
        let predicted = model.predict_all(&eval_set.x)?;
        errors += predicted
            .iter()
            .zip(&eval_set.y)
            .filter(|(p, t)| p != t)
            .count() as u64;
    }
    Ok(errors)
}

/// Importance ranking of every input of `spec` for one class.
pub fn rank_inputs(
    spec: &ClassifierSpec,
    dataset: &CleanDataset,
    class: PerformanceCategory,
    options: &EvaluationOptions,
) -> Result<SensitivityRanking> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let kind = spec.kind();
    let part = partition(dataset, options.protocol_for(kind), options)?;
    let labels = dataset.binary_labels(class);
    rank_with(spec, &part, &labels, class, options)
}

fn rank_with(
    spec: &ClassifierSpec,
    part: &Partition,
    labels: &[bool],
    class: PerformanceCategory,
    options: &EvaluationOptions,
) -> Result<SensitivityRanking> {
    spec.validate()?;
    let kind = spec.kind();
    let mut attributes: Vec<String> = Attribute::ALL
        .iter()
        .map(|a| a.name().to_string())
        .collect();
    if kind == ModelKind::Hybrid {
        attributes.push(LEAF_ATTRIBUTE.to_string());
    }
    let base = cell_seed(options.seed, class, kind);
    let outcomes = options.execution.map((0..attributes.len()).collect(), |a| {
        removal_error(spec, a, part, labels, derive_seed(base, 0x100 + a as u64))
    });
    let mut errors = Vec::with_capacity(attributes.len());
    let mut failures = Vec::new();
    for (a, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(e) => errors.push(Some(e)),
            Err(e) => {
                log::warn!("{} {} without {}: {e}", class.name(), kind, attributes[a]);
                failures.push((attributes[a].clone(), e.to_string()));
                errors.push(None);
            }
        }
    }
    Ok(SensitivityRanking {
        class,
        kind,
        ranks: ranks_from_errors(&errors),
        attributes,
        errors,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    /// Class-major, spec order within each class.
    pub rows: Vec<SensitivityRanking>,
}

pub fn sensitivity_grid(
    specs: &[ClassifierSpec],
    dataset: &CleanDataset,
    classes: &[PerformanceCategory],
    options: &EvaluationOptions,
) -> Result<SensitivityGrid> {
    if specs.is_empty() || classes.is_empty() {
        return Err(Error::InvalidConfig(
            "sensitivity needs at least one model and one class".into(),
        ));
    }
    let holdout = partition(dataset, Protocol::Holdout, options)?;
    let kfold = if specs
        .iter()
        .any(|s| options.protocol_for(s.kind()) != Protocol::Holdout)
    {
        Some(partition(
            dataset,
            Protocol::KFold { k: options.folds },
            options,
        )?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(specs.len() * classes.len());
    for &class in classes {
        let labels = dataset.binary_labels(class);
        for spec in specs {
            let part = match options.protocol_for(spec.kind()) {
                Protocol::Holdout => &holdout,
                Protocol::KFold { .. } => kfold.as_ref().expect("built above"),
            };
            rows.push(rank_with(spec, part, &labels, class, options)?);
        }
    }
    Ok(SensitivityGrid { rows })
}

impl SensitivityGrid {
    fn header() -> Vec<String> {
        let mut h = vec!["Class".to_string(), "Algorithm".to_string()];
        h.extend(Attribute::ALL.iter().map(|a| a.name().to_string()));
        h.push(LEAF_ATTRIBUTE.to_string());
        h
    }

    fn rank_cells(row: &SensitivityRanking) -> Vec<String> {
        let mut cells: Vec<String> = row.ranks.iter().map(usize::to_string).collect();
        cells.resize(N_FEATURES + 1, String::new());
        cells
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::header())?;
        for row in &self.rows {
            let mut rec = vec![row.class.name().to_string(), row.kind.name().to_string()];
            rec.extend(Self::rank_cells(row));
            w.write_record(rec)?;
        }
        finish_csv(w)
    }

    /// Misclassification counts behind the ranks, long form.
    pub fn errors_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["class", "algorithm", "attribute", "errors", "rank"])?;
        for row in &self.rows {
            for (i, attr) in row.attributes.iter().enumerate() {
                w.write_record([
                    row.class.name(),
                    row.kind.name(),
                    attr,
                    &row.errors[i].map_or_else(|| "failed".to_string(), |e| e.to_string()),
                    &row.ranks[i].to_string(),
                ])?;
            }
        }
        finish_csv(w)
    }

    pub fn to_text(&self, title: &str) -> String {
        let mut rows = vec![Self::header()];
        let mut last_class = None;
        for row in &self.rows {
            let class = if last_class == Some(row.class) {
                String::new()
            } else {
                row.class.name().to_string()
            };
            last_class = Some(row.class);
            let mut r = vec![class, row.kind.name().to_string()];
            r.extend(Self::rank_cells(row));
            rows.push(r);
        }
        let mut out = format!("{title}\n\n{}", align(&rows));
        let summary = self.mean_ranks();
        if !summary.is_empty() {
            out.push_str("\nMean rank over all rows (extension, not part of the ranking):\n");
            let line: Vec<String> = summary.iter().map(|(a, r)| format!("{a} {r:.2}")).collect();
            out.push_str(&line.join(", "));
            out.push('\n');
        }
        out
    }

    /// Mean rank of each of the eight base attributes across every row.
    pub fn mean_ranks(&self) -> Vec<(String, f64)> {
        if self.rows.is_empty() {
            return Vec::new();
        }
        Attribute::ALL
            .iter()
            .map(|a| {
                let sum: usize = self.rows.iter().filter_map(|r| r.rank_of(a.name())).sum();
                (a.name().to_string(), sum as f64 / self.rows.len() as f64)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranks_descend_with_error_and_break_ties_by_position() {
        let e = [Some(3), Some(9), Some(3), None, Some(0)];
        assert_eq!(ranks_from_errors(&e), vec![2, 1, 3, 5, 4]);
    }

    proptest! {
        #[test]
        fn ranks_are_a_bijection_consistent_with_errors(
            errs in prop::collection::vec(prop::option::weighted(0.9, 0u64..20), 1..12)
        ) {
            let ranks = ranks_from_errors(&errs);
            let mut sorted = ranks.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..=errs.len()).collect::<Vec<_>>());
            for a in 0..errs.len() {
                for b in 0..errs.len() {
                    if let (Some(x), Some(y)) = (errs[a], errs[b]) {
                        if ranks[a] < ranks[b] {
                            prop_assert!(x >= y);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hybrid_leaf_removal_is_the_plain_network() {
        let spec = ClassifierSpec::default_for(ModelKind::Hybrid);
        let (s, col) = reduced(&spec, N_FEATURES, N_FEATURES);
        assert_eq!(s.kind(), ModelKind::MlpBp);
        assert_eq!(col, None);
        let (s, col) = reduced(&spec, 2, N_FEATURES);
        assert_eq!(s.kind(), ModelKind::Hybrid);
        assert_eq!(col, Some(2));
    }
}
