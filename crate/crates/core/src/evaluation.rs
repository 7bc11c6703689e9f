//! One-vs-rest accuracy accounting and the two evaluation protocols.
//!
//! Non-tree models are trained on 50% of the records and reported on a 25%
//! validation partition (which also drives best-epoch selection); CART is
//! evaluated by pooled k-fold cross-validation over every record.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{split, CleanDataset};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::models::{train, ClassifierSpec, LabeledSet, ModelKind, TrainedModel};
use crate::scoring::{format_percent_2dp, PerformanceCategory};

pub const DEFAULT_FOLDS: usize = 10;

pub(crate) const SPLIT_STREAM: u64 = 0x5_0117;
pub(crate) const FOLD_STREAM: u64 = 0xF_01D5;

/// Confusion counts for one class against the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassReport {
    /// Records that belong to the class.
    pub n_correct: u64,
    /// Of those, how many were predicted as members.
    pub hits_correct: u64,
    /// Records outside the class.
    pub n_wrong: u64,
    /// Of those, how many were predicted as non-members.
    pub hits_wrong: u64,
}

impl ClassReport {
    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::EmptyEvaluationSet);
        }
        let mut r = ClassReport::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            if t {
                r.n_correct += 1;
                r.hits_correct += u64::from(p);
            } else {
                r.n_wrong += 1;
                r.hits_wrong += u64::from(!p);
            }
        }
        Ok(r)
    }

    pub fn total(&self) -> u64 {
        self.n_correct + self.n_wrong
    }

    fn frac(num: u64, den: u64) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn acc_correct(&self) -> f64 {
        Self::frac(self.hits_correct, self.n_correct)
    }

    pub fn acc_wrong(&self) -> f64 {
        Self::frac(self.hits_wrong, self.n_wrong)
    }

    pub fn overall(&self) -> f64 {
        Self::frac(self.hits_correct + self.hits_wrong, self.total())
    }

    pub fn acc_correct_pct(&self) -> String {
        format_percent_2dp(self.hits_correct, self.n_correct)
    }

    pub fn acc_wrong_pct(&self) -> String {
        format_percent_2dp(self.hits_wrong, self.n_wrong)
    }

    pub fn overall_pct(&self) -> String {
        format_percent_2dp(self.hits_correct + self.hits_wrong, self.total())
    }

    /// Adds another report's counts (pooling across folds).
    pub fn absorb(&mut self, other: &ClassReport) {
        self.n_correct += other.n_correct;
        self.hits_correct += other.hits_correct;
        self.n_wrong += other.n_wrong;
        self.hits_wrong += other.hits_wrong;
    }
}

/// Scores `model` on `set`, whose labels mark class membership.
pub fn confusion(model: &TrainedModel, set: &LabeledSet) -> Result<ClassReport> {
    if set.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let predicted = model.predict_all(&set.x)?;
    ClassReport::from_predictions(&predicted, &set.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Holdout,
    KFold { k: usize },
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Holdout => f.write_str("holdout"),
            Protocol::KFold { k } => write!(f, "{k}-fold"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOptions {
    pub seed: u64,
    pub ratios: [f64; 3],
    pub folds: usize,
    pub execution: Execution,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            ratios: crate::dataset::PAPER_RATIOS,
            folds: DEFAULT_FOLDS,
            execution: Execution::default(),
        }
    }
}

impl EvaluationOptions {
    /// CART is cross-validated; every other kind uses the holdout split.
    pub fn protocol_for(&self, kind: ModelKind) -> Protocol {
        match kind {
            ModelKind::Cart => Protocol::KFold { k: self.folds },
            _ => Protocol::Holdout,
        }
    }
}

/// Seed for training one (class, kind) cell; independent of which other
/// cells are in the run.
pub fn cell_seed(seed: u64, class: PerformanceCategory, kind: ModelKind) -> u64 {
    derive_seed(derive_seed(seed, u64::from(class.code())), kind as u64 + 1)
}

/// Shuffled indices dealt round-robin into `k` folds of near-equal size.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || n < k {
        return Err(Error::BadFoldCount { k, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    Ok(folds)
}

fn check_disjoint(train: &[usize], eval: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in train {
        seen[i] = true;
    }
    if eval.iter().any(|&i| seen[i]) {
        return Err(Error::InsufficientData(
            "evaluation partition overlaps training records".into(),
        ));
    }
    Ok(())
}

fn labeled(x: &crate::FeatureMatrix, labels: &[bool], idx: &[usize]) -> LabeledSet {
    LabeledSet::new(x.select_rows(idx), idx.iter().map(|&i| labels[i]).collect())
}

/// Holdout reports for every (class, spec) pair, `[class][spec]`.
pub fn evaluate_holdout(
    specs: &[ClassifierSpec],
    dataset: &CleanDataset,
    classes: &[PerformanceCategory],
    options: &EvaluationOptions,
) -> Result<Vec<Vec<ClassReport>>> {
    let parts = split(
        dataset.len(),
        options.ratios,
        derive_seed(options.seed, SPLIT_STREAM),
    )?;
    check_disjoint(&parts.train, &parts.validation, dataset.len())?;
    let x = dataset.scaled_on(&parts.train)?;

    let cells: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|c| (0..specs.len()).map(move |s| (c, s)))
        .collect();
    let results = options.execution.map(cells, |(c, s)| {
        let class = classes[c];
        let labels = dataset.binary_labels(class);
        let train_set = labeled(&x, &labels, &parts.train);
        let eval_set = labeled(&x, &labels, &parts.validation);
        let seed = cell_seed(options.seed, class, specs[s].kind());
        let model = train(&specs[s], &train_set, Some(&eval_set), seed)?;
        confusion(&model, &eval_set)
    });
    regroup(results, classes.len(), specs.len())
}

/// Pooled k-fold reports for every (class, spec) pair, `[class][spec]`.
pub fn evaluate_kfold(
    specs: &[ClassifierSpec],
    dataset: &CleanDataset,
    classes: &[PerformanceCategory],
    options: &EvaluationOptions,
) -> Result<Vec<Vec<ClassReport>>> {
    let n = dataset.len();
    let folds = kfold_partition(n, options.folds, derive_seed(options.seed, FOLD_STREAM))?;
    let train_idx: Vec<Vec<usize>> = (0..folds.len())
        .map(|f| {
            folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect()
        })
        .collect();
    for (f, fold) in folds.iter().enumerate() {
        check_disjoint(&train_idx[f], fold, n)?;
    }
    let scaled = options
        .execution
        .map((0..folds.len()).collect(), |f| {
            dataset.scaled_on(&train_idx[f])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let k = folds.len();
    let cells: Vec<(usize, usize, usize)> = (0..classes.len())
        .flat_map(|c| (0..specs.len()).flat_map(move |s| (0..k).map(move |f| (c, s, f))))
        .collect();
    let results = options.execution.map(cells, |(c, s, f)| {
        let class = classes[c];
        let labels = dataset.binary_labels(class);
        let train_set = labeled(&scaled[f], &labels, &train_idx[f]);
        let eval_set = labeled(&scaled[f], &labels, &folds[f]);
        let seed = derive_seed(cell_seed(options.seed, class, specs[s].kind()), f as u64);
        let model = train(&specs[s], &train_set, None, seed)?;
        confusion(&model, &eval_set)
    });
    let per_fold: Vec<ClassReport> = results.into_iter().collect::<Result<_>>()?;
    let pooled: Vec<Result<ClassReport>> = per_fold
        .chunks(folds.len())
        .map(|chunk| {
            let mut total = ClassReport::default();
            chunk.iter().for_each(|r| total.absorb(r));
            Ok(total)
        })
        .collect();
    regroup(pooled, classes.len(), specs.len())
}

fn regroup(
    results: Vec<Result<ClassReport>>,
    n_classes: usize,
    n_specs: usize,
) -> Result<Vec<Vec<ClassReport>>> {
    let flat: Vec<ClassReport> = results.into_iter().collect::<Result<_>>()?;
    debug_assert_eq!(flat.len(), n_classes * n_specs);
    Ok(flat.chunks(n_specs.max(1)).map(<[_]>::to_vec).collect())
}

/// Per-class, per-model reports in the layout of the published accuracy tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMatrix {
    pub classes: Vec<PerformanceCategory>,
    /// Full-dataset membership counts per class (the "Case #" column).
    pub class_counts: Vec<(u64, u64)>,
    pub kinds: Vec<ModelKind>,
    pub protocols: Vec<Protocol>,
    /// `cells[class][kind]`.
    pub cells: Vec<Vec<ClassReport>>,
}

/// Evaluates every spec on every retained class, each with its protocol.
pub fn evaluate(
    specs: &[ClassifierSpec],
    dataset: &CleanDataset,
    options: &EvaluationOptions,
) -> Result<EvaluationMatrix> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = dataset.classes();
    let kinds: Vec<ModelKind> = specs.iter().map(ClassifierSpec::kind).collect();
    let protocols: Vec<Protocol> = kinds.iter().map(|&k| options.protocol_for(k)).collect();

    let (kf, ho): (Vec<usize>, Vec<usize>) =
        (0..specs.len()).partition(|&i| protocols[i] != Protocol::Holdout);
    let pick = |idx: &[usize]| idx.iter().map(|&i| specs[i].clone()).collect::<Vec<_>>();
    let ho_cells = if ho.is_empty() {
        vec![Vec::new(); classes.len()]
    } else {
        evaluate_holdout(&pick(&ho), dataset, &classes, options)?
    };
    let kf_cells = if kf.is_empty() {
        vec![Vec::new(); classes.len()]
    } else {
        evaluate_kfold(&pick(&kf), dataset, &classes, options)?
    };

    let cells = (0..classes.len())
        .map(|c| {
            (0..specs.len())
                .map(|i| match ho.iter().position(|&j| j == i) {
                    Some(p) => ho_cells[c][p],
                    None => kf_cells[c][kf.iter().position(|&j| j == i).expect("partitioned")],
                })
                .collect()
        })
        .collect();
    let n = dataset.len() as u64;
    let class_counts = classes
        .iter()
        .map(|c| {
            let k = dataset.class_census[c] as u64;
            (k, n - k)
        })
        .collect();
    Ok(EvaluationMatrix {
        classes,
        class_counts,
        kinds,
        protocols,
        cells,
    })
}

impl EvaluationMatrix {
    fn check_complete(&self) -> Result<()> {
        if self.classes.is_empty() || self.kinds.is_empty() {
            return Err(Error::IncompleteMatrix(
                "no classes or no model kinds".into(),
            ));
        }
        if self.cells.len() != self.classes.len()
            || self.cells.iter().any(|row| row.len() != self.kinds.len())
        {
            return Err(Error::IncompleteMatrix(format!(
                "expected {} x {} cells",
                self.classes.len(),
                self.kinds.len()
            )));
        }
        Ok(())
    }

    pub fn column(&self, kind: ModelKind) -> Option<Vec<ClassReport>> {
        let k = self.kinds.iter().position(|&x| x == kind)?;
        Some(self.cells.iter().map(|row| row[k]).collect())
    }

    /// Mean over classes of the overall accuracy for `kind`.
    pub fn mean_overall(&self, kind: ModelKind) -> Option<f64> {
        let col = self.column(kind)?;
        Some(col.iter().map(ClassReport::overall).sum::<f64>() / col.len() as f64)
    }

    pub fn mean_acc_correct(&self, kind: ModelKind) -> Option<f64> {
        let col = self.column(kind)?;
        Some(col.iter().map(ClassReport::acc_correct).sum::<f64>() / col.len() as f64)
    }

    /// Long-form CSV: one line per (class, model).
    pub fn to_csv(&self) -> Result<String> {
        self.check_complete()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "class",
            "case_correct",
            "case_wrong",
            "model",
            "protocol",
            "n_correct",
            "hits_correct",
            "n_wrong",
            "hits_wrong",
            "acc_correct",
            "acc_wrong",
            "overall",
        ])?;
        for (c, class) in self.classes.iter().enumerate() {
            let (cc, cw) = self.class_counts[c];
            for (k, kind) in self.kinds.iter().enumerate() {
                let r = &self.cells[c][k];
                w.write_record([
                    class.name().to_string(),
                    cc.to_string(),
                    cw.to_string(),
                    kind.name().to_string(),
                    self.protocols[k].to_string(),
                    r.n_correct.to_string(),
                    r.hits_correct.to_string(),
                    r.n_wrong.to_string(),
                    r.hits_wrong.to_string(),
                    r.acc_correct_pct(),
                    r.acc_wrong_pct(),
                    r.overall_pct(),
                ])?;
            }
        }
        finish_csv(w)
    }

    /// Aligned table: Class, Case #, then one percentage column per model,
    /// three lines (Correct, Wrong, Overall) per class.
    pub fn to_text(&self, title: &str) -> Result<String> {
        self.check_complete()?;
        let mut header = vec!["Class".to_string(), String::new(), "Case #".to_string()];
        header.extend(self.kinds.iter().map(|k| format!("{} %", k.name())));
        let mut rows = vec![header];
        for (c, class) in self.classes.iter().enumerate() {
            let (cc, cw) = self.class_counts[c];
            let line = |label: &str, count: String, f: &dyn Fn(&ClassReport) -> String| {
                let mut r = vec![String::new(), label.to_string(), count];
                r.extend(self.cells[c].iter().map(f));
                r
            };
            let mut first = line("Correct", cc.to_string(), &|r| r.acc_correct_pct());
            first[0] = class.name().to_string();
            rows.push(first);
            rows.push(line("Wrong", cw.to_string(), &|r| r.acc_wrong_pct()));
            rows.push(line("Overall", String::new(), &|r| r.overall_pct()));
        }
        let mut out = format!("{title}\n");
        let protocols: Vec<String> = self
            .kinds
            .iter()
            .zip(&self.protocols)
            .map(|(k, p)| format!("{}={p}", k.name()))
            .collect();
        out.push_str(&format!("protocols: {}\n\n", protocols.join(", ")));
        out.push_str(&align(&rows));
        Ok(out)
    }
}

/// Orders kinds by mean overall accuracy (descending), then mean
/// correct-class accuracy, then their order in the matrix.
pub fn rank_models(matrix: &EvaluationMatrix) -> Result<Vec<ModelKind>> {
    matrix.check_complete()?;
    let mut keyed: Vec<(usize, f64, f64)> = matrix
        .kinds
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            (
                i,
                matrix.mean_overall(k).expect("kind present"),
                matrix.mean_acc_correct(k).expect("kind present"),
            )
        })
        .collect();
    keyed.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(b.2.total_cmp(&a.2))
            .then(a.0.cmp(&b.0))
    });
    Ok(keyed.into_iter().map(|(i, _, _)| matrix.kinds[i]).collect())
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Left-aligns the first columns and right-aligns the rest.
pub(crate) fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| {
            rows.iter()
                .filter_map(|r| r.get(j))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if j < 2 {
                    format!("{s:<w$}", w = widths[j])
                } else {
                    format!("{s:>w$}", w = widths[j])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
