//! Binary classification and regression tree grown greedily on Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct values of
//! an attribute among the node's records. Split quality is compared exactly in
//! integer arithmetic: minimizing the weighted child impurity is the same as
//! maximizing `sum_c L_c^2 / n_L + sum_c R_c^2 / n_R`, a rational in the class
//! counts. Equal-quality splits go to the lower attribute index, then the lower
//! threshold. Leaves are numbered 1, 2, ... from left to right.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{LabeledSet, TrainingInfo};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartParams {
    pub max_depth: usize,
    /// Smallest number of records a split may leave on either side.
    pub min_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            max_depth: 32,
            min_leaf: 5,
        }
    }
}

impl CartParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidHyperparameter {
                name: "max_depth",
                reason: "must be at least 1".into(),
            });
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidHyperparameter {
                name: "min_leaf",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        attribute: usize,
        threshold: f64,
        /// Records with `x[attribute] <= threshold`.
        left: usize,
        right: usize,
    },
    Leaf {
        leaf_id: usize,
        /// Training records per class.
        class_counts: Vec<usize>,
        prediction: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartModel {
    arity: usize,
    n_classes: usize,
    /// Arena; the root is node 0.
    pub nodes: Vec<TreeNode>,
    pub n_leaves: usize,
    pub depth: usize,
    pub info: TrainingInfo,
}

/// Gini impurity `1 - sum p_c^2`.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// `sum c^2 / n` as an exact fraction.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(sq_sum: u128, n: usize) -> Self {
        Self {
            num: sq_sum,
            den: n as u128,
        }
    }

    fn plus(self, other: Self) -> Self {
        Self {
            num: self.num * other.den + other.num * self.den,
            den: self.den * other.den,
        }
    }

    fn cmp(self, other: Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

fn sq_sum(counts: &[usize]) -> u128 {
    counts.iter().map(|&c| (c as u128) * (c as u128)).sum()
}

/// A chosen split of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub attribute: usize,
    pub threshold: f64,
    pub n_left: usize,
    /// Parent impurity minus the size-weighted child impurity.
    pub impurity_decrease: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Best Gini split of the records at `indices`, or `None` when no split with
/// positive impurity decrease leaves `min_leaf` records on both sides.
pub fn best_split(
    x: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    indices: &[usize],
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = indices.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let mut parent = vec![0usize; n_classes];
    for &i in indices {
        parent[labels[i]] += 1;
    }
    let parent_purity = Purity::of(sq_sum(&parent), n);

    let mut best: Option<(Purity, usize, usize, f64)> = None; // (purity, attr, n_left, threshold)
    let mut sorted = indices.to_vec();
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for attr in 0..x.cols() {
        sorted.sort_by(|&a, &b| x.get(a, attr).total_cmp(&x.get(b, attr)));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&parent);
        for k in 0..n - 1 {
            let i = sorted[k];
            left[labels[i]] += 1;
            right[labels[i]] -= 1;
            let (lo, hi) = (x.get(i, attr), x.get(sorted[k + 1], attr));
            let n_left = k + 1;
            if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let purity =
                Purity::of(sq_sum(&left), n_left).plus(Purity::of(sq_sum(&right), n - n_left));
            // Strictly better only: ties keep the earlier attribute / lower threshold.
            let better = match &best {
                None => true,
                Some((b, ..)) => purity.cmp(*b) == Ordering::Greater,
            };
            if better {
                best = Some((purity, attr, n_left, midpoint(lo, hi)));
            }
        }
    }
    let (purity, attribute, n_left, threshold) = best?;
    if purity.cmp(parent_purity) != Ordering::Greater {
        return None;
    }
    let mut l = vec![0usize; n_classes];
    for &i in indices {
        if x.get(i, attribute) <= threshold {
            l[labels[i]] += 1;
        }
    }
    let r: Vec<usize> = parent.iter().zip(&l).map(|(p, c)| p - c).collect();
    let nf = n as f64;
    let decrease =
        gini(&parent) - (n_left as f64 / nf) * gini(&l) - ((n - n_left) as f64 / nf) * gini(&r);
    Some(SplitChoice {
        attribute,
        threshold,
        n_left,
        impurity_decrease: decrease,
    })
}

fn majority(counts: &[usize]) -> usize {
    // first maximum: ties go to the lower class index
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    labels: &'a [usize],
    n_classes: usize,
    params: &'a CartParams,
    nodes: Vec<TreeNode>,
    next_leaf: usize,
    depth: usize,
}

impl Builder<'_> {
    fn leaf(&mut self, counts: Vec<usize>) -> usize {
        self.next_leaf += 1;
        self.nodes.push(TreeNode::Leaf {
            leaf_id: self.next_leaf,
            prediction: majority(&counts),
            class_counts: counts,
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let mut counts = vec![0usize; self.n_classes];
        for &i in &indices {
            counts[self.labels[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth {
            return self.leaf(counts);
        }
        let Some(choice) = best_split(
            self.x,
            self.labels,
            self.n_classes,
            &indices,
            self.params.min_leaf,
        ) else {
            return self.leaf(counts);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.x.get(i, choice.attribute) <= choice.threshold);
        let me = self.nodes.len();
        self.nodes.push(TreeNode::Split {
            attribute: choice.attribute,
            threshold: choice.threshold,
            left: usize::MAX,
            right: usize::MAX,
        });
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        if let TreeNode::Split {
            left: lp,
            right: rp,
            ..
        } = &mut self.nodes[me]
        {
            *lp = left;
            *rp = right;
        }
        me
    }
}

/// Grows a tree over integer class labels `0..n_classes`.
pub fn grow_tree(
    x: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    params: &CartParams,
) -> Result<CartModel> {
    params.validate()?;
    if x.is_empty() {
        return Err(Error::InsufficientData("at least 1 record".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InsufficientData(format!(
            "labels below {n_classes}, found {bad}"
        )));
    }
    let mut b = Builder {
        x,
        labels,
        n_classes,
        params,
        nodes: Vec::new(),
        next_leaf: 0,
        depth: 0,
    };
    b.grow((0..x.rows()).collect(), 0);
    let mut model = CartModel {
        arity: x.cols(),
        n_classes,
        n_leaves: b.next_leaf,
        depth: b.depth,
        nodes: b.nodes,
        info: TrainingInfo::default(),
    };
    let errors = (0..x.rows())
        .filter(|&i| model.predict_class(x.row(i)) != labels[i])
        .count();
    model.info = TrainingInfo {
        iterations: model.nodes.len(),
        final_training_error: errors as f64 / x.rows() as f64,
        ..Default::default()
    };
    Ok(model)
}

/// One-vs-rest tree: class 1 = target.
pub fn train_cart(train: &LabeledSet, params: &CartParams) -> Result<CartModel> {
    let labels: Vec<usize> = train.y.iter().map(|&b| usize::from(b)).collect();
    grow_tree(&train.x, &labels, 2, params)
}

impl CartModel {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn leaf_of(&self, x: &[f64]) -> &TreeNode {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*attribute] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                leaf => return leaf,
            }
        }
    }

    pub fn leaf_id_of(&self, x: &[f64]) -> usize {
        match self.leaf_of(x) {
            TreeNode::Leaf { leaf_id, .. } => *leaf_id,
            TreeNode::Split { .. } => unreachable!("traversal ends at a leaf"),
        }
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        match self.leaf_of(x) {
            TreeNode::Leaf { prediction, .. } => *prediction,
            TreeNode::Split { .. } => unreachable!("traversal ends at a leaf"),
        }
    }

    /// Share of the target class (class 1) among the leaf's training records.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self.leaf_of(x) {
            TreeNode::Leaf { class_counts, .. } => {
                let n: usize = class_counts.iter().sum();
                class_counts
                    .get(1)
                    .map_or(0.0, |&c| c as f64 / n.max(1) as f64)
            }
            TreeNode::Split { .. } => unreachable!("traversal ends at a leaf"),
        }
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_class(x) == 1
    }

    /// Leaf ids in left-to-right order.
    pub fn leaf_ids_in_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_leaves);
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            match &self.nodes[n] {
                TreeNode::Split { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
                TreeNode::Leaf { leaf_id, .. } => out.push(*leaf_id),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gini_formula() {
        assert_eq!(gini(&[5, 5]), 0.5);
        assert_eq!(gini(&[7, 0]), 0.0);
        assert!((gini(&[1, 2, 1]) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn pure_input_is_single_leaf() {
        let data = LabeledSet::from_rows(&[[0.1], [0.5], [0.9]], vec![true; 3]);
        let m = train_cart(&data, &CartParams::default()).unwrap();
        assert_eq!(m.n_leaves, 1);
        assert_eq!(m.depth, 0);
        assert_eq!(m.leaf_id_of(&[0.3]), 1);
        assert!(m.predict(&[0.3]));
    }

    #[test]
    fn depth_one_numbering() {
        let data = LabeledSet::from_rows(
            &[[0.1], [0.2], [0.8], [0.9]],
            vec![false, false, true, true],
        );
        let m = train_cart(
            &data,
            &CartParams {
                max_depth: 1,
                min_leaf: 1,
            },
        )
        .unwrap();
        let TreeNode::Split {
            attribute,
            threshold,
            ..
        } = m.nodes[0]
        else {
            panic!()
        };
        assert_eq!(attribute, 0);
        assert!((threshold - 0.5).abs() < 1e-12);
        assert_eq!(m.leaf_id_of(&[0.5]), 1);
        assert_eq!(m.leaf_id_of(&[0.50001]), 2);
    }

    #[test]
    fn tie_breaks_on_lower_attribute() {
        // Both attributes separate the classes perfectly.
        let data = LabeledSet::from_rows(
            &[[0.1, 0.1], [0.2, 0.2], [0.8, 0.8], [0.9, 0.9]],
            vec![false, false, true, true],
        );
        let labels: Vec<usize> = data.y.iter().map(|&b| usize::from(b)).collect();
        let s = best_split(&data.x, &labels, 2, &[0, 1, 2, 3], 1).unwrap();
        assert_eq!(s.attribute, 0);
        assert!((s.impurity_decrease - 0.5).abs() < 1e-12);
    }

    #[test]
    fn leaves_are_consecutive_and_cover_training_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<[f64; 3]> = (0..300)
            .map(|_| std::array::from_fn(|_| rng.random()))
            .collect();
        let y: Vec<bool> = rows
            .iter()
            .map(|r| (r[0] > 0.5) ^ (r[1] > 0.3) ^ rng.random_bool(0.1))
            .collect();
        let params = CartParams {
            max_depth: 32,
            min_leaf: 3,
        };
        let m = train_cart(&LabeledSet::from_rows(&rows, y), &params).unwrap();
        assert!(m.n_leaves > 2);
        assert_eq!(m.leaf_ids_in_order(), (1..=m.n_leaves).collect::<Vec<_>>());
        let mut hits = vec![0usize; m.n_leaves + 1];
        for r in &rows {
            hits[m.leaf_id_of(r)] += 1;
        }
        assert!(hits[1..].iter().all(|&h| h >= params.min_leaf), "{hits:?}");
        assert_eq!(hits.iter().sum::<usize>(), rows.len());
    }

    #[test]
    fn max_depth_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<[f64; 2]> = (0..200).map(|_| [rng.random(), rng.random()]).collect();
        let y: Vec<bool> = (0..200).map(|_| rng.random_bool(0.5)).collect();
        let m = train_cart(
            &LabeledSet::from_rows(&rows, y),
            &CartParams {
                max_depth: 3,
                min_leaf: 1,
            },
        )
        .unwrap();
        assert!(m.depth <= 3);
        assert!(m.n_leaves <= 8);
    }

    #[test]
    fn multiclass_tree() {
        let rows = [[0.1], [0.2], [0.5], [0.6], [0.9], [0.95]];
        let labels = [0, 0, 1, 1, 2, 2];
        let m = grow_tree(
            &FeatureMatrix::from_rows(&rows),
            &labels,
            3,
            &CartParams {
                max_depth: 4,
                min_leaf: 1,
            },
        )
        .unwrap();
        for (r, l) in rows.iter().zip(labels) {
            assert_eq!(m.predict_class(r), l);
        }
    }

    #[test]
    fn bad_params() {
        let data = LabeledSet::from_rows(&[[0.1]], vec![true]);
        assert!(train_cart(
            &data,
            &CartParams {
                max_depth: 0,
                min_leaf: 1
            }
        )
        .is_err());
        assert!(train_cart(
            &data,
            &CartParams {
                max_depth: 1,
                min_leaf: 0
            }
        )
        .is_err());
    }
}
