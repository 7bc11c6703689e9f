//! Decision tree feeding a perceptron: the tree's leaf id for each record,
//! min-max scaled over `1..=n_leaves`, becomes one extra network input.

use serde::{Deserialize, Serialize};

use super::cart::{train_cart, CartModel, CartParams};
use super::mlp::{train_mlp, MlpModel, MlpParams};
use super::{LabeledSet, TrainingInfo};
use crate::error::Result;
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridParams {
    pub cart: CartParams,
    pub mlp: MlpParams,
}

impl HybridParams {
    pub fn validate(&self) -> Result<()> {
        self.cart.validate()?;
        self.mlp.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub tree: CartModel,
    pub network: MlpModel,
    pub info: TrainingInfo,
}

/// `(leaf_id - 1) / (n_leaves - 1)`, or 0.5 for a single-leaf tree.
pub fn scaled_leaf(leaf_id: usize, n_leaves: usize) -> f64 {
    if n_leaves <= 1 {
        0.5
    } else {
        (leaf_id - 1) as f64 / (n_leaves - 1) as f64
    }
}

fn augment(tree: &CartModel, x: &FeatureMatrix) -> FeatureMatrix {
    let leaf: Vec<f64> = x
        .iter_rows()
        .map(|r| scaled_leaf(tree.leaf_id_of(r), tree.n_leaves))
        .collect();
    x.with_column(&leaf)
}

pub fn train_hybrid(
    train: &LabeledSet,
    selection: Option<&LabeledSet>,
    params: &HybridParams,
    seed: u64,
) -> Result<HybridModel> {
    params.validate()?;
    let tree = train_cart(train, &params.cart)?;
    let aug_train = LabeledSet::new(augment(&tree, &train.x), train.y.clone());
    let aug_sel = selection
        .filter(|s| !s.is_empty())
        .map(|s| LabeledSet::new(augment(&tree, &s.x), s.y.clone()));
    let network = train_mlp(&aug_train, aug_sel.as_ref(), &params.mlp, seed)?;
    let info = network.info.clone();
    Ok(HybridModel {
        tree,
        network,
        info,
    })
}

impl HybridModel {
    pub fn arity(&self) -> usize {
        self.tree.arity()
    }

    fn augmented(&self, x: &[f64]) -> Vec<f64> {
        let mut v = x.to_vec();
        v.push(scaled_leaf(self.tree.leaf_id_of(x), self.tree.n_leaves));
        v
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.network.score(&self.augmented(x))
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.network.predict(&self.augmented(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn leaf_scaling() {
        assert_eq!(scaled_leaf(3, 5), 0.5);
        assert_eq!(scaled_leaf(1, 5), 0.0);
        assert_eq!(scaled_leaf(5, 5), 1.0);
        assert_eq!(scaled_leaf(1, 1), 0.5);
    }

    #[test]
    fn single_leaf_tree_matches_constant_input_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rows: Vec<[f64; 2]> = (0..40).map(|_| [rng.random(), rng.random()]).collect();
        let y: Vec<bool> = rows.iter().map(|r| r[0] > r[1]).collect();
        let data = LabeledSet::from_rows(&rows, y.clone());
        // depth-1 tree with a min_leaf larger than half the data cannot split
        let params = HybridParams {
            cart: CartParams {
                max_depth: 1,
                min_leaf: 40,
            },
            mlp: MlpParams {
                hidden_neurons: 5,
                epochs: 20,
                ..MlpParams::default()
            },
        };
        let h = train_hybrid(&data, None, &params, 3).unwrap();
        assert_eq!(h.tree.n_leaves, 1);

        let with_const = FeatureMatrix::from_rows(
            &rows
                .iter()
                .map(|r| vec![r[0], r[1], 0.5])
                .collect::<Vec<_>>(),
        );
        let plain = train_mlp(&LabeledSet::new(with_const, y), None, &params.mlp, 3).unwrap();
        for r in &rows {
            assert_eq!(h.score(r), plain.score(&[r[0], r[1], 0.5]));
        }
    }

    #[test]
    fn learns_a_tree_friendly_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<[f64; 2]> = (0..200).map(|_| [rng.random(), rng.random()]).collect();
        let y: Vec<bool> = rows.iter().map(|r| (r[0] > 0.5) != (r[1] > 0.5)).collect();
        let data = LabeledSet::from_rows(&rows, y);
        let params = HybridParams {
            cart: CartParams {
                max_depth: 4,
                min_leaf: 5,
            },
            mlp: MlpParams {
                hidden_neurons: 10,
                epochs: 60,
                ..MlpParams::default()
            },
        };
        let h = train_hybrid(&data, Some(&data), &params, 1).unwrap();
        let acc = rows
            .iter()
            .zip(&data.y)
            .filter(|(r, &t)| h.predict(*r) == t)
            .count();
        assert!(acc >= 180, "{acc}/200");
    }
}
