//! Least-squares linear classifier solved through the SVD pseudo-inverse.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{LabeledSet, TrainingInfo};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearParams {
    /// Append a constant 1 column to the design matrix.
    pub bias: bool,
    /// Relative cutoff below which singular values count as zero.
    pub rcond: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            bias: true,
            rcond: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    /// Present when trained with a bias column.
    pub bias: Option<f64>,
    pub info: TrainingInfo,
}

/// Minimum-norm least-squares solution of `design * w = target`, and whether
/// the design was rank deficient.
pub fn pinv_solve(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    rcond: f64,
) -> (DVector<f64>, bool) {
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = rcond * smax.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let degenerate = rank < design.ncols().min(design.nrows());
    let w = svd
        .solve(target, cutoff)
        .expect("U and V were requested from the SVD");
    (w, degenerate)
}

pub fn train_linear(data: &LabeledSet, params: &LinearParams) -> Result<LinearModel> {
    data.require_both_labels(2)?;
    let p = data.arity();
    let cols = p + usize::from(params.bias);
    let design = DMatrix::from_fn(
        data.len(),
        cols,
        |i, j| if j < p { data.x.get(i, j) } else { 1.0 },
    );
    let target = DVector::from_iterator(data.len(), data.y.iter().map(|&b| f64::from(u8::from(b))));
    let (w, degenerate) = pinv_solve(&design, &target, params.rcond);
    if degenerate {
        log::debug!("linear design matrix is rank deficient");
    }
    let residual = (&design * &w - &target).norm_squared() / data.len() as f64;
    Ok(LinearModel {
        weights: w.iter().take(p).copied().collect(),
        bias: params.bias.then(|| w[p]),
        info: TrainingInfo {
            iterations: 1,
            final_training_error: residual,
            degenerate_design: degenerate,
            no_convergence: false,
        },
    })
}

impl LinearModel {
    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias.unwrap_or(0.0)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) >= 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_one_dimensional() {
        let data = LabeledSet::from_rows(&[[0.1], [0.9]], vec![false, true]);
        let m = train_linear(&data, &LinearParams::default()).unwrap();
        assert!(!m.predict(&[0.1]));
        assert!(m.predict(&[0.9]));
    }

    #[test]
    fn identity_design_returns_targets() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        let y = vec![true, false, true, true];
        let params = LinearParams {
            bias: false,
            ..Default::default()
        };
        let m = train_linear(&LabeledSet::from_rows(&rows, y), &params).unwrap();
        for (w, t) in m.weights.iter().zip([1.0, 0.0, 1.0, 1.0]) {
            assert!((w - t).abs() < 1e-12);
        }
        assert!(m.bias.is_none());
    }

    #[test]
    fn identical_rows_flag_degenerate() {
        let rows = vec![[0.3, 0.3]; 5];
        let m = train_linear(
            &LabeledSet::from_rows(&rows, vec![true, false, true, false, false]),
            &LinearParams::default(),
        )
        .unwrap();
        assert!(m.info.degenerate_design);
        // minimum-norm solution still predicts the mean everywhere
        assert!((m.score(&[0.3, 0.3]) - 0.4).abs() < 1e-9);
    }

    #[test]
    fn score_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<[f64; 3]> = (0..30)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let y = (0..30).map(|_| rng.random_bool(0.5)).collect();
        let m = train_linear(&LabeledSet::from_rows(&rows, y), &LinearParams::default()).unwrap();
        let (x, z) = ([0.2, 0.5, 0.9], [0.4, 0.1, 0.3]);
        let sum: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
        let lhs = m.score(&x) + m.score(&z);
        let rhs = m.score(&sum) + m.score(&[0.0; 3]);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn solution_minimizes_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<[f64; 4]> = (0..40)
            .map(|_| std::array::from_fn(|_| rng.random()))
            .collect();
        let y: Vec<bool> = (0..40).map(|_| rng.random_bool(0.4)).collect();
        let data = LabeledSet::from_rows(&rows, y.clone());
        let m = train_linear(&data, &LinearParams::default()).unwrap();
        let residual = |w: &[f64], b: f64| -> f64 {
            rows.iter()
                .zip(&y)
                .map(|(r, &t)| {
                    let s: f64 = r.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
                    (s - f64::from(u8::from(t))).powi(2)
                })
                .sum()
        };
        let best = residual(&m.weights, m.bias.unwrap());
        for _ in 0..200 {
            let w: Vec<f64> = m
                .weights
                .iter()
                .map(|w| w + rng.random_range(-0.05..0.05))
                .collect();
            let b = m.bias.unwrap() + rng.random_range(-0.05..0.05);
            assert!(residual(&w, b) >= best - 1e-12);
        }
    }

    #[test]
    fn too_few_records() {
        let data = LabeledSet::from_rows(&[[0.1]], vec![true]);
        assert!(train_linear(&data, &LinearParams::default()).is_err());
    }
}
