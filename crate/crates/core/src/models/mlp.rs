//! One-hidden-layer perceptron with sigmoid units and squared-error loss.
//!
//! Phase one is per-record backpropagation with momentum; the optional phase
//! two continues from the phase-one weights with Polak-Ribiere conjugate
//! gradient on the full-batch loss. The weights with the lowest selection-set
//! error seen across both phases are kept.
//!
//! Parameters live in one flat vector: hidden weights (`hidden x inputs`,
//! row-major), hidden biases, output weights, output bias.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, LabeledSet, TrainingInfo};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase2 {
    #[default]
    None,
    ConjugateGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden_neurons: usize,
    /// Backpropagation epochs; also the number of conjugate-gradient iterations.
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub phase2: Phase2,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_neurons: 113,
            epochs: 100,
            learning_rate: 0.1,
            momentum: 0.9,
            phase2: Phase2::None,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidHyperparameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.hidden_neurons == 0 {
            return bad("hidden_neurons", "must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Shape of a network; all the math works on flat parameter slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub inputs: usize,
    pub hidden: usize,
}

impl Shape {
    pub fn n_params(self) -> usize {
        self.hidden * (self.inputs + 2) + 1
    }

    fn b1(self) -> usize {
        self.hidden * self.inputs
    }

    fn w2(self) -> usize {
        self.b1() + self.hidden
    }

    fn b2(self) -> usize {
        self.w2() + self.hidden
    }

    /// Uniform in `[-0.5, 0.5] / sqrt(fan_in)`.
    pub fn init(self, rng: &mut impl Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.n_params()];
        let s1 = 1.0 / (self.inputs as f64).sqrt();
        let s2 = 1.0 / (self.hidden as f64).sqrt();
        for (k, v) in p.iter_mut().enumerate() {
            let scale = if k < self.w2() { s1 } else { s2 };
            *v = rng.random_range(-0.5..0.5) * scale;
        }
        p
    }

    /// Network output for one record; hidden activations are written to `act`.
    fn forward_into(self, params: &[f64], x: &[f64], act: &mut [f64]) -> f64 {
        let (w1, rest) = params.split_at(self.b1());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden);
        let mut z2 = b2[0];
        for h in 0..self.hidden {
            let row = &w1[h * self.inputs..(h + 1) * self.inputs];
            let z = b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            let a = sigmoid(z);
            act[h] = a;
            z2 += w2[h] * a;
        }
        sigmoid(z2)
    }

    pub fn forward(self, params: &[f64], x: &[f64]) -> f64 {
        let mut act = vec![0.0; self.hidden];
        self.forward_into(params, x, &mut act)
    }

    /// Accumulates `scale * d(0.5 (o - t)^2)/d(params)` into `grad`; returns
    /// the record's loss.
    fn backprop_into(
        self,
        params: &[f64],
        x: &[f64],
        target: f64,
        act: &mut [f64],
        grad: &mut [f64],
        scale: f64,
    ) -> f64 {
        let o = self.forward_into(params, x, act);
        let err = o - target;
        let delta_o = err * o * (1.0 - o) * scale;
        let (b1, w2, b2) = (self.b1(), self.w2(), self.b2());
        grad[b2] += delta_o;
        for h in 0..self.hidden {
            let a = act[h];
            grad[w2 + h] += delta_o * a;
            let delta_h = delta_o * params[w2 + h] * a * (1.0 - a);
            grad[b1 + h] += delta_h;
            let row = &mut grad[h * self.inputs..(h + 1) * self.inputs];
            for (g, v) in row.iter_mut().zip(x) {
                *g += delta_h * v;
            }
        }
        0.5 * err * err
    }

    /// Mean over records of `0.5 (o - t)^2`.
    pub fn loss(self, params: &[f64], x: &FeatureMatrix, targets: &[f64]) -> f64 {
        if targets.is_empty() {
            return 0.0;
        }
        let mut act = vec![0.0; self.hidden];
        let total: f64 = x
            .iter_rows()
            .zip(targets)
            .map(|(r, t)| {
                let e = self.forward_into(params, r, &mut act) - t;
                0.5 * e * e
            })
            .sum();
        total / targets.len() as f64
    }

    /// Full-batch loss and its analytic gradient.
    pub fn loss_and_gradient(
        self,
        params: &[f64],
        x: &FeatureMatrix,
        targets: &[f64],
    ) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        if targets.is_empty() {
            return (0.0, grad);
        }
        let mut act = vec![0.0; self.hidden];
        let scale = 1.0 / targets.len() as f64;
        let mut total = 0.0;
        for (r, &t) in x.iter_rows().zip(targets) {
            total += self.backprop_into(params, r, t, &mut act, &mut grad, scale);
        }
        (total * scale, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub shape: Shape,
    pub params: Vec<f64>,
    phase2: Phase2,
    /// Epoch (phase one) or epochs + iteration (phase two) that produced `params`.
    pub best_at: usize,
    pub info: TrainingInfo,
}

impl MlpModel {
    pub fn arity(&self) -> usize {
        self.shape.inputs
    }

    pub fn phase2(&self) -> Phase2 {
        self.phase2
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.shape.forward(&self.params, x)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) >= 0.5
    }
}

/// Result of [`minimize_cg`].
#[derive(Debug, Clone)]
pub struct CgTrace {
    pub x: Vec<f64>,
    /// Objective after each accepted step, starting with the initial value.
    pub losses: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Polak-Ribiere (PR+) nonlinear conjugate gradient with Armijo backtracking,
/// restarting along the steepest descent every `restart` iterations.
/// `on_step` sees each accepted iterate.
pub fn minimize_cg(
    mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    iterations: usize,
    restart: usize,
    mut on_step: impl FnMut(usize, &[f64]) -> Result<()>,
) -> Result<CgTrace> {
    const ARMIJO_C: f64 = 1e-4;
    const MAX_HALVINGS: usize = 50;

    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut losses = vec![fx];
    let mut step: f64 = 1.0;
    let restart = restart.max(1);

    for it in 1..=iterations {
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        if slope == 0.0 {
            break;
        }
        let mut alpha = (step * 2.0).min(1e6);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + ARMIJO_C * alpha * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        step = alpha;
        let beta = if it % restart == 0 {
            0.0
        } else {
            let num: f64 = gn.iter().zip(&g).map(|(a, b)| a * (a - b)).sum();
            (num / dot(&g, &g)).max(0.0)
        };
        for (di, gi) in d.iter_mut().zip(&gn) {
            *di = -gi + beta * *di;
        }
        x = xn;
        fx = fn_;
        g = gn;
        losses.push(fx);
        on_step(it, &x)?;
    }
    Ok(CgTrace { x, losses })
}

pub fn train_mlp(
    train: &LabeledSet,
    selection: Option<&LabeledSet>,
    params: &MlpParams,
    seed: u64,
) -> Result<MlpModel> {
    params.validate()?;
    train.require_both_labels(2)?;
    let shape = Shape {
        inputs: train.arity(),
        hidden: params.hidden_neurons,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = shape.init(&mut rng);

    let targets: Vec<f64> = train.y.iter().map(|&b| f64::from(u8::from(b))).collect();
    let selection = selection.filter(|s| !s.is_empty());
    let sel_targets: Option<Vec<f64>> =
        selection.map(|s| s.y.iter().map(|&b| f64::from(u8::from(b))).collect());
    let selection_error = |w: &[f64]| match (selection, &sel_targets) {
        (Some(s), Some(t)) => shape.loss(w, &s.x, t),
        _ => shape.loss(w, &train.x, &targets),
    };

    let mut best = (selection_error(&w), w.clone(), 0usize);
    let mut velocity = vec![0.0; w.len()];
    let mut grad = vec![0.0; w.len()];
    let mut act = vec![0.0; shape.hidden];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut train_err = f64::NAN;

    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            grad.iter_mut().for_each(|g| *g = 0.0);
            total += shape.backprop_into(&w, train.x.row(i), targets[i], &mut act, &mut grad, 1.0);
            for ((wk, vk), gk) in w.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *vk = params.momentum * *vk - params.learning_rate * gk;
                *wk += *vk;
            }
        }
        train_err = total / train.len() as f64;
        let sel = selection_error(&w);
        if !train_err.is_finite() || !sel.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        if sel < best.0 {
            best = (sel, w.clone(), epoch);
        }
    }
    let mut iterations = params.epochs;

    if params.phase2 == Phase2::ConjugateGradient {
        let n_weights = w.len();
        let epochs = params.epochs;
        let trace = minimize_cg(
            |p| shape.loss_and_gradient(p, &train.x, &targets),
            w,
            params.epochs,
            n_weights,
            |it, p| {
                let sel = selection_error(p);
                if !sel.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch: epochs + it });
                }
                if sel < best.0 {
                    best = (sel, p.to_vec(), epochs + it);
                }
                Ok(())
            },
        )?;
        iterations += trace.losses.len() - 1;
        train_err = *trace.losses.last().expect("initial loss recorded");
    }

    let (_, params_best, best_at) = best;
    let final_training_error = shape.loss(&params_best, &train.x, &targets);
    log::debug!(
        "mlp: best selection error at step {best_at}, last epoch training error {train_err:.5}"
    );
    Ok(MlpModel {
        shape,
        params: params_best,
        phase2: params.phase2,
        best_at,
        info: TrainingInfo {
            iterations,
            final_training_error,
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn xor() -> LabeledSet {
        LabeledSet::from_rows(
            &[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]],
            vec![false, true, true, false],
        )
    }

    #[test]
    fn learns_xor() {
        let params = MlpParams {
            epochs: 2000,
            ..MlpParams::default()
        };
        let data = xor();
        let m = train_mlp(&data, None, &params, 1).unwrap();
        for (r, &t) in data.x.iter_rows().zip(&data.y) {
            assert_eq!(m.predict(r), t, "{r:?}");
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = Shape {
            inputs: 3,
            hidden: 7,
        };
        let rows: Vec<[f64; 3]> = (0..20)
            .map(|_| std::array::from_fn(|_| rng.random()))
            .collect();
        let x = FeatureMatrix::from_rows(&rows);
        let t: Vec<f64> = (0..20)
            .map(|_| f64::from(u8::from(rng.random_bool(0.5))))
            .collect();
        let p: Vec<f64> = (0..shape.n_params())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (_, g) = shape.loss_and_gradient(&p, &x, &t);
        let h = 1e-5;
        for k in 0..p.len() {
            let mut plus = p.clone();
            plus[k] += h;
            let mut minus = p.clone();
            minus[k] -= h;
            let fd = (shape.loss(&plus, &x, &t) - shape.loss(&minus, &x, &t)) / (2.0 * h);
            let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-8);
            assert!(rel < 1e-4, "param {k}: fd {fd} analytic {}", g[k]);
        }
    }

    #[test]
    fn cg_descends_on_frozen_hidden_layer() {
        // Convex least squares over the output layer only (hidden layer frozen,
        // linear output).
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let shape = Shape {
            inputs: 4,
            hidden: 6,
        };
        let net = shape.init(&mut rng);
        let rows: Vec<[f64; 4]> = (0..50)
            .map(|_| std::array::from_fn(|_| rng.random()))
            .collect();
        let t: Vec<f64> = (0..50)
            .map(|_| f64::from(u8::from(rng.random_bool(0.3))))
            .collect();
        let acts: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let mut a = vec![0.0; shape.hidden];
                shape.forward_into(&net, r, &mut a);
                a
            })
            .collect();
        let objective = |w: &[f64]| {
            let mut g = vec![0.0; w.len()];
            let mut loss = 0.0;
            for (a, &ti) in acts.iter().zip(&t) {
                let out = w[shape.hidden] + dot(&w[..shape.hidden], a);
                let e = out - ti;
                loss += 0.5 * e * e / 50.0;
                for (gk, ak) in g.iter_mut().zip(a) {
                    *gk += e * ak / 50.0;
                }
                g[shape.hidden] += e / 50.0;
            }
            (loss, g)
        };
        let trace = minimize_cg(
            objective,
            vec![0.0; shape.hidden + 1],
            100,
            shape.hidden + 1,
            |_, _| Ok(()),
        )
        .unwrap();
        assert!(trace.losses.len() > 2);
        for pair in trace.losses.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }

    #[test]
    fn two_phase_training_runs_and_reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<[f64; 3]> = (0..80)
            .map(|_| std::array::from_fn(|_| rng.random()))
            .collect();
        let y: Vec<bool> = rows.iter().map(|r| r[0] + r[1] > 1.0).collect();
        let data = LabeledSet::from_rows(&rows, y);
        let params = MlpParams {
            hidden_neurons: 10,
            epochs: 30,
            phase2: Phase2::ConjugateGradient,
            ..MlpParams::default()
        };
        let a = train_mlp(&data, Some(&data), &params, 4).unwrap();
        let b = train_mlp(&data, Some(&data), &params, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.info.iterations > 30);
        let acc = data
            .x
            .iter_rows()
            .zip(&data.y)
            .filter(|(r, &t)| a.predict(r) == t)
            .count();
        assert!(acc >= 70, "training accuracy {acc}/80");
    }

    #[test]
    fn never_returns_non_finite_weights() {
        let params = MlpParams {
            learning_rate: 1e308,
            momentum: 0.0,
            hidden_neurons: 3,
            epochs: 5,
            ..MlpParams::default()
        };
        let data = LabeledSet::from_rows(
            &[[1e3, 1e3], [0.0, 0.0], [1.0, 1e3]],
            vec![true, false, true],
        );
        for seed in 0..20 {
            match train_mlp(&data, None, &params, seed) {
                Err(Error::NonFiniteLoss { epoch }) => assert!(epoch >= 1),
                Ok(m) => assert!(m.params.iter().all(|v| v.is_finite())),
                Err(e) => panic!("unexpected {e}"),
            }
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let data = xor();
        for p in [
            MlpParams {
                hidden_neurons: 0,
                ..MlpParams::default()
            },
            MlpParams {
                epochs: 0,
                ..MlpParams::default()
            },
        ] {
            assert!(matches!(
                train_mlp(&data, None, &p, 0),
                Err(Error::InvalidHyperparameter { .. })
            ));
        }
    }
}
