//! Soft-margin support vector machine trained by sequential minimal
//! optimization with second-order working-set selection.
//!
//! Solves `min_a 0.5 a'Qa - e'a` subject to `0 <= a_i <= C` and `y'a = 0`,
//! where `Q_ij = y_i y_j K(x_i, x_j)` and `K(u, v) = (u.v + 1)^degree`.
//! Iteration stops once the maximal KKT violation `m(a) - M(a)` drops below
//! the tolerance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{LabeledSet, TrainingInfo};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub kernel_degree: u32,
    pub c: f64,
    pub tolerance: f64,
    /// Iteration cap as a multiple of the training-set size.
    pub max_iter_factor: usize,
    /// Kernel row cache budget.
    pub cache_mb: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            kernel_degree: 3,
            c: 1.0,
            tolerance: 1e-3,
            max_iter_factor: 10,
            cache_mb: 200,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidHyperparameter { name, reason });
        if self.kernel_degree == 0 {
            return bad("kernel_degree", "must be at least 1".into());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("c", format!("{} must be positive", self.c));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance", format!("{} must be positive", self.tolerance));
        }
        if self.max_iter_factor == 0 {
            return bad("max_iter_factor", "must be at least 1".into());
        }
        Ok(())
    }
}

/// Inhomogeneous polynomial kernel `(u.v + 1)^degree`.
pub fn poly_kernel(u: &[f64], v: &[f64], degree: u32) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot + 1.0).powi(degree as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub degree: u32,
    pub c: f64,
    /// Support vectors (multiplier > 0).
    pub support: FeatureMatrix,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    /// Final maximal KKT violation.
    pub kkt_gap: f64,
    pub info: TrainingInfo,
}

impl SvmModel {
    pub fn arity(&self) -> usize {
        self.support.cols()
    }

    /// `sum_i alpha_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter_rows()
            .zip(&self.coef)
            .map(|(sv, c)| c * poly_kernel(sv, x, self.degree))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) >= 0.0
    }
}

/// Raw dual solution over the full training set.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Gradient of the minimized objective, `Qa - e`.
    pub gradient: Vec<f64>,
    pub kkt_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DualSolution {
    /// Dual objective `e'a - 0.5 a'Qa` (to be maximized).
    pub fn objective(&self) -> f64 {
        // a'Qa = a'(G + e)
        let quad: f64 = self
            .alpha
            .iter()
            .zip(&self.gradient)
            .map(|(a, g)| a * (g + 1.0))
            .sum();
        let lin: f64 = self.alpha.iter().sum();
        lin - 0.5 * quad
    }
}

struct KernelCache<'a> {
    x: &'a FeatureMatrix,
    y: &'a [f64],
    degree: u32,
    rows: HashMap<usize, Vec<f64>>,
    order: std::collections::VecDeque<usize>,
    capacity: usize,
    diag: Vec<f64>,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a FeatureMatrix, y: &'a [f64], degree: u32, cache_mb: usize) -> Self {
        let n = x.rows();
        let capacity = ((cache_mb << 20) / (8 * n.max(1))).max(2);
        let diag = (0..n)
            .map(|i| poly_kernel(x.row(i), x.row(i), degree))
            .collect();
        Self {
            x,
            y,
            degree,
            rows: HashMap::new(),
            order: Default::default(),
            capacity,
            diag,
        }
    }

    /// Row `i` of `Q`.
    fn q_row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = self.x.row(i);
            let yi = self.y[i];
            let row = (0..self.x.rows())
                .map(|t| yi * self.y[t] * poly_kernel(xi, self.x.row(t), self.degree))
                .collect();
            self.rows.insert(i, row);
            self.order.push_back(i);
        }
        &self.rows[&i]
    }
}

const TAU: f64 = 1e-12;

/// SMO on the dual. Labels are `+1` / `-1`.
pub fn solve_dual(x: &FeatureMatrix, y: &[f64], params: &SvmParams) -> DualSolution {
    let n = x.rows();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut cache = KernelCache::new(x, y, params.kernel_degree, params.cache_mb);
    let max_iter = params.max_iter_factor.saturating_mul(n).max(1000);

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violator from the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if in_low(alpha[t], y[t]) {
                gmin = gmin.min(-y[t] * grad[t]);
            }
        }
        gap = gmax - gmin;
        if gap < params.tolerance {
            converged = true;
            break;
        }
        let Some(i) = i_sel else {
            converged = true;
            gap = 0.0;
            break;
        };

        // j: second-order choice among "low" violators
        let qii = cache.diag[i];
        let q_i: Vec<f64> = cache.q_row(i).to_vec();
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                // K_ii + K_tt - 2 K_it, with Q_it = y_i y_t K_it
                let a = qii + cache.diag[t] - 2.0 * y[i] * y[t] * q_i[t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj < best_obj {
                    best_obj = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        let q_j: Vec<f64> = cache.q_row(j).to_vec();
        iterations += 1;

        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_ai, old_aj);
        if y[i] != y[j] {
            let mut quad = qii + cache.diag[j] + 2.0 * q_i[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qii + cache.diag[j] - 2.0 * q_i[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for t in 0..n {
            grad[t] += q_i[t] * dai + q_j[t] * daj;
        }
    }

    // bias: average over free vectors, else midpoint of the feasible interval
    let (mut sum, mut count) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum += yg;
            count += 1;
        }
    }
    let rho = if count > 0 {
        sum / count as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    if !converged {
        log::warn!("SMO stopped at the iteration cap ({max_iter}) with KKT gap {gap:.3e}");
    }
    DualSolution {
        alpha,
        bias: -rho,
        gradient: grad,
        kkt_gap: gap.max(0.0),
        iterations,
        converged,
    }
}

pub fn train_svm(train: &LabeledSet, params: &SvmParams) -> Result<SvmModel> {
    params.validate()?;
    train.require_both_labels(2)?;
    let y: Vec<f64> = train
        .y
        .iter()
        .map(|&b| if b { 1.0 } else { -1.0 })
        .collect();
    let sol = solve_dual(&train.x, &y, params);
    let sv: Vec<usize> = (0..train.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(SvmModel {
        degree: params.kernel_degree,
        c: params.c,
        support: train.x.select_rows(&sv),
        coef: sv.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
        bias: sol.bias,
        kkt_gap: sol.kkt_gap,
        info: TrainingInfo {
            iterations: sol.iterations,
            final_training_error: -sol.objective(),
            no_convergence: !sol.converged,
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_value() {
        assert_eq!(poly_kernel(&[1.0, 1.0], &[1.0, 1.0], 3), 27.0);
        assert_eq!(poly_kernel(&[0.0, 0.0], &[5.0, 1.0], 3), 1.0);
    }

    #[test]
    fn two_point_separable() {
        let data = LabeledSet::from_rows(&[[0.0, 0.0], [1.0, 1.0]], vec![false, true]);
        let params = SvmParams::default();
        let m = train_svm(&data, &params).unwrap();
        assert!(!m.predict(&[0.0, 0.0]));
        assert!(m.predict(&[1.0, 1.0]));
        let y = [-1.0, 1.0];
        let sol = solve_dual(&data.x, &y, &params);
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 && a < params.c {
                let f = m.decision(data.x.row(i));
                assert!(y[i] * f >= 1.0 - 1e-6, "margin {}", y[i] * f);
            }
        }
    }

    #[test]
    fn bad_params() {
        let data = LabeledSet::from_rows(&[[0.0], [1.0]], vec![false, true]);
        for p in [
            SvmParams {
                c: 0.0,
                ..SvmParams::default()
            },
            SvmParams {
                kernel_degree: 0,
                ..SvmParams::default()
            },
            SvmParams {
                tolerance: 0.0,
                ..SvmParams::default()
            },
        ] {
            assert!(train_svm(&data, &p).is_err());
        }
    }

    #[test]
    fn single_label_rejected() {
        let data = LabeledSet::from_rows(&[[0.0], [1.0]], vec![true, true]);
        assert!(matches!(
            train_svm(&data, &SvmParams::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}
