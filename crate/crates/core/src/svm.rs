//! Class-weighted linear SVM, one-vs-all over the three sentiment classes.
//!
//! Each binary problem is the L1-loss (hinge) soft-margin SVM solved in the
//! dual by cyclic coordinate ascent:
//!
//! ```text
//! max  sum_i a_i - 1/2 || sum_i a_i y_i x_i ||^2    s.t.  0 <= a_i <= cost_i
//! ```
//!
//! with every sample augmented by a constant `bias_scale` feature so the
//! bias needs no equality constraint. The visiting order is reshuffled each
//! epoch from a seeded ChaCha stream. Coordinates stuck at a bound are
//! shrunk out of the active set, and convergence is confirmed by a full pass.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    FeatureLayout, Hyperparams, SentimentLabel, SolverDiagnostics, SvmModel, MODEL_VERSION,
};
use crate::error::{Error, Result};
use crate::features::NormalizationConfig;

/// Per-class cost multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "weights")]
pub enum ClassWeights {
    /// `N / (K * N_k)` computed from the training labels.
    Auto,
    Uniform,
    /// Multipliers in [`SentimentLabel::ALL`] order.
    Manual([f64; 3]),
}

impl ClassWeights {
    pub fn mode(&self) -> &'static str {
        match self {
            ClassWeights::Auto => "auto",
            ClassWeights::Uniform => "uniform",
            ClassWeights::Manual(_) => "manual",
        }
    }

    /// Resolve to concrete multipliers for the given training labels.
    pub fn resolve(&self, labels: &[SentimentLabel]) -> Result<[f64; 3]> {
        match *self {
            ClassWeights::Uniform => Ok([1.0; 3]),
            ClassWeights::Manual(w) => {
                if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::InvalidParameter(format!(
                        "class weights must be positive, got {w:?}"
                    )));
                }
                Ok(w)
            }
            ClassWeights::Auto => {
                let counts = class_counts(labels);
                let n = labels.len() as f64;
                let mut w = [0.0; 3];
                for (k, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        return Err(Error::MissingClass {
                            label: SentimentLabel::ALL[k],
                            fold: None,
                        });
                    }
                    w[k] = n / (3.0 * c as f64);
                }
                Ok(w)
            }
        }
    }
}

fn class_counts(labels: &[SentimentLabel]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub class_weights: ClassWeights,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub bias_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            class_weights: ClassWeights::Auto,
            tolerance: 1e-4,
            max_epochs: 1000,
            seed: 0,
            bias_scale: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParameter(
                "max_epochs must be positive".into(),
            ));
        }
        if !self.bias_scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bias scale must be finite, got {}",
                self.bias_scale
            )));
        }
        if let ClassWeights::Manual(_) = self.class_weights {
            self.class_weights.resolve(&[])?;
        }
        Ok(())
    }
}

/// One binary sub-problem: samples, `+1/-1` targets and per-sample box bounds.
#[derive(Debug, Clone)]
pub struct BinaryProblem<'a> {
    samples: Vec<&'a [f64]>,
    targets: Vec<f64>,
    costs: Vec<f64>,
}

impl<'a> BinaryProblem<'a> {
    pub fn new(samples: Vec<&'a [f64]>, targets: Vec<f64>, costs: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if targets.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: targets.len(),
            });
        }
        if costs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: costs.len(),
            });
        }
        if targets.iter().any(|&t| t != 1.0 && t != -1.0) {
            return Err(Error::InvalidParameter("targets must be +1 or -1".into()));
        }
        if !(targets.contains(&1.0) && targets.contains(&-1.0)) {
            return Err(Error::SingleClass);
        }
        if costs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(
                "per-sample costs must be positive".into(),
            ));
        }
        let dim = samples[0].len();
        for x in &samples {
            if x.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            if let Some(j) = x.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(j));
            }
        }
        Ok(BinaryProblem {
            samples,
            targets,
            costs,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature dimension, without the bias column.
    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn samples(&self) -> &[&'a [f64]] {
        &self.samples
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    /// Primal weights with the bias-column weight last (`dim + 1` entries).
    pub weights: Vec<f64>,
    pub dual: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
    /// Max projected-gradient magnitude, recomputed from scratch at exit.
    pub kkt_violation: f64,
    /// Dual objective before the first epoch and after every epoch.
    pub objective_trace: Vec<f64>,
}

impl BinarySolution {
    /// Bias of the decision function `w.x + b`.
    pub fn bias(&self, bias_scale: f64) -> f64 {
        self.weights[self.weights.len() - 1] * bias_scale
    }
}

fn dot_augmented(w: &[f64], x: &[f64], bias_scale: f64) -> f64 {
    let d = x.len();
    w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d] * bias_scale
}

fn axpy_augmented(a: f64, x: &[f64], bias_scale: f64, w: &mut [f64]) {
    let d = x.len();
    for (wi, xi) in w[..d].iter_mut().zip(x) {
        *wi += a * xi;
    }
    w[d] += a * bias_scale;
}

fn projected_gradient(g: f64, alpha: f64, upper: f64) -> f64 {
    if alpha <= 0.0 {
        g.min(0.0)
    } else if alpha >= upper {
        g.max(0.0)
    } else {
        g
    }
}

/// `w = sum_i a_i y_i [x_i, B]`, computed from scratch.
pub fn primal_from_dual(problem: &BinaryProblem, dual: &[f64], bias_scale: f64) -> Vec<f64> {
    let mut w = vec![0.0; problem.dim() + 1];
    for ((x, &y), &a) in problem.samples.iter().zip(&problem.targets).zip(dual) {
        if a != 0.0 {
            axpy_augmented(a * y, x, bias_scale, &mut w);
        }
    }
    w
}

/// Dual objective `sum a - 1/2 ||w||^2` for a primal `w` consistent with `dual`.
pub fn dual_objective(dual: &[f64], weights: &[f64]) -> f64 {
    dual.iter().sum::<f64>() - 0.5 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Largest projected-gradient magnitude of the dual at `dual`.
pub fn kkt_violation(problem: &BinaryProblem, dual: &[f64], bias_scale: f64) -> f64 {
    let w = primal_from_dual(problem, dual, bias_scale);
    problem
        .samples
        .iter()
        .zip(&problem.targets)
        .zip(dual.iter().zip(&problem.costs))
        .map(|((x, &y), (&a, &u))| {
            let g = y * dot_augmented(&w, x, bias_scale) - 1.0;
            projected_gradient(g, a, u).abs()
        })
        .fold(0.0, f64::max)
}

/// Relative slack allowed for floating-point noise in the monotone-objective check.
const OBJECTIVE_SLACK: f64 = 1e-10;

/// Solve one binary problem.
pub fn train_binary(problem: &BinaryProblem, config: &TrainConfig) -> Result<BinarySolution> {
    train_binary_with_stream(problem, config, 0)
}

fn train_binary_with_stream(
    problem: &BinaryProblem,
    config: &TrainConfig,
    stream: u64,
) -> Result<BinarySolution> {
    config.validate()?;
    let n = problem.len();
    let b = config.bias_scale;
    let diag: Vec<f64> = problem
        .samples
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>() + b * b)
        .collect();

    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; problem.dim() + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);

    let mut trace = vec![0.0];
    let mut converged = false;
    let mut epochs = 0;
    // Shrinking: coordinates at a bound whose gradient points further out
    // than anything seen last epoch leave the active prefix of `order`.
    // Termination is only accepted after a full pass over every coordinate.
    let mut active = n;
    let mut pg_max_old = f64::INFINITY;
    let mut pg_min_old = f64::NEG_INFINITY;
    while epochs < config.max_epochs {
        epochs += 1;
        order[..active].shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        let mut s = 0;
        while s < active {
            let i = order[s];
            let x = problem.samples[i];
            let y = problem.targets[i];
            let upper = problem.costs[i];
            let g = y * dot_augmented(&w, x, b) - 1.0;
            let shrink =
                (alpha[i] <= 0.0 && g > pg_max_old) || (alpha[i] >= upper && g < pg_min_old);
            if shrink {
                active -= 1;
                order.swap(s, active);
                continue;
            }
            let pg = projected_gradient(g, alpha[i], upper);
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            s += 1;
            if pg == 0.0 {
                continue;
            }
            let old = alpha[i];
            let new = if diag[i] > 0.0 {
                (old - g / diag[i]).clamp(0.0, upper)
            } else {
                // zero row: the objective is linear in this coordinate and g = -1
                upper
            };
            if new != old {
                alpha[i] = new;
                axpy_augmented((new - old) * y, x, b, &mut w);
            }
        }
        let objective = dual_objective(&alpha, &w);
        if cfg!(debug_assertions) {
            check_epoch(
                &alpha,
                problem.costs(),
                *trace.last().unwrap(),
                objective,
                epochs,
            )?;
        }
        trace.push(objective);

        let violation = pg_max.max(-pg_min).max(0.0);
        if violation < config.tolerance {
            if active == n {
                converged = true;
                break;
            }
            active = n;
            pg_max_old = f64::INFINITY;
            pg_min_old = f64::NEG_INFINITY;
            continue;
        }
        pg_max_old = if pg_max <= 0.0 { f64::INFINITY } else { pg_max };
        pg_min_old = if pg_min >= 0.0 {
            f64::NEG_INFINITY
        } else {
            pg_min
        };
    }

    let kkt = kkt_violation(problem, &alpha, b);
    if cfg!(debug_assertions) && converged && kkt >= 10.0 * config.tolerance {
        return Err(Error::Invariant(format!(
            "KKT violation {kkt:e} at termination exceeds 10 x tolerance {:e}",
            config.tolerance
        )));
    }
    if converged {
        log::debug!("binary solve: n={n} epochs={epochs} kkt={kkt:.3e}");
    } else {
        log::warn!("binary solve stopped at max_epochs={epochs} with KKT violation {kkt:.3e}");
    }
    Ok(BinarySolution {
        weights: w,
        dual: alpha,
        epochs,
        converged,
        kkt_violation: kkt,
        objective_trace: trace,
    })
}

fn check_epoch(
    alpha: &[f64],
    costs: &[f64],
    previous: f64,
    current: f64,
    epoch: usize,
) -> Result<()> {
    if let Some(i) = alpha
        .iter()
        .zip(costs)
        .position(|(&a, &u)| !(0.0..=u).contains(&a))
    {
        return Err(Error::Invariant(format!(
            "dual variable {i} = {} left [0, {}] in epoch {epoch}",
            alpha[i], costs[i]
        )));
    }
    if current < previous - OBJECTIVE_SLACK * previous.abs().max(1.0) {
        return Err(Error::Invariant(format!(
            "dual objective decreased from {previous} to {current} in epoch {epoch}"
        )));
    }
    Ok(())
}

/// Train the three one-vs-all problems. Per-sample cost is
/// `C * class_weights[label]`. The returned model carries the default
/// normalization config and an empty catalog hash; callers that know those
/// fill them in.
pub fn train_multiclass<V: AsRef<[f64]> + Sync>(
    samples: &[V],
    labels: &[SentimentLabel],
    layout: FeatureLayout,
    config: &TrainConfig,
) -> Result<SvmModel> {
    config.validate()?;
    if samples.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            found: labels.len(),
        });
    }
    let counts = class_counts(labels);
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClass {
            label: SentimentLabel::ALL[k],
            fold: None,
        });
    }
    let dim = layout.fused();
    for s in samples {
        if s.as_ref().len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: s.as_ref().len(),
            });
        }
    }
    let class_weights = config.class_weights.resolve(labels)?;
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.as_ref()).collect();
    let costs: Vec<f64> = labels
        .iter()
        .map(|l| config.c * class_weights[l.index()])
        .collect();

    let solutions = SentimentLabel::ALL
        .par_iter()
        .map(|&class| {
            let targets = labels
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let problem = BinaryProblem::new(rows.clone(), targets, costs.clone())?;
            train_binary_with_stream(&problem, config, class.index() as u64)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut weight_vectors = Vec::with_capacity(3);
    let mut biases = Vec::with_capacity(3);
    let mut diagnostics = Vec::with_capacity(3);
    for sol in solutions {
        biases.push(sol.bias(config.bias_scale));
        diagnostics.push(SolverDiagnostics {
            epochs: sol.epochs,
            converged: sol.converged,
            kkt_violation: sol.kkt_violation,
            dual_objective: *sol.objective_trace.last().unwrap(),
        });
        let mut w = sol.weights;
        w.truncate(dim);
        weight_vectors.push(w);
    }
    Ok(SvmModel {
        version: MODEL_VERSION,
        classes: SentimentLabel::ALL.to_vec(),
        feature_dims: layout,
        weight_vectors,
        biases,
        hyperparams: Hyperparams {
            c: config.c,
            class_weight_mode: config.class_weights.mode().to_string(),
            class_weights: class_weights.to_vec(),
            tolerance: config.tolerance,
            max_epochs: config.max_epochs,
            seed: config.seed,
            bias_scale: config.bias_scale,
        },
        normalization_config: NormalizationConfig::default(),
        anp_catalog_hash: String::new(),
        diagnostics,
    })
}

/// One-vs-all scores `w_k . x + b_k` in [`SentimentLabel::ALL`] order.
pub fn decision_values(model: &SvmModel, x: &[f64]) -> Result<[f64; 3]> {
    if x.len() != model.dim() {
        return Err(Error::DimMismatch {
            expected: model.dim(),
            found: x.len(),
        });
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let w = &model.weight_vectors[k];
        *slot = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + model.biases[k];
    }
    Ok(out)
}

/// Argmax of the scores; exact ties go Neutral > Positive > Negative.
pub fn argmax_label(values: &[f64; 3]) -> SentimentLabel {
    let mut best = SentimentLabel::Negative;
    for label in SentimentLabel::ALL {
        let v = values[label.index()];
        let b = values[best.index()];
        if v > b || (v == b && label.tie_priority() > best.tie_priority()) {
            best = label;
        }
    }
    best
}

pub fn predict_label(model: &SvmModel, x: &[f64]) -> Result<SentimentLabel> {
    Ok(argmax_label(&decision_values(model, x)?))
}
