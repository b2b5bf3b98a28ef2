use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use super::loss::{LossKind, LossSpec};
use super::tree::{grow_tree, RegressionTree, TreeParams};
use crate::error::{Error, Result};
use crate::seed::{self, purpose};

pub const MODEL_FORMAT: &str = "tsgbm-gbm";
pub const MODEL_VERSION: u32 = 1;

/// Backtracking halvings tried before a soft-max leaf step is discarded.
const LINE_SEARCH_STEPS: usize = 40;

fn default_learning_rate() -> f64 {
    0.1
}
fn default_iterations() -> usize {
    100
}
fn default_max_depth() -> usize {
    6
}
fn default_num_leaves() -> usize {
    31
}
fn default_one() -> f64 {
    1.0
}
fn default_min_data() -> usize {
    20
}
fn default_bins() -> usize {
    255
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmParams {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_num_leaves")]
    pub num_leaves: usize,
    #[serde(default = "default_one")]
    pub bagging_fraction: f64,
    #[serde(default = "default_min_data")]
    pub min_data_in_leaf: usize,
    #[serde(default)]
    pub l1_regularization: f64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            iterations: default_iterations(),
            max_depth: default_max_depth(),
            num_leaves: default_num_leaves(),
            bagging_fraction: 1.0,
            min_data_in_leaf: default_min_data(),
            l1_regularization: 0.0,
            histogram_bins: default_bins(),
        }
    }
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(format!("gbm.{field}"), msg));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate", format!("must lie in (0, 1], got {}", self.learning_rate));
        }
        if self.iterations == 0 {
            return bad("iterations", "must be at least 1".into());
        }
        if self.max_depth == 0 {
            return bad("max_depth", "must be at least 1".into());
        }
        if self.num_leaves < 2 {
            return bad("num_leaves", "must be at least 2".into());
        }
        if !(self.bagging_fraction > 0.0 && self.bagging_fraction <= 1.0) {
            return bad("bagging_fraction", format!("must lie in (0, 1], got {}", self.bagging_fraction));
        }
        if self.min_data_in_leaf == 0 {
            return bad("min_data_in_leaf", "must be at least 1".into());
        }
        if !(self.l1_regularization >= 0.0 && self.l1_regularization.is_finite()) {
            return bad("l1_regularization", format!("must be non-negative, got {}", self.l1_regularization));
        }
        if !(2..=u16::MAX as usize).contains(&self.histogram_bins) {
            return bad("histogram_bins", format!("must lie in [2, 65535], got {}", self.histogram_bins));
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            num_leaves: self.num_leaves,
            min_data_in_leaf: self.min_data_in_leaf,
            lambda_l1: self.l1_regularization,
        }
    }
}

/// Additive tree ensemble: `f0 + learning_rate * sum_t tree_t(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub format: String,
    pub version: u32,
    pub n_features: usize,
    pub f0: f64,
    pub learning_rate: f64,
    pub loss: LossSpec,
    pub trees: Vec<RegressionTree>,
}

impl GbmModel {
    pub fn constant(n_features: usize, f0: f64, learning_rate: f64, loss: LossSpec) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            n_features,
            f0,
            learning_rate,
            loss,
            trees: Vec::new(),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::domain(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let mut acc = self.f0;
        for t in &self.trees {
            acc += self.learning_rate * t.predict_row(x);
        }
        Ok(acc)
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        x.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        m.check_header()?;
        Ok(m)
    }

    pub(crate) fn check_header(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Format(format!("unexpected model format `{}`", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "model version {} not supported (expected {MODEL_VERSION})",
                self.version
            )));
        }
        Ok(())
    }
}

/// Per-iteration record of a fit.
#[derive(Debug, Clone)]
pub struct FitTrace {
    /// Training loss before the first tree and after each tree.
    pub loss: Vec<f64>,
    /// Predictions on the training rows maintained during boosting.
    pub train_predictions: Vec<f64>,
    /// Mean leaf step multiplier accepted for each tree (1 for squared loss).
    pub step_scale: Vec<f64>,
}

pub fn fit_gbm(x: &[Vec<f64>], y: &[f64], params: &GbmParams, loss: &LossSpec, seed: u64) -> Result<GbmModel> {
    fit_gbm_traced(x, y, params, loss, seed).map(|(m, _)| m)
}

pub fn predict_gbm(model: &GbmModel, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    model.predict(x)
}

/// Fits a boosted ensemble and returns the per-iteration trace.
///
/// Each iteration fits a tree to per-row gradients and Hessians on a bagged
/// subset of rows (every row when `bagging_fraction == 1`), with leaf values
/// `-soft_threshold(G, l1) / (H + eps)` scaled by the learning rate. For the
/// soft-max objective each leaf is additionally scaled by the largest step in
/// `{1, 1/2, 1/4, ...}` that does not increase the full training loss.
pub fn fit_gbm_traced(
    x: &[Vec<f64>],
    y: &[f64],
    params: &GbmParams,
    loss: &LossSpec,
    seed: u64,
) -> Result<(GbmModel, FitTrace)> {
    params.validate()?;
    loss.validate()?;
    let n = y.len();
    if x.len() != n {
        return Err(Error::domain(format!("{} feature rows for {n} targets", x.len())));
    }
    if n < params.min_data_in_leaf || n == 0 {
        return Err(Error::domain(format!(
            "{n} training rows is fewer than min_data_in_leaf = {}",
            params.min_data_in_leaf
        )));
    }
    let n_features = x[0].len();
    if n_features == 0 {
        return Err(Error::domain("training rows have no features"));
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != n_features {
            return Err(Error::domain(format!("row {i} has {} features, expected {n_features}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("row {i} has a non-finite feature")));
        }
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("target {i} is not finite")));
    }

    let data = BinnedMatrix::from_rows(x, n_features, params.histogram_bins);
    let tree_params = params.tree_params();
    let f0 = loss.initial_prediction(y);
    let mut model = GbmModel::constant(n_features, f0, params.learning_rate, *loss);
    let mut preds = vec![f0; n];
    let mut trace = FitTrace {
        loss: vec![loss.value(&preds, y)],
        train_predictions: Vec::new(),
        step_scale: Vec::with_capacity(params.iterations),
    };
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut leaf_of = vec![0usize; n];
    let mut trial = vec![0.0; n];
    let bag_size = ((params.bagging_fraction * n as f64).round() as usize).clamp(1, n);

    for it in 0..params.iterations {
        loss.grad_hess(&preds, y, &mut grad, &mut hess, &mut scratch);
        let rows: Vec<u32> = if bag_size == n {
            (0..n as u32).collect()
        } else {
            let mut rng = seed::substream(seed, purpose::BAGGING, it as u64);
            let mut rows: Vec<u32> = index::sample(&mut rng, n, bag_size)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            rows.sort_unstable();
            rows
        };
        let grown = grow_tree(&data, &grad, &hess, rows, &tree_params);
        for (i, leaf) in leaf_of.iter_mut().enumerate() {
            *leaf = grown.route_binned(&data, i);
        }
        let mut tree = grown.tree;
        let current = *trace.loss.last().unwrap();

        let scale = if loss.kind == LossKind::SoftmaxMinimax {
            safeguard_leaves(&mut tree, &leaf_of, &preds, y, model.learning_rate, loss, current, &mut trial)
        } else {
            1.0
        };

        for i in 0..n {
            preds[i] += model.learning_rate * tree.leaf_value(leaf_of[i]);
        }
        let value = loss.value(&preds, y);
        if !value.is_finite() {
            return Err(Error::Training {
                iteration: it,
                message: format!("training loss became {value}"),
            });
        }
        trace.loss.push(value);
        trace.step_scale.push(scale);
        model.trees.push(tree);
    }
    trace.train_predictions = preds;
    Ok((model, trace))
}

/// Shrinks each leaf of a soft-max tree, in node order, by the largest power
/// of one half that keeps the full training loss from increasing. Returns the
/// mean accepted scale.
#[allow(clippy::too_many_arguments)]
fn safeguard_leaves(
    tree: &mut RegressionTree,
    leaf_of: &[usize],
    preds: &[f64],
    y: &[f64],
    learning_rate: f64,
    loss: &LossSpec,
    mut current: f64,
    trial: &mut [f64],
) -> f64 {
    let leaves: Vec<usize> = (0..tree.nodes.len()).filter(|&i| tree.is_leaf(i)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
    for (i, &leaf) in leaf_of.iter().enumerate() {
        members[leaf].push(i);
    }
    trial.copy_from_slice(preds);
    let mut total = 0.0;
    for &leaf in &leaves {
        let step = learning_rate * tree.leaf_value(leaf);
        let rows = &members[leaf];
        let mut scale = 1.0;
        let mut accepted = step == 0.0 || rows.is_empty();
        if !accepted {
            for _ in 0..LINE_SEARCH_STEPS {
                for &i in rows {
                    trial[i] = preds[i] + scale * step;
                }
                let value = loss.value(trial, y);
                if value <= current {
                    current = value;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
        }
        if !accepted {
            scale = 0.0;
            for &i in rows {
                trial[i] = preds[i];
            }
        }
        tree.scale_leaf(leaf, scale);
        total += scale;
    }
    total / leaves.len() as f64
}
