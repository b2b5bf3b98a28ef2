//! Training (simulate, compress, boost) and Monte Carlo MSE evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compression::{CompressorSpec, FeatureMap, FeatureVector};
use crate::error::{Error, Result};
use crate::gbm::{fit_gbm, GbmModel, GbmParams, LossSpec};
use crate::seed::{purpose, SeedPolicy};
use crate::simulators::{sample_prior, Mechanism, PriorSpec};
use crate::types::{ObservationSequence, ParameterVector};

pub const ESTIMATOR_FORMAT: &str = "tsgbm-estimator";
pub const ESTIMATOR_VERSION: u32 = 1;

/// Largest fraction of training draws that may fail simulation or
/// compression before training aborts.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

/// Anything that maps an observation sequence to a parameter estimate.
pub trait Estimator: Sync {
    fn dims(&self) -> usize;
    fn estimate(&self, y: &ObservationSequence) -> Result<Vec<f64>>;
}

/// Returns the same estimate for every input. With the true parameter this
/// is the zero-error oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimator(pub Vec<f64>);

impl Estimator for ConstantEstimator {
    fn dims(&self) -> usize {
        self.0.len()
    }

    fn estimate(&self, _y: &ObservationSequence) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

/// `theta_hat = g(phi(h(y)))` with one boosted model per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsgbmEstimator {
    pub format: String,
    pub version: u32,
    pub mechanism_id: String,
    pub parameter_names: Vec<String>,
    pub compressor: CompressorSpec,
    pub features: FeatureMap,
    pub models: Vec<GbmModel>,
    /// Content hash of the configuration that produced this estimator.
    #[serde(default)]
    pub config_fingerprint: Option<String>,
}

impl TsgbmEstimator {
    pub fn features(&self, y: &ObservationSequence) -> Result<FeatureVector> {
        FeatureVector::build(&self.compressor, &self.features, y)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimator serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: Self = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        if e.format != ESTIMATOR_FORMAT {
            return Err(Error::Format(format!("unexpected estimator format `{}`", e.format)));
        }
        if e.version != ESTIMATOR_VERSION {
            return Err(Error::Format(format!("estimator version {} not supported", e.version)));
        }
        if e.models.len() != e.parameter_names.len() {
            return Err(Error::Format("model count does not match parameter count".into()));
        }
        for m in &e.models {
            m.check_header()?;
        }
        Ok(e)
    }
}

impl Estimator for TsgbmEstimator {
    fn dims(&self) -> usize {
        self.models.len()
    }

    fn estimate(&self, y: &ObservationSequence) -> Result<Vec<f64>> {
        let fv = self.features(y)?;
        self.models.iter().map(|m| m.predict_row(&fv.phi)).collect()
    }
}

/// Simulated and compressed training data.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub thetas: Vec<Vec<f64>>,
    pub features: Vec<Vec<f64>>,
    /// Number of prior draws discarded because simulation or compression failed.
    pub dropped: usize,
}

/// Draws `m_train` parameters, simulates and compresses each.
pub fn build_training_set<M: Mechanism + ?Sized>(
    mechanism: &M,
    prior: &PriorSpec,
    compressor: &CompressorSpec,
    features: FeatureMap,
    m_train: usize,
    seed: u64,
) -> Result<TrainingSet> {
    if prior.space.dims() != mechanism.dims() {
        return Err(Error::config(
            "prior",
            format!("prior has {} dimensions, mechanism needs {}", prior.space.dims(), mechanism.dims()),
        ));
    }
    let seeds = SeedPolicy::new(seed);
    let thetas: Vec<Vec<f64>> = sample_prior(prior, m_train, seeds.seed(purpose::PRIOR, 0))?
        .into_iter()
        .map(|p| p.values)
        .collect();
    let rows: Vec<Result<Vec<f64>>> = thetas
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let y = mechanism.simulate(theta, seeds.seed(purpose::SIM, i as u64))?;
            Ok(FeatureVector::build(compressor, &features, &y)?.phi)
        })
        .collect();

    let mut set = TrainingSet {
        thetas: Vec::with_capacity(m_train),
        features: Vec::with_capacity(m_train),
        dropped: 0,
    };
    let mut failures = Vec::new();
    for (theta, row) in thetas.into_iter().zip(rows) {
        match row {
            Ok(phi) => {
                set.thetas.push(theta);
                set.features.push(phi);
            }
            Err(e) => failures.push((theta, e)),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * m_train as f64 {
        let listing: Vec<String> = failures
            .iter()
            .take(10)
            .map(|(t, e)| format!("{t:?}: {e}"))
            .collect();
        return Err(Error::Stage {
            stage: "training-data simulation",
            message: format!(
                "{} of {m_train} draws failed (limit {:.1}%); first offenders: {}",
                failures.len(),
                100.0 * MAX_FAILURE_FRACTION,
                listing.join("; ")
            ),
        });
    }
    if !failures.is_empty() {
        log::warn!("dropped {} of {m_train} training draws", failures.len());
    }
    set.dropped = failures.len();
    Ok(set)
}

/// Trains one boosted model per parameter dimension.
#[allow(clippy::too_many_arguments)]
pub fn train_tsgbm<M: Mechanism + ?Sized>(
    mechanism: &M,
    prior: &PriorSpec,
    compressor: &CompressorSpec,
    features: FeatureMap,
    gbm: &GbmParams,
    loss: &LossSpec,
    m_train: usize,
    seed: u64,
) -> Result<TsgbmEstimator> {
    if m_train < 2 * gbm.min_data_in_leaf {
        return Err(Error::config(
            "train.m_train",
            format!("must be at least 2 * min_data_in_leaf = {}", 2 * gbm.min_data_in_leaf),
        ));
    }
    let set = build_training_set(mechanism, prior, compressor, features, m_train, seed)?;
    fit_estimator(mechanism, prior, compressor, features, gbm, loss, &set, seed)
}

/// Fits the per-dimension models on an existing training set.
#[allow(clippy::too_many_arguments)]
pub fn fit_estimator<M: Mechanism + ?Sized>(
    mechanism: &M,
    prior: &PriorSpec,
    compressor: &CompressorSpec,
    features: FeatureMap,
    gbm: &GbmParams,
    loss: &LossSpec,
    set: &TrainingSet,
    seed: u64,
) -> Result<TsgbmEstimator> {
    let seeds = SeedPolicy::new(seed);
    let models = (0..mechanism.dims())
        .into_par_iter()
        .map(|k| {
            let target: Vec<f64> = set.thetas.iter().map(|t| t[k]).collect();
            fit_gbm(&set.features, &target, gbm, loss, seeds.seed(purpose::GBM, k as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TsgbmEstimator {
        format: ESTIMATOR_FORMAT.into(),
        version: ESTIMATOR_VERSION,
        mechanism_id: mechanism.id(),
        parameter_names: prior.names.clone(),
        compressor: compressor.clone(),
        features,
        models,
        config_fingerprint: None,
    })
}

/// Monte Carlo estimate of the per-dimension MSE at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub theta: Vec<f64>,
    pub names: Vec<String>,
    pub mse: Vec<f64>,
    pub mc: usize,
    pub master_seed: u64,
}

/// Simulates `mc` fresh sequences at `theta_test` and averages the squared
/// estimation error per dimension.
pub fn evaluate_mse<E: Estimator + ?Sized, M: Mechanism + ?Sized>(
    estimator: &E,
    mechanism: &M,
    theta_test: &ParameterVector,
    mc: usize,
    seed: u64,
) -> Result<MseReport> {
    if mc == 0 {
        return Err(Error::domain("MC replication count must be at least 1"));
    }
    let d = theta_test.dims();
    if estimator.dims() != d || mechanism.dims() != d {
        return Err(Error::domain(format!(
            "dimension mismatch: theta {d}, estimator {}, mechanism {}",
            estimator.dims(),
            mechanism.dims()
        )));
    }
    let seeds = SeedPolicy::new(seed);
    let errors: Vec<Vec<f64>> = (0..mc)
        .into_par_iter()
        .map(|m| {
            let y = mechanism.simulate(&theta_test.values, seeds.seed(purpose::EVAL, m as u64))?;
            let est = estimator.estimate(&y)?;
            Ok(est
                .iter()
                .zip(&theta_test.values)
                .map(|(e, t)| (e - t) * (e - t))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; d];
    for e in &errors {
        for k in 0..d {
            sum[k] += e[k];
        }
    }
    Ok(MseReport {
        theta: theta_test.values.clone(),
        names: theta_test.names.clone(),
        mse: sum.into_iter().map(|s| s / mc as f64).collect(),
        mc,
        master_seed: seed,
    })
}

/// Fresh prior draws paired with their estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
}

pub fn scatter<E: Estimator + ?Sized, M: Mechanism + ?Sized>(
    estimator: &E,
    mechanism: &M,
    prior: &PriorSpec,
    m_test: usize,
    seed: u64,
) -> Result<Vec<ScatterPoint>> {
    let seeds = SeedPolicy::new(seed);
    let truths = sample_prior(prior, m_test, seeds.seed(purpose::TEST_PRIOR, 0))?;
    truths
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| {
            let y = mechanism.simulate(&p.values, seeds.seed(purpose::TEST_SIM, i as u64))?;
            Ok(ScatterPoint {
                estimate: estimator.estimate(&y)?,
                truth: p.values,
            })
        })
        .collect()
}

/// Least-squares line `estimate = slope * truth + intercept` and its R^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared: sxy * sxy / (sxx * syy),
    }
}
