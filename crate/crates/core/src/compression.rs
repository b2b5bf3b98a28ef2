//! First stage: compress a long sequence into a handful of statistics and
//! optionally expand them with monomial features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ObservationSequence;

/// Empirical quantiles at `k / (n + 1)`, `k = 1..=n`.
///
/// Uses linear interpolation between order statistics at fractional rank
/// `(N - 1) p` (the usual "type 7" definition).
pub fn quantiles(y: &ObservationSequence, n: usize) -> Result<Vec<f64>> {
    if y.samples.is_empty() {
        return Err(Error::domain("cannot take quantiles of an empty sequence"));
    }
    if n == 0 || n > y.len() {
        return Err(Error::domain(format!(
            "need 1 <= n <= N for quantiles, got n = {n}, N = {}",
            y.len()
        )));
    }
    let mut sorted = y.samples.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok((1..=n)
        .map(|k| interpolate_sorted(&sorted, k as f64 / (n + 1) as f64))
        .collect())
}

fn interpolate_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Least-squares AR(`n`) coefficients of `y`, intercept first when requested.
///
/// Regresses `y(k)` on `(1, y(k-1), ..., y(k-n))` over every `k` with a full
/// lag window. The normal equations are solved by a diagonally pivoted
/// Cholesky factorization, which also reveals rank deficiency.
pub fn ar_fit(y: &ObservationSequence, n: usize, include_intercept: bool) -> Result<Vec<f64>> {
    let s = &y.samples;
    if n == 0 {
        return Err(Error::domain("AR order must be at least 1"));
    }
    if s.len() <= 10 * n {
        return Err(Error::domain(format!(
            "AR({n}) fit needs more than {} samples, got {}",
            10 * n,
            s.len()
        )));
    }
    let p = n + usize::from(include_intercept);
    let off = usize::from(include_intercept);
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut row = vec![0.0; p];
    for k in n..s.len() {
        if include_intercept {
            row[0] = 1.0;
        }
        for j in 0..n {
            row[off + j] = s[k - 1 - j];
        }
        for i in 0..p {
            rhs[i] += row[i] * s[k];
            for j in 0..=i {
                gram[i * p + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[j * p + i] = gram[i * p + j];
        }
    }
    solve_spd_pivoted(&gram, &rhs, p)
}

/// Solves `A x = b` for symmetric positive semi-definite `A` (row-major, `p x p`).
fn solve_spd_pivoted(a: &[f64], b: &[f64], p: usize) -> Result<Vec<f64>> {
    let mut l = a.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let max_diag = (0..p).map(|i| a[i * p + i]).fold(0.0f64, f64::max);
    let tol = max_diag * 1e-12 * p as f64;
    for k in 0..p {
        // pivot on the largest remaining diagonal
        let (piv, &dmax) = (k..p)
            .map(|i| (i, &l[i * p + i]))
            .max_by(|x, y| x.1.total_cmp(y.1).then(y.0.cmp(&x.0)))
            .unwrap();
        if !(dmax > tol) {
            return Err(Error::DegenerateFit { rank: k, expected: p });
        }
        if piv != k {
            perm.swap(k, piv);
            for c in 0..p {
                l.swap(k * p + c, piv * p + c);
            }
            for r in 0..p {
                l.swap(r * p + k, r * p + piv);
            }
        }
        let d = l[k * p + k].sqrt();
        l[k * p + k] = d;
        for i in k + 1..p {
            l[i * p + k] /= d;
        }
        for j in k + 1..p {
            for i in j..p {
                let v = l[i * p + j] - l[i * p + k] * l[j * p + k];
                l[i * p + j] = v;
                l[j * p + i] = v;
            }
        }
    }
    // forward: L z = P b
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut acc = b[perm[i]];
        for j in 0..i {
            acc -= l[i * p + j] * z[j];
        }
        z[i] = acc / l[i * p + i];
    }
    // backward: L^T w = z
    let mut w = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = z[i];
        for j in i + 1..p {
            acc -= l[j * p + i] * w[j];
        }
        w[i] = acc / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in 0..p {
        x[perm[i]] = w[i];
    }
    Ok(x)
}

/// `ln(y^2)` elementwise.
pub fn log_square_transform(y: &ObservationSequence) -> Result<ObservationSequence> {
    let mut out = Vec::with_capacity(y.len());
    for (k, &v) in y.samples.iter().enumerate() {
        if v == 0.0 {
            return Err(Error::domain(format!("log-square transform of zero at index {k}")));
        }
        out.push((v * v).ln());
    }
    ObservationSequence::new(out, y.mechanism_id.clone())
}

/// Monomial expansion of degree at most `degree` (1 or 2), without the constant.
///
/// Order: `alpha_1..alpha_n`, then `alpha_1^2..alpha_n^2`, then the products
/// `alpha_i * alpha_j` for `i < j` in lexicographic order.
pub fn monomial_features(alpha: &[f64], degree: u32) -> Vec<f64> {
    let n = alpha.len();
    let mut out = Vec::with_capacity(feature_count(n, degree));
    out.extend_from_slice(alpha);
    if degree >= 2 {
        out.extend(alpha.iter().map(|a| a * a));
        for i in 0..n {
            for j in i + 1..n {
                out.push(alpha[i] * alpha[j]);
            }
        }
    }
    out
}

/// Length of [`monomial_features`] output.
pub fn feature_count(n: usize, degree: u32) -> usize {
    if degree >= 2 {
        n + n + n * n.saturating_sub(1) / 2
    } else {
        n
    }
}

/// Logs of positive statistics followed by their pairwise differences.
///
/// Order: `ln alpha_1..ln alpha_n`, then `ln alpha_j - ln alpha_i` for `i < j`
/// in lexicographic order. The differences are invariant to rescaling `y`.
pub fn log_spread_features(alpha: &[f64]) -> Result<Vec<f64>> {
    let n = alpha.len();
    let mut out = Vec::with_capacity(n + n * n.saturating_sub(1) / 2);
    for (k, &a) in alpha.iter().enumerate() {
        if !(a > 0.0) {
            return Err(Error::domain(format!("log-spread features need positive statistics, alpha[{k}] = {a}")));
        }
        out.push(a.ln());
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(out[j] - out[i]);
        }
    }
    Ok(out)
}

/// Feature expansion `phi` applied to the compressed statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureMap {
    Monomial { degree: u32 },
    LogSpread,
}

impl Default for FeatureMap {
    fn default() -> Self {
        FeatureMap::Monomial { degree: 1 }
    }
}

impl FeatureMap {
    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureMap::Monomial { degree } if !(1..=2).contains(degree) => {
                Err(Error::config("features.degree", "must be 1 or 2"))
            }
            _ => Ok(()),
        }
    }

    pub fn output_len(&self, n: usize) -> usize {
        match *self {
            FeatureMap::Monomial { degree } => feature_count(n, degree),
            FeatureMap::LogSpread => n + n * n.saturating_sub(1) / 2,
        }
    }

    pub fn expand(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        match *self {
            FeatureMap::Monomial { degree } => Ok(monomial_features(alpha, degree)),
            FeatureMap::LogSpread => log_spread_features(alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressorKind {
    Quantiles,
    ArCoeffs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressorSpec {
    pub kind: CompressorKind,
    pub n: usize,
    #[serde(default)]
    pub include_intercept: bool,
}

impl CompressorSpec {
    pub fn validate(&self, sequence_len: usize) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("compressor.n", "must be at least 1"));
        }
        match self.kind {
            CompressorKind::Quantiles if self.n > sequence_len => Err(Error::config(
                "compressor.n",
                format!("{} quantiles from {sequence_len} samples", self.n),
            )),
            CompressorKind::ArCoeffs if sequence_len <= 10 * self.n => Err(Error::config(
                "compressor.n",
                format!("AR({}) needs more than {} samples", self.n, 10 * self.n),
            )),
            CompressorKind::Quantiles if self.include_intercept => Err(Error::config(
                "compressor.include_intercept",
                "only meaningful for ar_coeffs",
            )),
            _ => Ok(()),
        }
    }

    /// Number of statistics produced.
    pub fn output_len(&self) -> usize {
        match self.kind {
            CompressorKind::Quantiles => self.n,
            CompressorKind::ArCoeffs => self.n + usize::from(self.include_intercept),
        }
    }

    pub fn compress(&self, y: &ObservationSequence) -> Result<Vec<f64>> {
        match self.kind {
            CompressorKind::Quantiles => quantiles(y, self.n),
            CompressorKind::ArCoeffs => ar_fit(y, self.n, self.include_intercept),
        }
    }
}

/// Compressed statistics together with their feature expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub alpha: Vec<f64>,
    pub phi: Vec<f64>,
}

impl FeatureVector {
    pub fn build(spec: &CompressorSpec, features: &FeatureMap, y: &ObservationSequence) -> Result<Self> {
        let alpha = spec.compress(y)?;
        if alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("compression produced a non-finite statistic"));
        }
        let phi = features.expand(&alpha)?;
        Ok(Self { alpha, phi })
    }
}
