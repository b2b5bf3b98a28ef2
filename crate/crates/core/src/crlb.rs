//! Cramér-Rao lower bounds for i.i.d. Weibull samples.
//!
//! The Fisher information is integrated numerically. With `t = ln(y / eta)`
//! and `z = exp(gamma t)` the density element is `gamma z e^{-z} dt` and the
//! scores are
//!
//! ```text
//! d/d eta   ln f = (gamma / eta) (z - 1)
//! d/d gamma ln f = 1 / gamma + t (1 - z)
//! ```
//!
//! so every integrand is smooth in `t` and decays fast in both tails.

use crate::error::{Error, Result};

/// 2x2 Fisher information of a single Weibull(`eta`, `gamma`) observation,
/// ordered `(eta, gamma)`.
pub fn weibull_fisher_information(eta: f64, gamma: f64) -> Result<[[f64; 2]; 2]> {
    if !(eta > 0.0 && eta.is_finite() && gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!(
            "Weibull parameters must be positive, got ({eta}, {gamma})"
        )));
    }
    // z ranges over [e^-60, 745]: beyond that the density is below 1e-300.
    let lo = -60.0 / gamma;
    let hi = 745f64.ln() / gamma;
    let density = |t: f64| {
        let z = (gamma * t).exp();
        gamma * z * (-z).exp()
    };
    let score_eta = |t: f64| (gamma / eta) * ((gamma * t).exp() - 1.0);
    let score_gamma = |t: f64| gamma.recip() + t * (1.0 - (gamma * t).exp());

    let tol = 1e-14;
    let i_ee = integrate(|t| density(t) * score_eta(t).powi(2), lo, hi, tol);
    let i_eg = integrate(|t| density(t) * score_eta(t) * score_gamma(t), lo, hi, tol);
    let i_gg = integrate(|t| density(t) * score_gamma(t).powi(2), lo, hi, tol);
    Ok([[i_ee, i_eg], [i_eg, i_gg]])
}

/// Asymptotic variance bounds `(eta, gamma)` for `n` i.i.d. observations:
/// the diagonal of the inverse Fisher information divided by `n`.
pub fn weibull_crlb(eta: f64, gamma: f64, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let [[a, b], [_, d]] = weibull_fisher_information(eta, gamma)?;
    let det = a * d - b * b;
    if !(det > 0.0) {
        return Err(Error::domain("Fisher information is singular"));
    }
    let n = n as f64;
    Ok((d / det / n, a / det / n))
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature with absolute-or-relative tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, err: f64, tol: f64, depth: u32) -> f64 {
        if err <= tol.max(tol * whole.abs()) || depth == 0 {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (l, el) = gk15(f, a, m);
        let (r, er) = gk15(f, m, b);
        rec(f, a, m, l, el, 0.5 * tol, depth - 1) + rec(f, m, b, r, er, 0.5 * tol, depth - 1)
    }
    let (whole, err) = gk15(&f, a, b);
    rec(&f, a, b, whole, err, tol, 40)
}
