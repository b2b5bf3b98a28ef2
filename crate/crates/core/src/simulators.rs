//! Data-generating mechanisms and prior sampling.
//!
//! Three mechanisms are provided:
//!
//! * `weibull`: i.i.d. Weibull(scale, shape) draws by inverse transform.
//! * `state_space_1p`: a two-state linear Gaussian system driven by one
//!   parameter `a`, observed through `y = a*x1 + x2 + v2`.
//! * `stoch_vol`: a log-AR(1) stochastic volatility model, optionally returned
//!   in the additive-noise form `ln(y^2) = x + ln(r^2)`.
//!
//! Dynamical mechanisms start from a fixed initial state and discard
//! [`DEFAULT_BURN_IN`] steps before recording.

use rand::Rng as _;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{Rng, SeedPolicy};
use crate::types::{ObservationSequence, ParameterSpace, ParameterVector};

pub const DEFAULT_BURN_IN: usize = 200;

/// Standard deviation of the observation noise `v2` of the state-space model.
pub const STATE_SPACE_OBS_STD: f64 = 0.1;

/// Source of standard-normal innovations, one logical channel per noise term.
///
/// Simulators draw channels in a fixed order within each time step, so a
/// scripted source can reproduce any trajectory exactly.
pub trait NoiseSource {
    fn standard_normal(&mut self, channel: usize) -> f64;
}

/// Pseudo-random Gaussian noise on every channel.
pub struct GaussianNoise(pub Rng);

impl NoiseSource for GaussianNoise {
    #[inline]
    fn standard_normal(&mut self, _channel: usize) -> f64 {
        self.0.sample(StandardNormal)
    }
}

/// All channels silent.
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_normal(&mut self, _channel: usize) -> f64 {
        0.0
    }
}

/// Wraps a source and silences selected channels.
pub struct MaskedNoise<N> {
    pub inner: N,
    pub silenced: Vec<usize>,
}

impl<N: NoiseSource> NoiseSource for MaskedNoise<N> {
    fn standard_normal(&mut self, channel: usize) -> f64 {
        // Always draw so that unmasked channels see the same stream.
        let v = self.inner.standard_normal(channel);
        if self.silenced.contains(&channel) {
            0.0
        } else {
            v
        }
    }
}

/// Replays fixed sequences per channel; exhausted channels yield zero.
pub struct ScriptedNoise {
    channels: Vec<Vec<f64>>,
    cursor: Vec<usize>,
}

impl ScriptedNoise {
    pub fn new(channels: Vec<Vec<f64>>) -> Self {
        let cursor = vec![0; channels.len()];
        Self { channels, cursor }
    }
}

impl NoiseSource for ScriptedNoise {
    fn standard_normal(&mut self, channel: usize) -> f64 {
        let Some(seq) = self.channels.get(channel) else {
            return 0.0;
        };
        let v = seq.get(self.cursor[channel]).copied().unwrap_or(0.0);
        self.cursor[channel] += 1;
        v
    }
}

/// Draws `n` i.i.d. Weibull(`eta`, `gamma`) variates.
pub fn weibull_sample(eta: f64, gamma: f64, n: usize, seed: u64) -> Result<ObservationSequence> {
    check_weibull(eta, gamma)?;
    if n == 0 {
        return Err(Error::domain("sequence length must be at least 1"));
    }
    let mut rng = <Rng as rand::SeedableRng>::seed_from_u64(seed);
    let inv_shape = gamma.recip();
    let samples = (0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            eta * (-u.ln()).powf(inv_shape)
        })
        .collect();
    ObservationSequence::new(samples, "weibull")
}

fn check_weibull(eta: f64, gamma: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::domain(format!("Weibull scale must be positive, got {eta}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("Weibull shape must be positive, got {gamma}")));
    }
    Ok(())
}

/// Options for the dynamical simulators.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub burn_in: usize,
    /// Overrides the default initial state.
    pub initial_state: Option<Vec<f64>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            burn_in: DEFAULT_BURN_IN,
            initial_state: None,
        }
    }
}

/// Simulates the single-parameter state-space model with Gaussian noise.
pub fn state_space_simulate(a: f64, n: usize, seed: u64) -> Result<ObservationSequence> {
    let mut noise = GaussianNoise(<Rng as rand::SeedableRng>::seed_from_u64(seed));
    state_space_simulate_with(a, n, &SimOptions::default(), &mut noise)
}

/// Noise channels: 0 = `v11`, 1 = `v12`, 2 = `v2` (drawn in that order).
pub fn state_space_simulate_with(
    a: f64,
    n: usize,
    opts: &SimOptions,
    noise: &mut impl NoiseSource,
) -> Result<ObservationSequence> {
    if n == 0 {
        return Err(Error::domain("sequence length must be at least 1"));
    }
    if !a.is_finite() {
        return Err(Error::domain("parameter `a` is not finite"));
    }
    let (mut x1, mut x2) = match opts.initial_state.as_deref() {
        None => (0.0, 0.0),
        Some([x1, x2]) => (*x1, *x2),
        Some(_) => return Err(Error::domain("state-space initial state needs two entries")),
    };
    let a2 = a * a;
    let mut out = Vec::with_capacity(n);
    for k in 0..opts.burn_in + n {
        let v11 = noise.standard_normal(0);
        let v12 = noise.standard_normal(1);
        let v2 = STATE_SPACE_OBS_STD * noise.standard_normal(2);
        if k >= opts.burn_in {
            out.push(a * x1 + x2 + v2);
        }
        let next_x1 = a * x1 + v11;
        let next_x2 = x1 + a2 * x2 + v12;
        x1 = next_x1;
        x2 = next_x2;
    }
    ObservationSequence::new(out, "state_space_1p")
        .map_err(|e| Error::domain(format!("state-space output diverged for a = {a}: {e}")))
}

/// Full trace of a stochastic-volatility run.
#[derive(Debug, Clone)]
pub struct StochVolTrace {
    pub latent: Vec<f64>,
    pub shocks: Vec<f64>,
    pub observed: Vec<f64>,
}

/// Simulates the stochastic-volatility model; with `transformed` the output is
/// `ln(y^2)`.
pub fn stoch_vol_simulate(
    a: f64,
    b: f64,
    n: usize,
    seed: u64,
    transformed: bool,
) -> Result<ObservationSequence> {
    let mut noise = GaussianNoise(<Rng as rand::SeedableRng>::seed_from_u64(seed));
    let trace = stoch_vol_trace(a, b, n, &SimOptions::default(), &mut noise)?;
    finish_stoch_vol(trace, transformed)
}

pub(crate) fn finish_stoch_vol(trace: StochVolTrace, transformed: bool) -> Result<ObservationSequence> {
    if transformed {
        let y = ObservationSequence::new(trace.observed, "stoch_vol")?;
        let mut t = crate::compression::log_square_transform(&y)?;
        t.mechanism_id = "stoch_vol_transformed".into();
        Ok(t)
    } else {
        ObservationSequence::new(trace.observed, "stoch_vol")
    }
}

/// Noise channels: 0 = `r` (observation shock), 1 = `v` (process noise).
pub fn stoch_vol_trace(
    a: f64,
    b: f64,
    n: usize,
    opts: &SimOptions,
    noise: &mut impl NoiseSource,
) -> Result<StochVolTrace> {
    if n == 0 {
        return Err(Error::domain("sequence length must be at least 1"));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::domain("stochastic-volatility parameters must be finite"));
    }
    let mut x = match opts.initial_state.as_deref() {
        None if (b.abs() < 1.0) => a / (1.0 - b),
        None => 0.0,
        Some([x0]) => *x0,
        Some(_) => return Err(Error::domain("stochastic-volatility initial state needs one entry")),
    };
    let mut trace = StochVolTrace {
        latent: Vec::with_capacity(n),
        shocks: Vec::with_capacity(n),
        observed: Vec::with_capacity(n),
    };
    for k in 0..opts.burn_in + n {
        let r = noise.standard_normal(0);
        let v = noise.standard_normal(1);
        if k >= opts.burn_in {
            let y = (0.5 * x).exp() * r;
            if !y.is_finite() {
                return Err(Error::domain(format!(
                    "stochastic-volatility output diverged for (a, b) = ({a}, {b})"
                )));
            }
            trace.latent.push(x);
            trace.shocks.push(r);
            trace.observed.push(y);
        }
        x = a + b * x + v;
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Weibull,
    #[serde(rename = "state_space_1p")]
    StateSpace1p,
    StochVol,
}

impl MechanismKind {
    pub fn dims(self) -> usize {
        match self {
            MechanismKind::Weibull | MechanismKind::StochVol => 2,
            MechanismKind::StateSpace1p => 1,
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            MechanismKind::Weibull => &["eta", "gamma"],
            MechanismKind::StateSpace1p => &["a"],
            MechanismKind::StochVol => &["a", "b"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Weibull => "weibull",
            MechanismKind::StateSpace1p => "state_space_1p",
            MechanismKind::StochVol => "stoch_vol",
        }
    }
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_true() -> bool {
    true
}

/// A parametric simulator `theta -> y`.
pub trait Mechanism: Sync {
    fn id(&self) -> String;
    fn dims(&self) -> usize;
    fn simulate(&self, theta: &[f64], seed: u64) -> Result<ObservationSequence>;
}

/// Declarative description of one of the built-in mechanisms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    /// Recorded sequence length.
    pub n: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Stochastic volatility only: return `ln(y^2)` instead of `y`.
    #[serde(default = "default_true")]
    pub transformed: bool,
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind, n: usize) -> Self {
        Self {
            kind,
            n,
            burn_in: DEFAULT_BURN_IN,
            transformed: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("mechanism.n", "sequence length must be at least 1"));
        }
        Ok(())
    }

    fn opts(&self) -> SimOptions {
        SimOptions {
            burn_in: self.burn_in,
            initial_state: None,
        }
    }
}

impl Mechanism for MechanismSpec {
    fn id(&self) -> String {
        self.kind.as_str().to_string()
    }

    fn dims(&self) -> usize {
        self.kind.dims()
    }

    fn simulate(&self, theta: &[f64], seed: u64) -> Result<ObservationSequence> {
        if theta.len() != self.dims() {
            return Err(Error::domain(format!(
                "{} expects {} parameters, got {}",
                self.kind.as_str(),
                self.dims(),
                theta.len()
            )));
        }
        let rng = <Rng as rand::SeedableRng>::seed_from_u64(seed);
        match self.kind {
            MechanismKind::Weibull => weibull_sample(theta[0], theta[1], self.n, seed),
            MechanismKind::StateSpace1p => {
                state_space_simulate_with(theta[0], self.n, &self.opts(), &mut GaussianNoise(rng))
            }
            MechanismKind::StochVol => {
                let trace =
                    stoch_vol_trace(theta[0], theta[1], self.n, &self.opts(), &mut GaussianNoise(rng))?;
                finish_stoch_vol(trace, self.transformed)
            }
        }
    }
}

/// Uniform prior over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub space: ParameterSpace,
    pub names: Vec<String>,
}

impl PriorSpec {
    pub fn new(space: ParameterSpace, names: Vec<String>) -> Result<Self> {
        if names.len() != space.dims() {
            return Err(Error::domain("prior names do not match space dimension"));
        }
        Ok(Self { space, names })
    }

    pub fn draw(&self, rng: &mut Rng) -> Vec<f64> {
        self.space
            .lo
            .iter()
            .zip(&self.space.hi)
            .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

/// Draws `m` i.i.d. points from `prior` using a single stream seeded by `seed`.
pub fn sample_prior(prior: &PriorSpec, m: usize, seed: u64) -> Result<Vec<ParameterVector>> {
    if m == 0 {
        return Err(Error::config("prior", "sample count must be at least 1"));
    }
    let mut rng = <Rng as rand::SeedableRng>::seed_from_u64(seed);
    (0..m)
        .map(|_| ParameterVector::new(prior.draw(&mut rng), prior.names.clone()))
        .collect()
}

/// Simulates one sequence per parameter vector with per-index derived seeds.
pub fn simulate_batch<M: Mechanism + ?Sized>(
    mechanism: &M,
    thetas: &[Vec<f64>],
    seeds: SeedPolicy,
    purpose: &str,
) -> Vec<Result<ObservationSequence>> {
    use rayon::prelude::*;
    thetas
        .par_iter()
        .enumerate()
        .map(|(i, theta)| mechanism.simulate(theta, seeds.seed(purpose, i as u64)))
        .collect()
}
