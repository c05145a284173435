//! The three sampling chains over a learned scalar field, the geometric
//! step-size schedule they share, and seeded batch fan-out.
//!
//! Gradient ascent injects no noise and converges to modes; Langevin MCMC
//! adds `eps_t * z_t` noise and (with an annealed schedule) draws from the
//! field's induced density; the tilted variant adds `w * grad f_oracle` to
//! the drift, sampling the density reweighted by `exp(w * f_oracle)`. The
//! tilt normalizer drops out of the gradient and is never computed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PriorSpec;
use crate::error::{Error, Result};
use crate::nnet::ScalarField;
use crate::Vec2;

/// Chain length used at generation time.
pub const DEFAULT_GENERATION_STEPS: usize = 50_000;
/// Annealing endpoints of the generation-time noise schedule.
pub const DEFAULT_GENERATION_EPS: (f64, f64) = (0.1, 1e-5);
/// Fixed step size of the gradient-ascent sampler.
pub const DEFAULT_ASCENT_EPS: f64 = 0.01;

/// Geometric sequence `s_i = start * (end/start)^(i/(steps-1))`.
///
/// Both endpoints are hit exactly and the ratio between consecutive entries
/// is constant, matching `numpy.geomspace`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct GeometricSchedule {
    start: f64,
    end: f64,
    steps: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    start: f64,
    end: f64,
    steps: usize,
}

impl TryFrom<RawSchedule> for GeometricSchedule {
    type Error = Error;
    fn try_from(raw: RawSchedule) -> Result<Self> {
        GeometricSchedule::new(raw.start, raw.end, raw.steps)
    }
}

impl From<GeometricSchedule> for RawSchedule {
    fn from(s: GeometricSchedule) -> Self {
        RawSchedule {
            start: s.start,
            end: s.end,
            steps: s.steps,
        }
    }
}

impl GeometricSchedule {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if start <= 0.0 || end <= 0.0 || !start.is_finite() || !end.is_finite() {
            return Err(Error::Config(format!(
                "geometric schedule needs positive finite endpoints, got {start} -> {end}"
            )));
        }
        if steps < 1 {
            return Err(Error::Config("geometric schedule needs steps >= 1".into()));
        }
        if steps == 1 && start != end {
            return Err(Error::Config(
                "a 1-step geometric schedule requires start == end".into(),
            ));
        }
        Ok(Self { start, end, steps })
    }

    /// Default annealing schedule at generation time.
    pub fn generation_default() -> Self {
        Self::new(
            DEFAULT_GENERATION_EPS.0,
            DEFAULT_GENERATION_EPS.1,
            DEFAULT_GENERATION_STEPS,
        )
        .expect("default schedule is valid")
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `i`-th entry; endpoints are returned exactly.
    pub fn value(&self, i: usize) -> f64 {
        assert!(i < self.steps, "schedule index {i} out of {}", self.steps);
        if i == 0 {
            self.start
        } else if i == self.steps - 1 {
            self.end
        } else {
            let frac = i as f64 / (self.steps - 1) as f64;
            self.start * (self.end / self.start).powf(frac)
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// Noiseless ascent `x <- x + eps * grad f(x)`; returns the final iterate.
pub fn gradient_ascent_chain(
    field: &dyn ScalarField,
    x0: Vec2,
    eps: f64,
    steps: usize,
) -> Result<Vec2> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::Config(format!("ascent step size must be > 0, got {eps}")));
    }
    let mut x = x0;
    for step in 0..steps {
        let g = field.grad(x);
        x[0] += eps * g[0];
        x[1] += eps * g[1];
        if !x[0].is_finite() || !x[1].is_finite() {
            return Err(Error::SamplerDiverged { step });
        }
    }
    Ok(x)
}

/// Langevin MCMC `x <- x + (eps_t^2 / 2) grad f(x) + eps_t z_t` with
/// `z_t ~ N(0, I)`; one schedule entry per step.
pub fn langevin_chain<R: Rng>(
    field: &dyn ScalarField,
    x0: Vec2,
    schedule: &[f64],
    rng: &mut R,
) -> Result<Vec2> {
    let mut x = x0;
    for (step, &eps) in schedule.iter().enumerate() {
        let g = field.grad(x);
        let half = 0.5 * eps * eps;
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        x[0] += half * g[0] + eps * z0;
        x[1] += half * g[1] + eps * z1;
        if !x[0].is_finite() || !x[1].is_finite() {
            return Err(Error::SamplerDiverged { step });
        }
    }
    Ok(x)
}

/// Langevin MCMC on the tilted density: the drift gains `w * grad f_oracle`,
/// steering chains toward designs the oracle scores highly.
pub fn tilted_langevin_chain<R: Rng>(
    energy_field: &dyn ScalarField,
    oracle_field: &dyn ScalarField,
    tilt_weight: f64,
    x0: Vec2,
    schedule: &[f64],
    rng: &mut R,
) -> Result<Vec2> {
    if tilt_weight < 0.0 || tilt_weight.is_nan() {
        return Err(Error::Config(format!(
            "tilt weight must be >= 0, got {tilt_weight}"
        )));
    }
    let mut x = x0;
    for (step, &eps) in schedule.iter().enumerate() {
        let g = energy_field.grad(x);
        let go = oracle_field.grad(x);
        let half = 0.5 * eps * eps;
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        x[0] += half * (tilt_weight * go[0] + g[0]) + eps * z0;
        x[1] += half * (tilt_weight * go[1] + g[1]) + eps * z1;
        if !x[0].is_finite() || !x[1].is_finite() {
            return Err(Error::SamplerDiverged { step });
        }
    }
    Ok(x)
}

/// Which chain to run and with what step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerKind {
    GradientAscent { eps: f64, steps: usize },
    Langevin { schedule: GeometricSchedule },
    TiltedLangevin {
        schedule: GeometricSchedule,
        tilt_weight: f64,
    },
}

/// Where chains start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainInit {
    /// Draw the start point from a uniform box prior.
    Prior(PriorSpec),
    /// Start chain `i` at the `i`-th supplied data point (mod length).
    FromData,
}

/// Full description of a batched sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub sampler: SamplerKind,
    pub init: ChainInit,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.sampler {
            SamplerKind::GradientAscent { eps, .. } => {
                if *eps <= 0.0 || !eps.is_finite() {
                    return Err(Error::Config(format!(
                        "ascent step size must be > 0, got {eps}"
                    )));
                }
            }
            SamplerKind::TiltedLangevin { tilt_weight, .. } => {
                if *tilt_weight < 0.0 || tilt_weight.is_nan() {
                    return Err(Error::Config(format!(
                        "tilt weight must be >= 0, got {tilt_weight}"
                    )));
                }
            }
            SamplerKind::Langevin { .. } => {}
        }
        if let ChainInit::Prior(prior) = &self.init {
            prior.validate()?;
        }
        Ok(())
    }
}

/// Splitmix64 finalizer; mixes a salt into a base seed so that derived
/// streams do not collide.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent RNG for one chain: every chain shares the seed but owns a
/// ChaCha stream, so batch results do not depend on scheduling or thread
/// count.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Runs `n` independent chains and returns their final iterates in chain
/// order. `oracle_field` is required for the tilted sampler, `data` for
/// `ChainInit::FromData`. Chains run in parallel; output is a pure function
/// of the arguments.
pub fn sample_batch(
    spec: &SamplerSpec,
    energy_field: &dyn ScalarField,
    oracle_field: Option<&dyn ScalarField>,
    n: usize,
    data: Option<&[Vec2]>,
) -> Result<Vec<Vec2>> {
    spec.validate()?;
    if matches!(spec.sampler, SamplerKind::TiltedLangevin { .. }) && oracle_field.is_none() {
        return Err(Error::Usage(
            "tilted_langevin sampler requires an oracle field".into(),
        ));
    }
    let init_data = match &spec.init {
        ChainInit::FromData => match data {
            Some(d) if !d.is_empty() => Some(d),
            _ => {
                return Err(Error::Usage(
                    "init_from_data requires a nonempty data set".into(),
                ))
            }
        },
        ChainInit::Prior(_) => None,
    };
    let schedule_values = match &spec.sampler {
        SamplerKind::Langevin { schedule } | SamplerKind::TiltedLangevin { schedule, .. } => {
            schedule.values()
        }
        SamplerKind::GradientAscent { .. } => Vec::new(),
    };

    let results: Vec<Result<Vec2>> = (0..n)
        .into_par_iter()
        .map(|chain| {
            let mut rng = chain_rng(spec.seed, chain as u64);
            let x0 = match (&spec.init, init_data) {
                (ChainInit::Prior(prior), _) => prior.sample_one(&mut rng),
                (ChainInit::FromData, Some(d)) => d[chain % d.len()],
                (ChainInit::FromData, None) => unreachable!("validated above"),
            };
            let run = match &spec.sampler {
                SamplerKind::GradientAscent { eps, steps } => {
                    gradient_ascent_chain(energy_field, x0, *eps, *steps)
                }
                SamplerKind::Langevin { .. } => {
                    langevin_chain(energy_field, x0, &schedule_values, &mut rng)
                }
                SamplerKind::TiltedLangevin { tilt_weight, .. } => tilted_langevin_chain(
                    energy_field,
                    oracle_field.expect("checked above"),
                    *tilt_weight,
                    x0,
                    &schedule_values,
                    &mut rng,
                ),
            };
            run.map_err(|e| Error::Chain {
                chain,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// A persisted batch of samples plus enough metadata to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSet {
    pub spec: SamplerSpec,
    pub seed: u64,
    pub checkpoint_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_checkpoint_hash: Option<String>,
    pub samples: Vec<Vec2>,
}

impl Default for SampleSet {
    fn default() -> Self {
        Self {
            spec: SamplerSpec {
                sampler: SamplerKind::Langevin {
                    schedule: GeometricSchedule::generation_default(),
                },
                init: ChainInit::Prior(PriorSpec::default()),
                seed: 0,
            },
            seed: 0,
            checkpoint_hash: String::new(),
            oracle_checkpoint_hash: None,
            samples: Vec::new(),
        }
    }
}

impl SampleSet {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
