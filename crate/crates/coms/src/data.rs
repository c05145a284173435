//! Synthetic 2D spiral benchmark: ground-truth reward, dataset generator,
//! and the uniform prior the samplers start from.
//!
//! The reward peaks at the origin while the data manifold (a single-arm
//! spiral) stays clear of it, so the highest-reward point is never a valid
//! design. That tension is the whole point of the benchmark.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_json_records;
use crate::Vec2;

/// Ground-truth reward `sum_i exp(-x_i^2)`, maximized at the origin with
/// value 2 and decaying to 0 away from it.
pub fn ground_truth_reward(x: Vec2) -> f64 {
    (-x[0] * x[0]).exp() + (-x[1] * x[1]).exp()
}

/// One offline observation: a 2D design and its ground-truth reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledPoint {
    pub x: Vec2,
    pub y: f64,
}

/// Parameters of the spiral data distribution. The centerline is the
/// Archimedean arc `r = radius_coef * t` for `t` in `[t_min, t_max]`;
/// observations add isotropic Gaussian jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpiralSpec {
    pub n: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub radius_coef: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SpiralSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            t_min: 2.0,
            t_max: 12.0,
            radius_coef: 0.15,
            noise_std: 0.025,
            seed: 0,
        }
    }
}

impl SpiralSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_min >= self.t_max || !self.t_min.is_finite() || !self.t_max.is_finite() {
            return Err(Error::Config(format!(
                "spiral needs t_min < t_max, got {} >= {}",
                self.t_min, self.t_max
            )));
        }
        if self.radius_coef <= 0.0 || !self.radius_coef.is_finite() {
            return Err(Error::Config("spiral radius_coef must be > 0".into()));
        }
        if self.noise_std < 0.0 || !self.noise_std.is_finite() {
            return Err(Error::Config("spiral noise_std must be >= 0".into()));
        }
        Ok(())
    }

    /// Noise-free point on the spiral centerline at parameter `t`.
    pub fn centerline(&self, t: f64) -> Vec2 {
        let r = self.radius_coef * t;
        [r * t.cos(), r * t.sin()]
    }
}

/// Draws the offline dataset: `t ~ U[t_min, t_max]`, jittered centerline
/// point, labeled with the exact ground-truth reward. Deterministic given
/// `spec.seed`.
pub fn spiral_generate(spec: &SpiralSpec) -> Result<Vec<LabeledPoint>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let t = rng.gen_range(spec.t_min..spec.t_max);
        let center = spec.centerline(t);
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        let x = [
            center[0] + spec.noise_std * z0,
            center[1] + spec.noise_std * z1,
        ];
        points.push(LabeledPoint {
            x,
            y: ground_truth_reward(x),
        });
    }
    Ok(points)
}

/// Uniform box prior over the design space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSpec {
    pub low: f64,
    pub high: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            low: -1.5,
            high: 2.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.low >= self.high || !self.low.is_finite() || !self.high.is_finite() {
            return Err(Error::Config(format!(
                "prior needs low < high, got [{}, {}]",
                self.low, self.high
            )));
        }
        Ok(())
    }

    pub fn sample_one<R: Rng>(&self, rng: &mut R) -> Vec2 {
        [
            rng.gen_range(self.low..self.high),
            rng.gen_range(self.low..self.high),
        ]
    }
}

/// `n` i.i.d. draws from the prior box; deterministic given `seed`.
pub fn prior_sample(spec: &PriorSpec, n: usize, seed: u64) -> Result<Vec<Vec2>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| spec.sample_one(&mut rng)).collect())
}

/// Writes a dataset as a JSON array of `{"x": [f, f], "y": f}` records,
/// one per line. Round-trips losslessly at double precision.
pub fn write_dataset(path: &Path, points: &[LabeledPoint]) -> Result<()> {
    write_json_records(path, points)
}

/// Reads a dataset written by [`write_dataset`]; a malformed record fails
/// with the index of the offending entry.
pub fn read_dataset(path: &Path) -> Result<Vec<LabeledPoint>> {
    let text = fs::read_to_string(path)?;
    let raw: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        index: 0,
        message: format!("expected a JSON array of records: {e}"),
    })?;
    raw.into_iter()
        .enumerate()
        .map(|(index, value)| {
            serde_json::from_value::<LabeledPoint>(value).map_err(|e| Error::Parse {
                index,
                message: e.to_string(),
            })
        })
        .collect()
}
