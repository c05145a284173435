//! Sample-quality metrics: ground-truth reward, validity (distance to the
//! spiral centerline), and diversity.

use serde::{Deserialize, Serialize};

use crate::data::{ground_truth_reward, SpiralSpec};
use crate::error::{Error, Result};
use crate::Vec2;

/// Default distance threshold for calling a sample valid: 4x the data
/// noise, wide enough for on-manifold jitter and narrow enough to exclude
/// off-manifold shortcuts at this geometry.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.1;

const GRID_POINTS: usize = 10_000;

/// Summary statistics for a batch of generated samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub n_samples: usize,
    /// Ground-truth reward over all samples.
    pub mean_reward: f64,
    pub max_reward: f64,
    /// Fraction of samples within `threshold` of the spiral centerline.
    pub validity_rate: f64,
    /// Ground-truth reward over valid samples only; 0 when none are valid.
    pub mean_valid_reward: f64,
    /// Mean pairwise Euclidean distance.
    pub diversity: f64,
    pub threshold: f64,
}

impl EvalReport {
    pub fn to_json_string(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Distance from `x` to the noise-free spiral centerline, accurate to well
/// under 1e-4: a dense parameter grid brackets the minimum, then ternary
/// search refines it.
pub fn distance_to_spiral(x: Vec2, spec: &SpiralSpec) -> f64 {
    let dist_sq = |t: f64| {
        let c = spec.centerline(t);
        let d0 = x[0] - c[0];
        let d1 = x[1] - c[1];
        d0 * d0 + d1 * d1
    };
    let step = (spec.t_max - spec.t_min) / (GRID_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let d = dist_sq(spec.t_min + step * i as f64);
        if d < best {
            best = d;
            best_i = i;
        }
    }
    // The squared distance is smooth in t, so it is unimodal inside the
    // one-cell bracket around the grid argmin.
    let mut lo = spec.t_min + step * best_i.saturating_sub(1) as f64;
    let mut hi = (spec.t_min + step * (best_i + 1) as f64).min(spec.t_max);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if dist_sq(m1) <= dist_sq(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    dist_sq(0.5 * (lo + hi)).sqrt()
}

/// Scores a batch of samples against the benchmark ground truth.
pub fn evaluate(samples: &[Vec2], spec: &SpiralSpec, threshold: f64) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::Usage("evaluate needs at least one sample".into()));
    }
    if threshold <= 0.0 || !threshold.is_finite() {
        return Err(Error::Config(format!(
            "validity threshold must be > 0, got {threshold}"
        )));
    }
    if samples
        .iter()
        .any(|x| !x[0].is_finite() || !x[1].is_finite())
    {
        return Err(Error::Input("non-finite sample".into()));
    }

    let n = samples.len();
    let rewards: Vec<f64> = samples.iter().map(|&x| ground_truth_reward(x)).collect();
    let mean_reward = rewards.iter().sum::<f64>() / n as f64;
    let max_reward = rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut valid_count = 0usize;
    let mut valid_reward_sum = 0.0;
    for (x, r) in samples.iter().zip(&rewards) {
        if distance_to_spiral(*x, spec) < threshold {
            valid_count += 1;
            valid_reward_sum += r;
        }
    }
    let validity_rate = valid_count as f64 / n as f64;
    let mean_valid_reward = if valid_count > 0 {
        valid_reward_sum / valid_count as f64
    } else {
        0.0
    };

    let mut pair_sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d0 = samples[i][0] - samples[j][0];
            let d1 = samples[i][1] - samples[j][1];
            pair_sum += (d0 * d0 + d1 * d1).sqrt();
        }
    }
    let pairs = n * (n - 1) / 2;
    let diversity = if pairs > 0 { pair_sum / pairs as f64 } else { 0.0 };

    Ok(EvalReport {
        n_samples: n,
        mean_reward,
        max_reward,
        validity_rate,
        mean_valid_reward,
        diversity,
        threshold,
    })
}
