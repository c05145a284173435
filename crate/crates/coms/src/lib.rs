//! Conservative objective models as contrastive-divergence energy models.
//!
//! A conservative objective model (COM) is a scalar surrogate `f(x)` for an
//! expensive black-box reward, trained with a regulariser that penalises the
//! predicted reward of self-generated samples. Reading `-f` as an energy
//! turns the regulariser into the contrastive-divergence objective of an
//! energy-based model, which is the view this crate implements: one tanh MLP
//! field doubles as reward surrogate and unnormalised log-density.
//!
//! The crate ships three samplers for the learned field (noiseless gradient
//! ascent, annealed Langevin MCMC, and reward-tilted Langevin guided by an
//! independently trained oracle), CD-k training for all variants, a 2D
//! spiral benchmark with an analytic ground-truth reward, sample-quality
//! metrics, and SVG figure output. Everything is seed-deterministic.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod io;
pub mod nnet;
pub mod plot;
pub mod sampling;
pub mod training;

pub use error::{Error, Result};

/// A point in the 2D design space.
pub type Vec2 = [f64; 2];
