//! Scalar neural field with exact analytic gradients and an Adam optimizer.
//!
//! The field is a one-hidden-layer tanh MLP, `f(x) = w2 · tanh(w1 x + b1) + b2`.
//! Its negation is the energy of the model distribution, so the same struct
//! serves as the trainable surrogate, the energy model, and the external
//! oracle. Gradients with respect to both inputs and parameters are computed
//! analytically for this fixed architecture; there is no autodiff engine.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

/// Hidden-layer activation. Only tanh is supported: the Langevin samplers
/// need a smooth input-gradient field, which rules out piecewise-linear units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

/// tanh accurate to a few ulps but roughly twice as fast as the libm call,
/// which dominates every chain step. Saturates where 1 - tanh is below half
/// an ulp; the series branch avoids the cancellation in (e-1)/(e+1) near 0.
#[inline]
fn fast_tanh(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= 20.0 {
        return if x.is_sign_negative() { -1.0 } else { 1.0 };
    }
    if ax < 0.03 {
        let x2 = x * x;
        return x * (1.0 + x2 * (-1.0 / 3.0 + x2 * (2.0 / 15.0 - x2 * (17.0 / 315.0))));
    }
    let e = (2.0 * x).exp();
    (e - 1.0) / (e + 1.0)
}

/// A scalar-valued field on the 2D design space.
///
/// Everything the samplers touch goes through this trait, so chains can be
/// exercised against analytic test doubles as well as [`MlpField`]s.
/// Implementations must be pure; `x` is assumed finite (the samplers check
/// their iterates after every update).
pub trait ScalarField: Sync {
    fn value(&self, x: Vec2) -> f64;
    fn grad(&self, x: Vec2) -> Vec2;
}

/// One-hidden-layer tanh MLP mapping `R^input_dim -> R`.
///
/// Immutable during inference: `forward`, `grad_input` and `grad_params` are
/// pure and safe to call from many threads. Training mutates a field through
/// [`OptimizerState::step`] single-threaded.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpField {
    input_dim: usize,
    hidden_dim: usize,
    /// Row-major `hidden_dim x input_dim`.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    activation: Activation,
}

impl MlpField {
    /// Glorot-uniform weights, zero biases; deterministic given `seed`.
    pub fn new(input_dim: usize, hidden_dim: usize, seed: u64) -> Result<Self> {
        if input_dim < 1 || hidden_dim < 1 {
            return Err(Error::Config(format!(
                "mlp dims must be >= 1, got input_dim={input_dim}, hidden_dim={hidden_dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let w1 = (0..input_dim * hidden_dim)
            .map(|_| rng.gen_range(-bound1..=bound1))
            .collect();
        let bound2 = (6.0 / (hidden_dim + 1) as f64).sqrt();
        let w2 = (0..hidden_dim)
            .map(|_| rng.gen_range(-bound2..=bound2))
            .collect();
        Ok(Self {
            input_dim,
            hidden_dim,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: 0.0,
            activation: Activation::Tanh,
        })
    }

    /// Builds a field from explicit weights, validating shapes and finiteness.
    pub fn from_parts(
        input_dim: usize,
        hidden_dim: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: f64,
    ) -> Result<Self> {
        if input_dim < 1 || hidden_dim < 1 {
            return Err(Error::Config("mlp dims must be >= 1".into()));
        }
        if w1.len() != input_dim * hidden_dim || b1.len() != hidden_dim || w2.len() != hidden_dim {
            return Err(Error::Config(format!(
                "weight shapes inconsistent with dims {input_dim}x{hidden_dim}: \
                 |w1|={}, |b1|={}, |w2|={}",
                w1.len(),
                b1.len(),
                w2.len()
            )));
        }
        let all = w1.iter().chain(&b1).chain(&w2).chain(std::iter::once(&b2));
        if !all.clone().all(|v| v.is_finite()) {
            return Err(Error::Config("non-finite weight entry".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            w1,
            b1,
            w2,
            b2,
            activation: Activation::Tanh,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Weight accessors for serialization; `w1` is row-major.
    pub fn weights(&self) -> (&[f64], &[f64], &[f64], f64) {
        (&self.w1, &self.b1, &self.w2, self.b2)
    }

    /// Total trainable parameter count.
    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flat parameter view in the order w1 (row-major), b1, w2, b2.
    pub fn param(&self, i: usize) -> f64 {
        let (nw1, nb1, nw2) = (self.w1.len(), self.b1.len(), self.w2.len());
        if i < nw1 {
            self.w1[i]
        } else if i < nw1 + nb1 {
            self.b1[i - nw1]
        } else if i < nw1 + nb1 + nw2 {
            self.w2[i - nw1 - nb1]
        } else {
            self.b2
        }
    }

    /// Sets one parameter in flat order; used by finite-difference checks.
    pub fn set_param(&mut self, i: usize, value: f64) {
        let (nw1, nb1, nw2) = (self.w1.len(), self.b1.len(), self.w2.len());
        if i < nw1 {
            self.w1[i] = value;
        } else if i < nw1 + nb1 {
            self.b1[i - nw1] = value;
        } else if i < nw1 + nb1 + nw2 {
            self.w2[i - nw1 - nb1] = value;
        } else {
            self.b2 = value;
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Input(format!(
                "expected {}-dim input, got {}",
                self.input_dim,
                x.len()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Input("non-finite input".into()));
        }
        Ok(())
    }

    /// `f(x) = w2 · tanh(w1 x + b1) + b2`. The model energy is exactly `-f(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.value_raw(x))
    }

    /// `energy(x) = -forward(x)`, bit-identical by construction.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        Ok(-self.forward(x)?)
    }

    /// Analytic `∂f/∂x`; agrees with central finite differences to < 1e-4
    /// relative error in double precision.
    pub fn grad_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = vec![0.0; self.input_dim];
        self.grad_input_raw(x, &mut out);
        Ok(out)
    }

    /// `upstream · ∂f/∂θ` for every parameter; linear in `upstream`.
    pub fn grad_params(&self, x: &[f64], upstream: f64) -> Result<ParamGrad> {
        self.check_input(x)?;
        if !upstream.is_finite() {
            return Err(Error::Input("non-finite upstream".into()));
        }
        let mut grad = ParamGrad::zeros_like(self);
        self.accumulate_grad_params(x, upstream, &mut grad);
        Ok(grad)
    }

    fn value_raw(&self, x: &[f64]) -> f64 {
        let mut out = self.b2;
        for i in 0..self.hidden_dim {
            let row = &self.w1[i * self.input_dim..(i + 1) * self.input_dim];
            let mut z = self.b1[i];
            for (w, xi) in row.iter().zip(x) {
                z += w * xi;
            }
            out += self.w2[i] * fast_tanh(z);
        }
        out
    }

    fn grad_input_raw(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.hidden_dim {
            let row = &self.w1[i * self.input_dim..(i + 1) * self.input_dim];
            let mut z = self.b1[i];
            for (w, xi) in row.iter().zip(x) {
                z += w * xi;
            }
            let t = fast_tanh(z);
            let s = self.w2[i] * (1.0 - t * t);
            for (o, w) in out.iter_mut().zip(row) {
                *o += s * w;
            }
        }
    }

    /// Backprop for the fixed architecture, accumulating into `grad`.
    pub(crate) fn accumulate_grad_params(&self, x: &[f64], upstream: f64, grad: &mut ParamGrad) {
        debug_assert_eq!(grad.w1.len(), self.w1.len());
        for i in 0..self.hidden_dim {
            let row = &self.w1[i * self.input_dim..(i + 1) * self.input_dim];
            let mut z = self.b1[i];
            for (w, xi) in row.iter().zip(x) {
                z += w * xi;
            }
            let t = fast_tanh(z);
            grad.w2[i] += upstream * t;
            let delta = upstream * self.w2[i] * (1.0 - t * t);
            grad.b1[i] += delta;
            let grow = &mut grad.w1[i * self.input_dim..(i + 1) * self.input_dim];
            for (g, xi) in grow.iter_mut().zip(x) {
                *g += delta * xi;
            }
        }
        grad.b2 += upstream;
    }
}

impl ScalarField for MlpField {
    fn value(&self, x: Vec2) -> f64 {
        assert_eq!(self.input_dim, 2, "2D sampler on {}-dim field", self.input_dim);
        self.value_raw(&x)
    }

    fn grad(&self, x: Vec2) -> Vec2 {
        assert_eq!(self.input_dim, 2, "2D sampler on {}-dim field", self.input_dim);
        let mut out = [0.0; 2];
        self.grad_input_raw(&x, &mut out);
        out
    }
}

/// Gradient of a scalar loss with respect to every [`MlpField`] parameter,
/// shape-congruent with its field.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl ParamGrad {
    pub fn zeros_like(field: &MlpField) -> Self {
        Self {
            w1: vec![0.0; field.w1.len()],
            b1: vec![0.0; field.b1.len()],
            w2: vec![0.0; field.w2.len()],
            b2: 0.0,
        }
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flat view in the same order as [`MlpField::param`].
    pub fn param(&self, i: usize) -> f64 {
        let (nw1, nb1, nw2) = (self.w1.len(), self.b1.len(), self.w2.len());
        if i < nw1 {
            self.w1[i]
        } else if i < nw1 + nb1 {
            self.b1[i - nw1]
        } else if i < nw1 + nb1 + nw2 {
            self.w2[i - nw1 - nb1]
        } else {
            self.b2
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.w1.iter_mut().chain(&mut self.b1).chain(&mut self.w2) {
            *v *= c;
        }
        self.b2 *= c;
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &ParamGrad, c: f64) -> Result<()> {
        self.check_congruent(other)?;
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += c * b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += c * b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += c * b;
        }
        self.b2 += c * other.b2;
        Ok(())
    }

    /// `self -= other`, elementwise.
    pub fn sub_assign(&mut self, other: &ParamGrad) -> Result<()> {
        self.check_congruent(other)?;
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a -= b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a -= b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a -= b;
        }
        self.b2 -= other.b2;
        Ok(())
    }

    pub fn l2_norm(&self) -> f64 {
        let mut s = self.b2 * self.b2;
        for v in self.w1.iter().chain(&self.b1).chain(&self.w2) {
            s += v * v;
        }
        s.sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.b2.is_finite()
            && self
                .w1
                .iter()
                .chain(&self.b1)
                .chain(&self.w2)
                .all(|v| v.is_finite())
    }

    fn check_congruent(&self, other: &ParamGrad) -> Result<()> {
        if self.w1.len() != other.w1.len()
            || self.b1.len() != other.b1.len()
            || self.w2.len() != other.w2.len()
        {
            return Err(Error::Internal("gradient shape mismatch".into()));
        }
        Ok(())
    }
}

/// Adam state: first/second moment accumulators shape-congruent with the
/// field they train, plus the step counter used for bias correction.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: ParamGrad,
    v: ParamGrad,
    step: u64,
}

impl OptimizerState {
    pub fn adam(field: &MlpField, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: ParamGrad::zeros_like(field),
            v: ParamGrad::zeros_like(field),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update minimizing the loss whose gradient is `grad`.
    pub fn step(&mut self, field: &mut MlpField, grad: &ParamGrad) -> Result<()> {
        self.m.check_congruent(grad)?;
        if grad.w1.len() != field.w1.len()
            || grad.b1.len() != field.b1.len()
            || grad.w2.len() != field.w2.len()
        {
            return Err(Error::Internal(
                "gradient shape mismatch with field".into(),
            ));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.eps);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for i in 0..field.w1.len() {
            update(&mut field.w1[i], &mut self.m.w1[i], &mut self.v.w1[i], grad.w1[i]);
        }
        for i in 0..field.b1.len() {
            update(&mut field.b1[i], &mut self.m.b1[i], &mut self.v.b1[i], grad.b1[i]);
        }
        for i in 0..field.w2.len() {
            update(&mut field.w2[i], &mut self.m.w2[i], &mut self.v.w2[i], grad.w2[i]);
        }
        update(&mut field.b2, &mut self.m.b2, &mut self.v.b2, grad.b2);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite differences of f along each input coordinate.
    fn fd_grad_input(field: &MlpField, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (field.forward(&xp).unwrap() - field.forward(&xm).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    /// Central finite differences of f along each parameter.
    fn fd_grad_params(field: &MlpField, x: &[f64], h: f64) -> Vec<f64> {
        (0..field.num_params())
            .map(|i| {
                let orig = field.param(i);
                let mut f = field.clone();
                f.set_param(i, orig + h);
                let up = f.forward(x).unwrap();
                f.set_param(i, orig - h);
                let down = f.forward(x).unwrap();
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    /// h=1, w1=[[1,0]], b1=[0], w2=[2], b2=0.
    fn tiny_net() -> MlpField {
        MlpField::from_parts(2, 1, vec![1.0, 0.0], vec![0.0], vec![2.0], 0.0).unwrap()
    }

    fn zero_net(hidden: usize, b2: f64) -> MlpField {
        MlpField::from_parts(2, hidden, vec![0.0; 2 * hidden], vec![0.0; hidden], vec![0.0; hidden], b2)
            .unwrap()
    }

    #[test]
    fn fast_tanh_matches_libm() {
        let mut xs: Vec<f64> = (0..200_000).map(|i| i as f64 * 2.5e-4 - 25.0).collect();
        for e in -300..3 {
            xs.push(10f64.powi(e));
            xs.push(-(10f64.powi(e)));
        }
        xs.extend([0.0, 20.0, -20.0, 19.999, 708.0, -708.0, f64::MAX, f64::MIN]);
        for &x in &xs {
            let want = x.tanh();
            let got = fast_tanh(x);
            let rel = if want != 0.0 {
                ((got - want) / want).abs()
            } else {
                (got - want).abs()
            };
            assert!(rel < 1e-13, "x={x}: fast {got} vs libm {want}");
        }
        assert_eq!(fast_tanh(0.0), 0.0);
    }

    #[test]
    fn init_param_count() {
        let f = MlpField::new(2, 256, 0).unwrap();
        assert_eq!(f.num_params(), 2 * 256 + 256 + 256 + 1);
        assert_eq!(f.num_params(), 1025);
    }

    #[test]
    fn init_deterministic() {
        let a = MlpField::new(2, 256, 0).unwrap();
        let b = MlpField::new(2, 256, 0).unwrap();
        assert_eq!(a, b);
        let c = MlpField::new(2, 256, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_glorot_bound() {
        let f = MlpField::new(2, 4, 7).unwrap();
        let (w1, b1, _, b2) = f.weights();
        // fan_in + fan_out = 6 so the bound is exactly 1.
        assert!(w1.iter().all(|w| w.abs() <= 1.0));
        assert!(b1.iter().all(|&b| b == 0.0));
        assert_eq!(b2, 0.0);
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(matches!(MlpField::new(0, 4, 0), Err(Error::Config(_))));
        assert!(matches!(MlpField::new(2, 0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn from_parts_rejects_bad_shapes_and_nan() {
        assert!(MlpField::from_parts(2, 1, vec![1.0], vec![0.0], vec![1.0], 0.0).is_err());
        assert!(
            MlpField::from_parts(2, 1, vec![f64::NAN, 0.0], vec![0.0], vec![1.0], 0.0).is_err()
        );
    }

    #[test]
    fn forward_constant_network() {
        let f = zero_net(8, 3.5);
        assert_eq!(f.forward(&[0.0, 0.0]).unwrap(), 3.5);
        assert_eq!(f.forward(&[-1.0, 7.0]).unwrap(), 3.5);
    }

    #[test]
    fn forward_tiny_net() {
        let f = tiny_net();
        // Second coordinate is ignored, tanh(0) = 0.
        assert_eq!(f.forward(&[0.0, 9.0]).unwrap(), 0.0);
        let expected = 2.0 * 1.0_f64.tanh();
        assert!((f.forward(&[1.0, 0.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.52318).abs() < 1e-5);
    }

    #[test]
    fn forward_rejects_non_finite() {
        let f = tiny_net();
        assert!(matches!(
            f.forward(&[f64::NAN, 0.0]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            f.forward(&[f64::INFINITY, 0.0]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn forward_is_pure() {
        let f = MlpField::new(2, 32, 3).unwrap();
        let a = f.forward(&[0.3, -0.7]).unwrap();
        let b = f.forward(&[0.3, -0.7]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn energy_is_exact_negation() {
        let f = MlpField::new(2, 16, 11).unwrap();
        for x in [[0.0, 0.0], [1.3, -2.0], [0.5, 0.25]] {
            let v = f.forward(&x).unwrap();
            assert_eq!(f.energy(&x).unwrap().to_bits(), (-v).to_bits());
        }
    }

    #[test]
    fn grad_input_tiny_net() {
        let f = tiny_net();
        // tanh'(0) = 1 so df/dx = (2*w1_row) at the origin.
        let g = f.grad_input(&[0.0, 0.0]).unwrap();
        assert_eq!(g, vec![2.0, 0.0]);
    }

    #[test]
    fn grad_input_zero_field() {
        let f = zero_net(4, 1.0);
        assert_eq!(f.grad_input(&[0.4, -1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn grad_input_matches_finite_differences() {
        for seed in 0..5u64 {
            let f = MlpField::new(2, 32, seed).unwrap();
            let x = [0.3 * seed as f64 - 0.7, 0.11 * seed as f64 + 0.2];
            let analytic = f.grad_input(&x).unwrap();
            let numeric = fd_grad_input(&f, &x, 1e-5);
            for (a, n) in analytic.iter().zip(&numeric) {
                assert!(rel_err(*a, *n) < 1e-4, "analytic={a} numeric={n}");
            }
        }
    }

    #[test]
    fn grad_params_zero_upstream() {
        let f = MlpField::new(2, 8, 1).unwrap();
        let g = f.grad_params(&[0.5, -0.5], 0.0).unwrap();
        assert!((0..g.num_params()).all(|i| g.param(i) == 0.0));
    }

    #[test]
    fn grad_params_linear_in_upstream() {
        let f = MlpField::new(2, 8, 2).unwrap();
        let x = [0.4, -1.2];
        let ga = f.grad_params(&x, 0.7).unwrap();
        let gb = f.grad_params(&x, -1.3).unwrap();
        let gsum = f.grad_params(&x, 0.7 + -1.3).unwrap();
        for i in 0..gsum.num_params() {
            assert!((ga.param(i) + gb.param(i) - gsum.param(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_params_matches_finite_differences() {
        for seed in 0..3u64 {
            let f = MlpField::new(2, 8, seed).unwrap();
            let x = [0.9 - 0.3 * seed as f64, 0.2 * seed as f64];
            let analytic = f.grad_params(&x, 1.0).unwrap();
            let numeric = fd_grad_params(&f, &x, 1e-5);
            for (i, n) in numeric.iter().enumerate() {
                assert!(
                    rel_err(analytic.param(i), *n) < 1e-4,
                    "param {i}: analytic={} numeric={n}",
                    analytic.param(i)
                );
            }
        }
    }

    #[test]
    fn adam_zero_grad_leaves_params() {
        let mut f = MlpField::new(2, 4, 0).unwrap();
        let before = f.clone();
        let mut opt = OptimizerState::adam(&f, 1e-3);
        let zero = ParamGrad::zeros_like(&f);
        opt.step(&mut f, &zero).unwrap();
        assert_eq!(f, before);
    }

    #[test]
    fn adam_minimizes_scalar_quadratic() {
        // Drive only b2 with the gradient of L(b2) = b2^2, starting at 1,
        // and mirror it with an independent scalar Adam loop.
        let mut f = zero_net(1, 1.0);
        let mut opt = OptimizerState::adam(&f, 0.1);

        let (mut theta, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=200 {
            let mut g = ParamGrad::zeros_like(&f);
            g.b2 = 2.0 * f.weights().3;
            opt.step(&mut f, &g).unwrap();

            let gs = 2.0 * theta;
            m = 0.9 * m + 0.1 * gs;
            v = 0.999 * v + 0.001 * gs * gs;
            let m_hat = m / (1.0 - 0.9f64.powi(t));
            let v_hat = v / (1.0 - 0.999f64.powi(t));
            theta -= 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        }
        assert!(theta.abs() < 1e-2, "oracle did not converge: {theta}");
        assert!(f.weights().3.abs() < 1e-2);
        assert!((f.weights().3 - theta).abs() < 1e-12);
    }

    #[test]
    fn adam_counts_steps() {
        let mut f = MlpField::new(2, 4, 0).unwrap();
        let mut opt = OptimizerState::adam(&f, 1e-3);
        let zero = ParamGrad::zeros_like(&f);
        for expected in 1..=5 {
            opt.step(&mut f, &zero).unwrap();
            assert_eq!(opt.step_count(), expected);
        }
    }

    #[test]
    fn adam_rejects_shape_mismatch() {
        let mut f = MlpField::new(2, 4, 0).unwrap();
        let other = MlpField::new(2, 8, 0).unwrap();
        let mut opt = OptimizerState::adam(&f, 1e-3);
        let g = ParamGrad::zeros_like(&other);
        assert!(matches!(opt.step(&mut f, &g), Err(Error::Internal(_))));
    }

    #[test]
    fn scalar_field_trait_matches_slice_api() {
        let f = MlpField::new(2, 16, 5).unwrap();
        let x = [0.7, -0.3];
        assert_eq!(f.value(x), f.forward(&x).unwrap());
        let g = f.grad(x);
        let gi = f.grad_input(&x).unwrap();
        assert_eq!(g[0], gi[0]);
        assert_eq!(g[1], gi[1]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn grad_input_matches_fd(seed in 0u64..1000, x0 in -2.0f64..2.0, x1 in -2.0f64..2.0) {
                let f = MlpField::new(2, 16, seed).unwrap();
                let analytic = f.grad_input(&[x0, x1]).unwrap();
                let numeric = fd_grad_input(&f, &[x0, x1], 1e-5);
                for (a, n) in analytic.iter().zip(&numeric) {
                    prop_assert!(rel_err(*a, *n) < 1e-4);
                }
            }

            #[test]
            fn energy_negates_forward(seed in 0u64..1000, x0 in -2.0f64..2.0, x1 in -2.0f64..2.0) {
                let f = MlpField::new(2, 8, seed).unwrap();
                let v = f.forward(&[x0, x1]).unwrap();
                let e = f.energy(&[x0, x1]).unwrap();
                prop_assert_eq!(e.to_bits(), (-v).to_bits());
            }
        }
    }
}
