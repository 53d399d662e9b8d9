//! Dense network building blocks with hand-written backprop.
//!
//! Everything here is plain batched matrix math on [`ndarray`] types, generic
//! over the scalar so the gradient checks can run in f64 while a caller could
//! drop to f32. Layers use rectified-linear hidden activations and a linear
//! output; gradients are verified against central finite differences in the
//! tests below.

use ndarray::{Array1, Array2, Axis};
use rand::distributions::uniform::SampleUniform;
use rand::Rng;

use crate::scalar::NetScalar;

/// Fully connected layer, `w` stored as (out, in).
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<S> {
    pub w: Array2<S>,
    pub b: Array1<S>,
}

impl<S: NetScalar> Linear<S> {
    /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and bias.
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self
    where
        S: SampleUniform,
    {
        let k = S::of(1.0) / S::of(in_dim as f64).sqrt();
        let w = Array2::from_shape_fn((out_dim, in_dim), |_| rng.gen_range(-k..k));
        let b = Array1::from_shape_fn(out_dim, |_| rng.gen_range(-k..k));
        Self { w, b }
    }

    pub fn forward(&self, x: &Array2<S>) -> Array2<S> {
        x.dot(&self.w.t()) + &self.b
    }
}

/// Per-layer parameter gradients, same shapes as the weights.
#[derive(Debug, Clone)]
pub struct MlpGrads<S> {
    pub layers: Vec<(Array2<S>, Array1<S>)>,
}

impl<S: NetScalar> MlpGrads<S> {
    pub fn scaled(mut self, factor: S) -> Self {
        for (w, b) in &mut self.layers {
            w.mapv_inplace(|g| g * factor);
            b.mapv_inplace(|g| g * factor);
        }
        self
    }

    pub fn add(&mut self, other: &MlpGrads<S>) {
        assert_eq!(self.layers.len(), other.layers.len());
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            *w += ow;
            *b += ob;
        }
    }
}

/// Activations remembered by a forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct MlpCache<S> {
    /// Input to each layer (so `inputs[0]` is the network input).
    inputs: Vec<Array2<S>>,
    /// Pre-activation output of each layer.
    pre: Vec<Array2<S>>,
}

/// Multilayer perceptron: relu on every layer except the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S> {
    pub layers: Vec<Linear<S>>,
}

impl<S: NetScalar> Mlp<S> {
    /// `dims` lists input, hidden sizes, output: `[in, h1, .., out]`.
    pub fn new<R: Rng>(dims: &[usize], rng: &mut R) -> Self
    where
        S: SampleUniform,
    {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let layers = dims
            .windows(2)
            .map(|d| Linear::new(d[0], d[1], rng))
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn forward(&self, x: &Array2<S>) -> Array2<S> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &Array2<S>) -> (Array2<S>, MlpCache<S>) {
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(a.clone());
            let z = layer.forward(&a);
            pre.push(z.clone());
            a = if i + 1 < n { relu(&z) } else { z };
        }
        (a, MlpCache { inputs, pre })
    }

    /// Backpropagates `dy` (gradient of the loss in the network output) and
    /// returns parameter gradients plus the gradient in the network input.
    pub fn backward(&self, cache: &MlpCache<S>, dy: &Array2<S>) -> (MlpGrads<S>, Array2<S>) {
        let n = self.layers.len();
        assert_eq!(cache.inputs.len(), n, "cache from a different net");
        let mut grads: Vec<(Array2<S>, Array1<S>)> =
            (0..n).map(|_| (Array2::zeros((0, 0)), Array1::zeros(0))).collect();
        let mut dz = dy.clone();
        for l in (0..n).rev() {
            let dw = dz.t().dot(&cache.inputs[l]);
            let db = dz.sum_axis(Axis(0));
            let dx = dz.dot(&self.layers[l].w);
            grads[l] = (dw, db);
            dz = if l > 0 {
                // Gate through the relu of the previous layer.
                let mut gated = dx;
                gated.zip_mut_with(&cache.pre[l - 1], |g, &z| {
                    if z <= S::zero() {
                        *g = S::zero();
                    }
                });
                gated
            } else {
                dx
            };
        }
        (MlpGrads { layers: grads }, dz)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn flatten(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.w.iter().copied());
            out.extend(l.b.iter().copied());
        }
        out
    }

    /// Inverse of [`Mlp::flatten`]; panics if the length disagrees.
    pub fn set_from_flat(&mut self, flat: &[S]) {
        assert_eq!(flat.len(), self.n_params(), "flat parameter length mismatch");
        let mut i = 0;
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = flat[i];
                i += 1;
            }
            for b in l.b.iter_mut() {
                *b = flat[i];
                i += 1;
            }
        }
    }

    pub fn zero_grads(&self) -> MlpGrads<S> {
        MlpGrads {
            layers: self
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.raw_dim())))
                .collect(),
        }
    }
}

pub fn relu<S: NetScalar>(z: &Array2<S>) -> Array2<S> {
    z.mapv(|v| if v > S::zero() { v } else { S::zero() })
}

/// Adaptive-moment optimizer over one network's parameters.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    m: Vec<(Array2<S>, Array1<S>)>,
    v: Vec<(Array2<S>, Array1<S>)>,
    t: u64,
    pub lr: S,
    beta1: S,
    beta2: S,
    eps: S,
}

impl<S: NetScalar> Adam<S> {
    pub fn new(net: &Mlp<S>, lr: S) -> Self {
        let zeros = || {
            net.layers
                .iter()
                .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.raw_dim())))
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            t: 0,
            lr,
            beta1: S::of(0.9),
            beta2: S::of(0.999),
            eps: S::of(1e-8),
        }
    }

    pub fn step(&mut self, net: &mut Mlp<S>, grads: &MlpGrads<S>) {
        self.t += 1;
        let one = S::one();
        let bc1 = one - self.beta1.powi(self.t as i32);
        let bc2 = one - self.beta2.powi(self.t as i32);
        let (lr, beta1, beta2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let update = move |p: &mut S, g: &S, m: &mut S, v: &mut S| {
            *m = beta1 * *m + (one - beta1) * *g;
            *v = beta2 * *v + (one - beta2) * *g * *g;
            let mhat = *m / bc1;
            let vhat = *v / bc2;
            *p = *p - lr * mhat / (vhat.sqrt() + eps);
        };
        for (l, (layer, (gw, gb))) in net.layers.iter_mut().zip(&grads.layers).enumerate() {
            let (mw, mb) = &mut self.m[l];
            let (vw, vb) = &mut self.v[l];
            // Gradient arrays may arrive in any memory layout; Zip walks them
            // index-wise.
            ndarray::Zip::from(&mut layer.w)
                .and(gw)
                .and(&mut *mw)
                .and(&mut *vw)
                .for_each(|p, g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut layer.b)
                .and(gb)
                .and(&mut *mb)
                .and(&mut *vb)
                .for_each(|p, g, m, v| update(p, g, m, v));
        }
    }

    pub fn state_arrays(&self) -> (Vec<Vec<S>>, Vec<Vec<S>>, u64) {
        let dump = |set: &Vec<(Array2<S>, Array1<S>)>| {
            set.iter()
                .map(|(w, b)| w.iter().chain(b.iter()).copied().collect())
                .collect()
        };
        (dump(&self.m), dump(&self.v), self.t)
    }

    pub fn restore_state(&mut self, m: &[Vec<S>], v: &[Vec<S>], t: u64) {
        let fill = |set: &mut Vec<(Array2<S>, Array1<S>)>, src: &[Vec<S>]| {
            assert_eq!(set.len(), src.len(), "optimizer layer count mismatch");
            for ((w, b), flat) in set.iter_mut().zip(src) {
                assert_eq!(w.len() + b.len(), flat.len(), "optimizer shape mismatch");
                for (dst, s) in w.iter_mut().chain(b.iter_mut()).zip(flat) {
                    *dst = *s;
                }
            }
        };
        fill(&mut self.m, m);
        fill(&mut self.v, v);
        self.t = t;
    }
}

/// Single-scalar variant of [`Adam`], used for the entropy temperature.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScalarAdam {
    pub m: f64,
    pub v: f64,
    pub t: u64,
    pub lr: f64,
}

impl ScalarAdam {
    pub fn new(lr: f64) -> Self {
        Self { m: 0.0, v: 0.0, t: 0, lr }
    }

    pub fn step(&mut self, p: &mut f64, g: f64) {
        self.t += 1;
        self.m = 0.9 * self.m + 0.1 * g;
        self.v = 0.999 * self.v + 0.001 * g * g;
        let mhat = self.m / (1.0 - 0.9_f64.powi(self.t as i32));
        let vhat = self.v / (1.0 - 0.999_f64.powi(self.t as i32));
        *p -= self.lr * mhat / (vhat.sqrt() + 1e-8);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_hand_value() {
        let mut net: Mlp<f64> = Mlp {
            layers: vec![
                Linear { w: array![[1.0, -1.0], [0.5, 0.5]], b: array![0.0, 1.0] },
                Linear { w: array![[2.0, -2.0]], b: array![0.25] },
            ],
        };
        // x = (1, 2): z1 = (-1, 2.5) -> relu (0, 2.5); out = 0*2 - 2.5*2 + 0.25
        let y = net.forward(&array![[1.0, 2.0]]);
        assert_eq!(y, array![[-4.75]]);
        net.layers[1].b[0] = 0.0;
        assert_eq!(net.forward(&array![[1.0, 2.0]]), array![[-5.0]]);
    }

    /// Quadratic loss against fixed targets, as scalar function of the flat
    /// parameter vector; used by the finite-difference checks.
    fn quad_loss(net: &Mlp<f64>, x: &Array2<f64>, target: &Array2<f64>) -> f64 {
        let y = net.forward(x);
        let d = &y - target;
        0.5 * d.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        for seed in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net: Mlp<f64> = Mlp::new(&[3, 8, 8, 4], &mut rng);
            let x = Array2::from_shape_fn((5, 3), |_| rng.gen_range(-1.0..1.0));
            let target = Array2::from_shape_fn((5, 4), |_| rng.gen_range(-1.0..1.0));

            let (y, cache) = net.forward_cached(&x);
            let dy = &y - &target;
            let (grads, _) = net.backward(&cache, &dy);
            let analytic: Vec<f64> = grads
                .layers
                .iter()
                .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
                .collect();

            let mut flat = net.flatten();
            for (i, g) in analytic.iter().enumerate() {
                let h = 1e-6 * flat[i].abs().max(1.0);
                let orig = flat[i];
                flat[i] = orig + h;
                net.set_from_flat(&flat);
                let lp = quad_loss(&net, &x, &target);
                flat[i] = orig - h;
                net.set_from_flat(&flat);
                let lm = quad_loss(&net, &x, &target);
                flat[i] = orig;
                net.set_from_flat(&flat);
                let fd = (lp - lm) / (2.0 * h);
                // Central differences bottom out around 1e-10 absolute, so
                // floor the denominator instead of chasing exactness.
                let denom = fd.abs().max(g.abs()).max(1e-4);
                assert!(
                    ((fd - g) / denom).abs() < 1e-4,
                    "seed {seed} param {i}: fd {fd} vs analytic {g}"
                );
            }
        }
    }

    #[test]
    fn input_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net: Mlp<f64> = Mlp::new(&[4, 6, 2], &mut rng);
        let x = Array2::from_shape_fn((3, 4), |_| rng.gen_range(-1.0..1.0));
        let target = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-1.0..1.0));
        let (y, cache) = net.forward_cached(&x);
        let (_, dx) = net.backward(&cache, &(&y - &target));
        for r in 0..3 {
            for c in 0..4 {
                let h = 1e-6;
                let mut xp = x.clone();
                xp[[r, c]] += h;
                let mut xm = x.clone();
                xm[[r, c]] -= h;
                let fd = (quad_loss(&net, &xp, &target) - quad_loss(&net, &xm, &target)) / (2.0 * h);
                assert!((fd - dx[[r, c]]).abs() < 1e-6, "input ({r},{c})");
            }
        }
    }

    #[test]
    fn flat_round_trip_preserves_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net: Mlp<f64> = Mlp::new(&[5, 7, 2], &mut rng);
        let mut copy = net.clone();
        copy.set_from_flat(&net.flatten());
        assert_eq!(net, copy);
        assert_eq!(net.n_params(), 5 * 7 + 7 + 7 * 2 + 2);
    }

    #[test]
    fn adam_first_step_moves_by_signed_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net: Mlp<f64> = Mlp::new(&[2, 2], &mut rng);
        let before = net.flatten();
        let mut opt = Adam::new(&net, 1e-3);
        let mut grads = net.zero_grads();
        grads.layers[0].0[[0, 0]] = 0.5;
        grads.layers[0].1[1] = -2.0;
        opt.step(&mut net, &grads);
        let after = net.flatten();
        // First step: m-hat = g, v-hat = g^2, so the move is lr * sign(g).
        assert!((after[0] - (before[0] - 1e-3)).abs() < 1e-9);
        assert!((after[5] - (before[5] + 1e-3)).abs() < 1e-9);
        assert_eq!(after[1], before[1], "zero-gradient entries stay put");
    }

    #[test]
    fn scalar_adam_matches_tensor_adam() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net: Mlp<f64> = Mlp::new(&[1, 1], &mut rng);
        net.layers[0].b[0] = 0.3;
        let mut opt = Adam::new(&net, 1e-2);
        let mut s = 0.3;
        let mut sopt = ScalarAdam::new(1e-2);
        for k in 0..20 {
            let g = (k as f64 * 0.37).sin();
            let mut grads = net.zero_grads();
            grads.layers[0].1[0] = g;
            opt.step(&mut net, &grads);
            sopt.step(&mut s, g);
            assert!((net.layers[0].b[0] - s).abs() < 1e-12);
        }
    }
}
