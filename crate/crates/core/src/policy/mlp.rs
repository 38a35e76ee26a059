use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Fully connected layer. `weights` is row-major `[input][output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Float> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { inputs, outputs, weights: vec![T::zero(); inputs * outputs], bias: vec![T::zero(); outputs] }
    }

    /// Gaussian weights with std `gain / sqrt(inputs)`, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, gain: f64, rng: &mut R) -> Self {
        let std = gain / (inputs as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                T::from(z * std).unwrap()
            })
            .collect();
        Dense { inputs, outputs, weights, bias: vec![T::zero(); outputs] }
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: T = ca.remainder().iter().zip(cb.remainder()).fold(T::zero(), |s, (&x, &y)| s + x * y);
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    acc.iter().fold(tail, |s, &v| s + v)
}

/// Multi-layer perceptron with tanh hidden layers and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
}

/// Post-activation outputs of every layer, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub activations: Vec<Vec<T>>,
}

impl<T> Default for Trace<T> {
    fn default() -> Self {
        Trace { activations: Vec::new() }
    }
}

impl<T> Trace<T> {
    pub fn output(&self) -> &[T] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl<T: Float + std::iter::Sum> Mlp<T> {
    /// `sizes = [input, hidden.., output]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden_gain: f64, head_gain: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| Dense::init(sizes[i], sizes[i + 1], if i + 1 == n { head_gain } else { hidden_gain }, rng))
            .collect();
        Mlp { layers }
    }

    /// Same shapes, all zeros. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Mlp { layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameter arrays in declaration order: w0, b0, w1, b1, ...
    pub fn arrays(&self) -> Vec<&[T]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()]).collect()
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn fill_zero(&mut self) {
        for a in self.arrays_mut() {
            a.fill(T::zero());
        }
    }

    pub fn all_finite(&self) -> bool {
        self.arrays().iter().all(|a| a.iter().all(|v| v.is_finite()))
    }

    /// Forward pass. Zero inputs to the first layer are skipped, which makes
    /// one-hot heavy inputs cheap.
    pub fn forward(&self, x: &[T], trace: &mut Trace<T>) {
        debug_assert_eq!(x.len(), self.input_dim());
        trace.activations.resize_with(self.layers.len(), Vec::new);
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = trace.activations.split_at_mut(li);
            let input: &[T] = if li == 0 { x } else { &prev[li - 1] };
            let out = &mut rest[0];
            out.clear();
            out.extend_from_slice(&layer.bias);
            for (i, &xi) in input.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                for (o, &w) in out.iter_mut().zip(row) {
                    *o = *o + xi * w;
                }
            }
            if li != last {
                for o in out.iter_mut() {
                    *o = o.tanh();
                }
            }
        }
    }

    /// Accumulates the gradient of a scalar loss into `grads`, given
    /// `d_out = dL/d(output)` for the trace produced by `forward(x)`.
    pub fn backward(&self, x: &[T], trace: &Trace<T>, d_out: &[T], grads: &mut Mlp<T>) {
        let mut delta: Vec<T> = d_out.to_vec();
        let mut next = Vec::new();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let g = &mut grads.layers[li];
            let input: &[T] = if li == 0 { x } else { &trace.activations[li - 1] };
            for (gb, &d) in g.bias.iter_mut().zip(&delta) {
                *gb = *gb + d;
            }
            for (i, &xi) in input.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let row = &mut g.weights[i * layer.outputs..(i + 1) * layer.outputs];
                for (gw, &d) in row.iter_mut().zip(&delta) {
                    *gw = *gw + xi * d;
                }
            }
            if li == 0 {
                break;
            }
            next.clear();
            for (i, &a) in input.iter().enumerate() {
                let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                next.push(dot(row, &delta) * (T::one() - a * a));
            }
            std::mem::swap(&mut delta, &mut next);
        }
    }

    pub fn cast<U: Float>(&self) -> Mlp<U> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: l.weights.iter().map(|&w| U::from(w).unwrap()).collect(),
                    bias: l.bias.iter().map(|&b| U::from(b).unwrap()).collect(),
                })
                .collect(),
        }
    }
}

/// Adam optimizer state for one network.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Float + std::iter::Sum> Adam<T> {
    pub fn new(net: &Mlp<T>, lr: f64, eps: f64) -> Self {
        let zeros: Vec<Vec<T>> = net.arrays().iter().map(|a| vec![T::zero(); a.len()]).collect();
        Adam { lr, beta1: 0.9, beta2: 0.999, eps, step: 0, m: zeros.clone(), v: zeros }
    }

    /// Descends along `grads`.
    pub fn apply(&mut self, net: &mut Mlp<T>, grads: &Mlp<T>) {
        self.step += 1;
        let b1 = T::from(self.beta1).unwrap();
        let b2 = T::from(self.beta2).unwrap();
        let one = T::one();
        let c1 = one - b1.powi(self.step);
        let c2 = one - b2.powi(self.step);
        let lr = T::from(self.lr).unwrap();
        let eps = T::from(self.eps).unwrap();
        for (((p, g), m), v) in net.arrays_mut().into_iter().zip(grads.arrays()).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] = p[i] - lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}
