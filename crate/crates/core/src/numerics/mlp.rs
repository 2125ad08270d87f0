use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

/// Nonlinearity applied after an affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    /// Bounded-symmetric squashing into [-1, 1].
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and the output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Weight initialisation rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitRule {
    /// Uniform in ±1/√fan_in.
    FanInUniform,
    /// All weights zero.
    Zero,
}

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// A fully-connected feed-forward network.
///
/// Layer `l` maps `layer_sizes[l]` inputs to `layer_sizes[l + 1]` outputs with
/// a weight matrix of shape `(out, in)`. Hidden layers share one activation,
/// the final layer uses `output`.
#[derive(Debug, Clone)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    pub(crate) weights: Vec<Array2<f64>>,
    pub(crate) biases: Vec<Array1<f64>>,
    hidden: Activation,
    output: Activation,
    generation: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layer_sizes == other.layer_sizes
            && self.hidden == other.hidden
            && self.output == other.output
            && self.weights == other.weights
            && self.biases == other.biases
    }
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
    outputs: Array2<f64>,
}

impl ForwardCache {
    pub fn outputs(&self) -> &Array2<f64> {
        &self.outputs
    }

    pub fn batch_size(&self) -> usize {
        self.outputs.nrows()
    }
}

/// Parameter gradients (summed over the batch) plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    /// d loss / d input, one row per batch element.
    pub input: Array2<f64>,
}

impl Gradients {
    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a network needs at least an input and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "layer widths must be positive, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

impl Mlp {
    /// Builds a network with biases zero and weights drawn per `rule`.
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rule: InitRule,
        rng: &mut R,
    ) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let w = match rule {
                InitRule::Zero => Array2::zeros((fan_out, fan_in)),
                InitRule::FanInUniform => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    Array2::from_shape_simple_fn((fan_out, fan_in), || {
                        rng.random_range(-bound..bound)
                    })
                }
            };
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            hidden,
            output,
            generation: next_generation(),
        })
    }

    /// Assembles a network from explicit parameters.
    pub fn from_parameters(
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        hidden: Activation,
        output: Activation,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Architecture(format!(
                "{} weight matrices but {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        let mut layer_sizes = vec![weights[0].ncols()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            ensure_dim("layer input width", layer_sizes[l], w.ncols())?;
            ensure_dim("bias length", w.nrows(), b.len())?;
            layer_sizes.push(w.nrows());
        }
        validate_sizes(&layer_sizes)?;
        if weights.iter().any(|w| w.iter().any(|v| !v.is_finite()))
            || biases.iter().any(|b| b.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            hidden,
            output,
            generation: next_generation(),
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn parameter_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    /// Mutable access to the raw parameters; invalidates outstanding caches.
    pub fn parameters_mut(&mut self) -> (&mut [Array2<f64>], &mut [Array1<f64>]) {
        self.touch();
        (&mut self.weights, &mut self.biases)
    }

    pub(crate) fn touch(&mut self) {
        self.generation = next_generation();
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layer_sizes == other.layer_sizes
            && self.hidden == other.hidden
            && self.output == other.output
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.weights.len() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Evaluates one input vector.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        ensure_dim("network input", self.input_size(), input.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        let cache = self.forward_batch(x)?;
        let out = cache.outputs.row(0).to_vec();
        Ok((out, cache))
    }

    /// Evaluates a batch laid out one input per row.
    pub fn forward_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        ensure_dim("network input", self.input_size(), inputs.ncols())?;
        let layers = self.weights.len();
        let mut cached_inputs = Vec::with_capacity(layers);
        let mut pre_activations = Vec::with_capacity(layers);
        let mut x = inputs.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = x.dot(&w.t());
            z += b;
            let act = self.activation_for(l);
            let a = z.mapv(|v| act.apply(v));
            cached_inputs.push(x);
            pre_activations.push(z);
            x = a;
        }
        Ok(ForwardCache {
            generation: self.generation,
            inputs: cached_inputs,
            pre_activations,
            outputs: x,
        })
    }

    /// Convenience: outputs only.
    pub fn predict_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward_batch(inputs)?.outputs)
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0)
    }

    /// Backpropagates `output_gradient` (d loss / d output, one row per batch
    /// element) through the cached forward pass. Parameter gradients are
    /// summed over the batch.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: ArrayView2<'_, f64>,
    ) -> Result<Gradients> {
        if cache.generation != self.generation || cache.inputs.len() != self.weights.len() {
            return Err(Error::StaleCache);
        }
        ensure_dim("output gradient rows", cache.batch_size(), output_gradient.nrows())?;
        ensure_dim("output gradient width", self.output_size(), output_gradient.ncols())?;

        let layers = self.weights.len();
        let mut dw = vec![Array2::zeros((0, 0)); layers];
        let mut db = vec![Array1::zeros(0); layers];
        let mut upstream = output_gradient.to_owned();
        for l in (0..layers).rev() {
            let act = self.activation_for(l);
            let z = &cache.pre_activations[l];
            let a = if l + 1 == layers {
                &cache.outputs
            } else {
                &cache.inputs[l + 1]
            };
            let mut dz = upstream;
            ndarray::Zip::from(&mut dz)
                .and(z)
                .and(a)
                .for_each(|g, &zv, &av| *g *= act.derivative(zv, av));
            dw[l] = dz.t().dot(&cache.inputs[l]);
            db[l] = dz.sum_axis(Axis(0));
            upstream = dz.dot(&self.weights[l]);
        }
        Ok(Gradients {
            weights: dw,
            biases: db,
            input: upstream,
        })
    }
}

/// Blends `target ← tau·online + (1 − tau)·target` elementwise.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !target.same_architecture(online) {
        return Err(Error::Architecture(format!(
            "target {:?} vs online {:?}",
            target.layer_sizes, online.layer_sizes
        )));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("tau must lie in [0, 1], got {tau}")));
    }
    if tau == 0.0 {
        return Ok(());
    }
    if tau == 1.0 {
        target.weights.clone_from(&online.weights);
        target.biases.clone_from(&online.biases);
    } else {
        let keep = 1.0 - tau;
        for (t, o) in target.weights.iter_mut().zip(&online.weights) {
            ndarray::Zip::from(t).and(o).for_each(|t, &o| *t = tau * o + keep * *t);
        }
        for (t, o) in target.biases.iter_mut().zip(&online.biases) {
            ndarray::Zip::from(t).and(o).for_each(|t, &o| *t = tau * o + keep * *t);
        }
    }
    target.touch();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use ndarray::array;

    fn net(sizes: &[usize], out: Activation, seed: u64) -> Mlp {
        Mlp::new(sizes, Activation::Relu, out, InitRule::FanInUniform, &mut rng_from_seed(seed))
            .unwrap()
    }

    #[test]
    fn shape_contract() {
        let m = net(&[2, 1], Activation::Linear, 3);
        assert_eq!(m.weights()[0].dim(), (1, 2));
        assert_eq!(m.biases()[0], array![0.0]);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        assert_eq!(net(&[3, 5, 2], Activation::Tanh, 11), net(&[3, 5, 2], Activation::Tanh, 11));
        assert_ne!(net(&[3, 5, 2], Activation::Tanh, 11), net(&[3, 5, 2], Activation::Tanh, 12));
    }

    #[test]
    fn parameter_count_closed_form() {
        let m = net(&[3, 256, 256, 4], Activation::Linear, 0);
        assert_eq!(m.parameter_count(), 3 * 256 + 256 + 256 * 256 + 256 + 256 * 4 + 4);
        assert_eq!(m.parameter_count(), 67_844);
    }

    #[test]
    fn rejects_bad_layer_lists() {
        let mut rng = rng_from_seed(0);
        for sizes in [&[][..], &[4][..], &[3, 0, 1][..]] {
            assert!(Mlp::new(sizes, Activation::Relu, Activation::Linear, InitRule::Zero, &mut rng)
                .is_err());
        }
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let m = net(&[16, 8, 1], Activation::Linear, 5);
        assert!(m.weights()[0].iter().all(|w| w.abs() < 0.25));
        assert!(m.weights()[1].iter().all(|w| w.abs() < 1.0 / 8f64.sqrt()));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let m = Mlp::new(
            &[3, 4, 2],
            Activation::Relu,
            Activation::Linear,
            InitRule::Zero,
            &mut rng_from_seed(0),
        )
        .unwrap();
        assert_eq!(m.predict(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn input_dimension_checked() {
        let m = net(&[3, 2], Activation::Linear, 1);
        assert!(matches!(m.forward(&[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    /// Scalar re-implementation of a 2-3-1 relu/linear network.
    #[test]
    fn matches_hand_composed_evaluation() {
        let m = net(&[2, 3, 1], Activation::Linear, 42);
        let x = [0.3, -1.7];
        let (w0, b0, w1, b1) = (&m.weights()[0], &m.biases()[0], &m.weights()[1], &m.biases()[1]);
        let mut hidden = [0.0; 3];
        for j in 0..3 {
            let z = w0[[j, 0]] * x[0] + w0[[j, 1]] * x[1] + b0[j];
            hidden[j] = if z > 0.0 { z } else { 0.0 };
        }
        let expected = w1[[0, 0]] * hidden[0] + w1[[0, 1]] * hidden[1] + w1[[0, 2]] * hidden[2] + b1[0];
        let got = m.predict(&x).unwrap()[0];
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let m = net(&[3, 4, 2], Activation::Tanh, 2);
        let (_, cache) = m.forward(&[0.1, 0.2, 0.3]).unwrap();
        let g = m.backward(&cache, Array2::zeros((1, 2)).view()).unwrap();
        assert!(g.weights.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(g.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert!(g.input.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_layer_gradient() {
        let m = Mlp::from_parameters(
            vec![array![[1.0, 2.0], [3.0, 4.0]]],
            vec![array![0.5, -0.5]],
            Activation::Relu,
            Activation::Linear,
        )
        .unwrap();
        let x = [2.0, -1.0];
        let (_, cache) = m.forward(&x).unwrap();
        let g = array![[0.25, -3.0]];
        let grads = m.backward(&cache, g.view()).unwrap();
        // dW = g xᵀ, db = g, dx = Wᵀ g
        assert_eq!(grads.weights[0], array![[0.5, -0.25], [-6.0, 3.0]]);
        assert_eq!(grads.biases[0], array![0.25, -3.0]);
        assert_eq!(grads.input, array![[0.25 * 1.0 - 3.0 * 3.0, 0.25 * 2.0 - 3.0 * 4.0]]);
    }

    #[test]
    fn stale_cache_rejected() {
        let mut m = net(&[2, 3, 1], Activation::Linear, 1);
        let (_, cache) = m.forward(&[1.0, 1.0]).unwrap();
        m.parameters_mut().1[0][0] += 1.0;
        assert!(matches!(m.backward(&cache, array![[1.0]].view()), Err(Error::StaleCache)));
        let other = net(&[2, 3, 1], Activation::Linear, 1);
        let (_, cache) = other.forward(&[1.0, 1.0]).unwrap();
        assert!(matches!(m.backward(&cache, array![[1.0]].view()), Err(Error::StaleCache)));
    }

    #[test]
    fn soft_update_extremes_and_blend() {
        let online = net(&[2, 3, 1], Activation::Linear, 1);
        let mut target = net(&[2, 3, 1], Activation::Linear, 2);
        let before = target.clone();
        soft_update(&mut target, &online, 0.0).unwrap();
        assert_eq!(target, before);
        soft_update(&mut target, &online, 1.0).unwrap();
        assert_eq!(target, online);

        let zero = |v: f64| {
            Mlp::from_parameters(
                vec![array![[v]]],
                vec![array![v]],
                Activation::Relu,
                Activation::Linear,
            )
            .unwrap()
        };
        let mut t = zero(0.0);
        soft_update(&mut t, &zero(1.0), 0.005).unwrap();
        assert_eq!(t.weights()[0][[0, 0]], 0.005);
        assert_eq!(t.biases()[0][0], 0.005);
    }

    #[test]
    fn soft_update_rejects_mismatch() {
        let online = net(&[2, 3, 1], Activation::Linear, 1);
        let mut target = net(&[2, 4, 1], Activation::Linear, 2);
        assert!(matches!(soft_update(&mut target, &online, 0.5), Err(Error::Architecture(_))));
        let mut same = net(&[2, 3, 1], Activation::Linear, 2);
        assert!(soft_update(&mut same, &online, 1.5).is_err());
    }
}
