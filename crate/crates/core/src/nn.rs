//! Dense feed-forward Q networks with hand-written backpropagation and Adam.
//!
//! Hidden layers use a rectifier, the output layer is linear. Everything is
//! `f64`: the networks are small and gradient checks need the headroom.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag written into every network checkpoint.
pub const CHECKPOINT_VERSION: u32 = 1;

/// One fully connected layer. `weights` is row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().copied());
        for (o, row) in out.iter_mut().zip(self.weights.chunks_exact(self.inputs)) {
            *o += dot(row, input);
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Feed-forward network: ReLU on every hidden layer, identity on the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layer_sizes: Vec<usize>,
    layers: Vec<Dense>,
}

impl Network {
    /// Builds a network with weights drawn uniformly from
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` and zero biases.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-bound..=bound);
            }
        }
        Ok(net)
    }

    /// A network with every parameter set to zero.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::config(format!(
                "a network needs at least an input and an output layer, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::config(format!(
                "layer sizes must be positive, got {layer_sizes:?}"
            )));
        }
        let layers = layer_sizes
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1]))
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated at construction")
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Every parameter, layer by layer, weights before biases.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
    }

    fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if index < layer.weights.len() {
                return &mut layer.weights[index];
            }
            index -= layer.weights.len();
            if index < layer.biases.len() {
                return &mut layer.biases[index];
            }
            index -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.parameters().all(f64::is_finite)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut scratch = Scratch::default();
        self.forward_cached(input, &mut scratch);
        Ok(scratch.activations.pop().unwrap_or_default())
    }

    /// Runs a forward pass keeping every layer's post-activation output in
    /// `scratch.activations` (index 0 is the input).
    fn forward_cached(&self, input: &[f64], scratch: &mut Scratch) {
        let n = self.layers.len();
        scratch.activations.resize_with(n + 1, Vec::new);
        scratch.activations[0].clear();
        scratch.activations[0].extend_from_slice(input);
        for (k, layer) in self.layers.iter().enumerate() {
            let (done, rest) = scratch.activations.split_at_mut(k + 1);
            let out = &mut rest[0];
            layer.apply(&done[k], out);
            if k + 1 < n {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
    }

    /// Accumulates `d output[action] / d theta * scale` into `grads`, using
    /// the activations left in `scratch` by [`Self::forward_cached`].
    fn backward_unit(&self, action: usize, scale: f64, scratch: &mut Scratch, grads: &mut [Dense]) {
        let n = self.layers.len();
        scratch.delta.clear();
        scratch.delta.resize(self.output_dim(), 0.0);
        scratch.delta[action] = scale;
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let input = &scratch.activations[k];
            let grad = &mut grads[k];
            for (o, &d) in scratch.delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad.biases[o] += d;
                let row = &mut grad.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (g, &x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if k == 0 {
                break;
            }
            scratch.next_delta.clear();
            scratch.next_delta.resize(layer.inputs, 0.0);
            for (o, &d) in scratch.delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (nd, &w) in scratch.next_delta.iter_mut().zip(row) {
                    *nd += d * w;
                }
            }
            // ReLU derivative, evaluated on the hidden layer's output.
            for (nd, &a) in scratch.next_delta.iter_mut().zip(&scratch.activations[k]) {
                if a <= 0.0 {
                    *nd = 0.0;
                }
            }
            std::mem::swap(&mut scratch.delta, &mut scratch.next_delta);
        }
    }

    /// Gradient of `Q(input, action)` with respect to every parameter, in
    /// the order of [`Self::parameters`].
    pub fn output_gradient(&self, input: &[f64], action: usize) -> Result<Vec<f64>> {
        self.check_input(input)?;
        self.check_action(action)?;
        let mut scratch = Scratch::default();
        let mut grads = self.zeroed_like();
        self.forward_cached(input, &mut scratch);
        self.backward_unit(action, 1.0, &mut scratch, &mut grads);
        Ok(grads
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
            .collect())
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.output_dim() {
            return Err(Error::Dimension {
                what: "action index",
                expected: self.output_dim(),
                actual: action,
            });
        }
        Ok(())
    }

    fn zeroed_like(&self) -> Vec<Dense> {
        self.layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect()
    }

    fn check_same_shape(&self, other: &Network) -> Result<()> {
        if self.layer_sizes != other.layer_sizes {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.layer_sizes, other.layer_sizes
            )));
        }
        Ok(())
    }

    /// Moves every parameter toward `online`: `target = tau * online + (1 - tau) * target`.
    pub fn soft_update(&mut self, online: &Network, tau: f64) -> Result<()> {
        self.check_same_shape(online)?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::config(format!("tau must lie in [0, 1], got {tau}")));
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            for (tw, ow) in t.weights.iter_mut().zip(&o.weights) {
                *tw = tau * ow + (1.0 - tau) * *tw;
            }
            for (tb, ob) in t.biases.iter_mut().zip(&o.biases) {
                *tb = tau * ob + (1.0 - tau) * *tb;
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Scratch {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

/// Adam moment estimates for one [`Network`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first_moment: Vec<Dense>,
    second_moment: Vec<Dense>,
}

impl Adam {
    pub fn new(net: &Network, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: net.zeroed_like(),
            second_moment: net.zeroed_like(),
        }
    }

    fn matches(&self, net: &Network) -> bool {
        self.first_moment.len() == net.layers.len()
            && self
                .first_moment
                .iter()
                .zip(&net.layers)
                .all(|(m, l)| m.inputs == l.inputs && m.outputs == l.outputs)
    }

    fn apply(&mut self, net: &mut Network, grads: &[Dense]) {
        self.step += 1;
        let t = self.step as i32;
        let correction1 = 1.0 - self.beta1.powi(t);
        let correction2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for i in 0..layer.weights.len() {
                update(
                    &mut layer.weights[i],
                    g.weights[i],
                    &mut m.weights[i],
                    &mut v.weights[i],
                );
            }
            for i in 0..layer.biases.len() {
                update(
                    &mut layer.biases[i],
                    g.biases[i],
                    &mut m.biases[i],
                    &mut v.biases[i],
                );
            }
        }
    }
}

/// One sample of a weighted TD regression batch.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub target: f64,
}

/// Minimizes `(1/b) * sum_i (w_i * (y_i - Q(x_i, a_i)))^2` with one Adam step
/// and returns the loss evaluated before the update.
pub fn train_step(
    net: &mut Network,
    opt: &mut Adam,
    inputs: &[Vec<f64>],
    actions: &[usize],
    targets: &[f64],
    weights: &[f64],
) -> Result<f64> {
    let b = inputs.len();
    if actions.len() != b || targets.len() != b || weights.len() != b {
        return Err(Error::Batch(format!(
            "inputs {b}, actions {}, targets {}, weights {}",
            actions.len(),
            targets.len(),
            weights.len()
        )));
    }
    let samples: Vec<Sample<'_>> = inputs
        .iter()
        .zip(actions)
        .zip(targets)
        .map(|((input, &action), &target)| Sample {
            input,
            action,
            target,
        })
        .collect();
    train_step_with(net, opt, &samples, |i, _delta| weights[i])
}

/// Like [`train_step`], but the weight of sample `i` is decided from its TD
/// error `delta = y - Q(x, a)` by `weight_of(i, delta)`. This lets callers
/// with sign-dependent weights avoid a second forward pass.
pub fn train_step_with<F>(
    net: &mut Network,
    opt: &mut Adam,
    samples: &[Sample<'_>],
    mut weight_of: F,
) -> Result<f64>
where
    F: FnMut(usize, f64) -> f64,
{
    if samples.is_empty() {
        return Err(Error::Batch("empty batch".into()));
    }
    if !opt.matches(net) {
        return Err(Error::Shape(
            "optimizer state does not match network".into(),
        ));
    }
    for s in samples {
        net.check_input(s.input)?;
        net.check_action(s.action)?;
        if s.input.iter().any(|x| x.is_nan()) || s.target.is_nan() {
            return Err(Error::NonFinite("NaN in training batch"));
        }
    }
    let b = samples.len() as f64;
    let mut scratch = Scratch::default();
    let mut grads = net.zeroed_like();
    let mut loss = 0.0;
    let mut any_signal = false;
    for (i, s) in samples.iter().enumerate() {
        net.forward_cached(s.input, &mut scratch);
        let q = scratch.activations[net.layers.len()][s.action];
        let delta = s.target - q;
        let w = weight_of(i, delta);
        if w.is_nan() {
            return Err(Error::NonFinite("NaN sample weight"));
        }
        let refined = w * delta;
        loss += refined * refined;
        // d/dQ of (w * (y - Q))^2 / b
        let scale = -2.0 * w * refined / b;
        if scale != 0.0 {
            any_signal = true;
            net.backward_unit(s.action, scale, &mut scratch, &mut grads);
        }
    }
    let loss = loss / b;
    if !loss.is_finite() {
        return Err(Error::NonFinite("training loss diverged"));
    }
    // A zero gradient leaves parameters and moments untouched.
    if any_signal {
        opt.apply(net, &grads);
    }
    Ok(loss)
}

/// Largest relative discrepancy between the analytic gradient of
/// `Q(input, action)` and a central finite difference with step `epsilon`.
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn finite_diff_check(net: &Network, input: &[f64], action: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::config(format!(
            "finite-difference step must be positive, got {epsilon}"
        )));
    }
    let analytic = net.output_gradient(input, action)?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let original = *probe.parameter_mut(k);
        *probe.parameter_mut(k) = original + epsilon;
        let plus = probe.forward(input)?[action];
        *probe.parameter_mut(k) = original - epsilon;
        let minus = probe.forward(input)?[action];
        *probe.parameter_mut(k) = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let scale = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / scale);
    }
    Ok(worst)
}

/// Network plus optimizer state, serialized as versioned JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkCheckpoint {
    pub version: u32,
    pub network: Network,
    pub optimizer: Option<Adam>,
}

impl NetworkCheckpoint {
    pub fn new(network: Network, optimizer: Option<Adam>) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            network,
            optimizer,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self = serde_json::from_str(text)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported network checkpoint version {}",
                ckpt.version
            )));
        }
        let sizes = ckpt.network.layer_sizes.clone();
        let shape_ok = ckpt.network.layers.len() + 1 == sizes.len()
            && ckpt.network.layers.iter().enumerate().all(|(k, l)| {
                l.inputs == sizes[k]
                    && l.outputs == sizes[k + 1]
                    && l.weights.len() == l.inputs * l.outputs
                    && l.biases.len() == l.outputs
            });
        if !shape_ok {
            return Err(Error::Checkpoint("layer shapes are inconsistent".into()));
        }
        if let Some(opt) = &ckpt.optimizer {
            if !opt.matches(&ckpt.network) {
                return Err(Error::Checkpoint(
                    "optimizer shapes do not match network".into(),
                ));
            }
        }
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_net() -> Network {
        let mut net = Network::zeros(&[1, 1]).unwrap();
        net.layers_mut()[0].weights[0] = 1.0;
        net
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = Network::new(&[3, 2, 1], 7).unwrap();
        let b = Network::new(&[3, 2, 1], 7).unwrap();
        assert_eq!(a, b);
        let c = Network::new(&[3, 2, 1], 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn q_network_has_one_output_per_phase() {
        let net = Network::new(&[16, 200, 200, 4], 1).unwrap();
        assert_eq!(net.forward(&[0.5; 16]).unwrap().len(), 4);
    }

    #[test]
    fn rejects_bad_layer_sizes() {
        assert!(matches!(Network::new(&[], 0), Err(Error::Config(_))));
        assert!(matches!(Network::new(&[3], 0), Err(Error::Config(_))));
        assert!(matches!(Network::new(&[3, 0, 1], 0), Err(Error::Config(_))));
    }

    #[test]
    fn initialization_respects_fan_in_bound() {
        let net = Network::new(&[9, 5, 2], 3).unwrap();
        for layer in net.layers() {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() <= bound));
            assert!(layer.biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn forward_basics() {
        let zero = Network::zeros(&[3, 4, 2]).unwrap();
        assert_eq!(zero.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(identity_net().forward(&[-3.25]).unwrap(), vec![-3.25]);
        let net = Network::new(&[3, 8, 2], 11).unwrap();
        let x = [0.1, 0.2, -0.3];
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
        assert!(matches!(net.forward(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn zero_weights_leave_parameters_alone() {
        let mut net = Network::new(&[2, 4, 3], 5).unwrap();
        let before = net.clone();
        let mut opt = Adam::new(&net, 1e-3);
        let loss = train_step(
            &mut net,
            &mut opt,
            &[vec![1.0, 2.0], vec![-1.0, 0.5]],
            &[0, 2],
            &[10.0, -4.0],
            &[0.0, 0.0],
        )
        .unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net, before);
        assert_eq!(opt.step, 0);
    }

    #[test]
    fn target_equal_to_prediction_is_a_fixed_point() {
        let mut net = Network::new(&[2, 4, 3], 5).unwrap();
        let x = vec![0.3, -0.7];
        let q = net.forward(&x).unwrap()[1];
        let before = net.clone();
        let mut opt = Adam::new(&net, 1e-3);
        let loss = train_step(&mut net, &mut opt, &[x], &[1], &[q], &[1.0]).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net, before);
    }

    #[test]
    fn training_reduces_loss() {
        let mut net = Network::new(&[1, 8, 1], 2).unwrap();
        let mut opt = Adam::new(&net, 1e-2);
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 8.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x[0] - 1.0).collect();
        let first = train_step(&mut net, &mut opt, &xs, &[0; 8], &ys, &[1.0; 8]).unwrap();
        let mut last = first;
        for _ in 0..500 {
            last = train_step(&mut net, &mut opt, &xs, &[0; 8], &ys, &[1.0; 8]).unwrap();
        }
        assert!(last < first * 0.01, "{first} -> {last}");
        assert!(net.all_finite());
    }

    #[test]
    fn batch_errors() {
        let mut net = Network::new(&[1, 1], 0).unwrap();
        let mut opt = Adam::new(&net, 1e-3);
        let r = train_step(&mut net, &mut opt, &[vec![1.0]], &[0, 0], &[1.0], &[1.0]);
        assert!(matches!(r, Err(Error::Batch(_))));
        let r = train_step(&mut net, &mut opt, &[vec![f64::NAN]], &[0], &[1.0], &[1.0]);
        assert!(matches!(r, Err(Error::NonFinite(_))));
        let r = train_step(&mut net, &mut opt, &[vec![1.0]], &[0], &[f64::NAN], &[1.0]);
        assert!(matches!(r, Err(Error::NonFinite(_))));
        let r = train_step(&mut net, &mut opt, &[], &[], &[], &[]);
        assert!(matches!(r, Err(Error::Batch(_))));
    }

    #[test]
    fn soft_update_endpoints() {
        let online = Network::new(&[2, 3, 2], 1).unwrap();
        let mut target = Network::new(&[2, 3, 2], 2).unwrap();
        let original = target.clone();
        target.soft_update(&online, 0.0).unwrap();
        assert_eq!(target, original);
        target.soft_update(&online, 1.0).unwrap();
        assert_eq!(target, online);

        let mut zeros = Network::zeros(&[1, 1]).unwrap();
        let mut ones = Network::zeros(&[1, 1]).unwrap();
        ones.layers_mut()[0].weights[0] = 1.0;
        ones.layers_mut()[0].biases[0] = 1.0;
        zeros.soft_update(&ones, 0.001).unwrap();
        assert_eq!(zeros.layers()[0].weights[0], 0.001);
        assert_eq!(zeros.layers()[0].biases[0], 0.001);

        let other = Network::zeros(&[2, 2]).unwrap();
        assert!(matches!(
            zeros.soft_update(&other, 0.5),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn finite_differences_on_linear_net_are_exact() {
        let net = Network::new(&[4, 3], 9).unwrap();
        let err = finite_diff_check(&net, &[0.5, -1.0, 2.0, 0.25], 2, 1e-5).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn finite_differences_on_paper_sized_net() {
        let net = Network::new(&[16, 200, 200, 4], 21).unwrap();
        let input: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 - 1.3).collect();
        let err = finite_diff_check(&net, &input, 3, 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn finite_difference_step_must_be_positive() {
        let net = Network::new(&[2, 2], 0).unwrap();
        assert!(finite_diff_check(&net, &[1.0, 1.0], 0, 0.0).is_err());
        assert!(finite_diff_check(&net, &[1.0, 1.0], 0, -1e-5).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut net = Network::new(&[3, 5, 2], 4).unwrap();
        let mut opt = Adam::new(&net, 1e-3);
        train_step(
            &mut net,
            &mut opt,
            &[vec![0.1, 0.2, 0.3]],
            &[1],
            &[0.7],
            &[1.0],
        )
        .unwrap();
        let ckpt = NetworkCheckpoint::new(net, Some(opt));
        let back = NetworkCheckpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
        assert_eq!(back, ckpt);
        let bits =
            |c: &NetworkCheckpoint| c.network.parameters().map(f64::to_bits).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&ckpt));
    }

    #[test]
    fn checkpoint_rejects_unknown_version() {
        let ckpt = NetworkCheckpoint {
            version: 99,
            network: Network::zeros(&[1, 1]).unwrap(),
            optimizer: None,
        };
        let text = serde_json::to_string(&ckpt).unwrap();
        assert!(matches!(
            NetworkCheckpoint::from_json(&text),
            Err(Error::Checkpoint(_))
        ));
    }
}
