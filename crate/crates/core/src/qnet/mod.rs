//! Fully-connected Q-function approximator trained from scratch.
//!
//! The network maps a 12-dimensional normalized queue state to one Q-value
//! per signal phase through rectified-linear hidden layers. Gradients of
//! the Huber TD loss are computed analytically; updates use classic SGD
//! with momentum. A frozen copy of the parameters serves as the target
//! network for the learning targets.

mod io;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use thiserror::Error;

pub use io::{load_params, save_params, ModelMeta};

/// Failures of the network layer stack or its persistence.
#[derive(Debug, Error)]
pub enum QnetError {
    #[error("non-finite network input")]
    NonFiniteInput,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("model file not found: {0}")]
    MissingFile(std::path::PathBuf),
    #[error("failed reading model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("model architecture mismatch: {0}")]
    ArchitectureMismatch(String),
}

/// One dense layer: `weights` is (output × input), `bias` has one entry per
/// output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Weights and biases of the Q-function approximator. Hidden layers use
/// rectified-linear activations; the output layer is affine.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layers: Vec<Layer>,
}

impl NetworkParams {
    /// Fresh parameters for the given layer sizes, weights drawn uniformly
    /// on ±1/√fan_in, biases zero.
    pub fn seeded<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weights =
                    Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-bound..bound));
                Layer {
                    weights,
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        NetworkParams { layers }
    }

    /// Assemble a network from explicit layers, checking that consecutive
    /// shapes chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, QnetError> {
        if layers.is_empty() {
            return Err(QnetError::ShapeMismatch("no layers".into()));
        }
        for layer in &layers {
            if layer.weights.nrows() != layer.bias.len() {
                return Err(QnetError::ShapeMismatch(format!(
                    "bias length {} does not match {} output rows",
                    layer.bias.len(),
                    layer.weights.nrows()
                )));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].weights.nrows() != pair[1].weights.ncols() {
                return Err(QnetError::ShapeMismatch(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].weights.nrows(),
                    pair[1].weights.ncols()
                )));
            }
        }
        Ok(NetworkParams { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Layer sizes from input to output, e.g. `[12, 64, 64, 8]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].weights.ncols()];
        sizes.extend(self.layers.iter().map(|l| l.weights.nrows()));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").weights.nrows()
    }

    /// Q-values for a single state. Pure: identical inputs give identical
    /// outputs, and non-finite inputs are rejected.
    pub fn forward(&self, input: &[f64]) -> Result<Array1<f64>, QnetError> {
        if input.len() != self.input_dim() {
            return Err(QnetError::ShapeMismatch(format!(
                "input length {} expected {}",
                input.len(),
                self.input_dim()
            )));
        }
        if !input.iter().all(|x| x.is_finite()) {
            return Err(QnetError::NonFiniteInput);
        }
        let mut activation = Array1::from(input.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&activation) + &layer.bias;
            if k < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            activation = z;
        }
        Ok(activation)
    }

    /// Q-values for a batch of states, one sample per row.
    pub fn forward_batch(&self, inputs: &Array2<f64>) -> Array2<f64> {
        let (_, activations) = self.forward_batch_cached(inputs);
        activations.into_iter().next_back().expect("output layer")
    }

    /// Forward pass keeping pre-activations and activations of every layer;
    /// `activations[0]` is the input, the last entry the output.
    fn forward_batch_cached(&self, inputs: &Array2<f64>) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
        let last = self.layers.len() - 1;
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.clone());
        for (k, layer) in self.layers.iter().enumerate() {
            let z = activations[k].dot(&layer.weights.t()) + &layer.bias;
            let a = if k < last {
                z.mapv(|v| v.max(0.0))
            } else {
                z.clone()
            };
            pre_activations.push(z);
            activations.push(a);
        }
        (pre_activations, activations)
    }
}

/// The Huber loss between prediction `x` and target `y`: quadratic inside
/// the unit error band, linear with slope one outside.
pub fn huber(x: f64, y: f64) -> f64 {
    let e = y - x;
    if e.abs() < 1.0 {
        0.5 * e * e
    } else {
        e.abs() - 0.5
    }
}

/// Derivative of [`huber`] with respect to the prediction; bounded by ±1.
pub fn huber_slope(x: f64, y: f64) -> f64 {
    (x - y).clamp(-1.0, 1.0)
}

/// Index of the largest entry, ties broken toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// A batch of transitions laid out for network evaluation: one row per
/// sample in `states` and `next_states`.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub states: Array2<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Learning targets `y = R + γ·Q(s′, argmax_a Q(s′, a; θ); θ⁻)`: the online
/// network selects the action, the target network evaluates it. Targets are
/// constants; no gradient flows through them.
pub fn td_targets(
    online: &NetworkParams,
    target: &NetworkParams,
    batch: &Minibatch,
    gamma: f64,
) -> Vec<f64> {
    assert!((0.0..1.0).contains(&gamma) && gamma > 0.0, "gamma in (0,1)");
    let q_online = online.forward_batch(&batch.next_states);
    let q_target = target.forward_batch(&batch.next_states);
    (0..batch.len())
        .map(|i| {
            let row = q_online.row(i);
            let best = argmax(row.as_slice().expect("contiguous row"));
            batch.rewards[i] + gamma * q_target[(i, best)]
        })
        .collect()
}

/// Per-parameter gradients, shaped exactly like the network layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Mean Huber loss over the batch and its gradient with respect to every
/// parameter. Only the chosen action's output contributes per sample.
pub fn batch_gradients(
    online: &NetworkParams,
    batch: &Minibatch,
    targets: &[f64],
) -> Result<(Gradients, f64), QnetError> {
    let n = batch.len();
    if targets.len() != n || batch.states.nrows() != n || batch.next_states.nrows() != n {
        return Err(QnetError::ShapeMismatch(format!(
            "batch of {n} states with {} targets",
            targets.len()
        )));
    }
    if batch.states.ncols() != online.input_dim() {
        return Err(QnetError::ShapeMismatch(format!(
            "state width {} expected {}",
            batch.states.ncols(),
            online.input_dim()
        )));
    }
    if !targets.iter().all(|t| t.is_finite()) {
        return Err(QnetError::NonFiniteInput);
    }
    let out_dim = online.output_dim();
    if let Some(a) = batch.actions.iter().find(|a| **a >= out_dim) {
        return Err(QnetError::ShapeMismatch(format!(
            "action index {a} out of range {out_dim}"
        )));
    }

    let (pre_activations, activations) = online.forward_batch_cached(&batch.states);
    let q = activations.last().expect("output");

    let mut loss = 0.0;
    let mut delta = Array2::zeros((n, out_dim));
    for i in 0..n {
        let predicted = q[(i, batch.actions[i])];
        loss += huber(predicted, targets[i]);
        delta[(i, batch.actions[i])] = huber_slope(predicted, targets[i]) / n as f64;
    }
    loss /= n as f64;

    let mut grads: Vec<Layer> = Vec::with_capacity(online.layers.len());
    for k in (0..online.layers.len()).rev() {
        let weight_grad = delta.t().dot(&activations[k]);
        let bias_grad = delta.sum_axis(Axis(0));
        grads.push(Layer {
            weights: weight_grad,
            bias: bias_grad,
        });
        if k > 0 {
            let mask = pre_activations[k - 1].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
            delta = delta.dot(&online.layers[k].weights) * &mask;
        }
    }
    grads.reverse();
    Ok((Gradients { layers: grads }, loss))
}

/// Velocity buffers for classic (non-Nesterov) momentum.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Layer>,
}

impl OptimizerState {
    pub fn new(learning_rate: f64, momentum: f64, params: &NetworkParams) -> Self {
        let velocity = params
            .layers
            .iter()
            .map(|l| Layer {
                weights: Array2::zeros(l.weights.raw_dim()),
                bias: Array1::zeros(l.bias.raw_dim()),
            })
            .collect();
        OptimizerState {
            learning_rate,
            momentum,
            velocity,
        }
    }
}

/// One momentum update: `v ← μ·v + g`, `θ ← θ − η·v`.
pub fn sgd_momentum_step(
    params: &mut NetworkParams,
    grads: &Gradients,
    opt: &mut OptimizerState,
) -> Result<(), QnetError> {
    if grads.layers.len() != params.layers.len() {
        return Err(QnetError::ShapeMismatch(format!(
            "{} gradient layers for {} parameter layers",
            grads.layers.len(),
            params.layers.len()
        )));
    }
    for ((layer, grad), vel) in params.layers.iter().zip(&grads.layers).zip(&opt.velocity) {
        if layer.weights.raw_dim() != grad.weights.raw_dim()
            || layer.bias.raw_dim() != grad.bias.raw_dim()
            || layer.weights.raw_dim() != vel.weights.raw_dim()
        {
            return Err(QnetError::ShapeMismatch(
                "gradient shape does not mirror parameters".into(),
            ));
        }
    }
    for ((layer, grad), vel) in params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(opt.velocity.iter_mut())
    {
        vel.weights *= opt.momentum;
        vel.weights += &grad.weights;
        vel.bias *= opt.momentum;
        vel.bias += &grad.bias;
        layer.weights.scaled_add(-opt.learning_rate, &vel.weights);
        layer.bias.scaled_add(-opt.learning_rate, &vel.bias);
    }
    Ok(())
}

/// Deep copy of the online parameters; later online updates leave the copy
/// untouched.
pub fn copy_into_target(online: &NetworkParams) -> NetworkParams {
    online.clone()
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use ndarray::arr2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_batch<R: Rng>(net: &NetworkParams, n: usize, rng: &mut R) -> (Minibatch, Vec<f64>) {
        let input = net.input_dim();
        let out = net.output_dim();
        let states = Array2::from_shape_fn((n, input), |_| rng.random_range(-1.0..1.0));
        let next_states = Array2::from_shape_fn((n, input), |_| rng.random_range(-1.0..1.0));
        let actions = (0..n).map(|_| rng.random_range(0..out)).collect();
        let rewards = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let batch = Minibatch {
            states,
            actions,
            rewards,
            next_states,
        };
        let targets = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        (batch, targets)
    }

    #[test]
    fn zero_network_maps_everything_to_zero() {
        let layers = vec![
            Layer {
                weights: Array2::zeros((4, 3)),
                bias: Array1::zeros(4),
            },
            Layer {
                weights: Array2::zeros((2, 4)),
                bias: Array1::zeros(2),
            },
        ];
        let net = NetworkParams::from_layers(layers).unwrap();
        let out = net.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(out.to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn two_unit_toy_network_hand_evaluated() {
        // Identity-like hidden layer, then sum the rectified units plus 0.5.
        let net = NetworkParams::from_layers(vec![
            Layer {
                weights: arr2(&[[1.0, 0.0], [0.0, 1.0]]),
                bias: Array1::zeros(2),
            },
            Layer {
                weights: arr2(&[[1.0, 1.0]]),
                bias: Array1::from(vec![0.5]),
            },
        ])
        .unwrap();
        let out = net.forward(&[2.0, -3.0]).unwrap();
        assert_eq!(out.to_vec(), vec![2.5]);
    }

    #[test]
    fn forward_rejects_non_finite_input() {
        let net = NetworkParams::seeded(&[3, 4, 2], &mut rng(0));
        assert!(matches!(
            net.forward(&[1.0, f64::NAN, 0.0]),
            Err(QnetError::NonFiniteInput)
        ));
    }

    #[test]
    fn forward_is_pure_and_copy_exact() {
        let net = NetworkParams::seeded(&[12, 8, 8], &mut rng(1));
        let copy = copy_into_target(&net);
        let mut r = rng(2);
        for _ in 0..100 {
            let x: Vec<f64> = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
            let a = net.forward(&x).unwrap();
            assert_eq!(a, net.forward(&x).unwrap());
            assert_eq!(a, copy.forward(&x).unwrap());
        }
    }

    #[test]
    fn mutating_online_leaves_target_unchanged() {
        let mut online = NetworkParams::seeded(&[4, 6, 3], &mut rng(3));
        let target = copy_into_target(&online);
        let probe: Vec<f64> = vec![0.3, -0.2, 0.9, 0.1];
        let before = target.forward(&probe).unwrap();
        online.layers[0].weights[[0, 0]] += 10.0;
        assert_eq!(target.forward(&probe).unwrap(), before);
        assert_ne!(online.forward(&probe).unwrap(), before);
    }

    #[test]
    fn huber_matches_both_branches_and_the_knee() {
        assert_eq!(huber(0.0, 0.5), 0.125);
        assert_eq!(huber(0.0, 3.0), 2.5);
        assert_eq!(huber(1.5, 1.5), 0.0);
        // Both branch formulas agree at |y − x| = 1.
        assert_eq!(0.5 * 1.0f64 * 1.0, 1.0 - 0.5);
        assert_eq!(huber(0.0, 1.0), 0.5);
    }

    #[test]
    fn huber_slope_is_bounded() {
        for (x, y) in [(0.0, 0.5), (0.0, 3.0), (3.0, 0.0), (-2.0, 4.0)] {
            assert!(huber_slope(x, y).abs() <= 1.0);
        }
        assert_eq!(huber_slope(0.0, 0.5), -0.5);
        assert_eq!(huber_slope(4.0, 0.0), 1.0);
    }

    #[test]
    fn targets_with_constant_network_ignore_argmax() {
        let online = NetworkParams::seeded(&[3, 4, 5], &mut rng(4));
        // Zero weights, constant bias: every action scores the same.
        let target = NetworkParams::from_layers(vec![
            Layer {
                weights: Array2::zeros((4, 3)),
                bias: Array1::zeros(4),
            },
            Layer {
                weights: Array2::zeros((5, 4)),
                bias: Array1::from(vec![2.0; 5]),
            },
        ])
        .unwrap();
        let (mut batch, _) = random_batch(&online, 6, &mut rng(5));
        batch.rewards = vec![1.0; 6];
        let ys = td_targets(&online, &target, &batch, 0.999);
        for y in ys {
            assert_relative_eq!(y, 1.0 + 0.999 * 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn target_after_copy_reduces_to_plain_max_backup() {
        let online = NetworkParams::seeded(&[4, 8, 3], &mut rng(6));
        let target = copy_into_target(&online);
        let (batch, _) = random_batch(&online, 10, &mut rng(7));
        let ys = td_targets(&online, &target, &batch, 0.9);
        let q_next = online.forward_batch(&batch.next_states);
        for (i, y) in ys.iter().enumerate() {
            let max = q_next.row(i).iter().cloned().fold(f64::MIN, f64::max);
            assert_relative_eq!(*y, batch.rewards[i] + 0.9 * max, epsilon = 1e-12);
        }
    }

    #[test]
    fn td_target_arithmetic() {
        // Online net picks its own best action, the target net prices it.
        let online = NetworkParams::from_layers(vec![Layer {
            weights: Array2::zeros((4, 2)),
            bias: Array1::from(vec![0.0, 0.0, 0.0, 7.0]),
        }])
        .unwrap();
        let target = NetworkParams::from_layers(vec![Layer {
            weights: Array2::zeros((4, 2)),
            bias: Array1::from(vec![9.0, 9.0, 9.0, 1.0]),
        }])
        .unwrap();
        let batch = Minibatch {
            states: Array2::zeros((1, 2)),
            actions: vec![0],
            rewards: vec![2.0],
            next_states: Array2::zeros((1, 2)),
        };
        let ys = td_targets(&online, &target, &batch, 0.999);
        assert_relative_eq!(ys[0], 2.999, epsilon = 1e-12);
    }

    #[test]
    fn perfect_predictions_give_zero_loss_and_gradient() {
        let net = NetworkParams::seeded(&[4, 6, 3], &mut rng(8));
        let (batch, _) = random_batch(&net, 5, &mut rng(9));
        let q = net.forward_batch(&batch.states);
        let targets: Vec<f64> = (0..5).map(|i| q[(i, batch.actions[i])]).collect();
        let (grads, loss) = batch_gradients(&net, &batch, &targets).unwrap();
        assert_eq!(loss, 0.0);
        for layer in grads.layers {
            assert!(layer.weights.iter().all(|g| *g == 0.0));
            assert!(layer.bias.iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn gradient_sparsity_follows_chosen_actions() {
        let net = NetworkParams::seeded(&[3, 5, 4], &mut rng(10));
        let (mut batch, targets) = random_batch(&net, 4, &mut rng(11));
        batch.actions = vec![2, 2, 2, 2];
        let (grads, _) = batch_gradients(&net, &batch, &targets).unwrap();
        let out_bias = &grads.layers.last().unwrap().bias;
        for (i, g) in out_bias.iter().enumerate() {
            if i == 2 {
                assert!(*g != 0.0);
            } else {
                assert_eq!(*g, 0.0, "untouched action row must have zero gradient");
            }
        }
        // Scaling rewards (hence targets) preserves the sparsity pattern.
        let scaled: Vec<f64> = targets.iter().map(|t| t * 10.0).collect();
        let (grads2, _) = batch_gradients(&net, &batch, &scaled).unwrap();
        let out2 = &grads2.layers.last().unwrap().bias;
        for i in 0..4 {
            assert_eq!(out_bias[i] == 0.0, out2[i] == 0.0);
        }
    }

    /// Central finite differences of the mean Huber TD loss, the oracle the
    /// analytic gradients are checked against.
    fn finite_difference_check(seed: u64, rel_tol: f64) -> (usize, usize) {
        let mut r = rng(seed);
        let sizes = [4, 8, 8, 3];
        let mut net = NetworkParams::seeded(&sizes, &mut r);
        let (batch, targets) = random_batch(&net, 6, &mut r);
        let eps = 1e-5;
        let loss_of = |net: &NetworkParams| {
            let q = net.forward_batch(&batch.states);
            (0..batch.len())
                .map(|i| huber(q[(i, batch.actions[i])], targets[i]))
                .sum::<f64>()
                / batch.len() as f64
        };
        // Skip configurations that sit numerically on a Huber knee or a
        // rectifier kink, where the loss is not differentiable.
        let (pre, _) = net.forward_batch_cached(&batch.states);
        let q = net.forward_batch(&batch.states);
        let near_kink = pre.iter().flat_map(|z| z.iter()).any(|z| z.abs() < 1e-6)
            || (0..batch.len())
                .any(|i| ((q[(i, batch.actions[i])] - targets[i]).abs() - 1.0).abs() < 1e-6);
        if near_kink {
            return (0, 0);
        }
        let (grads, _) = batch_gradients(&net, &batch, &targets).unwrap();
        let mut checked = 0;
        let mut failed = 0;
        for k in 0..net.layers.len() {
            let coords: Vec<(usize, usize)> = net.layers[k]
                .weights
                .indexed_iter()
                .map(|(idx, _)| idx)
                .collect();
            for (i, j) in coords {
                let original = net.layers[k].weights[(i, j)];
                net.layers[k].weights[(i, j)] = original + eps;
                let up = loss_of(&net);
                net.layers[k].weights[(i, j)] = original - eps;
                let down = loss_of(&net);
                net.layers[k].weights[(i, j)] = original;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads.layers[k].weights[(i, j)];
                let scale = numeric.abs().max(analytic.abs());
                checked += 1;
                if scale > 1e-8 && (numeric - analytic).abs() / scale > rel_tol {
                    failed += 1;
                }
            }
        }
        (checked, failed)
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut total = 0;
        for seed in 100..105 {
            let (checked, failed) = finite_difference_check(seed, 1e-4);
            assert_eq!(failed, 0, "seed {seed}: {failed} of {checked} mismatched");
            total += checked;
        }
        assert!(total > 0, "all seeds landed on kinks");
    }

    #[test]
    fn momentum_velocity_follows_geometric_series() {
        // One weight, constant gradient: v_k = g·(1 − μ^k)/(1 − μ) → 10·g.
        let mut net = NetworkParams::from_layers(vec![Layer {
            weights: arr2(&[[0.0]]),
            bias: Array1::zeros(1),
        }])
        .unwrap();
        let grad = Gradients {
            layers: vec![Layer {
                weights: arr2(&[[1.0]]),
                bias: Array1::zeros(1),
            }],
        };
        let mut opt = OptimizerState::new(0.01, 0.9, &net);
        let mut expected_theta = 0.0;
        for k in 1..=60 {
            sgd_momentum_step(&mut net, &grad, &mut opt).unwrap();
            let v = (1.0 - 0.9f64.powi(k)) / 0.1;
            expected_theta -= 0.01 * v;
            assert_relative_eq!(opt.velocity[0].weights[[0, 0]], v, epsilon = 1e-12);
        }
        assert_relative_eq!(
            net.layers[0].weights[[0, 0]],
            expected_theta,
            epsilon = 1e-9
        );
        assert!((opt.velocity[0].weights[[0, 0]] - 10.0).abs() < 0.02);
    }

    #[test]
    fn single_momentum_step_from_rest() {
        let mut net = NetworkParams::from_layers(vec![Layer {
            weights: arr2(&[[1.0]]),
            bias: Array1::zeros(1),
        }])
        .unwrap();
        let grad = Gradients {
            layers: vec![Layer {
                weights: arr2(&[[3.0]]),
                bias: Array1::zeros(1),
            }],
        };
        let mut opt = OptimizerState::new(0.01, 0.9, &net);
        sgd_momentum_step(&mut net, &grad, &mut opt).unwrap();
        assert_relative_eq!(net.layers[0].weights[[0, 0]], 1.0 - 0.03, epsilon = 1e-15);
    }

    #[test]
    fn zero_gradient_zero_velocity_is_a_fixed_point() {
        let mut net = NetworkParams::seeded(&[2, 3, 2], &mut rng(12));
        let before = net.clone();
        let grad = Gradients {
            layers: net
                .layers()
                .iter()
                .map(|l| Layer {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        };
        let mut opt = OptimizerState::new(0.01, 0.9, &net);
        sgd_momentum_step(&mut net, &grad, &mut opt).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn mismatched_gradient_shapes_rejected() {
        let mut net = NetworkParams::seeded(&[2, 3, 2], &mut rng(13));
        let other = NetworkParams::seeded(&[2, 4, 2], &mut rng(14));
        let grad = Gradients {
            layers: other.layers().to_vec(),
        };
        let mut opt = OptimizerState::new(0.01, 0.9, &net);
        assert!(matches!(
            sgd_momentum_step(&mut net, &grad, &mut opt),
            Err(QnetError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn copy_of_copy_equals_original_copy() {
        let net = NetworkParams::seeded(&[5, 7, 4], &mut rng(15));
        let copy = copy_into_target(&net);
        assert_eq!(copy_into_target(&copy), copy);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0; 8]), 0);
    }
}
