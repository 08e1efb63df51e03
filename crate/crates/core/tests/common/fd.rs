//! Central finite-difference checks of the analytic gradients.

use energaize_core::maddpg::Critic;
use energaize_core::neural::{init_mlp, Activation, Mlp};
use ndarray::{concatenate, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const REL: f64 = 1e-4;
/// Pre-activations closer than this to a ReLU kink make the finite
/// difference meaningless, so such draws are skipped.
const KINK_MARGIN: f64 = 1e-3;

pub fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= REL * analytic.abs().max(numeric.abs()).max(1e-3)
}

/// `L = sum(c ⊙ f(x))`.
fn loss(net: &Mlp, x: &Array2<f64>, c: &Array2<f64>) -> f64 {
    (&net.predict_batch(x.view()).unwrap() * c).sum()
}

fn near_kink(net: &Mlp, x: &Array2<f64>) -> bool {
    let mut h = x.clone();
    for layer in &net.layers {
        let pre = h.dot(&layer.weights.t()) + &layer.bias;
        if layer.activation == Activation::Relu && pre.iter().any(|v| v.abs() < KINK_MARGIN) {
            return true;
        }
        h = match layer.activation {
            Activation::Relu => pre.mapv(|v| v.max(0.0)),
            Activation::Tanh => pre.mapv(f64::tanh),
            Activation::Identity => pre,
        };
    }
    false
}

fn random_net(rng: &mut ChaCha8Rng) -> Mlp {
    let depth = rng.random_range(1..4);
    let mut widths = vec![rng.random_range(1..6)];
    let mut acts = Vec::new();
    for k in 0..depth {
        widths.push(rng.random_range(1..6));
        acts.push(if k + 1 == depth {
            [Activation::Tanh, Activation::Identity][rng.random_range(0..2)]
        } else {
            [Activation::Relu, Activation::Tanh][rng.random_range(0..2)]
        });
    }
    init_mlp(&widths, &acts, rng.random())
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.5..1.5))
}

fn central(f: impl Fn(f64) -> f64) -> f64 {
    (f(H) - f(-H)) / (2.0 * H)
}

/// Checks every parameter and input gradient of one random network.
/// `Ok(false)` means the draw sat too close to a kink and was skipped.
pub fn check_mlp(seed: u64) -> Result<bool, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_net(&mut rng);
    let x = random_matrix(&mut rng, 3, net.input_width());
    let c = random_matrix(&mut rng, 3, net.output_width());
    if near_kink(&net, &x) {
        return Ok(false);
    }
    let (_, cache) = net.forward_batch(x.view()).unwrap();
    let (grads, dx) = net.backward_batch(&cache, c.view()).unwrap();

    for l in 0..net.layers.len() {
        for ((r, col), a) in grads.weights[l].indexed_iter() {
            let fd = central(|h| {
                let mut n = net.clone();
                n.layers[l].weights[[r, col]] += h;
                loss(&n, &x, &c)
            });
            if !close(*a, fd) {
                return Err(format!("seed {seed} layer {l} w[{r},{col}]: analytic {a} vs fd {fd}"));
            }
        }
        for (k, a) in grads.biases[l].iter().enumerate() {
            let fd = central(|h| {
                let mut n = net.clone();
                n.layers[l].bias[k] += h;
                loss(&n, &x, &c)
            });
            if !close(*a, fd) {
                return Err(format!("seed {seed} layer {l} b[{k}]: analytic {a} vs fd {fd}"));
            }
        }
    }
    for ((r, col), a) in dx.indexed_iter() {
        let fd = central(|h| {
            let mut xp = x.clone();
            xp[[r, col]] += h;
            loss(&net, &xp, &c)
        });
        if !close(*a, fd) {
            return Err(format!("seed {seed} dx[{r},{col}]: analytic {a} vs fd {fd}"));
        }
    }
    Ok(true)
}

/// Checks the critic's action gradient and a state-layer bias gradient.
pub fn check_critic(seed: u64) -> Result<bool, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sd, ad) = (rng.random_range(1..6), rng.random_range(1..4));
    let units = [rng.random_range(2..6), rng.random_range(2..6)];
    let critic = Critic::new(sd, ad, &units, rng.random());
    let s = random_matrix(&mut rng, 2, sd);
    let a = random_matrix(&mut rng, 2, ad);
    let dq = Array2::from_shape_fn((2, 1), |_| rng.random_range(0.5..1.5));
    if near_kink(&critic.state_layer, &s) {
        return Ok(false);
    }
    let state_out = critic.state_layer.predict_batch(s.view()).unwrap();
    if near_kink(&critic.head, &concatenate![Axis(1), state_out, a]) {
        return Ok(false);
    }

    let q_loss = |c: &Critic, a: &Array2<f64>| (&c.predict(s.view(), a.view()).unwrap() * &dq).sum();
    let (_, cache) = critic.forward(s.view(), a.view()).unwrap();
    let (grads, da) = critic.backward(&cache, dq.view()).unwrap();
    if critic.action_gradient(&cache, dq.view()).unwrap() != da {
        return Err(format!("seed {seed}: action_gradient disagrees with backward"));
    }
    for ((r, col), g) in da.indexed_iter() {
        let fd = central(|h| {
            let mut ap = a.clone();
            ap[[r, col]] += h;
            q_loss(&critic, &ap)
        });
        if !close(*g, fd) {
            return Err(format!("seed {seed} dA[{r},{col}]: analytic {g} vs fd {fd}"));
        }
    }
    // The state layer's parameters get gradients through the head.
    for (k, g) in grads.state_layer.biases[0].iter().enumerate() {
        let fd = central(|h| {
            let mut c = critic.clone();
            c.state_layer.layers[0].bias[k] += h;
            q_loss(&c, &a)
        });
        if !close(*g, fd) {
            return Err(format!("seed {seed} state bias {k}: analytic {g} vs fd {fd}"));
        }
    }
    Ok(true)
}
