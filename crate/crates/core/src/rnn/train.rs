use serde::{Deserialize, Serialize};

use super::{advance, output, InitMode, RnnWeights, DEFAULT_TIMESCALES};
use crate::error::{Error, Result};
use crate::moisture::EquilibriumPair;

/// Gradients share the layout of the weights they differentiate.
pub type Gradient = RnnWeights;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Hidden width.
    pub hidden: usize,
    /// Timesteps per training window.
    pub window: usize,
    pub lr: f64,
    pub epochs: usize,
    /// Recorded with the run. Window order is deterministic, so training
    /// itself draws no random numbers.
    pub seed: u64,
    pub init_mode: InitMode,
    /// Per-unit time constants for [`InitMode::MultiTimescale`], hours.
    pub timescales: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 6,
            window: 5,
            lr: 1e-5,
            epochs: 100,
            seed: 0,
            init_mode: InitMode::MultiTimescale,
            timescales: DEFAULT_TIMESCALES.to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::domain("hidden", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::domain("window", "must be at least 1"));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::domain(
                "lr",
                format!("{} must be a non-negative number", self.lr),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::domain("epochs", "must be at least 1"));
        }
        Ok(())
    }
}

/// Gradient of `(y_s - target)²` where `y_s` is the output after the last
/// input of the window. The starting hidden state `h0` is held constant, which
/// truncates backpropagation at the window boundary.
///
/// Returns the gradient and the output `y_s`.
pub fn bptt_gradient(w: &RnnWeights, h0: &[f64], inputs: &[EquilibriumPair], target: f64) -> (Gradient, f64) {
    let h = w.h;
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(h0.to_vec());
    for x in inputs {
        let next = advance(w, states.last().expect("seeded"), *x);
        states.push(next);
    }
    let last = states.last().expect("seeded");
    let y = output(w, last);
    let d_out = 2.0 * (y - target);

    let mut g = RnnWeights::zeros(h, w.dt);
    g.b_out = d_out;
    for (gw, hv) in g.w_out.iter_mut().zip(last) {
        *gw = d_out * hv;
    }

    // delta = dLoss / d(hidden_t), walked backwards through the window
    let mut delta: Vec<f64> = w.w_out.iter().map(|wo| d_out * wo).collect();
    for t in (1..states.len()).rev() {
        let prev = &states[t - 1];
        let x = inputs[t - 1];
        for (i, &di) in delta.iter().enumerate() {
            g.b_hid[i] += di;
            g.w_in[i][0] += di * x.ed;
            g.w_in[i][1] += di * x.ew;
            let row = &mut g.w_hid[i * h..(i + 1) * h];
            for (gij, pj) in row.iter_mut().zip(prev) {
                *gij += di * pj;
            }
        }
        if t > 1 {
            delta = (0..h).map(|j| (0..h).map(|i| w.hid(i, j) * delta[i]).sum()).collect();
        }
    }
    (g, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: RnnWeights,
    /// Mean squared error over the windows that had a target, one entry per epoch.
    pub loss_history: Vec<f64>,
}

/// Stateful truncated-BPTT training with plain SGD.
///
/// `targets[k]` is the desired output after consuming `features[k]`. Each
/// epoch walks windows `features[k..k + window]` for `k = 0, 1, ...` in time
/// order; the window's loss is taken at its last output against
/// `targets[k + window - 1]`. The hidden state entering window `k` is carried
/// over from the previous window by one recurrence step with the current
/// weights, and reset to `h0` at the start of every epoch. Windows without a
/// target still advance the carried state.
pub fn train(
    w0: &RnnWeights,
    h0: &[f64],
    features: &[EquilibriumPair],
    targets: &[Option<f64>],
    tcfg: &TrainConfig,
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    w0.validate()?;
    if features.len() != targets.len() {
        return Err(Error::domain(
            "targets",
            format!("{} targets for {} feature rows", targets.len(), features.len()),
        ));
    }
    if h0.len() != w0.h {
        return Err(Error::domain(
            "h0",
            format!("length {} does not match h = {}", h0.len(), w0.h),
        ));
    }
    let s = tcfg.window;
    if features.len() < s || !targets[s - 1..].iter().any(Option::is_some) {
        return Err(Error::domain("targets", "no training window ends at a present target"));
    }

    let mut w = w0.clone();
    let mut history = Vec::with_capacity(tcfg.epochs);
    for epoch in 0..tcfg.epochs {
        let mut hidden = h0.to_vec();
        let mut loss_sum = 0.0;
        let mut count = 0usize;
        for k in 0..=features.len() - s {
            if let Some(target) = targets[k + s - 1] {
                let (g, y) = bptt_gradient(&w, &hidden, &features[k..k + s], target);
                loss_sum += (y - target) * (y - target);
                count += 1;
                w.sgd_update(&g, tcfg.lr);
            }
            hidden = advance(&w, &hidden, features[k]);
        }
        let loss = loss_sum / count as f64;
        if !loss.is_finite() || !w.params().all(f64::is_finite) {
            return Err(Error::domain(
                "lr",
                format!("training diverged in epoch {epoch}; lower the learning rate"),
            ));
        }
        log::debug!("epoch {epoch}: loss {loss:.6e}");
        history.push(loss);
    }
    Ok(TrainOutcome {
        weights: w,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moisture::ModelConfig;
    use crate::rnn::{evaluate_sequence, init_euler, InitMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_weights(rng: &mut ChaCha8Rng, h: usize) -> RnnWeights {
        let mut w = RnnWeights::zeros(h, 1.0);
        for p in w.params_mut() {
            *p = rng.random_range(-0.6..0.6);
        }
        w
    }

    fn random_inputs(rng: &mut ChaCha8Rng, s: usize) -> Vec<EquilibriumPair> {
        (0..s)
            .map(|_| {
                let ew = rng.random_range(2.0..20.0);
                EquilibriumPair {
                    ed: ew + rng.random_range(0.0..5.0),
                    ew,
                }
            })
            .collect()
    }

    fn loss_at(w: &RnnWeights, h0: &[f64], xs: &[EquilibriumPair], target: f64) -> f64 {
        let y = *evaluate_sequence(w, h0, xs).last().unwrap();
        (y - target) * (y - target)
    }

    // Central differences of the window loss, one parameter at a time.
    fn numerical_gradient(w: &RnnWeights, h0: &[f64], xs: &[EquilibriumPair], target: f64) -> Vec<f64> {
        let eps = 1e-6;
        (0..w.param_count())
            .map(|idx| {
                let mut plus = w.clone();
                let mut minus = w.clone();
                *plus.params_mut().nth(idx).unwrap() += eps;
                *minus.params_mut().nth(idx).unwrap() -= eps;
                (loss_at(&plus, h0, xs, target) - loss_at(&minus, h0, xs, target)) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(h, s) in &[(1, 1), (2, 3), (3, 5), (6, 5)] {
            let w = random_weights(&mut rng, h);
            let xs = random_inputs(&mut rng, s);
            let h0: Vec<f64> = (0..h).map(|_| rng.random_range(5.0..15.0)).collect();
            let target = rng.random_range(5.0..20.0);
            let (g, _) = bptt_gradient(&w, &h0, &xs, target);
            let fd = numerical_gradient(&w, &h0, &xs, target);
            for (a, b) in g.params().zip(fd) {
                let scale = a.abs().max(b.abs()).max(1.0);
                assert!((a - b).abs() / scale < 1e-5, "h={h} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn output_bias_gradient_and_zero_at_target() {
        let w = init_euler(3, &ModelConfig::default(), InitMode::MultiTimescale, &[1.0, 5.0, 20.0]).unwrap();
        let xs = vec![EquilibriumPair { ed: 12.0, ew: 9.0 }; 4];
        let (g, y) = bptt_gradient(&w, &[10.0; 3], &xs, 3.0);
        assert_eq!(g.b_out, 2.0 * (y - 3.0));
        let (g, _) = bptt_gradient(&w, &[10.0; 3], &xs, y);
        assert!(g.params().all(|v| v == 0.0));
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let w0 = init_euler(
            6,
            &ModelConfig::default(),
            InitMode::MultiTimescale,
            &DEFAULT_TIMESCALES,
        )
        .unwrap();
        let xs: Vec<_> = (0..60)
            .map(|k| EquilibriumPair {
                ed: 12.0 + (k as f64 / 4.0).sin(),
                ew: 9.0,
            })
            .collect();
        let targets: Vec<_> = (0..60).map(|k| Some(11.0 + 0.1 * k as f64)).collect();
        let tcfg = TrainConfig {
            lr: 0.0,
            epochs: 3,
            ..TrainConfig::default()
        };
        let out = train(&w0, &[10.0; 6], &xs, &targets, &tcfg).unwrap();
        assert_eq!(out.weights, w0);
        assert_eq!(out.loss_history.len(), 3);
        assert!(out.loss_history.windows(2).all(|p| p[0] == p[1]));
    }

    #[test]
    fn exact_targets_give_zero_loss() {
        let cfg = ModelConfig::default();
        let w0 = init_euler(1, &cfg, InitMode::Identical, &[]).unwrap();
        let xs: Vec<_> = (0..200)
            .map(|k| EquilibriumPair::uniform(10.0 + 4.0 * (k as f64 / 3.8).sin()))
            .collect();
        let targets: Vec<_> = evaluate_sequence(&w0, &[15.0], &xs).into_iter().map(Some).collect();
        let tcfg = TrainConfig {
            hidden: 1,
            epochs: 2,
            init_mode: InitMode::Identical,
            ..TrainConfig::default()
        };
        let out = train(&w0, &[15.0], &xs, &targets, &tcfg).unwrap();
        assert!(out.loss_history[0] < 1e-16, "{:?}", out.loss_history);
        for (a, b) in out.weights.params().zip(w0.params()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_units_stay_identical() {
        let cfg = ModelConfig::default();
        let w0 = init_euler(6, &cfg, InitMode::Identical, &[]).unwrap();
        let xs: Vec<_> = (0..40)
            .map(|k| EquilibriumPair {
                ed: 14.0 + (k as f64 / 3.0).sin(),
                ew: 10.0,
            })
            .collect();
        let targets: Vec<_> = (0..40).map(|k| Some(12.0 + 0.05 * k as f64)).collect();
        let tcfg = TrainConfig {
            epochs: 1,
            lr: 1e-5,
            init_mode: InitMode::Identical,
            ..TrainConfig::default()
        };
        let w = train(&w0, &[12.0; 6], &xs, &targets, &tcfg).unwrap().weights;
        for i in 1..6 {
            assert!((w.w_in[i][0] - w.w_in[0][0]).abs() < 1e-12);
            assert!((w.w_in[i][1] - w.w_in[0][1]).abs() < 1e-12);
            assert!((w.b_hid[i] - w.b_hid[0]).abs() < 1e-12);
            assert!((w.w_out[i] - w.w_out[0]).abs() < 1e-12);
            for j in 0..6 {
                // row i is row 0 with the diagonal moved along
                let (ri, r0) = (
                    w.hid(i, j),
                    w.hid(
                        0,
                        if j == i {
                            0
                        } else if j == 0 {
                            i
                        } else {
                            j
                        },
                    ),
                );
                assert!((ri - r0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn training_errors() {
        let w0 = init_euler(1, &ModelConfig::default(), InitMode::Identical, &[]).unwrap();
        let xs = vec![EquilibriumPair::uniform(10.0); 10];
        let tcfg = TrainConfig {
            hidden: 1,
            ..TrainConfig::default()
        };
        assert!(train(&w0, &[10.0], &xs, &[None; 10], &tcfg).is_err());
        assert!(train(&w0, &[10.0], &xs, &[Some(1.0); 9], &tcfg).is_err());
        assert!(train(&w0, &[10.0, 1.0], &xs, &[Some(1.0); 10], &tcfg).is_err());
        let bad = TrainConfig {
            window: 0,
            ..tcfg.clone()
        };
        assert!(train(&w0, &[10.0], &xs, &[Some(1.0); 10], &bad).is_err());
    }
}
