//! Linear recurrent network for moisture prediction.
//!
//! A single linear unit with recurrent weight `a = exp(-dt/T)` and input
//! weight `1 - a` reproduces the exact time-lag step
//! `m' = a·m + (1 - a)·E`. [`init_euler`] builds a hidden layer out of such
//! units; [`train`] then fits the whole layer with truncated
//! backpropagation through time on short windows, carrying the hidden state
//! from window to window. The trained weights are evaluated over the full
//! series with [`evaluate_sequence`].

mod train;
mod weights;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moisture::{EquilibriumPair, ModelConfig};

pub use train::{bptt_gradient, train, Gradient, TrainConfig, TrainOutcome};
pub use weights::RnnWeights;

/// Default hidden-unit time constants, hours.
pub const DEFAULT_TIMESCALES: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 24.0, 48.0];

pub type HiddenState = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every hidden unit uses the model's time lag.
    Identical,
    /// Each hidden unit gets its own time constant.
    #[default]
    MultiTimescale,
}

/// Euler-equivalent initialization.
///
/// Unit `i` with time constant `T_i` gets recurrent weight `exp(-dt/T_i)` on
/// the diagonal and input weights `(1 - exp(-dt/T_i))/2` on each of `(E_d, E_w)`,
/// so it relaxes toward the mean equilibrium. The output averages the units.
pub fn init_euler(h: usize, cfg: &ModelConfig, mode: InitMode, timescales: &[f64]) -> Result<RnnWeights> {
    cfg.validate()?;
    if h == 0 {
        return Err(Error::domain("h", "hidden width must be at least 1"));
    }
    let lags: Vec<f64> = match mode {
        InitMode::Identical => vec![cfg.time_lag; h],
        InitMode::MultiTimescale => {
            if timescales.len() != h {
                return Err(Error::domain(
                    "timescales",
                    format!("expected {h} time constants, got {}", timescales.len()),
                ));
            }
            if let Some(bad) = timescales.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
                return Err(Error::domain("timescales", format!("{bad} must be positive")));
            }
            timescales.to_vec()
        }
    };
    let mut w = RnnWeights::zeros(h, cfg.dt);
    for (i, lag) in lags.iter().enumerate() {
        let a = (-cfg.dt / lag).exp();
        w.w_hid[i * h + i] = a;
        w.w_in[i] = [0.5 * (1.0 - a); 2];
        w.w_out[i] = 1.0 / h as f64;
    }
    Ok(w)
}

/// One recurrence step. Returns the new hidden state and the output read from it.
pub fn forward(w: &RnnWeights, hidden: &[f64], input: EquilibriumPair) -> (HiddenState, f64) {
    let next = advance(w, hidden, input);
    let out = output(w, &next);
    (next, out)
}

pub(crate) fn advance(w: &RnnWeights, hidden: &[f64], input: EquilibriumPair) -> HiddenState {
    (0..w.h)
        .map(|i| {
            let rec: f64 = w.hid_row(i).iter().zip(hidden).map(|(a, b)| a * b).sum();
            rec + w.w_in[i][0] * input.ed + w.w_in[i][1] * input.ew + w.b_hid[i]
        })
        .collect()
}

pub fn output(w: &RnnWeights, hidden: &[f64]) -> f64 {
    w.w_out.iter().zip(hidden).map(|(a, b)| a * b).sum::<f64>() + w.b_out
}

/// Run the recurrence over `inputs` from `h0`, one output per input.
pub fn evaluate_sequence(w: &RnnWeights, h0: &[f64], inputs: &[EquilibriumPair]) -> Vec<f64> {
    let mut hidden = h0.to_vec();
    inputs
        .iter()
        .map(|x| {
            hidden = advance(w, &hidden, *x);
            output(w, &hidden)
        })
        .collect()
}

/// Hidden state with every unit set to `m`.
pub fn uniform_hidden(w: &RnnWeights, m: f64) -> HiddenState {
    vec![m; w.h]
}
