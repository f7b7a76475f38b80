//! Augmented extended Kalman filter on the state `(m, ΔE)`.
//!
//! The forecast half propagates moisture with the time-lag model and the
//! covariance with the Jacobian of the one-step map; the analysis half
//! assimilates a scalar moisture reading through `H = [1, 0]`. Because the
//! correction `ΔE` enters the model additively next to the equilibria, the
//! cross-covariance that the forecast builds up lets moisture readings pull
//! `ΔE` toward the value that explains them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moisture::{self, select_regime, AtmosphericSample, EquilibriumPair, ModelConfig, Regime};

/// Row-major 2×2 matrix.
pub type Mat2 = [[f64; 2]; 2];

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// Tolerance on |P01 - P10| relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    pub m: f64,
    pub de: f64,
}

/// Error covariance of an [`AugmentedState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariance2(pub Mat2);

impl Covariance2 {
    pub fn diag(p_m: f64, p_de: f64) -> Self {
        Covariance2([[p_m, 0.0], [0.0, p_de]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let [[a, b], [c, d]] = self.0;
        let off = 0.5 * (b + c);
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + off * off).sqrt();
        (mean - radius, mean + radius)
    }

    pub fn is_symmetric(&self) -> bool {
        let scale = self.0.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        (self.0[0][1] - self.0[1][0]).abs() <= SYMMETRY_TOL * scale
    }

    pub fn is_psd(&self) -> bool {
        self.eigenvalues().0 >= PSD_TOL
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite()) && self.is_symmetric() && self.is_psd()
    }

    fn symmetrized(mut self) -> Self {
        let off = 0.5 * (self.0[0][1] + self.0[1][0]);
        self.0[0][1] = off;
        self.0[1][0] = off;
        self
    }
}

/// Noise variances, in percent² per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub q_m: f64,
    pub q_de: f64,
    pub r: f64,
    /// Diagonal of the initial covariance.
    pub p0: [f64; 2],
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            q_m: 1e-3,
            q_de: 1e-4,
            r: 1e-2,
            p0: [1.0, 1.0],
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("q_m", self.q_m),
            ("q_de", self.q_de),
            ("p0", self.p0[0]),
            ("p0", self.p0[1]),
        ];
        for (field, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(field, format!("{v} must be a non-negative number")));
            }
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::domain("r", format!("{} must be positive", self.r)));
        }
        Ok(())
    }
}

/// Jacobian of the one-step map `(m, ΔE) -> (m', ΔE)` in the regime frozen at `state.m`.
pub fn jacobian(state: AugmentedState, eq: EquilibriumPair, cfg: &ModelConfig) -> Mat2 {
    match select_regime(state.m, eq, state.de) {
        Regime::Dead => IDENTITY,
        Regime::Drying | Regime::Wetting => {
            let a = cfg.decay();
            [[a, 1.0 - a], [0.0, 1.0]]
        }
    }
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Time update: propagate the state through the model and the covariance
/// through `J P Jᵀ + Q`.
pub fn forecast_step(
    state: AugmentedState,
    cov: Covariance2,
    eq: EquilibriumPair,
    cfg: &ModelConfig,
    fcfg: &FilterConfig,
) -> (AugmentedState, Covariance2) {
    let j = jacobian(state, eq, cfg);
    let mut p = mul(&mul(&j, &cov.0), &transpose(&j));
    p[0][0] += fcfg.q_m;
    p[1][1] += fcfg.q_de;
    let next = AugmentedState {
        m: moisture::step(state.m, state.de, eq, cfg),
        de: state.de,
    };
    (next, Covariance2(p).symmetrized())
}

/// Measurement update with a moisture reading `obs` of variance `r`.
pub fn analysis_step(
    state: AugmentedState,
    cov: Covariance2,
    obs: f64,
    r: f64,
) -> Result<(AugmentedState, Covariance2)> {
    if !obs.is_finite() {
        return Err(Error::domain("obs", format!("{obs} is not finite")));
    }
    if !(r > 0.0) {
        return Err(Error::domain("r", format!("{r} must be positive")));
    }
    let p = cov.0;
    let innovation_var = p[0][0] + r;
    let gain = [p[0][0] / innovation_var, p[1][0] / innovation_var];
    let innovation = obs - state.m;
    let next = AugmentedState {
        m: state.m + gain[0] * innovation,
        de: state.de + gain[1] * innovation,
    };
    // (I - K H) P with H = [1, 0]
    let updated = [
        [p[0][0] - gain[0] * p[0][0], p[0][1] - gain[0] * p[0][1]],
        [p[1][0] - gain[1] * p[0][0], p[1][1] - gain[1] * p[0][1]],
    ];
    Ok((next, Covariance2(updated).symmetrized()))
}

/// One filtered timestep of the learning phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterStep {
    pub time: f64,
    pub state: AugmentedState,
    pub cov: Covariance2,
    /// Whether an observation was assimilated at this step.
    pub assimilated: bool,
}

/// Initial moisture for a run: the first available reading, else the mean of
/// the first step's equilibria.
pub fn initial_moisture(samples: &[AtmosphericSample]) -> Result<f64> {
    if let Some(obs) = samples.iter().find_map(|s| s.obs) {
        return Ok(obs);
    }
    let first = samples.first().ok_or_else(|| Error::domain("series", "no samples"))?;
    Ok(first.equilibria()?.mean())
}

pub(crate) fn check_spacing(samples: &[AtmosphericSample], dt: f64) -> Result<()> {
    for (k, pair) in samples.windows(2).enumerate() {
        let gap = pair[1].time - pair[0].time;
        if (gap - dt).abs() > 1e-9 {
            return Err(Error::domain(
                "time",
                format!("non-uniform spacing at sample {}: gap {gap} h, expected {dt} h", k + 1),
            ));
        }
    }
    Ok(())
}

/// Learning phase: forecast between samples and assimilate every reading.
///
/// Entry `k` is the filtered state at `samples[k].time`. The initial state is
/// `(initial_moisture, 0)` with covariance `diag(p0)`; a reading at step 0
/// is assimilated too.
pub fn run_learning(samples: &[AtmosphericSample], cfg: &ModelConfig, fcfg: &FilterConfig) -> Result<Vec<FilterStep>> {
    cfg.validate()?;
    fcfg.validate()?;
    check_spacing(samples, cfg.dt)?;
    let mut state = AugmentedState {
        m: initial_moisture(samples)?,
        de: 0.0,
    };
    let mut cov = Covariance2::diag(fcfg.p0[0], fcfg.p0[1]);
    let mut out = Vec::with_capacity(samples.len());
    let mut prev_eq: Option<EquilibriumPair> = None;

    for sample in samples {
        if let Some(eq) = prev_eq {
            (state, cov) = forecast_step(state, cov, eq, cfg, fcfg);
        }
        let assimilated = match sample.obs {
            Some(obs) => {
                (state, cov) = analysis_step(state, cov, obs, fcfg.r)?;
                true
            }
            None => false,
        };
        out.push(FilterStep {
            time: sample.time,
            state,
            cov,
            assimilated,
        });
        prev_eq = Some(sample.equilibria()?);
    }
    Ok(out)
}

/// Forecast phase: run the model from `state0` with `ΔE` frozen, no filter.
///
/// Returns `eqs.len() + 1` values beginning with `state0.m`.
pub fn run_forecast(state0: AugmentedState, eqs: &[EquilibriumPair], cfg: &ModelConfig) -> Vec<f64> {
    if eqs.is_empty() {
        return vec![state0.m];
    }
    moisture::simulate(state0.m, state0.de, eqs, cfg).expect("non-empty equilibria")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moisture::step;
    use proptest::prelude::*;

    fn eq(ed: f64, ew: f64) -> EquilibriumPair {
        EquilibriumPair::new(ed, ew).unwrap()
    }

    fn state(m: f64, de: f64) -> AugmentedState {
        AugmentedState { m, de }
    }

    #[test]
    fn jacobian_examples() {
        let cfg = ModelConfig::default();
        assert_eq!(jacobian(state(11.0, 0.0), eq(12.0, 8.0), &cfg), IDENTITY);
        let j = jacobian(state(20.0, 0.0), eq(12.0, 8.0), &cfg);
        assert!((j[0][0] - 0.904_837_418_035_959_6).abs() < 1e-15);
        assert!((j[0][1] - 0.095_162_581_964_040_43).abs() < 1e-15);
        assert_eq!(j[1], [0.0, 1.0]);
    }

    #[test]
    fn forecast_in_dead_zone_keeps_covariance() {
        let fcfg = FilterConfig {
            q_m: 0.0,
            q_de: 0.0,
            ..FilterConfig::default()
        };
        let cov = Covariance2([[2.0, 0.3], [0.3, 0.5]]);
        let (s, c) = forecast_step(state(10.0, 0.5), cov, eq(12.0, 8.0), &ModelConfig::default(), &fcfg);
        assert_eq!(s, state(10.0, 0.5));
        assert_eq!(c, cov);
    }

    #[test]
    fn forecast_drying_with_identity_covariance() {
        let fcfg = FilterConfig {
            q_m: 0.0,
            q_de: 0.0,
            ..FilterConfig::default()
        };
        let (s, c) = forecast_step(
            state(20.0, 0.0),
            Covariance2::diag(1.0, 1.0),
            eq(10.0, 6.0),
            &ModelConfig::default(),
            &fcfg,
        );
        assert_eq!(s.de, 0.0);
        // J Jᵀ = [[a² + (1-a)², 1-a], [1-a, 1]] with a = e^{-0.1}
        assert!((c.0[0][0] - 0.827_786_670_084_044_6).abs() < 1e-15);
        assert!((c.0[0][1] - 0.095_162_581_964_040_43).abs() < 1e-15);
        assert!((c.0[1][0] - 0.095_162_581_964_040_43).abs() < 1e-15);
        assert!((c.0[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn analysis_examples() {
        let (s, _) = analysis_step(state(10.0, 0.2), Covariance2::diag(1.0, 0.0), 11.0, 1.0).unwrap();
        assert!((s.m - 10.5).abs() < 1e-15);
        assert_eq!(s.de, 0.2);

        let cov = Covariance2([[1.0, 0.4], [0.4, 1.0]]);
        let (s, c) = analysis_step(state(10.0, 0.0), cov, 10.3, 1e12).unwrap();
        assert!((s.m - 10.0).abs() < 1e-9 && s.de.abs() < 1e-9);
        assert!((c.0[0][0] - 1.0).abs() < 1e-9);

        let (s, _) = analysis_step(state(10.0, 0.0), cov, 11.0, 0.5).unwrap();
        assert!(s.de > 0.0);

        let (s, _) = analysis_step(state(10.0, 0.0), cov, 12.5, 1e-12).unwrap();
        assert!((s.m - 12.5).abs() < 1e-6);
    }

    #[test]
    fn analysis_rejects_bad_observation() {
        let cov = Covariance2::diag(1.0, 1.0);
        assert!(matches!(
            analysis_step(state(1.0, 0.0), cov, f64::NAN, 1.0),
            Err(Error::Domain { field: "obs", .. })
        ));
        assert!(analysis_step(state(1.0, 0.0), cov, 1.0, 0.0).is_err());
    }

    fn sample(time: f64, obs: Option<f64>) -> AtmosphericSample {
        AtmosphericSample::new(
            time,
            295.0 - 8.0 * (time / 4.0).sin(),
            40.0 + 25.0 * (time / 4.0).sin(),
            obs,
        )
        .unwrap()
    }

    #[test]
    fn learning_without_observations_matches_simulate() {
        let samples: Vec<_> = (0..50).map(|k| sample(k as f64, None)).collect();
        let cfg = ModelConfig::default();
        let steps = run_learning(&samples, &cfg, &FilterConfig::default()).unwrap();
        assert_eq!(steps.len(), samples.len());
        let eqs: Vec<_> = samples.iter().map(|s| s.equilibria().unwrap()).collect();
        let m0 = eqs[0].mean();
        let sim = moisture::simulate(m0, 0.0, &eqs[..49], &cfg).unwrap();
        for (st, m) in steps.iter().zip(&sim) {
            assert_eq!(st.state.m, *m);
            assert_eq!(st.state.de, 0.0);
            assert!(!st.assimilated);
        }
    }

    #[test]
    fn learning_rejects_irregular_spacing() {
        let mut samples: Vec<_> = (0..5).map(|k| sample(k as f64, Some(10.0))).collect();
        samples[3].time = 3.5;
        assert!(matches!(
            run_learning(&samples, &ModelConfig::default(), &FilterConfig::default()),
            Err(Error::Domain { field: "time", .. })
        ));
    }

    #[test]
    fn learning_trace_never_grows_at_analysis() {
        let samples: Vec<_> = (0..200)
            .map(|k| {
                sample(
                    k as f64,
                    if k % 3 == 0 {
                        Some(12.0 + (k as f64 * 0.7).sin())
                    } else {
                        None
                    },
                )
            })
            .collect();
        let cfg = ModelConfig::default();
        let fcfg = FilterConfig::default();
        let steps = run_learning(&samples, &cfg, &fcfg).unwrap();
        let mut prev = (state(steps[0].state.m, 0.0), Covariance2::diag(1.0, 1.0));
        for (k, st) in steps.iter().enumerate().skip(1) {
            let eq = samples[k - 1].equilibria().unwrap();
            let (s, c) = forecast_step(prev.0, prev.1, eq, &cfg, &fcfg);
            if st.assimilated {
                assert!(st.cov.trace() <= c.trace());
                assert!(st.cov.0[0][0] <= c.0[0][0]);
            } else {
                assert_eq!(st.state, s);
            }
            prev = (st.state, st.cov);
        }
    }

    #[test]
    fn forecast_matches_simulate() {
        let cfg = ModelConfig::default();
        let eqs: Vec<_> = (0..30).map(|k| eq(12.0 + (k as f64).sin(), 8.0)).collect();
        let s0 = state(15.0, 0.7);
        assert_eq!(
            run_forecast(s0, &eqs, &cfg),
            moisture::simulate(15.0, 0.7, &eqs, &cfg).unwrap()
        );
        assert_eq!(run_forecast(s0, &[], &cfg), vec![15.0]);
    }

    fn arb_state_and_eq() -> impl Strategy<Value = (AugmentedState, EquilibriumPair)> {
        (0.0..40.0f64, -2.0..2.0f64, 0.0..25.0f64, 0.0..8.0f64)
            .prop_map(|(m, de, ew, gap)| (state(m, de), EquilibriumPair { ed: ew + gap, ew }))
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences((s, e) in arb_state_and_eq()) {
            let cfg = ModelConfig::default();
            let h = 1e-6;
            // Skip points whose perturbation could cross a regime boundary.
            let margin = (s.m - (e.ew + s.de)).abs().min((s.m - (e.ed + s.de)).abs());
            prop_assume!(margin > 1e-3);
            let j = jacobian(s, e, &cfg);
            let dm = (step(s.m + h, s.de, e, &cfg) - step(s.m - h, s.de, e, &cfg)) / (2.0 * h);
            let dde = (step(s.m, s.de + h, e, &cfg) - step(s.m, s.de - h, e, &cfg)) / (2.0 * h);
            prop_assert!((dm - j[0][0]).abs() <= 1e-6 * j[0][0].abs().max(1.0));
            prop_assert!((dde - j[0][1]).abs() <= 1e-6 * j[0][1].abs().max(1.0));
        }

        #[test]
        fn analysis_contracts_variance(p00 in 0.0..5.0f64, p11 in 0.0..5.0f64, rho in -1.0..1.0f64,
                                       r in 1e-6..10.0f64, innov in -5.0..5.0f64) {
            let off = rho * (p00 * p11).sqrt();
            let cov = Covariance2([[p00, off], [off, p11]]);
            let (_, post) = analysis_step(state(10.0, 0.0), cov, 10.0 + innov, r).unwrap();
            prop_assert!(post.0[0][0] <= p00);
            prop_assert!(post.trace() <= cov.trace() + 1e-15);
            prop_assert!(post.is_valid());
        }
    }
}
