//! Equilibrium moisture and the three-regime time-lag model.
//!
//! A fuel stick dries toward the drying equilibrium `E_d` when it is wetter
//! than `E_d + ΔE`, wets toward `E_w` when it is drier than `E_w + ΔE`, and
//! holds its moisture in between. Over one interval the regime is chosen from
//! the moisture at the start of the interval and the linear ODE
//! `dm/dt = (E - m) / T` is integrated exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset between 21.1 °C and kelvin used by the equilibrium formulas.
const REFERENCE_TEMP_K: f64 = 21.1 + 273.15;

/// One timestamped weather record, optionally carrying a moisture reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphericSample {
    /// Hours since the start of the series.
    pub time: f64,
    /// Air temperature in kelvin.
    pub temp: f64,
    /// Relative humidity in percent.
    pub rh: f64,
    /// Observed fuel moisture, percent of dry mass.
    pub obs: Option<f64>,
}

impl AtmosphericSample {
    pub fn new(time: f64, temp: f64, rh: f64, obs: Option<f64>) -> Result<Self> {
        let sample = AtmosphericSample { time, temp, rh, obs };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.time.is_finite() {
            return Err(Error::domain("time", format!("{} is not finite", self.time)));
        }
        check_weather(self.temp, self.rh)?;
        if let Some(obs) = self.obs {
            if !obs.is_finite() || obs < 0.0 {
                return Err(Error::domain("obs", format!("{obs} is not a non-negative moisture")));
            }
        }
        Ok(())
    }

    pub fn equilibria(&self) -> Result<EquilibriumPair> {
        equilibria(self.temp, self.rh)
    }
}

/// Drying and wetting equilibria, percent of dry mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPair {
    pub ed: f64,
    pub ew: f64,
}

impl EquilibriumPair {
    pub fn new(ed: f64, ew: f64) -> Result<Self> {
        if !ed.is_finite() || !ew.is_finite() {
            return Err(Error::domain("equilibria", "values must be finite"));
        }
        if ew > ed {
            return Err(Error::domain(
                "equilibria",
                format!("wetting equilibrium {ew} exceeds drying equilibrium {ed}"),
            ));
        }
        Ok(EquilibriumPair { ed, ew })
    }

    /// Degenerate pair with `E_d = E_w = e`; the model then has no dead zone.
    pub fn uniform(e: f64) -> Self {
        EquilibriumPair { ed: e, ew: e }
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.ed + self.ew)
    }
}

/// Time constant and timestep, both in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub time_lag: f64,
    pub dt: f64,
}

impl Default for ModelConfig {
    /// 10 h fuel stepped hourly.
    fn default() -> Self {
        ModelConfig {
            time_lag: 10.0,
            dt: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn new(time_lag: f64, dt: f64) -> Result<Self> {
        let cfg = ModelConfig { time_lag, dt };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_lag > 0.0) {
            return Err(Error::domain("time_lag", format!("{} must be positive", self.time_lag)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::domain("dt", format!("{} must be positive", self.dt)));
        }
        Ok(())
    }

    /// Fraction of the distance to equilibrium that remains after one step,
    /// `exp(-dt / T)`.
    pub fn decay(&self) -> f64 {
        (-self.dt / self.time_lag).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Drying,
    Wetting,
    /// Between the wetting and drying equilibria; moisture does not change.
    Dead,
}

fn check_weather(temp: f64, rh: f64) -> Result<()> {
    if !(temp > 0.0) || !temp.is_finite() {
        return Err(Error::domain("temp", format!("{temp} K is not a positive temperature")));
    }
    if !(0.0..=100.0).contains(&rh) {
        return Err(Error::domain("rh", format!("{rh}% is outside [0, 100]")));
    }
    Ok(())
}

/// Drying and wetting equilibria from temperature (K) and relative humidity (%).
///
/// Uses the Van Wagner fine-fuel equilibrium curves:
///
/// ```text
/// E_d = 0.924 H^0.679 + 0.000499 e^(0.1 H) + 0.18 (21.1 + 273.15 - T)(1 - e^(-0.115 H))
/// E_w = 0.618 H^0.753 + 0.000454 e^(0.1 H) + 0.18 (21.1 + 273.15 - T)(1 - e^(-0.115 H))
/// ```
///
/// Both are clamped at zero, which only matters for hot, dry air.
pub fn equilibria(temp: f64, rh: f64) -> Result<EquilibriumPair> {
    check_weather(temp, rh)?;
    let h = rh;
    let temp_term = 0.18 * (REFERENCE_TEMP_K - temp) * (1.0 - (-0.115 * h).exp());
    let ed = 0.924 * h.powf(0.679) + 0.000499 * (0.1 * h).exp() + temp_term;
    let ew = 0.618 * h.powf(0.753) + 0.000454 * (0.1 * h).exp() + temp_term;
    Ok(EquilibriumPair {
        ed: ed.max(0.0),
        ew: ew.max(0.0),
    })
}

/// Regime for moisture `m` against equilibria shifted by `de`.
///
/// The dead zone is closed: `m == ew + de` and `m == ed + de` are both `Dead`.
pub fn select_regime(m: f64, eq: EquilibriumPair, de: f64) -> Regime {
    if m < eq.ew + de {
        Regime::Wetting
    } else if m > eq.ed + de {
        Regime::Drying
    } else {
        Regime::Dead
    }
}

/// The equilibrium the stick relaxes toward in `regime`, or `None` in the dead zone.
pub fn target(regime: Regime, eq: EquilibriumPair, de: f64) -> Option<f64> {
    match regime {
        Regime::Drying => Some(eq.ed + de),
        Regime::Wetting => Some(eq.ew + de),
        Regime::Dead => None,
    }
}

/// Advance moisture by one interval of `cfg.dt` hours.
///
/// The regime is taken from `m` at the start of the interval and held for the
/// whole interval.
pub fn step(m: f64, de: f64, eq: EquilibriumPair, cfg: &ModelConfig) -> f64 {
    match target(select_regime(m, eq, de), eq, de) {
        Some(e) => relax(m, e, cfg.decay()),
        None => m,
    }
}

#[inline]
pub(crate) fn relax(m: f64, e: f64, decay: f64) -> f64 {
    e + (m - e) * decay
}

/// Iterate [`step`] over `eqs`, returning `eqs.len() + 1` moisture values
/// starting with `m0`.
pub fn simulate(m0: f64, de: f64, eqs: &[EquilibriumPair], cfg: &ModelConfig) -> Result<Vec<f64>> {
    if eqs.is_empty() {
        return Err(Error::domain("eqs", "cannot simulate an empty sequence"));
    }
    let mut out = Vec::with_capacity(eqs.len() + 1);
    let mut m = m0;
    out.push(m);
    for eq in eqs {
        m = step(m, de, *eq, cfg);
        out.push(m);
    }
    Ok(out)
}
