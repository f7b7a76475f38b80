use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of the linear recurrent network with `h` hidden units.
///
/// Matrices are stored row-major: `w_in` is `h × 2`, `w_hid` is `h × h`,
/// `w_out` is `1 × h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnWeights {
    pub h: usize,
    /// Timestep the weights were built for, hours.
    pub dt: f64,
    pub w_in: Vec<[f64; 2]>,
    pub w_hid: Vec<f64>,
    pub b_hid: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

/// On-disk layout: nested row-major arrays.
#[derive(Serialize, Deserialize)]
struct WeightsDoc {
    h: usize,
    dt: f64,
    w_in: Vec<Vec<f64>>,
    w_hid: Vec<Vec<f64>>,
    b_hid: Vec<f64>,
    w_out: Vec<Vec<f64>>,
    b_out: f64,
}

impl RnnWeights {
    pub fn zeros(h: usize, dt: f64) -> Self {
        RnnWeights {
            h,
            dt,
            w_in: vec![[0.0; 2]; h],
            w_hid: vec![0.0; h * h],
            b_hid: vec![0.0; h],
            w_out: vec![0.0; h],
            b_out: 0.0,
        }
    }

    #[inline]
    pub fn hid(&self, i: usize, j: usize) -> f64 {
        self.w_hid[i * self.h + j]
    }

    /// Row `i` of the recurrent matrix.
    pub fn hid_row(&self, i: usize) -> &[f64] {
        &self.w_hid[i * self.h..(i + 1) * self.h]
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.h;
        if h == 0 {
            return Err(Error::domain("h", "hidden width must be at least 1"));
        }
        if self.w_in.len() != h || self.w_hid.len() != h * h || self.b_hid.len() != h || self.w_out.len() != h {
            return Err(Error::domain("weights", format!("shapes inconsistent with h = {h}")));
        }
        if !(self.dt > 0.0) {
            return Err(Error::domain("dt", format!("{} must be positive", self.dt)));
        }
        if !self.params().all(|x| x.is_finite()) {
            return Err(Error::domain("weights", "non-finite value"));
        }
        Ok(())
    }

    /// All trainable values in a fixed order: `w_in`, `w_hid`, `b_hid`, `w_out`, `b_out`.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.w_in
            .iter()
            .flatten()
            .chain(&self.w_hid)
            .chain(&self.b_hid)
            .chain(&self.w_out)
            .chain(std::iter::once(&self.b_out))
            .copied()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.w_in
            .iter_mut()
            .flatten()
            .chain(&mut self.w_hid)
            .chain(&mut self.b_hid)
            .chain(&mut self.w_out)
            .chain(std::iter::once(&mut self.b_out))
    }

    pub fn param_count(&self) -> usize {
        2 * self.h + self.h * self.h + 2 * self.h + 1
    }

    /// `self -= lr * grad`, element-wise over the parameters.
    pub fn sgd_update(&mut self, grad: &RnnWeights, lr: f64) {
        for (w, g) in self.params_mut().zip(grad.params()) {
            *w -= lr * g;
        }
    }

    pub fn to_json(&self) -> String {
        let doc = WeightsDoc {
            h: self.h,
            dt: self.dt,
            w_in: self.w_in.iter().map(|r| r.to_vec()).collect(),
            w_hid: (0..self.h).map(|i| self.hid_row(i).to_vec()).collect(),
            b_hid: self.b_hid.clone(),
            w_out: vec![self.w_out.clone()],
            b_out: self.b_out,
        };
        serde_json::to_string_pretty(&doc).expect("weights serialize")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let doc: WeightsDoc = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_string(),
            source,
        })?;
        let h = doc.h;
        let shape_err = |what: &str| Error::domain("weights", format!("{what} has the wrong shape for h = {h}"));
        if doc.w_in.len() != h || doc.w_in.iter().any(|r| r.len() != 2) {
            return Err(shape_err("w_in"));
        }
        if doc.w_hid.len() != h || doc.w_hid.iter().any(|r| r.len() != h) {
            return Err(shape_err("w_hid"));
        }
        if doc.w_out.len() != 1 || doc.w_out[0].len() != h {
            return Err(shape_err("w_out"));
        }
        let w = RnnWeights {
            h,
            dt: doc.dt,
            w_in: doc.w_in.iter().map(|r| [r[0], r[1]]).collect(),
            w_hid: doc.w_hid.into_iter().flatten().collect(),
            b_hid: doc.b_hid,
            w_out: doc.w_out.into_iter().next().unwrap_or_default(),
            b_out: doc.b_out,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}
