//! Bath geometry: momentum grids, dispersion relations, resonant-contour queries.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeModel {
    #[serde(rename = "square_tb")]
    SquareTb,
    #[serde(rename = "bcc_tb")]
    BccTb,
}

/// Periodic tight-binding bath on an N^d grid.
///
/// Energies are in units of the hopping J (default 1), with the band centered
/// at `band_center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub dimension: usize,
    pub linear_size: usize,
    pub model: LatticeModel,
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default)]
    pub band_center: f64,
}

fn default_hopping() -> f64 {
    1.0
}

impl BathSpec {
    pub fn new(model: LatticeModel, dimension: usize, linear_size: usize) -> Result<Self> {
        let spec = BathSpec {
            dimension,
            linear_size,
            model,
            hopping: 1.0,
            band_center: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn square(dimension: usize, linear_size: usize) -> Result<Self> {
        Self::new(LatticeModel::SquareTb, dimension, linear_size)
    }

    pub fn bcc(linear_size: usize) -> Result<Self> {
        Self::new(LatticeModel::BccTb, 3, linear_size)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.linear_size;
        if n < 4 || n % 2 != 0 {
            return Err(Error::config(format!(
                "linear_size must be even and >= 4, got {n}"
            )));
        }
        match (self.model, self.dimension) {
            (LatticeModel::SquareTb, 1 | 2) => {}
            (LatticeModel::BccTb, 3) => {}
            (m, d) => {
                return Err(Error::config(format!(
                    "model {m:?} does not support dimension {d}"
                )))
            }
        }
        if !self.hopping.is_finite() || self.hopping <= 0.0 {
            return Err(Error::config("hopping must be positive and finite"));
        }
        if !self.band_center.is_finite() {
            return Err(Error::config("band_center must be finite"));
        }
        Ok(())
    }

    /// Total number of grid momenta (and sites), N^d.
    pub fn mode_count(&self) -> usize {
        self.linear_size.pow(self.dimension as u32)
    }

    /// Half band width: the band spans `band_center` plus/minus this value.
    pub fn band_half_width(&self) -> f64 {
        match self.model {
            LatticeModel::SquareTb => 2.0 * self.dimension as f64 * self.hopping,
            LatticeModel::BccTb => 8.0 * self.hopping,
        }
    }

    pub fn band_edges(&self) -> (f64, f64) {
        let w = self.band_half_width();
        (self.band_center - w, self.band_center + w)
    }

    pub fn trig(&self) -> ExactTrig {
        ExactTrig::new(self.linear_size)
    }
}

/// A grid momentum, stored as integer indices m_i in [-N/2, N/2) with
/// k_i = 2 pi m_i / N.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Momentum {
    pub indices: Vec<i64>,
    pub linear_size: usize,
}

impl Momentum {
    pub fn components(&self) -> Vec<f64> {
        let n = self.linear_size as f64;
        self.indices
            .iter()
            .map(|&m| 2.0 * std::f64::consts::PI * m as f64 / n)
            .collect()
    }
}

/// Shared table of cos/sin(2 pi u / N) for integer u, built so that the exact
/// symmetries of the circle survive in floating point: quarter-turn values are
/// exactly 0 or +-1, cos(u + N/2) == -cos(u) bitwise, sin(N - u) == -sin(u)
/// bitwise. Grid energies and phases computed through the table inherit these
/// identities, which is what makes the resonant contour and the design zero
/// sets exact instead of 1e-16 fuzz.
#[derive(Clone, Debug)]
pub struct ExactTrig {
    pub n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ExactTrig {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0, "even n required");
        let tau = std::f64::consts::TAU;
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        for u in 0..n {
            let folded = u.min(n - u); // cos is even around u = 0
            cos[u] = if 4 * folded < n {
                (tau * folded as f64 / n as f64).cos()
            } else if 4 * folded == n {
                0.0
            } else {
                -(tau * (n / 2 - folded) as f64 / n as f64).cos()
            };
            let (v, sign) = if u > n / 2 { (n - u, -1.0) } else { (u, 1.0) };
            // fold [0, n/2] onto [0, n/4] around the peak at n/4
            let w = v.min(n / 2 - v);
            sin[u] = if 4 * w == n {
                sign
            } else if 4 * v > n {
                sign * (tau * w as f64 / n as f64).sin()
            } else {
                sign * (tau * v as f64 / n as f64).sin()
            };
        }
        ExactTrig { n, cos, sin }
    }

    #[inline]
    pub fn rem(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    /// cos(2 pi m / N) for any integer m.
    #[inline]
    pub fn cos_m(&self, m: i64) -> f64 {
        self.cos[self.rem(m)]
    }

    /// sin(2 pi m / N) for any integer m.
    #[inline]
    pub fn sin_m(&self, m: i64) -> f64 {
        self.sin[self.rem(m)]
    }

    #[inline]
    pub fn cos_u(&self, u: usize) -> f64 {
        self.cos[u]
    }

    #[inline]
    pub fn sin_u(&self, u: usize) -> f64 {
        self.sin[u]
    }
}

/// Row-major decomposition of a flat grid index into momentum indices m_i,
/// first component slowest.
pub fn unflatten(flat: usize, n: usize, dim: usize, out: &mut [i64]) {
    let mut rest = flat;
    for i in (0..dim).rev() {
        out[i] = (rest % n) as i64 - (n / 2) as i64;
        rest /= n;
    }
}

/// Inverse of `unflatten`.
pub fn flatten(indices: &[i64], n: usize) -> usize {
    let half = (n / 2) as i64;
    indices.iter().fold(0usize, |acc, &m| {
        debug_assert!(m >= -half && m < half);
        acc * n + (m + half) as usize
    })
}

pub fn momentum_grid(spec: &BathSpec) -> Vec<Momentum> {
    let n = spec.linear_size;
    let dim = spec.dimension;
    let mut out = Vec::with_capacity(spec.mode_count());
    let mut idx = vec![0i64; dim];
    for flat in 0..spec.mode_count() {
        unflatten(flat, n, dim, &mut idx);
        out.push(Momentum {
            indices: idx.clone(),
            linear_size: n,
        });
    }
    out
}

fn dispersion_from_indices(spec: &BathSpec, trig: &ExactTrig, m: &[i64]) -> f64 {
    let j = spec.hopping;
    match spec.model {
        LatticeModel::SquareTb => {
            let s: f64 = m.iter().map(|&mi| trig.cos_m(mi)).sum();
            spec.band_center - 2.0 * j * s
        }
        LatticeModel::BccTb => {
            // Pair the sum so that on every plane k_a + k_b = +-pi the two
            // cancelling cosines meet without intermediate rounding: either
            // both brackets cancel internally, or the brackets are exact
            // negatives of each other. Left-to-right summation would leak
            // ~1e-16 on two of the three planes.
            let c0 = trig.cos_m(m[0]);
            let c1 = trig.cos_m(m[1]);
            let c2 = trig.cos_m(m[2]);
            let cross = trig.cos_m(m.iter().sum());
            spec.band_center - 2.0 * j * ((c0 + c1) + (c2 + cross))
        }
    }
}

pub fn dispersion(spec: &BathSpec, k: &Momentum) -> Result<f64> {
    if k.indices.len() != spec.dimension || k.linear_size != spec.linear_size {
        return Err(Error::config(format!(
            "momentum has {} components on an N={} grid, expected {} on N={}",
            k.indices.len(),
            k.linear_size,
            spec.dimension,
            spec.linear_size
        )));
    }
    Ok(dispersion_from_indices(spec, &spec.trig(), &k.indices))
}

/// All N^d grid energies in row-major grid order.
pub fn dispersion_grid(spec: &BathSpec) -> Vec<f64> {
    let trig = spec.trig();
    let n = spec.linear_size;
    let dim = spec.dimension;
    let mut idx = vec![0i64; dim];
    (0..spec.mode_count())
        .map(|flat| {
            unflatten(flat, n, dim, &mut idx);
            dispersion_from_indices(spec, &trig, &idx)
        })
        .collect()
}

/// Grid momenta with |omega(k) - omega_e| <= tol, in grid order.
pub fn resonant_modes(spec: &BathSpec, omega_e: f64, tol: f64) -> Result<Vec<Momentum>> {
    if tol <= 0.0 {
        return Err(Error::config("tol must be positive"));
    }
    let energies = dispersion_grid(spec);
    let n = spec.linear_size;
    let dim = spec.dimension;
    let mut idx = vec![0i64; dim];
    let mut out = Vec::new();
    for (flat, &e) in energies.iter().enumerate() {
        if (e - omega_e).abs() <= tol {
            unflatten(flat, n, dim, &mut idx);
            out.push(Momentum {
                indices: idx.clone(),
                linear_size: n,
            });
        }
    }
    Ok(out)
}
