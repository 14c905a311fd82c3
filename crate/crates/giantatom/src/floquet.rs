//! Periodic drive schedules for a moving coupling point, their harmonic
//! decomposition, and the leading high-frequency correction with its bound.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingProfile;
use crate::error::{Error, Result};
use crate::lattice::ExactTrig;
use crate::linalg;

pub const ZETA_3: f64 = 1.202_056_903_159_594_285_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// Segment `a` of `N_p` is on with constant amplitude for
    /// `t mod T` in `[a w, (a+1) w)`, `w = T / N_p`, and off otherwise.
    Step,
    /// Segment `a` carries `cos^2(omega t / 2 - pi a / N_p)`; for two
    /// segments this is the cos^2/sin^2 crossfade pair.
    RaisedCosine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSite {
    pub offset: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

impl ScheduleSite {
    pub fn peak(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// A T-periodic drive moving one coupling amplitude over a cycle of sites.
/// All segments share one envelope kind; the cycle order is the segment order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSchedule {
    pub omega_drive: f64,
    pub envelope: Envelope,
    pub segments: Vec<ScheduleSite>,
}

impl DriveSchedule {
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_drive
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Length of one step window, when the envelope is stepwise.
    pub fn step_window(&self) -> Option<f64> {
        match self.envelope {
            Envelope::Step => Some(self.period() / self.segments.len() as f64),
            Envelope::RaisedCosine => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::config("drive schedule needs at least one segment"));
        }
        if !(self.omega_drive > 0.0) || !self.omega_drive.is_finite() {
            return Err(Error::config("omega_drive must be positive and finite"));
        }
        let dim = self.segments[0].offset.len();
        for s in &self.segments {
            if s.offset.len() != dim {
                return Err(Error::config("schedule offsets must share one dimension"));
            }
            if !s.re.is_finite() || !s.im.is_finite() {
                return Err(Error::config("schedule amplitudes must be finite"));
            }
        }
        for (i, a) in self.segments.iter().enumerate() {
            for b in &self.segments[..i] {
                if a.offset == b.offset {
                    return Err(Error::config(format!(
                        "duplicate schedule offset {:?}",
                        a.offset
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.segments[0].offset.len()
    }

    /// Instantaneous amplitude of every segment at time `t`.
    pub fn amplitudes_at(&self, t: f64) -> Vec<Complex64> {
        let n_p = self.segments.len();
        let tp = self.period();
        match self.envelope {
            Envelope::Step => {
                let u = t - tp * (t / tp).floor();
                let mut active = (u / (tp / n_p as f64)) as usize;
                if active >= n_p {
                    active = n_p - 1;
                }
                self.segments
                    .iter()
                    .enumerate()
                    .map(|(a, s)| if a == active { s.peak() } else { Complex64::ZERO })
                    .collect()
            }
            Envelope::RaisedCosine => self
                .segments
                .iter()
                .enumerate()
                .map(|(a, s)| {
                    let c = (self.omega_drive * t / 2.0
                        - std::f64::consts::PI * a as f64 / n_p as f64)
                        .cos();
                    s.peak() * (c * c)
                })
                .collect(),
        }
    }
}

/// Constant-amplitude cycle visiting each position for an equal share of the
/// period.
pub fn step_schedule(
    positions: Vec<Vec<i64>>,
    amplitudes: Vec<Complex64>,
    omega_drive: f64,
) -> Result<DriveSchedule> {
    if positions.is_empty() {
        return Err(Error::config("step schedule needs at least one position"));
    }
    if positions.len() != amplitudes.len() {
        return Err(Error::config(
            "step schedule needs one amplitude per position",
        ));
    }
    let segments = positions
        .into_iter()
        .zip(amplitudes)
        .map(|(offset, g)| ScheduleSite {
            offset,
            re: g.re,
            im: g.im,
        })
        .collect();
    let schedule = DriveSchedule {
        omega_drive,
        envelope: Envelope::Step,
        segments,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Smooth crossfade between the sites (0,0) and (1,1):
/// `g cos^2(omega t/2)` on the first, `g sin^2(omega t/2)` on the second,
/// summing to `g` at every instant.
pub fn smooth_two_site_schedule(g: f64, omega_drive: f64) -> Result<DriveSchedule> {
    let schedule = DriveSchedule {
        omega_drive,
        envelope: Envelope::RaisedCosine,
        segments: vec![
            ScheduleSite {
                offset: vec![0, 0],
                re: g,
                im: 0.0,
            },
            ScheduleSite {
                offset: vec![1, 1],
                re: g,
                im: 0.0,
            },
        ],
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Cycle-averaged coupling profile, evaluated in closed form: peak / N_p for
/// step envelopes and peak / 2 for raised cosines.
pub fn time_average(schedule: &DriveSchedule) -> Result<CouplingProfile> {
    schedule.validate()?;
    let scale = match schedule.envelope {
        Envelope::Step => 1.0 / schedule.segments.len() as f64,
        Envelope::RaisedCosine => 0.5,
    };
    let sites = schedule
        .segments
        .iter()
        .map(|s| (s.offset.clone(), s.peak() * scale))
        .collect();
    CouplingProfile::new(sites, vec![0; schedule.dimension()])
}

/// Fourier coefficient of the unit step window `alpha` (1-based) out of `n_p`,
/// for harmonic `j != 0`. Vanishes identically when `j` is a multiple of
/// `n_p`, and that case is returned as an exact zero.
pub fn step_coefficient(n_p: usize, j: i64, alpha: usize) -> Complex64 {
    debug_assert!(j != 0 && alpha >= 1 && alpha <= n_p);
    if j.rem_euclid(n_p as i64) == 0 {
        return Complex64::ZERO;
    }
    let w = std::f64::consts::TAU * j as f64 / n_p as f64;
    let hop = Complex64::new(0.0, w).exp() - 1.0;
    let shift = Complex64::new(0.0, -w * alpha as f64).exp();
    shift * hop / Complex64::new(0.0, std::f64::consts::TAU * j as f64)
}

#[derive(Debug, Clone)]
pub struct HarmonicDecomposition {
    pub dc: CouplingProfile,
    /// Harmonic index `j` to the profile carried by `e^{i j omega t}`.
    /// Harmonics whose coefficients vanish identically are omitted.
    pub harmonics: BTreeMap<i64, CouplingProfile>,
    pub j_max: usize,
}

impl HarmonicDecomposition {
    /// Sum of dc and all retained harmonics at time `t`, per segment site,
    /// in the segment order of the originating schedule.
    pub fn reconstruct_at(&self, omega_drive: f64, t: f64) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.dc.sites.iter().map(|s| s.amplitude).collect();
        for (&j, profile) in &self.harmonics {
            let phase = Complex64::new(0.0, j as f64 * omega_drive * t).exp();
            for (acc, site) in out.iter_mut().zip(&profile.sites) {
                *acc += site.amplitude * phase;
            }
        }
        out
    }
}

/// Closed-form harmonic content of a schedule up to `j_max`.
pub fn harmonic_coefficients(
    schedule: &DriveSchedule,
    j_max: usize,
) -> Result<HarmonicDecomposition> {
    schedule.validate()?;
    if j_max < 1 {
        return Err(Error::config("j_max must be at least 1"));
    }
    let n_p = schedule.segments.len();
    let dim = schedule.dimension();
    let offsets: Vec<Vec<i64>> = schedule.segments.iter().map(|s| s.offset.clone()).collect();

    let dc_scale = match schedule.envelope {
        Envelope::Step => 1.0 / n_p as f64,
        Envelope::RaisedCosine => 0.5,
    };
    let dc_sites: Vec<(Vec<i64>, Complex64)> = schedule
        .segments
        .iter()
        .map(|s| (s.offset.clone(), s.peak() * dc_scale))
        .collect();
    let dc = CouplingProfile::new(dc_sites, vec![0; dim])?;

    let mut harmonics = BTreeMap::new();
    for j in 1..=j_max as i64 {
        for signed in [j, -j] {
            let coeffs: Vec<Complex64> = match schedule.envelope {
                Envelope::Step => (1..=n_p)
                    .map(|alpha| step_coefficient(n_p, signed, alpha))
                    .collect(),
                Envelope::RaisedCosine => {
                    if signed.abs() != 1 {
                        vec![Complex64::ZERO; n_p]
                    } else {
                        // cos^2(x - phi) = 1/2 + e^{2i(x-phi)}/4 + e^{-2i(x-phi)}/4
                        (0..n_p)
                            .map(|a| {
                                let phi = std::f64::consts::TAU * a as f64 / n_p as f64;
                                Complex64::new(0.0, -(signed as f64) * phi).exp() * 0.25
                            })
                            .collect()
                    }
                }
            };
            if coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
                continue;
            }
            let sites: Vec<(Vec<i64>, Complex64)> = offsets
                .iter()
                .zip(&coeffs)
                .zip(&schedule.segments)
                .map(|((o, c), s)| (o.clone(), c * s.peak()))
                .collect();
            harmonics.insert(signed, CouplingProfile::new(sites, vec![0; dim])?);
        }
    }
    Ok(HarmonicDecomposition {
        dc,
        harmonics,
        j_max,
    })
}

/// Leading 1/omega correction for a stepwise cycle: the coefficients of the
/// bath-bilinear term between every pair of visited sites, its operator norm
/// on the singly excited sector, and the analytic bound that must dominate it.
#[derive(Debug, Clone)]
pub struct FloquetCorrection {
    /// Row `a`, column `b`: coefficient multiplying the hop from segment
    /// site `b` to segment site `a`. Hermitian by construction.
    pub coefficients: Vec<Vec<Complex64>>,
    pub norm: f64,
    pub bound: f64,
}

pub fn first_order_correction(schedule: &DriveSchedule, j_max: usize) -> Result<FloquetCorrection> {
    schedule.validate()?;
    if schedule.envelope != Envelope::Step {
        return Err(Error::config(
            "first-order correction is only available for step schedules",
        ));
    }
    if j_max < 1 {
        return Err(Error::config("j_max must be at least 1"));
    }
    let n_p = schedule.segments.len();
    let omega = schedule.omega_drive;
    let peaks: Vec<Complex64> = schedule.segments.iter().map(|s| s.peak()).collect();
    // Angles are multiples of pi / n_p, so a table of size 2 n_p makes every
    // structural zero of the double sum an exact 0.0.
    let trig = ExactTrig::new(2 * n_p);
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;

    let mut coefficients = vec![vec![Complex64::ZERO; n_p]; n_p];
    for a in 0..n_p {
        for b in 0..n_p {
            let mut sum = Complex64::ZERO;
            for j in 1..=j_max as i64 {
                let s_half = trig.sin_m(j); // sin(pi j / n_p)
                if s_half == 0.0 {
                    continue;
                }
                let s_diff = trig.sin_m(2 * j * (b as i64 - a as i64)); // sin(2 pi j (b-a) / n_p)
                if s_diff == 0.0 {
                    continue;
                }
                sum += Complex64::new(0.0, -2.0) * peaks[a] * peaks[b].conj()
                    * (s_half * s_half * s_diff)
                    / (pi2 * (j * j * j) as f64 * omega);
            }
            coefficients[a][b] = sum;
        }
    }

    let flat: Vec<Complex64> = coefficients.iter().flatten().copied().collect();
    let norm = linalg::hermitian_norm(&flat, n_p);
    let g_max = peaks.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let bound = correction_bound(g_max, n_p, omega);
    Ok(FloquetCorrection {
        coefficients,
        norm,
        bound,
    })
}

/// Closed-form ceiling 4 g_max^2 N_p^2 zeta(3) / (pi^2 omega) on the
/// first-order correction norm.
pub fn correction_bound(g_max: f64, n_p: usize, omega_drive: f64) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    4.0 * g_max * g_max * (n_p * n_p) as f64 * ZETA_3 / (pi2 * omega_drive)
}
