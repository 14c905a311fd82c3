//! Effective coherent (J) and dissipative (gamma) coupling matrices for
//! several emitters sharing one bath, from the regularized resolvent sum
//! over momenta, plus the small-regulator extrapolation.

use std::path::Path;

use num_complex::Complex64;

use crate::coupling::MomentumCoupling;
use crate::error::{Error, Result};
use crate::fourier::PhaseTable;
use crate::lattice::{dispersion_grid, unflatten, BathSpec};
use crate::linalg::eigenvalue_range;
use crate::reduce::complex_sum_by;

#[derive(Debug, Clone)]
pub struct CollectiveMatrices {
    /// Coherent exchange J, row-major size x size.
    pub coherent: Vec<Complex64>,
    /// Dissipative rates gamma, row-major size x size.
    pub dissipative: Vec<Complex64>,
    pub positions: Vec<Vec<i64>>,
    pub eta: f64,
    pub omega_e: f64,
    /// Largest |A - A^dagger| entry seen before symmetrization.
    pub hermiticity_residue: f64,
}

impl CollectiveMatrices {
    pub fn size(&self) -> usize {
        self.positions.len()
    }

    pub fn coherent_at(&self, i: usize, j: usize) -> Complex64 {
        self.coherent[i * self.size() + j]
    }

    pub fn dissipative_at(&self, i: usize, j: usize) -> Complex64 {
        self.dissipative[i * self.size() + j]
    }

    /// (smallest, largest) eigenvalue of the rate matrix; the smallest should
    /// not drop below -1e-8 times the largest.
    pub fn dissipative_eigenvalue_range(&self) -> (f64, f64) {
        eigenvalue_range(&self.dissipative, self.size())
    }
}

fn validate_positions(positions: &[Vec<i64>], dim: usize) -> Result<()> {
    if positions.is_empty() {
        return Err(Error::config("at least one emitter position is required"));
    }
    for p in positions {
        if p.len() != dim {
            return Err(Error::config(format!(
                "position {p:?} does not have {dim} components"
            )));
        }
    }
    Ok(())
}

/// Both matrices for an arbitrary-sign regulator. The rate weight is odd in
/// eta and the exchange weight even, which the sign-symmetry test pins down.
fn raw_couplings(
    spec: &BathSpec,
    gk: &MomentumCoupling,
    positions: &[Vec<i64>],
    omega_e: f64,
    eta: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let dim = spec.dimension;
    let n = spec.linear_size;
    let m_count = spec.mode_count();
    let energies = dispersion_grid(spec);

    // per-mode Lorentzian weights of the resolvent split
    let mut w_rate = vec![0.0f64; m_count];
    let mut w_exchange = vec![0.0f64; m_count];
    for k in 0..m_count {
        let p = gk.values[k].norm_sqr();
        let delta = omega_e - energies[k];
        let denom = delta * delta + eta * eta;
        w_rate[k] = p * 2.0 * eta / denom;
        w_exchange[k] = p * delta / denom;
    }

    let mut momenta = vec![0i64; m_count * dim];
    let mut buf = vec![0i64; dim];
    for k in 0..m_count {
        unflatten(k, n, dim, &mut buf);
        momenta[k * dim..(k + 1) * dim].copy_from_slice(&buf);
    }

    let table = PhaseTable::new(n);
    let n_e = positions.len();
    let inv_m = 1.0 / m_count as f64;
    let mut coherent = vec![Complex64::ZERO; n_e * n_e];
    let mut dissipative = vec![Complex64::ZERO; n_e * n_e];
    for i in 0..n_e {
        for j in 0..n_e {
            let sep: Vec<i64> = (0..dim).map(|a| positions[i][a] - positions[j][a]).collect();
            let rate = complex_sum_by(m_count, |k| {
                let dot: i64 = (0..dim).map(|a| momenta[k * dim + a] * sep[a]).sum();
                table.plus(dot) * w_rate[k]
            });
            let exchange = complex_sum_by(m_count, |k| {
                let dot: i64 = (0..dim).map(|a| momenta[k * dim + a] * sep[a]).sum();
                table.plus(dot) * w_exchange[k]
            });
            dissipative[i * n_e + j] = rate * inv_m;
            coherent[i * n_e + j] = exchange * inv_m;
        }
    }
    (coherent, dissipative)
}

fn hermitize(a: &mut [Complex64], n: usize) -> f64 {
    let mut residue = 0.0f64;
    for i in 0..n {
        let x = a[i * n + i];
        residue = residue.max((x - x.conj()).norm());
        a[i * n + i] = Complex64::new(x.re, 0.0);
        for j in i + 1..n {
            let x = a[i * n + j];
            let y = a[j * n + i];
            residue = residue.max((x - y.conj()).norm());
            let h = 0.5 * (x + y.conj());
            a[i * n + j] = h;
            a[j * n + i] = h.conj();
        }
    }
    residue
}

/// Coherent and dissipative coupling matrices at one regulator width eta,
/// with every emitter sharing the coupling `gk` up to the positional phase.
pub fn collective_couplings(
    spec: &BathSpec,
    gk: &MomentumCoupling,
    positions: &[Vec<i64>],
    omega_e: f64,
    eta: f64,
) -> Result<CollectiveMatrices> {
    spec.validate()?;
    if gk.values.len() != spec.mode_count() {
        return Err(Error::config("coupling does not match the bath grid"));
    }
    validate_positions(positions, spec.dimension)?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::config("regulator eta must be positive"));
    }
    if !omega_e.is_finite() {
        return Err(Error::config("omega_e must be finite"));
    }
    let (mut coherent, mut dissipative) = raw_couplings(spec, gk, positions, omega_e, eta);
    let n_e = positions.len();
    let r1 = hermitize(&mut coherent, n_e);
    let r2 = hermitize(&mut dissipative, n_e);
    Ok(CollectiveMatrices {
        coherent,
        dissipative,
        positions: positions.to_vec(),
        eta,
        omega_e,
        hermiticity_residue: r1.max(r2),
    })
}

#[derive(Debug, Clone)]
pub struct EtaExtrapolation {
    /// Matrices extrapolated to vanishing regulator (`eta` field is 0).
    pub matrices: CollectiveMatrices,
    /// Per-entry magnitude of the final extrapolation correction.
    pub coherent_spread: Vec<f64>,
    pub dissipative_spread: Vec<f64>,
    /// Largest correction across all entries after each added width.
    pub convergence: Vec<f64>,
    pub etas: Vec<f64>,
}

// Polynomial extrapolation to x = 0 with the magnitude of each diagonal
// correction, which doubles as the error estimate.
fn neville_at_zero(xs: &[f64], ys: &[Complex64], diffs: &mut [f64]) -> Complex64 {
    let l = xs.len();
    let mut t = ys.to_vec();
    let mut prev = t[0];
    for m in 1..l {
        for i in 0..l - m {
            t[i] = (xs[i] * t[i + 1] - xs[i + m] * t[i]) / (xs[i] - xs[i + m]);
        }
        diffs[m - 1] = (t[0] - prev).norm();
        prev = t[0];
    }
    t[0]
}

/// Evaluates the matrices at each listed regulator width and extrapolates
/// entrywise to the vanishing-width limit. Widths must decrease and stay
/// above twice the level spacing 8J/N, where the Lorentzians still average
/// over many modes.
pub fn eta_extrapolation(
    spec: &BathSpec,
    gk: &MomentumCoupling,
    positions: &[Vec<i64>],
    omega_e: f64,
    eta_list: &[f64],
) -> Result<EtaExtrapolation> {
    spec.validate()?;
    if eta_list.len() < 3 {
        return Err(Error::config("need at least 3 regulator widths"));
    }
    if eta_list.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::config("regulator widths must strictly decrease"));
    }
    let floor = 2.0 * 8.0 * spec.hopping / spec.linear_size as f64;
    if let Some(bad) = eta_list.iter().find(|&&e| !(e.is_finite() && e >= floor)) {
        return Err(Error::config(format!(
            "regulator width {bad:e} is below the level-spacing floor {floor:e}"
        )));
    }

    let runs: Vec<CollectiveMatrices> = eta_list
        .iter()
        .map(|&eta| collective_couplings(spec, gk, positions, omega_e, eta))
        .collect::<Result<_>>()?;
    let n_e = positions.len();
    let n_entries = n_e * n_e;
    let l = eta_list.len();

    let mut coherent = vec![Complex64::ZERO; n_entries];
    let mut dissipative = vec![Complex64::ZERO; n_entries];
    let mut coherent_spread = vec![0.0f64; n_entries];
    let mut dissipative_spread = vec![0.0f64; n_entries];
    let mut convergence = vec![0.0f64; l - 1];
    let mut ys = vec![Complex64::ZERO; l];
    let mut diffs = vec![0.0f64; l - 1];
    for e in 0..n_entries {
        for (r, run) in runs.iter().enumerate() {
            ys[r] = run.coherent[e];
        }
        coherent[e] = neville_at_zero(eta_list, &ys, &mut diffs);
        coherent_spread[e] = diffs[l - 2];
        for (c, d) in convergence.iter_mut().zip(&diffs) {
            *c = c.max(*d);
        }
        for (r, run) in runs.iter().enumerate() {
            ys[r] = run.dissipative[e];
        }
        dissipative[e] = neville_at_zero(eta_list, &ys, &mut diffs);
        dissipative_spread[e] = diffs[l - 2];
        for (c, d) in convergence.iter_mut().zip(&diffs) {
            *c = c.max(*d);
        }
    }
    let r1 = hermitize(&mut coherent, n_e);
    let r2 = hermitize(&mut dissipative, n_e);
    Ok(EtaExtrapolation {
        matrices: CollectiveMatrices {
            coherent,
            dissipative,
            positions: positions.to_vec(),
            eta: 0.0,
            omega_e,
            hermiticity_residue: r1.max(r2),
        },
        coherent_spread,
        dissipative_spread,
        convergence,
        etas: eta_list.to_vec(),
    })
}

/// CSV with `#` metadata lines, then one row per matrix entry holding both
/// complex matrices as re,im pairs.
pub fn export_matrices_csv(
    matrices: &CollectiveMatrices,
    design_label: &str,
    path: &Path,
) -> Result<()> {
    let p = path.display().to_string();
    let mut text = String::new();
    text.push_str(&format!(
        "# eta={:.16e} omega_e={:.16e} design={design_label}\n",
        matrices.eta, matrices.omega_e
    ));
    let positions: Vec<String> = matrices
        .positions
        .iter()
        .map(|pos| {
            let comps: Vec<String> = pos.iter().map(|c| c.to_string()).collect();
            format!("[{}]", comps.join(","))
        })
        .collect();
    text.push_str(&format!("# positions=[{}]\n", positions.join(",")));
    text.push_str("i,j,J_re,J_im,gamma_re,gamma_im\n");
    let n = matrices.size();
    for i in 0..n {
        for j in 0..n {
            let c = matrices.coherent_at(i, j);
            let d = matrices.dissipative_at(i, j);
            text.push_str(&format!(
                "{i},{j},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                c.re, c.im, d.re, d.im
            ));
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(&p, e))
}
