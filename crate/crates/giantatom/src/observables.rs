//! Derived quantities: directional emission fractions, effective spectral
//! density, decay-rate estimates, real-space cone populations, and exporters.

use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::coupling::MomentumCoupling;
use crate::dynamics::ExcitationState;
use crate::error::{Error, Result};
use crate::fourier::modes_to_sites;
use crate::lattice::{dispersion_grid, unflatten, BathSpec};
use crate::reduce::real_sum_by;

/// Share of the bath population in each open momentum quadrant
/// (1: +k_x +k_y, 2: -+, 3: --, 4: +-), with boundary modes split evenly.
#[derive(Debug, Clone, Copy)]
pub struct QuadrantFractions {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub t: f64,
}

impl QuadrantFractions {
    pub fn as_array(&self) -> [f64; 4] {
        [self.f1, self.f2, self.f3, self.f4]
    }
}

// A momentum index on an axis (m = 0) or on the zone boundary (m = -N/2,
// which stands for both +-pi) belongs to both neighboring quadrants equally;
// the half weights keep the four fractions summing to one exactly.
fn quadrant_factor(m: i64, half: i64, want_positive: bool) -> f64 {
    if m == 0 || m == -half {
        0.5
    } else if (m > 0) == want_positive {
        1.0
    } else {
        0.0
    }
}

pub fn quadrant_fractions(state: &ExcitationState, spec: &BathSpec) -> Result<QuadrantFractions> {
    spec.validate()?;
    if spec.dimension != 2 {
        return Err(Error::config("quadrant fractions need a 2D bath"));
    }
    if state.c_k.len() != spec.mode_count() {
        return Err(Error::config("state does not match the bath grid"));
    }
    let n = spec.linear_size;
    let half = (n / 2) as i64;
    let mut sums = [0.0f64; 4];
    let mut population = 0.0f64;
    let mut m = [0i64; 2];
    let signs = [(true, true), (false, true), (false, false), (true, false)];
    for (flat, c) in state.c_k.iter().enumerate() {
        let p = c.norm_sqr();
        if p == 0.0 {
            continue;
        }
        unflatten(flat, n, 2, &mut m);
        population += p;
        for (q, &(sx, sy)) in signs.iter().enumerate() {
            sums[q] += p * quadrant_factor(m[0], half, sx) * quadrant_factor(m[1], half, sy);
        }
    }
    if population <= 1e-15 {
        return Err(Error::config(
            "bath population too small for quadrant fractions",
        ));
    }
    Ok(QuadrantFractions {
        f1: sums[0] / population,
        f2: sums[1] / population,
        f3: sums[2] / population,
        f4: sums[3] / population,
        t: state.time,
    })
}

/// Energy-resolved coupling weight over the bath band.
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    pub bin_edges: Vec<f64>,
    pub values: Vec<f64>,
    pub total_weight: f64,
}

/// Histogram of the band energies weighted by |G(k)|^2 / g_ref^2 with g_ref
/// the largest |G|, normalized so the values integrate to the sum rule
/// (1/N^d) sum_k |G(k)|^2 / g_ref^2. A weight landing exactly on an interior
/// bin edge is split half and half between the two touching bins; band-edge
/// hits clamp inward.
pub fn spectral_density(
    gk: &MomentumCoupling,
    spec: &BathSpec,
    n_bins: usize,
) -> Result<SpectralDensity> {
    spec.validate()?;
    if gk.values.len() != spec.mode_count() {
        return Err(Error::config("coupling does not match the bath grid"));
    }
    if n_bins < 10 {
        return Err(Error::config("n_bins must be at least 10"));
    }
    let g_ref = gk.g_ref();
    if g_ref <= 0.0 {
        return Err(Error::config("coupling is identically zero"));
    }
    let w = spec.band_half_width();
    let lo = spec.band_center - w;
    let hi = spec.band_center + w;
    let nb = n_bins as f64;
    let bin_width = (hi - lo) / nb;
    let energies = dispersion_grid(spec);

    let mut acc = vec![0.0f64; n_bins];
    for (e, g) in energies.iter().zip(&gk.values) {
        let weight = g.norm_sqr();
        if weight == 0.0 {
            continue;
        }
        let x = (e - lo) / (hi - lo) * nb;
        let fl = x.floor();
        if x == fl && fl > 0.0 && (fl as usize) < n_bins {
            let idx = fl as usize;
            acc[idx - 1] += 0.5 * weight;
            acc[idx] += 0.5 * weight;
        } else {
            let idx = (fl.max(0.0) as usize).min(n_bins - 1);
            acc[idx] += weight;
        }
    }

    let m = spec.mode_count() as f64;
    let scale = 1.0 / (m * g_ref * g_ref);
    let total_weight: f64 = acc.iter().sum::<f64>() * scale;
    let values: Vec<f64> = acc.iter().map(|a| a * scale / bin_width).collect();
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * bin_width).collect();
    Ok(SpectralDensity {
        bin_edges,
        values,
        total_weight,
    })
}

/// Markovian decay rate from the resonance-weighted coupling, with the
/// discrete spectrum smoothed on the level-spacing scale (width 8 pi J / N).
pub fn golden_rate(spec: &BathSpec, gk: &MomentumCoupling, omega_e: f64) -> Result<f64> {
    spec.validate()?;
    if gk.values.len() != spec.mode_count() {
        return Err(Error::config("coupling does not match the bath grid"));
    }
    let eta = 8.0 * std::f64::consts::PI * spec.hopping / spec.linear_size as f64;
    let energies = dispersion_grid(spec);
    let m = spec.mode_count();
    let sum = real_sum_by(m, |i| {
        let delta = omega_e - energies[i];
        gk.values[i].norm_sqr() * eta / (delta * delta + eta * eta)
    });
    Ok(2.0 * sum / m as f64)
}

#[derive(Debug, Clone)]
pub struct SurvivalAnalysis {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub fitted_rate: f64,
    pub golden_rate: f64,
    pub warnings: Vec<String>,
}

/// Survival series |C_e(t)|^2 with an exponential fit over the window and the
/// golden-rule rate for cross-checking. A non-monotone or nearly flat window
/// attaches a warning instead of failing.
pub fn survival_and_rate(
    trajectory: &[ExcitationState],
    fit_window: (f64, f64),
    spec: &BathSpec,
    gk: &MomentumCoupling,
    omega_e: f64,
) -> Result<SurvivalAnalysis> {
    if trajectory.is_empty() {
        return Err(Error::config("empty trajectory"));
    }
    let times: Vec<f64> = trajectory.iter().map(|s| s.time).collect();
    let survival: Vec<f64> = trajectory.iter().map(|s| s.c_e.norm_sqr()).collect();
    let (t0, t1) = fit_window;
    if !(t0 < t1) {
        return Err(Error::config("fit window must satisfy t0 < t1"));
    }
    let eps = 1e-12 * t1.abs().max(1.0);
    if t0 < times[0] - eps || t1 > times[times.len() - 1] + eps {
        return Err(Error::config("fit window extends beyond the trajectory"));
    }
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= t0 - eps && times[i] <= t1 + eps)
        .collect();
    if idx.len() < 10 {
        return Err(Error::config(format!(
            "need at least 10 samples in the fit window, found {}",
            idx.len()
        )));
    }

    let mut warnings = Vec::new();
    let first = survival[idx[0]];
    let last = survival[idx[idx.len() - 1]];
    if idx
        .windows(2)
        .any(|p| survival[p[1]] > survival[p[0]] * (1.0 + 1e-9))
    {
        warnings.push("survival is not monotone in the fit window".to_string());
    }
    if first - last < 1e-3 * first {
        warnings.push("survival is nearly flat in the fit window".to_string());
    }

    let usable: Vec<usize> = idx.iter().copied().filter(|&i| survival[i] > 0.0).collect();
    if usable.len() < idx.len() {
        warnings.push("nonpositive survival samples excluded from the fit".to_string());
    }
    if usable.len() < 10 {
        return Err(Error::config(
            "fewer than 10 positive samples in the fit window",
        ));
    }
    let n = usable.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &i in &usable {
        let x = times[i];
        let y = survival[i].ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = sxx - sx * sx / n;
    if denom <= 0.0 {
        return Err(Error::config("degenerate times in the fit window"));
    }
    let slope = (sxy - sx * sy / n) / denom;
    let fitted_rate = -slope;

    let golden = golden_rate(spec, gk, omega_e)?;
    Ok(SurvivalAnalysis {
        times,
        survival,
        fitted_rate,
        golden_rate: golden,
        warnings,
    })
}

/// Fraction of a nonnegative site field inside the real-space cone of the
/// given half-angle around `direction`, anchored at a (generally fractional)
/// centroid. Both the cone sum and the total are accumulated in displacement
/// order from the centroid, so a rigid periodic shift of field and centroid
/// together reproduces the result bit for bit.
pub fn masked_fraction_of_field(
    populations: &[f64],
    spec: &BathSpec,
    centroid: &[f64],
    direction: &[f64],
    half_angle: f64,
) -> Result<f64> {
    spec.validate()?;
    if spec.dimension != 2 {
        return Err(Error::config("cone populations need a 2D bath"));
    }
    if populations.len() != spec.mode_count() {
        return Err(Error::config("field does not match the bath grid"));
    }
    if centroid.len() != 2 || centroid.iter().any(|c| !c.is_finite()) {
        return Err(Error::config("centroid must be two finite components"));
    }
    if direction.len() != 2 || direction.iter().any(|d| !d.is_finite()) {
        return Err(Error::config("direction must be two finite components"));
    }
    let dnorm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if dnorm <= 0.0 {
        return Err(Error::config("direction must be nonzero"));
    }
    if !(half_angle > 0.0 && half_angle <= std::f64::consts::PI) {
        return Err(Error::config("half_angle must lie in (0, pi]"));
    }
    let n = spec.linear_size;
    let half = (n / 2) as i64;
    let cx = centroid[0].round();
    let cy = centroid[1].round();
    let (fx, fy) = (centroid[0] - cx, centroid[1] - cy);
    let (cx, cy) = (cx as i64, cy as i64);
    let cos_half = half_angle.cos();
    let wrap = |x: i64| -> usize { (x + half).rem_euclid(n as i64) as usize };

    let mut inside = 0.0f64;
    let mut total = 0.0f64;
    for dx in -half..half {
        for dy in -half..half {
            let p = populations[wrap(cx + dx) * n + wrap(cy + dy)];
            total += p;
            let vx = dx as f64 - fx;
            let vy = dy as f64 - fy;
            let vn = (vx * vx + vy * vy).sqrt();
            if vn == 0.0 {
                continue; // the anchor site has no direction
            }
            if vx * direction[0] + vy * direction[1] >= vn * dnorm * cos_half {
                inside += p;
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::config("field is empty"));
    }
    Ok(inside / total)
}

/// Cone fraction of a state's bath emission in real space; `centroid` is the
/// emitter footprint centroid the cone is anchored to.
pub fn directional_mask_population(
    state: &ExcitationState,
    spec: &BathSpec,
    centroid: &[f64],
    direction: &[f64],
    half_angle: f64,
) -> Result<f64> {
    if state.c_k.len() != spec.mode_count() {
        return Err(Error::config("state does not match the bath grid"));
    }
    let field = modes_to_sites(&state.c_k, spec.linear_size, spec.dimension);
    let populations: Vec<f64> = field.iter().map(|z| z.norm_sqr()).collect();
    masked_fraction_of_field(&populations, spec, centroid, direction, half_angle)
}

/// Cosine similarity of two nonnegative shape vectors; 0 if either is null.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    BinaryF64,
    Pgm8,
}

pub enum FieldValues<'a> {
    Complex(&'a [Complex64]),
    Real(&'a [f64]),
}

impl<'a> FieldValues<'a> {
    fn len(&self) -> usize {
        match self {
            FieldValues::Complex(v) => v.len(),
            FieldValues::Real(v) => v.len(),
        }
    }

    /// Exported scalar: intensity |z|^2 for complex amplitudes, the value
    /// itself for an already-real field.
    fn scalar(&self, i: usize) -> f64 {
        match self {
            FieldValues::Complex(v) => v[i].norm_sqr(),
            FieldValues::Real(v) => v[i],
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldMeta {
    pub shape: Vec<usize>,
    pub time: f64,
    pub metadata: serde_json::Value,
}

/// Writes a field grid. `binary_f64` emits raw row-major little-endian floats
/// plus a `<path>.meta.json` sidecar; `pgm8` emits an 8-bit grayscale map
/// with the linear scale recorded in the header comment.
pub fn export_field(
    values: FieldValues,
    meta: &FieldMeta,
    path: &Path,
    format: ExportFormat,
) -> Result<()> {
    let expected: usize = meta.shape.iter().product();
    if expected != values.len() || meta.shape.is_empty() {
        return Err(Error::config(format!(
            "shape {:?} does not describe {} values",
            meta.shape,
            values.len()
        )));
    }
    let p = path.display().to_string();
    match format {
        ExportFormat::BinaryF64 => {
            let mut bytes = Vec::with_capacity(values.len() * 8);
            for i in 0..values.len() {
                bytes.extend_from_slice(&values.scalar(i).to_le_bytes());
            }
            std::fs::write(path, bytes).map_err(|e| Error::io(&p, e))?;
            let sidecar = serde_json::json!({
                "shape": meta.shape,
                "layout": "row-major",
                "dtype": "f64",
                "time": meta.time,
                "metadata": meta.metadata,
            });
            let side_path = format!("{p}.meta.json");
            let text = serde_json::to_string_pretty(&sidecar)
                .expect("sidecar serialization cannot fail");
            std::fs::write(&side_path, text + "\n").map_err(|e| Error::io(&side_path, e))?;
        }
        ExportFormat::Pgm8 => {
            if meta.shape.len() != 2 {
                return Err(Error::config("pgm8 needs a 2D shape"));
            }
            let (rows, cols) = (meta.shape[0], meta.shape[1]);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..values.len() {
                let v = values.scalar(i);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let mut out = Vec::with_capacity(values.len() + 128);
            write!(
                out,
                "P5\n# intensity min={lo:.16e} max={hi:.16e} time={:.16e}\n{cols} {rows}\n255\n",
                meta.time
            )
            .expect("in-memory write");
            let span = hi - lo;
            for i in 0..values.len() {
                let px = if span > 0.0 {
                    ((values.scalar(i) - lo) / span * 255.0).round() as u8
                } else {
                    0
                };
                out.push(px);
            }
            std::fs::write(path, out).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}

/// CSV time series: a header row, then one row per record with every value in
/// full 17-significant-digit form.
pub fn write_csv_series(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let p = path.display().to_string();
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::config(format!(
                "row has {} values for {} columns",
                row.len(),
                header.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(&p, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{gk_from_profile, named_design, CouplingProfile, DesignName};
    use crate::dynamics::{evolve, EmitterSpec};
    use crate::floquet::step_schedule;
    use crate::lattice::flatten;

    fn state_with_single_mode(n: usize, m: &[i64]) -> ExcitationState {
        let mut c_k = vec![Complex64::ZERO; n * n];
        c_k[flatten(m, n)] = Complex64::ONE;
        ExcitationState {
            c_e: Complex64::ZERO,
            c_k,
            time: 0.0,
        }
    }

    #[test]
    fn single_modes_land_in_the_right_quadrant() {
        let spec = BathSpec::square(2, 8).unwrap();
        let q = quadrant_fractions(&state_with_single_mode(8, &[2, 2]), &spec).unwrap();
        assert_eq!(q.as_array(), [1.0, 0.0, 0.0, 0.0]);
        let q = quadrant_fractions(&state_with_single_mode(8, &[-2, 2]), &spec).unwrap();
        assert_eq!(q.as_array(), [0.0, 1.0, 0.0, 0.0]);

        // an axis mode splits between the two touching quadrants
        let q = quadrant_fractions(&state_with_single_mode(8, &[0, 3]), &spec).unwrap();
        assert_eq!(q.as_array(), [0.5, 0.5, 0.0, 0.0]);
        // the zone corner feeds all four equally
        let q = quadrant_fractions(&state_with_single_mode(8, &[-4, -4]), &spec).unwrap();
        assert_eq!(q.as_array(), [0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn quadrant_fractions_sum_to_one() {
        let spec = BathSpec::square(2, 16).unwrap();
        let profile = crate::coupling::random_profile(&spec, 4, 0.2, 11).unwrap();
        let emitter = EmitterSpec::fixed(0.0, profile);
        let traj = evolve(&spec, &emitter, 4.0, 0.01, &[4.0]).unwrap();
        let q = quadrant_fractions(&traj.states[0], &spec).unwrap();
        let total: f64 = q.as_array().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert_eq!(q.t, 4.0);
    }

    #[test]
    fn empty_bath_has_no_fractions() {
        let spec = BathSpec::square(2, 8).unwrap();
        let state = ExcitationState {
            c_e: Complex64::ONE,
            c_k: vec![Complex64::ZERO; 64],
            time: 0.0,
        };
        assert!(quadrant_fractions(&state, &spec).is_err());
    }

    fn design_gk(name: DesignName, g: f64, spec: &BathSpec) -> MomentumCoupling {
        named_design(name, g, spec)
            .unwrap()
            .into_momentum(spec)
            .unwrap()
    }

    #[test]
    fn spectral_sum_rule_holds_for_every_design() {
        let spec = BathSpec::square(2, 64).unwrap();
        for name in [
            DesignName::Local,
            DesignName::Quasi1d,
            DesignName::Trap,
            DesignName::Purify,
            DesignName::Chiral,
            DesignName::Vtype,
        ] {
            let gk = design_gk(name, 0.1, &spec);
            let sd = spectral_density(&gk, &spec, 200).unwrap();
            let direct: f64 = gk.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
                / (spec.mode_count() as f64 * gk.g_ref() * gk.g_ref());
            assert!((sd.total_weight - direct).abs() < 1e-10);
            let integral: f64 = sd.values.iter().sum::<f64>()
                * (sd.bin_edges[1] - sd.bin_edges[0]);
            assert!((integral - sd.total_weight).abs() < 1e-10);
            assert!(sd.values.iter().all(|v| *v >= 0.0));
        }

        let spec3 = BathSpec::bcc(8).unwrap();
        let two_site = CouplingProfile::new(
            vec![
                (vec![0, 0, 0], Complex64::new(0.1, 0.0)),
                (vec![1, 1, 0], Complex64::new(0.1, 0.0)),
            ],
            vec![0, 0, 0],
        )
        .unwrap();
        let gk = gk_from_profile(&two_site, &spec3).unwrap();
        let sd = spectral_density(&gk, &spec3, 32).unwrap();
        let direct: f64 = gk.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
            / (spec3.mode_count() as f64 * gk.g_ref() * gk.g_ref());
        assert!((sd.total_weight - direct).abs() < 1e-10);
    }

    #[test]
    fn purifying_design_gives_a_mirror_symmetric_density() {
        let spec = BathSpec::square(2, 64).unwrap();
        let gk = design_gk(DesignName::Purify, 0.1, &spec);
        let sd = spectral_density(&gk, &spec, 200).unwrap();
        for i in 0..200 {
            let d = (sd.values[i] - sd.values[199 - i]).abs();
            assert!(d < 1e-10, "bins {i}/{} differ by {d:e}", 199 - i);
        }
    }

    #[test]
    fn flat_coupling_center_bin_matches_frozen_value_and_grows() {
        let spec = BathSpec::square(2, 64).unwrap();
        let gk = design_gk(DesignName::Local, 0.1, &spec);
        let sd = spectral_density(&gk, &spec, 200).unwrap();
        assert!(
            (sd.values[100] - 0.482_177_734_4).abs() < 1e-9,
            "center bin {:.10}",
            sd.values[100]
        );

        // resolution tied to the level spacing shows the logarithmic growth
        let mut centers = Vec::new();
        for n in [64usize, 128] {
            let spec = BathSpec::square(2, n).unwrap();
            let gk = design_gk(DesignName::Local, 0.1, &spec);
            let sd = spectral_density(&gk, &spec, n).unwrap();
            centers.push(sd.values[n / 2]);
        }
        assert!(centers[1] > centers[0], "centers = {centers:?}");
    }

    #[test]
    fn histogram_input_validation() {
        let spec = BathSpec::square(2, 16).unwrap();
        let gk = design_gk(DesignName::Local, 0.1, &spec);
        assert!(spectral_density(&gk, &spec, 9).is_err());
        assert!(spectral_density(&gk, &spec, 10).is_ok());
        let other = BathSpec::square(2, 32).unwrap();
        assert!(spectral_density(&gk, &other, 32).is_err());
    }

    #[test]
    fn golden_rate_matches_frozen_value() {
        let spec = BathSpec::square(2, 64).unwrap();
        let gk = design_gk(DesignName::Local, 0.05, &spec);
        let rate = golden_rate(&spec, &gk, -1.0).unwrap();
        assert!(
            (rate - 2.154_808_56e-3).abs() < 1e-11,
            "rate = {rate:.8e}"
        );
    }

    #[test]
    fn fitted_rate_tracks_the_golden_rule_off_singularity() {
        let spec = BathSpec::square(2, 64).unwrap();
        let design = named_design(DesignName::Local, 0.05, &spec).unwrap();
        let profile = design.profile().unwrap().clone();
        let gk = gk_from_profile(&profile, &spec).unwrap();
        let emitter = EmitterSpec::fixed(-1.0, profile);
        let snaps: Vec<f64> = (0..=140).map(|i| i as f64 * 0.1).collect();
        let traj = evolve(&spec, &emitter, 14.0, 0.01, &snaps).unwrap();
        let out = survival_and_rate(&traj.states, (4.0, 14.0), &spec, &gk, -1.0).unwrap();
        assert!(
            (out.fitted_rate - 2.226_204_91e-3).abs() < 1e-10,
            "fitted = {:.8e}",
            out.fitted_rate
        );
        let rel = (out.fitted_rate - out.golden_rate).abs() / out.golden_rate;
        assert!(rel < 0.2, "relative gap {rel}");
        assert_eq!(out.times.len(), 141);
    }

    #[test]
    fn decoupled_run_fits_to_exactly_zero() {
        let spec = BathSpec::square(2, 8).unwrap();
        let sched = step_schedule(vec![vec![0, 0]], vec![Complex64::ZERO], 1.0).unwrap();
        let emitter = EmitterSpec::moving(0.0, sched);
        let snaps: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let traj = evolve(&spec, &emitter, 2.0, 0.01, &snaps).unwrap();
        let gk = MomentumCoupling {
            values: vec![Complex64::ZERO; 64],
            linear_size: 8,
            dimension: 2,
            source: crate::coupling::CouplingSource::SampledFromProfile,
        };
        let out = survival_and_rate(&traj.states, (0.0, 2.0), &spec, &gk, 0.0).unwrap();
        assert_eq!(out.fitted_rate, 0.0);
        assert_eq!(out.golden_rate, 0.0);
        assert!(out
            .warnings
            .iter()
            .any(|w| w.contains("nearly flat")));
    }

    #[test]
    fn fit_window_validation() {
        let spec = BathSpec::square(2, 16).unwrap();
        let profile = crate::coupling::random_profile(&spec, 2, 0.1, 1).unwrap();
        let gk = gk_from_profile(&profile, &spec).unwrap();
        let emitter = EmitterSpec::fixed(0.0, profile);
        let snaps: Vec<f64> = (0..=10).map(|i| i as f64 * 0.2).collect();
        let traj = evolve(&spec, &emitter, 2.0, 0.01, &snaps).unwrap();
        // beyond the trajectory
        assert!(survival_and_rate(&traj.states, (0.0, 5.0), &spec, &gk, 0.0).is_err());
        // too few samples
        assert!(survival_and_rate(&traj.states, (0.0, 1.0), &spec, &gk, 0.0).is_err());
        assert!(survival_and_rate(&traj.states, (0.0, 2.0), &spec, &gk, 0.0).is_ok());
    }

    #[test]
    fn cone_count_matches_an_independent_census() {
        let spec = BathSpec::square(2, 8).unwrap();
        // all population in k=0 gives a uniform |C_n|^2
        let state = state_with_single_mode(8, &[0, 0]);
        let frac = directional_mask_population(&state, &spec, &[0.0, 0.0], &[1.0, 0.0], 0.6)
            .unwrap();
        let mut count = 0usize;
        for dx in -4i64..4 {
            for dy in -4i64..4 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let angle = (dy as f64).atan2(dx as f64).abs();
                if angle <= 0.6 {
                    count += 1;
                }
            }
        }
        assert!(count > 0);
        assert!((frac - count as f64 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn anchor_site_population_is_outside_every_cone() {
        let spec = BathSpec::square(2, 8).unwrap();
        // uniform C_k concentrates all population on the origin site
        let c_k = vec![Complex64::new(0.125, 0.0); 64];
        let state = ExcitationState {
            c_e: Complex64::ZERO,
            c_k,
            time: 0.0,
        };
        let frac = directional_mask_population(
            &state,
            &spec,
            &[0.0, 0.0],
            &[1.0, 1.0],
            std::f64::consts::PI,
        )
        .unwrap();
        assert!(frac < 1e-20, "frac = {frac:e}");
    }

    #[test]
    fn cone_fraction_is_translation_invariant_bitwise() {
        let spec = BathSpec::square(2, 16).unwrap();
        let n = 16usize;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let field: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let centroid = [1.3, -0.4];
        let base = masked_fraction_of_field(&field, &spec, &centroid, &[1.0, 1.0], 0.7).unwrap();
        for shift in [[3i64, -5], [-8, 8], [1, 0]] {
            let mut shifted = vec![0.0f64; n * n];
            let half = (n / 2) as i64;
            let wrap = |x: i64| (x + half).rem_euclid(n as i64) as usize;
            for x in -half..half {
                for y in -half..half {
                    // field value at site s moves to s + shift
                    shifted[wrap(x + shift[0]) * n + wrap(y + shift[1])] =
                        field[wrap(x) * n + wrap(y)];
                }
            }
            let moved = [
                centroid[0] + shift[0] as f64,
                centroid[1] + shift[1] as f64,
            ];
            let v = masked_fraction_of_field(&shifted, &spec, &moved, &[1.0, 1.0], 0.7).unwrap();
            assert_eq!(v.to_bits(), base.to_bits());
        }
    }

    #[test]
    fn degenerate_cone_inputs_are_rejected() {
        let spec = BathSpec::square(2, 8).unwrap();
        let state = state_with_single_mode(8, &[0, 0]);
        assert!(
            directional_mask_population(&state, &spec, &[0.0, 0.0], &[0.0, 0.0], 0.5).is_err()
        );
        assert!(
            directional_mask_population(&state, &spec, &[0.0, 0.0], &[1.0, 0.0], 0.0).is_err()
        );
        let spec3 = BathSpec::bcc(8).unwrap();
        let state3 = ExcitationState {
            c_e: Complex64::ZERO,
            c_k: vec![Complex64::ONE; 512],
            time: 0.0,
        };
        assert!(
            directional_mask_population(&state3, &spec3, &[0.0, 0.0], &[1.0, 0.0], 0.5).is_err()
        );
    }

    #[test]
    fn cosine_similarity_basics() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 2.0]), 0.0);
        let v = [0.3, 1.2, 0.7];
        let w: Vec<f64> = v.iter().map(|x| x * 3.5).collect();
        assert!((cosine_similarity(&v, &w) - 1.0).abs() < 1e-14);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn pgm_export_scales_linearly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.pgm");
        let grid = [0.0f64, 1.0, 1.0, 0.0];
        let meta = FieldMeta {
            shape: vec![2, 2],
            time: 1.5,
            metadata: serde_json::json!({}),
        };
        export_field(FieldValues::Real(&grid), &meta, &path, ExportFormat::Pgm8).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let text_end = bytes.len() - 4;
        let header = std::str::from_utf8(&bytes[..text_end]).unwrap();
        assert!(header.starts_with("P5\n"));
        assert!(header.contains("min=0.0000000000000000e0"));
        assert!(header.contains("2 2"));
        assert_eq!(&bytes[text_end..], &[0u8, 255, 255, 0]);

        // constant field maps to zeros
        let flat = [3.0f64; 4];
        export_field(FieldValues::Real(&flat), &meta, &path, ExportFormat::Pgm8).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0u8, 0, 0, 0]);
    }

    #[test]
    fn binary_export_round_trips_and_writes_a_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.f64");
        let grid: Vec<Complex64> = (0..256)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let meta = FieldMeta {
            shape: vec![16, 16],
            time: 4.0,
            metadata: serde_json::json!({"design": "local"}),
        };
        export_field(
            FieldValues::Complex(&grid),
            &meta,
            &path,
            ExportFormat::BinaryF64,
        )
        .unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 256 * 8);
        for (i, chunk) in bytes.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().unwrap());
            assert_eq!(v.to_bits(), grid[i].norm_sqr().to_bits());
        }
        let side: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(path.with_extension("f64.meta.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(side["shape"], serde_json::json!([16, 16]));
        assert_eq!(side["layout"], "row-major");
        assert_eq!(side["time"], 4.0);
        assert_eq!(side["metadata"]["design"], "local");
    }

    #[test]
    fn csv_series_has_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let rows = vec![
            vec![0.0, 1.0],
            vec![0.1, 1.0 / 3.0],
        ];
        write_csv_series(&path, &["t", "survival"], &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,survival");
        assert!(lines[2].contains("3.3333333333333331e-1"));
        let col: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(col.to_bits(), (1.0f64 / 3.0).to_bits());

        assert!(write_csv_series(&path, &["t"], &[vec![1.0, 2.0]]).is_err());
    }
}
