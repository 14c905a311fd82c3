//! Emitter coupling footprints in real and momentum space: the named design
//! library, inverse Fourier design, and truncation.

use crate::error::{Error, Result};
use crate::fourier::{centered_dft, PhaseTable};
use crate::lattice::{unflatten, BathSpec, ExactTrig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

/// One coupled bath site, as an offset from the profile center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "SiteDoc", into = "SiteDoc")]
pub struct ProfileSite {
    pub offset: Vec<i64>,
    pub amplitude: Complex64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteDoc {
    offset: Vec<i64>,
    re: f64,
    im: f64,
}

impl From<SiteDoc> for ProfileSite {
    fn from(d: SiteDoc) -> Self {
        ProfileSite {
            offset: d.offset,
            amplitude: Complex64::new(d.re, d.im),
        }
    }
}

impl From<ProfileSite> for SiteDoc {
    fn from(s: ProfileSite) -> Self {
        SiteDoc {
            offset: s.offset,
            re: s.amplitude.re,
            im: s.amplitude.im,
        }
    }
}

/// Finite real-space coupling footprint of a giant emitter.
///
/// `center` is the emitter's reference position; every momentum-space
/// evaluation includes its phase. `normalization` records any 1/N_p-style
/// prefactor already folded into the amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingProfile {
    pub sites: Vec<ProfileSite>,
    #[serde(default)]
    pub center: Vec<i64>,
    #[serde(default = "one")]
    pub normalization: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<String>,
}

fn one() -> f64 {
    1.0
}

impl CouplingProfile {
    pub fn new(sites: Vec<(Vec<i64>, Complex64)>, center: Vec<i64>) -> Result<Self> {
        let profile = CouplingProfile {
            sites: sites
                .into_iter()
                .map(|(offset, amplitude)| ProfileSite { offset, amplitude })
                .collect(),
            center,
            normalization: 1.0,
            design: None,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites.is_empty() {
            return Err(Error::config("profile has no sites"));
        }
        let dim = self.sites[0].offset.len();
        if self.center.len() != dim {
            return Err(Error::config(format!(
                "center has {} components, offsets have {dim}",
                self.center.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        let mut any_nonzero = false;
        for s in &self.sites {
            if s.offset.len() != dim {
                return Err(Error::config("offsets have mixed dimensions"));
            }
            if !seen.insert(s.offset.clone()) {
                return Err(Error::config(format!("duplicate offset {:?}", s.offset)));
            }
            if !s.amplitude.re.is_finite() || !s.amplitude.im.is_finite() {
                return Err(Error::config("non-finite amplitude"));
            }
            any_nonzero |= s.amplitude != Complex64::ZERO;
        }
        if !any_nonzero {
            return Err(Error::config("all amplitudes are zero"));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.sites.first().map_or(0, |s| s.offset.len())
    }

    /// Largest |amplitude| in the footprint.
    pub fn g_max(&self) -> f64 {
        self.sites
            .iter()
            .map(|s| s.amplitude.norm())
            .fold(0.0, f64::max)
    }

    /// Mean coupled position (center plus amplitude-weighted offset), used as
    /// the apex for directional observables.
    pub fn centroid(&self) -> Vec<f64> {
        let dim = self.dimension();
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        for s in &self.sites {
            let w = s.amplitude.norm_sqr();
            den += w;
            for (acc, &o) in num.iter_mut().zip(&s.offset) {
                *acc += w * o as f64;
            }
        }
        num.iter()
            .zip(&self.center)
            .map(|(&v, &c)| c as f64 + v / den)
            .collect()
    }

    pub fn with_center(mut self, center: Vec<i64>) -> Self {
        self.center = center;
        self
    }

    /// Sum of |amplitude|^2 over the footprint.
    pub fn mass(&self) -> f64 {
        self.sites.iter().map(|s| s.amplitude.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CouplingSource {
    SampledFromProfile,
    AnalyticDesign(String),
}

/// G(k) sampled on every grid momentum of a bath, row-major grid order.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumCoupling {
    pub values: Vec<Complex64>,
    pub linear_size: usize,
    pub dimension: usize,
    pub source: CouplingSource,
}

impl MomentumCoupling {
    pub fn g_ref(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// G(k) = sum_alpha g_alpha e^{-i k . (n_alpha + center)} over the grid.
pub fn gk_from_profile(profile: &CouplingProfile, spec: &BathSpec) -> Result<MomentumCoupling> {
    profile.validate()?;
    spec.validate()?;
    let dim = spec.dimension;
    let n = spec.linear_size;
    if profile.dimension() != dim {
        return Err(Error::config(format!(
            "profile dimension {} does not match bath dimension {dim}",
            profile.dimension()
        )));
    }
    let half = (n / 2) as i64;
    for s in &profile.sites {
        if s.offset.iter().any(|&o| o < -half || o >= half) {
            return Err(Error::config(format!(
                "offset {:?} does not fit within linear_size {n} \
                 (components in [-N/2, N/2) required)",
                s.offset
            )));
        }
    }
    let table = PhaseTable::new(n);
    let total = spec.mode_count();
    let mut values = vec![Complex64::ZERO; total];
    let mut m = vec![0i64; dim];
    for (flat, v) in values.iter_mut().enumerate() {
        unflatten(flat, n, dim, &mut m);
        let mut acc = Complex64::ZERO;
        for s in &profile.sites {
            let dot: i64 = m
                .iter()
                .zip(s.offset.iter().zip(&profile.center))
                .map(|(&mi, (&oi, &ci))| mi * (oi + ci))
                .sum();
            acc += s.amplitude * table.minus(dot);
        }
        *v = acc;
    }
    Ok(MomentumCoupling {
        values,
        linear_size: n,
        dimension: dim,
        source: CouplingSource::SampledFromProfile,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignName {
    Local,
    Quasi1d,
    Trap,
    Purify,
    Chiral,
    Vtype,
}

impl std::str::FromStr for DesignName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(DesignName::Local),
            "quasi1d" => Ok(DesignName::Quasi1d),
            "trap" => Ok(DesignName::Trap),
            "purify" => Ok(DesignName::Purify),
            "chiral" => Ok(DesignName::Chiral),
            "vtype" => Ok(DesignName::Vtype),
            other => Err(Error::config(format!("unknown design name \"{other}\""))),
        }
    }
}

impl DesignName {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignName::Local => "local",
            DesignName::Quasi1d => "quasi1d",
            DesignName::Trap => "trap",
            DesignName::Purify => "purify",
            DesignName::Chiral => "chiral",
            DesignName::Vtype => "vtype",
        }
    }
}

/// A named design is either a finite footprint or an analytic momentum
/// profile whose footprint is infinite (obtain it via `inverse_design`).
#[derive(Clone, Debug)]
pub enum Design {
    Profile(CouplingProfile),
    Momentum(MomentumCoupling),
}

impl Design {
    pub fn into_momentum(self, spec: &BathSpec) -> Result<MomentumCoupling> {
        match self {
            Design::Profile(p) => gk_from_profile(&p, spec),
            Design::Momentum(m) => Ok(m),
        }
    }

    pub fn profile(&self) -> Option<&CouplingProfile> {
        match self {
            Design::Profile(p) => Some(p),
            Design::Momentum(_) => None,
        }
    }
}

fn finite_design(name: DesignName, g: f64) -> Vec<(Vec<i64>, Complex64)> {
    let re = |x: f64| Complex64::new(x, 0.0);
    match name {
        DesignName::Local => vec![(vec![0, 0], re(g))],
        DesignName::Quasi1d => vec![(vec![0, 0], re(g / 2.0)), (vec![1, 1], re(g / 2.0))],
        DesignName::Trap => vec![
            (vec![1, 0], re(g / 4.0)),
            (vec![-1, 0], re(g / 4.0)),
            (vec![0, 1], re(g / 4.0)),
            (vec![0, -1], re(g / 4.0)),
        ],
        DesignName::Purify => vec![
            (vec![1, 1], re(g / 4.0)),
            (vec![-1, -1], re(g / 4.0)),
            (vec![1, -1], re(-g / 4.0)),
            (vec![-1, 1], re(-g / 4.0)),
        ],
        DesignName::Chiral | DesignName::Vtype => unreachable!("analytic designs"),
    }
}

/// The design library. All designs are two-dimensional and normalized so that
/// max_k |G(k)| = g.
pub fn named_design(name: DesignName, g: f64, spec: &BathSpec) -> Result<Design> {
    spec.validate()?;
    if spec.dimension != 2 {
        return Err(Error::config(format!(
            "design \"{}\" requires a 2D bath, got dimension {}",
            name.as_str(),
            spec.dimension
        )));
    }
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::config("design amplitude g must be positive"));
    }
    match name {
        DesignName::Local | DesignName::Quasi1d | DesignName::Trap | DesignName::Purify => {
            let mut p = CouplingProfile::new(finite_design(name, g), vec![0, 0])?;
            p.design = Some(name.as_str().to_string());
            if name == DesignName::Quasi1d {
                p.normalization = 0.5;
            }
            if matches!(name, DesignName::Trap | DesignName::Purify) {
                p.normalization = 0.25;
            }
            Ok(Design::Profile(p))
        }
        DesignName::Chiral | DesignName::Vtype => {
            let n = spec.linear_size;
            // half-angle factors live on the doubled circle
            let trig2 = ExactTrig::new(2 * n);
            let total = spec.mode_count();
            let mut values = vec![Complex64::ZERO; total];
            let mut m = vec![0i64; 2];
            for (flat, v) in values.iter_mut().enumerate() {
                unflatten(flat, n, 2, &mut m);
                let (mx, my) = (m[0], m[1]);
                let raw = match name {
                    DesignName::Chiral => {
                        trig2.cos_m(mx - my) * (1.0 + trig2.sin_m(mx + my))
                    }
                    DesignName::Vtype => {
                        (1.0 - trig2.sin_m(mx - my)) * (1.0 - trig2.sin_m(mx + my))
                    }
                    _ => unreachable!(),
                };
                *v = Complex64::new(raw, 0.0);
            }
            let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let scale = g / max;
            for v in &mut values {
                *v *= scale;
            }
            Ok(Design::Momentum(MomentumCoupling {
                values,
                linear_size: n,
                dimension: 2,
                source: CouplingSource::AnalyticDesign(name.as_str().to_string()),
            }))
        }
    }
}

/// Full real-space profile G(n) = (1/N^d) sum_k G(k) e^{+ i k . n}, one site
/// per grid offset, center at the origin.
pub fn inverse_design(gk: &MomentumCoupling, spec: &BathSpec) -> Result<CouplingProfile> {
    spec.validate()?;
    if gk.linear_size != spec.linear_size || gk.dimension != spec.dimension {
        return Err(Error::config(
            "momentum coupling is sampled on a different grid than the bath",
        ));
    }
    let n = spec.linear_size;
    let dim = spec.dimension;
    let total = spec.mode_count();
    let mut amps = centered_dft(&gk.values, n, dim, true);
    let scale = 1.0 / total as f64;
    for a in &mut amps {
        *a *= scale;
    }
    let mut m = vec![0i64; dim];
    let sites = amps
        .iter()
        .enumerate()
        .map(|(flat, &a)| {
            unflatten(flat, n, dim, &mut m);
            ProfileSite {
                offset: m.clone(),
                amplitude: a,
            }
        })
        .collect();
    let design = match &gk.source {
        CouplingSource::AnalyticDesign(name) => Some(name.clone()),
        CouplingSource::SampledFromProfile => None,
    };
    Ok(CouplingProfile {
        sites,
        center: vec![0; dim],
        normalization: 1.0,
        design,
    })
}

/// Keep the n_tr sites of largest |amplitude|. Ties break by ascending L1
/// offset length, then lexicographic offset. Amplitudes are not rescaled.
pub fn truncate(profile: &CouplingProfile, n_tr: usize) -> Result<CouplingProfile> {
    if n_tr == 0 {
        return Err(Error::config("n_tr must be >= 1"));
    }
    let mut sites: Vec<&ProfileSite> = profile
        .sites
        .iter()
        .filter(|s| s.amplitude != Complex64::ZERO)
        .collect();
    sites.sort_by(|a, b| {
        b.amplitude
            .norm_sqr()
            .partial_cmp(&a.amplitude.norm_sqr())
            .unwrap()
            .then_with(|| {
                let la: i64 = a.offset.iter().map(|o| o.abs()).sum();
                let lb: i64 = b.offset.iter().map(|o| o.abs()).sum();
                la.cmp(&lb)
            })
            .then_with(|| a.offset.cmp(&b.offset))
    });
    sites.truncate(n_tr);
    Ok(CouplingProfile {
        sites: sites.into_iter().cloned().collect(),
        center: profile.center.clone(),
        normalization: profile.normalization,
        design: profile.design.clone(),
    })
}

/// Deterministic random footprint for oracle tests: n_sites distinct offsets
/// within |component| <= N/4, complex amplitudes bounded by g.
pub fn random_profile(spec: &BathSpec, n_sites: usize, g: f64, seed: u64) -> Result<CouplingProfile> {
    spec.validate()?;
    if n_sites == 0 {
        return Err(Error::config("n_sites must be >= 1"));
    }
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::config("amplitude bound g must be positive"));
    }
    let reach = (spec.linear_size / 4) as i64;
    let dim = spec.dimension;
    let max_sites = (2 * reach + 1).pow(dim as u32) as usize;
    if n_sites > max_sites {
        return Err(Error::config(format!(
            "n_sites {n_sites} exceeds the {max_sites} distinct offsets available"
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut sites = Vec::with_capacity(n_sites);
    let amp_bound = g / (2.0f64).sqrt();
    while sites.len() < n_sites {
        let offset: Vec<i64> = (0..dim).map(|_| rng.gen_range(-reach..=reach)).collect();
        if !seen.insert(offset.clone()) {
            continue;
        }
        let amplitude = Complex64::new(
            rng.gen_range(-amp_bound..amp_bound),
            rng.gen_range(-amp_bound..amp_bound),
        );
        sites.push((offset, amplitude));
    }
    let mut p = CouplingProfile::new(sites, vec![0; dim])?;
    p.design = Some(format!("random(seed={seed})"));
    Ok(p)
}
