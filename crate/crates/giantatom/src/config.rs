//! Run configuration: a strict JSON document. Unknown keys anywhere in the
//! tree are rejected, since a silently ignored typo in a physics parameter is
//! the most expensive failure mode a run can have.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coupling::{
    gk_from_profile, inverse_design, named_design, random_profile, truncate, CouplingProfile,
    Design, DesignName, MomentumCoupling,
};
use crate::dynamics::{EmitterSpec, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::floquet::{time_average, DriveSchedule};
use crate::lattice::BathSpec;
use crate::observables::ExportFormat;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bath: BathSpec,
    pub emitter: EmitterConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<IntegrationConfig>,
    #[serde(default)]
    pub observables: ObservablesConfig,
    /// Emitter centers for the collective-matrix commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_list: Option<Vec<f64>>,
    /// Drive frequencies for the Floquet sweep command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_sweep: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Only consulted by the "random" emitter design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Exactly one of `design`, `profile`, `schedule` selects the coupling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub omega_e: f64,
    /// A library name ("local", "quasi1d", "trap", "purify", "chiral",
    /// "vtype") or "random" for a seeded test footprint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<String>,
    /// Coupling amplitude for a named design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Keep only the strongest n_tr footprint sites after inverse design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_tr: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<CouplingProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<DriveSchedule>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_final: f64,
    /// Defaults to a single snapshot at t_final.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<f64>>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    #[serde(default = "default_true")]
    pub survival: bool,
    #[serde(default)]
    pub quadrants: bool,
    /// [t0, t1] for the exponential decay fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    #[serde(default)]
    pub field_exports: Vec<FieldFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeConfig>,
    #[serde(default = "default_bins")]
    pub spectral_bins: usize,
}

fn default_true() -> bool {
    true
}

fn default_bins() -> usize {
    200
}

impl Default for ObservablesConfig {
    fn default() -> Self {
        ObservablesConfig {
            survival: true,
            quadrants: false,
            fit_window: None,
            field_exports: Vec::new(),
            cone: None,
            spectral_bins: default_bins(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    BinaryF64,
    Pgm8,
}

impl FieldFormat {
    pub fn as_export(self) -> ExportFormat {
        match self {
            FieldFormat::BinaryF64 => ExportFormat::BinaryF64,
            FieldFormat::Pgm8 => ExportFormat::Pgm8,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            FieldFormat::BinaryF64 => "f64",
            FieldFormat::Pgm8 => "pgm",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    pub direction: Vec<f64>,
    pub half_angle: f64,
    /// Defaults to the coupling footprint centroid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid: Option<Vec<f64>>,
}

/// The emitter ready for use: the dynamical spec, the sampled momentum
/// coupling, the (possibly synthesized) footprint, and a display label.
pub struct ResolvedEmitter {
    pub spec: EmitterSpec,
    pub gk: MomentumCoupling,
    pub profile: CouplingProfile,
    pub label: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(&path.display().to_string(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("config schema: {e}")))
    }

    /// Command-line flags override the corresponding document fields.
    pub fn apply_overrides(&mut self, out: Option<&Path>, dt: Option<f64>) {
        if let Some(dir) = out {
            self.output_dir = Some(dir.to_path_buf());
        }
        if let (Some(dt), Some(integration)) = (dt, self.integration.as_mut()) {
            integration.dt = dt;
        }
    }

    /// Fills every remaining optional that has a derivable value so the
    /// manifest records the exact parameters the run used.
    pub fn resolve_defaults(&mut self) {
        if let Some(integration) = self.integration.as_mut() {
            if integration.snapshots.is_none() {
                integration.snapshots = Some(vec![integration.t_final]);
            }
        }
    }

    pub fn integration(&self) -> Result<&IntegrationConfig> {
        self.integration
            .as_ref()
            .ok_or_else(|| Error::config("this command needs an \"integration\" section"))
    }

    pub fn output_dir(&self) -> Result<&Path> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| Error::config("no output directory: set output_dir or pass --out"))
    }

    fn emitter_selector(&self) -> Result<()> {
        let picks = self.emitter.design.is_some() as u8
            + self.emitter.profile.is_some() as u8
            + self.emitter.schedule.is_some() as u8;
        if picks != 1 {
            return Err(Error::config(
                "exactly one of emitter.design, emitter.profile, emitter.schedule is required",
            ));
        }
        if self.emitter.design.is_none() {
            if self.emitter.g.is_some() {
                return Err(Error::config("emitter.g only applies to a named design"));
            }
            if self.emitter.n_tr.is_some() && self.emitter.schedule.is_some() {
                return Err(Error::config("emitter.n_tr does not apply to a schedule"));
            }
        }
        Ok(())
    }

    fn named_profile(&self, name: &str) -> Result<(CouplingProfile, String)> {
        let g = self
            .emitter
            .g
            .ok_or_else(|| Error::config("emitter.g is required with a named design"))?;
        if name == "random" {
            let sites = self.emitter.n_tr.unwrap_or(4);
            let seed = self.seed.unwrap_or(0);
            let profile = random_profile(&self.bath, sites, g, seed)?;
            return Ok((profile, format!("random:{seed}")));
        }
        let design_name: DesignName = name.parse()?;
        let design = named_design(design_name, g, &self.bath)?;
        let profile = match design {
            Design::Profile(p) => p,
            Design::Momentum(mk) => inverse_design(&mk, &self.bath)?,
        };
        let profile = match self.emitter.n_tr {
            Some(n_tr) => truncate(&profile, n_tr)?,
            None => profile,
        };
        Ok((profile, design_name.as_str().to_string()))
    }

    /// Emitter for time evolution. Named designs without a finite footprint
    /// are inverse-designed (and truncated when n_tr is set).
    pub fn resolve_emitter(&self) -> Result<ResolvedEmitter> {
        self.bath.validate()?;
        self.emitter_selector()?;
        if let Some(schedule) = &self.emitter.schedule {
            let profile = time_average(schedule)?;
            let gk = gk_from_profile(&profile, &self.bath)?;
            return Ok(ResolvedEmitter {
                spec: EmitterSpec::moving(self.emitter.omega_e, schedule.clone()),
                gk,
                profile,
                label: "schedule".to_string(),
            });
        }
        let (profile, label) = if let Some(profile) = &self.emitter.profile {
            profile.validate()?;
            let profile = match self.emitter.n_tr {
                Some(n_tr) => truncate(profile, n_tr)?,
                None => profile.clone(),
            };
            (profile, "profile".to_string())
        } else {
            let name = self.emitter.design.as_deref().expect("selector checked");
            self.named_profile(name)?
        };
        let gk = gk_from_profile(&profile, &self.bath)?;
        Ok(ResolvedEmitter {
            spec: EmitterSpec::fixed(self.emitter.omega_e, profile.clone()),
            gk,
            profile,
            label,
        })
    }

    /// Momentum-space coupling only, for the histogram and collective-matrix
    /// commands. Analytic designs skip the footprint synthesis here.
    pub fn resolve_momentum(&self) -> Result<(MomentumCoupling, String)> {
        self.bath.validate()?;
        self.emitter_selector()?;
        if let Some(schedule) = &self.emitter.schedule {
            let profile = time_average(schedule)?;
            return Ok((gk_from_profile(&profile, &self.bath)?, "schedule".to_string()));
        }
        if let Some(profile) = &self.emitter.profile {
            profile.validate()?;
            let profile = match self.emitter.n_tr {
                Some(n_tr) => truncate(profile, n_tr)?,
                None => profile.clone(),
            };
            return Ok((gk_from_profile(&profile, &self.bath)?, "profile".to_string()));
        }
        let name = self.emitter.design.as_deref().expect("selector checked");
        if name != "random" && self.emitter.n_tr.is_none() {
            let g = self
                .emitter
                .g
                .ok_or_else(|| Error::config("emitter.g is required with a named design"))?;
            let design_name: DesignName = name.parse()?;
            let gk = named_design(design_name, g, &self.bath)?.into_momentum(&self.bath)?;
            return Ok((gk, design_name.as_str().to_string()));
        }
        let (profile, label) = self.named_profile(name)?;
        Ok((gk_from_profile(&profile, &self.bath)?, label))
    }
}
