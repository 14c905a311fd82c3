//! Command orchestration: resolve a config, run the physics, lay out the
//! output directory (manifest.json, fields/, series/, matrices/), and keep
//! every artifact byte-reproducible.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use crate::collective::{collective_couplings, eta_extrapolation, export_matrices_csv};
use crate::config::{FieldFormat, RunConfig};
use crate::coupling::{
    inverse_design, named_design, truncate, CouplingSource, DesignName, MomentumCoupling,
};
use crate::dynamics::{bath_realspace, evolve};
use crate::error::{Error, Result};
use crate::floquet::{correction_bound, step_schedule, time_average, DriveSchedule};
use crate::lattice::BathSpec;
use crate::observables::{
    directional_mask_population, export_field, quadrant_fractions, spectral_density,
    survival_and_rate, write_csv_series, FieldMeta, FieldValues,
};

#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub threads: Option<usize>,
}

/// Runs `f` on a dedicated pool when a thread count was requested. All
/// reductions are deterministic, so the count never changes any output byte.
fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Integration(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn prepare_output(out_dir: &Path) -> Result<()> {
    for sub in ["", "fields", "series", "matrices"] {
        let p = out_dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p.display().to_string(), e))?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json serialization cannot fail");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(&path.display().to_string(), e))
}

fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: serde_json::Value,
    extras: &[(&str, serde_json::Value)],
) -> Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert("command".into(), json!(command));
    doc.insert("config".into(), config);
    for (k, v) in extras {
        doc.insert((*k).to_string(), v.clone());
    }
    write_json(&out_dir.join("manifest.json"), &serde_json::Value::Object(doc))
}

fn config_value(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serialization cannot fail")
}

pub fn run_simulate(mut cfg: RunConfig, ov: &CliOverrides) -> Result<()> {
    cfg.apply_overrides(ov.out.as_deref(), ov.dt);
    cfg.resolve_defaults();
    let out_dir = cfg.output_dir()?.to_path_buf();
    let integration = cfg.integration()?.clone();
    let resolved = cfg.resolve_emitter()?;
    let spec = cfg.bath.clone();
    let obs = cfg.observables.clone();

    let two_d = spec.dimension == 2;
    if obs.field_exports.contains(&FieldFormat::Pgm8) && !two_d {
        return Err(Error::config("pgm8 export needs a 2D bath"));
    }
    if (obs.quadrants || obs.cone.is_some()) && !two_d {
        return Err(Error::config("quadrants and cone metrics need a 2D bath"));
    }

    prepare_output(&out_dir)?;
    let snapshots = integration.snapshots.clone().unwrap_or_default();
    let trajectory = with_pool(ov.threads, || {
        evolve(
            &spec,
            &resolved.spec,
            integration.t_final,
            integration.dt,
            &snapshots,
        )
    })?;
    let mut warnings = trajectory.warnings.clone();

    let shape: Vec<usize> = vec![spec.linear_size; spec.dimension];
    for (i, state) in trajectory.states.iter().enumerate() {
        if obs.field_exports.is_empty() {
            break;
        }
        let field = bath_realspace(state, &spec)?;
        let meta = FieldMeta {
            shape: shape.clone(),
            time: state.time,
            metadata: json!({
                "design": resolved.label,
                "omega_e": cfg.emitter.omega_e,
            }),
        };
        for fmt in &obs.field_exports {
            let path = out_dir
                .join("fields")
                .join(format!("field_{i:03}.{}", fmt.extension()));
            export_field(FieldValues::Complex(&field), &meta, &path, fmt.as_export())?;
        }
    }

    if obs.survival {
        let rows: Vec<Vec<f64>> = trajectory
            .states
            .iter()
            .map(|s| vec![s.time, s.c_e.norm_sqr()])
            .collect();
        write_csv_series(&out_dir.join("series/survival.csv"), &["t", "survival"], &rows)?;
    }

    // directional metrics are undefined before anything reaches the bath
    let empty_bath = |state: &crate::dynamics::ExcitationState| state.bath_population() <= 1e-15;

    if obs.quadrants {
        let mut rows = Vec::new();
        for state in &trajectory.states {
            if empty_bath(state) {
                warnings.push(format!("quadrants skipped at t={}: bath empty", state.time));
                continue;
            }
            let q = quadrant_fractions(state, &spec)?;
            rows.push(vec![q.t, q.f1, q.f2, q.f3, q.f4]);
        }
        write_csv_series(
            &out_dir.join("series/quadrants.csv"),
            &["t", "f1", "f2", "f3", "f4"],
            &rows,
        )?;
    }

    if let Some(cone) = &obs.cone {
        let centroid = cone
            .centroid
            .clone()
            .unwrap_or_else(|| resolved.profile.centroid());
        let mut rows = Vec::new();
        for state in &trajectory.states {
            if empty_bath(state) {
                warnings.push(format!("cone skipped at t={}: bath empty", state.time));
                continue;
            }
            let frac = directional_mask_population(
                state,
                &spec,
                &centroid,
                &cone.direction,
                cone.half_angle,
            )?;
            rows.push(vec![state.time, frac]);
        }
        write_csv_series(&out_dir.join("series/cone.csv"), &["t", "fraction"], &rows)?;
    }

    let mut extras: Vec<(&str, serde_json::Value)> = Vec::new();
    if let Some(window) = obs.fit_window {
        let fit = survival_and_rate(
            &trajectory.states,
            window,
            &spec,
            &resolved.gk,
            cfg.emitter.omega_e,
        )?;
        write_csv_series(
            &out_dir.join("series/rates.csv"),
            &["fitted_rate", "golden_rate"],
            &[vec![fit.fitted_rate, fit.golden_rate]],
        )?;
        warnings.extend(fit.warnings);
    }
    extras.push(("warnings", json!(warnings)));
    extras.push(("final_norm_drift", json!(trajectory.final_norm_drift)));
    write_manifest(&out_dir, "simulate", config_value(&cfg), &extras)
}

/// The per-frequency schedule the sweep compares against its time average.
fn sweep_schedule(cfg: &RunConfig, omega: f64) -> Result<DriveSchedule> {
    if let Some(template) = &cfg.emitter.schedule {
        let mut s = template.clone();
        s.omega_drive = omega;
        s.validate()?;
        return Ok(s);
    }
    let g = cfg
        .emitter
        .g
        .ok_or_else(|| Error::config("emitter.g is required with a named design"))?;
    match cfg.emitter.design.as_deref() {
        Some("quasi1d") => crate::floquet::smooth_two_site_schedule(g, omega),
        Some("local") => step_schedule(
            vec![vec![0; cfg.bath.dimension]],
            vec![Complex64::new(g, 0.0)],
            omega,
        ),
        _ => Err(Error::config(
            "the sweep needs emitter.schedule, or design \"quasi1d\"/\"local\" with g",
        )),
    }
}

pub fn run_floquet_check(mut cfg: RunConfig, ov: &CliOverrides) -> Result<()> {
    cfg.apply_overrides(ov.out.as_deref(), ov.dt);
    cfg.resolve_defaults();
    let out_dir = cfg.output_dir()?.to_path_buf();
    let integration = cfg.integration()?.clone();
    let sweep = cfg
        .omega_sweep
        .clone()
        .ok_or_else(|| Error::config("the sweep needs an \"omega_sweep\" list"))?;
    if sweep.len() < 2 {
        return Err(Error::config("omega_sweep needs at least 2 frequencies"));
    }
    if sweep.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::config("omega_sweep frequencies must be positive"));
    }

    prepare_output(&out_dir)?;
    // a dense default grid so the max-over-time deviation is meaningful
    let snapshots: Vec<f64> = match &integration.snapshots {
        Some(s) if !s.is_empty() => s.clone(),
        _ => (1..=64)
            .map(|i| integration.t_final * i as f64 / 64.0)
            .collect(),
    };

    let mut rows = Vec::new();
    for &omega in &sweep {
        let schedule = sweep_schedule(&cfg, omega)?;
        let g_max = schedule
            .segments
            .iter()
            .map(|s| s.peak().norm())
            .fold(0.0, f64::max);
        let n_p = schedule.segments.len();
        let average = time_average(&schedule)?;
        let moving_spec =
            crate::dynamics::EmitterSpec::moving(cfg.emitter.omega_e, schedule);
        let static_spec = crate::dynamics::EmitterSpec::fixed(cfg.emitter.omega_e, average);
        let (moving, effective) = with_pool(ov.threads, || {
            let m = evolve(
                &cfg.bath,
                &moving_spec,
                integration.t_final,
                integration.dt,
                &snapshots,
            )?;
            let e = evolve(
                &cfg.bath,
                &static_spec,
                integration.t_final,
                integration.dt,
                &snapshots,
            )?;
            Ok((m, e))
        })?;
        let deviation = moving
            .states
            .iter()
            .zip(&effective.states)
            .map(|(a, b)| (a.c_e - b.c_e).norm())
            .fold(0.0, f64::max);
        rows.push(vec![omega, deviation, correction_bound(g_max, n_p, omega)]);
    }
    write_csv_series(
        &out_dir.join("series/floquet_sweep.csv"),
        &["omega", "deviation", "bound"],
        &rows,
    )?;
    write_manifest(&out_dir, "floquet-check", config_value(&cfg), &[])
}

pub fn run_interactions(mut cfg: RunConfig, ov: &CliOverrides) -> Result<()> {
    cfg.apply_overrides(ov.out.as_deref(), ov.dt);
    cfg.resolve_defaults();
    let out_dir = cfg.output_dir()?.to_path_buf();
    let positions = cfg
        .positions
        .clone()
        .ok_or_else(|| Error::config("interactions needs a \"positions\" list"))?;
    let eta = cfg
        .eta
        .ok_or_else(|| Error::config("interactions needs \"eta\""))?;
    let (gk, label) = cfg.resolve_momentum()?;

    prepare_output(&out_dir)?;
    let omega_e = cfg.emitter.omega_e;
    let matrices = with_pool(ov.threads, || {
        collective_couplings(&cfg.bath, &gk, &positions, omega_e, eta)
    })?;
    export_matrices_csv(&matrices, &label, &out_dir.join("matrices/collective.csv"))?;

    let (lo, hi) = matrices.dissipative_eigenvalue_range();
    let diag: Vec<f64> = (0..matrices.size())
        .map(|i| matrices.dissipative_at(i, i).re)
        .collect();
    let mut extras: Vec<(&str, serde_json::Value)> = vec![
        ("dissipative_diagonal", json!(diag)),
        ("dissipative_eigenvalue_range", json!([lo, hi])),
        ("hermiticity_residue", json!(matrices.hermiticity_residue)),
    ];

    if let Some(eta_list) = cfg.eta_list.clone() {
        let ex = with_pool(ov.threads, || {
            eta_extrapolation(&cfg.bath, &gk, &positions, omega_e, &eta_list)
        })?;
        export_matrices_csv(
            &ex.matrices,
            &label,
            &out_dir.join("matrices/extrapolated.csv"),
        )?;
        let rows: Vec<Vec<f64>> = ex
            .convergence
            .iter()
            .enumerate()
            .map(|(i, c)| vec![eta_list[i + 1], *c])
            .collect();
        write_csv_series(
            &out_dir.join("matrices/extrapolation_diagnostics.csv"),
            &["added_width", "max_correction"],
            &rows,
        )?;
        let spread = ex
            .dissipative_spread
            .iter()
            .chain(&ex.coherent_spread)
            .fold(0.0f64, |a, &b| a.max(b));
        extras.push(("extrapolation_max_spread", json!(spread)));
    }
    write_manifest(&out_dir, "interactions", config_value(&cfg), &extras)
}

pub fn run_spectral_density(mut cfg: RunConfig, ov: &CliOverrides) -> Result<()> {
    cfg.apply_overrides(ov.out.as_deref(), ov.dt);
    cfg.resolve_defaults();
    let out_dir = cfg.output_dir()?.to_path_buf();
    let (gk, _label) = cfg.resolve_momentum()?;
    let bins = cfg.observables.spectral_bins;

    prepare_output(&out_dir)?;
    let sd = with_pool(ov.threads, || spectral_density(&gk, &cfg.bath, bins))?;
    let rows: Vec<Vec<f64>> = (0..sd.values.len())
        .map(|i| vec![sd.bin_edges[i], sd.bin_edges[i + 1], sd.values[i]])
        .collect();
    write_csv_series(
        &out_dir.join("series/spectral_density.csv"),
        &["bin_lo", "bin_hi", "value"],
        &rows,
    )?;
    write_manifest(
        &out_dir,
        "spectral-density",
        config_value(&cfg),
        &[("total_weight", json!(sd.total_weight))],
    )
}

/// Reads a sampled G(k) from a CSV of `re,im` rows in row-major grid order.
fn momentum_from_file(path: &Path, spec: &BathSpec) -> Result<MomentumCoupling> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(&path.display().to_string(), e))?;
    let mut values = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |field: Option<&str>| -> Result<f64> {
            field
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::config(format!("line {} is not \"re,im\"", ln + 1))
                })
        };
        let re = parse(parts.next())?;
        let im = parse(parts.next())?;
        values.push(Complex64::new(re, im));
    }
    if values.len() != spec.mode_count() {
        return Err(Error::config(format!(
            "G(k) file has {} samples, the {}^{} grid needs {}",
            values.len(),
            spec.linear_size,
            spec.dimension,
            spec.mode_count()
        )));
    }
    Ok(MomentumCoupling {
        values,
        linear_size: spec.linear_size,
        dimension: spec.dimension,
        source: CouplingSource::AnalyticDesign(format!("file:{}", path.display())),
    })
}

pub fn run_design(
    target: &str,
    n_tr: usize,
    grid_size: usize,
    g: f64,
    ov: &CliOverrides,
) -> Result<()> {
    let out_dir = ov
        .out
        .clone()
        .ok_or_else(|| Error::config("design needs --out DIR"))?;
    let spec = BathSpec::square(2, grid_size)?;
    let gk = if Path::new(target).exists() {
        momentum_from_file(Path::new(target), &spec)?
    } else {
        let name: DesignName = target.parse()?;
        named_design(name, g, &spec)?.into_momentum(&spec)?
    };

    prepare_output(&out_dir)?;
    let (full, truncated) = with_pool(ov.threads, || {
        let full = inverse_design(&gk, &spec)?;
        let truncated = truncate(&full, n_tr)?;
        Ok((full, truncated))
    })?;
    let kept_mass_fraction = truncated.mass() / full.mass();
    let support_size = truncated.sites.len();

    write_json(
        &out_dir.join("profile.json"),
        &serde_json::to_value(&truncated).expect("profile serialization cannot fail"),
    )?;
    write_json(
        &out_dir.join("summary.json"),
        &json!({
            "target": target,
            "grid_size": grid_size,
            "n_tr": n_tr,
            "g": g,
            "support_size": support_size,
            "kept_mass_fraction": kept_mass_fraction,
        }),
    )?;
    write_manifest(
        &out_dir,
        "design",
        json!({"target": target, "n_tr": n_tr, "grid_size": grid_size, "g": g}),
        &[],
    )
}

#[derive(Parser)]
#[command(name = "giantatom", version, about = "Giant-emitter lattice bath toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration document (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output_dir in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (outputs are identical for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Integrator step override.
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the emitter-bath state and export the requested observables.
    Simulate,
    /// Inverse-design a truncated coupling footprint from a target.
    Design {
        /// Library design name or path to a sampled G(k) CSV.
        #[arg(long)]
        target: String,
        /// Number of footprint sites to keep.
        #[arg(long)]
        n_tr: usize,
        /// Linear lattice size N of the 2D grid.
        #[arg(long)]
        n: usize,
        /// Coupling amplitude for named targets.
        #[arg(long, default_value_t = 0.1)]
        g: f64,
    },
    /// Sweep drive frequencies and tabulate moving-vs-effective deviations.
    FloquetCheck,
    /// Collective coherent and dissipative matrices for several emitters.
    Interactions,
    /// Energy-resolved coupling weight histogram.
    SpectralDensity,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("this command needs --config FILE"))?;
    RunConfig::load(path)
}

/// Entry point behind the binary: parses arguments, dispatches, and converts
/// errors into a JSON record on stderr plus the documented exit code.
pub fn cli_main() -> i32 {
    let cli = Cli::parse();
    let ov = CliOverrides {
        out: cli.out.clone(),
        dt: cli.dt,
        threads: cli.threads,
    };
    let outcome = match &cli.command {
        Command::Simulate => load_config(&cli).and_then(|cfg| run_simulate(cfg, &ov)),
        Command::Design { target, n_tr, n, g } => run_design(target, *n_tr, *n, *g, &ov),
        Command::FloquetCheck => load_config(&cli).and_then(|cfg| run_floquet_check(cfg, &ov)),
        Command::Interactions => load_config(&cli).and_then(|cfg| run_interactions(cfg, &ov)),
        Command::SpectralDensity => {
            load_config(&cli).and_then(|cfg| run_spectral_density(cfg, &ov))
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let record = json!({"error": {"code": e.exit_code(), "message": e.to_string()}});
            eprintln!("{record}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(n: usize, extra: &str) -> RunConfig {
        let text = format!(
            r#"{{
  "bath": {{"dimension": 2, "linear_size": {n}, "model": "square_tb"}},
  "emitter": {{"omega_e": 0.0, "design": "local", "g": 0.1}}{extra}
}}"#
        );
        serde_json::from_str(&text).unwrap()
    }

    #[test]
    fn simulate_writes_the_full_layout() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let mut cfg = base_config(
            16,
            r#",
  "integration": {"t_final": 2.0, "snapshots": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0]},
  "observables": {"quadrants": true,
                  "fit_window": [0.0, 2.0],
                  "field_exports": ["binary_f64", "pgm8"],
                  "cone": {"direction": [1.0, 0.0], "half_angle": 0.7}}"#,
        );
        cfg.output_dir = Some(out.clone());
        run_simulate(cfg, &CliOverrides::default()).unwrap();

        for f in [
            "manifest.json",
            "fields/field_000.f64",
            "fields/field_000.f64.meta.json",
            "fields/field_010.pgm",
            "series/survival.csv",
            "series/quadrants.csv",
            "series/cone.csv",
            "series/rates.csv",
        ] {
            assert!(out.join(f).exists(), "missing {f}");
        }
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["command"], "simulate");
        assert_eq!(manifest["config"]["integration"]["dt"], 0.01);
        assert!(manifest["version"].as_str().is_some());
        assert!(manifest["final_norm_drift"].as_f64().unwrap() < 1e-9);

        let survival = std::fs::read_to_string(out.join("series/survival.csv")).unwrap();
        assert_eq!(survival.lines().count(), 12);
    }

    #[test]
    fn simulate_reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mk = |name: &str| {
            let out = dir.path().join(name);
            let mut cfg = base_config(
                16,
                r#",
  "integration": {"t_final": 1.0, "snapshots": [0.5, 1.0]},
  "observables": {"field_exports": ["binary_f64"]}"#,
            );
            cfg.output_dir = Some(out.clone());
            run_simulate(cfg, &CliOverrides::default()).unwrap();
            out
        };
        let a = mk("a");
        let b = mk("b");
        // manifests differ in output_dir by construction; the data artifacts
        // must not differ at all
        for f in ["fields/field_001.f64", "series/survival.csv"] {
            let left = std::fs::read(a.join(f)).unwrap();
            let right = std::fs::read(b.join(f)).unwrap();
            assert_eq!(left, right, "{f} differs between reruns");
        }
    }

    #[test]
    fn floquet_sweep_tabulates_deviation_and_bound() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep");
        let mut cfg = base_config(
            8,
            r#",
  "integration": {"t_final": 2.0},
  "omega_sweep": [4.0, 8.0]"#,
        );
        cfg.emitter.design = Some("quasi1d".to_string());
        cfg.output_dir = Some(out.clone());
        run_floquet_check(cfg, &CliOverrides::default()).unwrap();

        let text = std::fs::read_to_string(out.join("series/floquet_sweep.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "omega,deviation,bound");
        assert_eq!(lines.len(), 3);
        for (line, omega) in lines[1..].iter().zip([4.0f64, 8.0]) {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cols[0], omega);
            assert!(cols[1] > 0.0);
            assert!((cols[2] - correction_bound(0.1, 2, omega)).abs() < 1e-15 * cols[2]);
        }
    }

    #[test]
    fn single_segment_sweep_has_no_deviation() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("flat");
        let mut cfg = base_config(
            8,
            r#",
  "integration": {"t_final": 2.0},
  "omega_sweep": [2.0, 4.0]"#,
        );
        cfg.output_dir = Some(out.clone());
        run_floquet_check(cfg, &CliOverrides::default()).unwrap();
        let text = std::fs::read_to_string(out.join("series/floquet_sweep.csv")).unwrap();
        for line in text.lines().skip(1) {
            let deviation: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(deviation < 1e-9, "constant drive deviated by {deviation:e}");
        }
    }

    #[test]
    fn interactions_swapped_positions_permute_the_matrices() {
        let dir = tempfile::tempdir().unwrap();
        let gamma = |name: &str, positions: &str| -> Vec<f64> {
            let out = dir.path().join(name);
            let mut cfg = base_config(
                16,
                &format!(
                    ",\n  \"positions\": {positions},\n  \"eta\": 1.0,\n  \"eta_list\": [1.6, 1.3, 1.0]"
                ),
            );
            cfg.emitter.design = Some("quasi1d".to_string());
            cfg.output_dir = Some(out.clone());
            run_interactions(cfg, &CliOverrides::default()).unwrap();
            for f in [
                "matrices/collective.csv",
                "matrices/extrapolated.csv",
                "matrices/extrapolation_diagnostics.csv",
            ] {
                assert!(out.join(f).exists(), "missing {f}");
            }
            std::fs::read_to_string(out.join("matrices/collective.csv"))
                .unwrap()
                .lines()
                .skip(3)
                .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
                .collect()
        };
        let ab = gamma("ab", "[[0, 0], [3, 1]]");
        let ba = gamma("ba", "[[3, 1], [0, 0]]");
        // entry (0,1) trades places with (1,0), the diagonal stays
        assert_eq!(ab[0].to_bits(), ba[3].to_bits());
        assert_eq!(ab[3].to_bits(), ba[0].to_bits());
        assert_eq!(ab[1].to_bits(), ba[2].to_bits());
        assert!(ab[0] > 0.0);
    }

    #[test]
    fn spectral_rows_match_the_requested_bins() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sd");
        let mut cfg = base_config(16, ",\n  \"observables\": {\"spectral_bins\": 40}");
        cfg.output_dir = Some(out.clone());
        run_spectral_density(cfg, &CliOverrides::default()).unwrap();
        let text = std::fs::read_to_string(out.join("series/spectral_density.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin_lo,bin_hi,value");
        assert_eq!(lines.len(), 41);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
                .unwrap();
        assert!((manifest["total_weight"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn design_reports_support_and_mass() {
        let dir = tempfile::tempdir().unwrap();
        let ov = |name: &str| CliOverrides {
            out: Some(dir.path().join(name)),
            ..Default::default()
        };
        run_design("chiral", 16, 64, 0.1, &ov("d16")).unwrap();
        let profile: crate::coupling::CouplingProfile = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("d16/profile.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(profile.sites.len(), 16);

        let kept = |name: &str| -> f64 {
            let summary: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(dir.path().join(name).join("summary.json")).unwrap(),
            )
            .unwrap();
            summary["kept_mass_fraction"].as_f64().unwrap()
        };
        run_design("chiral", 4, 64, 0.1, &ov("d4")).unwrap();
        run_design("chiral", 8, 64, 0.1, &ov("d8")).unwrap();
        let (k4, k8, k16) = (kept("d4"), kept("d8"), kept("d16"));
        assert!(k4 <= k8 && k8 <= k16, "kept mass {k4} {k8} {k16}");
        assert!(k16 > 0.0 && k16 <= 1.0 + 1e-12);
    }

    #[test]
    fn design_rejects_a_wrong_length_momentum_file() {
        let dir = tempfile::tempdir().unwrap();
        let gk_file = dir.path().join("gk.csv");
        let mut text = String::from("# G(k) samples\n");
        for i in 0..10 {
            text.push_str(&format!("{}.0,0.0\n", i));
        }
        std::fs::write(&gk_file, text).unwrap();
        let ov = CliOverrides {
            out: Some(dir.path().join("out")),
            ..Default::default()
        };
        let err = run_design(gk_file.to_str().unwrap(), 4, 16, 0.1, &ov).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("256"), "{err}");
    }

    #[test]
    fn momentum_file_round_trips_through_design() {
        let dir = tempfile::tempdir().unwrap();
        let spec = BathSpec::square(2, 16).unwrap();
        let gk = named_design(DesignName::Purify, 0.1, &spec)
            .unwrap()
            .into_momentum(&spec)
            .unwrap();
        let gk_file = dir.path().join("gk.csv");
        let mut text = String::new();
        for v in &gk.values {
            text.push_str(&format!("{:.16e},{:.16e}\n", v.re, v.im));
        }
        std::fs::write(&gk_file, text).unwrap();
        let ov = CliOverrides {
            out: Some(dir.path().join("out")),
            ..Default::default()
        };
        run_design(gk_file.to_str().unwrap(), 4, 16, 0.1, &ov).unwrap();
        let profile: crate::coupling::CouplingProfile = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("out/profile.json")).unwrap(),
        )
        .unwrap();
        // the sign-structured target reduces to its four corner sites
        assert_eq!(profile.sites.len(), 4);
        for site in &profile.sites {
            assert!((site.amplitude.norm() - 0.025).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_sections_fail_with_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let ov = CliOverrides {
            out: Some(dir.path().join("x")),
            ..Default::default()
        };
        let cfg = base_config(16, "");
        let err = run_simulate(cfg, &ov).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("integration"), "{err}");

        let cfg = base_config(16, ",\n  \"integration\": {\"t_final\": 1.0}");
        let err = run_floquet_check(cfg, &ov).unwrap_err();
        assert!(err.to_string().contains("omega_sweep"), "{err}");

        let cfg = base_config(16, "");
        let err = run_interactions(cfg, &ov).unwrap_err();
        assert!(err.to_string().contains("positions"), "{err}");

        let cfg = base_config(16, ",\n  \"positions\": [[0, 0]]");
        let err = run_interactions(cfg, &ov).unwrap_err();
        assert!(err.to_string().contains("eta"), "{err}");

        let cfg = base_config(16, ",\n  \"integration\": {\"t_final\": 1.0}");
        let err = run_simulate(cfg, &CliOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("output"), "{err}");
    }
}
