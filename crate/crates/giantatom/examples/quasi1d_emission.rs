//! Two sites on a diagonal cancel every mode with k_x + k_y = +-pi, so the
//! emitted wave avoids the cone around the (1,1) axis. A point coupling with
//! the same strength radiates into it freely. The final field is written as a
//! grayscale image for each case.

use giantatom::coupling::{named_design, DesignName};
use giantatom::dynamics::{bath_realspace, evolve, EmitterSpec, DEFAULT_DT};
use giantatom::lattice::BathSpec;
use giantatom::observables::{
    directional_mask_population, export_field, ExportFormat, FieldMeta, FieldValues,
};
use std::f64::consts::PI;
use std::path::Path;

fn main() -> giantatom::Result<()> {
    let spec = BathSpec::square(2, 128)?;
    for name in [DesignName::Quasi1d, DesignName::Local] {
        let profile = named_design(name, 0.1, &spec)?.profile().unwrap().clone();
        let centroid = profile.centroid();
        let emitter = EmitterSpec::fixed(0.0, profile);
        let trajectory = evolve(&spec, &emitter, 32.0, DEFAULT_DT, &[32.0])?;
        let state = &trajectory.states[0];

        let cone =
            directional_mask_population(state, &spec, &centroid, &[1.0, 1.0], PI / 8.0)?;
        println!(
            "{:8}: cone fraction along (1,1) = {:.4}",
            name.as_str(),
            cone
        );

        let field = bath_realspace(state, &spec)?;
        let path = format!("{}_field.pgm", name.as_str());
        let meta = FieldMeta {
            shape: vec![128, 128],
            time: state.time,
            metadata: Default::default(),
        };
        export_field(
            FieldValues::Complex(&field),
            &meta,
            Path::new(&path),
            ExportFormat::Pgm8,
        )?;
        println!("          wrote {path}");
    }
    Ok(())
}
