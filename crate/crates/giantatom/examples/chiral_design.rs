//! Momentum-selective emission from synthesized footprints. The one-quadrant
//! design keeps only the k_x + k_y = +pi branch of the resonant contour; the
//! half-plane design keeps k_x < 0. Truncating the synthesized footprint to
//! its strongest sites trades locality against directional purity.

use giantatom::coupling::{inverse_design, named_design, truncate, DesignName};
use giantatom::dynamics::{evolve, EmitterSpec, DEFAULT_DT};
use giantatom::lattice::BathSpec;
use giantatom::observables::quadrant_fractions;

fn main() -> giantatom::Result<()> {
    let spec = BathSpec::square(2, 128)?;
    for name in [DesignName::Chiral, DesignName::Vtype] {
        let gk = named_design(name, 0.1, &spec)?.into_momentum(&spec)?;
        let full = inverse_design(&gk, &spec)?;
        println!("{} design, target fractions by quadrant (F1 F2 F3 F4):", name.as_str());
        for n_tr in [4usize, 8, 16, 32] {
            let profile = truncate(&full, n_tr)?;
            let kept = profile.mass() / full.mass();
            let emitter = EmitterSpec::fixed(0.0, profile);
            let trajectory = evolve(&spec, &emitter, 32.0, DEFAULT_DT, &[32.0])?;
            let f = quadrant_fractions(&trajectory.states[0], &spec)?;
            println!(
                "  n_tr = {n_tr:3}  kept mass {kept:.3}   {:.3} {:.3} {:.3} {:.3}",
                f.f1, f.f2, f.f3, f.f4
            );
        }
    }
    Ok(())
}
