//! The 3D bath with nearest-neighbor hopping on the bcc lattice. Its
//! dispersion is a product of cosines, so a pair of sites offset by (1,1,0)
//! cancels both k_1 + k_2 = +-pi planes exactly, and the band histogram shows
//! the characteristic divergence at the center.

use giantatom::coupling::{gk_from_profile, CouplingProfile};
use giantatom::dynamics::{evolve, EmitterSpec, DEFAULT_DT};
use giantatom::lattice::{unflatten, BathSpec};
use giantatom::observables::spectral_density;
use num_complex::Complex64;

fn main() -> giantatom::Result<()> {
    let n = 16;
    let spec = BathSpec::bcc(n)?;
    println!(
        "bcc bath, N = {n}: {} modes, band half-width {} J",
        spec.mode_count(),
        spec.band_half_width()
    );

    let g2 = Complex64::new(0.05, 0.0);
    let profile = CouplingProfile::new(
        vec![(vec![0, 0, 0], g2), (vec![1, 1, 0], g2)],
        vec![0, 0, 0],
    )?;
    let gk = gk_from_profile(&profile, &spec)?;

    let mut worst = 0.0f64;
    let mut m = [0i64; 3];
    for (flat, v) in gk.values.iter().enumerate() {
        unflatten(flat, n, 3, &mut m);
        if (m[0] + m[1]).rem_euclid(n as i64) == (n / 2) as i64 {
            worst = worst.max(v.norm());
        }
    }
    println!("largest |G| on the k1 + k2 = +-pi planes: {worst:.1e}");

    let sd = spectral_density(&gk, &spec, 40)?;
    println!("\nband histogram (row of # per bin):");
    let peak = sd.values.iter().cloned().fold(0.0, f64::max);
    for i in 0..40 {
        let bar = ((sd.values[i] / peak) * 60.0).round() as usize;
        println!("{:7.2} | {}", sd.bin_edges[i], "#".repeat(bar));
    }

    let emitter = EmitterSpec::fixed(0.0, profile);
    let trajectory = evolve(&spec, &emitter, 10.0, DEFAULT_DT, &[2.0, 6.0, 10.0])?;
    println!("\n   t    |C_e|^2");
    for s in &trajectory.states {
        println!("{:5.0}   {:.6}", s.time, s.c_e.norm_sqr());
    }
    for w in &trajectory.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
