//! The momentum-space integrator against an independent dense real-space
//! propagation of the same Hamiltonian, on a lattice small enough to
//! diagonalize. Agreement is at the integrator's truncation error, far below
//! the physical scales.

use giantatom::coupling::random_profile;
use giantatom::dynamics::{dense_oracle_evolve, evolve, EmitterSpec, DEFAULT_DT};
use giantatom::lattice::BathSpec;

fn main() -> giantatom::Result<()> {
    let spec = BathSpec::square(2, 14)?;
    println!("seed   sites   omega_e    |dC_e|       max_k |dC_k|");
    for seed in 0..6u64 {
        let profile = random_profile(&spec, 1 + seed as usize, 0.2, seed)?;
        let sites = profile.sites.len();
        let omega_e = 0.4 * seed as f64 - 1.0;
        let emitter = EmitterSpec::fixed(omega_e, profile);

        let fast = evolve(&spec, &emitter, 10.0, DEFAULT_DT, &[10.0])?;
        let dense = dense_oracle_evolve(&spec, &emitter, 10.0)?;

        let de = (fast.states[0].c_e - dense.c_e).norm();
        let dk = fast.states[0]
            .c_k
            .iter()
            .zip(&dense.c_k)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        println!("{seed:4}   {sites:5}   {omega_e:7.2}    {de:.3e}    {dk:.3e}");
    }
    Ok(())
}
