//! Prints the relative error of the boundary-element sphere polarizability
//! against `3(σ-1)/(σ+2) I` over a refinement sequence.

use std::time::Instant;

use bloch_core::bem::{icosphere, AssemblyOptions, TransmissionSolver};

fn main() -> bloch_core::Result<()> {
    let max_level: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    for (name, opts) in [
        ("one-point", AssemblyOptions::one_point()),
        ("near-field", AssemblyOptions::near_field()),
    ] {
        println!("# {name}");
        for s in 1..=max_level {
            let mesh = icosphere::<f64>(s, 1.0)?;
            let t0 = Instant::now();
            let solver = TransmissionSolver::with_options(&mesh, opts)?;
            let assembly = t0.elapsed();
            for sigma in [0.5, 2.0, 10.0] {
                let x = solver.polarizability(sigma)?;
                let exact = 3.0 * (sigma - 1.0) / (sigma + 2.0);
                let id = [[exact, 0.0, 0.0], [0.0, exact, 0.0], [0.0, 0.0, exact]];
                let rel = x.frobenius_distance(&id) / (exact.abs() * 3f64.sqrt());
                let dens = solver.solve(sigma, &[bloch_core::Vec3::unit(2)])?;
                println!(
                    "s={s} N={:5} sigma={sigma:5} rel_err={rel:.3e} asym={:.1e} zero_mean={:.1e} assembly={assembly:?} total={:?}",
                    mesh.panel_count(),
                    x.symmetry_defect(),
                    dens[0].zero_mean_defect(&mesh),
                    t0.elapsed()
                );
            }
        }
    }
    Ok(())
}
