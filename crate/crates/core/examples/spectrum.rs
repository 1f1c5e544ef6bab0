//! On-site energies of a 15-spin chain and the two lowest levels against
//! chain length, showing the end-localized doublet splitting off the band.
//!
//! `cargo run --release --example spectrum`

use dipolink::lattice::{build_hamiltonian, Coupling, Geometry};
use dipolink::spectral::decompose;

fn main() -> dipolink::Result<()> {
    let c = Coupling::dipole();
    let h = build_hamiltonian(&Geometry::uniform_chain(15)?, &c)?;
    println!("on-site energies, N = 15");
    for (i, e) in h.onsite_energies().iter().enumerate() {
        println!("  site {:>2}: {e:.6}", i + 1);
    }
    println!("\n{:>3} {:>14} {:>14} {:>14}", "N", "E1 - E0", "E2 - E1", "ratio");
    for n in 4..=23 {
        let h = build_hamiltonian(&Geometry::uniform_chain(n)?, &c)?;
        let e = decompose(&h)?.eigenvalues().to_vec();
        let (split, band) = (e[1] - e[0], e[2] - e[1]);
        println!("{n:>3} {split:>14.6e} {band:>14.6e} {:>14.1}", band / split);
    }
    Ok(())
}
