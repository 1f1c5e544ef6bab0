//! Fidelity against time for a ten-spin dipole chain, written as CSV.
//!
//! `cargo run --release --example fidelity_curve > curve.csv`

use dipolink::lattice::{build_hamiltonian, Coupling, Geometry};
use dipolink::spectral::{decompose, fidelity_curve, SiteState};

fn main() -> dipolink::Result<()> {
    let n = 10;
    let h = build_hamiltonian(&Geometry::uniform_chain(n)?, &Coupling::dipole())?;
    let spec = decompose(&h)?;
    let curve = fidelity_curve(&spec, &SiteState::localized(n, 0)?, &SiteState::localized(n, n - 1)?, 4000.0, 5000)?;
    eprintln!("max F on the grid: {:.5}", curve.max());
    print!("{}", curve.to_csv());
    Ok(())
}
