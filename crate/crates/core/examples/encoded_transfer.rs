//! Spread the input and output over several end spins and compare with
//! single-site transfer.
//!
//! `cargo run --release --example encoded_transfer`

use dipolink::lattice::{build_hamiltonian, Coupling, Geometry};
use dipolink::optimize::encoded_transfer;
use dipolink::transfer::PeakSearchConfig;

fn main() -> dipolink::Result<()> {
    let h = build_hamiltonian(&Geometry::uniform_chain(10)?, &Coupling::dipole())?;
    let cfg = PeakSearchConfig::default();
    println!("{:>5} {:>10} {:>10}", "width", "F_max", "t_peak");
    for width in 1..=4 {
        let cmp = encoded_transfer(&h, width, &cfg)?;
        println!("{width:>5} {:>10.5} {:>10.2}", cmp.encoded.f_max, cmp.encoded.t_peak);
    }
    Ok(())
}
