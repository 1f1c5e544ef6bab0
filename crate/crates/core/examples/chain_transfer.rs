//! End-to-end transfer along uniform dipole and nearest-neighbour chains.
//!
//! `cargo run --release --example chain_transfer`

use dipolink::lattice::Coupling;
use dipolink::transfer::{chain_sweep, PeakSearchConfig};

fn main() -> dipolink::Result<()> {
    let cfg = PeakSearchConfig::default();
    let dipole = chain_sweep(2, 23, &Coupling::dipole(), &cfg)?;
    let nn = chain_sweep(2, 23, &Coupling::nearest_neighbour(), &cfg)?;
    println!("{:>3} {:>10} {:>12} {:>10} {:>10}", "N", "F dipole", "t dipole", "F nn", "tau");
    for (d, n) in dipole.iter().zip(&nn) {
        println!(
            "{:>3} {:>10.5} {:>12.3} {:>10.5} {:>10.4}",
            d.n,
            d.f_max,
            d.t_peak,
            n.f_max,
            d.tau.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
