//! Antipodal transfer on rings: dipole against nearest-neighbour coupling.
//!
//! `cargo run --release --example ring_comparison`

use dipolink::lattice::Coupling;
use dipolink::transfer::{ring_sweep, PeakSearchConfig};

fn main() -> dipolink::Result<()> {
    let cfg = PeakSearchConfig::default();
    let dipole = ring_sweep(3, 30, &Coupling::dipole(), &cfg)?;
    let nn = ring_sweep(3, 30, &Coupling::nearest_neighbour(), &cfg)?;
    println!("{:>3} {:>10} {:>10}  better", "N", "F dipole", "F nn");
    for (d, n) in dipole.iter().zip(&nn) {
        let better = if d.f_max > n.f_max { "dipole" } else { "nn" };
        println!("{:>3} {:>10.5} {:>10.5}  {better}", d.n, d.f_max, n.f_max);
    }
    Ok(())
}
