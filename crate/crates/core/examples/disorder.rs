//! Monte Carlo estimate of how often placement errors push a four-spin chain
//! below the classical fidelity limit.
//!
//! `cargo run --release --example disorder`

use dipolink::disorder::{run_disorder, DisorderConfig, NoiseModel};
use dipolink::lattice::{Coupling, Geometry};

fn main() -> dipolink::Result<()> {
    let g = Geometry::uniform_chain(4)?;
    let c = Coupling::dipole();
    println!("{:<18} {:>6} {:>10} {:>10}", "noise model", "eps", "failures", "mean F");
    for model in NoiseModel::ALL {
        for eps in [0.01, 0.02, 0.04] {
            let config = DisorderConfig { error_fraction: eps, samples: 10_000, seed: 1, noise_model: model };
            let r = run_disorder(&g, &c, &config)?;
            println!(
                "{:<18} {eps:>6.2} {:>10.4} {:>10.5}",
                model.to_string(),
                r.failure_rate,
                r.mean_f_at_nominal_time
            );
        }
    }
    Ok(())
}
