//! Search mirror-symmetric spacings of a four-spin chain for the fastest
//! transfer that still meets a fidelity floor.
//!
//! `cargo run --release --example optimize_placement`

use dipolink::lattice::Coupling;
use dipolink::optimize::{optimize_placement, Objective, SearchConfig, DEFAULT_MIN_FIDELITY};

fn main() -> dipolink::Result<()> {
    let report = optimize_placement(
        4,
        Objective::MinimizeTau,
        DEFAULT_MIN_FIDELITY,
        &Coupling::dipole(),
        &SearchConfig::default(),
    )?;
    println!("uniform:   gaps {:.4?}  tau {:.5}  F {:.5}", report.start_gaps, report.start_tau, report.start_f_max);
    println!(
        "optimized: gaps {:.4?}  tau {:.5}  F {:.5}",
        report.geometry.gaps(),
        report.summary.tau_beat.unwrap_or(f64::NAN),
        report.summary.f_max
    );
    println!("feasible {}, converged {}, {} evaluations", report.feasible, report.converged, report.evaluations);
    Ok(())
}
