//! Fit an end-localized state from a short chain and use it to predict the
//! transfer time of longer chains.
//!
//! `cargo run --release --example bound_state`

use dipolink::boundstate::{compare_with_full, fit_bound_state, DEFAULT_Q, DEFAULT_SOURCE_N};
use dipolink::lattice::Coupling;
use dipolink::transfer::PeakSearchConfig;

fn main() -> dipolink::Result<()> {
    let c = Coupling::dipole();
    let model = fit_bound_state(DEFAULT_Q, DEFAULT_SOURCE_N, &c)?;
    println!("coefficients {:.5?}", model.coefficients);
    println!("Q = {:.6}, R = {:.6}", model.q_sum, model.r_sum);
    println!("\n{:>3} {:>10} {:>10} {:>10} {:>9}", "N", "tau beat", "tau pred", "tau peak", "residual");
    for r in compare_with_full(&model, 8, 23, &c, &PeakSearchConfig::default())? {
        println!("{:>3} {:>10.5} {:>10.5} {:>10.5} {:>9.4}", r.n, r.tau_beat, r.tau_pred, r.tau_peak, r.residual_beat);
    }
    Ok(())
}
