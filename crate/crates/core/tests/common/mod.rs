#![allow(dead_code)]

pub mod oracle;

use dipolink::lattice::{build_hamiltonian, Coupling, ExcitationHamiltonian, Geometry};
use dipolink::spectral::{decompose, Propagator, SiteState};

pub fn uniform_chain(n: usize, coupling: &Coupling) -> ExcitationHamiltonian {
    build_hamiltonian(&Geometry::uniform_chain(n).unwrap(), coupling).unwrap()
}

pub fn site(n: usize, k: usize) -> SiteState {
    SiteState::localized(n, k).unwrap()
}

/// Propagator between 0-based sites `from` and `to`.
pub fn between(h: &ExcitationHamiltonian, from: usize, to: usize) -> Propagator {
    let n = h.dim();
    Propagator::new(&decompose(h).unwrap(), &site(n, from), &site(n, to)).unwrap()
}

pub fn ends(h: &ExcitationHamiltonian) -> Propagator {
    between(h, 0, h.dim() - 1)
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
