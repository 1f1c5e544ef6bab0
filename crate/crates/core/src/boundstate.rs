//! End-localized bound states and the asymptotic splitting they produce.
//!
//! The two lowest levels of a long dipole chain are the even and odd
//! combinations of states `|B⟩ = Σ aₙ|n⟩` and `|E⟩ = Σ aₙ|N+1−n⟩` living on
//! the first and last `q` sites. Their splitting `Δλ = 2⟨B|H|E⟩`, expanded to
//! first order in the offset `m + n − 2` around the chain length `L`, is
//! `Δλ ≈ C [Q/L³ + a R/L⁴]` with
//!
//! ```text
//! Q = Σₙₘ aₙ aₘ            R = Σₙₘ 3 aₙ aₘ (m + n − 2)
//! ```
//!
//! The coefficients come from the ground state of the leading `q × q` block
//! of a reference Hamiltonian, so they depend only weakly on its size.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, Coupling, ExcitationHamiltonian, Geometry};
use crate::spectral::{decompose_matrix, SiteState};
use crate::transfer::{chain_end_to_end, PeakSearchConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundStateModel {
    pub q: usize,
    pub source_n: usize,
    #[serde(rename = "a")]
    pub coefficients: Vec<f64>,
    #[serde(rename = "Q")]
    pub q_sum: f64,
    #[serde(rename = "R")]
    pub r_sum: f64,
}

pub const DEFAULT_Q: usize = 4;
pub const DEFAULT_SOURCE_N: usize = 14;

/// Fit the `q`-site end state from the leading block of `H(source_n)`.
pub fn fit_bound_state(q: usize, source_n: usize, coupling: &Coupling) -> Result<BoundStateModel> {
    if q < 1 || 2 * q > source_n {
        return Err(Error::Domain(format!("need 1 <= q <= source_n/2, got q={q}, source_n={source_n}")));
    }
    let h = build_hamiltonian(&Geometry::uniform_chain(source_n)?, coupling)?;
    let corner = h.matrix().view((0, 0), (q, q)).into_owned();
    let spec = decompose_matrix(&corner)?;
    let mut a = spec.eigenvector(0);
    if a[0] < 0.0 {
        a.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(BoundStateModel::from_coefficients(a, source_n))
}

impl BoundStateModel {
    /// Build from coefficients `a₁…a_q` (assumed normalized).
    pub fn from_coefficients(coefficients: Vec<f64>, source_n: usize) -> Self {
        let q = coefficients.len();
        let mut q_sum = 0.0;
        let mut r_sum = 0.0;
        for (i, ai) in coefficients.iter().enumerate() {
            for (j, aj) in coefficients.iter().enumerate() {
                q_sum += ai * aj;
                // 0-based indices: (m + n − 2) becomes (i + j).
                r_sum += 3.0 * ai * aj * (i + j) as f64;
            }
        }
        BoundStateModel { q, source_n, coefficients, q_sum, r_sum }
    }

    /// `|B⟩` and `|E⟩` embedded in an `n`-site chain.
    pub fn end_states(&self, n: usize) -> Result<(SiteState, SiteState)> {
        if 2 * self.q > n {
            return Err(Error::Domain(format!("end states of width {} do not fit in {n} sites", self.q)));
        }
        let mut amps = vec![0.0; n];
        amps[..self.q].copy_from_slice(&self.coefficients);
        let begin = SiteState::normalized_real(&amps)?;
        let end = begin.mirrored();
        Ok((begin, end))
    }

    /// `⟨B|H|E⟩` summed from the actual matrix elements of `h`.
    pub fn end_coupling(&self, h: &ExcitationHamiltonian) -> Result<f64> {
        let n = h.dim();
        if 2 * self.q > n {
            return Err(Error::Domain(format!("end states of width {} do not fit in {n} sites", self.q)));
        }
        let m = h.matrix();
        let mut total = 0.0;
        for (i, ai) in self.coefficients.iter().enumerate() {
            for (j, aj) in self.coefficients.iter().enumerate() {
                total += ai * aj * m[(i, n - 1 - j)];
            }
        }
        Ok(total)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplittingPrediction {
    pub delta_lambda: f64,
    pub t_peak: f64,
    pub tau: f64,
}

/// First-order splitting `C [Q/L³ + a R/L⁴]` and the transfer times it implies.
pub fn predict_splitting(
    model: &BoundStateModel,
    length: f64,
    a: f64,
    coupling: &Coupling,
) -> Result<SplittingPrediction> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Domain(format!("chain length must be positive, got {length}")));
    }
    let l3 = length.powi(3);
    let delta_lambda = coupling.c * (model.q_sum / l3 + a * model.r_sum / (l3 * length));
    if !(delta_lambda > 0.0) {
        return Err(Error::ExpansionInvalid(delta_lambda));
    }
    let t_peak = PI / delta_lambda;
    Ok(SplittingPrediction { delta_lambda, t_peak, tau: t_peak / l3 })
}

/// Exact coupling `H(|N+1−m−n|)` between end sites `n` and `N+1−m` (1-based)
/// and its first-order expansion around `L = a(N−1)`.
pub fn taylor_vs_exact_element(
    model: &BoundStateModel,
    n: usize,
    m: usize,
    big_n: usize,
    a: f64,
    coupling: &Coupling,
) -> Result<(f64, f64)> {
    if n < 1 || m < 1 || n > model.q || m > model.q {
        return Err(Error::Domain(format!("indices ({n}, {m}) outside 1..={}", model.q)));
    }
    if big_n < m + n {
        return Err(Error::Domain(format!("separation N+1-m-n is not positive for N={big_n}, n={n}, m={m}")));
    }
    let c = coupling.c;
    let sep = a * (big_n + 1 - m - n) as f64;
    let exact = c / (2.0 * sep.powi(3));
    let length = a * (big_n - 1) as f64;
    let delta = (m + n - 2) as f64;
    let first_order = c / (2.0 * length.powi(3)) + 3.0 * c * a * delta / (2.0 * length.powi(4));
    Ok((exact, first_order))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundStateComparison {
    pub n: usize,
    pub length: f64,
    /// Measured `t_peak / L³` from the full system.
    pub tau_peak: f64,
    /// `(π/Δλ) / L³` from the full spectrum.
    pub tau_beat: f64,
    pub tau_pred: f64,
    pub residual_peak: f64,
    pub residual_beat: f64,
}

/// Compare the model's `τ` with the full solution on unit-spaced chains.
pub fn compare_with_full(
    model: &BoundStateModel,
    n_min: usize,
    n_max: usize,
    coupling: &Coupling,
    config: &PeakSearchConfig,
) -> Result<Vec<BoundStateComparison>> {
    if n_min < 2 * model.q || n_min > n_max {
        return Err(Error::Domain(format!("need {} <= n_min <= n_max, got {n_min}..{n_max}", 2 * model.q)));
    }
    (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let s = chain_end_to_end(n, coupling, config)?;
            let pred = predict_splitting(model, s.length, s.length / (n - 1) as f64, coupling)?;
            let tau_peak = s.tau.expect("chain");
            let tau_beat = s.tau_beat.ok_or_else(|| Error::Domain(format!("degenerate lowest levels at n={n}")))?;
            Ok(BoundStateComparison {
                n,
                length: s.length,
                tau_peak,
                tau_beat,
                tau_pred: pred.tau,
                residual_peak: (pred.tau - tau_peak).abs() / tau_peak,
                residual_beat: (pred.tau - tau_beat).abs() / tau_beat,
            })
        })
        .collect()
}
