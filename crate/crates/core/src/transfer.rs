//! Transfer metrics and N-sweeps.
//!
//! For end-to-end transfer on a dipole chain the fidelity beats between the
//! two lowest levels, so `F` first peaks near the beat time `π/Δλ` and repeats
//! with period `2π/Δλ`. Faster modes add ripples on top of the beat, which
//! move the exact argmax of `F` around the beat time.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, Coupling, CouplingModel, ExcitationHamiltonian, Geometry, Topology};
use crate::output::{Cell, Table};
use crate::peak::{bisect_descending, refine_global_max};
use crate::spectral::{decompose, Propagator, SiteState, SpectralDecomposition};

/// Window for nearest-neighbour chains, in units of the inverse exchange.
pub const NN_CHAIN_WINDOW: f64 = 4000.0;
/// Ring window per site, in units of the inverse nearest-neighbour coupling.
pub const RING_WINDOW_PER_SITE: f64 = 10.0;
/// Gaps below this are treated as degenerate levels.
const DEGENERATE_GAP: f64 = 1e-12;
const MAX_GRID_POINTS: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeakSearchConfig {
    /// Search window `[0, t_max]`; `None` picks the default for the system.
    pub t_max: Option<f64>,
    /// Minimum number of coarse grid points.
    pub grid_points: usize,
    /// Grid points per period of the fastest weighted oscillation.
    pub points_per_oscillation: usize,
    /// Golden-section tolerance on time.
    pub time_tol: f64,
    /// Number of tallest grid maxima that are refined.
    pub refine_candidates: usize,
}

impl Default for PeakSearchConfig {
    fn default() -> Self {
        PeakSearchConfig {
            t_max: None,
            grid_points: 5000,
            points_per_oscillation: 16,
            time_tol: 1e-9,
            refine_candidates: 64,
        }
    }
}

impl PeakSearchConfig {
    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = Some(t_max);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferSummary {
    pub n: usize,
    pub topology: Topology,
    pub model: CouplingModel,
    /// Largest fidelity in the window.
    pub f_max: f64,
    /// Earliest time attaining `f_max`.
    pub t_peak: f64,
    /// `E₁ − E₀`.
    pub delta_lambda: f64,
    /// `2π/Δλ`, when the two lowest levels are split.
    pub period: Option<f64>,
    /// `π/Δλ`, the two-level prediction for the first peak.
    pub beat_time: Option<f64>,
    /// `t_peak / L³` (chains only).
    pub tau: Option<f64>,
    /// `beat_time / L³` (chains only).
    pub tau_beat: Option<f64>,
    pub length: f64,
    pub window: f64,
    pub coarse_max: f64,
    /// The maximum was found on the window's right edge with `F` still rising.
    pub boundary_peak: bool,
}

/// Default search window for a system.
///
/// Dipole chains get one beat period `2π/Δλ`, which contains the first beat
/// maximum and nothing of the second. Nearest-neighbour chains have no
/// isolated two-level beat and use a fixed long window; rings use `10·N`.
/// Both fixed windows are in units of the inverse nearest-neighbour coupling.
pub fn default_window(h: &ExcitationHamiltonian, spec: &SpectralDecomposition) -> f64 {
    let geometry = h.geometry();
    let nn_rate = h.coupling().pair_energy(geometry.spacing());
    let n = geometry.len() as f64;
    match (geometry.topology(), h.coupling().model) {
        (Topology::Chain, CouplingModel::Dipole) => match spec.lowest_gap() {
            Some(gap) if gap > DEGENERATE_GAP => 2.0 * PI / gap,
            _ => RING_WINDOW_PER_SITE * n / nn_rate,
        },
        (Topology::Chain, CouplingModel::NearestNeighbour) => NN_CHAIN_WINDOW / nn_rate,
        (Topology::Ring, _) => RING_WINDOW_PER_SITE * n / nn_rate,
    }
}

pub fn summarize_transfer(
    h: &ExcitationHamiltonian,
    input: &SiteState,
    output: &SiteState,
    config: &PeakSearchConfig,
) -> Result<TransferSummary> {
    let spec = decompose(h)?;
    summarize_with_spectrum(h, &spec, input, output, config)
}

/// As [`summarize_transfer`], reusing an existing decomposition of `h`.
pub fn summarize_with_spectrum(
    h: &ExcitationHamiltonian,
    spec: &SpectralDecomposition,
    input: &SiteState,
    output: &SiteState,
    config: &PeakSearchConfig,
) -> Result<TransferSummary> {
    let window = config.t_max.unwrap_or_else(|| default_window(h, spec));
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::Domain(format!("search window must be positive, got {window}")));
    }
    let prop = Propagator::new(spec, input, output)?;

    let fastest = prop.bandwidth() / (2.0 * PI);
    let wanted = (window * fastest * config.points_per_oscillation as f64).ceil() as usize;
    let points = wanted.max(config.grid_points).clamp(2, MAX_GRID_POINTS);
    let dt = window / (points - 1) as f64;
    let samples = prop.sample_fidelity(0.0, dt, points);
    let mut peak =
        refine_global_max(|t| prop.fidelity(t), &samples, dt, config.time_tol, config.refine_candidates, 1e-9);
    let (lo, hi) = ((peak.time - dt).max(0.0), (peak.time + dt).min(window));
    if let Some(t) = bisect_descending(|t| prop.slope(t), lo, hi) {
        peak.time = t;
        peak.value = peak.value.max(prop.fidelity(t));
    }

    let geometry = h.geometry();
    let delta_lambda = spec.lowest_gap().unwrap_or(0.0);
    let split = delta_lambda > DEGENERATE_GAP;
    let period = split.then(|| 2.0 * PI / delta_lambda);
    let beat_time = split.then(|| PI / delta_lambda);
    let length = geometry.length();
    let is_chain = geometry.topology() == Topology::Chain;
    let cube = length.powi(3);

    Ok(TransferSummary {
        n: geometry.len(),
        topology: geometry.topology(),
        model: h.coupling().model,
        f_max: peak.value,
        t_peak: peak.time,
        delta_lambda,
        period,
        beat_time,
        tau: is_chain.then(|| peak.time / cube),
        tau_beat: if is_chain { beat_time.map(|t| t / cube) } else { None },
        length,
        window,
        coarse_max: peak.coarse_max,
        boundary_peak: peak.at_boundary,
    })
}

/// Mean spacing of successive upward crossings of the midpoint between the
/// curve's extremes. Crossings are gated by hysteresis; the re-arm level
/// giving the most regular spacing is kept.
pub fn oscillation_period(values: &[f64], dt: f64) -> Option<f64> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    if !(hi > lo) {
        return None;
    }
    let mid = 0.5 * (lo + hi);
    let mut best: Option<(f64, f64)> = None;
    for rearm_fraction in [0.25, 0.15, 0.1, 0.05] {
        let crossings = upward_crossings(values, dt, mid, lo + rearm_fraction * (hi - lo));
        if crossings.len() < 3 {
            continue;
        }
        let spacings: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
        let spread = (spacings.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / spacings.len() as f64).sqrt() / mean;
        if best.is_none_or(|(s, _)| spread < s) {
            best = Some((spread, mean));
        }
    }
    best.map(|(_, period)| period)
}

fn upward_crossings(values: &[f64], dt: f64, level: f64, rearm: f64) -> Vec<f64> {
    let mut armed = false;
    let mut crossings = Vec::new();
    for k in 1..values.len() {
        if values[k] < rearm {
            armed = true;
        }
        if armed && values[k - 1] < level && values[k] >= level {
            let frac = (level - values[k - 1]) / (values[k] - values[k - 1]);
            crossings.push((k as f64 - 1.0 + frac) * dt);
            armed = false;
        }
    }
    crossings
}

/// Sample `F(t)` over `beats` beat periods and measure its oscillation period
/// without reference to the spectrum.
pub fn measured_period(
    h: &ExcitationHamiltonian,
    input: &SiteState,
    output: &SiteState,
    beats: usize,
) -> Result<Option<f64>> {
    let spec = decompose(h)?;
    let Some(gap) = spec.lowest_gap().filter(|g| *g > DEGENERATE_GAP) else {
        return Ok(None);
    };
    let prop = Propagator::new(&spec, input, output)?;
    let window = beats as f64 * 2.0 * PI / gap;
    let points = ((window * prop.bandwidth() / (2.0 * PI)) * 16.0).ceil().max(2000.0) as usize;
    let dt = window / (points - 1) as f64;
    Ok(oscillation_period(&prop.sample_fidelity(0.0, dt, points), dt))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub model: CouplingModel,
    pub topology: Topology,
    pub f_max: f64,
    pub t_peak: f64,
    pub delta_lambda: f64,
    pub tau: Option<f64>,
}

impl From<&TransferSummary> for SweepRow {
    fn from(s: &TransferSummary) -> Self {
        SweepRow {
            n: s.n,
            model: s.model,
            topology: s.topology,
            f_max: s.f_max,
            t_peak: s.t_peak,
            delta_lambda: s.delta_lambda,
            tau: s.tau,
        }
    }
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.n, r.model as u8));
    let mut table = Table::new(["n", "model", "topology", "f_max", "t_peak", "delta_lambda", "tau"]);
    for r in sorted {
        table.push::<_, Cell>([
            r.n.into(),
            r.model.to_string().into(),
            r.topology.to_string().into(),
            r.f_max.into(),
            r.t_peak.into(),
            r.delta_lambda.into(),
            r.tau.into(),
        ]);
    }
    table
}

fn check_range(n_min: usize, n_max: usize, floor: usize) -> Result<()> {
    if n_min < floor || n_min > n_max {
        return Err(Error::Domain(format!("need {floor} <= n_min <= n_max, got {n_min}..{n_max}")));
    }
    Ok(())
}

/// End-to-end summary of a uniform chain of `n` unit-spaced spins.
pub fn chain_end_to_end(n: usize, coupling: &Coupling, config: &PeakSearchConfig) -> Result<TransferSummary> {
    let h = build_hamiltonian(&Geometry::uniform_chain(n)?, coupling)?;
    summarize_transfer(&h, &SiteState::localized(n, 0)?, &SiteState::localized(n, n - 1)?, config)
}

/// Summary of transfer from site 1 to the antipodal site of an `n`-site ring.
pub fn ring_antipodal(n: usize, coupling: &Coupling, config: &PeakSearchConfig) -> Result<TransferSummary> {
    let h = build_hamiltonian(&Geometry::ring(n)?, coupling)?;
    summarize_transfer(&h, &SiteState::localized(n, 0)?, &SiteState::localized(n, n / 2)?, config)
}

pub fn chain_sweep(
    n_min: usize,
    n_max: usize,
    coupling: &Coupling,
    config: &PeakSearchConfig,
) -> Result<Vec<SweepRow>> {
    check_range(n_min, n_max, 2)?;
    (n_min..=n_max).into_par_iter().map(|n| chain_end_to_end(n, coupling, config).map(|s| SweepRow::from(&s))).collect()
}

pub fn ring_sweep(n_min: usize, n_max: usize, coupling: &Coupling, config: &PeakSearchConfig) -> Result<Vec<SweepRow>> {
    check_range(n_min, n_max, 3)?;
    (n_min..=n_max).into_par_iter().map(|n| ring_antipodal(n, coupling, config).map(|s| SweepRow::from(&s))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalizedTime {
    pub n: usize,
    pub t_peak: f64,
    pub tau: f64,
    pub tau_beat: f64,
}

/// Transfer time at unit chain length for uniform dipole chains.
pub fn normalized_time_curve(n_min: usize, n_max: usize, config: &PeakSearchConfig) -> Result<Vec<NormalizedTime>> {
    check_range(n_min, n_max, 2)?;
    (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let s = chain_end_to_end(n, &Coupling::dipole(), config)?;
            let beat = s.tau_beat.ok_or_else(|| Error::Domain(format!("degenerate lowest levels at n={n}")))?;
            Ok(NormalizedTime { n, t_peak: s.t_peak, tau: s.tau.expect("chain"), tau_beat: beat })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_spin_summary() {
        let s = chain_end_to_end(2, &Coupling::dipole(), &PeakSearchConfig::default()).unwrap();
        assert_abs_diff_eq!(s.f_max, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.t_peak, PI / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.delta_lambda, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.tau.unwrap(), PI / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.period.unwrap(), PI, epsilon = 1e-14);
        assert!(!s.boundary_peak);
    }

    #[test]
    fn short_window_flags_boundary_peak() {
        let cfg = PeakSearchConfig::default().with_t_max(1.0);
        let s = chain_end_to_end(2, &Coupling::dipole(), &cfg).unwrap();
        assert!(s.boundary_peak);
        assert_abs_diff_eq!(s.t_peak, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ring_rows_carry_no_tau() {
        let rows = ring_sweep(3, 6, &Coupling::dipole(), &PeakSearchConfig::default()).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![3, 4, 5, 6]);
        assert!(rows.iter().all(|r| r.tau.is_none() && r.topology == Topology::Ring));
    }

    #[test]
    fn triangle_ring_models_agree() {
        let cfg = PeakSearchConfig::default();
        let d = ring_antipodal(3, &Coupling::dipole(), &cfg).unwrap();
        let nn = ring_antipodal(3, &Coupling::nearest_neighbour(), &cfg).unwrap();
        assert_abs_diff_eq!(d.f_max, nn.f_max, epsilon = 1e-12);
    }

    #[test]
    fn sweep_validates_range() {
        let cfg = PeakSearchConfig::default();
        assert!(chain_sweep(1, 4, &Coupling::dipole(), &cfg).is_err());
        assert!(chain_sweep(5, 4, &Coupling::dipole(), &cfg).is_err());
        assert!(ring_sweep(2, 4, &Coupling::dipole(), &cfg).is_err());
    }

    #[test]
    fn sweep_csv_header() {
        let rows = chain_sweep(2, 3, &Coupling::dipole(), &PeakSearchConfig::default()).unwrap();
        let csv = sweep_table(&rows).to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,model,topology,f_max,t_peak,delta_lambda,tau");
        assert!(lines.next().unwrap().starts_with("2,dipole,chain,"));
    }

    #[test]
    fn period_from_crossings_of_a_sine() {
        let dt = 0.01;
        let values: Vec<f64> = (0..10_000).map(|k| (k as f64 * dt).sin()).collect();
        assert_abs_diff_eq!(oscillation_period(&values, dt).unwrap(), 2.0 * PI, epsilon = 1e-4);
        assert!(oscillation_period(&[1.0; 10], dt).is_none());
    }
}
