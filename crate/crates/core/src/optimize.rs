//! Faster transfer by moving the inner spins of a unit-length chain, and
//! cleaner transfer by spreading the input over several end sites.
//!
//! Placements stay mirror-symmetric: a chain of `n` spins has `⌈(n−1)/2⌉`
//! distinct gaps, and fixing the total length leaves one fewer free
//! parameter. The innermost distinct gap absorbs the length constraint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, Coupling, ExcitationHamiltonian, Geometry};
use crate::spectral::{decompose, SiteState};
use crate::transfer::{summarize_transfer, summarize_with_spectrum, PeakSearchConfig, TransferSummary};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Minimize `(π/Δλ)/L³`, the two-level estimate of the first transfer peak.
    #[default]
    MinimizeTau,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    pub seed: u64,
    /// Perturbed starts in addition to the uniform one.
    pub restarts: usize,
    pub gap_min: f64,
    /// Relative size of restart perturbations, in units of the uniform gap.
    pub perturbation: f64,
    pub max_iterations: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    #[serde(skip)]
    pub peak: PeakSearchConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 0,
            restarts: 10,
            gap_min: 0.05,
            perturbation: 0.3,
            max_iterations: 2000,
            x_tol: 1e-9,
            f_tol: 1e-12,
            peak: PeakSearchConfig::default(),
        }
    }
}

pub const DEFAULT_MIN_FIDELITY: f64 = 0.99;

/// Mirror-symmetric unit-length parameterization of an `n`-spin chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MirrorChain {
    n: usize,
}

impl MirrorChain {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("placement needs at least 3 spins, got {n}")));
        }
        Ok(MirrorChain { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn distinct(&self) -> usize {
        self.n / 2
    }

    pub fn free_parameters(&self) -> usize {
        self.distinct() - 1
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / (self.n - 1) as f64; self.free_parameters()]
    }

    /// All `n − 1` gaps, outermost first.
    pub fn gaps(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.free_parameters(), "wrong number of free gaps");
        let k = self.distinct();
        let outer: f64 = free.iter().sum();
        // Even n: the middle gap appears once. Odd n: the innermost pair straddles the centre.
        let inner = if self.n.is_multiple_of(2) { 1.0 - 2.0 * outer } else { 0.5 - outer };
        let mut half: Vec<f64> = free.to_vec();
        half.push(inner);
        let mut all = half.clone();
        if self.n.is_multiple_of(2) {
            all.extend(half[..k - 1].iter().rev());
        } else {
            all.extend(half.iter().rev());
        }
        all
    }

    /// Positions built from both ends towards the centre so the mirror
    /// symmetry holds bit-for-bit.
    pub fn geometry(&self, free: &[f64]) -> Result<Geometry> {
        let gaps = self.gaps(free);
        let mut pos = vec![0.0; self.n];
        pos[self.n - 1] = 1.0;
        let mut acc = 0.0;
        for i in 1..self.n / 2 + self.n % 2 {
            acc += gaps[i - 1];
            pos[i] = acc;
            pos[self.n - 1 - i] = 1.0 - acc;
        }
        if self.n % 2 == 1 {
            pos[self.n / 2] = 0.5;
        }
        Geometry::chain(pos)
    }
}

#[derive(Clone, Copy, Debug)]
struct Evaluation {
    objective: f64,
    f_max: f64,
}

fn evaluate(
    chain: &MirrorChain,
    free: &[f64],
    coupling: &Coupling,
    min_fidelity: f64,
    cfg: &SearchConfig,
) -> Evaluation {
    let rejected = Evaluation { objective: f64::INFINITY, f_max: f64::NAN };
    if chain.gaps(free).iter().any(|&g| !(g >= cfg.gap_min)) {
        return rejected;
    }
    let Ok(summary) = chain.geometry(free).and_then(|g| end_to_end(&g, coupling, &cfg.peak)) else {
        return rejected;
    };
    let tau = summary.tau_beat.unwrap_or(f64::INFINITY);
    let objective = if summary.f_max >= min_fidelity { tau } else { f64::INFINITY };
    Evaluation { objective, f_max: summary.f_max }
}

fn end_to_end(geometry: &Geometry, coupling: &Coupling, peak: &PeakSearchConfig) -> Result<TransferSummary> {
    let h = build_hamiltonian(geometry, coupling)?;
    let n = h.dim();
    summarize_transfer(&h, &SiteState::localized(n, 0)?, &SiteState::localized(n, n - 1)?, peak)
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead minimization starting from an axis-aligned simplex of size `step`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    x_tol: f64,
    f_tol: f64,
    max_iterations: usize,
) -> SimplexResult {
    let dim = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    if dim == 0 {
        let value = eval(x0, &mut evaluations);
        return SimplexResult { x: Vec::new(), value, iterations: 0, evaluations, converged: true };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evaluations)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evaluations);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let flat = best.is_finite() && worst.is_finite() && (worst - best) <= f_tol * (best.abs() + f_tol);
        if diameter <= x_tol && (flat || !worst.is_finite()) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..dim).map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64).collect();
        let along =
            |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[dim].0).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evaluations);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evaluations);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        };
        if fc < worst.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex[1..].iter_mut() {
            for (xi, bi) in x.iter_mut().zip(&x_best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = eval(x, &mut evaluations);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult { x, value, iterations, evaluations, converged }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlacementReport {
    pub n: usize,
    pub objective: Objective,
    pub min_fidelity: f64,
    pub search: SearchConfig,
    /// Gaps of the uniform starting chain.
    pub start_gaps: Vec<f64>,
    pub start_tau: f64,
    pub start_f_max: f64,
    pub best_gaps: Vec<f64>,
    pub geometry: Geometry,
    /// Nelder–Mead iterations of the winning restart.
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub feasible: bool,
    /// Highest `f_max` seen at any evaluated placement.
    pub best_f_max_seen: f64,
    pub summary: TransferSummary,
}

impl PlacementReport {
    /// The report itself when feasible, otherwise an infeasibility error.
    pub fn into_result(self) -> Result<Self> {
        if self.feasible {
            Ok(self)
        } else {
            Err(Error::Infeasible { min_fidelity: self.min_fidelity, best_f_max: self.best_f_max_seen })
        }
    }
}

/// Search mirror-symmetric unit-length placements of `n` spins for the
/// smallest `τ` with `f_max ≥ min_fidelity`.
///
/// Infeasible searches still return a report, with `feasible = false` and
/// the best placement found by fidelity.
pub fn optimize_placement(
    n: usize,
    objective: Objective,
    min_fidelity: f64,
    coupling: &Coupling,
    search: &SearchConfig,
) -> Result<PlacementReport> {
    let Objective::MinimizeTau = objective;
    let chain = MirrorChain::new(n)?;
    if !(0.0..=1.0).contains(&min_fidelity) {
        return Err(Error::Domain(format!("min fidelity must lie in [0, 1], got {min_fidelity}")));
    }
    if !(search.gap_min > 0.0 && search.gap_min * (n - 1) as f64 <= 1.0) {
        return Err(Error::Domain(format!("gap_min {} is infeasible for {n} spins", search.gap_min)));
    }

    let uniform = chain.uniform();
    let starts = restart_points(&chain, search);
    let step = 0.1 / (n - 1) as f64;

    let runs: Vec<(SimplexResult, Vec<f64>, f64)> = starts
        .par_iter()
        .map(|x0| {
            let mut best_fid = (f64::NEG_INFINITY, x0.clone());
            let result = nelder_mead(
                |x| {
                    let e = evaluate(&chain, x, coupling, min_fidelity, search);
                    if e.f_max > best_fid.0 {
                        best_fid = (e.f_max, x.to_vec());
                    }
                    e.objective
                },
                x0,
                step,
                search.x_tol,
                search.f_tol,
                search.max_iterations,
            );
            (result, best_fid.1, best_fid.0)
        })
        .collect();

    let evaluations = runs.iter().map(|r| r.0.evaluations).sum();
    let distance = |x: &[f64]| x.iter().zip(&uniform).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let better = |a: &SimplexResult, b: &SimplexResult| {
        let scale = a.value.abs().max(b.value.abs());
        if a.value.is_finite() && b.value.is_finite() && (a.value - b.value).abs() <= 1e-12 * scale {
            distance(&a.x) < distance(&b.x)
        } else {
            a.value < b.value
        }
    };
    let mut winner = &runs[0].0;
    for run in &runs[1..] {
        if better(&run.0, winner) {
            winner = &run.0;
        }
    }
    let (fid_x, best_f_max_seen) =
        runs.iter().fold((&runs[0].1, runs[0].2), |acc, r| if r.2 > acc.1 { (&r.1, r.2) } else { acc });

    let feasible = winner.value.is_finite();
    let chosen = if feasible { winner.x.clone() } else { fid_x.clone() };
    let geometry = chain.geometry(&chosen)?;
    let summary = end_to_end(&geometry, coupling, &search.peak)?;
    let start = end_to_end(&chain.geometry(&uniform)?, coupling, &search.peak)?;

    Ok(PlacementReport {
        n,
        objective,
        min_fidelity,
        search: search.clone(),
        start_gaps: chain.gaps(&uniform),
        start_tau: start.tau_beat.unwrap_or(f64::INFINITY),
        start_f_max: start.f_max,
        best_gaps: chain.gaps(&chosen),
        geometry,
        iterations: winner.iterations,
        evaluations,
        converged: winner.converged,
        feasible,
        best_f_max_seen,
        summary,
    })
}

fn restart_points(chain: &MirrorChain, search: &SearchConfig) -> Vec<Vec<f64>> {
    let uniform = chain.uniform();
    let width = search.perturbation / (chain.n() - 1) as f64;
    let mut starts = vec![uniform.clone()];
    for k in 0..search.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
        rng.set_stream(k as u64 + 1);
        let mut point = uniform.clone();
        for _ in 0..1000 {
            let candidate: Vec<f64> = uniform.iter().map(|u| u + rng.random_range(-width..=width)).collect();
            if chain.gaps(&candidate).iter().all(|&g| g >= search.gap_min) {
                point = candidate;
                break;
            }
        }
        starts.push(point);
    }
    starts
}

/// Input spread over the first `width` sites with the ground-state profile,
/// and its mirror image on the last `width` sites.
pub fn encoded_end_states(h: &ExcitationHamiltonian, width: usize) -> Result<(SiteState, SiteState)> {
    let n = h.dim();
    if width < 1 || 2 * width > n {
        return Err(Error::Domain(format!("encoding width must lie in 1..={}, got {width}", n / 2)));
    }
    let ground = decompose(h)?.eigenvector(0);
    let mut amps = vec![0.0; n];
    amps[..width].copy_from_slice(&ground[..width]);
    let input = SiteState::normalized_real(&amps)?;
    let output = input.mirrored();
    Ok((input, output))
}

/// Transfer from site `r` to site `s` (1-based).
pub fn off_end_transfer_check(
    h: &ExcitationHamiltonian,
    r: usize,
    s: usize,
    config: &PeakSearchConfig,
) -> Result<TransferSummary> {
    let n = h.dim();
    if r < 1 || s < 1 || r > n || s > n || r == s {
        return Err(Error::Domain(format!("need distinct sites in 1..={n}, got ({r}, {s})")));
    }
    summarize_transfer(h, &SiteState::localized(n, r - 1)?, &SiteState::localized(n, s - 1)?, config)
}

#[derive(Clone, Debug, Serialize)]
pub struct EncodedComparison {
    pub width: usize,
    pub encoded: TransferSummary,
    pub single_site: TransferSummary,
}

/// Encoded and single-site end-to-end transfer on the same system.
pub fn encoded_transfer(
    h: &ExcitationHamiltonian,
    width: usize,
    config: &PeakSearchConfig,
) -> Result<EncodedComparison> {
    let (input, output) = encoded_end_states(h, width)?;
    let spec = decompose(h)?;
    let n = h.dim();
    let encoded = summarize_with_spectrum(h, &spec, &input, &output, config)?;
    let single_site =
        summarize_with_spectrum(h, &spec, &SiteState::localized(n, 0)?, &SiteState::localized(n, n - 1)?, config)?;
    Ok(EncodedComparison { width, encoded, single_site })
}
