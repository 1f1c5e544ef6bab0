//! Monte Carlo failure rate of end-to-end transfer under random placement
//! errors.
//!
//! Each sample perturbs the clean positions, rebuilds the Hamiltonian and
//! evaluates the fidelity at the clean system's peak time. A sample fails when
//! that fidelity drops below the classical bound `2/3`. Sample `k` draws only
//! from stream `k` of a ChaCha generator keyed by the seed, so reports do not
//! depend on scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, Coupling, Geometry, Topology};
use crate::output::Table;
use crate::spectral::{decompose, Propagator, SiteState};
use crate::transfer::{summarize_with_spectrum, PeakSearchConfig};

pub const CLASSICAL_FIDELITY: f64 = 2.0 / 3.0;
const MAX_REDRAWS: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Every position shifted by an independent uniform draw on `[−εa, εa]`.
    #[default]
    UniformPerSite,
    /// Every position shifted by an independent normal draw with `σ = εa`.
    GaussianPerSite,
    /// Every gap changed by an independent uniform draw on `[−εa, εa]`.
    UniformPerGap,
    /// Every gap changed by an independent normal draw with `σ = εa`.
    GaussianPerGap,
}

impl NoiseModel {
    pub const ALL: [NoiseModel; 4] = [
        NoiseModel::UniformPerSite,
        NoiseModel::GaussianPerSite,
        NoiseModel::UniformPerGap,
        NoiseModel::GaussianPerGap,
    ];

    fn name(self) -> &'static str {
        match self {
            NoiseModel::UniformPerSite => "uniform-per-site",
            NoiseModel::GaussianPerSite => "gaussian-per-site",
            NoiseModel::UniformPerGap => "uniform-per-gap",
            NoiseModel::GaussianPerGap => "gaussian-per-gap",
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        NoiseModel::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Domain(format!("unknown noise model '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    /// Error scale `ε` relative to the mean spacing.
    pub error_fraction: f64,
    pub samples: usize,
    pub seed: u64,
    pub noise_model: NoiseModel,
}

impl Default for DisorderConfig {
    fn default() -> Self {
        DisorderConfig { error_fraction: 0.02, samples: 10_000, seed: 0, noise_model: NoiseModel::UniformPerSite }
    }
}

impl DisorderConfig {
    fn validate(&self, geometry: &Geometry) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::Domain("need at least one sample".into()));
        }
        let limit = 0.5 * geometry.min_gap() / geometry.spacing();
        if !(self.error_fraction >= 0.0 && self.error_fraction < limit) {
            return Err(Error::Domain(format!("error fraction must lie in [0, {limit}), got {}", self.error_fraction)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub sample: usize,
    pub fidelity: f64,
    pub failed: bool,
    /// Draws discarded because they reordered the spins.
    pub redraws: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisorderReport {
    pub failures: usize,
    pub failure_rate: f64,
    /// Mean fidelity at the nominal time over all samples.
    pub mean_f_at_nominal_time: f64,
    pub samples: usize,
    pub seed: u64,
    pub rejected_draws: usize,
    pub t_nominal: f64,
    pub clean_f_max: f64,
    pub threshold: f64,
    pub config: DisorderConfig,
}

/// Perturbed copy of `positions` under `model` with scale `width`.
fn perturb(positions: &[f64], model: NoiseModel, width: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        if width == 0.0 {
            return 0.0;
        }
        match model {
            NoiseModel::UniformPerSite | NoiseModel::UniformPerGap => rng.random_range(-width..=width),
            NoiseModel::GaussianPerSite | NoiseModel::GaussianPerGap => {
                Normal::new(0.0, width).expect("positive width").sample(rng)
            }
        }
    };
    match model {
        NoiseModel::UniformPerSite | NoiseModel::GaussianPerSite => positions.iter().map(|p| p + draw(rng)).collect(),
        NoiseModel::UniformPerGap | NoiseModel::GaussianPerGap => {
            let mut out = Vec::with_capacity(positions.len());
            out.push(positions[0]);
            for w in positions.windows(2) {
                let next = out[out.len() - 1] + (w[1] - w[0]) + draw(rng);
                out.push(next);
            }
            out
        }
    }
}

/// Per-sample outcomes and the aggregate report.
pub fn run_disorder_detailed(
    geometry: &Geometry,
    coupling: &Coupling,
    config: &DisorderConfig,
) -> Result<(DisorderReport, Vec<SampleOutcome>)> {
    if geometry.topology() != Topology::Chain {
        return Err(Error::Domain("disorder analysis needs a chain".into()));
    }
    config.validate(geometry)?;
    let n = geometry.len();
    let input = SiteState::localized(n, 0)?;
    let output = SiteState::localized(n, n - 1)?;

    let clean = build_hamiltonian(geometry, coupling)?;
    let clean_spec = decompose(&clean)?;
    let summary = summarize_with_spectrum(&clean, &clean_spec, &input, &output, &PeakSearchConfig::default())?;
    let t_nominal = summary.t_peak;
    let width = config.error_fraction * geometry.spacing();

    let outcomes: Vec<SampleOutcome> = (0..config.samples)
        .into_par_iter()
        .map(|k| -> Result<SampleOutcome> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let mut redraws = 0;
            let perturbed = loop {
                let positions = perturb(geometry.positions(), config.noise_model, width, &mut rng);
                if let Ok(g) = Geometry::chain(positions) {
                    break g;
                }
                redraws += 1;
                if redraws >= MAX_REDRAWS {
                    return Err(Error::Domain(format!("sample {k}: no ordered placement after {MAX_REDRAWS} draws")));
                }
            };
            let h = build_hamiltonian(&perturbed, coupling)?;
            let fidelity = Propagator::new(&decompose(&h)?, &input, &output)?.fidelity(t_nominal);
            Ok(SampleOutcome { sample: k, fidelity, failed: fidelity < CLASSICAL_FIDELITY, redraws })
        })
        .collect::<Result<_>>()?;

    let failures = outcomes.iter().filter(|o| o.failed).count();
    let report = DisorderReport {
        failures,
        failure_rate: failures as f64 / config.samples as f64,
        mean_f_at_nominal_time: outcomes.iter().map(|o| o.fidelity).sum::<f64>() / config.samples as f64,
        samples: config.samples,
        seed: config.seed,
        rejected_draws: outcomes.iter().map(|o| o.redraws).sum(),
        t_nominal,
        clean_f_max: summary.f_max,
        threshold: CLASSICAL_FIDELITY,
        config: config.clone(),
    };
    Ok((report, outcomes))
}

pub fn run_disorder(geometry: &Geometry, coupling: &Coupling, config: &DisorderConfig) -> Result<DisorderReport> {
    run_disorder_detailed(geometry, coupling, config).map(|(r, _)| r)
}

/// `sample,F_at_t_nominal,failed` rows.
pub fn samples_table(outcomes: &[SampleOutcome]) -> Table {
    let mut table = Table::new(["sample", "F_at_t_nominal", "failed"]);
    for o in outcomes {
        table.push::<_, crate::output::Cell>([o.sample.into(), o.fidelity.into(), o.failed.into()]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four() -> Geometry {
        Geometry::uniform_chain(4).unwrap()
    }

    #[test]
    fn zero_noise_reproduces_clean_peak() {
        let cfg = DisorderConfig { error_fraction: 0.0, samples: 50, ..Default::default() };
        let (r, samples) = run_disorder_detailed(&four(), &Coupling::dipole(), &cfg).unwrap();
        assert_eq!(r.failures, 0);
        assert_eq!(r.rejected_draws, 0);
        for s in samples {
            assert!((s.fidelity - r.clean_f_max).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = DisorderConfig { samples: 500, seed: 7, ..Default::default() };
        let a = run_disorder(&four(), &Coupling::dipole(), &cfg).unwrap();
        let b = run_disorder(&four(), &Coupling::dipole(), &cfg).unwrap();
        assert_eq!(a, b);
        let other = run_disorder(&four(), &Coupling::dipole(), &DisorderConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.mean_f_at_nominal_time, other.mean_f_at_nominal_time);
    }

    #[test]
    fn sample_streams_are_independent_of_sample_count() {
        let g = four();
        let small = DisorderConfig { samples: 20, seed: 3, ..Default::default() };
        let large = DisorderConfig { samples: 40, ..small.clone() };
        let (_, a) = run_disorder_detailed(&g, &Coupling::dipole(), &small).unwrap();
        let (_, b) = run_disorder_detailed(&g, &Coupling::dipole(), &large).unwrap();
        assert_eq!(a[..], b[..20]);
    }

    #[test]
    fn config_validation() {
        let g = four();
        let c = Coupling::dipole();
        assert!(run_disorder(&g, &c, &DisorderConfig { samples: 0, ..Default::default() }).is_err());
        assert!(run_disorder(&g, &c, &DisorderConfig { error_fraction: 0.5, ..Default::default() }).is_err());
        assert!(run_disorder(&g, &c, &DisorderConfig { error_fraction: -0.1, ..Default::default() }).is_err());
        assert!(run_disorder(&Geometry::ring(4).unwrap(), &c, &DisorderConfig::default()).is_err());
    }

    #[test]
    fn gaussian_tails_are_redrawn() {
        let cfg = DisorderConfig {
            error_fraction: 0.45,
            samples: 200,
            noise_model: NoiseModel::GaussianPerSite,
            ..Default::default()
        };
        let (r, samples) = run_disorder_detailed(&four(), &Coupling::dipole(), &cfg).unwrap();
        assert!(r.rejected_draws > 0);
        assert_eq!(r.rejected_draws, samples.iter().map(|s| s.redraws).sum::<usize>());
    }

    #[test]
    fn noise_model_names() {
        for m in NoiseModel::ALL {
            assert_eq!(m.to_string().parse::<NoiseModel>().unwrap(), m);
        }
        assert_eq!("UNIFORM_PER_SITE".parse::<NoiseModel>().unwrap(), NoiseModel::UniformPerSite);
        assert!("poisson".parse::<NoiseModel>().is_err());
    }

    #[test]
    fn per_gap_keeps_first_site() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = perturb(&[0.0, 1.0, 2.0], NoiseModel::UniformPerGap, 0.1, &mut rng);
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 1.0).abs() <= 0.1 && (p[2] - p[1] - 1.0).abs() <= 0.1);
    }
}
