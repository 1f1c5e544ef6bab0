//! Geometries and their single-excitation Hamiltonians.
//!
//! Every spin starts aligned with the field axis; the states `|j⟩` with a
//! single flipped spin at site `j` span an `N`-dimensional block that the
//! dynamics never leaves, so all operators here are `N × N` real symmetric
//! matrices. Positions are measured in units of the nearest-neighbour
//! spacing `a` and energies in units where the nearest-neighbour hopping is
//! `C / (2a³)`, which is 1 for the default `C = 2`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to detect mirror-symmetric placements.
const MIRROR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Chain,
    Ring,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Chain => "chain",
            Topology::Ring => "ring",
        })
    }
}

/// Spatial description of an array of spins.
///
/// Chains accept arbitrary strictly increasing positions. Rings are always
/// uniform: their positions are the site indices scaled by the spacing, and
/// distances wrap around the circumference `N·a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry")]
pub struct Geometry {
    topology: Topology,
    positions: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGeometry {
    topology: Topology,
    positions: Vec<f64>,
}

impl TryFrom<RawGeometry> for Geometry {
    type Error = Error;

    fn try_from(raw: RawGeometry) -> Result<Self> {
        match raw.topology {
            Topology::Chain => Geometry::chain(raw.positions),
            Topology::Ring => Geometry::ring_with_positions(raw.positions),
        }
    }
}

impl Geometry {
    /// Chain with unit spacing: positions `0, 1, …, n-1`.
    pub fn uniform_chain(n: usize) -> Result<Self> {
        Self::chain((0..n).map(|j| j as f64).collect())
    }

    /// Uniform chain of `n` spins spanning `length` (spacing `length / (n-1)`).
    pub fn uniform_chain_with_length(n: usize, length: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGeometry(format!("a chain needs at least 2 spins, got {n}")));
        }
        let a = length / (n - 1) as f64;
        Self::chain((0..n).map(|j| j as f64 * a).collect())
    }

    pub fn chain(positions: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidGeometry(format!("a chain needs at least 2 spins, got {}", positions.len())));
        }
        if let Some(bad) = positions.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry(format!("non-finite position {bad}")));
        }
        for (k, w) in positions.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::InvalidGeometry(format!(
                    "positions must be strictly increasing (sites {} and {}: {} then {})",
                    k + 1,
                    k + 2,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(Geometry { topology: Topology::Chain, positions })
    }

    /// Uniform ring of `n ≥ 3` sites with unit spacing.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGeometry(format!("a ring needs at least 3 spins, got {n}")));
        }
        Ok(Geometry { topology: Topology::Ring, positions: (0..n).map(|j| j as f64).collect() })
    }

    fn ring_with_positions(positions: Vec<f64>) -> Result<Self> {
        let n = positions.len();
        if n < 3 {
            return Err(Error::InvalidGeometry(format!("a ring needs at least 3 spins, got {n}")));
        }
        let a = positions[1] - positions[0];
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidGeometry("ring spacing must be positive".into()));
        }
        for (k, p) in positions.iter().enumerate() {
            let expected = positions[0] + k as f64 * a;
            if (p - expected).abs() > 1e-9 * a.max(expected.abs()) {
                return Err(Error::InvalidGeometry(format!(
                    "ring positions must be uniform; site {} is at {p}, expected {expected}",
                    k + 1
                )));
            }
        }
        Ok(Geometry { topology: Topology::Ring, positions })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Mean nearest-neighbour spacing.
    pub fn spacing(&self) -> f64 {
        match self.topology {
            Topology::Chain => self.length() / (self.len() - 1) as f64,
            Topology::Ring => self.positions[1] - self.positions[0],
        }
    }

    pub fn min_gap(&self) -> f64 {
        match self.topology {
            Topology::Chain => self.positions.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min),
            Topology::Ring => self.spacing(),
        }
    }

    /// End-to-end length `L` for chains, circumference `N·a` for rings.
    pub fn length(&self) -> f64 {
        match self.topology {
            Topology::Chain => self.positions[self.len() - 1] - self.positions[0],
            Topology::Ring => self.len() as f64 * self.spacing(),
        }
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Whether the placement is symmetric under reversal about its midpoint.
    pub fn is_mirror_symmetric(&self) -> bool {
        let n = self.len();
        let p = &self.positions;
        let span = p[n - 1] + p[0];
        let scale = p[n - 1].abs().max(p[0].abs()).max(self.length());
        (0..n / 2).all(|k| (p[k] + p[n - 1 - k] - span).abs() <= MIRROR_TOL * scale)
    }

    /// Uniformly rescale every position by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Domain(format!("scale factor must be positive, got {s}")));
        }
        let positions = self.positions.iter().map(|p| p * s).collect();
        match self.topology {
            Topology::Chain => Self::chain(positions),
            Topology::Ring => Self::ring_with_positions(positions),
        }
    }

    /// Distance between sites `i` and `j` (0-based). Minimal-image on rings.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match self.topology {
            Topology::Chain => (self.positions[j] - self.positions[i]).abs(),
            Topology::Ring => {
                let n = self.len();
                let d = i.abs_diff(j);
                d.min(n - d) as f64 * self.spacing()
            }
        }
    }

    /// Nearest-neighbour bonds (index distance 1, wrapping on rings).
    fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        match self.topology {
            Topology::Chain => (0..n - 1).map(|i| (i, i + 1)).collect(),
            Topology::Ring => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingModel {
    /// Long-range magnetic dipole coupling between every pair.
    #[serde(rename = "dipole")]
    Dipole,
    /// Isotropic Heisenberg exchange between nearest neighbours only.
    #[serde(rename = "nn")]
    NearestNeighbour,
}

impl fmt::Display for CouplingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingModel::Dipole => "dipole",
            CouplingModel::NearestNeighbour => "nn",
        })
    }
}

impl FromStr for CouplingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dipole" => Ok(CouplingModel::Dipole),
            "nn" | "nearest-neighbour" => Ok(CouplingModel::NearestNeighbour),
            other => Err(Error::Domain(format!("unknown coupling model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub model: CouplingModel,
    /// Dipole constant `C` (energy × length³).
    pub c: f64,
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling { model: CouplingModel::Dipole, c: 2.0 }
    }
}

impl Coupling {
    pub fn dipole() -> Self {
        Self::default()
    }

    pub fn nearest_neighbour() -> Self {
        Coupling { model: CouplingModel::NearestNeighbour, c: 2.0 }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.c.is_finite() && self.c > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("coupling constant must be positive, got {}", self.c)))
        }
    }

    /// Pair interaction `C / (2 d³)`, the flip-flop amplitude at distance `d`.
    pub fn pair_energy(&self, d: f64) -> f64 {
        self.c / (2.0 * d * d * d)
    }
}

/// Hamiltonian restricted to the single-flip block, with the energy of the
/// unflipped state kept separately.
#[derive(Clone, Debug)]
pub struct ExcitationHamiltonian {
    matrix: DMatrix<f64>,
    ground_energy: f64,
    geometry: Geometry,
    coupling: Coupling,
}

impl ExcitationHamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// On-site flip energies `⟨j|H|j⟩`.
    pub fn onsite_energies(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    /// Add `shift · I`; used to check that dynamics ignore constant offsets.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for j in 0..out.dim() {
            out.matrix[(j, j)] += shift;
        }
        out.ground_energy += shift;
        out
    }
}

/// Build the Hamiltonian for either topology.
pub fn build_hamiltonian(geometry: &Geometry, coupling: &Coupling) -> Result<ExcitationHamiltonian> {
    coupling.validate()?;
    let matrix_and_ground = match coupling.model {
        CouplingModel::Dipole => dipole_elements(geometry, coupling),
        CouplingModel::NearestNeighbour => heisenberg_elements(geometry, coupling),
    };
    let (matrix, ground_energy) = matrix_and_ground;
    Ok(ExcitationHamiltonian { matrix, ground_energy, geometry: geometry.clone(), coupling: *coupling })
}

pub fn build_chain_hamiltonian(geometry: &Geometry, coupling: &Coupling) -> Result<ExcitationHamiltonian> {
    if geometry.topology() != Topology::Chain {
        return Err(Error::InvalidGeometry("expected a chain geometry".into()));
    }
    build_hamiltonian(geometry, coupling)
}

pub fn build_ring_hamiltonian(n: usize, coupling: &Coupling) -> Result<ExcitationHamiltonian> {
    build_hamiltonian(&Geometry::ring(n)?, coupling)
}

/// Distance table in which a pair and its mirror image share one computed
/// value when the chain is mirror-symmetric, so the matrix inherits the
/// reflection symmetry bit for bit.
fn distance_table(geometry: &Geometry) -> DMatrix<f64> {
    let n = geometry.len();
    let mirror = geometry.topology() == Topology::Chain && geometry.is_mirror_symmetric();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        if mirror {
            let (mlo, mhi) = (n - 1 - hi, n - 1 - lo);
            if (mlo, mhi) < (lo, hi) {
                return geometry.distance(mlo, mhi);
            }
        }
        geometry.distance(lo, hi)
    })
}

/// Sum `f(j, i)` over `i ≠ j`, pairing the sites at equal index offset on
/// either side so that mirrored sites accumulate identical terms.
fn symmetric_site_sum(n: usize, j: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut total = 0.0;
    for k in 1..n {
        let left = if j >= k { f(j - k) } else { 0.0 };
        let right = if j + k < n { f(j + k) } else { 0.0 };
        total += left + right;
    }
    total
}

/// Sum over the other sites of a ring in order of increasing offset, so every
/// site accumulates the same sequence of terms.
fn ring_site_sum(n: usize, j: usize, f: impl Fn(usize) -> f64) -> f64 {
    (1..n).map(|k| f((j + k) % n)).sum()
}

fn dipole_elements(geometry: &Geometry, coupling: &Coupling) -> (DMatrix<f64>, f64) {
    let n = geometry.len();
    let dist = distance_table(geometry);
    let pair = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { coupling.pair_energy(dist[(i, j)]) });

    // Every pair k<l contributes -C/(2 d³) to the unflipped energy.
    let mut ground = 0.0;
    for k in 0..n {
        for l in k + 1..n {
            ground -= pair[(k, l)];
        }
    }

    let mut matrix = pair.clone();
    for j in 0..n {
        // Flipping spin j reverses the sign of each of its longitudinal terms.
        let raise = match geometry.topology() {
            Topology::Chain => symmetric_site_sum(n, j, |i| 2.0 * pair[(j, i)]),
            Topology::Ring => ring_site_sum(n, j, |i| 2.0 * pair[(j, i)]),
        };
        matrix[(j, j)] = ground + raise;
    }
    (matrix, ground)
}

/// Single-flip block of `-(J/2) Σ σ_i·σ_j` over nearest-neighbour bonds, with
/// `J = C/(2d³)` so the hopping magnitude matches the dipole model.
fn heisenberg_elements(geometry: &Geometry, coupling: &Coupling) -> (DMatrix<f64>, f64) {
    let n = geometry.len();
    let dist = distance_table(geometry);
    let mut exchange = DMatrix::<f64>::zeros(n, n);
    for (i, j) in geometry.bonds() {
        let jb = coupling.pair_energy(dist[(i, j)]);
        exchange[(i, j)] = jb;
        exchange[(j, i)] = jb;
    }

    let mut ground = 0.0;
    for k in 0..n {
        for l in k + 1..n {
            ground -= 0.5 * exchange[(k, l)];
        }
    }

    let mut matrix = -exchange.clone();
    for j in 0..n {
        let raise = match geometry.topology() {
            Topology::Chain => symmetric_site_sum(n, j, |i| exchange[(j, i)]),
            Topology::Ring => ring_site_sum(n, j, |i| exchange[(j, i)]),
        };
        matrix[(j, j)] = ground + raise;
    }
    (matrix, ground)
}

/// Analytic Bloch energies of a uniform ring, measured from the common
/// on-site constant, for `m = 0, …, n-1` with `k_m a = 2πm/n`.
///
/// For even `n` the antipodal shell `j = n/2` is a single site and carries
/// half weight in the symmetric sum.
pub fn ring_bloch_energies(n: usize, coupling: &Coupling) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidGeometry(format!("a ring needs at least 3 spins, got {n}")));
    }
    coupling.validate()?;
    let c = coupling.c;
    let energies = (0..n)
        .map(|m| {
            let k = 2.0 * PI * m as f64 / n as f64;
            match coupling.model {
                CouplingModel::Dipole => {
                    let mut e = 0.0;
                    for j in 1..=n / 2 {
                        let weight = if 2 * j == n { 0.5 } else { 1.0 };
                        let jf = j as f64;
                        e += weight * (k * jf).cos() / (jf * jf * jf);
                    }
                    c * e
                }
                // Hopping -J with J = C/2 between neighbours; on a triangle
                // every pair is a neighbour, which the cosine already covers.
                CouplingModel::NearestNeighbour => -c * k.cos(),
            }
        })
        .collect();
    Ok(energies)
}
