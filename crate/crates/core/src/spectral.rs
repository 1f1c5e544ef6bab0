//! Eigendecomposition and time evolution in the single-flip block.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::ExcitationHamiltonian;
use crate::output::Table;

const MAX_SWEEPS: usize = 100;
const CONVERGENCE_RTOL: f64 = 1e-12;
/// Components within this relative margin of the largest count as tied when
/// fixing eigenvector signs.
const SIGN_TIE_RTOL: f64 = 1e-9;
/// Overshoot of `|f|` past 1 that is attributed to rounding and clamped.
const ABS_OVERSHOOT: f64 = 1e-9;

/// Ascending eigenvalues with orthonormal eigenvectors stored column-wise.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector `m` as a plain vector.
    pub fn eigenvector(&self, m: usize) -> Vec<f64> {
        self.eigenvectors.column(m).iter().copied().collect()
    }

    /// `E₁ − E₀`, the gap between the two lowest levels.
    pub fn lowest_gap(&self) -> Option<f64> {
        (self.dim() >= 2).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }

    /// `V · diag(E) · Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        v * d * v.transpose()
    }
}

pub fn decompose(h: &ExcitationHamiltonian) -> Result<SpectralDecomposition> {
    decompose_matrix(h.matrix())
}

/// Cyclic Jacobi diagonalization of a dense symmetric matrix.
///
/// Sweeps rotate every `(p, q)` pair in row order until the off-diagonal
/// Frobenius norm falls below `1e-12 · ‖A‖_F`.
pub fn decompose_matrix(matrix: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Shape { expected: n, actual: matrix.ncols() });
    }
    if let Some(bad) = matrix.iter().find(|x| !x.is_finite()) {
        return Err(Error::NumericInput(format!("matrix contains {bad}")));
    }
    for i in 0..n {
        for j in i + 1..n {
            if matrix[(i, j)] != matrix[(j, i)] {
                return Err(Error::NumericInput(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut a = matrix.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = a.norm();
    let threshold = CONVERGENCE_RTOL * norm;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::Convergence { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[(r, p)];
                    let h = a[(r, q)];
                    let new_rp = g - s * (h + g * tau);
                    let new_rq = h + s * (g - h * tau);
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
                for r in 0..n {
                    let g = v[(r, p)];
                    let h = v[(r, q)];
                    v[(r, p)] = g - s * (h + g * tau);
                    v[(r, q)] = h + s * (g - h * tau);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (m, &i) in order.iter().enumerate() {
        let mut col: Vec<f64> = v.column(i).iter().copied().collect();
        fix_sign(&mut col);
        eigenvectors.set_column(m, &nalgebra::DVector::from_vec(col));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Make the largest-magnitude component positive, lowest index winning ties.
fn fix_sign(col: &mut [f64]) {
    let max = col.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(lead) = col.iter().find(|x| x.abs() >= max * (1.0 - SIGN_TIE_RTOL)) {
        if *lead < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// A normalized state in the single-flip basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteState {
    #[serde(serialize_with = "serialize_complex")]
    amplitudes: Vec<Complex64>,
}

fn serialize_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl SiteState {
    /// `|site⟩` for a 0-based site index.
    pub fn localized(n: usize, site: usize) -> Result<Self> {
        if site >= n {
            return Err(Error::Domain(format!("site {} outside 1..={n}", site + 1)));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Ok(SiteState { amplitudes })
    }

    /// Takes amplitudes that must already have unit norm (within 1e-12).
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !norm2.is_finite() || (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("state norm² is {norm2}, expected 1")));
        }
        Ok(SiteState { amplitudes })
    }

    /// Rescales real amplitudes to unit norm.
    pub fn normalized_real(amplitudes: &[f64]) -> Result<Self> {
        let norm = amplitudes.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain("cannot normalize a zero or non-finite state".into()));
        }
        Ok(SiteState { amplitudes: amplitudes.iter().map(|x| Complex64::new(x / norm, 0.0)).collect() })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SiteState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Site-reversed copy: amplitude of site `j` moves to `N-1-j`.
    pub fn mirrored(&self) -> SiteState {
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.reverse();
        SiteState { amplitudes }
    }
}

/// Averaged transfer fidelity for a given `|f|`.
pub fn fidelity(f_abs: f64) -> Result<f64> {
    if !(0.0..=1.0 + ABS_OVERSHOOT).contains(&f_abs) {
        return Err(Error::Domain(format!("|f| = {f_abs} outside [0, 1]")));
    }
    Ok(fidelity_clamped(f_abs))
}

fn fidelity_clamped(f_abs: f64) -> f64 {
    let f = f_abs.clamp(0.0, 1.0);
    f / 3.0 + f * f / 6.0 + 0.5
}

/// Transition amplitude `⟨output| e^{-iHt} |input⟩` expanded in eigenmodes.
#[derive(Clone, Debug)]
pub struct Propagator {
    energies: Vec<f64>,
    weights: Vec<Complex64>,
}

/// Grid points evaluated by the phase recurrence before re-seeding from exact
/// exponentials.
const RESYNC_EVERY: usize = 256;

impl Propagator {
    pub fn new(spec: &SpectralDecomposition, input: &SiteState, output: &SiteState) -> Result<Self> {
        let n = spec.dim();
        for state in [input, output] {
            if state.dim() != n {
                return Err(Error::Shape { expected: n, actual: state.dim() });
            }
        }
        let v = spec.eigenvectors();
        let weights = (0..n)
            .map(|m| {
                let out_m: Complex64 = output.amplitudes().iter().enumerate().map(|(j, c)| c.conj() * v[(j, m)]).sum();
                let m_in: Complex64 = input.amplitudes().iter().enumerate().map(|(j, c)| c * v[(j, m)]).sum();
                out_m * m_in
            })
            .collect();
        Ok(Propagator { energies: spec.eigenvalues().to_vec(), weights })
    }

    /// Weight `⟨output|m⟩⟨m|input⟩` of each eigenmode.
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.weights.iter().zip(&self.energies).map(|(w, e)| w * Complex64::from_polar(1.0, -e * t)).sum()
    }

    pub fn fidelity(&self, t: f64) -> f64 {
        fidelity_clamped(self.amplitude(t).norm())
    }

    /// `d|f|²/dt`, which has the sign of `dF/dt`.
    pub fn slope(&self, t: f64) -> f64 {
        let (f, df) = self.weights.iter().zip(&self.energies).fold(
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            |(f, df), (w, e)| {
                let term = w * Complex64::from_polar(1.0, -e * t);
                (f + term, df + term * Complex64::new(0.0, -e))
            },
        );
        2.0 * (f.conj() * df).re
    }

    /// Spread of eigenvalues carrying non-negligible weight; sets the fastest
    /// oscillation in `F(t)`.
    pub fn bandwidth(&self) -> f64 {
        let wmax = self.weights.iter().fold(0.0_f64, |m, w| m.max(w.norm()));
        let active = self.energies.iter().zip(&self.weights).filter(|(_, w)| w.norm() > 1e-14 * wmax);
        let (lo, hi) = active.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (e, _)| (lo.min(*e), hi.max(*e)));
        if hi > lo {
            hi - lo
        } else {
            0.0
        }
    }

    /// `F(t0 + k·dt)` for `k = 0..count`, evaluated in fixed-size blocks in
    /// parallel. Each block starts from exact phases and advances them by
    /// complex rotation, so results do not depend on the thread count.
    pub fn sample_fidelity(&self, t0: f64, dt: f64, count: usize) -> Vec<f64> {
        let steps: Vec<Complex64> = self.energies.iter().map(|e| Complex64::from_polar(1.0, -e * dt)).collect();
        let blocks = count.div_ceil(RESYNC_EVERY);
        (0..blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let start = b * RESYNC_EVERY;
                let end = (start + RESYNC_EVERY).min(count);
                let t_start = t0 + start as f64 * dt;
                let mut phases: Vec<Complex64> = self
                    .weights
                    .iter()
                    .zip(&self.energies)
                    .map(|(w, e)| w * Complex64::from_polar(1.0, -e * t_start))
                    .collect();
                let mut out = Vec::with_capacity(end - start);
                for _ in start..end {
                    let f: Complex64 = phases.iter().sum();
                    out.push(fidelity_clamped(f.norm()));
                    for (p, s) in phases.iter_mut().zip(&steps) {
                        *p *= s;
                    }
                }
                out.into_iter()
            })
            .collect()
    }
}

/// `⟨output| e^{-iHt} |input⟩` at a single time.
pub fn propagator(spec: &SpectralDecomposition, input: &SiteState, output: &SiteState, t: f64) -> Result<Complex64> {
    Ok(Propagator::new(spec, input, output)?.amplitude(t))
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Free-form description of the system (geometry, coupling, endpoints).
    pub metadata: Vec<(String, String)>,
}

impl FidelityCurve {
    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_table(&self) -> Table {
        let mut table = Table::new(["t", "F"]);
        for (t, f) in self.times.iter().zip(&self.values) {
            table.push([*t, *f]);
        }
        table
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_csv()
    }
}

/// `F(t)` on the uniform grid `t_k = k · t_max / (n_steps - 1)`.
pub fn fidelity_curve(
    spec: &SpectralDecomposition,
    input: &SiteState,
    output: &SiteState,
    t_max: f64,
    n_steps: usize,
) -> Result<FidelityCurve> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    if n_steps < 2 {
        return Err(Error::Domain(format!("need at least 2 time steps, got {n_steps}")));
    }
    let prop = Propagator::new(spec, input, output)?;
    let dt = t_max / (n_steps - 1) as f64;
    let times: Vec<f64> = (0..n_steps).map(|k| k as f64 * dt).collect();
    let values = times.par_iter().map(|&t| prop.fidelity(t)).collect();
    Ok(FidelityCurve { times, values, metadata: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain_hamiltonian, Coupling, Geometry};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn chain(n: usize) -> ExcitationHamiltonian {
        build_chain_hamiltonian(&Geometry::uniform_chain(n).unwrap(), &Coupling::dipole()).unwrap()
    }

    #[test]
    fn two_by_two_analytic() {
        let spec = decompose(&chain(2)).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.eigenvalues()[1], 2.0, epsilon = 1e-15);
        let v0 = spec.eigenvector(0);
        let v1 = spec.eigenvector(1);
        assert_abs_diff_eq!(v0[0], FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(v0[1], -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(v1[0], FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(v1[1], FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn identity_is_already_diagonal() {
        let spec = decompose_matrix(&DMatrix::identity(5, 5)).unwrap();
        assert!(spec.eigenvalues().iter().all(|&e| e == 1.0));
        assert_eq!(spec.eigenvectors(), &DMatrix::<f64>::identity(5, 5));
    }

    #[test]
    fn ten_spin_reconstruction() {
        let h = chain(10);
        let spec = decompose(&h).unwrap();
        let residual = (spec.reconstruct() - h.matrix()).abs().max();
        assert!(residual < 1e-10, "residual {residual:e}");
        let v = spec.eigenvectors();
        let ortho = (v.transpose() * v - DMatrix::<f64>::identity(10, 10)).abs().max();
        assert!(ortho < 1e-10);
        assert!(spec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_finite_and_asymmetric() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(decompose_matrix(&m), Err(Error::NumericInput(_))));
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = 1.0;
        assert!(matches!(decompose_matrix(&m), Err(Error::NumericInput(_))));
    }

    #[test]
    fn sign_convention_makes_leading_component_positive() {
        let spec = decompose(&chain(7)).unwrap();
        for m in 0..7 {
            let col = spec.eigenvector(m);
            let max = col.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            let lead = col.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap();
            assert!(*lead > 0.0);
        }
    }

    #[test]
    fn fidelity_formula() {
        assert_eq!(fidelity(1.0).unwrap(), 1.0);
        assert_eq!(fidelity(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(fidelity(0.5).unwrap(), 0.5 / 3.0 + 0.25 / 6.0 + 0.5, epsilon = 1e-15);
        assert_eq!(fidelity(1.0 + 1e-12).unwrap(), 1.0);
        assert!(matches!(fidelity(1.0 + 1e-6), Err(Error::Domain(_))));
        assert!(matches!(fidelity(-0.1), Err(Error::Domain(_))));
        assert!(fidelity(f64::NAN).is_err());
    }

    #[test]
    fn propagator_at_time_zero() {
        let spec = decompose(&chain(5)).unwrap();
        let a = SiteState::localized(5, 0).unwrap();
        let b = SiteState::localized(5, 4).unwrap();
        assert_abs_diff_eq!(propagator(&spec, &a, &a, 0.0).unwrap().re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(propagator(&spec, &a, &b, 0.0).unwrap().norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn slope_matches_finite_difference() {
        let h = chain(6);
        let spec = decompose(&h).unwrap();
        let p =
            Propagator::new(&spec, &SiteState::localized(6, 0).unwrap(), &SiteState::localized(6, 5).unwrap()).unwrap();
        for t in [0.3, 7.0, 41.5] {
            let eps = 1e-5;
            let fd = (p.amplitude(t + eps).norm_sqr() - p.amplitude(t - eps).norm_sqr()) / (2.0 * eps);
            assert_abs_diff_eq!(p.slope(t), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn two_level_transfer_is_sine() {
        let spec = decompose(&chain(2)).unwrap();
        let a = SiteState::localized(2, 0).unwrap();
        let b = SiteState::localized(2, 1).unwrap();
        assert_abs_diff_eq!(propagator(&spec, &a, &b, PI / 2.0).unwrap().norm(), 1.0, epsilon = 1e-14);
        let curve = fidelity_curve(&spec, &a, &b, 10.0, 501).unwrap();
        for (t, f) in curve.times.iter().zip(&curve.values) {
            assert_abs_diff_eq!(*f, fidelity(t.sin().abs()).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let spec = decompose(&chain(3)).unwrap();
        let a = SiteState::localized(4, 0).unwrap();
        assert!(matches!(Propagator::new(&spec, &a, &a), Err(Error::Shape { expected: 3, actual: 4 })));
    }

    #[test]
    fn sampled_grid_matches_direct_evaluation() {
        let spec = decompose(&chain(9)).unwrap();
        let prop =
            Propagator::new(&spec, &SiteState::localized(9, 0).unwrap(), &SiteState::localized(9, 8).unwrap()).unwrap();
        let dt = 0.37;
        let fast = prop.sample_fidelity(1.0, dt, 2000);
        for (k, f) in fast.iter().enumerate() {
            assert_abs_diff_eq!(*f, prop.fidelity(1.0 + k as f64 * dt), epsilon = 1e-11);
        }
    }

    #[test]
    fn curve_validates_arguments() {
        let spec = decompose(&chain(3)).unwrap();
        let a = SiteState::localized(3, 0).unwrap();
        assert!(fidelity_curve(&spec, &a, &a, 0.0, 10).is_err());
        assert!(fidelity_curve(&spec, &a, &a, 1.0, 1).is_err());
        let c = fidelity_curve(&spec, &a, &SiteState::localized(3, 2).unwrap(), 5.0, 11).unwrap();
        assert_eq!(c.values[0], 0.5);
        assert_eq!(c.times[10], 5.0);
        assert!(c.to_csv().starts_with("t,F\n"));
    }
}
