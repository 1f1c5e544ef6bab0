//! Reference constructions sharing no code with the library.

use dipolink::ExcitationHamiltonian;
use num_complex::Complex64;

pub type C = Complex64;

fn pauli() -> [[C; 4]; 3] {
    let z = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    [[z, one, one, z], [z, -i, i, z], [one, z, z, -one]]
}

/// Dense `2^n × 2^n` operator `σ_a^i σ_a^j` (row-major), site 0 the most
/// significant factor.
pub fn pair_operator(n: usize, i: usize, j: usize, a: usize) -> Vec<C> {
    let sig = pauli()[a];
    let id = [C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
    let mut m = vec![C::new(1.0, 0.0)];
    let mut dim = 1;
    for k in 0..n {
        let f = if k == i || k == j { sig } else { id };
        let nd = dim * 2;
        let mut next = vec![C::new(0.0, 0.0); nd * nd];
        for r in 0..dim {
            for c in 0..dim {
                let v = m[r * dim + c];
                if v == C::new(0.0, 0.0) {
                    continue;
                }
                for fr in 0..2 {
                    for fc in 0..2 {
                        next[(2 * r + fr) * nd + 2 * c + fc] = v * f[2 * fr + fc];
                    }
                }
            }
        }
        m = next;
        dim = nd;
    }
    m
}

/// Full Hamiltonian `Σ_{i<j} (C/r³)[S_i·S_j − 3 S_i^z S_j^z]` with `S = σ/2`.
pub fn full_dipole(positions: &[f64], c: f64) -> Vec<C> {
    let n = positions.len();
    let dim = 1 << n;
    let mut h = vec![C::new(0.0, 0.0); dim * dim];
    for i in 0..n {
        for j in i + 1..n {
            let r = (positions[j] - positions[i]).abs();
            let k = c / r.powi(3) / 4.0;
            for (a, w) in [(0, k), (1, k), (2, k - 3.0 * k)] {
                for (x, y) in h.iter_mut().zip(pair_operator(n, i, j, a)) {
                    *x += w * y;
                }
            }
        }
    }
    h
}

/// Full nearest-neighbour Heisenberg Hamiltonian `−(J/2) Σ σ_i·σ_{i+1}`.
pub fn full_heisenberg(n: usize, j: f64) -> Vec<C> {
    let dim = 1 << n;
    let mut h = vec![C::new(0.0, 0.0); dim * dim];
    for i in 0..n - 1 {
        for a in 0..3 {
            for (x, y) in h.iter_mut().zip(pair_operator(n, i, i + 1, a)) {
                *x += -0.5 * j * y;
            }
        }
    }
    h
}

/// Basis index with only site `k` flipped (σ_z = −1 is bit value 1).
pub fn one_flip(n: usize, k: usize) -> usize {
    1 << (n - 1 - k)
}

/// `i dψ/dt = Hψ` by classical RK4.
pub fn rk4_amplitude(h: &nalgebra::DMatrix<f64>, from: usize, to: usize, times: &[f64], dt: f64) -> Vec<f64> {
    let n = h.nrows();
    let shift = (0..n).map(|i| h[(i, i)]).sum::<f64>() / n as f64;
    let m: Vec<f64> = (0..n * n).map(|k| h[(k / n, k % n)] - if k / n == k % n { shift } else { 0.0 }).collect();
    let deriv = |psi: &[C]| -> Vec<C> {
        (0..n)
            .map(|r| {
                let s: C = (0..n).map(|c| psi[c] * m[r * n + c]).sum();
                C::new(s.im, -s.re)
            })
            .collect()
    };
    let mut psi = vec![C::new(0.0, 0.0); n];
    psi[from] = C::new(1.0, 0.0);
    let mut t = 0.0;
    let mut out = Vec::new();
    for &target in times {
        let steps = ((target - t) / dt).round() as usize;
        let h_step = (target - t) / steps as f64;
        for _ in 0..steps {
            let k1 = deriv(&psi);
            let y2: Vec<C> = psi.iter().zip(&k1).map(|(p, k)| p + k * (0.5 * h_step)).collect();
            let k2 = deriv(&y2);
            let y3: Vec<C> = psi.iter().zip(&k2).map(|(p, k)| p + k * (0.5 * h_step)).collect();
            let k3 = deriv(&y3);
            let y4: Vec<C> = psi.iter().zip(&k3).map(|(p, k)| p + k * h_step).collect();
            let k4 = deriv(&y4);
            for i in 0..n {
                psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h_step / 6.0);
            }
        }
        t = target;
        out.push(psi[to].norm());
    }
    out
}

/// Largest disagreement between the one-flip block of `full` and `h`,
/// including any coupling between magnetization sectors and the ground level.
pub fn block_deviation(full: &[C], h: &ExcitationHamiltonian) -> f64 {
    let n = h.dim();
    let dim = 1 << n;
    let mut worst = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            if (r as u32).count_ones() != (c as u32).count_ones() {
                worst = worst.max(full[r * dim + c].norm());
            }
        }
    }
    worst = worst.max((full[0].re - h.ground_energy()).abs());
    for i in 0..n {
        for j in 0..n {
            let v = full[one_flip(n, i) * dim + one_flip(n, j)];
            worst = worst.max(v.im.abs()).max((v.re - h.matrix()[(i, j)]).abs());
        }
    }
    worst
}
