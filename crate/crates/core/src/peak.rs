//! Global maximum of a smooth oscillatory signal on a finite window.
//!
//! A dense uniform grid locates candidate maxima; each of the tallest
//! candidates is polished by golden-section search inside its grid bracket.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
    /// Exact value at the best grid point, before refinement.
    pub coarse_max: f64,
    /// The maximum sits on the right edge of the window with the signal still
    /// rising, so the true peak probably lies beyond it.
    pub at_boundary: bool,
}

/// Maximize `f` on `[a, b]` to an interval width of `tol`.
///
/// Returns the best point seen, which is never worse than either bracket
/// endpoint's interior probe.
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if x1 == x2 {
            break;
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Find the global maximum given grid samples `samples[k] = f(k·dt)`.
///
/// `refine` limits how many of the tallest local maxima are polished. Among
/// refined maxima whose value lies within `tie_tol` of the best, the earliest
/// is reported.
pub fn refine_global_max(
    f: impl Fn(f64) -> f64,
    samples: &[f64],
    dt: f64,
    time_tol: f64,
    refine: usize,
    tie_tol: f64,
) -> Peak {
    assert!(samples.len() >= 2, "need at least two samples");
    let last = samples.len() - 1;
    let t_end = last as f64 * dt;

    let mut candidates: Vec<usize> = (0..=last)
        .filter(|&k| {
            let left = k == 0 || samples[k] >= samples[k - 1];
            let right = k == last || samples[k] >= samples[k + 1];
            left && right
        })
        .collect();
    candidates.sort_by(|&i, &j| samples[j].total_cmp(&samples[i]).then(i.cmp(&j)));
    candidates.truncate(refine.max(1));

    let best_grid = candidates[0];
    let coarse_max = f(best_grid as f64 * dt);

    let refined: Vec<(usize, f64, f64)> = candidates
        .iter()
        .map(|&k| {
            let tk = k as f64 * dt;
            let fk = f(tk);
            let a = if k == 0 { 0.0 } else { (k - 1) as f64 * dt };
            let b = if k == last { t_end } else { (k + 1) as f64 * dt };
            let (t, v) = golden_section_max(&f, a, b, time_tol);
            if v >= fk {
                (k, t, v)
            } else {
                (k, tk, fk)
            }
        })
        .collect();

    let value = refined.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let (k, time, value) = refined
        .iter()
        .filter(|r| r.2 >= value - tie_tol)
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|r| (r.0, r.1, r.2))
        .expect("at least one candidate");
    let at_boundary = k == last && samples[last] > samples[last - 1];
    Peak { time, value, coarse_max, at_boundary }
}

/// Root of a function changing sign from positive at `a` to negative at `b`,
/// by bisection to the floating-point resolution of the bracket.
pub fn bisect_descending(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    if !(g(a) > 0.0 && g(b) < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm > 0.0 {
            a = mid;
        } else if gm < 0.0 {
            b = mid;
        } else {
            return Some(mid);
        }
    }
    Some(0.5 * (a + b))
}
