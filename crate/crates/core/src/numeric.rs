//! Bracketing root search and golden-section maximization on `[0, 1]`.

/// Sign-change roots of a function sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RootScan {
    pub roots: Vec<f64>,
    /// Sign of the function just above `x = 0` (`0.0` if it vanishes on the whole grid).
    pub initial_sign: f64,
}

/// Samples `f` on `cells + 1` equispaced points of `[0, 1]`, brackets every
/// sign change and refines each bracket by bisection until its width drops
/// below `tol`. A grid point where `f` is exactly zero counts as a root only
/// when its neighbours have opposite signs.
pub(crate) fn scan_roots<F: Fn(f64) -> f64>(f: F, cells: usize, tol: f64) -> RootScan {
    let grid: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();

    let initial_sign = values
        .iter()
        .find(|v| **v != 0.0)
        .map(|v| v.signum())
        .unwrap_or(0.0);

    let mut roots = Vec::new();
    for i in 0..cells {
        let (lo, hi) = (values[i], values[i + 1]);
        if lo * hi < 0.0 {
            roots.push(bisect(&f, grid[i], grid[i + 1], lo, tol));
        } else if hi == 0.0 && lo != 0.0 && i + 2 <= cells {
            // Exact zero on an interior grid point: a crossing if the next
            // nonzero sample has the opposite sign.
            if let Some(next) = values[i + 2..].iter().find(|v| **v != 0.0) {
                if lo * next < 0.0 {
                    roots.push(grid[i + 1]);
                }
            }
        }
    }
    RootScan {
        roots,
        initial_sign,
    }
}

/// Bisection on a bracket with `f(lo)` of sign `f_lo`; stops when the bracket
/// is narrower than `tol` or cannot be split further.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, f_lo: f64, tol: f64) -> f64 {
    let sign_lo = f_lo.signum();
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
        if b <= a {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}
