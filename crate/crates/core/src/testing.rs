//! Quadrature oracles and fixtures shared by unit tests. These are kept
//! independent of the library's own evaluation paths.

use num_complex::Complex64;

use crate::phase::PhasePoint;
use crate::state::{GaussianState, SemiclassicalParam};

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    // split into panels so narrow peaks are not missed by the first estimate
    let panels = 64;
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * w, a + (i + 1) as f64 * w);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            rec(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

pub fn adaptive_simpson_complex<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Complex64 {
    let re = adaptive_simpson(&|x| f(x).re, a, b, tol);
    let im = adaptive_simpson(&|x| f(x).im, a, b, tol);
    Complex64::new(re, im)
}

/// Trapezoid rule on a uniform 2D grid of `n x n` nodes over `[lo, hi]²`.
pub fn trapezoid_2d<F: Fn(f64, f64) -> f64>(f: F, lo: (f64, f64), hi: (f64, f64), n: usize) -> f64 {
    let hx = (hi.0 - lo.0) / (n - 1) as f64;
    let hy = (hi.1 - lo.1) / (n - 1) as f64;
    let mut total = 0.0;
    for i in 0..n {
        let wx = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let x = lo.0 + i as f64 * hx;
        for k in 0..n {
            let wy = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            total += wx * wy * f(x, lo.1 + k as f64 * hy);
        }
    }
    total * hx * hy
}

/// The two-branch state `g_{z1} + g_{z2}` with `z1 = (-1,1,1,1)`, `z2 = (0,1,-1,-1/2)`.
pub fn two_branch_state(h: f64) -> GaussianState {
    GaussianState::superposition(
        SemiclassicalParam::new(h).unwrap(),
        PhasePoint::new(vec![-1.0, 1.0], vec![1.0, 1.0]).unwrap(),
        PhasePoint::new(vec![0.0, 1.0], vec![-1.0, -0.5]).unwrap(),
    )
    .unwrap()
}
