//! Tensor-grid trapezoid quadrature of `∫ A · density` over phase space.
//!
//! Every density of a Gaussian superposition is a sum over branch pairs of
//! products of per-plane factors, and separable symbols are sums of products
//! of per-plane functions. The trapezoid sum over the full `2d`-dimensional
//! tensor grid therefore equals a combination of 2D trapezoid sums over each
//! plane `(q_j, p_j)`, which is what is evaluated here.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::observables::{PlaneFactor, SeparableSymbol};
use crate::state::GaussianState;

pub const DEFAULT_POINTS_PER_AXIS: usize = 160;
pub const DEFAULT_RADIUS_SDS: f64 = 12.0;

/// Per-plane grid: `points_per_axis²` nodes covering the branch hull plus
/// `radius_sds · √h` in each of `q_j`, `p_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub points_per_axis: usize,
    pub radius_sds: f64,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self {
            points_per_axis: DEFAULT_POINTS_PER_AXIS,
            radius_sds: DEFAULT_RADIUS_SDS,
        }
    }
}

/// Unnormalized integrals of one symbol against each density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityIntegrals {
    pub husimi: f64,
    pub hermite_mixture: f64,
    pub mu: f64,
    /// `None` when the grid cannot resolve the Wigner interference fringes.
    pub wigner: Option<f64>,
}

struct PlaneGrid {
    q: Vec<f64>,
    p: Vec<f64>,
    wq: Vec<f64>,
    wp: Vec<f64>,
}

impl PlaneGrid {
    fn node_count(&self) -> usize {
        self.q.len() * self.p.len()
    }

    fn node(&self, idx: usize) -> (f64, f64, f64) {
        let n = self.p.len();
        let (i, k) = (idx / n, idx % n);
        (self.q[i], self.p[k], self.wq[i] * self.wp[k])
    }

    fn spacing(&self) -> f64 {
        (self.q[1] - self.q[0]).max(self.p[1] - self.p[0])
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let step = (hi - lo) / (n - 1) as f64;
    let xs = (0..n).map(|i| lo + i as f64 * step).collect();
    let ws = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * step } else { step })
        .collect();
    (xs, ws)
}

/// Per-pair, per-node complex weights on one plane.
struct PairKernels {
    /// `conj(G_k) G_l` (Gaussian-window transforms).
    gauss: Vec<Complex64>,
    /// `conj(G_k) G_l conj(ζ_k) ζ_l` (Hermite-window transforms without `1/2h`).
    hermite: Vec<Complex64>,
    /// Per-plane factor of the cross Wigner function `W(g_k, g_l)`.
    wigner: Vec<Complex64>,
}

fn pair_kernels(grid: &PlaneGrid, zk: (f64, f64), zl: (f64, f64), h: f64) -> PairKernels {
    let n = grid.node_count();
    let mut gauss = Vec::with_capacity(n);
    let mut hermite = Vec::with_capacity(n);
    let mut wigner = Vec::with_capacity(n);
    let (mq, mp) = (0.5 * (zk.0 + zl.0), 0.5 * (zk.1 + zl.1));
    let (dq, dp) = (zk.0 - zl.0, zk.1 - zl.1);
    let constant = 0.5 * (zk.0 * zl.1 - zk.1 * zl.0);
    for idx in 0..n {
        let (a, b, _) = grid.node(idx);
        let gk = window(a, b, zk, h);
        let gl = window(a, b, zl, h);
        let g = gk.conj() * gl;
        let zeta_k = Complex64::new(zk.0 - a, zk.1 - b);
        let zeta_l = Complex64::new(zl.0 - a, zl.1 - b);
        gauss.push(g);
        hermite.push(g * zeta_k.conj() * zeta_l);
        let r2 = (a - mq) * (a - mq) + (b - mp) * (b - mp);
        let phase = (constant - (dq * b - dp * a)) / h;
        wigner.push(Complex64::from_polar((-r2 / h).exp() / (PI * h), phase));
    }
    PairKernels { gauss, hermite, wigner }
}

/// Per-plane factor of `<g_w, g_z>`.
#[inline]
fn window(a: f64, b: f64, z: (f64, f64), h: f64) -> Complex64 {
    let r2 = (a - z.0) * (a - z.0) + (b - z.1) * (b - z.1);
    Complex64::from_polar((-r2 / (4.0 * h)).exp(), (a * z.1 - b * z.0) / (2.0 * h))
}

/// Integrates a separable symbol against the Husimi function, the Hermite
/// mixture, μ and (when resolvable) the Wigner function of `state`.
pub fn integrate_densities(
    state: &GaussianState,
    sym: &SeparableSymbol,
    grid: PhaseGrid,
) -> Result<DensityIntegrals> {
    let d = state.dim();
    let h = state.h();
    if grid.points_per_axis < 3 {
        return Err(Error::usage("phase grid needs at least 3 points per axis"));
    }
    if let Some(j) = sym.max_plane() {
        if j >= d {
            return Err(Error::DimensionMismatch { expected: d, found: j + 1 });
        }
    }
    let branches = state.branches();
    let nb = branches.len();
    let radius = grid.radius_sds * h.sqrt();

    let planes: Vec<PlaneGrid> = (0..d)
        .map(|j| {
            let (mut qlo, mut qhi, mut plo, mut phi) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for b in branches {
                let (q, p) = b.center.plane(j);
                qlo = qlo.min(q);
                qhi = qhi.max(q);
                plo = plo.min(p);
                phi = phi.max(p);
            }
            let (q, wq) = axis(qlo - radius, qhi + radius, grid.points_per_axis);
            let (p, wp) = axis(plo - radius, phi + radius, grid.points_per_axis);
            PlaneGrid { q, p, wq, wp }
        })
        .collect();

    // Wigner fringes oscillate with wavenumber |z_k - z_l|/h under an envelope of width √(h/2)
    let spacing = planes.iter().map(PlaneGrid::spacing).fold(0.0, f64::max);
    let mut wigner_resolved = true;
    for k in 0..nb {
        for l in k + 1..nb {
            let sep = branches[k].center.dist2(&branches[l].center).sqrt();
            let nyquist = 2.0 * PI / spacing;
            let margin = nyquist - sep / h;
            if margin <= 0.0 || margin * margin * h / 4.0 < 40.0 {
                wigner_resolved = false;
            }
        }
    }

    // kernels[k][l][j]
    let kernels: Vec<Vec<Vec<PairKernels>>> = (0..nb)
        .map(|k| {
            (0..nb)
                .map(|l| {
                    (0..d)
                        .map(|j| {
                            pair_kernels(
                                &planes[j],
                                branches[k].center.plane(j),
                                branches[l].center.plane(j),
                                h,
                            )
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let one = PlaneFactor::Monomial { q: 0, p: 0 };
    let mut husimi = Complex64::new(0.0, 0.0);
    let mut hermite = Complex64::new(0.0, 0.0);
    let mut wigner = Complex64::new(0.0, 0.0);
    for term in &sym.terms {
        let factors: Vec<PlaneFactor> = (0..d)
            .map(|j| {
                term.factors
                    .iter()
                    .filter(|(pj, _)| *pj == j)
                    .map(|&(_, f)| f)
                    .next()
                    .unwrap_or(one)
            })
            .collect();
        if (0..d).any(|j| term.factors.iter().filter(|(pj, _)| *pj == j).count() > 1) {
            return Err(Error::usage("separable term lists a plane more than once"));
        }
        let fvals: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let g = &planes[j];
                (0..g.node_count())
                    .map(|idx| {
                        let (a, b, w) = g.node(idx);
                        w * factors[j].eval(a, b)
                    })
                    .collect()
            })
            .collect();
        let dotc = |f: &[f64], v: &[Complex64]| -> Complex64 {
            f.iter().zip(v).map(|(&x, &y)| y * x).sum()
        };
        for k in 0..nb {
            for l in 0..nb {
                let ker = &kernels[k][l];
                let lg: Vec<Complex64> = (0..d).map(|j| dotc(&fvals[j], &ker[j].gauss)).collect();
                let lh: Vec<Complex64> = (0..d).map(|j| dotc(&fvals[j], &ker[j].hermite)).collect();
                let coeff = branches[k].coeff.conj() * branches[l].coeff * term.coeff;
                let prod_g: Complex64 = lg.iter().product();
                husimi += coeff * prod_g;
                let mut sum_s = Complex64::new(0.0, 0.0);
                for jj in 0..d {
                    let mut p = lh[jj];
                    for (j, v) in lg.iter().enumerate() {
                        if j != jj {
                            p *= v;
                        }
                    }
                    sum_s += p;
                }
                hermite += coeff * sum_s;
                if wigner_resolved {
                    let lw: Complex64 = (0..d).map(|j| dotc(&fvals[j], &ker[j].wigner)).product();
                    wigner += branches[k].coeff * branches[l].coeff.conj() * term.coeff * lw;
                }
            }
        }
    }
    let norm = (2.0 * PI * h).powi(-(d as i32));
    let husimi = norm * husimi.re;
    let hermite_sum = norm / (2.0 * h) * hermite.re;
    Ok(DensityIntegrals {
        husimi,
        hermite_mixture: hermite_sum / d as f64,
        mu: (1.0 + 0.5 * d as f64) * husimi - 0.5 * hermite_sum,
        wigner: wigner_resolved.then_some(wigner.re),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{husimi, mu, wigner, CrossTermPolicy};
    use crate::observables::{quartic_momentum, torsional_potential, Observable, PolynomialSymbol, Monomial};
    use crate::phase::PhasePoint;
    use crate::state::{state_norm2, Branch, SemiclassicalParam};
    use crate::testing::{two_branch_state, trapezoid_2d};

    fn pt(q: &[f64], p: &[f64]) -> PhasePoint {
        PhasePoint::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn matches_pointwise_grid_in_d1() {
        // brute 2D trapezoid of A·density against the pointwise evaluators
        let h = 0.2;
        let s = GaussianState::new(
            SemiclassicalParam::new(h).unwrap(),
            vec![
                Branch { coeff: Complex64::new(1.0, 0.0), center: pt(&[-0.2], &[0.3]) },
                Branch { coeff: Complex64::new(0.3, 0.6), center: pt(&[0.4], &[-0.1]) },
            ],
        )
        .unwrap();
        let poly = PolynomialSymbol::new([
            (1.0, Monomial::var(0, 2)),
            (0.5, Monomial::var(1, 3)),
            (-2.0, Monomial::var(0, 1).mul(&Monomial::var(1, 1))),
        ]);
        let obs = Observable::from_polynomial("a", 1, poly).unwrap();
        let n = 161;
        let r = 12.0 * h.sqrt();
        let grid = PhaseGrid { points_per_axis: n, radius_sds: 12.0 };
        let got = integrate_densities(&s, obs.separable().unwrap(), grid).unwrap();
        let (lo, hi) = ((-0.2 - r, -0.1 - r), (0.4 + r, 0.3 + r));
        let brute = |f: &dyn Fn(&PhasePoint) -> f64| {
            trapezoid_2d(|x, y| {
                let w = pt(&[x], &[y]);
                obs.eval(&w) * f(&w)
            }, lo, hi, n)
        };
        let bh = brute(&|w| husimi(&s, w).unwrap());
        let bm = brute(&|w| mu(&s, w, CrossTermPolicy::exact()).unwrap());
        let bw = brute(&|w| wigner(&s, w).unwrap());
        assert!((got.husimi - bh).abs() < 1e-12 * bh.abs().max(1.0));
        assert!((got.mu - bm).abs() < 1e-12 * bm.abs().max(1.0));
        assert!((got.wigner.unwrap() - bw).abs() < 1e-12 * bw.abs().max(1.0));
    }

    #[test]
    fn constant_integrates_to_norm() {
        let s = two_branch_state(0.1);
        let one = Observable::constant(2, 1.0);
        let got = integrate_densities(&s, one.separable().unwrap(), PhaseGrid::default()).unwrap();
        let n2 = state_norm2(&s);
        assert!((got.husimi - n2).abs() < 1e-10);
        assert!((got.hermite_mixture - n2).abs() < 1e-10);
        assert!((got.mu - n2).abs() < 1e-10);
    }

    #[test]
    fn wigner_integral_is_exact_expectation() {
        let h = 0.1;
        let s = two_branch_state(h);
        let grid = PhaseGrid { points_per_axis: 400, radius_sds: 12.0 };
        for obs in [torsional_potential(2).unwrap(), quartic_momentum(2).unwrap()] {
            let got = integrate_densities(&s, obs.separable().unwrap(), grid).unwrap();
            let side = obs.side();
            let exact = crate::observables::reference_expectation_grid(&s, &obs, side, 2048).unwrap();
            assert!((got.wigner.unwrap() - exact).abs() < 1e-9, "{} {exact}", got.wigner.unwrap());
        }
        // fringes unresolved at small h on the default grid
        let s = two_branch_state(0.001);
        let t = torsional_potential(2).unwrap();
        let got = integrate_densities(&s, t.separable().unwrap(), PhaseGrid::default()).unwrap();
        assert!(got.wigner.is_none());
    }
}
