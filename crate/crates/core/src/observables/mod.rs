//! Phase-space symbols `A(z)` and exact expectation references.

mod polynomial;
mod reference;

use std::fmt;
use std::sync::Arc;

pub use polynomial::{normal_central_moment, normal_raw_moment, Monomial, PolynomialSymbol, TermSpec};
pub use reference::{reference_expectation_grid, DEFAULT_REFERENCE_RESOLUTION};

use crate::error::{Error, Result};
use crate::phase::PhasePoint;
use crate::state::{GaussianState, SemiclassicalParam};

/// Which half of phase space an observable depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    PositionOnly,
    MomentumOnly,
    /// Depends on neither (constants).
    Neither,
    Mixed,
}

impl Side {
    fn join(self, other: Side) -> Side {
        use Side::*;
        match (self, other) {
            (Neither, s) | (s, Neither) => s,
            (a, b) if a == b => a,
            _ => Mixed,
        }
    }
}

/// A factor of a separable term acting on one plane `(q_j, p_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlaneFactor {
    Monomial { q: u32, p: u32 },
    CosQ,
}

impl PlaneFactor {
    #[inline]
    pub fn eval(self, q: f64, p: f64) -> f64 {
        match self {
            PlaneFactor::Monomial { q: a, p: b } => q.powi(a as i32) * p.powi(b as i32),
            PlaneFactor::CosQ => q.cos(),
        }
    }

    fn side(self) -> Side {
        match self {
            PlaneFactor::Monomial { q: 0, p: 0 } => Side::Neither,
            PlaneFactor::Monomial { q: _, p: 0 } | PlaneFactor::CosQ => Side::PositionOnly,
            PlaneFactor::Monomial { q: 0, p: _ } => Side::MomentumOnly,
            PlaneFactor::Monomial { .. } => Side::Mixed,
        }
    }
}

/// `coeff · Π_j f_j(q_j, p_j)` with unlisted planes contributing `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableTerm {
    pub coeff: f64,
    pub factors: Vec<(usize, PlaneFactor)>,
}

/// A sum of plane-separable terms, used by the factorized quadratures.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparableSymbol {
    pub terms: Vec<SeparableTerm>,
}

impl SeparableSymbol {
    pub fn from_polynomial(poly: &PolynomialSymbol, d: usize) -> Self {
        let terms = poly
            .terms()
            .iter()
            .map(|(c, m)| {
                let mut planes: Vec<(usize, u32, u32)> = Vec::new();
                for &(v, e) in m.factors() {
                    let (j, is_q) = if v < d { (v, true) } else { (v - d, false) };
                    match planes.iter_mut().find(|(pj, _, _)| *pj == j) {
                        Some(slot) if is_q => slot.1 += e,
                        Some(slot) => slot.2 += e,
                        None if is_q => planes.push((j, e, 0)),
                        None => planes.push((j, 0, e)),
                    }
                }
                SeparableTerm {
                    coeff: *c,
                    factors: planes
                        .into_iter()
                        .map(|(j, q, p)| (j, PlaneFactor::Monomial { q, p }))
                        .collect(),
                }
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, z: &PhasePoint) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.factors
                        .iter()
                        .map(|&(j, f)| {
                            let (q, p) = z.plane(j);
                            f.eval(q, p)
                        })
                        .product::<f64>()
            })
            .sum()
    }

    pub fn side(&self) -> Side {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().map(|&(_, f)| f.side()))
            .fold(Side::Neither, Side::join)
    }

    pub fn max_plane(&self) -> Option<usize> {
        self.terms.iter().flat_map(|t| t.factors.iter().map(|&(j, _)| j)).max()
    }
}

type Evaluator = Arc<dyn Fn(&PhasePoint) -> f64 + Send + Sync>;

/// An evaluable phase-space symbol with optional structured representations.
#[derive(Clone)]
pub struct Observable {
    label: String,
    dim: usize,
    evaluator: Evaluator,
    polynomial: Option<PolynomialSymbol>,
    separable: Option<SeparableSymbol>,
    side: Side,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("polynomial", &self.polynomial)
            .field("side", &self.side)
            .finish()
    }
}

impl Observable {
    /// An opaque symbol; `side` is trusted as declared.
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        side: Side,
        f: impl Fn(&PhasePoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            dim,
            evaluator: Arc::new(f),
            polynomial: None,
            separable: None,
            side,
        }
    }

    pub fn from_separable(label: impl Into<String>, dim: usize, sym: SeparableSymbol) -> Self {
        let side = sym.side();
        let for_eval = sym.clone();
        Self {
            label: label.into(),
            dim,
            evaluator: Arc::new(move |z| for_eval.eval(z)),
            polynomial: None,
            separable: Some(sym),
            side,
        }
    }

    pub fn from_polynomial(label: impl Into<String>, dim: usize, poly: PolynomialSymbol) -> Result<Self> {
        if poly.required_vars() > 2 * dim {
            return Err(Error::usage(format!(
                "polynomial uses {} variables but phase space has {}",
                poly.required_vars(),
                2 * dim
            )));
        }
        let sep = SeparableSymbol::from_polynomial(&poly, dim);
        let side = sep.side();
        let for_eval = poly.clone();
        Ok(Self {
            label: label.into(),
            dim,
            evaluator: Arc::new(move |z| for_eval.eval(z)),
            polynomial: Some(poly),
            separable: Some(sep),
            side,
        })
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_polynomial(format!("constant({c})"), dim, PolynomialSymbol::constant(c))
            .expect("constant polynomial fits any dimension")
    }

    #[inline]
    pub fn eval(&self, z: &PhasePoint) -> f64 {
        (self.evaluator)(z)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn polynomial(&self) -> Option<&PolynomialSymbol> {
        self.polynomial.as_ref()
    }

    pub fn separable(&self) -> Option<&SeparableSymbol> {
        self.separable.as_ref()
    }

    pub fn side(&self) -> Side {
        self.side
    }
}

/// `2 - cos(q_1) - cos(q_2)`.
pub fn torsional_potential(d: usize) -> Result<Observable> {
    if d < 2 {
        return Err(Error::usage(format!("torsional potential needs d >= 2, got {d}")));
    }
    let sym = SeparableSymbol {
        terms: vec![
            SeparableTerm { coeff: 2.0, factors: vec![] },
            SeparableTerm { coeff: -1.0, factors: vec![(0, PlaneFactor::CosQ)] },
            SeparableTerm { coeff: -1.0, factors: vec![(1, PlaneFactor::CosQ)] },
        ],
    };
    let mut obs = Observable::from_separable("torsional", d, sym);
    obs.evaluator = Arc::new(|z: &PhasePoint| 2.0 - z.q()[0].cos() - z.q()[1].cos());
    Ok(obs)
}

fn momentum_square(d: usize) -> PolynomialSymbol {
    PolynomialSymbol::new((0..d).map(|j| (1.0, Monomial::var(d + j, 2))))
}

/// `|p|⁴ = (Σ_j p_j²)²`.
pub fn quartic_momentum(d: usize) -> Result<Observable> {
    if d < 1 {
        return Err(Error::usage("quartic momentum needs d >= 1"));
    }
    let p2 = momentum_square(d);
    Observable::from_polynomial("quartic-momentum", d, p2.mul(&p2))
}

/// `q_1³ - 3 q_1 q_2² + q_2` (or `q_1³ + q_1` for `d = 1`): a position-only
/// cubic used as the exactness control in accuracy sweeps.
pub fn cubic_control(d: usize) -> Result<Observable> {
    if d < 1 {
        return Err(Error::usage("cubic control needs d >= 1"));
    }
    let q1 = Monomial::var(0, 1);
    let poly = if d == 1 {
        PolynomialSymbol::new([(1.0, Monomial::var(0, 3)), (1.0, q1)])
    } else {
        PolynomialSymbol::new([
            (1.0, Monomial::var(0, 3)),
            (-3.0, q1.mul(&Monomial::var(1, 2))),
            (1.0, Monomial::var(1, 1)),
        ])
    };
    Observable::from_polynomial("cubic-control", d, poly)
}

pub const HENON_HEILES_ALPHA: f64 = 1.8436;
pub const HENON_HEILES_H: f64 = 0.0037;
pub const HENON_HEILES_Q: f64 = 0.3645;

/// Hénon–Heiles Hamiltonian `½|p|² + Σ q_j²/2 + α Σ_{j<d} (q_j² q_{j+1} - q_{j+1}³/3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HenonHeilesSpec {
    pub d: usize,
    pub alpha: f64,
    pub h: SemiclassicalParam,
}

impl HenonHeilesSpec {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::usage(format!("Henon-Heiles needs d >= 2, got {d}")));
        }
        Ok(Self {
            d,
            alpha: HENON_HEILES_ALPHA,
            h: SemiclassicalParam::new(HENON_HEILES_H)?,
        })
    }

    /// The benchmark packet: `q_j = 0.3645`, `p = (1, 0, ..., 0)`.
    pub fn initial_state(&self) -> GaussianState {
        let mut p = vec![0.0; self.d];
        p[0] = 1.0;
        let center = PhasePoint::new(vec![HENON_HEILES_Q; self.d], p).expect("d >= 2");
        GaussianState::coherent(self.h, center)
    }

    pub fn kinetic_symbol(&self) -> PolynomialSymbol {
        momentum_square(self.d).scale(0.5)
    }

    pub fn potential_symbol(&self) -> PolynomialSymbol {
        let d = self.d;
        let a = self.alpha;
        let harmonic = (0..d).map(|j| (0.5, Monomial::var(j, 2)));
        let coupling = (0..d - 1).flat_map(move |j| {
            [
                (a, Monomial::var(j, 2).mul(&Monomial::var(j + 1, 1))),
                (-a / 3.0, Monomial::var(j + 1, 3)),
            ]
        });
        PolynomialSymbol::new(harmonic.chain(coupling))
    }
}

/// Kinetic and potential energy observables.
pub fn henon_heiles_energy(spec: &HenonHeilesSpec) -> Result<(Observable, Observable)> {
    if spec.d < 2 {
        return Err(Error::usage("Henon-Heiles needs d >= 2"));
    }
    let kinetic = Observable::from_polynomial("hh-kinetic", spec.d, spec.kinetic_symbol())?;
    let potential = Observable::from_polynomial("hh-potential", spec.d, spec.potential_symbol())?;
    Ok((kinetic, potential))
}

pub fn henon_heiles_total(spec: &HenonHeilesSpec) -> Result<Observable> {
    let sym = spec.kinetic_symbol().add(&spec.potential_symbol());
    Observable::from_polynomial("hh-total", spec.d, sym)
}

pub const OBSERVABLE_LABELS: [&str; 6] = [
    "torsional",
    "quartic-momentum",
    "cubic-control",
    "hh-kinetic",
    "hh-potential",
    "hh-total",
];

/// Resolves a CLI label in dimension `d`; Hénon–Heiles symbols use `alpha`.
pub fn observable_by_label(label: &str, d: usize, alpha: f64) -> Result<Observable> {
    let hh = |d| -> Result<HenonHeilesSpec> {
        let mut spec = HenonHeilesSpec::new(d)?;
        spec.alpha = alpha;
        Ok(spec)
    };
    match label {
        "torsional" => torsional_potential(d),
        "quartic-momentum" => quartic_momentum(d),
        "cubic-control" => cubic_control(d),
        "hh-kinetic" => Ok(henon_heiles_energy(&hh(d)?)?.0),
        "hh-potential" => Ok(henon_heiles_energy(&hh(d)?)?.1),
        "hh-total" => henon_heiles_total(&hh(d)?),
        other => Err(Error::usage(format!(
            "unknown observable '{other}'; available: {}",
            OBSERVABLE_LABELS.join(", ")
        ))),
    }
}

/// `∫ A W_{g_z}` for a single packet: the Wigner function is Gaussian with
/// mean `z` and covariance `(h/2) Id`, so each monomial factorizes into
/// one-dimensional normal moments. The branch coefficient drops out: the
/// result is the expectation in the normalized state.
pub fn weyl_expectation_gaussian(poly: &PolynomialSymbol, state: &GaussianState) -> Result<f64> {
    if !state.is_single() {
        return Err(Error::Unsupported(
            "moment formula needs a single-branch state; use the grid reference".into(),
        ));
    }
    if poly.required_vars() > 2 * state.dim() {
        return Err(Error::usage("polynomial has more variables than the state's phase space"));
    }
    let center = &state.branches()[0].center;
    Ok(poly.gaussian_expectation(center, 0.5 * state.h()))
}
