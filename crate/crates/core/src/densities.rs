//! Phase-space densities of Gaussian superpositions.
//!
//! Spectrograms are evaluated through the short-time transform: for a window
//! `φ` translated to `w`, `S^φ_ψ(w) = (2πh)^{-d} |<T_w φ, ψ>|²`. For the
//! Gaussian window this is the Husimi function; for the first order Hermite
//! window in plane `j`, `<T_w φ_j, g_z> = (ζ_j / √(2h)) <g_w, g_z>` where
//! `ζ_j = (q_j - w_{q,j}) + i (p_j - w_{p,j})`.
//!
//! The corrected density is `μ = (1 + d/2) H - ½ Σ_j S_j`. For a superposition
//! it splits into per-branch terms plus pair terms
//!
//! ```text
//! μ_ψ = Σ_k |c_k|² μ_{g_k} + Σ_{k<l} |c_k c_l| e^{-|z_k - z_l|²/8h} c_{k,l}
//! c_{k,l}(w) = -(2πh)^{-d}/(2h) e^{-|w - z_+|²/2h}
//!              × [ (P - 2h(2+d)) cos θ - Q sin θ ]
//! ```
//!
//! with `P = (w-z_k)·(w-z_l)`, `Q = (w-z_k)·Ω(w-z_l)` and
//! `θ = (z_k - z_l)·Ωw / 2h + arg(conj(c_k) c_l)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::phase::{symplectic_product_unchecked, PhasePoint};
use crate::state::{overlap_unchecked, GaussianState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityKind {
    Wigner,
    Husimi,
    /// First order Hermite spectrogram for plane `j` (zero based).
    HermiteSpectrogram(usize),
    /// `(1/d) Σ_j S^{φ_j}`.
    HermiteMixture,
    Mu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossTermMode {
    Exact,
    NeglectBelowThreshold,
}

/// Controls whether interference terms between branches are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossTermPolicy {
    pub mode: CrossTermMode,
    pub threshold: f64,
}

pub const DEFAULT_CROSS_THRESHOLD: f64 = 1e-14;

impl CrossTermPolicy {
    pub fn exact() -> Self {
        Self {
            mode: CrossTermMode::Exact,
            threshold: DEFAULT_CROSS_THRESHOLD,
        }
    }

    pub fn neglect() -> Self {
        Self {
            mode: CrossTermMode::NeglectBelowThreshold,
            threshold: DEFAULT_CROSS_THRESHOLD,
        }
    }

    pub fn neglect_below(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::usage("cross-term threshold must be non-negative"));
        }
        Ok(Self {
            mode: CrossTermMode::NeglectBelowThreshold,
            threshold,
        })
    }

    /// Whether the pair with centers `a`, `b` contributes under this policy.
    pub fn keeps(&self, a: &PhasePoint, b: &PhasePoint, h: f64) -> bool {
        match self.mode {
            CrossTermMode::Exact => true,
            CrossTermMode::NeglectBelowThreshold => cross_damping(a, b, h) >= self.threshold,
        }
    }
}

impl Default for CrossTermPolicy {
    fn default() -> Self {
        Self::exact()
    }
}

/// The prefactor `exp(-|a - b|²/8h)` multiplying the μ cross term.
pub fn cross_damping(a: &PhasePoint, b: &PhasePoint, h: f64) -> f64 {
    (-a.dist2(b) / (8.0 * h)).exp()
}

fn check_state(state: &GaussianState, w: &PhasePoint) -> Result<()> {
    check_dim(state.dim(), w.dim())
}

/// Short-time transform of the state with the Gaussian window and with each
/// first order Hermite window, all translated to `w`.
struct WindowAmplitudes {
    gaussian: Complex64,
    hermite: Vec<Complex64>,
}

fn window_amplitudes(state: &GaussianState, w: &PhasePoint) -> WindowAmplitudes {
    let h = state.h();
    let d = state.dim();
    let inv = 1.0 / (2.0 * h).sqrt();
    let mut gaussian = Complex64::new(0.0, 0.0);
    let mut hermite = vec![Complex64::new(0.0, 0.0); d];
    for b in state.branches() {
        let a = b.coeff * overlap_unchecked(w, &b.center, h);
        gaussian += a;
        for (j, slot) in hermite.iter_mut().enumerate() {
            let (q, p) = b.center.plane(j);
            let (wq, wp) = w.plane(j);
            *slot += a * Complex64::new(q - wq, p - wp) * inv;
        }
    }
    WindowAmplitudes { gaussian, hermite }
}

#[inline]
fn spectrogram_norm(h: f64, d: usize) -> f64 {
    (2.0 * PI * h).powi(-(d as i32))
}

/// Wigner function of a single packet: `(πh)^{-d} e^{-|w - z|²/h}`.
pub fn wigner_coherent(z: &PhasePoint, h: f64, w: &PhasePoint) -> f64 {
    (PI * h).powi(-(z.dim() as i32)) * (-w.dist2(z) / h).exp()
}

/// Cross Wigner function `W(g_a, g_b)(w)`, linear in `g_a`, antilinear in `g_b`:
/// `(πh)^{-d} e^{-|w - z_+|²/h} exp(i/h [ a·Ωb/2 - (a - b)·Ωw ])`.
pub fn cross_wigner(a: &PhasePoint, b: &PhasePoint, h: f64, w: &PhasePoint) -> Complex64 {
    let mid = a.midpoint(b);
    let modulus = (PI * h).powi(-(a.dim() as i32)) * (-w.dist2(&mid) / h).exp();
    let phase = 0.5 * symplectic_product_unchecked(a, b) - symplectic_product_unchecked(&a.sub(b), w);
    Complex64::from_polar(modulus, phase / h)
}

pub fn wigner(state: &GaussianState, w: &PhasePoint) -> Result<f64> {
    check_state(state, w)?;
    let h = state.h();
    let bs = state.branches();
    let mut total = 0.0;
    for (k, bk) in bs.iter().enumerate() {
        total += bk.coeff.norm_sqr() * wigner_coherent(&bk.center, h, w);
        for bl in &bs[k + 1..] {
            let cross = cross_wigner(&bk.center, &bl.center, h, w);
            total += 2.0 * (bk.coeff * bl.coeff.conj() * cross).re;
        }
    }
    Ok(total)
}

pub fn husimi(state: &GaussianState, w: &PhasePoint) -> Result<f64> {
    check_state(state, w)?;
    let h = state.h();
    let amp: Complex64 = state
        .branches()
        .iter()
        .map(|b| b.coeff * overlap_unchecked(w, &b.center, h))
        .sum();
    Ok(spectrogram_norm(h, state.dim()) * amp.norm_sqr())
}

/// First order Hermite spectrogram `S^{φ_j}_ψ(w)`, with `plane` zero based.
pub fn hermite_spectrogram(state: &GaussianState, plane: usize, w: &PhasePoint) -> Result<f64> {
    check_state(state, w)?;
    let d = state.dim();
    if plane >= d {
        return Err(Error::usage(format!("plane index {plane} out of range for d = {d}")));
    }
    let amps = window_amplitudes(state, w);
    Ok(spectrogram_norm(state.h(), d) * amps.hermite[plane].norm_sqr())
}

/// The mixture `(1/d) Σ_j S^{φ_j}_ψ(w)`.
pub fn hermite_mixture(state: &GaussianState, w: &PhasePoint) -> Result<f64> {
    check_state(state, w)?;
    let d = state.dim();
    let amps = window_amplitudes(state, w);
    let sum: f64 = amps.hermite.iter().map(|a| a.norm_sqr()).sum();
    Ok(spectrogram_norm(state.h(), d) * sum / d as f64)
}

/// μ from the spectrogram combination `(1 + d/2) H - ½ Σ_j S_j`.
pub fn mu_combination(state: &GaussianState, w: &PhasePoint) -> Result<f64> {
    check_state(state, w)?;
    let d = state.dim();
    let amps = window_amplitudes(state, w);
    let hermite_sum: f64 = amps.hermite.iter().map(|a| a.norm_sqr()).sum();
    let weight = 1.0 + 0.5 * d as f64;
    Ok(spectrogram_norm(state.h(), d) * (weight * amps.gaussian.norm_sqr() - 0.5 * hermite_sum))
}

/// μ of a single normalized packet:
/// `(2πh)^{-d} (1 + d/2 - |w - z|²/4h) e^{-|w - z|²/2h}`.
pub fn mu_coherent(z: &PhasePoint, h: f64, w: &PhasePoint) -> f64 {
    let d = z.dim();
    let r2 = w.dist2(z);
    spectrogram_norm(h, d) * (1.0 + 0.5 * d as f64 - r2 / (4.0 * h)) * (-r2 / (2.0 * h)).exp()
}

/// Undamped interference term `c_{k,l}(w)` of μ for unit coefficients; the
/// full pair contribution is `cross_damping(a, b, h) * mu_cross_term(...)`.
pub fn mu_cross_term(a: &PhasePoint, b: &PhasePoint, h: f64, w: &PhasePoint) -> f64 {
    mu_cross_term_phased(a, b, h, w, 0.0)
}

fn mu_cross_term_phased(a: &PhasePoint, b: &PhasePoint, h: f64, w: &PhasePoint, shift: f64) -> f64 {
    let d = a.dim();
    let mid = a.midpoint(b);
    let (wa, wb) = (w.sub(a), w.sub(b));
    let parallel = wa.dot(&wb);
    let twisted = symplectic_product_unchecked(&wa, &wb);
    let theta = symplectic_product_unchecked(&a.sub(b), w) / (2.0 * h) + shift;
    let envelope = spectrogram_norm(h, d) * (-w.dist2(&mid) / (2.0 * h)).exp();
    -envelope / (2.0 * h)
        * ((parallel - 2.0 * h * (2.0 + d as f64)) * theta.cos() - twisted * theta.sin())
}

/// μ from the closed-form branch and pair terms, honoring the cross-term policy.
pub fn mu(state: &GaussianState, w: &PhasePoint, policy: CrossTermPolicy) -> Result<f64> {
    check_state(state, w)?;
    let h = state.h();
    let bs = state.branches();
    let mut total = 0.0;
    for (k, bk) in bs.iter().enumerate() {
        total += bk.coeff.norm_sqr() * mu_coherent(&bk.center, h, w);
        for bl in &bs[k + 1..] {
            if !policy.keeps(&bk.center, &bl.center, h) {
                continue;
            }
            let c = bk.coeff.conj() * bl.coeff;
            let damping = cross_damping(&bk.center, &bl.center, h);
            total += c.norm()
                * damping
                * mu_cross_term_phased(&bk.center, &bl.center, h, w, c.arg());
        }
    }
    Ok(total)
}

/// `ΔH_ψ = (2/h) Σ_j S_j - (2d/h) H`.
pub fn laplacian_husimi(state: &GaussianState, w: &PhasePoint) -> Result<f64> {
    check_state(state, w)?;
    let h = state.h();
    let d = state.dim();
    let amps = window_amplitudes(state, w);
    let hermite_sum: f64 = amps.hermite.iter().map(|a| a.norm_sqr()).sum();
    Ok(spectrogram_norm(h, d)
        * (2.0 / h * hermite_sum - 2.0 * d as f64 / h * amps.gaussian.norm_sqr()))
}

/// Evaluates any density kind, using exact cross terms for μ.
pub fn density(kind: DensityKind, state: &GaussianState, w: &PhasePoint) -> Result<f64> {
    match kind {
        DensityKind::Wigner => wigner(state, w),
        DensityKind::Husimi => husimi(state, w),
        DensityKind::HermiteSpectrogram(j) => hermite_spectrogram(state, j, w),
        DensityKind::HermiteMixture => hermite_mixture(state, w),
        DensityKind::Mu => mu(state, w, CrossTermPolicy::exact()),
    }
}
