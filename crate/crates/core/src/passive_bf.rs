//! RIS phase design for a fixed transmit beamformer.
//!
//! Every link's composite gain is linear in the augmented phase vector
//! `φ̄ = [1, φ]`, so each received power becomes `Tr(E Θ)` with
//! `Θ = φ̄ φ̄^H`. Dropping `rank(Θ) = 1` leaves a smooth convex program over
//! the elliptope `{Θ ⪰ 0, diag(Θ) = 1}` once the two concave log terms are
//! majorized through the weights `eps4`, `eps5`. A feasible phase vector is
//! recovered from the relaxed solution by Gaussian randomization.

use std::f64::consts::LN_2;

use log::debug;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{
    gaussian_factor, hermitian_eig, psd_project, sample_with_factor, trace_product, CMatrix,
    CVector, HermitianMatrix,
};
use crate::rates::{evaluate, BeamformingState, ReflectionCoefficients};

/// Allowed deviation of `diag(Θ)` from one.
pub const DIAG_TOL: f64 = 1e-6;
/// Most negative eigenvalue tolerated in a returned `Θ`.
pub const MIN_EIG_TOL: f64 = -1e-7;
/// `λ₂/λ₁` below which `Θ` is treated as rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;

const DYKSTRA_MAX_ITER: usize = 100;
const DYKSTRA_TOL: f64 = 1e-10;
const SMALL_DECREASE_STREAK: usize = 5;

/// Stacked composites `M_i` (one row per receive antenna, `L + 1` columns)
/// and their Gram matrices `E_i = M_i^H M_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedEMatrices {
    /// BS → user through direct path and RIS: `[h_bu^H w, h_iu^H diag(H_bi w)]`.
    pub m_bi_u: CMatrix,
    /// Jammer → user: `[g_eu^H v, h_iu^H diag(G_ei v)]`.
    pub m_ei_u: CMatrix,
    /// BS → eavesdropper: `[H_be w, H_ie diag(H_bi w)]`.
    pub m_bi_e: CMatrix,
    /// Jammer → eavesdropper via the RIS: `[0, H_ie diag(G_ei v)]`.
    pub m_ei_ei: CMatrix,
    pub e_bi_u: HermitianMatrix,
    pub e_ei_u: HermitianMatrix,
    pub e_bi_e: HermitianMatrix,
    pub e_ei_ei: HermitianMatrix,
}

impl LiftedEMatrices {
    pub fn dim(&self) -> usize {
        self.e_bi_u.dim()
    }

    fn from_composites(
        m_bi_u: CMatrix,
        m_ei_u: CMatrix,
        m_bi_e: CMatrix,
        m_ei_ei: CMatrix,
    ) -> Self {
        Self {
            e_bi_u: HermitianMatrix::gram(&m_bi_u),
            e_ei_u: HermitianMatrix::gram(&m_ei_u),
            e_bi_e: HermitianMatrix::gram(&m_bi_e),
            e_ei_ei: HermitianMatrix::gram(&m_ei_ei),
            m_bi_u,
            m_ei_u,
            m_bi_e,
            m_ei_ei,
        }
    }

    /// Traces `Tr(E_i Θ)` in the order (BIu, eIu, BIe, eIeI).
    pub fn traces(&self, theta: &HermitianMatrix) -> Result<LiftedTraces> {
        Ok(LiftedTraces {
            bi_u: trace_product(&self.e_bi_u, theta)?,
            ei_u: trace_product(&self.e_ei_u, theta)?,
            bi_e: trace_product(&self.e_bi_e, theta)?,
            ei_ei: trace_product(&self.e_ei_ei, theta)?,
        })
    }

    /// Traces at a rank-one lift `φ̄ φ̄^H`, via `‖M_i φ̄‖²`.
    pub fn traces_rank_one(&self, phi_bar: &CVector) -> LiftedTraces {
        LiftedTraces {
            bi_u: (&self.m_bi_u * phi_bar).norm_squared(),
            ei_u: (&self.m_ei_u * phi_bar).norm_squared(),
            bi_e: (&self.m_bi_e * phi_bar).norm_squared(),
            ei_ei: (&self.m_ei_ei * phi_bar).norm_squared(),
        }
    }

    /// Rescales the user-side and eavesdropper-side matrices by `1/σ²`.
    fn normalized(&self, sigma_u2: f64, sigma_e2: f64) -> Self {
        let su = Complex64::new(1.0 / sigma_u2.sqrt(), 0.0);
        let se = Complex64::new(1.0 / sigma_e2.sqrt(), 0.0);
        Self::from_composites(
            &self.m_bi_u * su,
            &self.m_ei_u * su,
            &self.m_bi_e * se,
            &self.m_ei_ei * se,
        )
    }
}

/// `Tr(E_i Θ)` for the four lifted matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedTraces {
    pub bi_u: f64,
    pub ei_u: f64,
    pub bi_e: f64,
    pub ei_ei: f64,
}

impl LiftedTraces {
    /// Lifted secrecy rate in bit/s/Hz.
    pub fn secrecy_rate(&self, sigma_u2: f64, sigma_e2: f64) -> Result<f64> {
        let args = [
            self.ei_u + sigma_u2 + self.bi_u,
            self.ei_ei + sigma_e2 + self.bi_e,
            self.ei_u + sigma_u2,
            self.ei_ei + sigma_e2,
        ];
        if args.iter().any(|&a| a.is_nan() || a <= 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive log argument in lifted secrecy rate: {args:?}"
            )));
        }
        Ok(((args[0] / args[2]).ln() - (args[1] / args[3]).ln()) / LN_2)
    }
}

/// `φ̄ = [1, φ]` for unit-modulus coefficients `φ`.
pub fn augmented(theta: &ReflectionCoefficients) -> CVector {
    let c = theta.coefficients();
    let mut out = CVector::zeros(c.len() + 1);
    out[0] = Complex64::new(1.0, 0.0);
    out.rows_mut(1, c.len()).copy_from(&c);
    out
}

/// Builds the lifted composites for fixed `w` and `v`.
pub fn build_e_matrices(ch: &ChannelSet, w: &CVector, v: &CVector) -> Result<LiftedEMatrices> {
    if w.len() != ch.bs_antennas() {
        return Err(Error::dims(
            "build_e_matrices: w",
            ch.bs_antennas(),
            w.len(),
        ));
    }
    if v.len() != ch.eve_tx_antennas() {
        return Err(Error::dims(
            "build_e_matrices: v",
            ch.eve_tx_antennas(),
            v.len(),
        ));
    }
    let l = ch.ris_elements();
    let nr = ch.eve_rx_antennas();
    let bi_w = &ch.h_bi * w; // L
    let ei_v = &ch.g_ei * v; // L
    let direct_u = ch.h_bu.dotc(w);
    let jam_u = ch.g_eu.dotc(v);
    let direct_e = &ch.h_be * w; // N_r

    let m_bi_u = CMatrix::from_fn(1, l + 1, |_, j| {
        if j == 0 {
            direct_u
        } else {
            ch.h_iu[j - 1].conj() * bi_w[j - 1]
        }
    });
    let m_ei_u = CMatrix::from_fn(1, l + 1, |_, j| {
        if j == 0 {
            jam_u
        } else {
            ch.h_iu[j - 1].conj() * ei_v[j - 1]
        }
    });
    let m_bi_e = CMatrix::from_fn(nr, l + 1, |i, j| {
        if j == 0 {
            direct_e[i]
        } else {
            ch.h_ie[(i, j - 1)] * bi_w[j - 1]
        }
    });
    let m_ei_ei = CMatrix::from_fn(nr, l + 1, |i, j| {
        if j == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            ch.h_ie[(i, j - 1)] * ei_v[j - 1]
        }
    });
    Ok(LiftedEMatrices::from_composites(
        m_bi_u, m_ei_u, m_bi_e, m_ei_ei,
    ))
}

/// Secrecy rate (bit/s/Hz) as a function of the lifted matrix `Θ`.
pub fn lifted_secrecy_rate(
    e: &LiftedEMatrices,
    theta: &HermitianMatrix,
    sigma_u2: f64,
    sigma_e2: f64,
) -> Result<f64> {
    e.traces(theta)?.secrecy_rate(sigma_u2, sigma_e2)
}

/// Optimal majorization weights for the two concave log terms.
pub fn update_eps45(
    e: &LiftedEMatrices,
    theta: &HermitianMatrix,
    sigma_u2: f64,
    sigma_e2: f64,
) -> Result<(f64, f64)> {
    let t = e.traces(theta)?;
    let eps4 = 1.0 / (t.ei_ei + t.bi_e + sigma_e2);
    let eps5 = 1.0 / (t.ei_u + sigma_u2);
    if !(eps4 > 0.0 && eps5 > 0.0 && eps4.is_finite() && eps5.is_finite()) {
        return Err(Error::Numerical(format!(
            "invalid weights eps4={eps4}, eps5={eps5}"
        )));
    }
    Ok((eps4, eps5))
}

/// Majorized objective (nats, constants dropped) minimized over the elliptope:
/// `-ln(Tr(E_eIu Θ) + Tr(E_BIu Θ) + σ_u²) + eps4 (Tr(E_eIeI Θ) + Tr(E_BIe Θ))
///  - ln(Tr(E_eIeI Θ) + σ_e²) + eps5 Tr(E_eIu Θ)`.
pub fn sdp_objective(
    e: &LiftedEMatrices,
    eps4: f64,
    eps5: f64,
    sigma_u2: f64,
    sigma_e2: f64,
    theta: &HermitianMatrix,
) -> Result<f64> {
    objective_from_traces(&e.traces(theta)?, eps4, eps5, sigma_u2, sigma_e2)
}

fn objective_from_traces(
    t: &LiftedTraces,
    eps4: f64,
    eps5: f64,
    sigma_u2: f64,
    sigma_e2: f64,
) -> Result<f64> {
    let a_u = t.ei_u + t.bi_u + sigma_u2;
    let a_j = t.ei_ei + sigma_e2;
    if !(a_u > 0.0 && a_j > 0.0) {
        return Err(Error::Numerical(
            "non-positive log argument in SDP objective".into(),
        ));
    }
    Ok(-a_u.ln() + eps4 * (t.ei_ei + t.bi_e) - a_j.ln() + eps5 * t.ei_u)
}

/// Majorized objective including the constant terms, equal to `2 - R_s` (nats)
/// when the weights are optimal for `Θ`.
pub fn surrogate_with_constants(
    e: &LiftedEMatrices,
    eps4: f64,
    eps5: f64,
    sigma_u2: f64,
    sigma_e2: f64,
    theta: &HermitianMatrix,
) -> Result<f64> {
    Ok(
        sdp_objective(e, eps4, eps5, sigma_u2, sigma_e2, theta)?
            + eps4 * sigma_e2
            + eps5 * sigma_u2
            - eps4.ln()
            - eps5.ln(),
    )
}

/// `(max |Θ_ll - 1|, min eigenvalue)`.
pub fn feasibility(theta: &HermitianMatrix) -> Result<(f64, f64)> {
    let diag_err = theta
        .diagonal()
        .iter()
        .fold(0.0_f64, |m, d| m.max((d - 1.0).abs()));
    let min_eig = hermitian_eig(theta)?.values.last().copied().unwrap_or(0.0);
    Ok((diag_err, min_eig))
}

fn set_unit_diagonal(a: &HermitianMatrix) -> HermitianMatrix {
    let mut m = a.as_matrix().clone();
    for i in 0..m.nrows() {
        m[(i, i)] = Complex64::new(1.0, 0.0);
    }
    HermitianMatrix::from_hermitian_part(&m)
}

/// Congruence `D^{-1/2} P D^{-1/2}` with `D = diag(P)`: keeps a PSD matrix
/// PSD while forcing a unit diagonal.
fn normalize_diagonal(p: &HermitianMatrix) -> HermitianMatrix {
    let n = p.dim();
    let mut m = p.as_matrix().clone();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = m[(i, i)].re;
            if d > 1e-300 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] *= scale[i] * scale[j];
        }
        if scale[i] == 0.0 {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
    }
    HermitianMatrix::from_hermitian_part(&m)
}

/// Projection onto `{Θ ⪰ 0, diag(Θ) = 1}` by Dykstra's alternating
/// projections. The last PSD iterate is renormalized to an exactly unit
/// diagonal, so the result is always feasible.
pub fn project_elliptope(y: &HermitianMatrix) -> Result<HermitianMatrix> {
    let n = y.dim();
    let mut x = y.clone();
    let mut p = HermitianMatrix::zeros(n);
    let mut psd = x.clone();
    for _ in 0..DYKSTRA_MAX_ITER {
        let xp = x.add(&p);
        psd = psd_project(&xp)?;
        p = xp.sub(&psd);
        let next = set_unit_diagonal(&psd);
        let diag_err = psd
            .diagonal()
            .iter()
            .fold(0.0_f64, |m, d| m.max((d - 1.0).abs()));
        x = next;
        if diag_err <= DYKSTRA_TOL {
            break;
        }
    }
    Ok(normalize_diagonal(&psd))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpConfig {
    /// Relative objective decrease counted as stalled.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub theta: HermitianMatrix,
    /// Objective of [`sdp_objective`] at `theta`, in nats.
    pub objective: f64,
    /// Certified upper bound on `objective - min f` from the dual certificate.
    pub optimality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The line search could not find descent before convergence.
    pub degraded: bool,
}

/// Weight of the identity blended into a warm start so the factorization has
/// full rank and can leave the rank of the warm start.
const WARM_START_BLEND: f64 = 1e-3;
const ARMIJO: f64 = 1e-4;
const CERTIFICATE_EVERY: usize = 5;

/// Smooth part of the problem after noise normalization (`σ² = 1`), evaluated
/// on the factorization `Θ = V V^H` whose rows have unit norm.
struct FactoredSdp {
    e: LiftedEMatrices,
    eps4: f64,
    eps5: f64,
}

fn frob2(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

fn normalize_rows(v: &mut CMatrix) {
    for mut row in v.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= Complex64::new(norm, 0.0);
        } else {
            row[0] = Complex64::new(1.0, 0.0);
        }
    }
}

impl FactoredSdp {
    fn traces(&self, v: &CMatrix) -> LiftedTraces {
        LiftedTraces {
            bi_u: frob2(&(&self.e.m_bi_u * v)),
            ei_u: frob2(&(&self.e.m_ei_u * v)),
            bi_e: frob2(&(&self.e.m_bi_e * v)),
            ei_ei: frob2(&(&self.e.m_ei_ei * v)),
        }
    }

    fn value(&self, v: &CMatrix) -> Result<f64> {
        objective_from_traces(&self.traces(v), self.eps4, self.eps5, 1.0, 1.0)
    }

    /// Coefficients `c_i` of `∇f(Θ) = Σ c_i E_i` in the order (BIu, eIu, BIe, eIeI).
    fn gradient_weights(&self, t: &LiftedTraces) -> [f64; 4] {
        let a_u = t.ei_u + t.bi_u + 1.0;
        let a_j = t.ei_ei + 1.0;
        [
            -1.0 / a_u,
            self.eps5 - 1.0 / a_u,
            self.eps4,
            self.eps4 - 1.0 / a_j,
        ]
    }

    fn composites(&self) -> [&CMatrix; 4] {
        [
            &self.e.m_bi_u,
            &self.e.m_ei_u,
            &self.e.m_bi_e,
            &self.e.m_ei_ei,
        ]
    }

    /// Gradient on the product of unit spheres: `2 ∇f(Θ) V` with each row's
    /// radial component removed.
    fn riemannian_gradient(&self, v: &CMatrix) -> CMatrix {
        let c = self.gradient_weights(&self.traces(v));
        let mut g = CMatrix::zeros(v.nrows(), v.ncols());
        for (ci, m) in c.iter().zip(self.composites()) {
            if *ci != 0.0 {
                g += m.adjoint() * (m * v) * Complex64::new(2.0 * ci, 0.0);
            }
        }
        for i in 0..v.nrows() {
            let radial: f64 = (0..v.ncols())
                .map(|k| (v[(i, k)].conj() * g[(i, k)]).re)
                .sum();
            for k in 0..v.ncols() {
                let vik = v[(i, k)];
                g[(i, k)] -= vik * radial;
            }
        }
        g
    }

    /// Bound `n · max(0, -λ_min(S))` on the optimality gap, where
    /// `S = ∇f(Θ) + Diag(y)` with `y_i = -Re (∇f(Θ) Θ)_ii`, so `⟨S, Θ⟩ = 0`.
    fn certified_gap(&self, theta: &HermitianMatrix) -> Result<f64> {
        let c = self.gradient_weights(&self.e.traces(theta)?);
        let g = self
            .e
            .e_bi_u
            .scale(c[0])
            .add_scaled(c[1], &self.e.e_ei_u)
            .add_scaled(c[2], &self.e.e_bi_e)
            .add_scaled(c[3], &self.e.e_ei_ei);
        let gt = g.as_matrix() * theta.as_matrix();
        let mut s = g.as_matrix().clone();
        for i in 0..s.nrows() {
            s[(i, i)] -= Complex64::new(gt[(i, i)].re, 0.0);
        }
        let eig = hermitian_eig(&HermitianMatrix::from_hermitian_part(&s))?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        Ok(theta.dim() as f64 * (-min).max(0.0))
    }
}

fn lift(v: &CMatrix) -> HermitianMatrix {
    normalize_diagonal(&HermitianMatrix::from_hermitian_part(&(v * v.adjoint())))
}

/// Full-rank factor `V` with unit rows and `V V^H ≈ Θ`.
fn factor_start(theta: &HermitianMatrix) -> Result<CMatrix> {
    let n = theta.dim();
    let blended = theta
        .scale(1.0 - WARM_START_BLEND)
        .add_scaled(WARM_START_BLEND, &HermitianMatrix::identity(n));
    let mut v = gaussian_factor(&blended)?;
    normalize_rows(&mut v);
    Ok(v)
}

/// Minimizes [`sdp_objective`] over `{Θ ⪰ 0, diag(Θ) = 1}`.
///
/// The feasible set is parametrized as `Θ = V V^H` with unit-norm rows of a
/// square `V`, which covers it exactly. Projected gradient runs on that
/// product of spheres (row normalization is the exact projection) with
/// Barzilai-Borwein trial steps and Armijo backtracking. Iteration stops after
/// five consecutive relative decreases below `tol`, or earlier once the dual
/// certificate bounds the optimality gap by `tol`.
#[allow(clippy::too_many_arguments)]
pub fn solve_theta_sdp(
    e: &LiftedEMatrices,
    eps4: f64,
    eps5: f64,
    sigma_u2: f64,
    sigma_e2: f64,
    warm: Option<&HermitianMatrix>,
    cfg: &SdpConfig,
) -> Result<SdpSolution> {
    if !(eps4 > 0.0 && eps5 > 0.0) {
        return Err(Error::invalid("eps45", "weights must be positive"));
    }
    let n = e.dim();
    let prob = FactoredSdp {
        e: e.normalized(sigma_u2, sigma_e2),
        eps4: eps4 * sigma_e2,
        eps5: eps5 * sigma_u2,
    };
    // Objective offset between normalized and original units.
    let offset = -sigma_u2.ln() - sigma_e2.ln();

    let mut v = match warm {
        Some(w) if w.dim() == n => {
            let (diag_err, min_eig) = feasibility(w)?;
            if diag_err <= DIAG_TOL && min_eig >= MIN_EIG_TOL {
                factor_start(w)?
            } else {
                factor_start(&project_elliptope(w)?)?
            }
        }
        Some(w) => return Err(Error::dims("solve_theta_sdp: warm start", n, w.dim())),
        None => CMatrix::identity(n, n),
    };
    let mut fv = prob.value(&v)?;
    let mut grad = prob.riemannian_gradient(&v);
    let gnorm = frob2(&grad).sqrt();
    let mut step = if gnorm > 0.0 { 1.0 / gnorm } else { 1.0 };
    let mut streak = 0;
    let mut converged = false;
    let mut degraded = false;
    let mut iterations = 0;
    let mut gap = f64::INFINITY;

    while iterations < cfg.max_iter {
        let g2 = frob2(&grad);
        let tol_abs = cfg.tol * fv.abs().max(1.0);
        if g2 == 0.0 {
            converged = true;
            break;
        }
        if iterations % CERTIFICATE_EVERY == 0 {
            gap = prob.certified_gap(&lift(&v))?;
            if gap <= tol_abs {
                converged = true;
                break;
            }
        }
        iterations += 1;
        let mut accepted = None;
        for _ in 0..80 {
            let mut cand = &v - &grad * Complex64::new(step, 0.0);
            normalize_rows(&mut cand);
            let fc = prob.value(&cand)?;
            if fc <= fv - ARMIJO * step * g2 {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            degraded = true;
            break;
        };
        let decrease = fv - fc;
        let cand_grad = prob.riemannian_gradient(&cand);
        let s_k = &cand - &v;
        let y_k = &cand_grad - &grad;
        let sy = real_inner(&s_k, &y_k).abs();
        step = if sy > 0.0 {
            (frob2(&s_k) / sy).clamp(1e-12, 1e12)
        } else {
            step * 2.0
        };
        v = cand;
        fv = fc;
        grad = cand_grad;
        if decrease <= tol_abs {
            streak += 1;
            if streak >= SMALL_DECREASE_STREAK {
                converged = true;
                break;
            }
        } else {
            streak = 0;
        }
    }
    let theta = lift(&v);
    let value = prob.value(&v)?;
    gap = gap.min(prob.certified_gap(&theta)?);
    debug!("SDP finished after {iterations} iterations (converged={converged}, gap={gap:e})");
    Ok(SdpSolution {
        objective: value + offset,
        optimality_gap: gap,
        theta,
        iterations,
        converged,
        degraded,
    })
}

/// Phase vector recovered from a relaxed solution.
#[derive(Debug, Clone)]
pub struct RandomizedPhases {
    pub theta: ReflectionCoefficients,
    /// Lifted secrecy rate of the rank-one lift of `theta`, bit/s/Hz.
    pub lifted_rate: f64,
    /// `Θ` was numerically rank one and the leading eigenvector was used directly.
    pub rank_one: bool,
}

fn phases_from_augmented(r: &CVector) -> ReflectionCoefficients {
    let ref_phase = if r[0].norm() > 0.0 { r[0].arg() } else { 0.0 };
    ReflectionCoefficients::from_phases(r.iter().skip(1).map(|z| {
        if z.norm() > 0.0 {
            z.arg() - ref_phase
        } else {
            0.0
        }
    }))
}

/// Extracts unit-modulus phases from `Θ`: directly from the leading
/// eigenvector when `Θ` is rank one, otherwise as the best of `n_draws`
/// candidates drawn from `CN(0, Θ)`.
#[allow(clippy::too_many_arguments)]
pub fn gaussian_randomization<R: Rng + ?Sized>(
    theta: &HermitianMatrix,
    e: &LiftedEMatrices,
    sigma_u2: f64,
    sigma_e2: f64,
    n_draws: usize,
    rng: &mut R,
) -> Result<RandomizedPhases> {
    if theta.dim() != e.dim() {
        return Err(Error::dims("gaussian_randomization", e.dim(), theta.dim()));
    }
    let eig = hermitian_eig(theta)?;
    let l1 = eig.values[0];
    let l2 = eig.values.get(1).copied().unwrap_or(0.0);
    let rate_of = |t: &ReflectionCoefficients| {
        e.traces_rank_one(&augmented(t))
            .secrecy_rate(sigma_u2, sigma_e2)
    };
    if l1 > 0.0 && l2 / l1 < RANK_ONE_RATIO {
        let u = eig.vectors.column(0).into_owned();
        let t = phases_from_augmented(&u);
        return Ok(RandomizedPhases {
            lifted_rate: rate_of(&t)?,
            theta: t,
            rank_one: true,
        });
    }
    let factor = gaussian_factor(theta)?;
    let mut best: Option<(ReflectionCoefficients, f64)> = None;
    for _ in 0..n_draws.max(1) {
        let r = sample_with_factor(&factor, rng);
        let t = phases_from_augmented(&r);
        let rate = rate_of(&t)?;
        if best.as_ref().is_none_or(|(_, b)| rate > *b) {
            best = Some((t, rate));
        }
    }
    let (t, rate) = best.expect("at least one draw");
    Ok(RandomizedPhases {
        theta: t,
        lifted_rate: rate,
        rank_one: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveConfig {
    /// Relative change of the majorized objective that ends the loop.
    pub tol: f64,
    pub max_iter: usize,
    pub sdp: SdpConfig,
    pub n_draws: usize,
}

impl Default for PassiveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 50,
            sdp: SdpConfig::default(),
            n_draws: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PassiveOutcome {
    /// Returned phases: the randomized candidate if it improves the true
    /// secrecy rate, otherwise the incumbent.
    pub theta: ReflectionCoefficients,
    /// Final relaxed solution.
    pub lifted: HermitianMatrix,
    pub secrecy_rate: f64,
    pub incumbent_rate: f64,
    pub candidate_rate: f64,
    pub improved: bool,
    /// Majorize/solve rounds.
    pub iterations: usize,
    pub sdp_iterations: usize,
    pub rank_one: bool,
    /// Certified lower bound of the relaxed optimum minus the majorized
    /// objective of the rank-one candidate; never positive beyond rounding.
    pub relaxation_gap: f64,
    pub degraded: bool,
    /// Majorized objective after each round.
    pub objectives: Vec<f64>,
}

/// Alternates weight updates and SDP solves, then randomizes once and keeps
/// the better of candidate and incumbent by true secrecy rate.
#[allow(clippy::too_many_arguments)]
pub fn passive_bcd<R: Rng + ?Sized>(
    ch: &ChannelSet,
    bf: &BeamformingState,
    incumbent: &ReflectionCoefficients,
    sigma_u2: f64,
    sigma_e2: f64,
    cfg: &PassiveConfig,
    rng: &mut R,
) -> Result<PassiveOutcome> {
    let e = build_e_matrices(ch, &bf.w, &bf.v)?;
    let incumbent_rate = evaluate(ch, incumbent, bf, sigma_u2, sigma_e2)?.raw;

    let mut theta = HermitianMatrix::outer(&augmented(incumbent));
    let mut objectives = Vec::new();
    let mut prev: Option<f64> = None;
    let mut sdp_iterations = 0;
    let mut degraded = false;
    let mut last_eps = (0.0, 0.0);
    let mut last_obj = 0.0;
    let mut last_gap = 0.0;
    for _ in 0..cfg.max_iter {
        let (eps4, eps5) = update_eps45(&e, &theta, sigma_u2, sigma_e2)?;
        let sol = solve_theta_sdp(&e, eps4, eps5, sigma_u2, sigma_e2, Some(&theta), &cfg.sdp)?;
        sdp_iterations += sol.iterations;
        degraded |= sol.degraded;
        theta = sol.theta;
        last_eps = (eps4, eps5);
        last_obj = sol.objective;
        last_gap = sol.optimality_gap;
        let f = surrogate_with_constants(&e, eps4, eps5, sigma_u2, sigma_e2, &theta)?;
        objectives.push(f);
        if let Some(p) = prev {
            if (f - p).abs() <= cfg.tol * p.abs().max(1e-12) {
                break;
            }
        }
        prev = Some(f);
    }

    let cand = gaussian_randomization(&theta, &e, sigma_u2, sigma_e2, cfg.n_draws, rng)?;
    let cand_lift = HermitianMatrix::outer(&augmented(&cand.theta));
    let relaxation_gap = last_obj
        - last_gap
        - sdp_objective(&e, last_eps.0, last_eps.1, sigma_u2, sigma_e2, &cand_lift)?;
    let candidate_rate = evaluate(ch, &cand.theta, bf, sigma_u2, sigma_e2)?.raw;
    let improved = candidate_rate > incumbent_rate;
    let (out_theta, rate) = if improved {
        (cand.theta, candidate_rate)
    } else {
        (incumbent.clone(), incumbent_rate)
    };
    Ok(PassiveOutcome {
        theta: out_theta,
        lifted: theta,
        secrecy_rate: rate,
        incumbent_rate,
        candidate_rate,
        improved,
        iterations: objectives.len(),
        sdp_iterations,
        rank_one: cand.rank_one,
        relaxation_gap,
        degraded,
        objectives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, Scenario};
    use crate::numerics::standard_complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn setup(l: usize, seed: u64) -> (Scenario, ChannelSet, BeamformingState) {
        let s = Scenario {
            ris_elements: l,
            seed,
            ..Scenario::default()
        };
        let ch = generate_channels(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
        let mut w = CVector::from_fn(s.bs_antennas, |_, _| standard_complex_normal(&mut rng));
        w *= Complex64::new((s.p_bs / w.norm_squared()).sqrt(), 0.0);
        let mut v = CVector::from_fn(s.eve_tx_antennas, |_, _| standard_complex_normal(&mut rng));
        v *= Complex64::new((s.p_jam / v.norm_squared()).sqrt(), 0.0);
        (s, ch, BeamformingState::new(w, v))
    }

    fn random_phases(l: usize, rng: &mut ChaCha8Rng) -> ReflectionCoefficients {
        ReflectionCoefficients::from_phases((0..l).map(|_| rng.random::<f64>() * 2.0 * PI))
    }

    fn random_elliptope_point(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| standard_complex_normal(rng));
        project_elliptope(&HermitianMatrix::from_hermitian_part(&(&m + m.adjoint()))).unwrap()
    }

    fn l1_lift(z: Complex64) -> HermitianMatrix {
        let one = Complex64::new(1.0, 0.0);
        HermitianMatrix::from_hermitian_part(&CMatrix::from_row_slice(
            2,
            2,
            &[one, z, z.conj(), one],
        ))
    }

    #[test]
    fn lift_consistency_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in 0..100 {
            let (s, ch, bf) = setup(1 + seed as usize % 9, seed);
            let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
            let th = random_phases(ch.ris_elements(), &mut rng);
            let phi = augmented(&th);
            let lift = HermitianMatrix::outer(&phi);
            let t = e.traces(&lift).unwrap();
            let coeffs = th.coefficients();
            let reflected = |rx: &CMatrix, tx: &CVector| -> CVector {
                rx * CVector::from_fn(coeffs.len(), |l, _| coeffs[l] * tx[l])
            };
            let bi_w = &ch.h_bi * &bf.w;
            let ei_v = &ch.g_ei * &bf.v;
            let iu_row = crate::numerics::adjoint_row(&ch.h_iu);
            let user_sig = ch.h_bu.dotc(&bf.w) + reflected(&iu_row, &bi_w)[0];
            let user_jam = ch.g_eu.dotc(&bf.v) + reflected(&iu_row, &ei_v)[0];
            let eve_sig = &ch.h_be * &bf.w + reflected(&ch.h_ie, &bi_w);
            let eve_jam = reflected(&ch.h_ie, &ei_v);
            let checks = [
                (t.bi_u, user_sig.norm_sqr()),
                (t.ei_u, user_jam.norm_sqr()),
                (t.bi_e, eve_sig.norm_squared()),
                (t.ei_ei, eve_jam.norm_squared()),
            ];
            for (lifted, direct) in checks {
                assert!(
                    (lifted - direct).abs() <= 1e-9 * direct.max(1e-300),
                    "{lifted} vs {direct}"
                );
            }
            let a = lifted_secrecy_rate(&e, &lift, s.sigma_u2, s.sigma_e2).unwrap();
            let b = evaluate(&ch, &th, &bf, s.sigma_u2, s.sigma_e2).unwrap().raw;
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn jamming_matrices_vanish_without_jamming() {
        let (_, ch, bf) = setup(5, 2);
        let e = build_e_matrices(&ch, &bf.w, &CVector::zeros(2)).unwrap();
        assert_eq!(e.e_ei_u.max_abs(), 0.0);
        assert_eq!(e.e_ei_ei.max_abs(), 0.0);
        let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
        for k in 0..e.dim() {
            assert_eq!(e.e_ei_ei.get(0, k).norm(), 0.0);
            assert_eq!(e.e_ei_ei.get(k, 0).norm(), 0.0);
        }
        assert!(build_e_matrices(&ch, &CVector::zeros(2), &bf.v).is_err());
    }

    #[test]
    fn lifted_rate_degenerate_and_homogeneous() {
        let (s, ch, bf) = setup(3, 4);
        let zero = build_e_matrices(&ch, &CVector::zeros(3), &CVector::zeros(2)).unwrap();
        let id = HermitianMatrix::identity(4);
        assert_eq!(lifted_secrecy_rate(&zero, &id, 1.0, 2.0).unwrap(), 0.0);

        let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
        let th = HermitianMatrix::outer(&augmented(&ReflectionCoefficients::from_phases([
            0.3, 1.0, 2.0,
        ])));
        let base = lifted_secrecy_rate(&e, &th, s.sigma_u2, s.sigma_e2).unwrap();
        let c: f64 = 7.5;
        let scaled = build_e_matrices(
            &ch,
            &(&bf.w * Complex64::new(c.sqrt(), 0.0)),
            &(&bf.v * Complex64::new(c.sqrt(), 0.0)),
        )
        .unwrap();
        let r = lifted_secrecy_rate(&scaled, &th, c * s.sigma_u2, c * s.sigma_e2).unwrap();
        assert!((r - base).abs() < 1e-9 * base.abs().max(1.0));
    }

    #[test]
    fn eps45_closed_form_and_grid_oracle() {
        let (s, ch, bf) = setup(4, 3);
        let (su, se) = (s.sigma_u2, s.sigma_e2);
        let zero = build_e_matrices(&ch, &CVector::zeros(3), &CVector::zeros(2)).unwrap();
        let id = HermitianMatrix::identity(5);
        let (e4, e5) = update_eps45(&zero, &id, su, se).unwrap();
        assert!((e4 * se - 1.0).abs() < 1e-12 && (e5 * su - 1.0).abs() < 1e-12);

        let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let th = random_elliptope_point(5, &mut rng);
        let (e4, e5) = update_eps45(&e, &th, su, se).unwrap();
        let best = surrogate_with_constants(&e, e4, e5, su, se, &th).unwrap();
        let rs = lifted_secrecy_rate(&e, &th, su, se).unwrap() * LN_2;
        assert!((best - (2.0 - rs)).abs() < 1e-9);
        // Each weight enters separably; scan each on a log grid around its optimum.
        for k in 0..10_000 {
            let f = 10f64.powf(-3.0 + 6.0 * k as f64 / 9_999.0);
            let a = surrogate_with_constants(&e, e4 * f, e5, su, se, &th).unwrap();
            let b = surrogate_with_constants(&e, e4, e5 * f, su, se, &th).unwrap();
            assert!(a >= best - 1e-12 && b >= best - 1e-12);
        }
    }

    #[test]
    fn projection_is_feasible_and_fixes_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 5, 17] {
            let p = random_elliptope_point(n, &mut rng);
            let (d, lam) = feasibility(&p).unwrap();
            assert!(d <= 1e-12 && lam >= MIN_EIG_TOL, "{d} {lam}");
            let again = project_elliptope(&p).unwrap();
            assert!(again.sub(&p).max_abs() < 1e-8);
        }
    }

    #[test]
    fn sdp_matches_grid_for_single_element() {
        // For L = 1 the feasible set is {[[1, z], [z*, 1]] : |z| ≤ 1}.
        for seed in 0..5 {
            let (s, ch, bf) = setup(1, 100 + seed);
            let (su, se) = (s.sigma_u2, s.sigma_e2);
            let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
            let (e4, e5) = update_eps45(&e, &HermitianMatrix::identity(2), su, se).unwrap();
            let sol = solve_theta_sdp(&e, e4, e5, su, se, None, &SdpConfig::default()).unwrap();
            let mut grid = f64::INFINITY;
            for i in 0..200 {
                for k in 0..200 {
                    let z = Complex64::from_polar(i as f64 / 199.0, 2.0 * PI * k as f64 / 200.0);
                    grid = grid.min(sdp_objective(&e, e4, e5, su, se, &l1_lift(z)).unwrap());
                }
            }
            assert!(
                (sol.objective - grid).abs() <= 1e-3,
                "solver {} grid {}",
                sol.objective,
                grid
            );
            assert!(sol.objective <= grid + 1e-9);
        }
    }

    #[test]
    fn sdp_with_zero_data_returns_feasible_point() {
        let (s, ch, _) = setup(4, 6);
        let e = build_e_matrices(&ch, &CVector::zeros(3), &CVector::zeros(2)).unwrap();
        let sol = solve_theta_sdp(
            &e,
            1.0,
            1.0,
            s.sigma_u2,
            s.sigma_e2,
            None,
            &SdpConfig::default(),
        )
        .unwrap();
        let (d, lam) = feasibility(&sol.theta).unwrap();
        assert!(d <= DIAG_TOL && lam >= MIN_EIG_TOL);
        let constant = -s.sigma_u2.ln() - s.sigma_e2.ln();
        assert!((sol.objective - constant).abs() < 1e-12 * constant.abs());
        assert!(sol.converged);
    }

    #[test]
    fn sdp_objective_is_convex_along_segments() {
        let (s, ch, bf) = setup(5, 21);
        let (su, se) = (s.sigma_u2, s.sigma_e2);
        let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
        let (e4, e5) = update_eps45(&e, &HermitianMatrix::identity(6), su, se).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = random_elliptope_point(6, &mut rng);
            let b = random_elliptope_point(6, &mut rng);
            let fa = sdp_objective(&e, e4, e5, su, se, &a).unwrap();
            let fb = sdp_objective(&e, e4, e5, su, se, &b).unwrap();
            let mid = a.scale(0.5).add_scaled(0.5, &b);
            let fm = sdp_objective(&e, e4, e5, su, se, &mid).unwrap();
            assert!(fm <= 0.5 * (fa + fb) + 1e-9);
        }
    }

    #[test]
    fn sdp_is_feasible_and_near_long_run_reference() {
        for seed in 0..5 {
            let (s, ch, bf) = setup(16, 200 + seed);
            let (su, se) = (s.sigma_u2, s.sigma_e2);
            let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
            let (e4, e5) = update_eps45(&e, &HermitianMatrix::identity(17), su, se).unwrap();
            let sol = solve_theta_sdp(&e, e4, e5, su, se, None, &SdpConfig::default()).unwrap();
            let long_cfg = SdpConfig {
                tol: 1e-10,
                max_iter: 20_000,
            };
            let long = solve_theta_sdp(&e, e4, e5, su, se, None, &long_cfg).unwrap();
            let (d, lam) = feasibility(&sol.theta).unwrap();
            assert!(d <= DIAG_TOL && lam >= MIN_EIG_TOL);
            assert!(!sol.degraded);
            assert!((sol.objective - long.objective).abs() <= 1e-4 * long.objective.abs());
            // The dual certificate brackets the reference value.
            assert!(sol.objective - sol.optimality_gap <= long.objective + 1e-9);
        }
    }

    #[test]
    fn rank_one_input_recovers_its_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let (s, ch, bf) = setup(8, rng.random());
            let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
            let th = random_phases(8, &mut rng);
            let lift = HermitianMatrix::outer(&augmented(&th));
            let out =
                gaussian_randomization(&lift, &e, s.sigma_u2, s.sigma_e2, 200, &mut rng).unwrap();
            assert!(out.rank_one);
            for (a, b) in out.theta.phases().iter().zip(th.phases()) {
                let d = (a - b).rem_euclid(2.0 * PI);
                assert!(d.min(2.0 * PI - d) < 1e-8);
            }
        }
    }

    #[test]
    fn single_draw_gives_unit_modulus_phases() {
        let (s, ch, bf) = setup(6, 12);
        let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = gaussian_randomization(
            &HermitianMatrix::identity(7),
            &e,
            s.sigma_u2,
            s.sigma_e2,
            1,
            &mut rng,
        )
        .unwrap();
        assert!(!out.rank_one);
        assert_eq!(out.theta.len(), 6);
        for c in out.theta.coefficients().iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn randomization_is_deterministic_given_rng() {
        let (s, ch, bf) = setup(6, 13);
        let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
        let th = random_elliptope_point(7, &mut ChaCha8Rng::seed_from_u64(1));
        let a = gaussian_randomization(
            &th,
            &e,
            s.sigma_u2,
            s.sigma_e2,
            50,
            &mut ChaCha8Rng::seed_from_u64(5),
        )
        .unwrap();
        let b = gaussian_randomization(
            &th,
            &e,
            s.sigma_u2,
            s.sigma_e2,
            50,
            &mut ChaCha8Rng::seed_from_u64(5),
        )
        .unwrap();
        assert_eq!(a.theta, b.theta);
    }

    #[test]
    fn randomized_phases_near_grid_optimum_for_two_elements() {
        // The lifted rate is invariant to a common phase of φ̄, so a grid over
        // the two free phases covers the 64³ grid over all three entries.
        let mut hits = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..100 {
            let (s, ch, bf) = setup(2, 1000 + seed);
            let (su, se) = (s.sigma_u2, s.sigma_e2);
            let e = build_e_matrices(&ch, &bf.w, &bf.v).unwrap();
            let mut theta = HermitianMatrix::identity(3);
            let mut prev = f64::INFINITY;
            for _ in 0..50 {
                let (e4, e5) = update_eps45(&e, &theta, su, se).unwrap();
                theta = solve_theta_sdp(&e, e4, e5, su, se, Some(&theta), &SdpConfig::default())
                    .unwrap()
                    .theta;
                let f = surrogate_with_constants(&e, e4, e5, su, se, &theta).unwrap();
                if (f - prev).abs() <= 1e-4 * prev.abs() {
                    break;
                }
                prev = f;
            }
            let out = gaussian_randomization(&theta, &e, su, se, 200, &mut rng).unwrap();
            let mut best = f64::NEG_INFINITY;
            for a in 0..64 {
                for b in 0..64 {
                    let ph = ReflectionCoefficients::from_phases([
                        2.0 * PI * a as f64 / 64.0,
                        2.0 * PI * b as f64 / 64.0,
                    ]);
                    let r = e
                        .traces_rank_one(&augmented(&ph))
                        .secrecy_rate(su, se)
                        .unwrap();
                    best = best.max(r);
                }
            }
            if out.lifted_rate >= best - 0.05 * best.abs() {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn optimal_incumbent_is_retained() {
        let (s, ch, bf) = setup(1, 31);
        let (su, se) = (s.sigma_u2, s.sigma_e2);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 0..3600 {
            let t = 2.0 * PI * k as f64 / 3600.0;
            let r = evaluate(&ch, &ReflectionCoefficients::from_phases([t]), &bf, su, se)
                .unwrap()
                .raw;
            if r > best.0 {
                best = (r, t);
            }
        }
        // Refine by golden-section search on the single phase.
        let f = |t: f64| {
            evaluate(&ch, &ReflectionCoefficients::from_phases([t]), &bf, su, se)
                .unwrap()
                .raw
        };
        let (mut lo, mut hi) = (best.1 - 2.0 * PI / 3600.0, best.1 + 2.0 * PI / 3600.0);
        for _ in 0..100 {
            let m1 = lo + 0.382 * (hi - lo);
            let m2 = lo + 0.618 * (hi - lo);
            if f(m1) < f(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let inc = ReflectionCoefficients::from_phases([0.5 * (lo + hi)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = passive_bcd(&ch, &bf, &inc, su, se, &PassiveConfig::default(), &mut rng).unwrap();
        assert!(out.secrecy_rate >= out.incumbent_rate);
        if !out.improved {
            assert_eq!(out.theta, inc);
        } else {
            assert!(out.candidate_rate - out.incumbent_rate < 1e-9 * out.incumbent_rate.abs());
        }
    }

    #[test]
    fn phases_align_paths_without_eavesdropper() {
        for seed in 0..10 {
            let (s, ch, bf) = setup(2, 400 + seed);
            let ch = ch.without_eavesdropper();
            let bf = BeamformingState::new(bf.w.clone(), CVector::zeros(2));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inc = ReflectionCoefficients::zeros(2);
            let out = passive_bcd(
                &ch,
                &bf,
                &inc,
                s.sigma_u2,
                s.sigma_e2,
                &PassiveConfig::default(),
                &mut rng,
            )
            .unwrap();
            let direct = ch.h_bu.dotc(&bf.w).arg();
            let bi_w = &ch.h_bi * &bf.w;
            for (l, c) in out.theta.coefficients().iter().enumerate() {
                let path = (ch.h_iu[l].conj() * c * bi_w[l]).arg();
                let d = (path - direct).rem_euclid(2.0 * PI);
                let deg = d.min(2.0 * PI - d).to_degrees();
                assert!(deg <= 3.0, "element {l}: {deg}°");
            }
        }
    }

    #[test]
    fn passive_bcd_never_loses_to_incumbent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..10 {
            let (s, ch, bf) = setup(8, 300 + seed);
            let inc = random_phases(8, &mut rng);
            let out = passive_bcd(
                &ch,
                &bf,
                &inc,
                s.sigma_u2,
                s.sigma_e2,
                &PassiveConfig::default(),
                &mut rng,
            )
            .unwrap();
            assert!(out.secrecy_rate >= out.incumbent_rate);
            assert!(out.relaxation_gap <= 1e-9 * out.objectives.last().unwrap().abs().max(1.0));
            for pair in out.objectives.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-6 * pair[0].abs().max(1.0));
            }
            for c in out.theta.coefficients().iter() {
                assert!((c.norm() - 1.0).abs() < 1e-12);
            }
            let (d, lam) = feasibility(&out.lifted).unwrap();
            assert!(d <= DIAG_TOL && lam >= MIN_EIG_TOL);
        }
    }
}
