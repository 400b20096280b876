//! Transmit beamforming for a fixed RIS configuration.
//!
//! The secrecy objective `A1 + A2 - A3` (user rate minus the log-det
//! eavesdropper rate, in nats) is rewritten with WMMSE auxiliaries: receive
//! filters `x1`, `x2` and weights `eps1..eps3`. Block coordinate ascent then
//! cycles through closed-form updates of the filters, the weights, and a
//! norm-ball constrained quadratic program in `w`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    hermitian_eig, log_det_pd, norm_sqr, solve_hermitian, CVector, HermitianMatrix,
};
use crate::rates::{secrecy_rate, BeamformingState, EffectiveChannels};

/// Tolerance on a decrease of the WMMSE objective between BCD cycles.
pub const MONOTONE_TOL: f64 = 1e-7;
const BISECTION_MAX_ITER: usize = 200;
/// Required accuracy of `‖w‖² = P` on an active power constraint.
pub const POWER_MATCH_TOL: f64 = 1e-8;

/// Receive filters and MSE weights of the WMMSE reformulation.
///
/// With a single-antenna user, `x1`, `eps1` and `eps2` are 1-dimensional;
/// they are stored as vectors/matrices so the eavesdropper blocks stay uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseAuxiliaries {
    pub x1: CVector,
    pub x2: CVector,
    pub eps1: HermitianMatrix,
    pub eps2: HermitianMatrix,
    pub eps3: HermitianMatrix,
}

fn as_scalar_matrix(z: f64) -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(&[z])
}

/// `E1 = (1 - x1^H H_bu w)(1 - x1^H H_bu w)^H + x1^H (I + G_eu v v^H G_eu^H) x1`.
pub fn mse_e1(x1: &CVector, w: &CVector, v: &CVector, eff: &EffectiveChannels) -> HermitianMatrix {
    let s = &eff.h_bu * w;
    let j = &eff.g_eu * v;
    let xs = x1.dotc(&s);
    let xj = x1.dotc(&j);
    as_scalar_matrix((Complex64::new(1.0, 0.0) - xs).norm_sqr() + norm_sqr(x1) + xj.norm_sqr())
}

/// `E2 = (1 - x2^H H_iei v)(1 - x2^H H_iei v)^H + x2^H x2`.
pub fn mse_e2(x2: &CVector, v: &CVector, eff: &EffectiveChannels) -> HermitianMatrix {
    let t = &eff.h_iei * v;
    let xt = x2.dotc(&t);
    as_scalar_matrix((Complex64::new(1.0, 0.0) - xt).norm_sqr() + norm_sqr(x2))
}

/// `I + H_iei v v^H H_iei^H + H_bei w w^H H_bei^H`, the eavesdropper's received covariance.
pub fn eve_covariance(w: &CVector, v: &CVector, eff: &EffectiveChannels) -> HermitianMatrix {
    let n = eff.eve_rx_antennas();
    let t = &eff.h_iei * v;
    let u = &eff.h_bei * w;
    HermitianMatrix::identity(n)
        .add(&HermitianMatrix::outer(&t))
        .add(&HermitianMatrix::outer(&u))
}

/// MMSE receive filters for the user and the eavesdropper's jamming path.
pub fn update_x(eff: &EffectiveChannels, w: &CVector, v: &CVector) -> Result<(CVector, CVector)> {
    let s = &eff.h_bu * w;
    let j = &eff.g_eu * v;
    let user_cov = HermitianMatrix::identity(s.len())
        .add(&HermitianMatrix::outer(&j))
        .add(&HermitianMatrix::outer(&s));
    let x1 = solve_hermitian(&user_cov, &s)?;

    let t = &eff.h_iei * v;
    let jam_cov = HermitianMatrix::identity(t.len()).add(&HermitianMatrix::outer(&t));
    let x2 = solve_hermitian(&jam_cov, &t)?;
    Ok((x1, x2))
}

/// Optimal weights: each `eps_i` is the inverse of its MSE/covariance matrix.
pub fn update_eps(
    eff: &EffectiveChannels,
    w: &CVector,
    v: &CVector,
    x1: &CVector,
    x2: &CVector,
) -> Result<(HermitianMatrix, HermitianMatrix, HermitianMatrix)> {
    let eps1 = mse_e1(x1, w, v, eff).inverse_pd()?;
    let eps2 = mse_e2(x2, v, eff).inverse_pd()?;
    let eps3 = eve_covariance(w, v, eff).inverse_pd()?;
    Ok((eps1, eps2, eps3))
}

/// Closed-form filter and weight update for a given `w`.
pub fn update_auxiliaries(
    eff: &EffectiveChannels,
    w: &CVector,
    v: &CVector,
) -> Result<WmmseAuxiliaries> {
    let (x1, x2) = update_x(eff, w, v)?;
    let (eps1, eps2, eps3) = update_eps(eff, w, v, &x1, &x2)?;
    Ok(WmmseAuxiliaries {
        x1,
        x2,
        eps1,
        eps2,
        eps3,
    })
}

/// `ln det S - Tr(S E) + dim`; maximized over `S` at `S = E^{-1}` with value `-ln det E`.
pub fn weighted_mse_term(eps: &HermitianMatrix, e: &HermitianMatrix) -> Result<f64> {
    Ok(log_det_pd(eps)? - crate::numerics::trace_product(eps, e)? + eps.dim() as f64)
}

/// WMMSE surrogate objective (nats) at arbitrary auxiliaries.
pub fn surrogate_objective(
    eff: &EffectiveChannels,
    w: &CVector,
    v: &CVector,
    aux: &WmmseAuxiliaries,
) -> Result<f64> {
    Ok(weighted_mse_term(&aux.eps1, &mse_e1(&aux.x1, w, v, eff))?
        + weighted_mse_term(&aux.eps2, &mse_e2(&aux.x2, v, eff))?
        + weighted_mse_term(&aux.eps3, &eve_covariance(w, v, eff))?)
}

/// The objective the surrogate is tight on: user rate minus the log-det
/// eavesdropper rate, in nats.
pub fn wmmse_objective(eff: &EffectiveChannels, w: &CVector, v: &CVector) -> Result<f64> {
    let s = &eff.h_bu * w;
    let j = &eff.g_eu * v;
    let a1 = (norm_sqr(&s) / (1.0 + norm_sqr(&j))).ln_1p();
    let t = &eff.h_iei * v;
    let jam_cov = HermitianMatrix::identity(t.len()).add(&HermitianMatrix::outer(&t));
    Ok(a1 + log_det_pd(&jam_cov)? - log_det_pd(&eve_covariance(w, v, eff))?)
}

/// Solution of `min w^H A w - 2 Re(b^H w)` subject to `‖w‖² ≤ P`.
#[derive(Debug, Clone)]
pub struct NormBallSolution {
    pub w: CVector,
    /// Lagrange multiplier of the power constraint.
    pub lambda: f64,
    pub objective: f64,
    /// `‖(A + λI) w - b‖`.
    pub kkt_residual: f64,
    /// `λ (‖w‖² - P)`.
    pub slackness: f64,
}

pub fn quadratic_objective(a: &HermitianMatrix, b: &CVector, w: &CVector) -> f64 {
    a.quadratic_form(w) - 2.0 * b.dotc(w).re
}

/// Exact solver of the norm-ball constrained convex quadratic program.
///
/// Works in the eigenbasis of `A`, where `‖w(λ)‖² = Σ |c_i|² / (μ_i + λ)²` is
/// decreasing in `λ`, and bisects the multiplier on `[0, ‖b‖/√P]`.
pub fn solve_norm_ball_qp(a: &HermitianMatrix, b: &CVector, p: f64) -> Result<NormBallSolution> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::dims("solve_norm_ball_qp", n, b.len()));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::invalid("p_bs", "power budget must be > 0"));
    }
    let b_norm = b.norm();
    if b_norm == 0.0 {
        let w = CVector::zeros(n);
        return Ok(NormBallSolution {
            objective: 0.0,
            w,
            lambda: 0.0,
            kkt_residual: 0.0,
            slackness: 0.0,
        });
    }
    let eig = hermitian_eig(a)?;
    let mu: Vec<f64> = eig.values.iter().map(|&m| m.max(0.0)).collect();
    let c = eig.vectors.adjoint() * b;
    let mu_max = mu.first().copied().unwrap_or(0.0);
    let null_tol = 1e-12 * mu_max;
    let is_null = |i: usize| mu[i] <= null_tol;

    let norm2 = |lambda: f64| -> f64 {
        (0..n)
            .filter(|&i| lambda > 0.0 || !is_null(i))
            .map(|i| c[i].norm_sqr() / (mu[i] + lambda).powi(2))
            .sum()
    };
    let build = |lambda: f64| -> CVector {
        let mut coeff = CVector::zeros(n);
        for i in 0..n {
            if lambda > 0.0 || !is_null(i) {
                coeff[i] = c[i] / (mu[i] + lambda);
            }
        }
        &eig.vectors * coeff
    };

    let unbounded_at_zero = (0..n).any(|i| is_null(i) && c[i].norm() > 1e-12 * b_norm);
    let (mut w, lambda) = if !unbounded_at_zero && norm2(0.0) <= p {
        (build(0.0), 0.0)
    } else {
        let mut lo = 0.0_f64;
        let mut hi = b_norm / p.sqrt();
        let mut iter = 0;
        while iter < BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = norm2(mid);
            if (g - p).abs() <= 1e-15 * p {
                hi = mid;
                break;
            }
            if g > p {
                lo = mid;
            } else {
                hi = mid;
            }
            iter += 1;
        }
        let lambda = hi;
        let g = norm2(lambda);
        if (g - p).abs() > POWER_MATCH_TOL * p {
            return Err(Error::Numerical(format!(
                "norm-ball bisection stalled: |‖w‖² - P| = {:e}",
                (g - p).abs()
            )));
        }
        let mut w = build(lambda);
        w *= Complex64::new((p / norm_sqr(&w)).sqrt(), 0.0);
        (w, lambda)
    };
    if norm_sqr(&w) > p {
        // Interior solutions can overshoot by rounding only.
        w *= Complex64::new((p / norm_sqr(&w)).sqrt(), 0.0);
    }
    let resid = a.as_matrix() * &w + &w * Complex64::new(lambda, 0.0) - b;
    Ok(NormBallSolution {
        objective: quadratic_objective(a, b, &w),
        kkt_residual: resid.norm(),
        slackness: lambda * (norm_sqr(&w) - p),
        w,
        lambda,
    })
}

/// Assembles the quadratic program in `w` for fixed auxiliaries:
/// `A = H_bu^H x1 eps1 x1^H H_bu + H_bei^H eps3 H_bei`, `b = H_bu^H x1 eps1`.
pub fn w_subproblem(
    eff: &EffectiveChannels,
    x1: &CVector,
    eps1: &HermitianMatrix,
    eps3: &HermitianMatrix,
) -> (HermitianMatrix, CVector) {
    // g = H_bu^H x1, a K-vector.
    let g: CVector = eff.h_bu.adjoint() * x1;
    let e1 = eps1.get(0, 0).re;
    let a_user = HermitianMatrix::outer(&g).scale(e1);
    let a_eve = HermitianMatrix::from_hermitian_part(
        &(eff.h_bei.adjoint() * eps3.as_matrix() * &eff.h_bei),
    );
    (a_user.add(&a_eve), g * Complex64::new(e1, 0.0))
}

/// Optimal `w` for fixed auxiliaries under `‖w‖² ≤ P_BS`.
pub fn solve_w(
    eff: &EffectiveChannels,
    x1: &CVector,
    eps1: &HermitianMatrix,
    eps3: &HermitianMatrix,
    p_bs: f64,
) -> Result<NormBallSolution> {
    let (a, b) = w_subproblem(eff, x1, eps1, eps3);
    solve_norm_ball_qp(&a, &b, p_bs)
}

/// Maximum-ratio transmission toward a channel vector `h` (the receiver sees `h^H w`).
pub fn mrt(h: &CVector, power: f64) -> CVector {
    let n = h.norm();
    if n == 0.0 {
        let mut w = CVector::zeros(h.len());
        if !w.is_empty() {
            w[0] = Complex64::new(power.sqrt(), 0.0);
        }
        return w;
    }
    h * Complex64::new(power.sqrt() / n, 0.0)
}

/// Global maximizer of the fixed-`θ` secrecy rate on the power sphere.
///
/// With a single-stream user the secrecy rate equals
/// `log2((1 + w^H A w) / (1 + w^H B w))` with `A = h^H h / (1 + |g_eu v|²)` and
/// `B = H_BeI^H H_BeI / (1 + ‖H_IeI v‖²)`, so the best direction on
/// `‖w‖² = P` is the top generalized eigenvector of `(I/P + A, I/P + B)`.
pub fn closed_form_beamformer(eff: &EffectiveChannels, v: &CVector, p_bs: f64) -> Result<CVector> {
    if p_bs.is_nan() || p_bs <= 0.0 {
        return Err(Error::invalid("p_bs", "must be positive"));
    }
    let k = eff.bs_antennas();
    let jam = (&eff.g_eu * v)[0].norm_sqr();
    let a = HermitianMatrix::gram(&eff.h_bu).scale(1.0 / (1.0 + jam));
    let self_jam = norm_sqr(&(&eff.h_iei * v));
    let b = HermitianMatrix::gram(&eff.h_bei).scale(1.0 / (1.0 + self_jam));
    let floor = HermitianMatrix::identity(k).scale(1.0 / p_bs);
    let inv_sqrt = hermitian_eig(&floor.add(&b))?.reconstruct_with(|x| 1.0 / x.sqrt());
    let pencil = HermitianMatrix::from_hermitian_part(
        &(inv_sqrt.as_matrix() * floor.add(&a).as_matrix() * inv_sqrt.as_matrix()),
    );
    let top = hermitian_eig(&pencil)?.vectors.column(0).into_owned();
    let w = inv_sqrt.as_matrix() * top;
    let n = w.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Numerical(
            "degenerate generalized eigenvector".into(),
        ));
    }
    Ok(w * Complex64::new(p_bs.sqrt() / n, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveConfig {
    /// Relative change of the WMMSE objective that ends the BCD loop.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ActiveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 100,
        }
    }
}

/// One BCD cycle of the active subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveCycle {
    /// WMMSE objective (nats) after the cycle.
    pub objective: f64,
    /// True secrecy rate (bit/s/Hz) after the cycle.
    pub secrecy_rate: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct ActiveOutcome {
    /// Iterate with the highest true secrecy rate, the starting point included.
    pub w: CVector,
    pub secrecy_rate: f64,
    pub initial_secrecy_rate: f64,
    pub cycles: Vec<ActiveCycle>,
    pub converged: bool,
}

/// WMMSE block coordinate ascent over `(x, eps, w)` from `w_init`.
pub fn active_bcd(
    eff: &EffectiveChannels,
    v: &CVector,
    w_init: &CVector,
    p_bs: f64,
    cfg: &ActiveConfig,
) -> Result<ActiveOutcome> {
    let true_rate = |w: &CVector| -> Result<f64> {
        Ok(secrecy_rate(eff, &BeamformingState::new(w.clone(), v.clone()))?.raw)
    };
    let mut w = w_init.clone();
    let mut objective = wmmse_objective(eff, &w, v)?;
    let initial = true_rate(&w)?;
    let mut best = (w.clone(), initial);
    let mut cycles = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        let aux = update_auxiliaries(eff, &w, v)?;
        let sol = solve_w(eff, &aux.x1, &aux.eps1, &aux.eps3, p_bs)?;
        w = sol.w;
        let next = wmmse_objective(eff, &w, v)?;
        if next < objective - MONOTONE_TOL * objective.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "WMMSE objective decreased from {objective} to {next}"
            )));
        }
        let rate = true_rate(&w)?;
        cycles.push(ActiveCycle {
            objective: next,
            secrecy_rate: rate,
            lambda: sol.lambda,
        });
        if rate >= best.1 {
            best = (w.clone(), rate);
        }
        let change = (next - objective).abs() / objective.abs().max(1e-12);
        objective = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(ActiveOutcome {
        w: best.0,
        secrecy_rate: best.1,
        initial_secrecy_rate: initial,
        cycles,
        converged,
    })
}
