//! Achievable rates of the legitimate user and the eavesdropper.
//!
//! All rates are in bit/s/Hz. Noise is folded into the effective channels by
//! scaling with `1/σ`, so every SINR below has a unit noise term.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{adjoint_row, norm_sqr, CMatrix, CVector};

/// Unit-modulus RIS reflection coefficients `θ_l = exp(j α_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionCoefficients {
    phases: Vec<f64>,
}

impl ReflectionCoefficients {
    /// All phases zero, i.e. every coefficient equal to one.
    pub fn zeros(l: usize) -> Self {
        Self {
            phases: vec![0.0; l],
        }
    }

    /// Phases are wrapped into `[0, 2π)`.
    pub fn from_phases(phases: impl IntoIterator<Item = f64>) -> Self {
        Self {
            phases: phases.into_iter().map(|a| a.rem_euclid(TAU)).collect(),
        }
    }

    /// Keeps only the argument of each entry; zero entries map to phase 0.
    pub fn from_coefficients(c: &CVector) -> Self {
        Self::from_phases(c.iter().map(|z| if z.norm() > 0.0 { z.arg() } else { 0.0 }))
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn coefficients(&self) -> CVector {
        CVector::from_iterator(
            self.phases.len(),
            self.phases.iter().map(|&a| Complex64::from_polar(1.0, a)),
        )
    }
}

/// BS beamformer `w` and jammer beamformer `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingState {
    pub w: CVector,
    pub v: CVector,
}

impl BeamformingState {
    pub fn new(w: CVector, v: CVector) -> Self {
        Self { w, v }
    }

    /// Checks the power budgets `‖w‖² ≤ P_BS`, `‖v‖² ≤ P_jam` (1e-9 relative slack).
    pub fn check_power(&self, p_bs: f64, p_jam: f64) -> Result<()> {
        let pw = norm_sqr(&self.w);
        if pw > p_bs * (1.0 + 1e-9) {
            return Err(Error::invalid(
                "w",
                format!("power {pw:e} exceeds budget {p_bs:e}"),
            ));
        }
        let pv = norm_sqr(&self.v);
        if pv > p_jam * (1.0 + 1e-9) {
            return Err(Error::invalid(
                "v",
                format!("power {pv:e} exceeds budget {p_jam:e}"),
            ));
        }
        Ok(())
    }
}

/// Noise-normalized composite channels for a fixed RIS configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    /// BS → user, `1 × K`.
    pub h_bu: CMatrix,
    /// Eavesdropper → user, `1 × N_t`.
    pub g_eu: CMatrix,
    /// BS → eavesdropper, `N_r × K`.
    pub h_bei: CMatrix,
    /// Eavesdropper → eavesdropper through the RIS, `N_r × N_t`.
    pub h_iei: CMatrix,
}

impl EffectiveChannels {
    pub fn bs_antennas(&self) -> usize {
        self.h_bu.ncols()
    }

    pub fn eve_rx_antennas(&self) -> usize {
        self.h_bei.nrows()
    }

    pub fn eve_tx_antennas(&self) -> usize {
        self.g_eu.ncols()
    }
}

fn scaled_diag_cols(m: &CMatrix, d: &CVector) -> CMatrix {
    // m · diag(d)
    let mut out = m.clone();
    for (j, dj) in d.iter().enumerate() {
        for i in 0..out.nrows() {
            out[(i, j)] *= dj;
        }
    }
    out
}

/// Builds the composite channels. `sigma_u2`/`sigma_e2` are noise variances.
pub fn effective_channels(
    ch: &ChannelSet,
    theta: &ReflectionCoefficients,
    sigma_u2: f64,
    sigma_e2: f64,
) -> Result<EffectiveChannels> {
    let l = ch.ris_elements();
    if theta.len() != l {
        return Err(Error::dims("effective_channels", l, theta.len()));
    }
    let coeffs = theta.coefficients();
    let inv_su = Complex64::new(1.0 / sigma_u2.sqrt(), 0.0);
    let inv_se = Complex64::new(1.0 / sigma_e2.sqrt(), 0.0);

    // h_iu^H θ as a 1 × L row, and H_ie θ.
    let iu_theta = scaled_diag_cols(&adjoint_row(&ch.h_iu), &coeffs);
    let ie_theta = scaled_diag_cols(&ch.h_ie, &coeffs);

    let h_bu = (adjoint_row(&ch.h_bu) + &iu_theta * &ch.h_bi) * inv_su;
    let g_eu = (adjoint_row(&ch.g_eu) + &iu_theta * &ch.g_ei) * inv_su;
    let h_bei = (&ch.h_be + &ie_theta * &ch.h_bi) * inv_se;
    let h_iei = (&ie_theta * &ch.g_ei) * inv_se;
    Ok(EffectiveChannels {
        h_bu,
        g_eu,
        h_bei,
        h_iei,
    })
}

fn check_bf(eff: &EffectiveChannels, bf: &BeamformingState) -> Result<()> {
    if bf.w.len() != eff.bs_antennas() {
        return Err(Error::dims("beamformer w", eff.bs_antennas(), bf.w.len()));
    }
    if bf.v.len() != eff.eve_tx_antennas() {
        return Err(Error::dims("jammer v", eff.eve_tx_antennas(), bf.v.len()));
    }
    Ok(())
}

/// Signal and interference powers at the user, noise-normalized.
pub fn user_sinr_terms(eff: &EffectiveChannels, bf: &BeamformingState) -> (f64, f64) {
    (
        norm_sqr(&(&eff.h_bu * &bf.w)),
        norm_sqr(&(&eff.g_eu * &bf.v)),
    )
}

/// Signal and self-interference powers at the eavesdropper, noise-normalized.
pub fn eve_sinr_terms(eff: &EffectiveChannels, bf: &BeamformingState) -> (f64, f64) {
    (
        norm_sqr(&(&eff.h_bei * &bf.w)),
        norm_sqr(&(&eff.h_iei * &bf.v)),
    )
}

pub fn user_rate(eff: &EffectiveChannels, bf: &BeamformingState) -> Result<f64> {
    check_bf(eff, bf)?;
    let (s, j) = user_sinr_terms(eff, bf);
    Ok((s / (j + 1.0)).ln_1p() / std::f64::consts::LN_2)
}

pub fn eve_rate(eff: &EffectiveChannels, bf: &BeamformingState) -> Result<f64> {
    check_bf(eff, bf)?;
    let (s, j) = eve_sinr_terms(eff, bf);
    Ok((s / (j + 1.0)).ln_1p() / std::f64::consts::LN_2)
}

/// User, eavesdropper and secrecy rates of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyRate {
    pub user: f64,
    pub eve: f64,
    /// `user - eve`, possibly negative.
    pub raw: f64,
    /// `max(raw, 0)`.
    pub clipped: f64,
}

impl SecrecyRate {
    pub fn from_rates(user: f64, eve: f64) -> Self {
        let raw = user - eve;
        Self {
            user,
            eve,
            raw,
            clipped: raw.max(0.0),
        }
    }
}

pub fn secrecy_rate(eff: &EffectiveChannels, bf: &BeamformingState) -> Result<SecrecyRate> {
    Ok(SecrecyRate::from_rates(
        user_rate(eff, bf)?,
        eve_rate(eff, bf)?,
    ))
}

/// Convenience: effective channels and rates in one call.
pub fn evaluate(
    ch: &ChannelSet,
    theta: &ReflectionCoefficients,
    bf: &BeamformingState,
    sigma_u2: f64,
    sigma_e2: f64,
) -> Result<SecrecyRate> {
    let eff = effective_channels(ch, theta, sigma_u2, sigma_e2)?;
    secrecy_rate(&eff, bf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, Scenario};
    use crate::numerics::standard_complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> CVector {
        CVector::from_fn(n, |_, _| standard_complex_normal(rng))
    }

    fn setup(
        seed: u64,
    ) -> (
        Scenario,
        ChannelSet,
        ReflectionCoefficients,
        BeamformingState,
    ) {
        let s = Scenario {
            bs_antennas: 3,
            ris_elements: 4,
            eve_rx_antennas: 2,
            eve_tx_antennas: 2,
            seed,
            ..Scenario::default()
        };
        let ch = generate_channels(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = ReflectionCoefficients::from_phases(
            (0..4).map(|_| rand::Rng::random_range(&mut rng, 0.0..TAU)),
        );
        let w = random_vec(3, &mut rng) * c(0.3, 0.0);
        let v = random_vec(2, &mut rng) * c(1e-3, 0.0);
        (s, ch, theta, BeamformingState::new(w, v))
    }

    /// Rates written with raw channels and explicit noise variances.
    fn raw_rates(
        ch: &ChannelSet,
        theta: &ReflectionCoefficients,
        bf: &BeamformingState,
        su2: f64,
        se2: f64,
    ) -> (f64, f64) {
        let l = theta.len();
        let mut th = CMatrix::zeros(l, l);
        for (i, z) in theta.coefficients().iter().enumerate() {
            th[(i, i)] = *z;
        }
        let user_sig = (ch.h_bu.adjoint() + ch.h_iu.adjoint() * &th * &ch.h_bi) * &bf.w;
        let user_jam = (ch.g_eu.adjoint() + ch.h_iu.adjoint() * &th * &ch.g_ei) * &bf.v;
        let eve_sig = (&ch.h_be + &ch.h_ie * &th * &ch.h_bi) * &bf.w;
        let eve_jam = (&ch.h_ie * &th * &ch.g_ei) * &bf.v;
        let ru = (1.0 + user_sig[0].norm_sqr() / (user_jam[0].norm_sqr() + su2)).log2();
        let re = (1.0 + eve_sig.norm_squared() / (eve_jam.norm_squared() + se2)).log2();
        (ru, re)
    }

    #[test]
    fn ris_path_removed_gives_direct_channel() {
        let (s, mut ch, _, _) = setup(1);
        ch.h_iu.fill(c(0.0, 0.0));
        let theta = ReflectionCoefficients::zeros(4);
        let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
        let want = ch.h_bu.adjoint() / c(s.sigma_u2.sqrt(), 0.0);
        assert!((&eff.h_bu - want).norm() <= 1e-12 * eff.h_bu.norm());
    }

    #[test]
    fn no_ris_terms_reduce_to_direct_channels() {
        let (s, ch, theta, _) = setup(2);
        let ch = ch.without_ris();
        let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
        let su = c(s.sigma_u2.sqrt(), 0.0);
        let se = c(s.sigma_e2.sqrt(), 0.0);
        assert!((&eff.h_bu - ch.h_bu.adjoint() / su).norm() <= 1e-12 * eff.h_bu.norm());
        assert!((&eff.g_eu - ch.g_eu.adjoint() / su).norm() <= 1e-12 * eff.g_eu.norm());
        assert!((&eff.h_bei - &ch.h_be / se).norm() <= 1e-12 * eff.h_bei.norm());
        assert_eq!(eff.h_iei.norm(), 0.0);
    }

    #[test]
    fn effective_channels_match_full_theta_matrix_products() {
        for seed in 0..10 {
            let (s, ch, theta, _) = setup(seed);
            let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
            let l = theta.len();
            let mut th = CMatrix::zeros(l, l);
            for (i, z) in theta.coefficients().iter().enumerate() {
                th[(i, i)] = *z;
            }
            let su = c(s.sigma_u2.sqrt(), 0.0);
            let se = c(s.sigma_e2.sqrt(), 0.0);
            let h_iei = &ch.h_ie * &th * &ch.g_ei / se;
            let h_bei = (&ch.h_be + &ch.h_ie * &th * &ch.h_bi) / se;
            let g_eu = (ch.g_eu.adjoint() + ch.h_iu.adjoint() * &th * &ch.g_ei) / su;
            assert!((&eff.h_iei - h_iei).norm() <= 1e-12 * eff.h_iei.norm());
            assert!((&eff.h_bei - h_bei).norm() <= 1e-12 * eff.h_bei.norm());
            assert!((&eff.g_eu - g_eu).norm() <= 1e-12 * eff.g_eu.norm());
        }
    }

    #[test]
    fn zero_beamformer_gives_zero_rates() {
        let (s, ch, theta, mut bf) = setup(3);
        bf.w.fill(c(0.0, 0.0));
        let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
        assert_eq!(user_rate(&eff, &bf).unwrap(), 0.0);
        assert_eq!(eve_rate(&eff, &bf).unwrap(), 0.0);
        let r = secrecy_rate(&eff, &bf).unwrap();
        assert_eq!(r.raw, 0.0);
    }

    #[test]
    fn unit_snr_gives_one_bit() {
        let eff = EffectiveChannels {
            h_bu: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            g_eu: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            h_bei: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            h_iei: CMatrix::from_element(1, 1, c(0.0, 0.0)),
        };
        let bf = BeamformingState::new(
            CVector::from_element(1, c(1.0, 0.0)),
            CVector::from_element(1, c(0.0, 0.0)),
        );
        assert!((user_rate(&eff, &bf).unwrap() - 1.0).abs() < 1e-15);
        // Single-antenna eavesdropper without jamming mirrors the user formula.
        assert!((eve_rate(&eff, &bf).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(secrecy_rate(&eff, &bf).unwrap().raw, 0.0);
    }

    #[test]
    fn rates_match_raw_channel_formulas() {
        for seed in 0..20 {
            let (s, ch, theta, bf) = setup(seed);
            let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
            let (ru, re) = raw_rates(&ch, &theta, &bf, s.sigma_u2, s.sigma_e2);
            let r = secrecy_rate(&eff, &bf).unwrap();
            assert!((r.user - ru).abs() < 1e-9 * ru.max(1.0));
            assert!((r.eve - re).abs() < 1e-9 * re.max(1.0));
            assert!((r.raw - (r.user - r.eve)).abs() < 1e-12);
            assert_eq!(r.clipped, r.raw.max(0.0));
        }
    }

    #[test]
    fn no_eavesdropper_no_jamming_secrecy_equals_user_rate() {
        let (s, ch, theta, mut bf) = setup(5);
        let ch = ch.without_eavesdropper();
        bf.v.fill(c(0.0, 0.0));
        let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
        let r = secrecy_rate(&eff, &bf).unwrap();
        assert_eq!(r.eve, 0.0);
        assert_eq!(r.raw, r.user);
    }

    #[test]
    fn global_phase_invariance() {
        let (s, ch, theta, bf) = setup(6);
        let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
        let r0 = secrecy_rate(&eff, &bf).unwrap();
        let rot = BeamformingState::new(&bf.w * Complex64::from_polar(1.0, 1.234), bf.v.clone());
        let r1 = secrecy_rate(&eff, &rot).unwrap();
        assert!((r0.user - r1.user).abs() < 1e-12);
        assert!((r0.eve - r1.eve).abs() < 1e-12);
    }

    #[test]
    fn jamming_never_helps_the_user() {
        let (s, ch, theta, bf) = setup(7);
        let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
        let mut prev = f64::INFINITY;
        for scale in [0.0, 0.5, 1.0, 2.0, 10.0, 100.0] {
            let b = BeamformingState::new(bf.w.clone(), &bf.v * c(scale, 0.0));
            let ru = user_rate(&eff, &b).unwrap();
            assert!(ru <= prev + 1e-15);
            prev = ru;
        }
    }

    #[test]
    fn doubling_noise_halves_normalized_powers() {
        let (s, ch, theta, bf) = setup(8);
        let eff2 = effective_channels(&ch, &theta, 2.0 * s.sigma_u2, s.sigma_e2).unwrap();
        let eff = effective_channels(&ch, &theta, s.sigma_u2, s.sigma_e2).unwrap();
        let (sig, jam) = user_sinr_terms(&eff, &bf);
        let manual = (1.0 + (sig / 2.0) / (jam / 2.0 + 1.0)).log2();
        assert!((user_rate(&eff2, &bf).unwrap() - manual).abs() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let (s, ch, _, bf) = setup(9);
        assert!(effective_channels(
            &ch,
            &ReflectionCoefficients::zeros(3),
            s.sigma_u2,
            s.sigma_e2
        )
        .is_err());
        let eff = effective_channels(
            &ch,
            &ReflectionCoefficients::zeros(4),
            s.sigma_u2,
            s.sigma_e2,
        )
        .unwrap();
        let bad = BeamformingState::new(CVector::zeros(2), bf.v.clone());
        assert!(user_rate(&eff, &bad).is_err());
    }

    #[test]
    fn reflection_coefficients_are_unit_modulus() {
        let t = ReflectionCoefficients::from_phases([-1.0, 7.0, 0.5]);
        assert!(t.phases().iter().all(|a| (0.0..TAU).contains(a)));
        assert!(t
            .coefficients()
            .iter()
            .all(|z| (z.norm() - 1.0).abs() < 1e-15));
        let back = ReflectionCoefficients::from_coefficients(&(t.coefficients() * c(3.0, 0.0)));
        for (a, b) in t.phases().iter().zip(back.phases()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn power_budget_check() {
        let bf = BeamformingState::new(
            CVector::from_element(2, c(1.0, 0.0)),
            CVector::from_element(1, c(0.5, 0.0)),
        );
        assert!(bf.check_power(2.0, 0.25).is_ok());
        assert!(bf.check_power(1.9, 0.25).is_err());
        assert!(bf.check_power(2.0, 0.2).is_err());
    }
}
