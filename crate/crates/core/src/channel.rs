//! Geometry, path loss and Rician fading for the seven links of the
//! RIS-aided downlink with a full-duplex eavesdropper.
//!
//! Node layout (polar coordinates, meters / radians): BS at the origin, RIS
//! on a fixed circle, user and eavesdropper sharing one random bearing per
//! realization. Every link draws from its own substream, and every fading
//! entry from its own sub-substream, so growing an array only appends new
//! entries and leaves existing ones untouched.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{standard_complex_normal, CMatrix, CVector};
use crate::rng::substream;

/// Reference distance of the path-loss model, in meters.
pub const REFERENCE_DISTANCE: f64 = 1.0;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polar {
    pub radius: f64,
    pub angle: f64,
}

impl Polar {
    pub const fn new(radius: f64, angle: f64) -> Self {
        Self { radius, angle }
    }
}

/// Path-loss exponent of every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossExponents {
    pub bu: f64,
    pub be: f64,
    pub bi: f64,
    pub iu: f64,
    pub ie: f64,
    pub eu: f64,
    pub ei: f64,
}

impl Default for PathlossExponents {
    fn default() -> Self {
        Self {
            bu: 3.75,
            be: 3.75,
            bi: 2.2,
            iu: 2.2,
            ie: 2.2,
            eu: 2.5,
            ei: 2.5,
        }
    }
}

impl PathlossExponents {
    fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> {
        [
            ("bu", self.bu),
            ("be", self.be),
            ("bi", self.bi),
            ("iu", self.iu),
            ("ie", self.ie),
            ("eu", self.eu),
            ("ei", self.ei),
        ]
        .into_iter()
    }
}

/// Physical parameters of one experiment instance. Powers and variances are
/// linear watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub bs_antennas: usize,
    pub ris_elements: usize,
    pub eve_rx_antennas: usize,
    pub eve_tx_antennas: usize,
    pub bs_position: Polar,
    pub ris_position: Polar,
    pub user_radius: f64,
    pub eve_radius: f64,
    /// Common bearing of user and eavesdropper, within `[0, π/2]`.
    pub beta: f64,
    pub p_bs: f64,
    pub p_jam: f64,
    pub sigma_u2: f64,
    pub sigma_e2: f64,
    pub l0: f64,
    pub pathloss: PathlossExponents,
    pub rician_k: f64,
    pub spacing_ratio: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            bs_antennas: 3,
            ris_elements: 16,
            eve_rx_antennas: 2,
            eve_tx_antennas: 2,
            bs_position: Polar::new(0.0, 0.0),
            ris_position: Polar::new(40.0, FRAC_PI_4),
            user_radius: 30.0,
            eve_radius: 25.0,
            beta: FRAC_PI_4,
            p_bs: dbm_to_watts(30.0),
            p_jam: dbm_to_watts(DEFAULT_P_JAM_DBM),
            sigma_u2: dbm_to_watts(-105.0),
            sigma_e2: dbm_to_watts(-105.0),
            l0: db_to_linear(-30.0),
            pathloss: PathlossExponents::default(),
            rician_k: 1.0,
            spacing_ratio: 0.5,
            seed: 0,
        }
    }
}

/// Jammer power used when none is configured.
pub const DEFAULT_P_JAM_DBM: f64 = -20.0;

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        for (key, n) in [
            ("bs_antennas", self.bs_antennas),
            ("ris_elements", self.ris_elements),
            ("eve_rx_antennas", self.eve_rx_antennas),
            ("eve_tx_antennas", self.eve_tx_antennas),
        ] {
            if n == 0 {
                return Err(Error::invalid(key, "must be at least 1"));
            }
        }
        for (key, x) in [
            ("p_bs", self.p_bs),
            ("p_jam", self.p_jam),
            ("sigma_u2", self.sigma_u2),
            ("sigma_e2", self.sigma_e2),
            ("l0", self.l0),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::invalid(
                    key,
                    format!("must be finite and > 0, got {x}"),
                ));
            }
        }
        for (key, e) in self.pathloss.iter() {
            if !(e.is_finite() && e >= 2.0) {
                return Err(Error::invalid(
                    format!("pathloss.{key}"),
                    format!("exponent must be >= 2, got {e}"),
                ));
            }
        }
        if !(0.0..=FRAC_PI_2).contains(&self.beta) {
            return Err(Error::invalid(
                "beta",
                format!("must lie in [0, pi/2], got {}", self.beta),
            ));
        }
        if !(self.rician_k.is_finite() && self.rician_k >= 0.0) {
            return Err(Error::invalid("rician_k", "must be finite and >= 0"));
        }
        if !(self.spacing_ratio.is_finite() && self.spacing_ratio > 0.0) {
            return Err(Error::invalid("spacing_ratio", "must be finite and > 0"));
        }
        for (key, r) in [
            ("user_radius", self.user_radius),
            ("eve_radius", self.eve_radius),
            ("ris_position.radius", self.ris_position.radius),
            ("bs_position.radius", self.bs_position.radius),
        ] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::invalid(key, "radius must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn user_position(&self) -> Polar {
        Polar::new(self.user_radius, self.beta)
    }

    pub fn eve_position(&self) -> Polar {
        Polar::new(self.eve_radius, self.beta)
    }

    /// Distance of every link, in link order.
    pub fn link_distances(&self) -> [(Link, f64); 7] {
        let bs = self.bs_position;
        let ris = self.ris_position;
        let user = self.user_position();
        let eve = self.eve_position();
        [
            (Link::BsRis, polar_distance(bs, ris)),
            (Link::BsUser, polar_distance(bs, user)),
            (Link::BsEve, polar_distance(bs, eve)),
            (Link::RisUser, polar_distance(ris, user)),
            (Link::RisEve, polar_distance(ris, eve)),
            (Link::EveRis, polar_distance(eve, ris)),
            (Link::EveUser, polar_distance(eve, user)),
        ]
    }

    pub fn exponent(&self, link: Link) -> f64 {
        let p = &self.pathloss;
        match link {
            Link::BsRis => p.bi,
            Link::BsUser => p.bu,
            Link::BsEve => p.be,
            Link::RisUser => p.iu,
            Link::RisEve => p.ie,
            Link::EveRis => p.ei,
            Link::EveUser => p.eu,
        }
    }

    /// `(receive, transmit)` array sizes of a link's channel matrix.
    pub fn link_shape(&self, link: Link) -> (usize, usize) {
        let (k, l, nr, nt) = (
            self.bs_antennas,
            self.ris_elements,
            self.eve_rx_antennas,
            self.eve_tx_antennas,
        );
        match link {
            Link::BsRis => (l, k),
            Link::BsUser => (1, k),
            Link::BsEve => (nr, k),
            Link::RisUser => (1, l),
            Link::RisEve => (nr, l),
            Link::EveRis => (l, nt),
            Link::EveUser => (1, nt),
        }
    }
}

/// The seven propagation links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    BsRis,
    BsUser,
    BsEve,
    RisUser,
    RisEve,
    EveRis,
    EveUser,
}

impl Link {
    pub const ALL: [Link; 7] = [
        Link::BsRis,
        Link::BsUser,
        Link::BsEve,
        Link::RisUser,
        Link::RisEve,
        Link::EveRis,
        Link::EveUser,
    ];

    fn tag(self) -> u64 {
        match self {
            Link::BsRis => 1,
            Link::BsUser => 2,
            Link::BsEve => 3,
            Link::RisUser => 4,
            Link::RisEve => 5,
            Link::EveRis => 6,
            Link::EveUser => 7,
        }
    }
}

const TAG_ANGLES: u64 = 0xA9_1E;
const TAG_FADING: u64 = 0xFAD1;

/// Realized channels. Column vectors follow the downlink convention: the
/// user sees `h_bu^H w`, `h_iu^H θ ...` and `g_eu^H v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS → RIS, `L × K`.
    pub h_bi: CMatrix,
    /// BS → user, length `K`.
    pub h_bu: CVector,
    /// BS → eavesdropper, `N_r × K`.
    pub h_be: CMatrix,
    /// RIS → user, length `L`.
    pub h_iu: CVector,
    /// RIS → eavesdropper, `N_r × L`.
    pub h_ie: CMatrix,
    /// Eavesdropper → RIS, `L × N_t`.
    pub g_ei: CMatrix,
    /// Eavesdropper → user, length `N_t`.
    pub g_eu: CVector,
}

impl ChannelSet {
    pub fn bs_antennas(&self) -> usize {
        self.h_bu.len()
    }

    pub fn ris_elements(&self) -> usize {
        self.h_iu.len()
    }

    pub fn eve_rx_antennas(&self) -> usize {
        self.h_be.nrows()
    }

    pub fn eve_tx_antennas(&self) -> usize {
        self.g_eu.len()
    }

    /// Checks shape consistency and finiteness.
    pub fn validate(&self) -> Result<()> {
        let (k, l, nr, nt) = (
            self.bs_antennas(),
            self.ris_elements(),
            self.eve_rx_antennas(),
            self.eve_tx_antennas(),
        );
        let shapes = [
            ("h_bi", self.h_bi.shape(), (l, k)),
            ("h_be", self.h_be.shape(), (nr, k)),
            ("h_ie", self.h_ie.shape(), (nr, l)),
            ("g_ei", self.g_ei.shape(), (l, nt)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::DimensionMismatch {
                    context: "ChannelSet",
                    expected: format!("{name} {}x{}", want.0, want.1),
                    actual: format!("{}x{}", got.0, got.1),
                });
            }
        }
        let finite = |m: &CMatrix| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let all = [&self.h_bi, &self.h_be, &self.h_ie, &self.g_ei];
        if !all.iter().all(|m| finite(m))
            || ![&self.h_bu, &self.h_iu, &self.g_eu]
                .iter()
                .all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("ChannelSet"));
        }
        Ok(())
    }

    /// Same channels with every RIS-related link set to zero.
    pub fn without_ris(&self) -> Self {
        let mut out = self.clone();
        out.h_bi.fill(Complex64::new(0.0, 0.0));
        out.h_iu.fill(Complex64::new(0.0, 0.0));
        out.h_ie.fill(Complex64::new(0.0, 0.0));
        out.g_ei.fill(Complex64::new(0.0, 0.0));
        out
    }

    /// Same channels with every link into the eavesdropper set to zero.
    pub fn without_eavesdropper(&self) -> Self {
        let mut out = self.clone();
        out.h_be.fill(Complex64::new(0.0, 0.0));
        out.h_ie.fill(Complex64::new(0.0, 0.0));
        out
    }

    /// Same channels with the jamming links set to zero.
    pub fn without_jamming_links(&self) -> Self {
        let mut out = self.clone();
        out.g_ei.fill(Complex64::new(0.0, 0.0));
        out.g_eu.fill(Complex64::new(0.0, 0.0));
        out
    }
}

/// Euclidean distance between two polar points (law of cosines).
pub fn polar_distance(p1: Polar, p2: Polar) -> f64 {
    let d2 = p1.radius * p1.radius + p2.radius * p2.radius
        - 2.0 * p1.radius * p2.radius * (p1.angle - p2.angle).cos();
    d2.max(0.0).sqrt()
}

/// Uniform linear array response; entry `m` is `exp(2πj · spacing · m · sin(angle))`.
pub fn steering_vector(n: usize, angle: f64, spacing_ratio: f64) -> CVector {
    let step = 2.0 * PI * spacing_ratio * angle.sin();
    CVector::from_fn(n, |m, _| Complex64::from_polar(1.0, step * m as f64))
}

/// Rician matrix with the NLoS part supplied entry by entry.
pub fn rician_from_nlos(
    rows: usize,
    cols: usize,
    k: f64,
    aoa: f64,
    aod: f64,
    spacing_ratio: f64,
    mut nlos: impl FnMut(usize, usize) -> Complex64,
) -> CMatrix {
    let (los_w, nlos_w) = rician_weights(k);
    let a_rx = steering_vector(rows, aoa, spacing_ratio);
    let a_tx = steering_vector(cols, aod, spacing_ratio);
    CMatrix::from_fn(rows, cols, |i, j| {
        let los = if los_w > 0.0 {
            a_rx[i] * a_tx[j].conj() * los_w
        } else {
            Complex64::new(0.0, 0.0)
        };
        los + nlos(i, j) * nlos_w
    })
}

/// `(sqrt(k/(k+1)), sqrt(1/(k+1)))`.
pub fn rician_weights(k: f64) -> (f64, f64) {
    ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
}

/// `sqrt(k/(k+1)) a_rx(aoa) a_tx(aod)^H + sqrt(1/(k+1)) Q_NLoS`, with the
/// NLoS entries drawn from `rng` in column-major order.
pub fn rician_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    k: f64,
    aoa: f64,
    aod: f64,
    spacing_ratio: f64,
    rng: &mut R,
) -> CMatrix {
    rician_from_nlos(rows, cols, k, aoa, aod, spacing_ratio, |_, _| {
        standard_complex_normal(rng)
    })
}

/// Amplitude gain `sqrt(L0 d^-exponent)`. Distances below the reference
/// distance are clamped; the flag reports whether that happened.
pub fn pathloss_gain(d: f64, exponent: f64, l0: f64) -> (f64, bool) {
    let clamped = d < REFERENCE_DISTANCE;
    if clamped {
        warn!("link distance {d} m below reference distance; clamped");
    }
    let d = d.max(REFERENCE_DISTANCE);
    ((l0 * d.powf(-exponent)).sqrt(), clamped)
}

/// Draws the common bearing of user and eavesdropper uniformly on `[0, π/2]`.
pub fn draw_beta(seed: u64) -> f64 {
    let mut rng = substream(seed, &[0xBE7A]);
    rng.random_range(0.0..=FRAC_PI_2)
}

/// Realizes all seven links for `s`, reproducibly from `s.seed`.
pub fn generate_channels(s: &Scenario) -> Result<ChannelSet> {
    s.validate()?;
    let distances = s.link_distances();
    let mut out = std::collections::HashMap::with_capacity(7);
    for (link, d) in distances {
        let (rows, cols) = s.link_shape(link);
        let (gain, _) = pathloss_gain(d, s.exponent(link), s.l0);
        let mut angles = substream(s.seed, &[link.tag(), TAG_ANGLES]);
        let aoa = angles.random_range(0.0..2.0 * PI);
        let aod = angles.random_range(0.0..2.0 * PI);
        let q = rician_from_nlos(rows, cols, s.rician_k, aoa, aod, s.spacing_ratio, |i, j| {
            let mut r = substream(s.seed, &[link.tag(), TAG_FADING, i as u64, j as u64]);
            standard_complex_normal(&mut r)
        });
        out.insert(link, q * Complex64::new(gain, 0.0));
    }
    let mut take = |l: Link| out.remove(&l).expect("every link generated");
    // Single-antenna receivers see a 1 × n row; store its conjugate as a column.
    let row_to_col = |m: CMatrix| -> CVector { m.row(0).adjoint() };
    let set = ChannelSet {
        h_bi: take(Link::BsRis),
        h_bu: row_to_col(take(Link::BsUser)),
        h_be: take(Link::BsEve),
        h_iu: row_to_col(take(Link::RisUser)),
        h_ie: take(Link::RisEve),
        g_ei: take(Link::EveRis),
        g_eu: row_to_col(take(Link::EveUser)),
    };
    set.validate()?;
    Ok(set)
}
