//! IRS common-phase space-time code for high-mobility users.
//!
//! Slot 1 sends `w·s₁` with common phase `φ₁ = ∠s₂ − ∠s₁`; slot 2 sends
//! `−w·s₂*` with `φ₂ = φ₁ + π`. The reflected path then carries `s₂` in
//! slot 1 and `s₁*` in slot 2, giving the 2×2 orthogonal channel
//! `H = [[h̃, g̃], [g̃*, −h̃*]]` with `HᴴH = (|h̃|²+|g̃|²)I`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::channel::complex_gaussian;
use crate::numerics::{c64, cis, hermitian_eig, CMatrix, CVector, HermitianMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PskSymbol {
    pub index: usize,
    pub order: usize,
}

impl PskSymbol {
    pub fn value(&self) -> Complex64 {
        cis(2.0 * PI * self.index as f64 / self.order as f64)
    }

    pub fn angle(&self) -> f64 {
        2.0 * PI * self.index as f64 / self.order as f64
    }
}

pub fn psk_modulate(index: usize, order: usize) -> Result<PskSymbol, StcError> {
    if order < 2 {
        return Err(StcError::InvalidInput(format!("PSK order {order} < 2")));
    }
    if index >= order {
        return Err(StcError::InvalidInput(format!(
            "symbol index {index} out of range for order {order}"
        )));
    }
    Ok(PskSymbol { index, order })
}

/// Uniform random PSK symbol value.
pub fn random_psk<R: Rng + ?Sized>(order: usize, rng: &mut R) -> (usize, Complex64) {
    let i = rng.random_range(0..order);
    (i, cis(2.0 * PI * i as f64 / order as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StcSchedule {
    pub beam_slot1: CVector,
    pub beam_slot2: CVector,
    /// Radians in [0, 2π).
    pub phi1: f64,
    pub phi2: f64,
}

fn wrap(phase: f64) -> f64 {
    let p = phase.rem_euclid(2.0 * PI);
    // rem_euclid can return 2π for tiny negative inputs.
    if p >= 2.0 * PI {
        0.0
    } else {
        p
    }
}

pub fn encode_pair(s1: Complex64, s2: Complex64, w: &CVector) -> StcSchedule {
    let phi1 = wrap(s2.arg() - s1.arg());
    StcSchedule {
        beam_slot1: w * s1,
        beam_slot2: -(w * s2.conj()),
        phi1,
        phi2: wrap(phi1 + PI),
    }
}

/// Transmit-beamformed Alamouti: slot vectors `(w s₁ + w′ s₂, −w s₂* + w′ s₁*)`.
pub fn alamouti_encode(
    s1: Complex64,
    s2: Complex64,
    w: &CVector,
    w2: &CVector,
) -> (CVector, CVector) {
    (w * s1 + w2 * s2, w2 * s1.conj() - w * s2.conj())
}

/// `(h_kᴴ w, g_kᴴ diag(θ) R w)` at element level.
pub fn effective_gains(
    h_k: &CVector,
    g_k: &CVector,
    theta: &CVector,
    r: &CMatrix,
    w: &CVector,
) -> (Complex64, Complex64) {
    let rw = r * w;
    let g = g_k
        .iter()
        .zip(theta.iter())
        .zip(rw.iter())
        .map(|((g, t), x)| g.conj() * t * x)
        .sum();
    (h_k.dotc(w), g)
}

/// A high-mobility user's links reduced to BS-side vectors:
/// `directᴴ x = h_kᴴ x` and `reflectedᴴ x = g_kᴴ diag(θ̄) R x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLink {
    pub direct: CVector,
    pub reflected: CVector,
}

impl PairLink {
    pub fn from_channels(h_k: &CVector, g_k: &CVector, theta: &CVector, r: &CMatrix) -> Self {
        let tg = CVector::from_iterator(
            g_k.len(),
            g_k.iter().zip(theta.iter()).map(|(g, t)| g * t.conj()),
        );
        PairLink {
            direct: h_k.clone(),
            reflected: r.adjoint() * tg,
        }
    }

    /// Direct path only (no IRS, or R = 0).
    pub fn direct_only(h_k: &CVector) -> Self {
        PairLink {
            direct: h_k.clone(),
            reflected: CVector::zeros(h_k.len()),
        }
    }

    pub fn gains(&self, w: &CVector) -> (Complex64, Complex64) {
        (self.direct.dotc(w), self.reflected.dotc(w))
    }

    /// Received amplitude for transmit vector `x` under common phase `phi`.
    pub fn respond(&self, phi: f64, x: &CVector) -> Complex64 {
        self.direct.dotc(x) + cis(phi) * self.reflected.dotc(x)
    }
}

/// One low-mobility stream as seen by a high-mobility receiver.
#[derive(Debug, Clone, Copy)]
pub struct Interferer<'a> {
    pub beam: &'a CVector,
    /// Symbol in slot 1 and slot 2.
    pub symbols: [Complex64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StcPairFrame {
    pub schedule: StcSchedule,
    pub effective_direct: Complex64,
    pub effective_reflected: Complex64,
    pub received: [Complex64; 2],
    pub combined: [Complex64; 2],
}

/// Received sample in one slot, including interference and noise.
pub fn receive_slot(
    link: &PairLink,
    phi: f64,
    x: &CVector,
    interferers: &[Interferer<'_>],
    slot: usize,
    noise: Complex64,
) -> Complex64 {
    let rot = cis(phi);
    let mut y = link.direct.dotc(x) + rot * link.reflected.dotc(x) + noise;
    for it in interferers {
        y += (link.direct.dotc(it.beam) + rot * link.reflected.dotc(it.beam)) * it.symbols[slot];
    }
    y
}

/// Both slots of the IRS code with high-mobility beam `w`, then combining.
pub fn simulate_pair(
    schedule: &StcSchedule,
    w: &CVector,
    link: &PairLink,
    interferers: &[Interferer<'_>],
    noise: [Complex64; 2],
) -> StcPairFrame {
    let y1 = receive_slot(link, schedule.phi1, &schedule.beam_slot1, interferers, 0, noise[0]);
    let y2 = receive_slot(link, schedule.phi2, &schedule.beam_slot2, interferers, 1, noise[1]);
    let (h, g) = link.gains(w);
    StcPairFrame {
        schedule: schedule.clone(),
        effective_direct: h,
        effective_reflected: g,
        received: [y1, y2],
        combined: combine(h, g, [y1, y2]),
    }
}

/// Two CN(0, σ²) noise samples.
pub fn draw_noise<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> [Complex64; 2] {
    let n = complex_gaussian(rng, 2, sigma2);
    [n[0], n[1]]
}

/// `Hᴴ (y₁, y₂*)` for `H = [[h, g], [g*, −h*]]`.
pub fn combine(h: Complex64, g: Complex64, y: [Complex64; 2]) -> [Complex64; 2] {
    let y2c = y[1].conj();
    [h.conj() * y[0] + g * y2c, g.conj() * y[0] - h * y2c]
}

/// The 2×2 equivalent channel.
pub fn equivalent_channel(h: Complex64, g: Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[h, g, g.conj(), -h.conj()])
}

/// Coherent PSK decision: argmax over the constellation of `Re(c*·y)`,
/// smallest index on ties.
pub fn detect_symbol(y: Complex64, order: usize) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..order {
        let c = cis(2.0 * PI * i as f64 / order as f64);
        let v = (c.conj() * y).re;
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

pub fn detect(combined: [Complex64; 2], order: usize) -> (usize, usize) {
    (detect_symbol(combined[0], order), detect_symbol(combined[1], order))
}

/// Instantaneous high-mobility SINR with `path_gain = β/d_k^α`.
#[allow(clippy::too_many_arguments)]
pub fn high_mobility_sinr(
    low_beams: &[CVector],
    high_beam: &CVector,
    h_k: &CVector,
    g_k: &CVector,
    theta: &CVector,
    r: &CMatrix,
    sigma2: f64,
    path_gain: f64,
) -> f64 {
    let (h, g) = effective_gains(h_k, g_k, theta, r, high_beam);
    let rr = r.adjoint() * r;
    let interference: f64 = low_beams
        .iter()
        .map(|w| path_gain * (w.norm_squared() + 2.0 * w.dotc(&(&rr * w)).re))
        .sum();
    (h.norm_sqr() + g.norm_sqr()) / (interference + sigma2)
}

/// `w_{L+1}ᴴ G w_{L+1} / (Σ_l w_lᴴ G w_l + σ̄²)` with `G = I + 2RᴴR` and
/// `sigma_bar_sq = d^α σ²/β`.
pub fn avg_high_mobility_sinr(
    low_beams: &[CVector],
    high_beam: &CVector,
    r: &CMatrix,
    sigma_bar_sq: f64,
) -> f64 {
    let rr = r.adjoint() * r;
    let q = |w: &CVector| w.norm_squared() + 2.0 * w.dotc(&(&rr * w)).re;
    q(high_beam) / (low_beams.iter().map(q).sum::<f64>() + sigma_bar_sq)
}

/// Draws Rayleigh high-mobility links directly in the reduced form.
///
/// With `g ~ CN(0, 2β/d^α·I)` and unit-modulus θ̄, the reflected vector
/// `Rᴴ diag(θ̄*) g` is `CN(0, 2β/d^α·RᴴR)` whatever θ̄ is, so an M×M
/// square-root factor of RᴴR replaces an N-dimensional draw.
#[derive(Debug, Clone)]
pub struct FadingSampler {
    direct_variance: f64,
    /// `S` with `S Sᴴ = 2β/d^α · RᴴR`; `None` without a reflected path.
    factor: Option<CMatrix>,
    m: usize,
}

impl FadingSampler {
    pub fn new(r: Option<&CMatrix>, m: usize, path_gain: f64) -> Self {
        let factor = r.map(|r| {
            let rr = HermitianMatrix::symmetrized(r.adjoint() * r);
            let e = hermitian_eig(&rr).expect("finite RᴴR");
            let mut s = e.vectors.clone();
            for (j, &lam) in e.values.iter().enumerate() {
                let sc = (2.0 * path_gain * lam.max(0.0)).sqrt();
                s.column_mut(j).scale_mut(sc);
            }
            s
        });
        FadingSampler {
            direct_variance: path_gain,
            factor,
            m,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PairLink {
        let direct = complex_gaussian(rng, self.m, self.direct_variance);
        let reflected = match &self.factor {
            Some(s) => s * complex_gaussian(rng, self.m, 1.0),
            None => CVector::zeros(self.m),
        };
        PairLink { direct, reflected }
    }
}

/// `v / ‖v‖`; the zero vector is returned unchanged.
pub fn unit(v: &CVector) -> CVector {
    let n = v.norm();
    if n == 0.0 {
        v.clone()
    } else {
        v * c64(1.0 / n, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psk_points() {
        let v = |i| psk_modulate(i, 8).unwrap().value();
        assert!((v(0) - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((v(2) - c64(0.0, 1.0)).norm() < 1e-15);
        assert!((v(4) - c64(-1.0, 0.0)).norm() < 1e-15);
        assert!(psk_modulate(8, 8).is_err());
        assert!(psk_modulate(0, 1).is_err());
    }

    #[test]
    fn schedule_phases() {
        let w = CVector::from_vec(vec![c64(1.0, 0.0)]);
        let s = encode_pair(c64(1.0, 0.0), c64(0.0, 1.0), &w);
        assert!((s.phi1 - PI / 2.0).abs() < 1e-15);
        assert!((s.phi2 - 1.5 * PI).abs() < 1e-15);
        let s = encode_pair(c64(0.6, 0.8), c64(0.6, 0.8), &w);
        assert!(s.phi1.abs() < 1e-15 && (s.phi2 - PI).abs() < 1e-15);
        let s = encode_pair(c64(-1.0, 0.0), c64(1.0, 0.0), &w);
        assert!((s.phi1 - PI).abs() < 1e-15 && s.phi2.abs() < 1e-12);
    }

    #[test]
    fn orthogonal_channel_identity() {
        let frame = simulate_pair(
            &encode_pair(c64(0.0, 1.0), c64(-1.0, 0.0), &CVector::from_vec(vec![c64(1.0, 0.0)])),
            &CVector::from_vec(vec![c64(1.0, 0.0)]),
            &PairLink {
                direct: CVector::from_vec(vec![c64(1.0, 0.0)]),
                reflected: CVector::from_vec(vec![c64(0.0, 0.0)]),
            },
            &[],
            [c64(0.0, 0.0); 2],
        );
        assert!((frame.combined[0] - c64(0.0, 1.0)).norm() < 1e-15);
        assert!((frame.combined[1] - c64(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn detection_basics() {
        assert_eq!(detect([c64(1.0, 0.0), c64(0.0, 1.0)], 8), (0, 2));
        assert_eq!(detect([c64(3.0, 0.0), c64(0.0, 7.5)], 8), (0, 2));
        // Exactly between points 0 and 1: smaller index wins.
        assert_eq!(detect_symbol(cis(PI / 8.0), 8), 0);
    }

    #[test]
    fn sinr_trivial_cases() {
        let h = CVector::from_vec(vec![c64(1.0, 0.0)]);
        let g = CVector::from_vec(vec![c64(0.0, 0.0)]);
        let th = CVector::from_vec(vec![c64(1.0, 0.0)]);
        let r = CMatrix::from_element(1, 1, c64(0.3, 0.1));
        let w = CVector::from_vec(vec![c64(1.0, 0.0)]);
        assert!((high_mobility_sinr(&[], &w, &h, &g, &th, &r, 1.0, 1.0) - 1.0).abs() < 1e-15);
        let w2 = &w * c64(2.0, 0.0);
        assert!((high_mobility_sinr(&[], &w2, &h, &g, &th, &r, 1.0, 1.0) - 4.0).abs() < 1e-14);
        let r0 = CMatrix::zeros(1, 1);
        assert!((avg_high_mobility_sinr(&[], &w, &r0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduced_link_matches_element_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = complex_gaussian(&mut rng, 3, 1.0);
        let g = complex_gaussian(&mut rng, 5, 1.0);
        let theta = CVector::from_iterator(5, (0..5).map(|_| cis(rng.random::<f64>() * 6.0)));
        let r = CMatrix::from_fn(5, 3, |i, j| c64((i + 2 * j) as f64 * 0.1, 0.2 - j as f64 * 0.05));
        let w = complex_gaussian(&mut rng, 3, 1.0);
        let link = PairLink::from_channels(&h, &g, &theta, &r);
        let (a, b) = effective_gains(&h, &g, &theta, &r, &w);
        let (c, d) = link.gains(&w);
        assert!((a - c).norm() < 1e-14 && (b - d).norm() < 1e-14);
    }
}
