//! Scenario geometry and random channel realizations.
//!
//! Layout: the IRS is a √N×√N grid in the x–z plane, the BS a uniform
//! linear array along y at half-wavelength pitch, and users sit in the
//! horizontal plane through the IRS center at a fixed distance, at an
//! azimuth drawn uniformly in (−80°, 80°) around the IRS boresight (+y).
//!
//! Channel vectors follow the convention that `hᴴ x` is the received
//! amplitude for transmit vector `x`.

mod config;

pub use config::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm, ExperimentConfig};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::numerics::{c64, cis, CMatrix, CVector};

/// Half-width of the user azimuth arc, in degrees.
pub const AZIMUTH_HALF_WIDTH_DEG: f64 = 80.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
    #[error("IRS element {element} coincides with BS antenna {antenna}")]
    DegenerateGeometry { element: usize, antenna: usize },
}

pub type Point = [f64; 3];

fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Partition of IRS elements into square subsurfaces sharing one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    /// Group id of each element.
    pub group_of: Vec<usize>,
    /// Groups along x and along z.
    pub grid: (usize, usize),
}

impl Grouping {
    /// Element `n = iz·side + ix` joins group `(iz/edge)·(side/edge) + ix/edge`.
    pub fn square(side: usize, edge: usize) -> Self {
        let per_row = side / edge;
        let mut group_of = Vec::with_capacity(side * side);
        for iz in 0..side {
            for ix in 0..side {
                group_of.push((iz / edge) * per_row + ix / edge);
            }
        }
        Grouping {
            group_of,
            grid: (per_row, per_row),
        }
    }

    pub fn group_count(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    pub fn element_count(&self) -> usize {
        self.group_of.len()
    }

    /// Element-level phase vector from group phases.
    pub fn expand(&self, group_phases: &CVector) -> CVector {
        CVector::from_iterator(
            self.group_of.len(),
            self.group_of.iter().map(|&g| group_phases[g]),
        )
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.group_count()];
        for (n, &g) in self.group_of.iter().enumerate() {
            m[g].push(n);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemGeometry {
    pub bs_antenna_positions: Vec<Point>,
    pub irs_element_positions: Vec<Point>,
    /// Low-mobility users first, then high-mobility users.
    pub user_positions: Vec<Point>,
    pub grouping: Grouping,
}

impl SystemGeometry {
    pub fn low_user(&self, l: usize) -> &Point {
        &self.user_positions[l]
    }
}

/// One realization of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// R, N×M.
    pub bs_irs: CMatrix,
    pub direct_low: Vec<CVector>,
    pub irs_low: Vec<CVector>,
    pub direct_high: Vec<CVector>,
    pub irs_high: Vec<CVector>,
    /// d_k of each high-mobility user.
    pub high_distances: Vec<f64>,
}

/// Fixed array layout plus random user placement.
pub fn build_geometry<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> SystemGeometry {
    let side = cfg.irs_side();
    let half = (side as f64 - 1.0) / 2.0;
    let c = cfg.irs_center;
    let mut irs = Vec::with_capacity(side * side);
    for iz in 0..side {
        for ix in 0..side {
            irs.push([
                c[0] + (ix as f64 - half) * cfg.element_spacing,
                c[1],
                c[2] + (iz as f64 - half) * cfg.element_spacing,
            ]);
        }
    }
    let b = cfg.bs_center;
    let pitch = cfg.wavelength / 2.0;
    let mhalf = (cfg.bs_antennas as f64 - 1.0) / 2.0;
    let bs = (0..cfg.bs_antennas)
        .map(|m| [b[0], b[1] + (m as f64 - mhalf) * pitch, b[2]])
        .collect();
    let width = AZIMUTH_HALF_WIDTH_DEG.to_radians();
    let users = (0..cfg.low_users + cfg.high_users)
        .map(|_| {
            let psi = rng.random_range(-width..width);
            [
                c[0] + cfg.user_distance * psi.sin(),
                c[1] + cfg.user_distance * psi.cos(),
                c[2],
            ]
        })
        .collect();
    SystemGeometry {
        bs_antenna_positions: bs,
        irs_element_positions: irs,
        user_positions: users,
        grouping: Grouping::square(side, cfg.group_edge),
    }
}

/// Near-field line-of-sight R with per-entry spherical phase and
/// free-space amplitude.
pub fn gen_bs_irs_channel(
    geom: &SystemGeometry,
    cfg: &ExperimentConfig,
) -> Result<CMatrix, ChannelError> {
    let n = geom.irs_element_positions.len();
    let m = geom.bs_antenna_positions.len();
    let k = 2.0 * PI / cfg.wavelength;
    let mut r = CMatrix::zeros(n, m);
    for (i, e) in geom.irs_element_positions.iter().enumerate() {
        for (j, a) in geom.bs_antenna_positions.iter().enumerate() {
            let d = distance(e, a);
            if d == 0.0 {
                return Err(ChannelError::DegenerateGeometry {
                    element: i,
                    antenna: j,
                });
            }
            let amp = (cfg.beta / d.powf(cfg.alpha_bs_irs)).sqrt();
            r[(i, j)] = cis(-k * d) * amp;
        }
    }
    Ok(r)
}

/// CN(0, variance) entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVector {
    let s = (variance / 2.0).sqrt();
    CVector::from_iterator(
        len,
        (0..len).map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c64(s * re, s * im)
        }),
    )
}

/// Rayleigh h_k (variance β/d^α) and g_k (variance 2β/d^α).
pub fn gen_high_mobility_channels<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> (Vec<CVector>, Vec<CVector>) {
    let pl = cfg.user_path_gain();
    let mut h = Vec::with_capacity(cfg.high_users);
    let mut g = Vec::with_capacity(cfg.high_users);
    for _ in 0..cfg.high_users {
        h.push(complex_gaussian(rng, cfg.bs_antennas, pl));
        g.push(complex_gaussian(rng, cfg.irs_elements, 2.0 * pl));
    }
    (h, g)
}

/// Unit-magnitude spherical-wave response from `src` to each point.
fn los_response(src: &Point, points: &[Point], wavelength: f64) -> CVector {
    let k = 2.0 * PI / wavelength;
    // hᴴ carries e^{-ikd}, so h carries e^{+ikd}.
    CVector::from_iterator(points.len(), points.iter().map(|p| cis(k * distance(src, p))))
}

/// `√(κ/(1+κ))·LoS + √(1/(1+κ))·NLoS`, scaled to per-entry variance `var`.
pub fn rician_vector<R: Rng + ?Sized>(los: &CVector, kappa: f64, var: f64, rng: &mut R) -> CVector {
    let n = los.len();
    if kappa.is_infinite() {
        return los * c64(var.sqrt(), 0.0);
    }
    let a = (kappa / (1.0 + kappa) * var).sqrt();
    let nlos = complex_gaussian(rng, n, var / (1.0 + kappa));
    los * c64(a, 0.0) + nlos
}

/// Rician h_l and g_l with LoS from the user's geometric position.
pub fn gen_low_mobility_channels<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    geom: &SystemGeometry,
    rng: &mut R,
) -> (Vec<CVector>, Vec<CVector>) {
    let pl = cfg.user_path_gain();
    let kappa = cfg.rician_factor();
    let mut h = Vec::with_capacity(cfg.low_users);
    let mut g = Vec::with_capacity(cfg.low_users);
    for l in 0..cfg.low_users {
        let u = geom.low_user(l);
        let los_h = los_response(u, &geom.bs_antenna_positions, cfg.wavelength);
        let los_g = los_response(u, &geom.irs_element_positions, cfg.wavelength);
        h.push(rician_vector(&los_h, kappa, pl, rng));
        g.push(rician_vector(&los_g, kappa, 2.0 * pl, rng));
    }
    (h, g)
}

/// Geometry plus one draw of every channel, consuming `rng` in a fixed order.
pub fn realize<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> Result<(SystemGeometry, ChannelSet), ChannelError> {
    cfg.validate()?;
    let geom = build_geometry(cfg, rng);
    let bs_irs = gen_bs_irs_channel(&geom, cfg)?;
    let (direct_low, irs_low) = gen_low_mobility_channels(cfg, &geom, rng);
    let (direct_high, irs_high) = gen_high_mobility_channels(cfg, rng);
    Ok((
        geom,
        ChannelSet {
            bs_irs,
            direct_low,
            irs_low,
            direct_high,
            irs_high,
            high_distances: vec![cfg.user_distance; cfg.high_users],
        },
    ))
}

/// `I + 2RᴴR`, the high-mobility Gram form.
pub fn high_gram(r: &CMatrix) -> CMatrix {
    let m = r.ncols();
    let mut g = r.adjoint() * r * c64(2.0, 0.0);
    for i in 0..m {
        g[(i, i)] += c64(1.0, 0.0);
    }
    g
}
