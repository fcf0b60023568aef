//! Geometric/statistical channel model: array responses, pathloss, multipath draws
//! and the cascaded BS-IRS-UE channel.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

const UE_PLACEMENT_ATTEMPTS: usize = 1000;

/// One draw of every channel in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS-UE, length M.
    pub h_d: CVector,
    /// BS-IRS, M x N, rank one.
    pub h_br: CMatrix,
    /// IRS-UE, length N.
    pub h_ru: CVector,
    /// Cascaded BS-IRS-UE, `h_br * diag(h_ru)`.
    pub v: CMatrix,
    pub ue_position: Vector3<f64>,
}

impl ChannelRealization {
    pub fn new(h_d: CVector, h_br: CMatrix, h_ru: CVector, ue_position: Vector3<f64>) -> Result<Self> {
        if h_br.nrows() != h_d.len() {
            return Err(Error::Dimension(format!(
                "h_d has {} entries but h_br has {} rows",
                h_d.len(),
                h_br.nrows()
            )));
        }
        let v = cascade(&h_br, &h_ru)?;
        Ok(Self { h_d, h_br, h_ru, v, ue_position })
    }

    pub fn m(&self) -> usize {
        self.h_d.len()
    }

    pub fn n(&self) -> usize {
        self.h_ru.len()
    }
}

/// `(2π/λ) [cos az cos el, sin az cos el, sin el]`.
pub fn wave_vector(azimuth: f64, elevation: f64, lambda_c: f64) -> Vector3<f64> {
    let k = 2.0 * PI / lambda_c;
    Vector3::new(
        k * azimuth.cos() * elevation.cos(),
        k * azimuth.sin() * elevation.cos(),
        k * elevation.sin(),
    )
}

/// Position of IRS element `n` (1-based, row-major over the `n_h`-wide grid)
/// relative to element 1.
pub fn irs_element_position(n: usize, n_h: usize, n_v: usize, d_r: f64, lambda_c: f64) -> Result<Vector3<f64>> {
    if n == 0 || n > n_h * n_v {
        return Err(Error::Precondition(format!(
            "IRS element index {n} outside 1..={}",
            n_h * n_v
        )));
    }
    let i = (n - 1) % n_h;
    let j = (n - 1) / n_h;
    Ok(Vector3::new(0.0, i as f64 * d_r * lambda_c, j as f64 * d_r * lambda_c))
}

/// Position of BS antenna `m` (1-based) on the x-axis.
pub fn bs_element_position(m: usize, d_h: f64, lambda_c: f64) -> Vector3<f64> {
    Vector3::new((m as f64 - 1.0) * d_h * lambda_c, 0.0, 0.0)
}

pub fn array_response_irs(azimuth: f64, elevation: f64, cfg: &SystemConfig) -> CVector {
    let k = wave_vector(azimuth, elevation, cfg.lambda_c);
    CVector::from_fn(cfg.n(), |idx, _| {
        let i = (idx % cfg.n_h) as f64;
        let j = (idx / cfg.n_h) as f64;
        let spacing = cfg.d_r * cfg.lambda_c;
        Complex64::from_polar(1.0, k.y * i * spacing + k.z * j * spacing)
    })
}

/// ULA response along x: entry m is `exp(j 2π (m-1) d_H cos az cos el)`.
pub fn array_response_bs(azimuth: f64, elevation: f64, m: usize, d_h: f64) -> CVector {
    let c = 2.0 * PI * d_h * azimuth.cos() * elevation.cos();
    CVector::from_fn(m, |idx, _| Complex64::from_polar(1.0, c * idx as f64))
}

/// Linear BS-IRS pathloss, `N (d_r λ)^2 / (4π d_br^2)`.
pub fn pathloss_br(cfg: &SystemConfig) -> f64 {
    let area = (cfg.d_r * cfg.lambda_c).powi(2);
    cfg.n() as f64 * area / (4.0 * PI * cfg.d_br * cfg.d_br)
}

/// Complex gain of one path of length `d` meters and delay `tau` seconds.
pub fn path_gain(d: f64, tau: f64, cfg: &SystemConfig) -> Result<Complex64> {
    if !(d > 0.0) {
        return Err(Error::Precondition(format!("path distance must be positive, got {d}")));
    }
    let beta0 = 10f64.powf(cfg.beta0_db / 10.0);
    let magnitude = (beta0 * (d / cfg.d0).powf(-cfg.pathloss_exponent)).sqrt();
    let phase = -2.0 * PI * cfg.carrier_frequency() * tau;
    Ok(Complex64::from_polar(magnitude, phase.rem_euclid(2.0 * PI)))
}

pub fn bs_position() -> Vector3<f64> {
    Vector3::zeros()
}

pub fn irs_position(cfg: &SystemConfig) -> Vector3<f64> {
    Vector3::new(cfg.d_br, 0.0, 0.0)
}

/// Azimuth and elevation of the direction `from -> to`.
pub fn direction_angles(from: &Vector3<f64>, to: &Vector3<f64>) -> (f64, f64) {
    let d = to - from;
    (d.y.atan2(d.x), d.z.atan2(d.x.hypot(d.y)))
}

/// Static LoS channel `sqrt(β_br) a_BS a_IRS^H`.
pub fn los_bs_irs(cfg: &SystemConfig) -> CMatrix {
    let (bs, irs) = (bs_position(), irs_position(cfg));
    let (az_bs, el_bs) = direction_angles(&bs, &irs);
    let (az_irs, el_irs) = direction_angles(&irs, &bs);
    let a_bs = array_response_bs(az_bs, el_bs, cfg.m, cfg.d_h);
    let a_irs = array_response_irs(az_irs, el_irs, cfg);
    (a_bs * a_irs.adjoint()) * Complex64::from(pathloss_br(cfg).sqrt())
}

/// `V = H_br diag(h_ru)`.
pub fn cascade(h_br: &CMatrix, h_ru: &CVector) -> Result<CMatrix> {
    if h_br.ncols() != h_ru.len() {
        return Err(Error::Dimension(format!(
            "h_br has {} columns but h_ru has {} entries",
            h_br.ncols(),
            h_ru.len()
        )));
    }
    let mut v = h_br.clone();
    for (mut col, &g) in v.column_iter_mut().zip(h_ru.iter()) {
        col *= g;
    }
    Ok(v)
}

/// Uniform UE drop in the room, rejecting spots closer than `d_ru_min` to the IRS.
pub fn draw_ue_position<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Vector3<f64>> {
    let irs = irs_position(cfg);
    for _ in 0..UE_PLACEMENT_ATTEMPTS {
        let p = Vector3::new(
            cfg.room.x0 + rng.random::<f64>() * cfg.room.size,
            cfg.room.y0 + rng.random::<f64>() * cfg.room.size,
            cfg.room.height,
        );
        if (p - irs).norm() >= cfg.d_ru_min {
            return Ok(p);
        }
    }
    Err(Error::Precondition(format!(
        "no UE position at least {} m from the IRS after {UE_PLACEMENT_ATTEMPTS} attempts; check the room placement",
        cfg.d_ru_min
    )))
}

/// One multipath component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub azimuth: f64,
    pub elevation: f64,
    /// Seconds.
    pub delay: f64,
}

/// Azimuth ~ U[-π/2, π/2], elevation ~ U[-π/4, π/4], delay ~ U[0, tau_max_ns].
fn draw_paths<R: Rng + ?Sized>(count: usize, tau_max_ns: f64, rng: &mut R) -> Vec<PathParams> {
    (0..count)
        .map(|_| {
            let delay = rng.random::<f64>() * tau_max_ns * 1e-9;
            let azimuth = (rng.random::<f64>() - 0.5) * PI;
            let elevation = (rng.random::<f64>() - 0.5) * PI / 2.0;
            PathParams { azimuth, elevation, delay }
        })
        .collect()
}

/// `sqrt(1/L) Σ_l α_l a(az_l, el_l)`, every path sharing the link distance `d`.
pub fn multipath_channel<F>(paths: &[PathParams], d: f64, cfg: &SystemConfig, response: F) -> Result<CVector>
where
    F: Fn(f64, f64) -> CVector,
{
    if paths.is_empty() {
        return Err(Error::Precondition("a multipath channel needs at least one path".into()));
    }
    let mut h: Option<CVector> = None;
    for p in paths {
        let term = response(p.azimuth, p.elevation) * path_gain(d, p.delay, cfg)?;
        h = Some(match h {
            Some(acc) => acc + term,
            None => term,
        });
    }
    Ok(h.unwrap() * Complex64::from((1.0 / paths.len() as f64).sqrt()))
}

/// Draws a full realization with the UE at a fixed position.
pub fn draw_channel_at<R: Rng + ?Sized>(cfg: &SystemConfig, ue: Vector3<f64>, rng: &mut R) -> Result<ChannelRealization> {
    let d_bu = (ue - bs_position()).norm();
    let d_ru = (ue - irs_position(cfg)).norm();
    let direct = draw_paths(cfg.l_d, cfg.tau_d_max_ns, rng);
    let reflected = draw_paths(cfg.l_ru, cfg.tau_ru_max_ns, rng);
    let h_d = multipath_channel(&direct, d_bu, cfg, |az, el| array_response_bs(az, el, cfg.m, cfg.d_h))?;
    let h_ru = multipath_channel(&reflected, d_ru, cfg, |az, el| array_response_irs(az, el, cfg))?;
    ChannelRealization::new(h_d, los_bs_irs(cfg), h_ru, ue)
}

pub fn draw_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    let ue = draw_ue_position(cfg, rng)?;
    draw_channel_at(cfg, ue, rng)
}
