//! Single-target array sensing: snapshot model `Y = β α(u) sᵀ + N`,
//! Cramér–Rao bounds on the spatial AoA and MUSIC estimation.
//!
//! Steering entries are `exp(i 2π/λ (x_n u + y_n v))`; linear arrays lie on
//! the x axis and only use `u`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::LinearApv;
use crate::channel::complex_normal;
use crate::error::{domain, Error, Result};
use crate::geometry::Vec3;
use crate::linalg::{cis, hermitian_eig, CMat, CVec};
use crate::C64;

/// Spatial angle of arrival. `v` is present for planar arrays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialAoa {
    pub u: f64,
    #[serde(default)]
    pub v: Option<f64>,
}

impl SpatialAoa {
    pub fn linear(u: f64) -> Self {
        Self { u, v: None }
    }

    pub fn planar(u: f64, v: f64) -> Self {
        Self { u, v: Some(v) }
    }

    pub fn check(&self) -> Result<()> {
        let v = self.v.unwrap_or(0.0);
        if !(self.u.abs() <= 1.0) || !(v.abs() <= 1.0) || self.u * self.u + v * v > 1.0 + 1e-12 {
            return domain("spatial AoA must lie in the unit disc");
        }
        Ok(())
    }
}

/// Everything that defines one sensing experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingSetup {
    /// Antenna positions; `z` is ignored.
    pub positions: Vec<Vec3>,
    pub snapshots: usize,
    /// Per-snapshot transmit power, watts.
    pub power: f64,
    pub noise: f64,
    pub beta: C64,
    pub target: SpatialAoa,
    pub wavelength: f64,
}

impl SensingSetup {
    /// Linear array along x with unit path gain.
    pub fn linear(apv: &LinearApv, u: f64, snr_db: f64, snapshots: usize, wavelength: f64) -> Self {
        Self {
            positions: apv.positions().iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect(),
            snapshots,
            power: 10f64.powf(snr_db / 10.0),
            noise: 1.0,
            beta: C64::new(1.0, 0.0),
            target: SpatialAoa::linear(u),
            wavelength,
        }
    }

    /// Planar array with unit path gain.
    pub fn planar(positions: Vec<Vec3>, u: f64, v: f64, snr_db: f64, snapshots: usize, wavelength: f64) -> Self {
        Self {
            positions,
            snapshots,
            power: 10f64.powf(snr_db / 10.0),
            noise: 1.0,
            beta: C64::new(1.0, 0.0),
            target: SpatialAoa::planar(u, v),
            wavelength,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.positions.is_empty() {
            return domain("sensing array has no antennas");
        }
        if self.snapshots == 0 {
            return domain("at least one snapshot is required");
        }
        if !(self.power > 0.0) || !(self.noise >= 0.0) || !(self.wavelength > 0.0) {
            return domain("power and wavelength must be positive, noise nonnegative");
        }
        self.target.check()
    }

    /// `σ²λ² / (8π² T_s P N |β|²)`, the factor shared by every CRB here.
    pub fn crb_scale(&self) -> f64 {
        let n = self.positions.len() as f64;
        self.noise * self.wavelength.powi(2)
            / (8.0 * PI * PI * self.snapshots as f64 * self.power * n * self.beta.norm_sqr())
    }

    pub fn steering(&self, aoa: &SpatialAoa) -> CVec {
        steering(&self.positions, aoa.u, aoa.v.unwrap_or(0.0), self.wavelength)
    }
}

fn steering(positions: &[Vec3], u: f64, v: f64, wavelength: f64) -> CVec {
    let c = 2.0 * PI / wavelength;
    CVec::from_iterator(positions.len(), positions.iter().map(|p| cis(c * (p.x * u + p.y * v))))
}

/// Received snapshots, `N × T_s`. Each snapshot carries `√P e^{iψ_t}` with a
/// uniform random phase, so every signal entry has power `P|β|²`.
pub fn simulate_snapshots(setup: &SensingSetup, seed: u64) -> Result<CMat> {
    setup.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = setup.steering(&setup.target);
    let n = a.len();
    let t = setup.snapshots;
    let s: Vec<C64> = (0..t).map(|_| cis(rng.random_range(0.0..2.0 * PI)) * setup.power.sqrt()).collect();
    let mut y = CMat::zeros(n, t);
    for j in 0..t {
        for i in 0..n {
            y[(i, j)] = setup.beta * a[i] * s[j];
        }
    }
    if setup.noise > 0.0 {
        for j in 0..t {
            for i in 0..n {
                y[(i, j)] += complex_normal(&mut rng, setup.noise);
            }
        }
    }
    Ok(y)
}

fn moments(p: &[Vec3]) -> (f64, f64, f64) {
    let n = p.len() as f64;
    let mx = p.iter().map(|q| q.x).sum::<f64>() / n;
    let my = p.iter().map(|q| q.y).sum::<f64>() / n;
    let (mut vx, mut vy, mut c) = (0.0, 0.0, 0.0);
    for q in p {
        vx += (q.x - mx).powi(2);
        vy += (q.y - my).powi(2);
        c += (q.x - mx) * (q.y - my);
    }
    (vx / n, vy / n, c / n)
}

/// CRB on `u` for a linear array: `σ²λ² / (8π² T_s P N |β|² var(x))`.
pub fn crb_1d(setup: &SensingSetup) -> Result<f64> {
    setup.check()?;
    let (vx, _, _) = moments(&setup.positions);
    if !(vx > 0.0) {
        return Err(Error::Domain("zero position variance: all antennas co-located".into()));
    }
    Ok(setup.crb_scale() / vx)
}

/// `(CRB_u, CRB_v)` for a planar array, with the cross-coupling through
/// `cov(x, y)` accounted for.
pub fn crb_2d(setup: &SensingSetup) -> Result<(f64, f64)> {
    setup.check()?;
    let (vx, vy, c) = moments(&setup.positions);
    let det = vx * vy - c * c;
    if !(det > 1e-14 * (vx * vy).max(f64::MIN_POSITIVE)) {
        return Err(Error::Domain("degenerate planar geometry (collinear or co-located antennas)".into()));
    }
    let s = setup.crb_scale();
    Ok((s * vy / det, s * vx / det))
}

/// Lower bound on `max(CRB_u, CRB_v)` over any placement inside a region
/// of circumradius `a_cir`: `σ²λ² / (4π² T_s P N |β|² A_cir²)`.
pub fn crb_2d_lower_bound(a_cir: f64, setup: &SensingSetup) -> Result<f64> {
    if !(a_cir > 0.0) {
        return domain("circumradius must be positive");
    }
    Ok(2.0 * setup.crb_scale() / (a_cir * a_cir))
}

/// Search settings for MUSIC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicConfig {
    /// Pseudo-spectrum grid points per axis on `[−1, 1]`.
    pub grid: usize,
    /// Golden-section stopping width.
    pub tol: f64,
}

impl Default for MusicConfig {
    fn default() -> Self {
        Self { grid: 2048, tol: 1e-6 }
    }
}

impl MusicConfig {
    /// Defaults for the 2D search, where the grid is per axis.
    pub fn planar() -> Self {
        Self { grid: 256, tol: 1e-6 }
    }
}

/// Signal-subspace eigenvector of `YYᴴ/T_s`.
fn signal_vector(y: &CMat) -> Result<CVec> {
    let n = y.nrows();
    if n < 2 {
        return Err(Error::Domain("MUSIC needs at least two antennas".into()));
    }
    if y.ncols() == 0 {
        return Err(Error::Domain("MUSIC needs at least one snapshot".into()));
    }
    let r = y * y.adjoint() / C64::new(y.ncols() as f64, 0.0);
    let (_, vecs) = hermitian_eig(&r);
    Ok(vecs.column(n - 1).into_owned())
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// MUSIC estimate of `u` for a linear array.
///
/// The noise subspace is spanned by the `N−1` smallest eigenvectors of the
/// sample covariance, so `‖E_nᴴ a(u)‖² = N − |e_sᴴ a(u)|²` and the
/// pseudo-spectrum peak is the maximizer of `|e_sᴴ a(u)|²`, evaluated that
/// way to avoid cancellation near the peak. The best grid point is refined
/// by golden-section search over its neighboring cells.
pub fn music_1d(y: &CMat, apv: &LinearApv, wavelength: f64, config: &MusicConfig) -> Result<SpatialAoa> {
    if y.nrows() != apv.len() {
        return Err(Error::Dimension("snapshot rows differ from antenna count".into()));
    }
    if config.grid < 2 {
        return domain("MUSIC grid needs at least two points");
    }
    let es = signal_vector(y)?;
    let c = 2.0 * PI / wavelength;
    let x = apv.positions();
    let spec = |u: f64| -> f64 {
        x.iter().zip(es.iter()).map(|(&xn, e)| e.conj() * cis(c * xn * u)).sum::<C64>().norm_sqr()
    };
    let step = 2.0 / (config.grid - 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..config.grid {
        let u = -1.0 + i as f64 * step;
        let p = spec(u);
        if p > best.0 {
            best = (p, u);
        }
    }
    let u0 = best.1;
    let u = golden_max(spec, (u0 - step).max(-1.0), (u0 + step).min(1.0), config.tol);
    Ok(SpatialAoa::linear(u))
}

/// MUSIC estimate of `(u, v)` for a planar array: grid search over the
/// unit disc, then alternating golden-section refinement of `u` and `v`.
pub fn music_2d(y: &CMat, positions: &[Vec3], wavelength: f64, config: &MusicConfig) -> Result<SpatialAoa> {
    if y.nrows() != positions.len() {
        return Err(Error::Dimension("snapshot rows differ from antenna count".into()));
    }
    if config.grid < 2 {
        return domain("MUSIC grid needs at least two points");
    }
    let es = signal_vector(y)?;
    let c = 2.0 * PI / wavelength;
    let g = config.grid;
    let step = 2.0 / (g - 1) as f64;
    let axis: Vec<f64> = (0..g).map(|i| -1.0 + i as f64 * step).collect();
    // Separable tables: conj(e_n)·e^{icx_n u} and e^{icy_n v}.
    let ex: Vec<Vec<C64>> =
        positions.iter().zip(es.iter()).map(|(p, e)| axis.iter().map(|&u| e.conj() * cis(c * p.x * u)).collect()).collect();
    let ey: Vec<Vec<C64>> = positions.iter().map(|p| axis.iter().map(|&v| cis(c * p.y * v)).collect()).collect();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for (iu, &u) in axis.iter().enumerate() {
        for (iv, &v) in axis.iter().enumerate() {
            if u * u + v * v > 1.0 {
                continue;
            }
            let s: C64 = (0..positions.len()).map(|n| ex[n][iu] * ey[n][iv]).sum();
            let p = s.norm_sqr();
            if p > best.0 {
                best = (p, u, v);
            }
        }
    }
    let spec = |u: f64, v: f64| -> f64 {
        positions.iter().zip(es.iter()).map(|(p, e)| e.conj() * cis(c * (p.x * u + p.y * v))).sum::<C64>().norm_sqr()
    };
    let (_, mut u, mut v) = best;
    let (u0, v0) = (u, v);
    for _ in 0..50 {
        let (pu, pv) = (u, v);
        u = golden_max(|t| spec(t, v), (u0 - step).max(-1.0), (u0 + step).min(1.0), config.tol);
        v = golden_max(|t| spec(u, t), (v0 - step).max(-1.0), (v0 + step).min(1.0), config.tol);
        if (u - pu).abs() < config.tol && (v - pv).abs() < config.tol {
            break;
        }
    }
    let r = (u * u + v * v).sqrt();
    if r > 1.0 {
        u /= r;
        v /= r;
    }
    Ok(SpatialAoa::planar(u, v))
}
