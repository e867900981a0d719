//! Group movable antenna: a sliding uniform sparse array whose anchor `x`
//! and sparsity `η` are optimized for the uplink sum rate.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::{gma_rate, GmaUser, LinearChannel};
use crate::channel::complex_normal;
use crate::error::{Error, Result};

use super::improves;

/// Random uplink users around a linear BS array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmaUserSpec {
    pub wavelength: f64,
    pub users: usize,
    pub nlos_paths: usize,
    pub kappa_db: f64,
    pub max_distance: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
}

impl GmaUserSpec {
    /// 28 GHz, `K = 5`, one LoS plus five NLoS paths, `κ = 10` dB, users
    /// within 50 m, 10 dBm transmit power, −94 dBm noise.
    pub fn default_28ghz() -> Self {
        Self {
            wavelength: 299_792_458.0 / 28e9,
            users: 5,
            nlos_paths: 5,
            kappa_db: 10.0,
            max_distance: 50.0,
            tx_power_dbm: 10.0,
            noise_dbm: -94.0,
        }
    }
}

/// Users uniform over a disc around the array (at least 1 m away). The
/// LoS cosine follows the user's bearing relative to the array axis; NLoS
/// cosines are uniform. Path powers split the free-space gain
/// `(λ/4πd)²` by the Rician factor.
pub fn gen_gma_users(seed: u64, spec: &GmaUserSpec) -> Result<Vec<GmaUser>> {
    if !(spec.wavelength > 0.0) || !(spec.max_distance > 1.0) {
        return Err(Error::Domain("invalid GMA user spec".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = 10f64.powf(spec.kappa_db / 10.0);
    let snr = 10f64.powf((spec.tx_power_dbm - spec.noise_dbm) / 10.0);
    let mut users = Vec::with_capacity(spec.users);
    for _ in 0..spec.users {
        let r = (spec.max_distance * rng.random::<f64>().sqrt()).max(1.0);
        let bearing = rng.random_range(0.0..2.0 * PI);
        let g = (spec.wavelength / (4.0 * PI * r)).powi(2);
        let mut u = vec![bearing.cos()];
        let mut gains = vec![complex_normal(&mut rng, g * kappa / (kappa + 1.0))];
        for _ in 0..spec.nlos_paths {
            u.push(rng.random_range(-1.0..=1.0));
            gains.push(complex_normal(&mut rng, g / ((kappa + 1.0) * spec.nlos_paths as f64)));
        }
        users.push(GmaUser { channel: LinearChannel { u, gains }, snr });
    }
    Ok(users)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmaConfig {
    /// Anchor grid spacing, meters.
    pub x_step: f64,
    pub max_iters: usize,
}

impl GmaConfig {
    pub fn new(wavelength: f64) -> Self {
        Self { x_step: wavelength / 20.0, max_iters: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmaResult {
    pub x: f64,
    pub eta: usize,
    pub rate: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Alternating line searches over the anchor `x` (grid) and the integer
/// sparsity `η ≤ η_max`, keeping the whole array inside `[0, A]`. Starts from
/// the dense array at `x = 0`; only strict improvements are taken.
pub fn gma_opt(
    users: &[GmaUser],
    n: usize,
    a: f64,
    eta_max: usize,
    wavelength: f64,
    config: &GmaConfig,
) -> Result<GmaResult> {
    if eta_max == 0 || n == 0 {
        return Err(Error::Domain("η_max and N must be at least 1".into()));
    }
    if !(config.x_step > 0.0) {
        return Err(Error::Domain("anchor step must be positive".into()));
    }
    let span = |eta: usize| (n - 1) as f64 * eta as f64 * wavelength / 2.0;
    if span(1) > a + 1e-12 {
        return Err(Error::Infeasible("the dense array does not fit in the region".into()));
    }
    let rate = |x: f64, eta: usize| gma_rate(x, eta, n, users, wavelength);
    let (mut x, mut eta) = (0.0, 1);
    let mut best = rate(x, eta)?;
    let mut trace = vec![best];
    let mut iterations = 0;
    for _ in 0..config.max_iters.max(1) {
        iterations += 1;
        let before = best;
        let room = (a - span(eta)).max(0.0);
        let m = (room / config.x_step + 1e-9).floor() as usize;
        for i in 0..=m {
            let xi = (i as f64 * config.x_step).min(room);
            let v = rate(xi, eta)?;
            if improves(v, best) {
                best = v;
                x = xi;
            }
        }
        for e in 1..=eta_max {
            if x + span(e) > a + 1e-12 {
                break;
            }
            let v = rate(x, e)?;
            if improves(v, best) {
                best = v;
                eta = e;
            }
        }
        trace.push(best);
        if !improves(best, before) {
            break;
        }
    }
    Ok(GmaResult { x, eta, rate: best, trace, iterations })
}
