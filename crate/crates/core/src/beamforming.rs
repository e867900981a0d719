//! Steering vectors, beamformers and rate metrics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};
use crate::linalg::{cis, real, singular_values, CMat, CVec};
use crate::C64;

/// Sorted antenna coordinates along a line, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearApv(Vec<f64>);

impl LinearApv {
    /// Sorts the positions. Fails on empty input or non-finite entries.
    pub fn new(mut positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Domain("APV needs at least one antenna".into()));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("APV entries must be finite".into()));
        }
        positions.sort_by(f64::total_cmp);
        Ok(Self(positions))
    }

    /// `n` antennas at `start + k·spacing`.
    pub fn ula(n: usize, spacing: f64, start: f64) -> Result<Self> {
        Self::new((0..n).map(|k| start + k as f64 * spacing).collect())
    }

    pub fn positions(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn aperture(&self) -> f64 {
        self.0[self.0.len() - 1] - self.0[0]
    }

    /// Population variance of the coordinates.
    pub fn variance(&self) -> f64 {
        let n = self.0.len() as f64;
        let mean = self.0.iter().sum::<f64>() / n;
        self.0.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
    }

    /// Checks `[0, a]` membership and adjacent gaps `≥ d_min` (closed).
    pub fn check(&self, a: f64, d_min: f64) -> Result<()> {
        let tol = crate::geometry::PLACEMENT_TOL;
        if self.0[0] < -tol || self.0[self.0.len() - 1] > a + tol {
            return Err(Error::Infeasible(format!("APV leaves the segment [0, {a}]")));
        }
        for (i, w) in self.0.windows(2).enumerate() {
            if w[1] - w[0] < d_min - tol {
                return Err(Error::Infeasible(format!(
                    "antennas {i} and {} are {:.6e} apart, below d_min = {d_min:.6e}",
                    i + 1,
                    w[1] - w[0]
                )));
            }
        }
        Ok(())
    }
}

/// Antenna weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Awv {
    #[serde(with = "crate::serde_cmat::cvec")]
    pub weights: CVec,
    /// Unit-modulus entries (phase-only analog beamformer), scaled by `1/√N`.
    pub analog: bool,
}

impl Awv {
    /// Normalizes `w` to unit norm.
    pub fn digital(w: CVec) -> Result<Self> {
        let n = w.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Domain("weight vector must be nonzero".into()));
        }
        Ok(Self { weights: w / real(n), analog: false })
    }

    /// `exp(iφ_n)/√N`.
    pub fn analog(phases: &[f64]) -> Self {
        let s = 1.0 / (phases.len() as f64).sqrt();
        Self { weights: CVec::from_iterator(phases.len(), phases.iter().map(|&p| cis(p) * s)), analog: true }
    }
}

/// Per-stream or per-user transmit powers, watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerAllocation(pub Vec<f64>);

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// Steering vector in spatial-frequency form, `a_n = exp(i2π/λ·x_n·u)`.
pub fn steering_vector_u(x: &LinearApv, u: f64, wavelength: f64) -> CVec {
    let c = 2.0 * PI / wavelength * u;
    CVec::from_iterator(x.len(), x.positions().iter().map(|&p| cis(c * p)))
}

/// `a_n = exp(i2π/λ·x_n·cosθ)`.
pub fn steering_vector(x: &LinearApv, theta: f64, wavelength: f64) -> CVec {
    steering_vector_u(x, theta.cos(), wavelength)
}

/// `|a(x, θ)ᴴ w|²`.
pub fn beam_gain(x: &LinearApv, w: &CVec, theta: f64, wavelength: f64) -> Result<f64> {
    if w.len() != x.len() {
        return dim("weight vector length differs from antenna count");
    }
    Ok(steering_vector(x, theta, wavelength).dotc(w).norm_sqr())
}

/// Maximal-ratio weights `h/‖h‖`.
pub fn mrt(h: &CVec) -> Result<CVec> {
    let n = h.norm();
    if n == 0.0 {
        return Err(Error::Domain("MRT of a zero channel".into()));
    }
    Ok(h / real(n))
}

/// Zero-forcing combiner `W = H(HᴴH)⁻¹`, so that `WᴴH = I`.
pub fn zf_combiner(h: &CMat) -> Result<CMat> {
    let (n, k) = h.shape();
    if k == 0 || k > n {
        return dim(format!("ZF needs 1 ≤ K ≤ N, got K = {k}, N = {n}"));
    }
    let sv = singular_values(h);
    if sv[k - 1] <= 1e-12 * sv[0] {
        return Err(Error::RankDeficient("channel matrix is not full column rank".into()));
    }
    let gram = h.adjoint() * h;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("Gram matrix is singular".into()))?;
    Ok(h * inv)
}

/// Linear MMSE combiner with unit-norm columns,
/// `w_k ∝ (Σ_q p_q h_q h_qᴴ + σ²I)⁻¹ h_k`.
pub fn mmse_combiner(h: &CMat, powers: &[f64], noise: f64) -> Result<CMat> {
    let (n, k) = h.shape();
    if powers.len() != k {
        return dim("one power per user is required");
    }
    if noise <= 0.0 {
        return Err(Error::Domain("noise power must be positive".into()));
    }
    let mut r = CMat::identity(n, n) * real(noise.max(1e-15));
    for q in 0..k {
        let hq = h.column(q);
        r += hq * hq.adjoint() * real(powers[q]);
    }
    let chol = r
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("MMSE covariance not positive definite".into()))?;
    let mut w = chol.solve(h);
    for mut col in w.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= real(nrm);
        }
    }
    Ok(w)
}

/// Capacity-optimal power split over eigenchannels with gains `s_i²/σ²`.
///
/// Solves the water level exactly from the sorted active set, so
/// `Σ p_i = P` holds to rounding.
pub fn water_filling(singular_values: &[f64], power: f64, noise: f64) -> Result<PowerAllocation> {
    if power <= 0.0 || noise <= 0.0 {
        return Err(Error::Domain("power and noise must be positive".into()));
    }
    if singular_values.iter().any(|s| *s < 0.0 || !s.is_finite()) {
        return Err(Error::Domain("singular values must be finite and non-negative".into()));
    }
    let mut order: Vec<usize> = (0..singular_values.len()).filter(|&i| singular_values[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::Domain("all singular values are zero".into()));
    }
    // Floor levels σ²/s², ascending.
    order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]).then(a.cmp(&b)));
    let floor: Vec<f64> = order.iter().map(|&i| noise / singular_values[i].powi(2)).collect();
    let mut active = 1;
    let mut acc = floor[0];
    let mut mu = power + floor[0];
    for k in 2..=floor.len() {
        let cand = (power + acc + floor[k - 1]) / k as f64;
        if cand > floor[k - 1] {
            active = k;
            acc += floor[k - 1];
            mu = cand;
        } else {
            break;
        }
    }
    let mut p = vec![0.0; singular_values.len()];
    for (rank, &i) in order.iter().enumerate().take(active) {
        p[i] = (mu - floor[rank]).max(0.0);
    }
    Ok(PowerAllocation(p))
}

/// Water level `μ` implied by an allocation, for KKT checks.
pub fn water_level(singular_values: &[f64], alloc: &PowerAllocation, noise: f64) -> Option<f64> {
    singular_values
        .iter()
        .zip(&alloc.0)
        .find(|(_, p)| **p > 0.0)
        .map(|(s, p)| p + noise / s.powi(2))
}

/// `max_Q log₂det(I + HQHᴴ/σ²)` with `tr(Q) ≤ P`, via SVD and water-filling.
pub fn mimo_capacity(h: &CMat, power: f64, noise: f64) -> f64 {
    let sv = singular_values(h);
    if sv.iter().all(|s| *s == 0.0) {
        return 0.0;
    }
    let alloc = water_filling(&sv, power, noise).expect("positive power, noise and singular value");
    sv.iter()
        .zip(&alloc.0)
        .map(|(s, p)| (1.0 + p * s * s / noise).log2())
        .sum()
}

/// Per-user SINR and rates of a linear multiuser receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrReport {
    pub sinr: Vec<f64>,
    pub rates: Vec<f64>,
    /// Utility f₂.
    pub sum_rate: f64,
    /// Utility f₁.
    pub min_rate: f64,
}

/// `γ_k = p_k|w_kᴴh_k|² / (Σ_{q≠k} p_q|w_kᴴh_q|² + ‖w_k‖²σ²)`, `R_k = log₂(1+γ_k)`.
pub fn user_sinr_and_rates(h: &CMat, w: &CMat, powers: &[f64], noise: f64) -> Result<SinrReport> {
    let k = h.ncols();
    if w.shape() != h.shape() || powers.len() != k {
        return dim("H and W must both be N × K with K powers");
    }
    let g = w.adjoint() * h;
    let mut sinr = Vec::with_capacity(k);
    for u in 0..k {
        let wn = w.column(u).norm_squared();
        let interf: f64 = (0..k).filter(|&q| q != u).map(|q| powers[q] * g[(u, q)].norm_sqr()).sum();
        sinr.push(powers[u] * g[(u, u)].norm_sqr() / (interf + wn * noise));
    }
    let rates: Vec<f64> = sinr.iter().map(|s| (1.0 + s).log2()).collect();
    let sum_rate = rates.iter().sum();
    let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SinrReport { sinr, rates, sum_rate, min_rate })
}

/// Multipath response seen by a linear array: `h_n = Σ_l α_l exp(i2π/λ·x_n·u_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearChannel {
    /// Spatial frequencies `cos θ_l`.
    pub u: Vec<f64>,
    pub gains: Vec<C64>,
}

impl LinearChannel {
    pub fn response(&self, positions: &[f64], wavelength: f64) -> CVec {
        let c = 2.0 * PI / wavelength;
        CVec::from_iterator(
            positions.len(),
            positions
                .iter()
                .map(|&x| self.u.iter().zip(&self.gains).map(|(&u, &a)| a * cis(c * x * u)).sum::<C64>()),
        )
    }
}

/// Uplink user of a GMA: channel plus transmit power normalized by noise power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmaUser {
    pub channel: LinearChannel,
    pub snr: f64,
}

/// Element coordinates of an `n`-antenna uniform sparse array with spacing
/// `η·λ/2` whose first element sits at `x`.
pub fn gma_positions(x: f64, eta: usize, n: usize, wavelength: f64) -> Vec<f64> {
    (0..n).map(|k| x + (k * eta) as f64 * wavelength / 2.0).collect()
}

/// `Σ_k log₂(1 + p̄_k h_kᴴ C_k⁻¹ h_k)` with `C_k = I + Σ_{i≠k} p̄_i h_i h_iᴴ`.
pub fn gma_rate(x: f64, eta: usize, n: usize, users: &[GmaUser], wavelength: f64) -> Result<f64> {
    if eta == 0 || n == 0 {
        return Err(Error::Domain("sparsity and antenna count must be ≥ 1".into()));
    }
    if !x.is_finite() {
        return Err(Error::Domain("array position must be finite".into()));
    }
    let pos = gma_positions(x, eta, n, wavelength);
    let hs: Vec<CVec> = users.iter().map(|u| u.channel.response(&pos, wavelength)).collect();
    let mut total = CMat::identity(n, n);
    for (u, h) in users.iter().zip(&hs) {
        total += h * h.adjoint() * real(u.snr);
    }
    let mut rate = 0.0;
    for (u, h) in users.iter().zip(&hs) {
        let c = &total - h * h.adjoint() * real(u.snr);
        let z = crate::linalg::solve_hpd(&c, h)
            .ok_or_else(|| Error::RankDeficient("interference covariance not positive definite".into()))?;
        rate += (1.0 + u.snr * h.dotc(&z).re.max(0.0)).log2();
    }
    Ok(rate)
}
