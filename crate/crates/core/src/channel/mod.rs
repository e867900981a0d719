//! Field-response channel synthesis.
//!
//! A scenario describes the propagation environment as a set of Tx paths,
//! a set of Rx paths and the path response matrix (PRM) coupling them. The
//! channel between a Tx antenna at `t` and an Rx antenna at `r` is
//! `h = f(r)ᴴ Σ g(t)` with field response vectors (FRVs)
//! `g(t)_j = exp(i 2π/λ k_t,jᵀ t)` and `f(r)_i = exp(i 2π/λ k_r,iᵀ r)`.

mod generate;
mod sixdma;

pub use generate::{
    complex_normal, figure_path_gain, gen_scenario, gen_uplink_users, sample_direction, AngleLaw,
    NearFieldSpec, PolarizationLaw, PrmModel, ScenarioSpec, UplinkSpec, UplinkUser, WidebandSpec,
};
pub use sixdma::{
    channel_6dma, directional_half_angle, polarization_gain, prm_6dma, radiation_gain,
    radiation_power_gain, Pprm, RadiationPattern,
};

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};
use crate::geometry::{wave_vector, Direction, Vec3, WaveVector};
use crate::linalg::{cis, CMat, CVec};
use crate::C64;

/// Propagation paths seen from one side of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub directions: Vec<Direction>,
    /// Path delays in seconds (wideband scenarios).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<Vec<f64>>,
    /// Scatterer coordinates in meters (near-field scenarios).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatterers: Option<Vec<[f64; 3]>>,
}

impl PathSet {
    pub fn new(directions: Vec<Direction>) -> Self {
        Self { directions, delays: None, scatterers: None }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn wave_vectors(&self) -> Result<Vec<WaveVector>> {
        self.directions.iter().map(wave_vector).collect()
    }

    pub fn check(&self) -> Result<()> {
        for d in &self.directions {
            d.check()?;
        }
        if let Some(delays) = &self.delays {
            if delays.len() != self.len() {
                return dim(format!("{} delays for {} paths", delays.len(), self.len()));
            }
            if delays.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
                return Err(Error::Domain("path delays must be finite and non-negative".into()));
            }
        }
        if let Some(s) = &self.scatterers {
            if s.len() != self.len() {
                return dim(format!("{} scatterers for {} paths", s.len(), self.len()));
            }
        }
        Ok(())
    }
}

/// Path response matrix, `L_r × L_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prm(#[serde(with = "crate::serde_cmat")] pub CMat);

impl Prm {
    pub fn diagonal(entries: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrmSpec {
    Narrowband(Prm),
    /// One PRM per delay tap; dimensions follow the paths grouped into that tap.
    PerTap(Vec<Prm>),
}

/// Near-field reference: Rx origin `r₀` seen from the Tx and the Rx-to-Tx
/// frame rotation `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOffset {
    pub r0: [f64; 3],
    pub rotation: [[f64; 3]; 3],
}

impl ReferenceOffset {
    pub fn rotation_matrix(&self) -> nalgebra::Matrix3<f64> {
        let r = &self.rotation;
        nalgebra::Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        )
    }
}

/// Complete deterministic channel environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub wavelength: f64,
    pub tx_paths: PathSet,
    pub rx_paths: PathSet,
    pub prm: PrmSpec,
    #[serde(default)]
    pub tx_pattern: RadiationPattern,
    #[serde(default)]
    pub rx_pattern: RadiationPattern,
    /// Signal bandwidth in Hz; required for per-tap PRMs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_offset: Option<ReferenceOffset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub los_amplitude: Option<C64>,
    /// Per-path-pair polarization response, indexed `[rx][tx]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pprm: Option<Vec<Vec<Pprm>>>,
}

impl Scenario {
    pub fn narrowband(wavelength: f64, tx: PathSet, rx: PathSet, prm: Prm) -> Result<Self> {
        let s = Self {
            wavelength,
            tx_paths: tx,
            rx_paths: rx,
            prm: PrmSpec::Narrowband(prm),
            tx_pattern: RadiationPattern::Isotropic,
            rx_pattern: RadiationPattern::Isotropic,
            bandwidth: None,
            reference_offset: None,
            los_amplitude: None,
            pprm: None,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.wavelength > 0.0) || !self.wavelength.is_finite() {
            return Err(Error::Domain("wavelength must be positive".into()));
        }
        self.tx_paths.check()?;
        self.rx_paths.check()?;
        let near = self.reference_offset.is_some();
        if !near && (self.tx_paths.is_empty() || self.rx_paths.is_empty()) {
            return Err(Error::Domain("far-field scenarios need at least one path per side".into()));
        }
        match &self.prm {
            PrmSpec::Narrowband(p) => {
                if p.rows() != self.rx_paths.len() || p.cols() != self.tx_paths.len() {
                    return dim(format!(
                        "PRM is {}x{} but there are {} Rx and {} Tx paths",
                        p.rows(),
                        p.cols(),
                        self.rx_paths.len(),
                        self.tx_paths.len()
                    ));
                }
                if p.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Domain("PRM entries must be finite".into()));
                }
            }
            PrmSpec::PerTap(_) => {
                self.tap_groups()?;
            }
        }
        if let Some(pp) = &self.pprm {
            if pp.len() != self.rx_paths.len()
                || pp.iter().any(|row| row.len() != self.tx_paths.len())
            {
                return dim("polarization responses must be L_r × L_t");
            }
        }
        Ok(())
    }

    pub fn narrowband_prm(&self) -> Result<&Prm> {
        match &self.prm {
            PrmSpec::Narrowband(p) => Ok(p),
            PrmSpec::PerTap(_) => Err(Error::Missing("scenario has per-tap PRMs only".into())),
        }
    }

    /// Precomputed far-field model for repeated narrowband evaluations.
    pub fn field_model(&self) -> Result<FieldModel> {
        let prm = self.narrowband_prm()?;
        FieldModel::new(
            self.wavelength,
            self.tx_paths.wave_vectors()?,
            self.rx_paths.wave_vectors()?,
            prm.0.clone(),
        )
    }

    /// Paths grouped by delay tap: for each tap the Tx and Rx path indices.
    pub fn tap_groups(&self) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        let taps = match &self.prm {
            PrmSpec::PerTap(t) => t,
            PrmSpec::Narrowband(_) => {
                return Err(Error::Missing("scenario has no per-tap PRMs".into()))
            }
        };
        let b = self
            .bandwidth
            .filter(|b| *b > 0.0)
            .ok_or_else(|| Error::Missing("per-tap scenario needs a positive bandwidth".into()))?;
        let group = |ps: &PathSet, side: &str| -> Result<Vec<Vec<usize>>> {
            let delays = ps
                .delays
                .as_ref()
                .ok_or_else(|| Error::Missing(format!("{side} paths have no delays")))?;
            let mut g = vec![Vec::new(); taps.len()];
            for (i, &d) in delays.iter().enumerate() {
                let tau = tap_index(d, b);
                if tau > taps.len() {
                    return dim(format!("{side} path {i} falls in tap {tau} of {}", taps.len()));
                }
                g[tau - 1].push(i);
            }
            Ok(g)
        };
        let tx = group(&self.tx_paths, "Tx")?;
        let rx = group(&self.rx_paths, "Rx")?;
        for (tau, p) in taps.iter().enumerate() {
            if p.rows() != rx[tau].len() || p.cols() != tx[tau].len() {
                return dim(format!(
                    "tap {} PRM is {}x{} but holds {} Rx and {} Tx paths",
                    tau + 1,
                    p.rows(),
                    p.cols(),
                    rx[tau].len(),
                    tx[tau].len()
                ));
            }
        }
        Ok(tx.into_iter().zip(rx).collect())
    }
}

/// 1-based delay tap of a path: `⌊d·B⌋ + 1`.
pub fn tap_index(delay: f64, bandwidth: f64) -> usize {
    (delay * bandwidth).floor() as usize + 1
}

/// Wave vectors and PRM with precomputed wavenumber, for hot loops.
#[derive(Debug, Clone)]
pub struct FieldModel {
    pub wavelength: f64,
    pub tx_k: Vec<Vec3>,
    pub rx_k: Vec<Vec3>,
    pub prm: CMat,
}

impl FieldModel {
    pub fn new(wavelength: f64, tx: Vec<WaveVector>, rx: Vec<WaveVector>, prm: CMat) -> Result<Self> {
        if prm.nrows() != rx.len() || prm.ncols() != tx.len() {
            return dim("PRM dimensions do not match path counts");
        }
        Ok(Self {
            wavelength,
            tx_k: tx.into_iter().map(|k| k.0).collect(),
            rx_k: rx.into_iter().map(|k| k.0).collect(),
            prm,
        })
    }

    fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn tx_frv(&self, t: &Vec3) -> CVec {
        let c = self.wavenumber();
        CVec::from_iterator(self.tx_k.len(), self.tx_k.iter().map(|k| cis(c * k.dot(t))))
    }

    pub fn rx_frv(&self, r: &Vec3) -> CVec {
        let c = self.wavenumber();
        CVec::from_iterator(self.rx_k.len(), self.rx_k.iter().map(|k| cis(c * k.dot(r))))
    }

    /// `b = Σ g(t)`, the per-Rx-path coefficients for a fixed Tx position.
    pub fn rx_coefficients(&self, t: &Vec3) -> CVec {
        &self.prm * self.tx_frv(t)
    }

    /// `Σᴴ f(r)`, the per-Tx-path coefficients for a fixed Rx position.
    pub fn tx_coefficients(&self, r: &Vec3) -> CVec {
        self.prm.adjoint() * self.rx_frv(r)
    }

    pub fn channel(&self, t: &Vec3, r: &Vec3) -> C64 {
        self.rx_frv(r).dotc(&self.rx_coefficients(t))
    }

    /// `H = F(r̃)ᴴ Σ G(t̃)`, `N_r × N_t`.
    pub fn mimo(&self, tx: &[Vec3], rx: &[Vec3]) -> CMat {
        let g = frm_from_k(tx, &self.tx_k, self.wavelength);
        let f = frm_from_k(rx, &self.rx_k, self.wavelength);
        f.adjoint() * &self.prm * g
    }

    /// `h(r̃) = F(r̃)ᴴ b` for a multi-antenna receiver and fixed Tx position.
    pub fn simo(&self, t: &Vec3, rx: &[Vec3]) -> CVec {
        let f = frm_from_k(rx, &self.rx_k, self.wavelength);
        f.adjoint() * self.rx_coefficients(t)
    }

    /// Copy of the model with a different PRM (same paths).
    pub fn with_prm(&self, prm: CMat) -> Self {
        Self { prm, ..self.clone() }
    }
}

fn frm_from_k(positions: &[Vec3], k: &[Vec3], wavelength: f64) -> CMat {
    let c = 2.0 * PI / wavelength;
    CMat::from_fn(k.len(), positions.len(), |l, n| cis(c * k[l].dot(&positions[n])))
}

/// FRV for arbitrary wave vectors: entry `j` is `exp(i 2π/λ k_jᵀ p)`.
pub fn frv(p: &Vec3, k: &[WaveVector], wavelength: f64) -> CVec {
    let c = 2.0 * PI / wavelength;
    CVec::from_iterator(k.len(), k.iter().map(|k| cis(c * k.0.dot(p))))
}

pub fn frv_tx(t: &Vec3, paths: &PathSet, wavelength: f64) -> Result<CVec> {
    check_wavelength(wavelength)?;
    Ok(frv(t, &paths.wave_vectors()?, wavelength))
}

/// FRM with column `n` the FRV of position `n`, `L × N`.
pub fn frm(positions: &[Vec3], paths: &PathSet, wavelength: f64) -> Result<CMat> {
    check_wavelength(wavelength)?;
    let k: Vec<Vec3> = paths.wave_vectors()?.into_iter().map(|k| k.0).collect();
    Ok(frm_from_k(positions, &k, wavelength))
}

fn check_wavelength(wavelength: f64) -> Result<()> {
    if wavelength > 0.0 && wavelength.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("wavelength must be positive".into()))
    }
}

pub fn channel_narrowband(t: &Vec3, r: &Vec3, scenario: &Scenario) -> Result<C64> {
    Ok(scenario.field_model()?.channel(t, r))
}

/// `N_r × N_t` channel matrix; entry `(i, j)` is the channel from Tx `j` to Rx `i`.
pub fn channel_mimo(tx: &[Vec3], rx: &[Vec3], scenario: &Scenario) -> Result<CMat> {
    Ok(scenario.field_model()?.mimo(tx, rx))
}

/// Antenna coupling matrices applied as `H_eff = C_r H C_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPair {
    #[serde(with = "crate::serde_cmat")]
    pub tx_coupling: CMat,
    #[serde(with = "crate::serde_cmat")]
    pub rx_coupling: CMat,
}

pub fn apply_coupling(h: &CMat, coupling: &CouplingPair) -> Result<CMat> {
    let (nr, nt) = h.shape();
    if coupling.tx_coupling.shape() != (nt, nt) || coupling.rx_coupling.shape() != (nr, nr) {
        return dim(format!(
            "coupling {:?}/{:?} does not fit a {nr}x{nt} channel",
            coupling.rx_coupling.shape(),
            coupling.tx_coupling.shape()
        ));
    }
    Ok(&coupling.rx_coupling * h * &coupling.tx_coupling)
}

/// Channel impulse response, one entry per delay tap.
pub fn cir(t: &Vec3, r: &Vec3, scenario: &Scenario) -> Result<CVec> {
    let groups = scenario.tap_groups()?;
    let PrmSpec::PerTap(taps) = &scenario.prm else { unreachable!() };
    let tx_k = scenario.tx_paths.wave_vectors()?;
    let rx_k = scenario.rx_paths.wave_vectors()?;
    let lambda = scenario.wavelength;
    let mut h = CVec::zeros(taps.len());
    for (tau, ((tx_idx, rx_idx), prm)) in groups.iter().zip(taps).enumerate() {
        if tx_idx.is_empty() || rx_idx.is_empty() {
            continue;
        }
        let kt: Vec<WaveVector> = tx_idx.iter().map(|&j| tx_k[j]).collect();
        let kr: Vec<WaveVector> = rx_idx.iter().map(|&i| rx_k[i]).collect();
        let g = frv(t, &kt, lambda);
        let f = frv(r, &kr, lambda);
        h[tau] = f.dotc(&(&prm.0 * g));
    }
    Ok(h)
}

/// `M`-point DFT of the zero-padded CIR, `c_m = Σ_τ h_τ exp(−i2π mτ/M)`,
/// with no normalization, so `‖c‖² = M‖h‖²`.
pub fn cfr(cir: &CVec, m: usize) -> Result<CVec> {
    if m < cir.len() || m == 0 {
        return Err(Error::Precondition(format!(
            "{m} subcarriers cannot hold a {}-tap CIR",
            cir.len()
        )));
    }
    let mut buf: Vec<C64> = cir.iter().copied().chain(std::iter::repeat(C64::new(0.0, 0.0))).take(m).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    Ok(CVec::from_vec(buf))
}

/// Near-field channel: spherical-wave LoS term plus scatterer-based NLoS term.
pub fn channel_nearfield(t: &Vec3, r: &Vec3, scenario: &Scenario) -> Result<C64> {
    let off = scenario
        .reference_offset
        .as_ref()
        .ok_or_else(|| Error::Missing("near-field channel needs a reference offset".into()))?;
    let c = 2.0 * PI / scenario.wavelength;
    let r0 = Vec3::from(off.r0);
    let rot = off.rotation_matrix();
    let sigma0 = scenario.los_amplitude.unwrap_or(C64::new(0.0, 0.0));
    let los = sigma0 * cis(c * (r0 + rot.transpose() * r - t).norm());

    let prm = scenario.narrowband_prm()?;
    if prm.0.is_empty() {
        return Ok(los);
    }
    let scat = |ps: &PathSet, side: &str| -> Result<Vec<Vec3>> {
        ps.scatterers
            .as_ref()
            .map(|s| s.iter().map(|p| Vec3::from(*p)).collect())
            .ok_or_else(|| Error::Missing(format!("{side} scatterer coordinates are missing")))
    };
    let st = scat(&scenario.tx_paths, "Tx")?;
    let sr = scat(&scenario.rx_paths, "Rx")?;
    let g = CVec::from_iterator(st.len(), st.iter().map(|s| cis(c * (t - s).norm())));
    let f = CVec::from_iterator(sr.len(), sr.iter().map(|s| cis(c * (r - s).norm())));
    // Plain transpose on the Rx side.
    let nlos = f.transpose() * (&prm.0 * g);
    Ok(los + nlos[(0, 0)])
}

