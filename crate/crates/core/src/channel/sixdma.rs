//! Radiation and polarization gains of rotatable antennas (6DMA).

use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};
use crate::geometry::{accs_basis, Aom, Vec3, WaveVector};
use crate::linalg::CMat;
use crate::C64;

use super::{frv, Prm, PrmSpec, Scenario};

/// Polarization response of one Tx-path/Rx-path pair, `[[Λ₁₁, Λ₁₂], [Λ₂₁, Λ₂₂]]`.
pub type Pprm = [[C64; 2]; 2];

/// Field pattern `(F1, F2)` over the ACCS reference directions `(î, ĵ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RadiationPattern {
    /// `F1 = 1, F2 = 0` in every direction.
    #[default]
    Isotropic,
    /// Direction-independent field coefficients.
    Uniform { f1: C64, f2: C64 },
    /// Constant gain inside a cone around the ACCS z axis, zero outside.
    /// The cone is sized so the radiated energy equals the isotropic one.
    Directional { gain_dbi: f64 },
}

/// Half-angle of the energy-matched cone for a given main-lobe gain.
///
/// The cone's solid angle `2π(1 − cos α)` must equal `4π / G`.
pub fn directional_half_angle(gain_dbi: f64) -> f64 {
    let g = 10f64.powf(gain_dbi / 10.0);
    (1.0 - 2.0 / g).clamp(-1.0, 1.0).acos()
}

impl RadiationPattern {
    /// Field coefficients for a unit direction expressed in the ACCS.
    pub fn field(&self, dir_local: &Vec3) -> (C64, C64) {
        match *self {
            RadiationPattern::Isotropic => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            RadiationPattern::Uniform { f1, f2 } => (f1, f2),
            RadiationPattern::Directional { gain_dbi } => {
                let cos_alpha = directional_half_angle(gain_dbi).cos();
                if dir_local.z >= cos_alpha - 1e-15 {
                    (C64::new(10f64.powf(gain_dbi / 20.0), 0.0), C64::new(0.0, 0.0))
                } else {
                    (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
                }
            }
        }
    }
}

/// Field amplitude gain `sqrt(|F1(Ψᵀk)|² + |F2(Ψᵀk)|²)`.
pub fn radiation_gain(pattern: &RadiationPattern, aom: &Aom, k: &WaveVector) -> f64 {
    let (f1, f2) = pattern.field(&aom.to_local(&k.0));
    (f1.norm_sqr() + f2.norm_sqr()).sqrt()
}

/// Power gain, the square of [`radiation_gain`].
pub fn radiation_power_gain(pattern: &RadiationPattern, aom: &Aom, k: &WaveVector) -> f64 {
    radiation_gain(pattern, aom, k).powi(2)
}

type M2 = [[C64; 2]; 2];

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn real2(m: [[f64; 2]; 2]) -> M2 {
    m.map(|r| r.map(|x| C64::new(x, 0.0)))
}

/// Complex polarization gain between a Tx path leaving along `k_t` and an
/// Rx path arriving along `k_r`.
///
/// Evaluates `[F_r1, F_r2]/G_r · R · Λ · T · [F_t1, F_t2]ᵀ/G_t`, where `R`
/// and `T` project the ACCS polarization references onto the LCS ones.
/// Fails when either radiation gain vanishes.
pub fn polarization_gain(
    tx_pattern: &RadiationPattern,
    rx_pattern: &RadiationPattern,
    psi: &Aom,
    omega: &Aom,
    k_t: &WaveVector,
    k_r: &WaveVector,
    pprm: &Pprm,
) -> Result<C64> {
    let kt_loc = WaveVector(psi.to_local(&k_t.0));
    let kr_loc = WaveVector(omega.to_local(&k_r.0));

    let (ft1, ft2) = tx_pattern.field(&kt_loc.0);
    let (fr1, fr2) = rx_pattern.field(&kr_loc.0);
    let gt = (ft1.norm_sqr() + ft2.norm_sqr()).sqrt();
    let gr = (fr1.norm_sqr() + fr2.norm_sqr()).sqrt();
    if gt == 0.0 || gr == 0.0 {
        return Err(Error::Domain("zero radiation gain; polarization gain undefined".into()));
    }

    let (it, jt) = accs_basis(k_t);
    let (it_hat, jt_hat) = accs_basis(&kt_loc);
    let (pi_t, pj_t) = (psi.to_global(&it_hat), psi.to_global(&jt_hat));
    let tx_tf = real2([[it.dot(&pi_t), it.dot(&pj_t)], [jt.dot(&pi_t), jt.dot(&pj_t)]]);

    let (ir, jr) = accs_basis(k_r);
    let (ir_hat, jr_hat) = accs_basis(&kr_loc);
    let (oi_r, oj_r) = (omega.to_local(&ir), omega.to_local(&jr));
    let rx_tf = real2([[ir_hat.dot(&oi_r), ir_hat.dot(&oj_r)], [jr_hat.dot(&oi_r), jr_hat.dot(&oj_r)]]);

    let core = mul2(&mul2(&rx_tf, pprm), &tx_tf);
    let (t1, t2) = (ft1 / gt, ft2 / gt);
    let (r1, r2) = (fr1 / gr, fr2 / gr);
    let col = [core[0][0] * t1 + core[0][1] * t2, core[1][0] * t1 + core[1][1] * t2];
    Ok(r1 * col[0] + r2 * col[1])
}

/// PRM of a rotatable link: `[Σ]ᵢⱼ = G_r,i(Ω) · G_p,ij(Ψ, Ω) · G_t,j(Ψ)`.
///
/// Entries whose radiation gain vanishes are zero.
pub fn prm_6dma(
    pprm: &[Vec<Pprm>],
    psi: &Aom,
    omega: &Aom,
    tx_pattern: &RadiationPattern,
    rx_pattern: &RadiationPattern,
    tx_k: &[WaveVector],
    rx_k: &[WaveVector],
) -> Result<Prm> {
    if pprm.len() != rx_k.len() || pprm.iter().any(|r| r.len() != tx_k.len()) {
        return dim("polarization responses must be L_r × L_t");
    }
    let gt: Vec<f64> = tx_k.iter().map(|k| radiation_gain(tx_pattern, psi, k)).collect();
    let gr: Vec<f64> = rx_k.iter().map(|k| radiation_gain(rx_pattern, omega, k)).collect();
    let mut m = CMat::zeros(rx_k.len(), tx_k.len());
    for i in 0..rx_k.len() {
        for j in 0..tx_k.len() {
            if gr[i] == 0.0 || gt[j] == 0.0 {
                continue;
            }
            let gp = polarization_gain(tx_pattern, rx_pattern, psi, omega, &tx_k[j], &rx_k[i], &pprm[i][j])?;
            m[(i, j)] = gp * (gr[i] * gt[j]);
        }
    }
    Ok(Prm(m))
}

/// `h = f(r)ᴴ Σ(Ψ, Ω) g(t)` using the scenario's polarization responses.
pub fn channel_6dma(t: &Vec3, r: &Vec3, psi: &Aom, omega: &Aom, scenario: &Scenario) -> Result<C64> {
    let pprm = scenario
        .pprm
        .as_ref()
        .ok_or_else(|| Error::Missing("6DMA channel needs per-pair polarization responses".into()))?;
    if matches!(scenario.prm, PrmSpec::PerTap(_)) {
        return Err(Error::Missing("6DMA channel is narrowband only".into()));
    }
    let tx_k = scenario.tx_paths.wave_vectors()?;
    let rx_k = scenario.rx_paths.wave_vectors()?;
    let sigma = prm_6dma(pprm, psi, omega, &scenario.tx_pattern, &scenario.rx_pattern, &tx_k, &rx_k)?;
    let g = frv(t, &tx_k, scenario.wavelength);
    let f = frv(r, &rx_k, scenario.wavelength);
    Ok(f.dotc(&(sigma.0 * g)))
}
