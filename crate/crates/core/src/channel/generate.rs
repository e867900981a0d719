//! Random scenarios for Monte Carlo experiments.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wave_vector_unchecked, Direction, Vec3};
use crate::linalg::{CMat, CVec};
use crate::C64;

use super::{PathSet, Pprm, Prm, PrmSpec, RadiationPattern, ReferenceOffset, Scenario};

/// Angle-of-arrival/departure law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngleLaw {
    /// Density `cosθ/(2π)` over `θ ∈ [−π/2, π/2]`, `φ ∈ [−π/2, π/2]`.
    #[default]
    HalfSpace,
    /// Density `cosθ/(4π)` over `θ ∈ [−π/2, π/2]`, `φ ∈ [−π, π]`.
    FullSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrmModel {
    /// Diagonal PRM pairing Tx path `ℓ` with Rx path `ℓ`.
    #[default]
    Diagonal,
    /// Dense `L_r × L_t` PRM with i.i.d. entries.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidebandSpec {
    /// Hz.
    pub bandwidth: f64,
    /// Delays are uniform on `[0, max_delay]` seconds.
    pub max_delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFieldSpec {
    /// Distance from the Tx origin to the Rx origin, meters.
    pub distance: f64,
    /// Scatterers sit at a uniform distance in this range from each side's origin.
    pub scatterer_range: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationLaw {
    /// `Λᵢⱼ = Σᵢⱼ · R(ζ)` with a uniform random polarization rotation `ζ`.
    RandomRotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub wavelength: f64,
    /// Number of paths per side (`L`); for the full model this is `L_r`.
    pub paths: usize,
    /// `L_t` for the full model; defaults to `paths`.
    #[serde(default)]
    pub tx_paths: Option<usize>,
    #[serde(default)]
    pub prm_model: PrmModel,
    /// Ratio of first-path power to the rest; `None` spreads power equally.
    #[serde(default)]
    pub rician_kappa: Option<f64>,
    #[serde(default)]
    pub angle_law: AngleLaw,
    /// Total power scale applied to every PRM entry variance.
    #[serde(default)]
    pub power_gain: Option<f64>,
    #[serde(default)]
    pub wideband: Option<WidebandSpec>,
    #[serde(default)]
    pub near_field: Option<NearFieldSpec>,
    #[serde(default)]
    pub polarization: Option<PolarizationLaw>,
    #[serde(default)]
    pub tx_pattern: RadiationPattern,
    #[serde(default)]
    pub rx_pattern: RadiationPattern,
}

impl ScenarioSpec {
    pub fn new(wavelength: f64, paths: usize) -> Self {
        Self {
            wavelength,
            paths,
            tx_paths: None,
            prm_model: PrmModel::Diagonal,
            rician_kappa: None,
            angle_law: AngleLaw::HalfSpace,
            power_gain: None,
            wideband: None,
            near_field: None,
            polarization: None,
            tx_pattern: RadiationPattern::Isotropic,
            rx_pattern: RadiationPattern::Isotropic,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.rician_kappa = Some(kappa);
        self
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(m.into()));
        if !(self.wavelength > 0.0) {
            return bad("wavelength must be positive");
        }
        if self.paths == 0 || self.tx_paths == Some(0) {
            return bad("path counts must be at least 1");
        }
        if let Some(k) = self.rician_kappa {
            if !(k >= 0.0) {
                return bad("Rician factor must be non-negative");
            }
        }
        if let Some(g) = self.power_gain {
            if !(g >= 0.0) || !g.is_finite() {
                return bad("power gain must be finite and non-negative");
            }
        }
        if let Some(w) = &self.wideband {
            if !(w.bandwidth > 0.0) || !(w.max_delay >= 0.0) {
                return bad("wideband spec needs positive bandwidth and non-negative delay");
            }
            if self.prm_model != PrmModel::Diagonal {
                return bad("wideband scenarios use the diagonal PRM model");
            }
        }
        if let Some(n) = &self.near_field {
            if !(n.distance > 0.0) || !(n.scatterer_range[0] > 0.0)
                || n.scatterer_range[1] < n.scatterer_range[0]
            {
                return bad("invalid near-field geometry");
            }
        }
        Ok(())
    }
}

/// Circularly symmetric complex Gaussian with variance `var`.
pub(crate) fn cn<R: Rng>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Draws a direction from the given angle law; `sinθ` is uniform.
pub fn sample_direction<R: Rng>(rng: &mut R, law: AngleLaw) -> Direction {
    let elevation = rng.random_range(-1.0..=1.0f64).asin();
    let span = match law {
        AngleLaw::HalfSpace => FRAC_PI_2,
        AngleLaw::FullSphere => PI,
    };
    let azimuth = rng.random_range(-span..=span);
    Direction { elevation, azimuth }
}

/// Per-entry variances of a Rician split over `l` entries.
fn rician_variances(l: usize, kappa: Option<f64>) -> Vec<f64> {
    match kappa {
        _ if l == 1 => vec![1.0],
        None => vec![1.0 / l as f64; l],
        Some(k) if k.is_infinite() => {
            let mut v = vec![0.0; l];
            v[0] = 1.0;
            v
        }
        Some(k) => {
            let mut v = vec![1.0 / ((k + 1.0) * (l - 1) as f64); l];
            v[0] = k / (k + 1.0);
            v
        }
    }
}

/// Total channel power gain `λ²κ / (16π² d^2.5)` of the multiuser setup.
pub fn figure_path_gain(wavelength: f64, kappa: f64, distance: f64) -> f64 {
    wavelength * wavelength * kappa / (16.0 * PI * PI * distance.powf(2.5))
}

/// Deterministic random scenario for `seed`.
pub fn gen_scenario(seed: u64, spec: &ScenarioSpec) -> Result<Scenario> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lr = spec.paths;
    let lt = match spec.prm_model {
        PrmModel::Diagonal => lr,
        PrmModel::Full => spec.tx_paths.unwrap_or(lr),
    };
    let tx_dirs: Vec<Direction> = (0..lt).map(|_| sample_direction(&mut rng, spec.angle_law)).collect();
    let rx_dirs: Vec<Direction> = (0..lr).map(|_| sample_direction(&mut rng, spec.angle_law)).collect();
    let scale = spec.power_gain.unwrap_or(1.0);

    let sigma = match spec.prm_model {
        PrmModel::Diagonal => {
            let var = rician_variances(lr, spec.rician_kappa);
            let d: Vec<C64> = var.iter().map(|&v| cn(&mut rng, v * scale)).collect();
            Prm::diagonal(&d).0
        }
        PrmModel::Full => {
            let var = rician_variances(lr * lt, spec.rician_kappa);
            let mut m = CMat::zeros(lr, lt);
            for (n, v) in var.iter().enumerate() {
                m[(n / lt, n % lt)] = cn(&mut rng, v * scale);
            }
            m
        }
    };

    let mut tx_paths = PathSet::new(tx_dirs);
    let mut rx_paths = PathSet::new(rx_dirs);
    let mut scenario = Scenario {
        wavelength: spec.wavelength,
        tx_paths: tx_paths.clone(),
        rx_paths: rx_paths.clone(),
        prm: PrmSpec::Narrowband(Prm(sigma.clone())),
        tx_pattern: spec.tx_pattern,
        rx_pattern: spec.rx_pattern,
        bandwidth: None,
        reference_offset: None,
        los_amplitude: None,
        pprm: None,
    };

    if let Some(w) = &spec.wideband {
        let delays: Vec<f64> = (0..lr).map(|_| rng.random_range(0.0..=w.max_delay)).collect();
        let taps = super::tap_index(w.max_delay, w.bandwidth);
        let mut per_tap = Vec::with_capacity(taps);
        for tau in 1..=taps {
            let d: Vec<C64> = (0..lr)
                .filter(|&l| super::tap_index(delays[l], w.bandwidth) == tau)
                .map(|l| sigma[(l, l)])
                .collect();
            per_tap.push(Prm::diagonal(&d));
        }
        tx_paths.delays = Some(delays.clone());
        rx_paths.delays = Some(delays);
        scenario.tx_paths = tx_paths.clone();
        scenario.rx_paths = rx_paths.clone();
        scenario.bandwidth = Some(w.bandwidth);
        scenario.prm = PrmSpec::PerTap(per_tap);
    }

    if let Some(n) = &spec.near_field {
        let los_var = match spec.rician_kappa {
            Some(k) if k.is_infinite() => 1.0,
            Some(k) => k / (k + 1.0),
            None => 0.0,
        };
        let dir = wave_vector_unchecked(&sample_direction(&mut rng, spec.angle_law)).0;
        let r0 = dir * n.distance;
        scenario.reference_offset = Some(ReferenceOffset {
            r0: [r0.x, r0.y, r0.z],
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        });
        scenario.los_amplitude = Some(cn(&mut rng, los_var * scale));
        let mut place = |ps: &PathSet| -> Vec<[f64; 3]> {
            ps.directions
                .iter()
                .map(|d| {
                    let k = wave_vector_unchecked(d).0;
                    let dist = rng.random_range(n.scatterer_range[0]..=n.scatterer_range[1]);
                    let p: Vec3 = k * dist;
                    [p.x, p.y, p.z]
                })
                .collect()
        };
        let st = place(&scenario.tx_paths);
        let sr = place(&scenario.rx_paths);
        scenario.tx_paths.scatterers = Some(st);
        scenario.rx_paths.scatterers = Some(sr);
        // NLoS paths share the non-LoS power.
        let nlos_total = 1.0 - los_var;
        let l = scenario.rx_paths.len().min(scenario.tx_paths.len());
        let d: Vec<C64> = (0..l).map(|_| cn(&mut rng, nlos_total / l as f64 * scale)).collect();
        let mut m = CMat::zeros(scenario.rx_paths.len(), scenario.tx_paths.len());
        for (i, v) in d.into_iter().enumerate() {
            m[(i, i)] = v;
        }
        scenario.prm = PrmSpec::Narrowband(Prm(m));
    }

    if let Some(PolarizationLaw::RandomRotation) = spec.polarization {
        let base = match &scenario.prm {
            PrmSpec::Narrowband(p) => p.0.clone(),
            PrmSpec::PerTap(_) => {
                return Err(Error::Domain("polarization responses need a narrowband PRM".into()))
            }
        };
        let mut pp = vec![vec![[[C64::new(0.0, 0.0); 2]; 2]; base.ncols()]; base.nrows()];
        for (i, row) in pp.iter_mut().enumerate() {
            for (j, lam) in row.iter_mut().enumerate() {
                let zeta = rng.random_range(0.0..2.0 * PI);
                *lam = rotation_pprm(base[(i, j)], zeta);
            }
        }
        scenario.pprm = Some(pp);
    }

    scenario.check()?;
    Ok(scenario)
}

fn rotation_pprm(s: C64, zeta: f64) -> Pprm {
    let (sz, cz) = zeta.sin_cos();
    [[s * cz, -s * sz], [s * sz, s * cz]]
}

/// Multiuser uplink layout: single-antenna users on the ground around a
/// planar BS array mounted at `bs_height`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UplinkSpec {
    pub wavelength: f64,
    pub users: usize,
    /// Paths per user, the first being LoS.
    pub paths: usize,
    /// Rician factor (linear); also scales the total gain as in [`figure_path_gain`].
    pub kappa: f64,
    pub bs_height: f64,
    /// 3D user distances are uniform in this range, meters.
    pub distance_range: [f64; 2],
}

impl UplinkSpec {
    /// `K` users, `L = 6` paths, BS at 20 m, distances in `[20, 100]` m.
    pub fn new(wavelength: f64, users: usize, kappa: f64) -> Self {
        Self { wavelength, users, paths: 6, kappa, bs_height: 20.0, distance_range: [20.0, 100.0] }
    }
}

/// One uplink user: Rx wave vectors at the BS and the per-path coefficients
/// `b_k = Σ_k g_k(t_k)` of its fixed antenna, so `h_k(r̃) = F(r̃)ᴴ b_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UplinkUser {
    pub distance: f64,
    pub rx_k: Vec<Vec3>,
    #[serde(with = "crate::serde_cmat::cvec")]
    pub coeffs: CVec,
}

impl UplinkUser {
    /// `h(r̃)`, one entry per BS antenna.
    pub fn response(&self, rx: &[Vec3], wavelength: f64) -> CVec {
        let c = 2.0 * PI / wavelength;
        CVec::from_iterator(
            rx.len(),
            rx.iter().map(|r| {
                self.rx_k
                    .iter()
                    .zip(self.coeffs.iter())
                    .map(|(k, b)| crate::linalg::cis(-c * k.dot(r)) * b)
                    .sum::<C64>()
            }),
        )
    }

    /// Same paths and amplitudes with every coefficient phase redrawn.
    pub fn with_random_phases<R: Rng>(&self, rng: &mut R) -> Self {
        let coeffs = self.coeffs.map(|b| b * crate::linalg::cis(rng.random_range(0.0..2.0 * PI)));
        Self { coeffs, ..self.clone() }
    }
}

/// Deterministic user drop for `seed`.
///
/// The BS array plane holds the local x (horizontal) and y (vertical) axes
/// and faces the cell along local z. The LoS wave vector points from the
/// array to the user; NLoS directions follow the half-space law.
pub fn gen_uplink_users(seed: u64, spec: &UplinkSpec) -> Result<Vec<UplinkUser>> {
    if !(spec.wavelength > 0.0) || spec.paths == 0 || !(spec.kappa >= 0.0) || !spec.kappa.is_finite() {
        return Err(Error::Domain("invalid uplink spec".into()));
    }
    let [dlo, dhi] = spec.distance_range;
    if !(dlo > 0.0) || dhi < dlo || dlo < spec.bs_height {
        return Err(Error::Domain("distance range must be positive and reach the BS height".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let var = rician_variances(spec.paths, Some(spec.kappa));
    let mut users = Vec::with_capacity(spec.users);
    for _ in 0..spec.users {
        let d = rng.random_range(dlo..=dhi);
        let az = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let sin_e = -spec.bs_height / d;
        let cos_e = (1.0 - sin_e * sin_e).max(0.0).sqrt();
        let mut rx_k = vec![Vec3::new(cos_e * az.sin(), sin_e, cos_e * az.cos())];
        for _ in 1..spec.paths {
            rx_k.push(wave_vector_unchecked(&sample_direction(&mut rng, AngleLaw::HalfSpace)).0);
        }
        let g = figure_path_gain(spec.wavelength, spec.kappa, d);
        let coeffs = CVec::from_iterator(spec.paths, var.iter().map(|&v| cn(&mut rng, v * g)));
        users.push(UplinkUser { distance: d, rx_k, coeffs });
    }
    Ok(users)
}

/// Circularly symmetric complex Gaussian sample with variance `var`.
pub fn complex_normal<R: Rng>(rng: &mut R, var: f64) -> C64 {
    cn(rng, var)
}
