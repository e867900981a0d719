//! Placement optimization experiments.

use serde::{Deserialize, Serialize};

use ma_core::beamforming::{beam_gain, steering_vector, LinearApv};
use ma_core::channel::{gen_scenario, gen_uplink_users, ScenarioSpec, UplinkSpec};
use ma_core::geometry::{MoveRegion, Vec3};
use ma_core::linalg::CVec;
use ma_core::optimize::{
    mimo_capacity_at, mimo_position_ao, multibeam_ao, multibeam_awv, multiuser_position_opt, siso_gain_bounds,
    siso_gain_extremes, svo_null_apv, upa, zf_fpa_null, Budget, CapacityMode, Combiner, Constructed, CsiMode,
    MimoAoConfig, MimoPlacement, MimoProblem, MuConfig, MuMode, MuProblem, MultibeamConfig, Utility,
};
use ma_core::C64;

use super::{config_error, from_db, infeasible, mean_row, trials, validated, Category, Experiment, Info, Kind};
use crate::error::Result;

const LAMBDA: f64 = 1.0;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be finite and non-negative, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be finite, got {v}")))
    }
}

fn dbm_to_watts(dbm: f64) -> f64 {
    from_db(dbm - 30.0)
}

// ------------------------------------------------------- siso-gain-bounds

pub struct SisoGainBounds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SisoSettings {
    pub paths: usize,
    /// Rician factor of the first path; `null` spreads power equally.
    pub kappa: Option<f64>,
    /// Side of the cubic Rx region.
    pub region_side: f64,
    pub grid_step: f64,
    /// Polish both extremes by gradient search from their grid cells.
    pub refine: bool,
}

impl Default for SisoSettings {
    fn default() -> Self {
        Self { paths: 4, kappa: None, region_side: 5.0, grid_step: 0.05, refine: false }
    }
}

static SISO: Info = Info {
    id: "siso-gain-bounds",
    category: Category::Optimize,
    kind: Kind::MonteCarlo,
    summary: "Largest and smallest single-antenna gain in a cube against the closed-form bounds",
    figure: "maximum and minimum channel power gain of a single movable antenna versus region size, with the sum-magnitude upper bound and the corresponding lower bound",
    deviations: &[
        "100 channel realizations per point by default",
        "extremes found on a grid with 0.05 wavelength spacing, without gradient refinement by default",
    ],
    sweep_variables: &["paths", "region_side", "kappa"],
    default_trials: 100,
};

impl Experiment for SisoGainBounds {
    type Settings = SisoSettings;

    fn info(&self) -> &'static Info {
        &SISO
    }

    fn check(&self, s: &SisoSettings) -> Result<()> {
        if s.paths == 0 {
            return Err(config_error("paths must be at least 1"));
        }
        if let Some(k) = s.kappa {
            non_negative("kappa", k)?;
        }
        positive("region_side", s.region_side)?;
        positive("grid_step", s.grid_step)
    }

    fn columns(&self, _: &SisoSettings) -> Vec<String> {
        ["max_gain", "min_gain", "upper_bound", "lower_bound", "fpa_gain", "tight_fraction", "worst_max_over_bound"]
            .map(String::from)
            .to_vec()
    }

    fn compute(&self, s: &SisoSettings, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let region = MoveRegion::cube(s.region_side, 0.0)?;
        let mut spec = ScenarioSpec::new(LAMBDA, s.paths);
        spec.rician_kappa = s.kappa;
        let rows = trials(seeds, |seed| {
            let model = gen_scenario(seed, &spec)?.field_model()?;
            let b = model.rx_coefficients(&Vec3::zeros());
            let ext = siso_gain_extremes(&b, &model.rx_k, LAMBDA, &region, s.grid_step, s.refine)?;
            validated("gain maximizer", &[ext.argmax, ext.argmin], &region)?;
            let (ub, lb) = siso_gain_bounds(b.as_slice())?;
            let fpa = model.channel(&Vec3::zeros(), &Vec3::zeros()).norm_sqr();
            let ratio = ext.max / ub;
            Ok(vec![ext.max, ext.min, ub, lb, fpa, f64::from(u8::from(ratio >= 0.99)), ratio])
        })?;
        let mut row = mean_row(&rows);
        row[6] = rows.iter().map(|r| r[6]).fold(f64::INFINITY, f64::min);
        Ok(vec![row])
    }
}

// ------------------------------------------------------------ beam-pattern

pub struct BeamPattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamTask {
    /// Full gain toward `main_deg` with nulls toward `nulls_deg`.
    NullSteering,
    /// Max-min gain over `beams_deg`.
    Multibeam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSettings {
    pub design: BeamTask,
    pub antennas: usize,
    /// Length of the linear movement region.
    pub length: f64,
    pub d_min: f64,
    pub main_deg: f64,
    pub nulls_deg: Vec<f64>,
    pub beams_deg: Vec<f64>,
    pub angle_step_deg: f64,
}

impl Default for BeamSettings {
    fn default() -> Self {
        Self {
            design: BeamTask::NullSteering,
            antennas: 8,
            length: 20.0,
            d_min: 0.5,
            main_deg: 90.0,
            nulls_deg: vec![78.0, 98.0, 170.0],
            beams_deg: vec![30.0, 120.0, 160.0],
            angle_step_deg: 0.25,
        }
    }
}

static BEAM: Info = Info {
    id: "beam-pattern",
    category: Category::Optimize,
    kind: Kind::Table,
    summary: "Beam gain versus angle of a movable linear array against a half-wavelength fixed array",
    figure: "beam patterns of an 8-antenna movable array over a 20-wavelength line: null steering toward 78, 98 and 170 degrees, and multi-beam toward 30, 120 and 160 degrees",
    deviations: &[
        "null steering uses the closed-form factorized array instead of numerical optimization",
        "the fixed-array multi-beam baseline weights are optimized by the same weight update as the movable array",
    ],
    sweep_variables: &["antennas", "length"],
    default_trials: 1,
};

fn angles(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| i as f64 * step_deg).collect();
    if out.last().is_some_and(|&a| a < 180.0) {
        out.push(180.0);
    }
    out
}

fn pattern(apv: &LinearApv, w: &CVec, thetas_deg: &[f64]) -> Result<Vec<f64>> {
    thetas_deg.iter().map(|t| Ok(beam_gain(apv, w, t.to_radians(), LAMBDA)?)).collect()
}

impl Experiment for BeamPattern {
    type Settings = BeamSettings;

    fn info(&self) -> &'static Info {
        &BEAM
    }

    fn check(&self, s: &BeamSettings) -> Result<()> {
        if s.antennas < 2 {
            return Err(config_error("antennas must be at least 2"));
        }
        positive("length", s.length)?;
        non_negative("d_min", s.d_min)?;
        positive("angle_step_deg", s.angle_step_deg)?;
        let in_range = |a: &f64| (0.0..=180.0).contains(a);
        let dirs = match s.design {
            BeamTask::NullSteering => {
                if s.nulls_deg.is_empty() {
                    return Err(config_error("null steering needs at least one null direction"));
                }
                let mut d = s.nulls_deg.clone();
                d.push(s.main_deg);
                d
            }
            BeamTask::Multibeam => {
                if s.beams_deg.is_empty() {
                    return Err(config_error("multibeam needs at least one beam direction"));
                }
                s.beams_deg.clone()
            }
        };
        if !dirs.iter().all(in_range) {
            return Err(config_error("directions must lie in [0, 180] degrees"));
        }
        let span = (s.antennas - 1) as f64 * s.d_min;
        if span > s.length {
            return Err(infeasible(format!(
                "minimum spacing: {} antennas at d_min = {} need {span} but the line is {} long",
                s.antennas, s.d_min, s.length
            )));
        }
        Ok(())
    }

    fn columns(&self, _: &BeamSettings) -> Vec<String> {
        ["theta_deg", "gain_ma", "gain_fpa"].map(String::from).to_vec()
    }

    fn compute(&self, s: &BeamSettings, _seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let n = s.antennas;
        let ((ma_apv, ma_w), (fpa_apv, fpa_w)) = match s.design {
            BeamTask::NullSteering => {
                let t0 = s.main_deg.to_radians();
                let nulls: Vec<f64> = s.nulls_deg.iter().map(|d| d.to_radians()).collect();
                let apv = match svo_null_apv(t0, &nulls, n, s.length, s.d_min, LAMBDA)? {
                    Constructed::Apv { apv } => apv,
                    Constructed::NotConstructible { reason } => return Err(infeasible(reason)),
                };
                let w = steering_vector(&apv, t0, LAMBDA) / C64::new((n as f64).sqrt(), 0.0);
                let zf = zf_fpa_null(t0, &nulls, n, LAMBDA)?;
                ((apv, w), (zf.apv, zf.awv.weights))
            }
            BeamTask::Multibeam => {
                let thetas: Vec<f64> = s.beams_deg.iter().map(|d| d.to_radians()).collect();
                let cfg = MultibeamConfig::default();
                let design = multibeam_ao(&thetas, n, s.length, s.d_min, LAMBDA, &cfg)?;
                let ula = LinearApv::ula(n, LAMBDA / 2.0, 0.0)?;
                let (awv, _) = multibeam_awv(&ula, &thetas, LAMBDA, &cfg)?;
                ((design.apv, design.awv.weights), (ula, awv.weights))
            }
        };
        ma_apv.check(s.length, s.d_min).map_err(|e| infeasible(format!("movable array: {e}")))?;
        let thetas = angles(s.angle_step_deg);
        let ma = pattern(&ma_apv, &ma_w, &thetas)?;
        let fpa = pattern(&fpa_apv, &fpa_w, &thetas)?;
        Ok(thetas.iter().zip(ma).zip(fpa).map(|((t, a), b)| vec![*t, a, b]).collect())
    }
}

// ----------------------------------------------------------- mimo-capacity

pub struct MimoCapacity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MimoSettings {
    pub paths: usize,
    pub kappa: Option<f64>,
    /// Side of the square Tx and Rx regions.
    pub region_side: f64,
    pub d_min: f64,
    /// Each side uses a `rows × cols` array.
    pub rows: usize,
    pub cols: usize,
    /// Transmit power over unit noise power.
    pub snr_db: f64,
    pub grid_step: f64,
    pub max_sweeps: usize,
}

impl Default for MimoSettings {
    fn default() -> Self {
        Self { paths: 6, kappa: Some(1.0), region_side: 3.0, d_min: 0.5, rows: 2, cols: 2, snr_db: 10.0, grid_step: 0.1, max_sweeps: 10 }
    }
}

static MIMO: Info = Info {
    id: "mimo-capacity",
    category: Category::Optimize,
    kind: Kind::MonteCarlo,
    summary: "Capacity of jointly optimized Tx/Rx positions against dense and sparse UPAs",
    figure: "MIMO capacity versus SNR for movable arrays and dense and sparse fixed planar arrays",
    deviations: &[
        "50 channel realizations per point by default",
        "instantaneous channel knowledge only",
        "alternating per-antenna grid search with local refinement, started from both fixed arrays",
    ],
    sweep_variables: &["snr_db", "region_side", "paths"],
    default_trials: 50,
};

impl MimoSettings {
    fn sparse_spacing(&self) -> f64 {
        let m = self.rows.max(self.cols);
        if m > 1 {
            self.region_side / (m - 1) as f64
        } else {
            self.d_min
        }
    }
}

impl Experiment for MimoCapacity {
    type Settings = MimoSettings;

    fn info(&self) -> &'static Info {
        &MIMO
    }

    fn check(&self, s: &MimoSettings) -> Result<()> {
        if s.paths == 0 || s.rows == 0 || s.cols == 0 {
            return Err(config_error("paths, rows and cols must be at least 1"));
        }
        if let Some(k) = s.kappa {
            non_negative("kappa", k)?;
        }
        positive("region_side", s.region_side)?;
        non_negative("d_min", s.d_min)?;
        finite("snr_db", s.snr_db)?;
        positive("grid_step", s.grid_step)?;
        let span = (s.rows.max(s.cols) - 1) as f64 * s.d_min;
        if span > s.region_side {
            return Err(infeasible(format!(
                "minimum spacing: a {}x{} array at d_min = {} spans {span}, more than the region side {}",
                s.rows, s.cols, s.d_min, s.region_side
            )));
        }
        Ok(())
    }

    fn columns(&self, _: &MimoSettings) -> Vec<String> {
        ["ma", "dense_upa", "sparse_upa"].map(String::from).to_vec()
    }

    fn compute(&self, s: &MimoSettings, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let region = MoveRegion::plane(s.region_side, s.region_side, s.d_min)?;
        let dense_spacing = if s.d_min > 0.0 { s.d_min } else { LAMBDA / 2.0 };
        let dense = MimoPlacement { tx: upa(s.rows, s.cols, dense_spacing, &region)?, rx: upa(s.rows, s.cols, dense_spacing, &region)? };
        let sp = s.sparse_spacing();
        let sparse = MimoPlacement { tx: upa(s.rows, s.cols, sp, &region)?, rx: upa(s.rows, s.cols, sp, &region)? };
        let cfg = MimoAoConfig { grid_step: s.grid_step, max_sweeps: s.max_sweeps, ..MimoAoConfig::new(LAMBDA) };
        let mut spec = ScenarioSpec::new(LAMBDA, s.paths);
        spec.rician_kappa = s.kappa;
        let rows = trials(seeds, |seed| {
            let model = gen_scenario(seed, &spec)?.field_model()?;
            let p = MimoProblem {
                model: &model,
                tx_region: &region,
                rx_region: &region,
                power: from_db(s.snr_db),
                noise: 1.0,
                mode: CapacityMode::Instantaneous,
            };
            let r = mimo_position_ao(&p, &[dense.clone(), sparse.clone()], &cfg, None)?;
            validated("optimized Tx array", &r.placement.tx, &region)?;
            validated("optimized Rx array", &r.placement.rx, &region)?;
            Ok(vec![r.score, mimo_capacity_at(&p, &dense), mimo_capacity_at(&p, &sparse)])
        })?;
        Ok(vec![mean_row(&rows)])
    }
}

// ---------------------------------------------------------- multiuser-rate

pub struct MultiuserRate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiuserSettings {
    pub wavelength_m: f64,
    pub users: usize,
    /// Paths per user, the first being line of sight.
    pub paths: usize,
    pub kappa: f64,
    /// BS antennas.
    pub antennas: usize,
    /// Side of the square BS region, in wavelengths.
    pub region_side: f64,
    /// In wavelengths.
    pub d_min: f64,
    /// Per-user transmit power.
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub combiner: Combiner,
    pub utility: Utility,
    /// Candidate grid spacing, in wavelengths.
    pub grid_step: f64,
    pub max_sweeps: usize,
}

impl Default for MultiuserSettings {
    fn default() -> Self {
        Self {
            wavelength_m: 0.06,
            users: 4,
            paths: 6,
            kappa: 1.0,
            antennas: 4,
            region_side: 4.0,
            d_min: 0.5,
            power_dbm: 10.0,
            noise_dbm: -90.0,
            combiner: Combiner::Zf,
            utility: Utility::MinRate,
            grid_step: 0.1,
            max_sweeps: 5,
        }
    }
}

static MULTIUSER: Info = Info {
    id: "multiuser-rate",
    category: Category::Optimize,
    kind: Kind::MonteCarlo,
    summary: "Uplink utility of an optimized BS array against a dense fixed array",
    figure: "multiuser uplink rate versus transmit power for a movable BS array and a dense fixed array",
    deviations: &[
        "50 user drops per point by default",
        "rate-centric mode with the same power for every user",
        "per-antenna grid search instead of gradient or swarm methods",
    ],
    sweep_variables: &["power_dbm", "users", "region_side"],
    default_trials: 50,
};

impl Experiment for MultiuserRate {
    type Settings = MultiuserSettings;

    fn info(&self) -> &'static Info {
        &MULTIUSER
    }

    fn check(&self, s: &MultiuserSettings) -> Result<()> {
        positive("wavelength_m", s.wavelength_m)?;
        if s.users == 0 || s.antennas == 0 || s.paths == 0 {
            return Err(config_error("users, paths and antennas must be at least 1"));
        }
        if s.combiner == Combiner::Zf && s.antennas < s.users {
            return Err(config_error(format!("zero forcing needs antennas ≥ users ({} < {})", s.antennas, s.users)));
        }
        non_negative("kappa", s.kappa)?;
        positive("region_side", s.region_side)?;
        non_negative("d_min", s.d_min)?;
        finite("power_dbm", s.power_dbm)?;
        finite("noise_dbm", s.noise_dbm)?;
        positive("grid_step", s.grid_step)?;
        let side = (s.antennas as f64).sqrt().ceil() as usize;
        let span = (side - 1) as f64 * s.d_min;
        if span > s.region_side {
            return Err(infeasible(format!(
                "minimum spacing: the dense start spans {span} wavelengths, more than the region side {}",
                s.region_side
            )));
        }
        Ok(())
    }

    fn columns(&self, _: &MultiuserSettings) -> Vec<String> {
        ["ma", "dense_fpa"].map(String::from).to_vec()
    }

    fn compute(&self, s: &MultiuserSettings, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let wl = s.wavelength_m;
        let region = MoveRegion::plane(s.region_side * wl, s.region_side * wl, s.d_min * wl)?;
        let power = dbm_to_watts(s.power_dbm);
        let cfg = MuConfig { grid_step: s.grid_step * wl, max_sweeps: s.max_sweeps, ..MuConfig::new(wl) };
        let spec = UplinkSpec { paths: s.paths, ..UplinkSpec::new(wl, s.users, s.kappa) };
        let rows = trials(seeds, |seed| {
            let users = gen_uplink_users(seed, &spec)?;
            let p = MuProblem {
                users: &users,
                region: &region,
                n_r: s.antennas,
                wavelength: wl,
                noise: dbm_to_watts(s.noise_dbm),
                combiner: s.combiner,
                utility: s.utility,
                budget: Budget::MaxPower,
                csi: CsiMode::Instantaneous,
            };
            let dense = p.evaluate(&p.dense_start()?, &vec![power; s.users]);
            let r = multiuser_position_opt(&p, MuMode::RateCentric { power }, None, &cfg)?;
            validated("optimized BS array", &r.placement.positions, &region)?;
            Ok(vec![r.score, dense])
        })?;
        Ok(vec![mean_row(&rows)])
    }
}
