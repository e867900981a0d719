//! Array sensing experiments.

use serde::{Deserialize, Serialize};

use ma_core::beamforming::LinearApv;
use ma_core::geometry::{MoveRegion, Vec3};
use ma_core::optimize::{
    crb_geometry_factor, crb_lower_bound_factor, planar_starts, sensing_1d_optimal, sensing_2d_ao, CrbMetric,
    Sensing2dConfig,
};
use ma_core::sensing::{crb_1d, music_1d, simulate_snapshots, MusicConfig, SensingSetup};

use super::{config_error, infeasible, mean_row, trials, validated, Category, Experiment, Info, Kind};
use crate::error::Result;

const LAMBDA: f64 = 1.0;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be positive and finite, got {v}")))
    }
}

fn span_fits(n: usize, d_min: f64, extent: f64, what: &str) -> Result<()> {
    let span = n.saturating_sub(1) as f64 * d_min;
    if span > extent {
        return Err(infeasible(format!(
            "minimum spacing: {n} antennas at d_min = {d_min} need {span}, more than the {what} {extent}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------- sensing-1d-mse

pub struct Sensing1dMse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sensing1dSettings {
    pub antennas: usize,
    /// Length of the linear region.
    pub length: f64,
    pub d_min: f64,
    /// Spatial direction `u = cos θ` of the target.
    pub u: f64,
    pub snapshots: usize,
    pub snr_db: f64,
}

impl Default for Sensing1dSettings {
    fn default() -> Self {
        Self { antennas: 16, length: 10.0, d_min: 0.5, u: 0.71, snapshots: 1, snr_db: 20.0 }
    }
}

static SENSING_1D: Info = Info {
    id: "sensing-1d-mse",
    category: Category::Sense,
    kind: Kind::MonteCarlo,
    summary: "MUSIC mean squared error and CRB of the variance-maximizing array against a half-wavelength ULA",
    figure: "mean squared error of angle estimation versus SNR for a 16-antenna movable array over 10 wavelengths and a dense ULA, with their CRBs",
    deviations: &["500 trials per point by default"],
    sweep_variables: &["snr_db", "snapshots", "length"],
    default_trials: 500,
};

impl Experiment for Sensing1dMse {
    type Settings = Sensing1dSettings;

    fn info(&self) -> &'static Info {
        &SENSING_1D
    }

    fn check(&self, s: &Sensing1dSettings) -> Result<()> {
        if s.antennas < 2 || s.snapshots == 0 {
            return Err(config_error("antennas must be at least 2 and snapshots at least 1"));
        }
        positive("length", s.length)?;
        positive("d_min", s.d_min)?;
        if !(-1.0..=1.0).contains(&s.u) {
            return Err(config_error(format!("u must lie in [-1, 1], got {}", s.u)));
        }
        if !s.snr_db.is_finite() {
            return Err(config_error("snr_db must be finite"));
        }
        span_fits(s.antennas, s.d_min, s.length, "region length")
    }

    fn columns(&self, _: &Sensing1dSettings) -> Vec<String> {
        ["crb_opt", "mse_opt", "crb_ula", "mse_ula"].map(String::from).to_vec()
    }

    fn compute(&self, s: &Sensing1dSettings, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let opt = sensing_1d_optimal(s.antennas, s.length, s.d_min)?;
        opt.check(s.length, s.d_min).map_err(|e| infeasible(format!("optimized array: {e}")))?;
        let ula = LinearApv::ula(s.antennas, s.d_min, 0.0)?;
        let setup = |apv: &LinearApv| SensingSetup::linear(apv, s.u, s.snr_db, s.snapshots, LAMBDA);
        let (so, su) = (setup(&opt), setup(&ula));
        let (crb_opt, crb_ula) = (crb_1d(&so)?, crb_1d(&su)?);
        let cfg = MusicConfig::default();
        let err = |apv: &LinearApv, setup: &SensingSetup, seed: u64| -> Result<f64> {
            let y = simulate_snapshots(setup, seed)?;
            Ok((music_1d(&y, apv, LAMBDA, &cfg)?.u - s.u).powi(2))
        };
        let rows = trials(seeds, |seed| Ok(vec![crb_opt, err(&opt, &so, seed)?, crb_ula, err(&ula, &su, seed)?]))?;
        Ok(vec![mean_row(&rows)])
    }
}

// ---------------------------------------------------------- sensing-2d-crb

pub struct Sensing2dCrb;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sensing2dSettings {
    pub antennas: usize,
    /// Side of the square region.
    pub region_side: f64,
    pub d_min: f64,
    pub grid_step: f64,
    pub max_sweeps: usize,
}

impl Default for Sensing2dSettings {
    fn default() -> Self {
        Self { antennas: 36, region_side: 5.0, d_min: 0.5, grid_step: 0.125, max_sweeps: 20 }
    }
}

static SENSING_2D: Info = Info {
    id: "sensing-2d-crb",
    category: Category::Sense,
    kind: Kind::Table,
    summary: "Worst-axis CRB geometry factor of an optimized planar array, its lower bound and a dense UPA",
    figure: "two-dimensional angle estimation with a 36-antenna movable planar array over a 5-wavelength square, compared with the circular-region CRB lower bound",
    deviations: &[
        "reports geometry factors (CRB divided by the SNR and wavelength scale) rather than MSE curves",
        "alternating coordinate search on a 0.125 wavelength grid",
    ],
    sweep_variables: &["antennas", "region_side"],
    default_trials: 1,
};

impl Experiment for Sensing2dCrb {
    type Settings = Sensing2dSettings;

    fn info(&self) -> &'static Info {
        &SENSING_2D
    }

    fn check(&self, s: &Sensing2dSettings) -> Result<()> {
        if s.antennas < 3 {
            return Err(config_error("planar estimation needs at least 3 antennas"));
        }
        positive("region_side", s.region_side)?;
        positive("d_min", s.d_min)?;
        positive("grid_step", s.grid_step)?;
        let per_axis = (s.antennas as f64).sqrt().ceil() as usize;
        span_fits(per_axis, s.d_min, s.region_side, "region side")
    }

    fn columns(&self, _: &Sensing2dSettings) -> Vec<String> {
        ["achieved_factor", "lower_bound_factor", "dense_upa_factor", "gap_db"].map(String::from).to_vec()
    }

    fn compute(&self, s: &Sensing2dSettings, _seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let region = MoveRegion::plane(s.region_side, s.region_side, s.d_min)?;
        let cfg = Sensing2dConfig { grid_step: s.grid_step, max_sweeps: s.max_sweeps };
        let r = sensing_2d_ao(s.antennas, &region, CrbMetric::Max, &cfg)?;
        validated("optimized planar array", &r.placement, &region)?;
        let bound = crb_lower_bound_factor(&region);
        let dense: Vec<Vec3> = planar_starts(s.antennas, &region)
            .into_iter()
            .next()
            .ok_or_else(|| infeasible("no dense planar array fits the region"))?;
        let dense_factor = crb_geometry_factor(&dense, CrbMetric::Max);
        Ok(vec![vec![r.score, bound, dense_factor, super::db(r.score / bound)]])
    }
}
