//! Channel acquisition experiments.

use serde::{Deserialize, Serialize};

use ma_core::channel::{gen_scenario, ScenarioSpec};
use ma_core::estimate::{
    channel_mapping, collect_measurements, nearest_measured_reconstruct, nmse, omp_joint, omp_successive,
    reconstruct_mapping, region_grid, validate_measurements, Dictionary, OmpConfig, PrmStructure, Schedule,
};
use ma_core::geometry::{MoveRegion, Vec3};

use super::{config_error, from_db, mean_row, trials, Category, Experiment, Info, Kind};
use crate::error::Result;

const LAMBDA: f64 = 1.0;

pub struct EstimationNmse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSettings {
    /// Paths per side; the PRM is diagonal.
    pub paths: usize,
    pub kappa: f64,
    /// Side of the square Tx and Rx regions.
    pub region_side: f64,
    /// Pilot power over noise power.
    pub snr_db: f64,
    /// Pilot budget. Successive estimation spends half on a Tx sweep and
    /// half on an Rx sweep; joint estimation and the model-free baseline use
    /// all of it on paired random positions.
    pub measurements: usize,
    /// Dictionary points per wave-vector axis.
    pub dictionary: usize,
    /// Spacing of the evaluation grid.
    pub eval_step: f64,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self { paths: 2, kappa: 0.5, region_side: 3.0, snr_db: 25.0, measurements: 256, dictionary: 16, eval_step: 0.2 }
    }
}

static ESTIMATION: Info = Info {
    id: "estimation-nmse",
    category: Category::Estimate,
    kind: Kind::MonteCarlo,
    summary: "NMSE of successive OMP, joint OMP and nearest-measurement reconstruction of the channel mapping",
    figure: "NMSE of channel mapping reconstruction versus SNR for successive and joint compressed-sensing estimation and the model-free baseline",
    deviations: &[
        "100 trials per point by default",
        "measurement positions are uniform random in each region",
        "the model-free baseline copies the nearest paired measurement in the joint Tx/Rx coordinates",
    ],
    sweep_variables: &["snr_db", "region_side", "measurements"],
    default_trials: 100,
};

impl Experiment for EstimationNmse {
    type Settings = EstimationSettings;

    fn info(&self) -> &'static Info {
        &ESTIMATION
    }

    fn check(&self, s: &EstimationSettings) -> Result<()> {
        if s.paths == 0 || s.dictionary == 0 {
            return Err(config_error("paths and dictionary must be at least 1"));
        }
        if s.measurements < 2 * s.paths {
            return Err(config_error(format!("need at least {} measurements for {} paths", 2 * s.paths, s.paths)));
        }
        if !(s.kappa >= 0.0 && s.kappa.is_finite()) {
            return Err(config_error("kappa must be finite and non-negative"));
        }
        for (name, v) in [("region_side", s.region_side), ("eval_step", s.eval_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !s.snr_db.is_finite() {
            return Err(config_error("snr_db must be finite"));
        }
        Ok(())
    }

    fn columns(&self, _: &EstimationSettings) -> Vec<String> {
        ["successive", "joint", "model_free"].map(String::from).to_vec()
    }

    fn compute(&self, s: &EstimationSettings, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let region = MoveRegion::plane(s.region_side, s.region_side, 0.0)?;
        let grid = region_grid(&region, s.eval_step)?;
        let noise = 1.0 / from_db(s.snr_db);
        let dict = Dictionary::new(s.dictionary)?;
        let c = Vec3::new(s.region_side / 2.0, s.region_side / 2.0, 0.0);
        let half = s.measurements / 2;
        let spec = ScenarioSpec::new(LAMBDA, s.paths).with_kappa(s.kappa);
        let rows = trials(seeds, |seed| {
            let model = gen_scenario(seed, &spec)?.field_model()?;
            let truth = channel_mapping(&model, &grid, &grid);
            let stream = |k: u64| seed.wrapping_mul(4).wrapping_add(k);
            let collect = |schedule: &Schedule, count: usize, k: u64| {
                collect_measurements(&model, &region, &region, schedule, count, 1.0, noise, stream(k))
            };
            let mt = collect(&Schedule::TxSweep { rx: c }, half, 1)?;
            let mr = collect(&Schedule::RxSweep { tx: c }, s.measurements - half, 2)?;
            let mp = collect(&Schedule::Paired, s.measurements, 3)?;
            for ms in [&mt, &mr, &mp] {
                validate_measurements(ms, &region, &region)?;
            }
            let succ_cfg = OmpConfig { dictionary: dict, tx_paths: s.paths, rx_paths: s.paths, structure: PrmStructure::Diagonal };
            let succ = omp_successive(Some(&mt), &mr, &succ_cfg, LAMBDA)?;
            let joint = omp_joint(&mp, &OmpConfig { dictionary: dict, ..OmpConfig::joint(s.paths) }, LAMBDA)?;
            Ok(vec![
                nmse(&truth, &reconstruct_mapping(&succ, &grid, &grid, LAMBDA)?)?,
                nmse(&truth, &reconstruct_mapping(&joint, &grid, &grid, LAMBDA)?)?,
                nmse(&truth, &nearest_measured_reconstruct(&mp, &grid, &grid)?)?,
            ])
        })?;
        Ok(vec![mean_row(&rows)])
    }
}
