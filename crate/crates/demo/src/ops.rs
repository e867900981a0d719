//! Demo computations, independent of the browser bindings.

use ma_core::beamforming::{beam_gain, steering_vector, LinearApv};
use ma_core::channel::{gen_scenario, ScenarioSpec};
use ma_core::geometry::Vec3;
use ma_core::optimize::{sensing_1d_optimal, siso_gain_bounds, svo_null_apv, zf_fpa_null, Constructed};
use ma_core::sensing::{crb_1d, music_1d, simulate_snapshots, MusicConfig, SensingSetup};
use ma_core::{Error, Result, C64};
use serde::Serialize;

const LAMBDA: f64 = 1.0;
/// Spacing of the movable and fixed arrays.
const D_MIN: f64 = 0.5;
pub const MAX_ANTENNAS: usize = 64;
pub const MAX_MAP_POINTS: usize = 250_000;
pub const MAX_TRIALS: usize = 2_000;

fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive, got {v}"))
    }
}

fn antenna_count(n: usize, at_least: usize) -> Result<()> {
    if (at_least..=MAX_ANTENNAS).contains(&n) {
        Ok(())
    } else {
        domain(format!("antennas must be between {at_least} and {MAX_ANTENNAS}, got {n}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamPattern {
    pub theta_deg: Vec<f64>,
    pub gain_ma: Vec<f64>,
    pub gain_fpa: Vec<f64>,
    pub positions_ma: Vec<f64>,
    pub positions_fpa: Vec<f64>,
}

/// Null steering toward `nulls_deg` with full gain toward `main_deg`.
pub fn null_steering(antennas: usize, length: f64, main_deg: f64, nulls_deg: &[f64], step_deg: f64) -> Result<BeamPattern> {
    antenna_count(antennas, 2)?;
    positive("length", length)?;
    positive("angle step", step_deg)?;
    if step_deg > 90.0 {
        return domain("angle step must be at most 90 degrees");
    }
    if nulls_deg.is_empty() {
        return domain("at least one null direction is needed");
    }
    let in_range = |a: &f64| (0.0..=180.0).contains(a);
    if !in_range(&main_deg) || !nulls_deg.iter().all(in_range) {
        return domain("directions must lie in [0, 180] degrees");
    }
    let t0 = main_deg.to_radians();
    let nulls: Vec<f64> = nulls_deg.iter().map(|d| d.to_radians()).collect();
    let apv = match svo_null_apv(t0, &nulls, antennas, length, D_MIN, LAMBDA)? {
        Constructed::Apv { apv } => apv,
        Constructed::NotConstructible { reason } => return Err(Error::Infeasible(reason)),
    };
    let w = steering_vector(&apv, t0, LAMBDA) / C64::new((antennas as f64).sqrt(), 0.0);
    let zf = zf_fpa_null(t0, &nulls, antennas, LAMBDA)?;
    let n = (180.0 / step_deg).floor() as usize;
    let mut theta_deg: Vec<f64> = (0..=n).map(|i| i as f64 * step_deg).collect();
    if theta_deg.last().is_some_and(|&t| t < 180.0) {
        theta_deg.push(180.0);
    }
    let pattern = |apv: &LinearApv, w| -> Result<Vec<f64>> {
        theta_deg.iter().map(|t| beam_gain(apv, w, t.to_radians(), LAMBDA)).collect()
    };
    Ok(BeamPattern {
        gain_ma: pattern(&apv, &w)?,
        gain_fpa: pattern(&zf.apv, &zf.awv.weights)?,
        positions_ma: apv.positions().to_vec(),
        positions_fpa: zf.apv.positions().to_vec(),
        theta_deg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainMap {
    /// Points per axis; `gain` is row-major with `y` varying slowest.
    pub points: usize,
    /// Axis coordinates shared by `x` and `y`.
    pub axis: Vec<f64>,
    pub gain: Vec<f64>,
    /// Gain of the fixed antenna at the region center.
    pub center_gain: f64,
    pub upper_bound: f64,
    pub lower_bound: f64,
}

/// Receive power `|h(r)|²` over a `side × side` square centered at the
/// origin, with the transmitter fixed at the origin.
pub fn gain_map(seed: u64, paths: usize, side: f64, step: f64) -> Result<GainMap> {
    if !(1..=64).contains(&paths) {
        return domain(format!("paths must be between 1 and 64, got {paths}"));
    }
    positive("side", side)?;
    positive("step", step)?;
    let points = (side / step).floor() + 1.0;
    if points * points > MAX_MAP_POINTS as f64 {
        return domain(format!("the map would have more than {MAX_MAP_POINTS} points"));
    }
    let points = points as usize;
    let model = gen_scenario(seed, &ScenarioSpec::new(LAMBDA, paths))?.field_model()?;
    let origin = Vec3::zeros();
    let axis: Vec<f64> = (0..points).map(|i| -side / 2.0 + i as f64 * step).collect();
    let gain = axis
        .iter()
        .flat_map(|&y| axis.iter().map(move |&x| Vec3::new(x, y, 0.0)))
        .map(|r| model.channel(&origin, &r).norm_sqr())
        .collect();
    let (upper_bound, lower_bound) = siso_gain_bounds(model.rx_coefficients(&origin).as_slice())?;
    Ok(GainMap { points, axis, gain, center_gain: model.channel(&origin, &origin).norm_sqr(), upper_bound, lower_bound })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayEstimates {
    pub positions: Vec<f64>,
    pub estimates: Vec<f64>,
    pub mse: f64,
    pub crb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleEstimates {
    pub u: f64,
    pub movable: ArrayEstimates,
    pub fixed: ArrayEstimates,
}

/// MUSIC estimates of the spatial frequency `u` over `trials` single-snapshot
/// draws, for the optimized array on a line of `length` and a ULA.
pub fn angle_estimates(antennas: usize, length: f64, u: f64, snr_db: f64, trials: usize, seed: u64) -> Result<AngleEstimates> {
    antenna_count(antennas, 2)?;
    positive("length", length)?;
    if !(u > -1.0 && u < 1.0) {
        return domain(format!("u must lie in (-1, 1), got {u}"));
    }
    if !snr_db.is_finite() {
        return domain("SNR must be finite");
    }
    if !(1..=MAX_TRIALS).contains(&trials) {
        return domain(format!("trials must be between 1 and {MAX_TRIALS}, got {trials}"));
    }
    let movable = sensing_1d_optimal(antennas, length, D_MIN)?;
    let fixed = LinearApv::ula(antennas, D_MIN, 0.0)?;
    let cfg = MusicConfig::default();
    let run = |apv: &LinearApv| -> Result<ArrayEstimates> {
        let setup = SensingSetup::linear(apv, u, snr_db, 1, LAMBDA);
        let estimates = (0..trials as u64)
            .map(|t| Ok(music_1d(&simulate_snapshots(&setup, seed.wrapping_add(t))?, apv, LAMBDA, &cfg)?.u))
            .collect::<Result<Vec<f64>>>()?;
        let mse = estimates.iter().map(|e| (e - u).powi(2)).sum::<f64>() / trials as f64;
        Ok(ArrayEstimates { positions: apv.positions().to_vec(), estimates, mse, crb: crb_1d(&setup)? })
    };
    Ok(AngleEstimates { u, movable: run(&movable)?, fixed: run(&fixed)? })
}
