//! Channel synthesis experiments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use ma_core::channel::{
    channel_6dma, frv, gen_scenario, prm_6dma, AngleLaw, PolarizationLaw, PrmModel, RadiationPattern, Scenario,
    ScenarioSpec,
};
use ma_core::estimate::region_grid;
use ma_core::geometry::{aom_from_euler, Aom, MoveRegion, Vec3};
use ma_core::optimize::siso_gain_extremes;

use super::{config_error, db, trials, validated, Category, Experiment, Info, Kind};
use crate::error::Result;

const LAMBDA: f64 = 1.0;

/// Cap on grid points of one map so a typo cannot exhaust memory.
const MAX_MAP_POINTS: usize = 4_000_000;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be positive and finite, got {v}")))
    }
}

// ------------------------------------------------------------ channel-map

pub struct ChannelMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelMapSettings {
    pub paths: usize,
    /// Rician factor of the first path; `null` spreads power equally.
    pub kappa: Option<f64>,
    pub region_side: f64,
    pub grid_step: f64,
}

impl Default for ChannelMapSettings {
    fn default() -> Self {
        Self { paths: 6, kappa: None, region_side: 4.0, grid_step: 0.05 }
    }
}

static CHANNEL_MAP: Info = Info {
    id: "channel-map",
    category: Category::Simulate,
    kind: Kind::Table,
    summary: "Complex channel and power gain over a square Rx region with the Tx fixed at the origin",
    figure: "spatial channel gain map of a multipath SISO link over a square receive region",
    deviations: &["one channel realization per run, drawn from the first seed"],
    sweep_variables: &[],
    default_trials: 1,
};

impl Experiment for ChannelMap {
    type Settings = ChannelMapSettings;

    fn info(&self) -> &'static Info {
        &CHANNEL_MAP
    }

    fn check(&self, s: &ChannelMapSettings) -> Result<()> {
        if s.paths == 0 {
            return Err(config_error("paths must be at least 1"));
        }
        positive("region_side", s.region_side)?;
        positive("grid_step", s.grid_step)?;
        let per_axis = (s.region_side / s.grid_step).floor() + 1.0;
        if per_axis * per_axis > MAX_MAP_POINTS as f64 {
            return Err(config_error(format!("map would have {} points; the limit is {MAX_MAP_POINTS}", per_axis * per_axis)));
        }
        Ok(())
    }

    fn columns(&self, _: &ChannelMapSettings) -> Vec<String> {
        ["x", "y", "re", "im", "gain"].map(String::from).to_vec()
    }

    fn compute(&self, s: &ChannelMapSettings, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let mut spec = ScenarioSpec::new(LAMBDA, s.paths);
        spec.rician_kappa = s.kappa;
        let model = gen_scenario(seeds[0], &spec)?.field_model()?;
        let region = MoveRegion::plane(s.region_side, s.region_side, 0.0)?;
        let t0 = Vec3::zeros();
        Ok(region_grid(&region, s.grid_step)?
            .iter()
            .map(|r| {
                let h = model.channel(&t0, r);
                vec![r.x, r.y, h.re, h.im, h.norm_sqr()]
            })
            .collect())
    }
}

// -------------------------------------------------------------- dof-study

pub struct DofStudy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DofSettings {
    /// Rx paths; the Tx is a fixed antenna with a single path.
    pub paths: usize,
    /// Side of the cubic Rx movement region.
    pub region_side: f64,
    pub position_step: f64,
    /// Grid points per Euler angle.
    pub orientation_steps: usize,
    pub directional_gain_dbi: f64,
    /// Position/orientation alternations of the joint search per start.
    pub ao_rounds: usize,
}

impl Default for DofSettings {
    fn default() -> Self {
        Self { paths: 8, region_side: 10.0, position_step: 0.1, orientation_steps: 12, directional_gain_dbi: 6.0, ao_rounds: 3 }
    }
}

static DOF_STUDY: Info = Info {
    id: "dof-study",
    category: Category::Simulate,
    kind: Kind::MonteCarlo,
    summary: "Mean channel power gain of fixed, position-only, orientation-only and joint reconfiguration",
    figure: "channel power gain versus number of Rx paths for FA, MA position, 6DMA orientation and joint position/orientation, isotropic and 6 dBi directional antennas",
    deviations: &[
        "100 channel realizations per point by default instead of 10^4",
        "position search on a grid with 0.1 wavelength spacing instead of a continuous exhaustive search",
        "orientation search over a 12-point grid per Euler angle",
        "joint position/orientation search alternates from two starts instead of searching exhaustively",
    ],
    sweep_variables: &["paths", "region_side", "directional_gain_dbi"],
    default_trials: 100,
};

/// One pattern's link: scenario plus cached wave vectors.
struct Link {
    scenario: Scenario,
    tx_k: Vec<ma_core::geometry::WaveVector>,
    rx_k: Vec<ma_core::geometry::WaveVector>,
    rx_vecs: Vec<Vec3>,
}

impl Link {
    fn new(scenario: Scenario) -> Result<Self> {
        let tx_k = scenario.tx_paths.wave_vectors()?;
        let rx_k = scenario.rx_paths.wave_vectors()?;
        let rx_vecs = rx_k.iter().map(|k| k.0).collect();
        Ok(Self { scenario, tx_k, rx_k, rx_vecs })
    }

    fn gain(&self, r: &Vec3, omega: &Aom) -> Result<f64> {
        Ok(channel_6dma(&Vec3::zeros(), r, &Aom::identity(), omega, &self.scenario)?.norm_sqr())
    }

    /// Best orientation on the Euler grid at position `r`.
    fn best_orientation(&self, r: &Vec3, steps: usize) -> Result<(f64, Aom)> {
        let mut best = (self.gain(r, &Aom::identity())?, Aom::identity());
        let full = |i: usize| 2.0 * PI * i as f64 / steps as f64;
        let half = |i: usize| if steps == 1 { 0.0 } else { -PI / 2.0 + PI * i as f64 / (steps - 1) as f64 };
        for a in 0..steps {
            for b in 0..steps {
                for c in 0..steps {
                    let omega = aom_from_euler(full(a), half(b), full(c));
                    let g = self.gain(r, &omega)?;
                    if g > best.0 {
                        best = (g, omega);
                    }
                }
            }
        }
        Ok(best)
    }

    /// Best position in the cube for a fixed orientation.
    fn best_position(&self, omega: &Aom, region: &MoveRegion, step: f64) -> Result<(f64, Vec3)> {
        let s = &self.scenario;
        let pprm = s.pprm.as_ref().expect("dof scenarios carry polarization responses");
        let sigma = prm_6dma(pprm, &Aom::identity(), omega, &s.tx_pattern, &s.rx_pattern, &self.tx_k, &self.rx_k)?;
        let b = sigma.0 * frv(&Vec3::zeros(), &self.tx_k, s.wavelength);
        let ext = siso_gain_extremes(&b, &self.rx_vecs, s.wavelength, region, step, false)?;
        Ok((ext.max, ext.argmax))
    }
}

/// Gains of the four schemes for one pattern: FA, position, orientation, joint.
fn dof_trial(link: &Link, s: &DofSettings, region: &MoveRegion) -> Result<[f64; 4]> {
    let origin = Vec3::zeros();
    let fa = link.gain(&origin, &Aom::identity())?;
    let (pos, pos_at) = link.best_position(&Aom::identity(), region, s.position_step)?;
    let (rot, rot_aom) = link.best_orientation(&origin, s.orientation_steps)?;
    validated("position-only placement", &[pos_at], region)?;

    let mut joint = pos.max(rot);
    let starts = [(origin, rot_aom), (pos_at, Aom::identity())];
    for (mut r, mut omega) in starts {
        let mut g = link.gain(&r, &omega)?;
        for _ in 0..s.ao_rounds {
            let (gp, rp) = link.best_position(&omega, region, s.position_step)?;
            if gp > g {
                g = gp;
                r = rp;
            }
            let (go, o) = link.best_orientation(&r, s.orientation_steps)?;
            if go > g {
                g = go;
                omega = o;
            }
        }
        validated("joint placement", &[r], region)?;
        joint = joint.max(g);
    }
    Ok([fa, pos, rot, joint])
}

impl Experiment for DofStudy {
    type Settings = DofSettings;

    fn info(&self) -> &'static Info {
        &DOF_STUDY
    }

    fn check(&self, s: &DofSettings) -> Result<()> {
        if s.paths == 0 || s.orientation_steps == 0 {
            return Err(config_error("paths and orientation_steps must be at least 1"));
        }
        positive("region_side", s.region_side)?;
        positive("position_step", s.position_step)?;
        if !s.directional_gain_dbi.is_finite() || s.directional_gain_dbi < 0.0 {
            return Err(config_error("directional_gain_dbi must be finite and at least 0"));
        }
        Ok(())
    }

    fn columns(&self, _: &DofSettings) -> Vec<String> {
        let mut out = Vec::new();
        for pattern in ["iso", "dir"] {
            for scheme in ["fa", "pos", "rot", "joint"] {
                out.push(format!("{scheme}_{pattern}_db"));
            }
        }
        out
    }

    fn compute(&self, s: &DofSettings, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let region = MoveRegion::cube(s.region_side, 0.0)?;
        let mut spec = ScenarioSpec::new(LAMBDA, s.paths);
        spec.tx_paths = Some(1);
        spec.prm_model = PrmModel::Full;
        spec.angle_law = AngleLaw::FullSphere;
        spec.polarization = Some(PolarizationLaw::RandomRotation);
        let rows = trials(seeds, |seed| {
            let iso = gen_scenario(seed, &spec)?;
            let dir = Scenario { rx_pattern: RadiationPattern::Directional { gain_dbi: s.directional_gain_dbi }, ..iso.clone() };
            let mut row = Vec::with_capacity(8);
            for scenario in [iso, dir] {
                row.extend(dof_trial(&Link::new(scenario)?, s, &region)?);
            }
            Ok(row)
        })?;
        Ok(vec![super::mean_row(&rows).into_iter().map(db).collect()])
    }
}
