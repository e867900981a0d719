//! Receive-array placement trading MIMO capacity against sensing CRB.

use serde::{Deserialize, Serialize};

use crate::channel::FieldModel;
use crate::error::{Error, Result};
use crate::geometry::{MoveRegion, Vec3};

use super::mimo::{mimo_capacity_at, mimo_position_ao, CapacityMode, MimoAoConfig, MimoPlacement, MimoProblem};
use super::sensing_geom::{
    crb_geometry_factor, planar_starts, sensing_2d_ao, sensing_2d_ao_constrained, CrbMetric, Sensing2dConfig,
};
use super::OptReport;

/// Communication link plus sensing constants for a movable receive array.
/// The Tx array is fixed; only the Rx positions are optimized.
#[derive(Debug, Clone)]
pub struct IsacProblem<'a> {
    pub model: &'a FieldModel,
    pub tx: Vec<Vec3>,
    pub tx_region: &'a MoveRegion,
    pub rx_region: &'a MoveRegion,
    pub n_r: usize,
    pub power: f64,
    pub noise: f64,
    pub mode: CapacityMode,
    pub metric: CrbMetric,
    /// `σ²λ² / (8π² T_s P N |β|²)`, turning the geometry factor into a CRB.
    pub crb_scale: f64,
}

impl IsacProblem<'_> {
    fn mimo(&self) -> MimoProblem<'_> {
        MimoProblem {
            model: self.model,
            tx_region: self.tx_region,
            rx_region: self.rx_region,
            power: self.power,
            noise: self.noise,
            mode: self.mode.clone(),
        }
    }

    pub fn crb(&self, rx: &[Vec3]) -> f64 {
        self.crb_scale * crb_geometry_factor(rx, self.metric)
    }

    pub fn capacity(&self, rx: &[Vec3]) -> f64 {
        mimo_capacity_at(&self.mimo(), &self.placement(rx))
    }

    fn placement(&self, rx: &[Vec3]) -> MimoPlacement {
        MimoPlacement { tx: self.tx.clone(), rx: rx.to_vec() }
    }

    fn solution(&self, rx: Vec<Vec3>) -> IsacSolution {
        IsacSolution { capacity: self.capacity(&rx), crb: self.crb(&rx), rx }
    }
}

/// Com-centric: maximize capacity with `crb ≤ max_crb`.
/// Sen-centric: minimize the CRB with `capacity ≥ min_capacity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsacMode {
    ComCentric { max_crb: f64 },
    SenCentric { min_capacity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsacSolution {
    pub rx: Vec<Vec3>,
    pub capacity: f64,
    pub crb: f64,
}

fn capacity_optimum(p: &IsacProblem<'_>, cfg: &MimoAoConfig) -> Result<OptReport<MimoPlacement>> {
    let starts: Vec<MimoPlacement> = planar_starts(p.n_r, p.rx_region).into_iter().map(|r| p.placement(&r)).collect();
    if starts.is_empty() {
        return Err(Error::Infeasible("no feasible receive array start".into()));
    }
    let cfg = MimoAoConfig { optimize_tx: false, ..cfg.clone() };
    mimo_position_ao(&p.mimo(), &starts, &cfg, None)
}

/// Constrained placement for one ISAC mode.
///
/// Feasibility of the threshold is checked against the unconstrained
/// optimum of the other objective. Com-centric mode returns the
/// unconstrained capacity optimum when it already meets the CRB threshold,
/// and otherwise runs capacity AO from the sensing optimum rejecting every
/// move that breaks the threshold. Sen-centric mode is symmetric.
pub fn isac_constrained_opt(
    problem: &IsacProblem<'_>,
    mode: IsacMode,
    mimo_cfg: &MimoAoConfig,
    sensing_cfg: &Sensing2dConfig,
) -> Result<OptReport<IsacSolution>> {
    if !(problem.crb_scale > 0.0) {
        return Err(Error::Domain("CRB scale must be positive".into()));
    }
    match mode {
        IsacMode::ComCentric { max_crb } => {
            let sens = sensing_2d_ao(problem.n_r, problem.rx_region, problem.metric, sensing_cfg)?;
            let c_min = problem.crb_scale * sens.score;
            if max_crb < c_min * (1.0 - 1e-9) {
                return Err(Error::Infeasible(format!(
                    "CRB threshold {max_crb:.6e} is below the achievable minimum {c_min:.6e}"
                )));
            }
            let free = capacity_optimum(problem, mimo_cfg)?;
            if problem.crb(&free.placement.rx) <= max_crb {
                let mut rep = free.map(|pl| problem.solution(pl.rx));
                rep.notes.push("CRB constraint inactive".into());
                return Ok(rep);
            }
            let cfg = MimoAoConfig { optimize_tx: false, ..mimo_cfg.clone() };
            let limit = max_crb.max(c_min);
            let ok = |pl: &MimoPlacement| problem.crb(&pl.rx) <= limit;
            let rep = mimo_position_ao(&problem.mimo(), &[problem.placement(&sens.placement)], &cfg, Some(&ok))?;
            Ok(rep.map(|pl| problem.solution(pl.rx)))
        }
        IsacMode::SenCentric { min_capacity } => {
            let free = capacity_optimum(problem, mimo_cfg)?;
            if min_capacity > free.score * (1.0 + 1e-9) {
                return Err(Error::Infeasible(format!(
                    "capacity threshold {min_capacity:.6} exceeds the achievable {:.6}",
                    free.score
                )));
            }
            let sens = sensing_2d_ao(problem.n_r, problem.rx_region, problem.metric, sensing_cfg)?;
            if problem.capacity(&sens.placement) >= min_capacity {
                let mut rep = sens.map(|rx| problem.solution(rx));
                rep.score = rep.placement.crb;
                rep.trace.iter_mut().for_each(|t| *t *= problem.crb_scale);
                rep.notes.push("capacity constraint inactive".into());
                return Ok(rep);
            }
            let limit = min_capacity.min(free.score);
            let ok = |rx: &[Vec3]| problem.capacity(rx) >= limit;
            let rep = sensing_2d_ao_constrained(
                problem.n_r,
                problem.rx_region,
                problem.metric,
                std::slice::from_ref(&free.placement.rx),
                sensing_cfg,
                Some(&ok),
            )?;
            let mut rep = rep.map(|rx| problem.solution(rx));
            rep.score = rep.placement.crb;
            rep.trace.iter_mut().for_each(|t| *t *= problem.crb_scale);
            Ok(rep)
        }
    }
}

/// One point of the capacity-versus-CRB trade-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub max_crb: f64,
    /// `None` when the threshold is below the achievable CRB.
    pub solution: Option<IsacSolution>,
}

/// Com-centric solutions for a list of CRB thresholds.
///
/// Thresholds are solved from tight to loose, each run warm-started from
/// the previous solution (feasible for every looser threshold), so capacity
/// is nondecreasing in the threshold. Output follows ascending threshold.
pub fn isac_tradeoff_sweep(
    problem: &IsacProblem<'_>,
    thresholds: &[f64],
    mimo_cfg: &MimoAoConfig,
    sensing_cfg: &Sensing2dConfig,
) -> Result<Vec<SweepPoint>> {
    let mut eps = thresholds.to_vec();
    eps.sort_by(f64::total_cmp);
    let sens = sensing_2d_ao(problem.n_r, problem.rx_region, problem.metric, sensing_cfg)?;
    let c_min = problem.crb_scale * sens.score;
    let free = capacity_optimum(problem, mimo_cfg)?;
    let free_crb = problem.crb(&free.placement.rx);
    let cfg = MimoAoConfig { optimize_tx: false, ..mimo_cfg.clone() };
    let mut prev: Option<Vec<Vec3>> = None;
    let mut out = Vec::with_capacity(eps.len());
    for &e in &eps {
        if e < c_min * (1.0 - 1e-9) {
            out.push(SweepPoint { max_crb: e, solution: None });
            continue;
        }
        let limit = e.max(c_min);
        let start = prev.clone().unwrap_or_else(|| sens.placement.clone());
        let ok = |pl: &MimoPlacement| problem.crb(&pl.rx) <= limit;
        let rep = mimo_position_ao(&problem.mimo(), &[problem.placement(&start)], &cfg, Some(&ok))?;
        let mut rx = rep.placement.rx;
        if free_crb <= limit && free.score > rep.score {
            rx = free.placement.rx.clone();
        }
        prev = Some(rx.clone());
        out.push(SweepPoint { max_crb: e, solution: Some(problem.solution(rx)) });
    }
    Ok(out)
}
