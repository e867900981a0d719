//! Multiuser uplink: BS antenna positions for rate- and power-centric goals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::{mmse_combiner, user_sinr_and_rates, zf_combiner};
use crate::channel::UplinkUser;
use crate::error::{Error, Result};
use crate::geometry::{validate_positions, MoveRegion, RegionKind, Vec3};
use crate::linalg::CMat;

use super::graph::{graph_opt_miso, SampledLine};
use super::siso::grid_points;
use super::{improves, OptReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Zf,
    Mmse,
}

/// `f₁` is the minimum user rate, `f₂` the sum rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Utility {
    MinRate,
    SumRate,
}

/// `g₁(p) = max_k p_k` or `g₂(p) = Σ_k p_k`. A budget `P` is spent as
/// `p_k = P` under `g₁` and `p_k = P/K` under `g₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    MaxPower,
    SumPower,
}

impl Budget {
    fn powers(self, budget: f64, k: usize) -> Vec<f64> {
        match self {
            Budget::MaxPower => vec![budget; k],
            Budget::SumPower => vec![budget / k as f64; k],
        }
    }

    fn used(self, p: &[f64]) -> f64 {
        match self {
            Budget::MaxPower => p.iter().copied().fold(0.0, f64::max),
            Budget::SumPower => p.iter().sum(),
        }
    }
}

/// Known channels, or the average over realizations with every path phase
/// redrawn (angles and amplitudes kept).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CsiMode {
    #[default]
    Instantaneous,
    Statistical { seeds: Vec<u64> },
}

/// Rate-centric: maximize the utility at a given power budget.
/// Power-centric: smallest budget whose optimized utility reaches `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuMode {
    RateCentric { power: f64 },
    PowerCentric { target: f64, max_power: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuConfig {
    /// Candidate grid spacing, meters.
    pub grid_step: f64,
    pub max_sweeps: usize,
    pub bisection_iters: usize,
    /// Samples of a segment region when a single user reduces to MISO.
    pub line_samples: usize,
}

impl MuConfig {
    pub fn new(wavelength: f64) -> Self {
        Self { grid_step: wavelength / 10.0, max_sweeps: 10, bisection_iters: 12, line_samples: 400 }
    }
}

/// Users, BS region and receiver of a multiuser placement problem.
#[derive(Debug, Clone)]
pub struct MuProblem<'a> {
    pub users: &'a [UplinkUser],
    pub region: &'a MoveRegion,
    pub n_r: usize,
    pub wavelength: f64,
    pub noise: f64,
    pub combiner: Combiner,
    pub utility: Utility,
    pub budget: Budget,
    pub csi: CsiMode,
}

/// Placement, power allocation and achieved utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSolution {
    pub positions: Vec<Vec3>,
    pub powers: Vec<f64>,
    pub utility: f64,
    /// `g(p)` of the returned powers.
    pub budget_used: f64,
}

impl MuProblem<'_> {
    fn realizations(&self) -> Vec<Vec<UplinkUser>> {
        match &self.csi {
            CsiMode::Instantaneous => vec![self.users.to_vec()],
            CsiMode::Statistical { seeds } => seeds
                .iter()
                .map(|&s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    self.users.iter().map(|u| u.with_random_phases(&mut rng)).collect()
                })
                .collect(),
        }
    }

    /// Utility of one realization; a combiner that cannot separate the users
    /// scores zero.
    fn utility_of(&self, h: &CMat, powers: &[f64]) -> f64 {
        let w = match self.combiner {
            Combiner::Zf => zf_combiner(h),
            Combiner::Mmse => mmse_combiner(h, powers, self.noise),
        };
        let Ok(w) = w else { return 0.0 };
        match user_sinr_and_rates(h, &w, powers, self.noise) {
            Ok(r) => match self.utility {
                Utility::MinRate => r.min_rate,
                Utility::SumRate => r.sum_rate,
            },
            Err(_) => 0.0,
        }
    }

    fn channel(&self, users: &[UplinkUser], positions: &[Vec3]) -> CMat {
        let cols: Vec<_> = users.iter().map(|u| u.response(positions, self.wavelength)).collect();
        CMat::from_columns(&cols)
    }

    fn mean_utility(&self, reals: &[Vec<UplinkUser>], positions: &[Vec3], powers: &[f64]) -> f64 {
        reals.iter().map(|us| self.utility_of(&self.channel(us, positions), powers)).sum::<f64>()
            / reals.len() as f64
    }

    /// Utility of a given placement at a given power allocation.
    pub fn evaluate(&self, positions: &[Vec3], powers: &[f64]) -> f64 {
        self.mean_utility(&self.realizations(), positions, powers)
    }

    /// Dense square-ish array at the region's lower corner with spacing `d_min`
    /// (half a wavelength when `d_min` is zero).
    pub fn dense_start(&self) -> Result<Vec<Vec3>> {
        let d = if self.region.d_min > 0.0 { self.region.d_min } else { self.wavelength / 2.0 };
        let pts: Vec<Vec3> = match self.region.kind {
            RegionKind::Segment { .. } => (0..self.n_r).map(|i| Vec3::new(i as f64 * d, 0.0, 0.0)).collect(),
            _ => {
                let side = (self.n_r as f64).sqrt().ceil() as usize;
                (0..self.n_r).map(|i| Vec3::new((i % side) as f64 * d, (i / side) as f64 * d, 0.0)).collect()
            }
        };
        validate_positions(&pts, self.region).into_result()?;
        Ok(pts)
    }
}

/// Optimizes the BS antenna positions of a multiuser uplink.
///
/// Rate-centric mode runs accept-only per-antenna sweeps over a grid of the
/// region. A single user on a segment with known channels is a MISO power
/// maximization and is handed to [`graph_opt_miso`]. Power-centric mode
/// bisects the budget around the rate-centric solver, warm-starting each
/// step from the last feasible placement.
pub fn multiuser_position_opt(
    problem: &MuProblem<'_>,
    mode: MuMode,
    start: Option<Vec<Vec3>>,
    config: &MuConfig,
) -> Result<OptReport<MuSolution>> {
    let k = problem.users.len();
    if k == 0 || problem.n_r == 0 {
        return Err(Error::Domain("at least one user and one antenna are required".into()));
    }
    if !(problem.noise > 0.0) {
        return Err(Error::Domain("noise power must be positive".into()));
    }
    if let CsiMode::Statistical { seeds } = &problem.csi {
        if seeds.is_empty() {
            return Err(Error::Domain("statistical mode needs at least one seed".into()));
        }
    }
    let start = match start {
        Some(s) => s,
        None => problem.dense_start()?,
    };
    if start.len() != problem.n_r {
        return Err(Error::Dimension("start placement size differs from N_r".into()));
    }
    validate_positions(&start, problem.region).into_result()?;
    let reals = problem.realizations();

    match mode {
        MuMode::RateCentric { power } => {
            if !(power > 0.0) {
                return Err(Error::Domain("power budget must be positive".into()));
            }
            rate_centric(problem, &reals, power, start, config)
        }
        MuMode::PowerCentric { target, max_power } => {
            if !(max_power > 0.0) {
                return Err(Error::Domain("power budget must be positive".into()));
            }
            let top = rate_centric(problem, &reals, max_power, start, config)?;
            if top.score < target {
                return Err(Error::Infeasible(format!(
                    "utility {:.6} at the maximum budget is below the target {target}",
                    top.score
                )));
            }
            let (mut lo, mut hi) = (0.0, max_power);
            let mut best = top.placement;
            let mut trace = vec![hi];
            let mut iterations = top.iterations;
            for _ in 0..config.bisection_iters {
                let mid = 0.5 * (lo + hi);
                let r = rate_centric(problem, &reals, mid, best.positions.clone(), config)?;
                iterations += r.iterations;
                if r.score >= target {
                    hi = mid;
                    best = r.placement;
                } else {
                    lo = mid;
                }
                trace.push(hi);
            }
            let mut rep = OptReport::new(best, hi, iterations, trace);
            rep.notes.push(format!("budget bracket [{lo:.6e}, {hi:.6e}]"));
            Ok(rep)
        }
    }
}

fn rate_centric(
    problem: &MuProblem<'_>,
    reals: &[Vec<UplinkUser>],
    budget: f64,
    start: Vec<Vec3>,
    config: &MuConfig,
) -> Result<OptReport<MuSolution>> {
    let k = problem.users.len();
    let powers = problem.budget.powers(budget, k);
    let budget_used = problem.budget.used(&powers);

    if let (1, CsiMode::Instantaneous, RegionKind::Segment { length }) =
        (k, &problem.csi, &problem.region.kind)
    {
        let m = config.line_samples.max(problem.n_r);
        let samples: Vec<Vec3> = (1..=m).map(|i| Vec3::new(i as f64 * length / m as f64, 0.0, 0.0)).collect();
        let h = problem.users[0].response(&samples, problem.wavelength);
        let line = SampledLine::from_channel(*length, problem.region.d_min, h.as_slice())?;
        let sel = graph_opt_miso(&line, problem.n_r)?;
        let positions: Vec<Vec3> = sel.placement.positions.iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect();
        let utility = problem.mean_utility(reals, &positions, &powers);
        let mut rep = OptReport::new(MuSolution { positions, powers, utility, budget_used }, utility, 1, vec![utility]);
        rep.notes.push("single user on a segment: solved on the sampled line".into());
        return Ok(rep);
    }

    let grid = grid_points(problem.region, config.grid_step)?;
    let d_min = problem.region.d_min;
    let mut pos = start;
    let mut score = problem.mean_utility(reals, &pos, &powers);
    let mut trace = vec![score];
    let mut sweeps = 0;
    for _ in 0..config.max_sweeps.max(1) {
        sweeps += 1;
        let mut moved = false;
        for n in 0..pos.len() {
            let mut found = None;
            let mut trial = pos.clone();
            for p in &grid {
                if !pos.iter().enumerate().all(|(j, q)| j == n || (p - q).norm() >= d_min - 1e-12) {
                    continue;
                }
                trial[n] = *p;
                let v = problem.mean_utility(reals, &trial, &powers);
                if improves(v, score) {
                    score = v;
                    found = Some(*p);
                }
            }
            if let Some(p) = found {
                pos[n] = p;
                moved = true;
            }
        }
        trace.push(score);
        if !moved {
            break;
        }
    }
    Ok(OptReport::new(MuSolution { positions: pos, powers, utility: score, budget_used }, score, sweeps, trace))
}
