//! Array geometries minimizing the angle-estimation CRB.
//!
//! Up to the common factor `σ²λ² / (8π² T_s P N |β|²)`, the CRB of the
//! spatial AoA `u` is `1 / var(x)` for a linear array and
//! `1 / (var(x) − cov(x,y)²/var(y))` for a planar one (`v` symmetric).
//! The functions here work with that geometry factor, in `1/m²`.

use serde::{Deserialize, Serialize};

use crate::beamforming::LinearApv;
use crate::error::{Error, Result};
use crate::geometry::{validate_positions, MoveRegion, RegionKind, Vec3};

use super::siso::grid_points;
use super::OptReport;

/// Optimal linear array: `⌊N/2⌋` antennas packed at `d_min` from the left
/// end and the rest packed against the right end, maximizing `var(x)`.
pub fn sensing_1d_optimal(n: usize, a: f64, d_min: f64) -> Result<LinearApv> {
    if n == 0 || !(a >= 0.0) || !(d_min >= 0.0) {
        return Err(Error::Domain("need N ≥ 1, A ≥ 0 and d_min ≥ 0".into()));
    }
    if (n - 1) as f64 * d_min > a * (1.0 + 1e-12) {
        return Err(Error::Infeasible(format!("{n} antennas at spacing {d_min} exceed length {a}")));
    }
    let half = n / 2;
    let pos = (1..=n)
        .map(|i| if i <= half { (i - 1) as f64 * d_min } else { a - (n - i) as f64 * d_min })
        .collect();
    LinearApv::new(pos)
}

/// Which combination of the two CRBs is minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrbMetric {
    #[default]
    Max,
    Sum,
}

fn moments(p: &[Vec3]) -> (f64, f64, f64) {
    let n = p.len() as f64;
    let mx = p.iter().map(|q| q.x).sum::<f64>() / n;
    let my = p.iter().map(|q| q.y).sum::<f64>() / n;
    let mut vx = 0.0;
    let mut vy = 0.0;
    let mut c = 0.0;
    for q in p {
        vx += (q.x - mx).powi(2);
        vy += (q.y - my).powi(2);
        c += (q.x - mx) * (q.y - my);
    }
    (vx / n, vy / n, c / n)
}

/// Geometry factor of the CRB metric for planar positions (`z` ignored).
/// Linear arrays along x return `1/var(x)`. Degenerate geometries give `+∞`.
pub fn crb_geometry_factor(positions: &[Vec3], metric: CrbMetric) -> f64 {
    if positions.is_empty() {
        return f64::INFINITY;
    }
    let (vx, vy, c) = moments(positions);
    if vy == 0.0 && c == 0.0 {
        return if vx > 0.0 { 1.0 / vx } else { f64::INFINITY };
    }
    let du = vx - c * c / vy;
    let dv = vy - c * c / vx;
    if !(du > 0.0) || !(dv > 0.0) {
        return f64::INFINITY;
    }
    match metric {
        CrbMetric::Max => (1.0 / du).max(1.0 / dv),
        CrbMetric::Sum => 1.0 / du + 1.0 / dv,
    }
}

/// Lower bound `2 / A_cir²` on the max-CRB geometry factor, with `A_cir`
/// the circumradius of the region (half the diagonal of its bounding box).
/// For a segment the bound is `1/A_cir²`, attained by splitting the array
/// between both ends.
pub fn crb_lower_bound_factor(region: &MoveRegion) -> f64 {
    let (lo, hi) = region.bounds();
    let r = (hi - lo).norm() / 2.0;
    match region.kind {
        RegionKind::Segment { .. } => 1.0 / (r * r),
        _ => 2.0 / (r * r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensing2dConfig {
    /// Candidate coordinate spacing, meters.
    pub grid_step: f64,
    pub max_sweeps: usize,
}

impl Sensing2dConfig {
    pub fn new(wavelength: f64) -> Self {
        Self { grid_step: wavelength / 20.0, max_sweeps: 50 }
    }
}

/// Square-ish dense and sparse UPAs in a planar region, used as starts.
pub fn planar_starts(n: usize, region: &MoveRegion) -> Vec<Vec<Vec3>> {
    let (_, hi) = region.bounds();
    let side = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(side);
    let d = region.d_min;
    let make = |sx: f64, sy: f64, ox: f64, oy: f64| -> Vec<Vec3> {
        (0..n).map(|i| Vec3::new(ox + (i % side) as f64 * sx, oy + (i / side) as f64 * sy, 0.0)).collect()
    };
    let mut out = Vec::new();
    if d > 0.0 {
        let w = (side - 1) as f64 * d;
        let h = (rows - 1) as f64 * d;
        out.push(make(d, d, (hi.x - w) / 2.0, (hi.y - h) / 2.0));
    }
    if side > 1 {
        let sx = hi.x / (side - 1) as f64;
        let sy = if rows > 1 { hi.y / (rows - 1) as f64 } else { 0.0 };
        out.push(make(sx, sy, 0.0, if rows > 1 { 0.0 } else { hi.y / 2.0 }));
    }
    out.retain(|p| validate_positions(p, region).is_ok());
    out
}

/// Planar array minimizing the CRB metric by alternating block moves.
///
/// Each sweep moves every antenna first along x (y fixed), then along y,
/// then over the full 2D grid, each time to the best candidate keeping
/// `d_min`. Moves are accepted only when they lower the metric. The run
/// starts from a dense and a sparse UPA and keeps the better result. A
/// segment region reduces to [`sensing_1d_optimal`].
pub fn sensing_2d_ao(
    n: usize,
    region: &MoveRegion,
    metric: CrbMetric,
    config: &Sensing2dConfig,
) -> Result<OptReport<Vec<Vec3>>> {
    if let RegionKind::Segment { length } = region.kind {
        let apv = sensing_1d_optimal(n, length, region.d_min)?;
        let pos: Vec<Vec3> = apv.positions().iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect();
        let score = crb_geometry_factor(&pos, metric);
        let mut rep = OptReport::new(pos, score, 1, vec![score]);
        rep.notes.push("segment region: closed-form linear optimum".into());
        return Ok(rep);
    }
    if !matches!(region.kind, RegionKind::Plane { .. }) {
        return Err(Error::Precondition("planar sensing needs a plane or segment region".into()));
    }
    let starts = planar_starts(n, region);
    if starts.is_empty() {
        return Err(Error::Infeasible("no feasible planar start for this region".into()));
    }
    sensing_2d_ao_constrained(n, region, metric, &starts, config, None)
}

/// [`sensing_2d_ao`] from explicit starts with an extra feasibility
/// predicate checked on every accepted move.
pub fn sensing_2d_ao_constrained(
    n: usize,
    region: &MoveRegion,
    metric: CrbMetric,
    starts: &[Vec<Vec3>],
    config: &Sensing2dConfig,
    extra: Option<&dyn Fn(&[Vec3]) -> bool>,
) -> Result<OptReport<Vec<Vec3>>> {
    if n < 2 {
        return Err(Error::Domain("planar sensing needs at least two antennas".into()));
    }
    if starts.is_empty() {
        return Err(Error::Domain("at least one start is required".into()));
    }
    let grid = grid_points(region, config.grid_step)?;
    let mut xs: Vec<f64> = grid.iter().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut ys: Vec<f64> = grid.iter().map(|p| p.y).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();

    let bound = crb_lower_bound_factor(region);
    let mut best: Option<OptReport<Vec<Vec3>>> = None;
    for start in starts {
        if start.len() != n {
            return Err(Error::Dimension("start placement size differs from N".into()));
        }
        validate_positions(start, region).into_result()?;
        if let Some(ok) = extra {
            if !ok(start) {
                return Err(Error::Infeasible("start violates the extra constraint".into()));
            }
        }
        let r = ao_from(start.clone(), region, metric, &xs, &ys, &grid, config, extra);
        if best.as_ref().is_none_or(|b| r.score < b.score * (1.0 - 1e-12)) {
            best = Some(r);
        }
    }
    let mut best = best.expect("non-empty starts");
    best.notes.push(format!(
        "gap to lower bound: {:.4} dB",
        10.0 * (best.score / bound).log10()
    ));
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn ao_from(
    mut pos: Vec<Vec3>,
    region: &MoveRegion,
    metric: CrbMetric,
    xs: &[f64],
    ys: &[f64],
    grid: &[Vec3],
    config: &Sensing2dConfig,
    extra: Option<&dyn Fn(&[Vec3]) -> bool>,
) -> OptReport<Vec<Vec3>> {
    let d_min = region.d_min;
    let mut score = crb_geometry_factor(&pos, metric);
    let mut trace = vec![score];
    let mut sweeps = 0;
    let better = |v: f64, s: f64| v < s - 1e-12 * s.abs().min(1e300);
    for _ in 0..config.max_sweeps.max(1) {
        sweeps += 1;
        let mut moved = false;
        for i in 0..pos.len() {
            for block in 0..3 {
                let cands: Vec<Vec3> = match block {
                    0 => xs.iter().map(|&x| Vec3::new(x, pos[i].y, 0.0)).collect(),
                    1 => ys.iter().map(|&y| Vec3::new(pos[i].x, y, 0.0)).collect(),
                    _ => grid.to_vec(),
                };
                let mut found = None;
                let mut trial = pos.clone();
                for p in cands {
                    if !pos.iter().enumerate().all(|(j, q)| j == i || (p - q).norm() >= d_min - 1e-12) {
                        continue;
                    }
                    trial[i] = p;
                    let v = crb_geometry_factor(&trial, metric);
                    if better(v, score) && extra.is_none_or(|ok| ok(&trial)) {
                        score = v;
                        found = Some(p);
                    }
                }
                if let Some(p) = found {
                    pos[i] = p;
                    moved = true;
                }
            }
        }
        trace.push(score);
        if !moved {
            break;
        }
    }
    OptReport::new(pos, score, sweeps, trace)
}
