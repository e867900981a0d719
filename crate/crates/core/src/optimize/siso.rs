//! Single-antenna position search: gain bounds, exhaustive grids and
//! finite-difference gradient ascent.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MoveRegion, RegionKind, Vec3};
use crate::linalg::{cis, CVec};
use crate::C64;

use super::{OptReport, Sense};

/// Upper and lower bounds on `|f(r)ᴴ b|²` over all positions:
/// `‖b‖₁²` and `(max{0, 2|b_max| − ‖b‖₁})²`.
pub fn siso_gain_bounds(b: &[C64]) -> Result<(f64, f64)> {
    if b.is_empty() {
        return Err(Error::Domain("coefficient vector is empty".into()));
    }
    let l1: f64 = b.iter().map(|c| c.norm()).sum();
    let peak = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let lower = (2.0 * peak - l1).max(0.0);
    Ok((l1 * l1, lower * lower))
}

/// Axis samples `0, step, 2·step, …` up to `extent` (inclusive within 1e-9 steps).
fn axis(extent: f64, step: f64) -> Vec<f64> {
    if extent <= 0.0 {
        return vec![0.0];
    }
    let n = (extent / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| (i as f64 * step).min(extent)).collect()
}

/// Regular grid over a region in lexicographic order (x slowest).
/// Grid regions return their points sorted lexicographically.
pub fn grid_points(region: &MoveRegion, step: f64) -> Result<Vec<Vec3>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Domain("grid step must be positive".into()));
    }
    let pts: Vec<Vec3> = match &region.kind {
        RegionKind::Grid { points } => {
            let mut p: Vec<Vec3> = points.iter().map(|q| Vec3::from(*q)).collect();
            p.sort_by(lex_cmp);
            p
        }
        _ => {
            let (_, hi) = region.bounds();
            let (ax, ay, az) = (axis(hi.x, step), axis(hi.y, step), axis(hi.z, step));
            let mut p = Vec::with_capacity(ax.len() * ay.len() * az.len());
            for &x in &ax {
                for &y in &ay {
                    for &z in &az {
                        p.push(Vec3::new(x, y, z));
                    }
                }
            }
            p
        }
    };
    if pts.is_empty() {
        return Err(Error::Infeasible("empty grid".into()));
    }
    Ok(pts)
}

fn lex_cmp(a: &Vec3, b: &Vec3) -> std::cmp::Ordering {
    (0..3)
        .map(|i| a[i].total_cmp(&b[i]))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Exhaustive search of a single-position objective over a regular grid.
/// Ties keep the lexicographically smallest point.
pub fn grid_search_position<F>(
    objective: F,
    sense: Sense,
    region: &MoveRegion,
    step: f64,
) -> Result<OptReport<Vec3>>
where
    F: Fn(&Vec3) -> f64,
{
    let pts = grid_points(region, step)?;
    let mut best = pts[0];
    let mut score = objective(&best);
    for p in &pts[1..] {
        let v = objective(p);
        if sense.better(v, score, 0.0) {
            best = *p;
            score = v;
        }
    }
    Ok(OptReport::new(best, score, pts.len(), vec![score]))
}

/// Largest and smallest single-antenna gain found on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainExtremes {
    pub max: f64,
    pub argmax: Vec3,
    pub min: f64,
    pub argmin: Vec3,
    pub evaluations: usize,
}

/// Max and min of `|f(r)ᴴ b|²` over a region grid.
///
/// The phase factor of each path separates over the coordinates, so the
/// grid is swept with per-axis phasor tables instead of one exponential per
/// point and path. With `refine`, both extremes are polished by gradient
/// search from their grid cells.
pub fn siso_gain_extremes(
    b: &CVec,
    rx_k: &[Vec3],
    wavelength: f64,
    region: &MoveRegion,
    step: f64,
    refine: bool,
) -> Result<GainExtremes> {
    if b.len() != rx_k.len() || b.is_empty() {
        return Err(Error::Dimension("coefficients and wave vectors must match".into()));
    }
    let gain = |r: &Vec3| -> f64 {
        let c = 2.0 * PI / wavelength;
        let mut s = C64::new(0.0, 0.0);
        for (k, bl) in rx_k.iter().zip(b.iter()) {
            s += cis(-c * k.dot(r)) * bl;
        }
        s.norm_sqr()
    };

    let mut ext = match &region.kind {
        RegionKind::Grid { .. } => {
            let pts = grid_points(region, step)?;
            let mut e = GainExtremes {
                max: f64::NEG_INFINITY,
                argmax: pts[0],
                min: f64::INFINITY,
                argmin: pts[0],
                evaluations: pts.len(),
            };
            for p in &pts {
                let g = gain(p);
                if g > e.max {
                    e.max = g;
                    e.argmax = *p;
                }
                if g < e.min {
                    e.min = g;
                    e.argmin = *p;
                }
            }
            e
        }
        _ => separable_sweep(b, rx_k, wavelength, region, step)?,
    };

    if refine && region.dimension() > 0 {
        let cfg = GradientConfig::new(step / 2.0);
        let up = gradient_position_search(gain, Sense::Maximize, region, &ext.argmax, &cfg)?;
        if up.score > ext.max {
            ext.max = up.score;
            ext.argmax = up.placement;
        }
        let down = gradient_position_search(gain, Sense::Minimize, region, &ext.argmin, &cfg)?;
        if down.score < ext.min {
            ext.min = down.score;
            ext.argmin = down.placement;
        }
        ext.evaluations += up.iterations + down.iterations;
    }
    Ok(ext)
}

fn separable_sweep(
    b: &CVec,
    rx_k: &[Vec3],
    wavelength: f64,
    region: &MoveRegion,
    step: f64,
) -> Result<GainExtremes> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Domain("grid step must be positive".into()));
    }
    let c = 2.0 * PI / wavelength;
    let (_, hi) = region.bounds();
    let axes = [axis(hi.x, step), axis(hi.y, step), axis(hi.z, step)];
    let l = rx_k.len();
    // table[d][i * l + p] = exp(-i c k_p[d] axes[d][i])
    let table: Vec<Vec<C64>> = (0..3)
        .map(|d| {
            axes[d]
                .iter()
                .flat_map(|&s| rx_k.iter().map(move |k| cis(-c * k[d] * s)))
                .collect()
        })
        .collect();
    let mut e = GainExtremes {
        max: f64::NEG_INFINITY,
        argmax: Vec3::zeros(),
        min: f64::INFINITY,
        argmin: Vec3::zeros(),
        evaluations: axes.iter().map(Vec::len).product(),
    };
    let mut cxy = vec![C64::new(0.0, 0.0); l];
    for (ix, &x) in axes[0].iter().enumerate() {
        let tx = &table[0][ix * l..(ix + 1) * l];
        for (iy, &y) in axes[1].iter().enumerate() {
            let ty = &table[1][iy * l..(iy + 1) * l];
            for p in 0..l {
                cxy[p] = b[p] * tx[p] * ty[p];
            }
            for (iz, &z) in axes[2].iter().enumerate() {
                let tz = &table[2][iz * l..(iz + 1) * l];
                let mut s = C64::new(0.0, 0.0);
                for p in 0..l {
                    s += cxy[p] * tz[p];
                }
                let g = s.norm_sqr();
                if g > e.max {
                    e.max = g;
                    e.argmax = Vec3::new(x, y, z);
                }
                if g < e.min {
                    e.min = g;
                    e.argmin = Vec3::new(x, y, z);
                }
            }
        }
    }
    Ok(e)
}

/// Settings for [`gradient_position_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientConfig {
    /// Initial (and largest) step length in meters.
    pub step: f64,
    /// Step shrink factor on a rejected move.
    pub backtracking: f64,
    pub max_iter: usize,
    /// Stop once an accepted move improves the score by less than this.
    pub tol: f64,
    /// Central-difference half width.
    pub fd_step: f64,
}

impl GradientConfig {
    pub fn new(step: f64) -> Self {
        Self { step, backtracking: 0.5, max_iter: 500, tol: 1e-14, fd_step: step * 1e-5 }
    }
}

/// Projected gradient ascent (or descent) with central-difference
/// gradients and backtracking. Only improving moves are taken, so the
/// trace is monotone.
pub fn gradient_position_search<F>(
    objective: F,
    sense: Sense,
    region: &MoveRegion,
    start: &Vec3,
    config: &GradientConfig,
) -> Result<OptReport<Vec3>>
where
    F: Fn(&Vec3) -> f64,
{
    if !region.contains(start) {
        return Err(Error::Infeasible("gradient search start lies outside the region".into()));
    }
    let dims = region.dimension();
    if dims == 0 {
        return Err(Error::Precondition("gradient search needs a continuous region".into()));
    }
    if !(config.step > 0.0) || !(config.fd_step > 0.0) || !(config.backtracking > 0.0 && config.backtracking < 1.0) {
        return Err(Error::Domain("invalid gradient search settings".into()));
    }
    let s = sense.sign();
    let f = |p: &Vec3| s * objective(p);
    let (lo, hi) = region.bounds();

    let mut x = region.project(start);
    let mut fx = f(&x);
    let mut trace = vec![s * fx];
    let mut alpha = config.step;
    let min_alpha = config.step * 1e-10;
    let mut iterations = 0;

    'outer: while iterations < config.max_iter {
        let h = config.fd_step;
        let mut g = Vec3::zeros();
        let mut flat = true;
        for d in 0..dims {
            let mut e = Vec3::zeros();
            e[d] = h;
            let diff = f(&(x + e)) - f(&(x - e));
            if diff.abs() > 1e-13 * fx.abs().max(1.0) {
                flat = false;
            }
            g[d] = diff / (2.0 * h);
            // Drop components pushing out through an active bound.
            if (x[d] <= lo[d] && g[d] < 0.0) || (x[d] >= hi[d] && g[d] > 0.0) {
                g[d] = 0.0;
            }
        }
        let gn = g.norm();
        if flat || gn == 0.0 {
            break;
        }
        let dir = g / gn;
        loop {
            let cand = region.project(&(x + dir * alpha));
            let fc = f(&cand);
            if fc > fx {
                let gain = fc - fx;
                x = cand;
                fx = fc;
                iterations += 1;
                trace.push(s * fx);
                alpha = (alpha * 2.0).min(config.step);
                if gain < config.tol {
                    break 'outer;
                }
                break;
            }
            alpha *= config.backtracking;
            if alpha < min_alpha {
                break 'outer;
            }
        }
    }
    Ok(OptReport::new(x, s * fx, iterations, trace))
}
