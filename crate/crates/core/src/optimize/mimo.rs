//! Point-to-point MIMO capacity maximization over Tx and Rx positions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::mimo_capacity;
use crate::channel::FieldModel;
use crate::error::{Error, Result};
use crate::geometry::{validate_positions, MoveRegion, RegionKind, Vec3};
use crate::linalg::{cis, CMat, CVec};

use super::siso::grid_points;
use super::{improves, OptReport};

/// Tx and Rx antenna positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoPlacement {
    pub tx: Vec<Vec3>,
    pub rx: Vec<Vec3>,
}

/// Capacity for the known channel, or the average over PRM realizations
/// that keep path angles and amplitudes and redraw every phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapacityMode {
    #[default]
    Instantaneous,
    Statistical { seeds: Vec<u64> },
}

/// Channel, regions and power budget of a MIMO placement problem.
#[derive(Debug, Clone)]
pub struct MimoProblem<'a> {
    pub model: &'a FieldModel,
    pub tx_region: &'a MoveRegion,
    pub rx_region: &'a MoveRegion,
    pub power: f64,
    pub noise: f64,
    pub mode: CapacityMode,
}

impl MimoProblem<'_> {
    /// PRMs the objective averages over (one for instantaneous mode).
    pub(crate) fn realizations(&self) -> Vec<CMat> {
        match &self.mode {
            CapacityMode::Instantaneous => vec![self.model.prm.clone()],
            CapacityMode::Statistical { seeds } => seeds
                .iter()
                .map(|&s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    self.model.prm.map(|z| z * cis(rng.random_range(0.0..2.0 * PI)))
                })
                .collect(),
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.power > 0.0) || !(self.noise > 0.0) {
            return Err(Error::Domain("power and noise must be positive".into()));
        }
        if let CapacityMode::Statistical { seeds } = &self.mode {
            if seeds.is_empty() {
                return Err(Error::Domain("statistical mode needs at least one seed".into()));
            }
        }
        Ok(())
    }
}

/// Settings for [`mimo_position_ao`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoAoConfig {
    /// Candidate grid spacing, meters.
    pub grid_step: f64,
    pub max_sweeps: usize,
    /// Move Tx antennas too; otherwise only the receiver is optimized.
    pub optimize_tx: bool,
    /// Halvings of the local pattern search run after the grid sweeps.
    pub refine_levels: usize,
}

impl MimoAoConfig {
    /// Grid step `λ/10`, up to 10 sweeps, three refinement levels.
    pub fn new(wavelength: f64) -> Self {
        Self { grid_step: wavelength / 10.0, max_sweeps: 10, optimize_tx: true, refine_levels: 3 }
    }
}

/// Planar array of `rows × cols` antennas centered in the region, with the
/// given spacing along x and y.
pub fn upa(rows: usize, cols: usize, spacing: f64, region: &MoveRegion) -> Result<Vec<Vec3>> {
    let (lo, hi) = region.bounds();
    let center = (lo + hi) / 2.0;
    let ox = center.x - (cols.saturating_sub(1)) as f64 * spacing / 2.0;
    let oy = center.y - (rows.saturating_sub(1)) as f64 * spacing / 2.0;
    let oz = if matches!(region.kind, RegionKind::Box { .. }) { center.z } else { 0.0 };
    let mut pts = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let y = if matches!(region.kind, RegionKind::Segment { .. }) { 0.0 } else { oy + r as f64 * spacing };
            pts.push(Vec3::new(ox + c as f64 * spacing, y, oz));
        }
    }
    validate_positions(&pts, region).into_result()?;
    Ok(pts)
}

fn frm(positions: &[Vec3], k: &[Vec3], wavelength: f64) -> CMat {
    let c = 2.0 * PI / wavelength;
    CMat::from_fn(k.len(), positions.len(), |l, n| cis(c * k[l].dot(&positions[n])))
}

fn frv(p: &Vec3, k: &[Vec3], wavelength: f64) -> CVec {
    let c = 2.0 * PI / wavelength;
    CVec::from_iterator(k.len(), k.iter().map(|kl| cis(c * kl.dot(p))))
}

/// Objective value of a placement: capacity, averaged over realizations.
pub fn mimo_capacity_at(problem: &MimoProblem<'_>, placement: &MimoPlacement) -> f64 {
    let prms = problem.realizations();
    mean_capacity(problem, &prms, placement)
}

fn mean_capacity(problem: &MimoProblem<'_>, prms: &[CMat], p: &MimoPlacement) -> f64 {
    let m = problem.model;
    let g = frm(&p.tx, &m.tx_k, m.wavelength);
    let f = frm(&p.rx, &m.rx_k, m.wavelength);
    let fa = f.adjoint();
    prms.iter().map(|s| mimo_capacity(&(&fa * s * &g), problem.power, problem.noise)).sum::<f64>()
        / prms.len() as f64
}

fn spaced(p: &Vec3, others: &[Vec3], skip: usize, d_min: f64) -> bool {
    others.iter().enumerate().all(|(j, q)| j == skip || (p - q).norm() >= d_min - 1e-12)
}

/// Alternating per-antenna optimization of MIMO capacity.
///
/// Each sweep visits every Rx antenna (and every Tx antenna when enabled)
/// and moves it to the best grid point of its region that keeps `d_min` to
/// the others and satisfies `extra`. Sweeps stop once none moves; a local
/// pattern search with halving steps then polishes each antenna. Moves are
/// accepted only when they strictly improve the objective, so the trace is
/// monotone. With several starts the best result wins (earliest on ties).
pub fn mimo_position_ao(
    problem: &MimoProblem<'_>,
    starts: &[MimoPlacement],
    config: &MimoAoConfig,
    extra: Option<&dyn Fn(&MimoPlacement) -> bool>,
) -> Result<OptReport<MimoPlacement>> {
    problem.check()?;
    if starts.is_empty() {
        return Err(Error::Domain("at least one initial placement is required".into()));
    }
    let prms = problem.realizations();
    let tx_grid = grid_points(problem.tx_region, config.grid_step)?;
    let rx_grid = grid_points(problem.rx_region, config.grid_step)?;
    let mut best: Option<OptReport<MimoPlacement>> = None;
    for (i, start) in starts.iter().enumerate() {
        validate_positions(&start.tx, problem.tx_region).into_result()?;
        validate_positions(&start.rx, problem.rx_region).into_result()?;
        if let Some(ok) = extra {
            if !ok(start) {
                return Err(Error::Infeasible(format!("start {i} violates the extra constraint")));
            }
        }
        let r = ao_from(problem, &prms, start, &tx_grid, &rx_grid, config, extra);
        if best.as_ref().is_none_or(|b| improves(r.score, b.score)) {
            best = Some(r);
        }
    }
    let mut best = best.expect("non-empty starts");
    if starts.len() > 1 {
        best.notes.push(format!("best of {} starts", starts.len()));
    }
    Ok(best)
}

fn ao_from(
    problem: &MimoProblem<'_>,
    prms: &[CMat],
    start: &MimoPlacement,
    tx_grid: &[Vec3],
    rx_grid: &[Vec3],
    config: &MimoAoConfig,
    extra: Option<&dyn Fn(&MimoPlacement) -> bool>,
) -> OptReport<MimoPlacement> {
    let m = problem.model;
    let mut cur = start.clone();
    let mut score = mean_capacity(problem, prms, &cur);
    let mut trace = vec![score];
    let mut sweeps = 0;

    // Try `cands` for antenna `n` on side `rx`; returns true on a move.
    let try_moves = |cur: &mut MimoPlacement, score: &mut f64, rx: bool, n: usize, cands: &[Vec3]| -> bool {
        let (region, d_min) = if rx {
            (problem.rx_region, problem.rx_region.d_min)
        } else {
            (problem.tx_region, problem.tx_region.d_min)
        };
        // Fixed parts: for Rx moves, Σ G(t̃) per realization; for Tx moves, F(r̃)ᴴ Σ.
        let fixed: Vec<CMat> = if rx {
            let g = frm(&cur.tx, &m.tx_k, m.wavelength);
            prms.iter().map(|s| s * &g).collect()
        } else {
            let fa = frm(&cur.rx, &m.rx_k, m.wavelength).adjoint();
            prms.iter().map(|s| &fa * s).collect()
        };
        let base: Vec<CMat> = if rx {
            let fa = frm(&cur.rx, &m.rx_k, m.wavelength).adjoint();
            fixed.iter().map(|sg| &fa * sg).collect()
        } else {
            let g = frm(&cur.tx, &m.tx_k, m.wavelength);
            fixed.iter().map(|fs| fs * &g).collect()
        };
        let mut found: Option<Vec3> = None;
        let mut best = *score;
        for p in cands {
            let side = if rx { &cur.rx } else { &cur.tx };
            if !region.contains(p) || !spaced(p, side, n, d_min) {
                continue;
            }
            let mut total = 0.0;
            if rx {
                let fv = frv(p, &m.rx_k, m.wavelength);
                for (h0, sg) in base.iter().zip(&fixed) {
                    let mut h = h0.clone();
                    let row = fv.adjoint() * sg;
                    h.set_row(n, &row);
                    total += mimo_capacity(&h, problem.power, problem.noise);
                }
            } else {
                let gv = frv(p, &m.tx_k, m.wavelength);
                for (h0, fs) in base.iter().zip(&fixed) {
                    let mut h = h0.clone();
                    let col = fs * &gv;
                    h.set_column(n, &col);
                    total += mimo_capacity(&h, problem.power, problem.noise);
                }
            }
            let val = total / prms.len() as f64;
            if improves(val, best) {
                if let Some(ok) = extra {
                    let mut trial = cur.clone();
                    if rx {
                        trial.rx[n] = *p;
                    } else {
                        trial.tx[n] = *p;
                    }
                    if !ok(&trial) {
                        continue;
                    }
                }
                best = val;
                found = Some(*p);
            }
        }
        match found {
            Some(p) => {
                if rx {
                    cur.rx[n] = p;
                } else {
                    cur.tx[n] = p;
                }
                *score = best;
                true
            }
            None => false,
        }
    };

    for _ in 0..config.max_sweeps.max(1) {
        sweeps += 1;
        let mut moved = false;
        for n in 0..cur.rx.len() {
            moved |= try_moves(&mut cur, &mut score, true, n, rx_grid);
        }
        if config.optimize_tx {
            for n in 0..cur.tx.len() {
                moved |= try_moves(&mut cur, &mut score, false, n, tx_grid);
            }
        }
        trace.push(score);
        if !moved {
            break;
        }
    }

    // Local pattern search around each antenna with halving steps.
    let mut h = config.grid_step / 2.0;
    for _ in 0..config.refine_levels {
        let sides: &[bool] = if config.optimize_tx { &[true, false] } else { &[true] };
        let mut moved = false;
        for &rx in sides {
            let count = if rx { cur.rx.len() } else { cur.tx.len() };
            for n in 0..count {
                let p0 = if rx { cur.rx[n] } else { cur.tx[n] };
                let mut cands = Vec::with_capacity(6);
                for d in 0..3 {
                    for s in [-1.0, 1.0] {
                        let mut q = p0;
                        q[d] += s * h;
                        cands.push(q);
                    }
                }
                moved |= try_moves(&mut cur, &mut score, rx, n, &cands);
            }
        }
        if moved {
            trace.push(score);
        } else {
            h /= 2.0;
        }
    }
    OptReport::new(cur, score, sweeps, trace)
}
