//! Particle swarm optimization over a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{OptReport, Sense};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub particles: usize,
    pub iters: usize,
    pub seed: u64,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity clamp as a fraction of each bound's width.
    pub max_velocity: f64,
}

impl Default for PsoConfig {
    /// Constriction-equivalent coefficients (0.7298, 1.49618, 1.49618).
    fn default() -> Self {
        Self {
            particles: 30,
            iters: 200,
            seed: 0,
            inertia: 0.7298,
            cognitive: 1.49618,
            social: 1.49618,
            max_velocity: 0.2,
        }
    }
}

/// Global-best PSO. Positions are clamped to `bounds`; the trace records the
/// swarm's best score after initialization and after each iteration.
/// Evaluations: `particles · (iters + 1)`.
pub fn pso<F>(
    objective: F,
    sense: Sense,
    bounds: &[(f64, f64)],
    config: &PsoConfig,
) -> Result<OptReport<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64,
{
    if bounds.is_empty() || bounds.iter().any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::Domain("bounds must be finite with lo ≤ hi".into()));
    }
    if config.particles == 0 {
        return Err(Error::Domain("swarm needs at least one particle".into()));
    }
    let d = bounds.len();
    let s = sense.sign();
    let f = |x: &[f64]| s * objective(x);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let width: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let vmax: Vec<f64> = width.iter().map(|w| w * config.max_velocity).collect();

    let mut x: Vec<Vec<f64>> = (0..config.particles)
        .map(|_| bounds.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..config.particles)
        .map(|_| vmax.iter().map(|&m| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 }).collect())
        .collect();
    let mut pbest = x.clone();
    let mut pval: Vec<f64> = x.iter().map(|p| f(p)).collect();
    let mut g = 0;
    for i in 1..config.particles {
        if pval[i] > pval[g] {
            g = i;
        }
    }
    let mut gbest = pbest[g].clone();
    let mut gval = pval[g];
    let mut trace = vec![s * gval];

    for _ in 0..config.iters {
        for i in 0..config.particles {
            for j in 0..d {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let vel = config.inertia * v[i][j]
                    + config.cognitive * r1 * (pbest[i][j] - x[i][j])
                    + config.social * r2 * (gbest[j] - x[i][j]);
                v[i][j] = vel.clamp(-vmax[j], vmax[j]);
                x[i][j] = (x[i][j] + v[i][j]).clamp(bounds[j].0, bounds[j].1);
            }
            let val = f(&x[i]);
            if val > pval[i] {
                pval[i] = val;
                pbest[i].clone_from(&x[i]);
                if val > gval {
                    gval = val;
                    gbest.clone_from(&x[i]);
                }
            }
        }
        trace.push(s * gval);
    }
    Ok(OptReport::new(gbest, s * gval, config.iters, trace))
}
