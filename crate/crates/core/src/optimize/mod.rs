//! Antenna-position and sparsity optimization.
//!
//! Exact discrete methods (grid search, the fixed-hop graph optimizer),
//! closed-form array constructions, and local searchers (alternating
//! candidate sweeps, finite-difference gradient ascent, PSO) for the
//! MIMO, multiuser, sensing, ISAC and GMA objectives.

use serde::{Deserialize, Serialize};

mod graph;
mod gma;
mod isac;
mod linear;
mod mimo;
mod multiuser;
mod pso;
mod sensing_geom;
mod siso;

pub use graph::{graph_opt_miso, LineSelection, SampledLine};
pub use gma::{gen_gma_users, gma_opt, GmaConfig, GmaResult, GmaUserSpec};
pub use isac::{
    isac_constrained_opt, isac_tradeoff_sweep, IsacMode, IsacProblem, IsacSolution, SweepPoint,
};
pub use linear::{
    grating_lobe_apv, min_gain_over, multibeam_ao, multibeam_awv, svo_null_apv, widebeam_ao, zf_fpa_null,
    BeamDesign, Constructed, MultibeamConfig, ZfBaseline,
};
pub use mimo::{
    mimo_capacity_at, mimo_position_ao, upa, CapacityMode, MimoAoConfig, MimoPlacement,
    MimoProblem,
};
pub use multiuser::{
    multiuser_position_opt, Budget, Combiner, CsiMode, MuConfig, MuMode, MuProblem, MuSolution,
    Utility,
};
pub use pso::{pso, PsoConfig};
pub use sensing_geom::{
    crb_geometry_factor, crb_lower_bound_factor, planar_starts, sensing_1d_optimal, sensing_2d_ao,
    sensing_2d_ao_constrained, CrbMetric, Sensing2dConfig,
};
pub use siso::{
    grid_points, grid_search_position, gradient_position_search, siso_gain_bounds,
    siso_gain_extremes, GainExtremes, GradientConfig,
};

/// Direction of optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    #[default]
    Maximize,
    Minimize,
}

impl Sense {
    /// Sign that turns the objective into a maximization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }

    /// True when `a` is strictly better than `b` by more than `slack`.
    pub fn better(self, a: f64, b: f64, slack: f64) -> bool {
        self.sign() * (a - b) > slack
    }
}

/// Outcome of an optimizer run.
///
/// `trace` holds the best-so-far score after each iteration (sweep, step or
/// generation), so it is monotone in the optimization sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptReport<P> {
    pub placement: P,
    pub score: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub feasible: bool,
    pub notes: Vec<String>,
}

impl<P> OptReport<P> {
    pub(crate) fn new(placement: P, score: f64, iterations: usize, trace: Vec<f64>) -> Self {
        Self { placement, score, iterations, trace, feasible: true, notes: Vec::new() }
    }

    /// True when the trace never moves against `sense` by more than `slack`.
    pub fn trace_is_monotone(&self, sense: Sense, slack: f64) -> bool {
        self.trace.windows(2).all(|w| !sense.better(w[0], w[1], slack))
    }

    pub fn map<Q>(self, f: impl FnOnce(P) -> Q) -> OptReport<Q> {
        OptReport {
            placement: f(self.placement),
            score: self.score,
            iterations: self.iterations,
            trace: self.trace,
            feasible: self.feasible,
            notes: self.notes,
        }
    }
}

/// Relative improvement threshold used by the accept-only sweeps.
pub(crate) fn improves(new: f64, old: f64) -> bool {
    new > old + 1e-12 * old.abs().max(1e-300)
}
