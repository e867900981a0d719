//! Optimal discrete MISO placement on a sampled line.
//!
//! Picking `N` of `M` samples with index gaps of at least `a_min` to
//! maximize the summed channel power is a fixed-hop longest path over the
//! sample graph; the dynamic program below solves it exactly in `O(M·N)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

use super::OptReport;

/// Uniform samples `s_m = m·A/M`, `m = 1..=M`, of a linear region with the
/// channel power `|h(s_m)|²` at each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledLine {
    pub spacing: f64,
    pub gains: Vec<f64>,
    pub a_min: usize,
}

impl SampledLine {
    /// Samples of a region of length `length`; `a_min = ⌈d_min/δ_s⌉` (at least 1).
    pub fn new(length: f64, d_min: f64, gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() || !(length > 0.0) {
            return Err(Error::Domain("sampled line needs samples and a positive length".into()));
        }
        let spacing = length / gains.len() as f64;
        let a_min = ((d_min / spacing) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { spacing, gains, a_min })
    }

    /// From complex channel samples; the per-sample weight is `|h|²`.
    pub fn from_channel(length: f64, d_min: f64, h: &[C64]) -> Result<Self> {
        Self::new(length, d_min, h.iter().map(|c| c.norm_sqr()).collect())
    }

    /// Unit spacing with an explicit minimum index gap.
    pub fn with_min_gap(gains: Vec<f64>, a_min: usize) -> Self {
        Self { spacing: 1.0, gains, a_min: a_min.max(1) }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Position of zero-based sample `i`, i.e. `(i+1)·δ_s`.
    pub fn position(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing
    }
}

/// Chosen samples: zero-based indices (ascending) and their positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSelection {
    pub indices: Vec<usize>,
    pub positions: Vec<f64>,
}

/// Globally optimal selection of `n` samples with gaps `≥ a_min`.
/// Ties resolve to the lexicographically smallest index set.
pub fn graph_opt_miso(line: &SampledLine, n: usize) -> Result<OptReport<LineSelection>> {
    let m = line.len();
    let a = line.a_min.max(1);
    if n == 0 {
        return Err(Error::Domain("at least one antenna is required".into()));
    }
    if (n - 1) * a + 1 > m {
        return Err(Error::Infeasible(format!(
            "{n} antennas with gap {a} do not fit in {m} samples"
        )));
    }
    // best[j][i]: best sum of j picks from samples i.. (NEG_INFINITY if impossible).
    let ninf = f64::NEG_INFINITY;
    let mut best = vec![vec![ninf; m + a + 1]; n + 1];
    for i in 0..=m + a {
        best[0][i] = 0.0;
    }
    for j in 1..=n {
        for i in (0..m).rev() {
            let skip = best[j][i + 1];
            let rest = best[j - 1][(i + a).min(m + a)];
            let take = if rest == ninf { ninf } else { line.gains[i] + rest };
            best[j][i] = if take >= skip { take } else { skip };
        }
    }
    let score = best[n][0];
    if score == ninf {
        return Err(Error::Infeasible("no feasible selection".into()));
    }
    let mut indices = Vec::with_capacity(n);
    let (mut i, mut j) = (0, n);
    while j > 0 {
        let rest = best[j - 1][(i + a).min(m + a)];
        let take = if rest == ninf { ninf } else { line.gains[i] + rest };
        if take >= best[j][i + 1] {
            indices.push(i);
            i += a;
            j -= 1;
        } else {
            i += 1;
        }
    }
    let positions = indices.iter().map(|&i| line.position(i)).collect();
    Ok(OptReport::new(LineSelection { indices, positions }, score, n * m, vec![score]))
}
