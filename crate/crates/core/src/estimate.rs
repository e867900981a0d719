//! Channel acquisition from pilot measurements at a few antenna positions.
//!
//! Model-based recovery estimates the field-response information (FRI):
//! Tx/Rx wave vectors on a quantized grid via OMP, plus the PRM via least
//! squares, and rebuilds the channel at any position pair. The model-free
//! baseline copies the nearest measured channel.
//!
//! Wave vectors are recovered in the plane of the measurement positions as
//! `(u, v)` pairs; `z` of measurement positions is ignored. A segment along
//! x (all `y = 0`) uses a one-axis dictionary and reports `v = 0`.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_normal, FieldModel};
use crate::error::{domain, Error, Result};
use crate::geometry::{MoveRegion, RegionKind, Vec3, WaveVector};
use crate::linalg::{cis, lstsq, CMat, CVec};
use crate::C64;

/// Which antenna moves during a measurement campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Tx visits random positions; Rx stays at `rx`.
    TxSweep { rx: Vec3 },
    /// Rx visits random positions; Tx stays at `tx`.
    RxSweep { tx: Vec3 },
    /// Both move to independent random positions for every pilot.
    Paired,
}

/// Pilots `y_m = √P h(t_m, r_m) + z_m` with their position pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub tx_positions: Vec<Vec3>,
    pub rx_positions: Vec<Vec3>,
    #[serde(with = "crate::serde_cmat::cvec")]
    pub pilots: CVec,
    pub power: f64,
    pub noise: f64,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.pilots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pilots.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        if self.tx_positions.len() != self.len() || self.rx_positions.len() != self.len() {
            return Err(Error::Dimension("pilot count differs from position-pair count".into()));
        }
        if !(self.power > 0.0) || !(self.noise >= 0.0) {
            return domain("pilot power must be positive and noise nonnegative");
        }
        Ok(())
    }
}

/// Uniform random point of a region.
pub fn sample_position<R: Rng>(region: &MoveRegion, rng: &mut R) -> Vec3 {
    match &region.kind {
        RegionKind::Segment { length } => Vec3::new(rng.random::<f64>() * length, 0.0, 0.0),
        RegionKind::Plane { extents } => Vec3::new(rng.random::<f64>() * extents[0], rng.random::<f64>() * extents[1], 0.0),
        RegionKind::Box { extents } => Vec3::new(
            rng.random::<f64>() * extents[0],
            rng.random::<f64>() * extents[1],
            rng.random::<f64>() * extents[2],
        ),
        RegionKind::Grid { points } => {
            let p = points[rng.random_range(0..points.len())];
            Vec3::new(p[0], p[1], p[2])
        }
    }
}

/// Pilots at explicit position pairs, noise drawn from `seed`.
pub fn measure_at(
    model: &FieldModel,
    tx_positions: Vec<Vec3>,
    rx_positions: Vec<Vec3>,
    power: f64,
    noise: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    if tx_positions.len() != rx_positions.len() {
        return Err(Error::Dimension("Tx and Rx position lists differ in length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = power.sqrt();
    let pilots = CVec::from_iterator(
        tx_positions.len(),
        tx_positions.iter().zip(&rx_positions).map(|(t, r)| {
            let z = if noise > 0.0 { complex_normal(&mut rng, noise) } else { C64::new(0.0, 0.0) };
            model.channel(t, r) * amp + z
        }),
    );
    let ms = MeasurementSet { tx_positions, rx_positions, pilots, power, noise };
    ms.check()?;
    Ok(ms)
}

/// Measurement campaign with uniform random positions. Positions are drawn
/// first (Tx then Rx for each pilot), then the noise, from one seeded stream.
#[allow(clippy::too_many_arguments)]
pub fn collect_measurements(
    model: &FieldModel,
    tx_region: &MoveRegion,
    rx_region: &MoveRegion,
    schedule: &Schedule,
    count: usize,
    power: f64,
    noise: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut tx, mut rx) = (Vec::with_capacity(count), Vec::with_capacity(count));
    for _ in 0..count {
        match schedule {
            Schedule::TxSweep { rx: r } => {
                tx.push(sample_position(tx_region, &mut rng));
                rx.push(*r);
            }
            Schedule::RxSweep { tx: t } => {
                tx.push(*t);
                rx.push(sample_position(rx_region, &mut rng));
            }
            Schedule::Paired => {
                tx.push(sample_position(tx_region, &mut rng));
                rx.push(sample_position(rx_region, &mut rng));
            }
        }
    }
    for (pts, region) in [(&tx, tx_region), (&rx, rx_region)] {
        if let Some(bad) = pts.iter().find(|p| !region.contains(p)) {
            return Err(Error::Infeasible(format!("measurement position {bad:?} outside its region")));
        }
    }
    measure_at(model, tx, rx, power, noise, rng.random())
}

/// Quantized wave-vector grid: `G` values `−1 + 2g/G`, `g = 1..=G`, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dictionary {
    pub grid: usize,
}

impl Dictionary {
    pub fn new(grid: usize) -> Result<Self> {
        if grid < 2 {
            return domain("dictionary needs at least two grid values per axis");
        }
        Ok(Self { grid })
    }

    /// Grid value for 0-based index `g`.
    pub fn value(&self, g: usize) -> f64 {
        -1.0 + 2.0 * (g + 1) as f64 / self.grid as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.grid).map(|g| self.value(g)).collect()
    }

    /// Nearest grid index to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let g = ((x + 1.0) * self.grid as f64 / 2.0).round() as i64 - 1;
        g.clamp(0, self.grid as i64 - 1) as usize
    }
}

/// Hard cap on dictionary atoms searched per OMP iteration.
pub const ATOM_CAP: usize = 1 << 24;

/// Recovered wave vectors and PRM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriEstimate {
    pub tx_wave_vectors: Vec<[f64; 2]>,
    pub rx_wave_vectors: Vec<[f64; 2]>,
    /// `L̂_r × L̂_t`.
    #[serde(with = "crate::serde_cmat")]
    pub prm: CMat,
    /// Warnings raised while estimating (early OMP stop, rank deficiency).
    #[serde(default)]
    pub flags: Vec<String>,
}

impl FriEstimate {
    /// Ground-truth FRI of a model (in-plane components of its wave vectors).
    pub fn from_model(model: &FieldModel) -> Self {
        Self {
            tx_wave_vectors: model.tx_k.iter().map(|k| [k.x, k.y]).collect(),
            rx_wave_vectors: model.rx_k.iter().map(|k| [k.x, k.y]).collect(),
            prm: model.prm.clone(),
            flags: Vec::new(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let ok = |w: &[[f64; 2]]| w.iter().all(|k| k[0].abs() <= 1.0 && k[1].abs() <= 1.0);
        if !ok(&self.tx_wave_vectors) || !ok(&self.rx_wave_vectors) {
            return domain("wave-vector entries must lie in [−1, 1]");
        }
        if self.prm.nrows() != self.rx_wave_vectors.len() || self.prm.ncols() != self.tx_wave_vectors.len() {
            return Err(Error::Dimension("PRM dimensions differ from recovered path counts".into()));
        }
        Ok(())
    }

    /// 3D wave vectors with the third entry on the upper hemisphere.
    pub fn tx_k(&self) -> Vec<Vec3> {
        self.tx_wave_vectors.iter().map(|k| WaveVector::from_planar(k[0], k[1]).0).collect()
    }

    pub fn rx_k(&self) -> Vec<Vec3> {
        self.rx_wave_vectors.iter().map(|k| WaveVector::from_planar(k[0], k[1]).0).collect()
    }

    pub fn field_model(&self, wavelength: f64) -> FieldModel {
        FieldModel { wavelength, tx_k: self.tx_k(), rx_k: self.rx_k(), prm: self.prm.clone() }
    }
}

/// One side's atom tables: `atom(g1, g2)[m] = cx[m, g1] · cy[m, g2]` with
/// `cx[m, g] = exp(i s c x_m u_g)`, `s = +1` for Tx and `−1` for Rx.
struct SideAtoms {
    cx: CMat,
    cy: CMat,
    grid: Vec<f64>,
    planar: bool,
}

impl SideAtoms {
    fn new(positions: &[Vec3], dict: &Dictionary, sign: f64, wavelength: f64) -> Self {
        let c = sign * 2.0 * PI / wavelength;
        let grid = dict.values();
        let planar = positions.iter().any(|p| p.y != 0.0);
        let m = positions.len();
        let cx = CMat::from_fn(m, grid.len(), |i, g| cis(c * positions[i].x * grid[g]));
        let cy = if planar {
            CMat::from_fn(m, grid.len(), |i, g| cis(c * positions[i].y * grid[g]))
        } else {
            CMat::from_element(m, 1, C64::new(1.0, 0.0))
        };
        Self { cx, cy, grid, planar }
    }

    fn count(&self) -> usize {
        self.cx.ncols() * self.cy.ncols()
    }

    /// Atom index `g1 + g2·G`.
    fn atom(&self, idx: usize) -> CVec {
        let g = self.cx.ncols();
        let (g1, g2) = (idx % g, idx / g);
        self.cx.column(g1).component_mul(&self.cy.column(g2))
    }

    fn wave_vector(&self, idx: usize) -> [f64; 2] {
        let g = self.cx.ncols();
        let (g1, g2) = (idx % g, idx / g);
        [self.grid[g1], if self.planar { self.grid[g2] } else { 0.0 }]
    }

    /// `atomᴴ r` for every atom, as a `G × G` (or `G × 1`) matrix.
    fn correlations(&self, r: &CVec) -> CMat {
        // Σ_m conj(cx[m,g1]·cy[m,g2]) r[m] = (cxᴴ diag(r) conj(cy))[g1,g2].
        let dr = CMat::from_fn(self.cx.nrows(), self.cx.ncols(), |m, g| self.cx[(m, g)].conj() * r[m]);
        dr.transpose() * self.cy.map(|z| z.conj())
    }
}

/// Output of one OMP run: selected atoms and their LS coefficients.
struct OmpResult {
    atoms: Vec<usize>,
    coeffs: CVec,
    flags: Vec<String>,
}

/// Generic OMP. `best_atom(residual)` returns the atom with the largest
/// correlation magnitude (lowest index on ties) and that magnitude.
fn omp(
    y: &CVec,
    max_atoms: usize,
    noise: f64,
    best_atom: impl Fn(&CVec) -> (usize, f64),
    atom: impl Fn(usize) -> CVec,
) -> OmpResult {
    let m = y.len();
    let floor = 1.1 * (m as f64 * noise).sqrt();
    let tiny = 1e-12 * y.norm();
    let mut atoms: Vec<usize> = Vec::new();
    let mut cols: Vec<CVec> = Vec::new();
    let mut coeffs = CVec::zeros(0);
    let mut residual = y.clone();
    let mut flags = Vec::new();
    while atoms.len() < max_atoms {
        let rn = residual.norm();
        if rn <= floor.max(tiny) {
            break;
        }
        let (idx, mag) = best_atom(&residual);
        if atoms.contains(&idx) || !(mag > 0.0) {
            flags.push(format!("OMP stagnated after {} of {max_atoms} atoms", atoms.len()));
            break;
        }
        atoms.push(idx);
        cols.push(atom(idx));
        let a = CMat::from_columns(&cols);
        let (x, _) = lstsq(&a, y, 1e-12);
        let new_res = y - &a * &x;
        if new_res.norm() >= rn * (1.0 - 1e-12) {
            atoms.pop();
            cols.pop();
            flags.push(format!("OMP residual stopped decreasing after {} of {max_atoms} atoms", atoms.len()));
            break;
        }
        coeffs = x;
        residual = new_res;
    }
    if atoms.len() < max_atoms && flags.is_empty() && residual.norm() > floor.max(tiny) {
        flags.push(format!("OMP returned {} of {max_atoms} atoms", atoms.len()));
    }
    OmpResult { atoms, coeffs, flags }
}

fn argmax_abs(c: &CMat) -> (usize, f64) {
    // Column-major linear index equals g1 + g2·G.
    let mut best = (0, -1.0);
    for (i, z) in c.iter().enumerate() {
        let v = z.norm_sqr();
        if v > best.1 {
            best = (i, v);
        }
    }
    (best.0, best.1.sqrt())
}

fn side_omp(positions: &[Vec3], y: &CVec, noise: f64, dict: &Dictionary, paths: usize, sign: f64, wavelength: f64) -> Result<(Vec<[f64; 2]>, Vec<String>)> {
    let side = SideAtoms::new(positions, dict, sign, wavelength);
    if side.count() > ATOM_CAP {
        return Err(Error::Domain(format!("{} atoms exceed the cap of {ATOM_CAP}; use a smaller grid", side.count())));
    }
    let r = omp(y, paths, noise, |res| argmax_abs(&side.correlations(res)), |i| side.atom(i));
    Ok((r.atoms.iter().map(|&i| side.wave_vector(i)).collect(), r.flags))
}

/// Assumed structure of the PRM for least-squares estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrmStructure {
    /// One Rx path per Tx path. The pairing is unknown and is chosen by
    /// least residual over all pairings.
    #[default]
    Diagonal,
    /// Dense `L̂_r × L̂_t`.
    Full,
}

/// Least-squares PRM fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsPrm {
    #[serde(with = "crate::serde_cmat")]
    pub prm: CMat,
    /// `‖y − √P Φ vec(Σ̂)‖²`.
    pub residual_sq: f64,
    pub rank: usize,
    pub unknowns: usize,
    pub flags: Vec<String>,
}

/// Rows of `y_m = √P Σ_ij conj(f_i(r_m)) σ_ij g_j(t_m)` for the given
/// unknown pattern `(i, j)`.
fn ls_system(sets: &[&MeasurementSet], tx_k: &[Vec3], rx_k: &[Vec3], pattern: &[(usize, usize)], wavelength: f64) -> (CMat, CVec) {
    let c = 2.0 * PI / wavelength;
    let rows: usize = sets.iter().map(|s| s.len()).sum();
    let mut a = CMat::zeros(rows, pattern.len());
    let mut y = CVec::zeros(rows);
    let mut row = 0;
    for s in sets {
        let amp = s.power.sqrt();
        for m in 0..s.len() {
            let (t, r) = (&s.tx_positions[m], &s.rx_positions[m]);
            for (col, &(i, j)) in pattern.iter().enumerate() {
                a[(row, col)] = cis(c * (tx_k[j].dot(t) - rx_k[i].dot(r))) * amp;
            }
            y[row] = s.pilots[m];
            row += 1;
        }
    }
    (a, y)
}

fn ls_fit(sets: &[&MeasurementSet], tx_k: &[Vec3], rx_k: &[Vec3], pattern: &[(usize, usize)], wavelength: f64) -> LsPrm {
    let (a, y) = ls_system(sets, tx_k, rx_k, pattern, wavelength);
    let (x, rank) = lstsq(&a, &y, 1e-10);
    let residual_sq = (&y - &a * &x).norm_squared();
    let mut prm = CMat::zeros(rx_k.len(), tx_k.len());
    for (col, &(i, j)) in pattern.iter().enumerate() {
        prm[(i, j)] = x[col];
    }
    let mut flags = Vec::new();
    if rank < pattern.len() {
        flags.push(format!("rank-deficient PRM system: rank {rank} for {} unknowns; minimum-norm solution", pattern.len()));
    }
    let m = y.len() as f64;
    let noise = sets.iter().map(|s| s.noise * s.len() as f64).sum::<f64>() / m.max(1.0);
    let expected = m * noise;
    if residual_sq > expected + 5.0 * m.sqrt() * noise + 1e-20 * y.norm_squared().max(1.0) {
        flags.push(format!("poor fit: residual² {residual_sq:.3e} exceeds noise level {expected:.3e}"));
    }
    LsPrm { prm, residual_sq, rank, unknowns: pattern.len(), flags }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Largest path count for which every diagonal pairing is tried.
pub const MAX_PAIRING_PATHS: usize = 8;

/// Least-squares PRM from pilots and recovered wave vectors.
///
/// `Full` solves for every entry (minimum-norm when rank-deficient).
/// `Diagonal` needs `L̂_t = L̂_r` and tries every Tx→Rx pairing, keeping the
/// smallest residual (first pairing in lexicographic order on ties).
pub fn ls_prm(
    sets: &[&MeasurementSet],
    tx_k: &[Vec3],
    rx_k: &[Vec3],
    structure: PrmStructure,
    wavelength: f64,
) -> Result<LsPrm> {
    for s in sets {
        s.check()?;
    }
    let rows: usize = sets.iter().map(|s| s.len()).sum();
    let full: Vec<(usize, usize)> = (0..tx_k.len()).flat_map(|j| (0..rx_k.len()).map(move |i| (i, j))).collect();
    match structure {
        PrmStructure::Full => Ok(ls_fit(sets, tx_k, rx_k, &full, wavelength)),
        PrmStructure::Diagonal => {
            if tx_k.len() != rx_k.len() || tx_k.len() > MAX_PAIRING_PATHS {
                let mut r = ls_fit(sets, tx_k, rx_k, &full, wavelength);
                r.flags.push("diagonal PRM needs equal path counts up to the pairing limit; solved as full".into());
                return Ok(r);
            }
            if rows < tx_k.len() {
                return Err(Error::Precondition("fewer pilots than PRM unknowns".into()));
            }
            let mut perm: Vec<usize> = (0..tx_k.len()).collect();
            let mut best: Option<LsPrm> = None;
            loop {
                let pattern: Vec<(usize, usize)> = perm.iter().enumerate().map(|(j, &i)| (i, j)).collect();
                let fit = ls_fit(sets, tx_k, rx_k, &pattern, wavelength);
                if best.as_ref().is_none_or(|b| fit.residual_sq < b.residual_sq * (1.0 - 1e-12)) {
                    best = Some(fit);
                }
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            Ok(best.expect("at least one pairing"))
        }
    }
}

/// Settings for model-based recovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmpConfig {
    pub dictionary: Dictionary,
    pub tx_paths: usize,
    pub rx_paths: usize,
    pub structure: PrmStructure,
}

impl OmpConfig {
    /// Successive defaults: `G = 64`.
    pub fn successive(tx_paths: usize, rx_paths: usize) -> Self {
        Self { dictionary: Dictionary { grid: 64 }, tx_paths, rx_paths, structure: PrmStructure::Diagonal }
    }

    /// Joint defaults: `G = 16`; `tx_paths` is the number of PRM entries sought.
    pub fn joint(entries: usize) -> Self {
        Self { dictionary: Dictionary { grid: 16 }, tx_paths: entries, rx_paths: entries, structure: PrmStructure::Diagonal }
    }
}

/// Successive FRI estimation.
///
/// (i) OMP over the Tx dictionary on pilots with the Rx fixed, (ii) the
/// same over the Rx dictionary with the Tx fixed, (iii) least squares for
/// the PRM on both pilot sets. With no Tx sweep (a fixed Tx antenna) a
/// single broadside Tx path stands in for the Tx side, so the estimate
/// reproduces the channel seen from that Tx position.
pub fn omp_successive(
    ms_tx: Option<&MeasurementSet>,
    ms_rx: &MeasurementSet,
    config: &OmpConfig,
    wavelength: f64,
) -> Result<FriEstimate> {
    ms_rx.check()?;
    let dict = Dictionary::new(config.dictionary.grid)?;
    if ms_rx.len() < config.rx_paths {
        return Err(Error::Precondition("fewer Rx measurements than requested Rx paths".into()));
    }
    let mut flags = Vec::new();
    let (rx_wv, f) = side_omp(&ms_rx.rx_positions, &ms_rx.pilots, ms_rx.noise, &dict, config.rx_paths, -1.0, wavelength)?;
    flags.extend(f.into_iter().map(|s| format!("Rx: {s}")));
    let rx_k: Vec<Vec3> = rx_wv.iter().map(|k| WaveVector::from_planar(k[0], k[1]).0).collect();

    let Some(ms_tx) = ms_tx else {
        let t0 = ms_rx.tx_positions.first().copied().unwrap_or_else(Vec3::zeros);
        if ms_rx.tx_positions.iter().any(|t| *t != t0) {
            return Err(Error::Precondition("Rx-only estimation needs a fixed Tx position".into()));
        }
        // A broadside Tx path at the origin of z: g(t0) = 1 when t0.z = 0.
        let tx_k = vec![Vec3::new(0.0, 0.0, 1.0)];
        let fit = ls_prm(&[ms_rx], &tx_k, &rx_k, PrmStructure::Full, wavelength)?;
        flags.extend(fit.flags);
        return Ok(FriEstimate { tx_wave_vectors: vec![[0.0, 0.0]], rx_wave_vectors: rx_wv, prm: fit.prm, flags });
    };
    ms_tx.check()?;
    if ms_tx.len() < config.tx_paths {
        return Err(Error::Precondition("fewer Tx measurements than requested Tx paths".into()));
    }
    let (tx_wv, f) = side_omp(&ms_tx.tx_positions, &ms_tx.pilots, ms_tx.noise, &dict, config.tx_paths, 1.0, wavelength)?;
    flags.extend(f.into_iter().map(|s| format!("Tx: {s}")));
    let tx_k: Vec<Vec3> = tx_wv.iter().map(|k| WaveVector::from_planar(k[0], k[1]).0).collect();
    let fit = ls_prm(&[ms_tx, ms_rx], &tx_k, &rx_k, config.structure, wavelength)?;
    flags.extend(fit.flags);
    Ok(FriEstimate { tx_wave_vectors: tx_wv, rx_wave_vectors: rx_wv, prm: fit.prm, flags })
}

/// Joint FRI estimation over the combined `(Tx grid, Rx grid)` dictionary
/// (`G⁴` atoms for planar regions). Each selected atom is one PRM entry;
/// entries sharing a grid point share a recovered path.
pub fn omp_joint(ms: &MeasurementSet, config: &OmpConfig, wavelength: f64) -> Result<FriEstimate> {
    ms.check()?;
    let dict = Dictionary::new(config.dictionary.grid)?;
    let entries = config.tx_paths;
    if ms.len() < entries {
        return Err(Error::Precondition(format!("{} measurements cannot resolve {entries} PRM entries", ms.len())));
    }
    let tx = SideAtoms::new(&ms.tx_positions, &dict, 1.0, wavelength);
    let rx = SideAtoms::new(&ms.rx_positions, &dict, -1.0, wavelength);
    let total = tx.count().saturating_mul(rx.count());
    if total > ATOM_CAP {
        return Err(Error::Domain(format!("{total} joint atoms exceed the cap of {ATOM_CAP}; use a smaller grid")));
    }
    let m = ms.len();
    // Full per-side atom matrices, M × (atoms per side).
    let at = CMat::from_fn(m, tx.count(), |i, a| tx.cx[(i, a % tx.cx.ncols())] * tx.cy[(i, a / tx.cx.ncols())]);
    let ar = CMat::from_fn(m, rx.count(), |i, a| rx.cx[(i, a % rx.cx.ncols())] * rx.cy[(i, a / rx.cx.ncols())]);
    let ar_conj = ar.map(|z| z.conj());
    let ntx = tx.count();
    let best_atom = |r: &CVec| {
        // corr[gt, gr] = Σ_m conj(at[m,gt] ar[m,gr]) r[m]; column-major index gt + gr·ntx.
        let w = CMat::from_fn(m, ntx, |i, a| at[(i, a)].conj() * r[i]);
        argmax_abs(&(w.transpose() * &ar_conj))
    };
    let atom = |idx: usize| at.column(idx % ntx).component_mul(&ar.column(idx / ntx));
    let r = omp(&ms.pilots, entries, ms.noise, best_atom, atom);

    let mut tx_ids: Vec<usize> = Vec::new();
    let mut rx_ids: Vec<usize> = Vec::new();
    let mut cells = Vec::new();
    for &idx in &r.atoms {
        let (gt, gr) = (idx % ntx, idx / ntx);
        let j = tx_ids.iter().position(|&g| g == gt).unwrap_or_else(|| {
            tx_ids.push(gt);
            tx_ids.len() - 1
        });
        let i = rx_ids.iter().position(|&g| g == gr).unwrap_or_else(|| {
            rx_ids.push(gr);
            rx_ids.len() - 1
        });
        cells.push((i, j));
    }
    let mut prm = CMat::zeros(rx_ids.len(), tx_ids.len());
    let amp = ms.power.sqrt();
    for (k, &(i, j)) in cells.iter().enumerate() {
        prm[(i, j)] = r.coeffs[k] / amp;
    }
    Ok(FriEstimate {
        tx_wave_vectors: tx_ids.iter().map(|&g| tx.wave_vector(g)).collect(),
        rx_wave_vectors: rx_ids.iter().map(|&g| rx.wave_vector(g)).collect(),
        prm,
        flags: r.flags,
    })
}

/// Channel map `Ĥ[p, q] = f̂(r_q)ᴴ Σ̂ ĝ(t_p)` over Tx grid `p` and Rx grid `q`.
pub fn reconstruct_mapping(fri: &FriEstimate, tx_grid: &[Vec3], rx_grid: &[Vec3], wavelength: f64) -> Result<CMat> {
    fri.check()?;
    Ok(fri.field_model(wavelength).mimo(tx_grid, rx_grid).transpose())
}

/// Ground-truth channel map in the same layout as [`reconstruct_mapping`].
pub fn channel_mapping(model: &FieldModel, tx_grid: &[Vec3], rx_grid: &[Vec3]) -> CMat {
    model.mimo(tx_grid, rx_grid).transpose()
}

/// Model-free map: each grid pair takes the pilot of the nearest measured
/// pair (Euclidean distance over the joint Tx/Rx coordinates) divided by
/// `√P`; ties go to the lowest measurement index.
pub fn nearest_measured_reconstruct(ms: &MeasurementSet, tx_grid: &[Vec3], rx_grid: &[Vec3]) -> Result<CMat> {
    ms.check()?;
    if ms.is_empty() {
        return Err(Error::Precondition("no measurements to copy from".into()));
    }
    let amp = ms.power.sqrt();
    let mut out = CMat::zeros(tx_grid.len(), rx_grid.len());
    for (p, t) in tx_grid.iter().enumerate() {
        for (q, r) in rx_grid.iter().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for m in 0..ms.len() {
                let d = (t - ms.tx_positions[m]).norm_squared() + (r - ms.rx_positions[m]).norm_squared();
                if d < best.0 {
                    best = (d, m);
                }
            }
            out[(p, q)] = ms.pilots[best.1] / amp;
        }
    }
    Ok(out)
}

/// `‖H − Ĥ‖²_F / ‖H‖²_F`.
pub fn nmse(h: &CMat, h_hat: &CMat) -> Result<f64> {
    if h.shape() != h_hat.shape() {
        return Err(Error::Dimension("channel maps differ in shape".into()));
    }
    let den = h.norm_squared();
    if !(den > 0.0) {
        return Err(Error::Domain("reference channel map is zero".into()));
    }
    Ok((h - h_hat).norm_squared() / den)
}

/// Regular grid over a planar or segment region with the given spacing.
pub fn region_grid(region: &MoveRegion, spacing: f64) -> Result<Vec<Vec3>> {
    crate::optimize::grid_points(region, spacing)
}

/// Writes a channel map as CSV with columns `tx_x, tx_y, rx_x, rx_y, re, im`.
pub fn write_mapping_csv<W: Write>(out: W, tx_grid: &[Vec3], rx_grid: &[Vec3], map: &CMat) -> Result<()> {
    if map.shape() != (tx_grid.len(), rx_grid.len()) {
        return Err(Error::Dimension("map shape differs from grid sizes".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Domain(format!("CSV write failed: {e}"));
    w.write_record(["tx_x", "tx_y", "rx_x", "rx_y", "re", "im"]).map_err(io)?;
    for (p, t) in tx_grid.iter().enumerate() {
        for (q, r) in rx_grid.iter().enumerate() {
            let z = map[(p, q)];
            w.serialize((t.x, t.y, r.x, r.y, z.re, z.im)).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Domain(format!("CSV flush failed: {e}")))?;
    Ok(())
}

/// Checks that every measured position lies in the given regions.
pub fn validate_measurements(ms: &MeasurementSet, tx_region: &MoveRegion, rx_region: &MoveRegion) -> Result<()> {
    ms.check()?;
    for (pts, region) in [(&ms.tx_positions, tx_region), (&ms.rx_positions, rx_region)] {
        if let Some(bad) = pts.iter().find(|p| !region.contains(p)) {
            return Err(Error::Infeasible(format!("measured position {bad:?} lies outside its region")));
        }
    }
    Ok(())
}
