//! Coordinate systems, wave vectors, antenna orientation matrices and
//! movement-region validation.
//!
//! The local coordinate system (LCS) is fixed to the transceiver; each antenna
//! carries an antenna-centric coordinate system (ACCS) whose axes, expressed
//! in the LCS, are the columns of its orientation matrix [`Aom`].

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type Vec3 = Vector3<f64>;

const ANGLE_SLACK: f64 = 1e-12;
const POLE_EPS: f64 = 1e-12;
/// Absolute slack (meters) used by the closed region and spacing checks.
pub const PLACEMENT_TOL: f64 = 1e-12;

/// Elevation/azimuth pair of a propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub elevation: f64,
    pub azimuth: f64,
}

impl Direction {
    pub fn new(elevation: f64, azimuth: f64) -> Result<Self> {
        let d = Self { elevation, azimuth };
        d.check()?;
        Ok(d)
    }

    pub fn check(&self) -> Result<()> {
        if !self.elevation.is_finite() || self.elevation.abs() > FRAC_PI_2 + ANGLE_SLACK {
            return domain(format!("elevation {} outside [-π/2, π/2]", self.elevation));
        }
        if !self.azimuth.is_finite() || self.azimuth.abs() > PI + ANGLE_SLACK {
            return domain(format!("azimuth {} outside [-π, π]", self.azimuth));
        }
        Ok(())
    }
}

/// Unit propagation direction `[cosθcosφ, cosθsinφ, sinθ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector(pub Vec3);

impl WaveVector {
    /// Accepts any vector within 1e-12 of unit norm.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return domain(format!("wave vector norm {n} is not 1"));
        }
        Ok(Self(v))
    }

    /// Normalizes `v`; fails on the zero vector.
    pub fn normalized(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return domain("cannot normalize a zero or non-finite vector");
        }
        Ok(Self(v / n))
    }

    /// Direction cosines `(u, v)` in the x–y plane, with the third component
    /// filled in on the upper hemisphere.
    pub fn from_planar(u: f64, v: f64) -> Self {
        let z = (1.0 - u * u - v * v).max(0.0).sqrt();
        Self(Vec3::new(u, v, z))
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }
}

pub fn wave_vector(d: &Direction) -> Result<WaveVector> {
    d.check()?;
    Ok(wave_vector_unchecked(d))
}

pub(crate) fn wave_vector_unchecked(d: &Direction) -> WaveVector {
    let (se, ce) = d.elevation.sin_cos();
    let (sa, ca) = d.azimuth.sin_cos();
    WaveVector(Vec3::new(ce * ca, ce * sa, se))
}

/// Antenna orientation matrix: columns are the ACCS axes in the LCS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aom(Matrix3<f64>);

impl Aom {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let err = (m.transpose() * m - Matrix3::identity()).abs().max();
        if !(err <= 1e-10) {
            return domain(format!("orientation columns not orthonormal (error {err:e})"));
        }
        if (m.determinant() - 1.0).abs() > 1e-10 {
            return domain("orientation matrix is not a proper rotation");
        }
        Ok(Self(m))
    }

    /// Rotation by `angle` about the unit `axis` (Rodrigues).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) {
            return domain("rotation axis must be nonzero");
        }
        let u = nalgebra::Unit::new_normalize(*axis);
        Ok(Self(*nalgebra::Rotation3::from_axis_angle(&u, angle).matrix()))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Expresses an LCS direction in the ACCS (`Ψᵀk`).
    pub fn to_local(&self, k: &Vec3) -> Vec3 {
        self.0.transpose() * k
    }

    /// Maps an ACCS vector back to the LCS (`Ψv`).
    pub fn to_global(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

/// `Z(yaw)·Y(pitch)·X(roll)`.
pub fn aom_from_euler(yaw: f64, pitch: f64, roll: f64) -> Aom {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    Aom(rz * ry * rx)
}

/// Polarization reference pair `(î, ĵ)` for a unit direction.
///
/// `ĵ = ẑ×k/‖ẑ×k‖` lies in the horizontal plane and `î = k×ĵ` lies in
/// span{ẑ, k}. For `k = ±ẑ` the fixed pair `((1,0,0), (0,1,0))` is returned.
pub fn accs_basis(k: &WaveVector) -> (Vec3, Vec3) {
    let k = k.0;
    let zxk = Vec3::new(-k.y, k.x, 0.0);
    let n = zxk.norm();
    if n < POLE_EPS {
        return (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
    }
    let j = zxk / n;
    let i = k.cross(&j);
    (i, j)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Aom,
}

impl Pose {
    pub fn at(position: Vec3) -> Self {
        Self { position, orientation: Aom::identity() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    /// `x ∈ [0, length]`, `y = z = 0`.
    Segment { length: f64 },
    /// `x ∈ [0, w]`, `y ∈ [0, h]`, `z = 0`.
    Plane { extents: [f64; 2] },
    /// Each coordinate in `[0, extent]`.
    Box { extents: [f64; 3] },
    /// Finite set of admissible positions.
    Grid { points: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRegion {
    #[serde(flatten)]
    pub kind: RegionKind,
    pub d_min: f64,
}

impl MoveRegion {
    pub fn segment(length: f64, d_min: f64) -> Result<Self> {
        Self::new(RegionKind::Segment { length }, d_min)
    }

    pub fn plane(width: f64, height: f64, d_min: f64) -> Result<Self> {
        Self::new(RegionKind::Plane { extents: [width, height] }, d_min)
    }

    pub fn cube(side: f64, d_min: f64) -> Result<Self> {
        Self::new(RegionKind::Box { extents: [side; 3] }, d_min)
    }

    pub fn new(kind: RegionKind, d_min: f64) -> Result<Self> {
        let r = Self { kind, d_min };
        r.check()?;
        Ok(r)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.d_min >= 0.0) || !self.d_min.is_finite() {
            return domain("d_min must be finite and non-negative");
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match &self.kind {
            RegionKind::Segment { length } if !positive(*length) => {
                domain("segment length must be positive")
            }
            RegionKind::Plane { extents } if !extents.iter().all(|&e| positive(e)) => {
                domain("plane extents must be positive")
            }
            RegionKind::Box { extents } if !extents.iter().all(|&e| positive(e)) => {
                domain("box extents must be positive")
            }
            RegionKind::Grid { points } => {
                if points.is_empty() {
                    return domain("grid region has no points");
                }
                for (a, p) in points.iter().enumerate() {
                    if p.iter().any(|c| !c.is_finite()) {
                        return domain(format!("grid point {a} is not finite"));
                    }
                    for q in &points[..a] {
                        if p == q {
                            return domain(format!("grid point {a} is duplicated"));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Upper corner of the axis-aligned bounding box `[0, hi]`; grids use
    /// their own bounding box via [`MoveRegion::bounds`].
    pub fn bounds(&self) -> (Vec3, Vec3) {
        match &self.kind {
            RegionKind::Segment { length } => (Vec3::zeros(), Vec3::new(*length, 0.0, 0.0)),
            RegionKind::Plane { extents } => {
                (Vec3::zeros(), Vec3::new(extents[0], extents[1], 0.0))
            }
            RegionKind::Box { extents } => (Vec3::zeros(), Vec3::from(*extents)),
            RegionKind::Grid { points } => {
                let mut lo = Vec3::repeat(f64::INFINITY);
                let mut hi = Vec3::repeat(f64::NEG_INFINITY);
                for p in points {
                    let p = Vec3::from(*p);
                    lo = lo.inf(&p);
                    hi = hi.sup(&p);
                }
                (lo, hi)
            }
        }
    }

    /// Number of free coordinates (1 for segments, 2 for planes, 3 for boxes, 0 for grids).
    pub fn dimension(&self) -> usize {
        match self.kind {
            RegionKind::Segment { .. } => 1,
            RegionKind::Plane { .. } => 2,
            RegionKind::Box { .. } => 3,
            RegionKind::Grid { .. } => 0,
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        if p.iter().any(|c| !c.is_finite()) {
            return false;
        }
        let t = PLACEMENT_TOL;
        let inside = |v: f64, hi: f64| v >= -t && v <= hi + t;
        match &self.kind {
            RegionKind::Segment { length } => {
                inside(p.x, *length) && p.y.abs() <= t && p.z.abs() <= t
            }
            RegionKind::Plane { extents } => {
                inside(p.x, extents[0]) && inside(p.y, extents[1]) && p.z.abs() <= t
            }
            RegionKind::Box { extents } => (0..3).all(|i| inside(p[i], extents[i])),
            RegionKind::Grid { points } => {
                points.iter().any(|q| (Vec3::from(*q) - p).amax() <= t)
            }
        }
    }

    /// Clamps a point onto a continuous region. Grid regions snap to the
    /// nearest grid point (lowest index on ties).
    pub fn project(&self, p: &Vec3) -> Vec3 {
        match &self.kind {
            RegionKind::Grid { points } => {
                let mut best = Vec3::from(points[0]);
                let mut bd = f64::INFINITY;
                for q in points {
                    let q = Vec3::from(*q);
                    let d = (q - p).norm_squared();
                    if d < bd {
                        bd = d;
                        best = q;
                    }
                }
                best
            }
            _ => {
                let (lo, hi) = self.bounds();
                Vec3::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y), p.z.clamp(lo.z, hi.z))
            }
        }
    }
}

/// Violations found by [`validate_placement`]; empty means feasible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlacementReport {
    /// Indices of antennas outside the region.
    pub outside: Vec<usize>,
    /// Pairs `(a, b)` with `a < b` closer than `d_min`, with their distance.
    pub too_close: Vec<(usize, usize, f64)>,
}

impl PlacementReport {
    pub fn is_ok(&self) -> bool {
        self.outside.is_empty() && self.too_close.is_empty()
    }

    /// Human readable description of the first violation.
    pub fn describe(&self) -> Option<String> {
        if let Some(i) = self.outside.first() {
            return Some(format!("antenna {i} lies outside the movement region"));
        }
        self.too_close.first().map(|&(a, b, d)| {
            format!("antennas {a} and {b} are {d:.6e} m apart, closer than d_min")
        })
    }

    pub fn into_result(self) -> Result<()> {
        match self.describe() {
            None => Ok(()),
            Some(msg) => Err(Error::Infeasible(msg)),
        }
    }
}

pub fn validate_positions(positions: &[Vec3], region: &MoveRegion) -> PlacementReport {
    let mut report = PlacementReport::default();
    for (i, p) in positions.iter().enumerate() {
        if !region.contains(p) {
            report.outside.push(i);
        }
    }
    for a in 0..positions.len() {
        for b in a + 1..positions.len() {
            let d = (positions[a] - positions[b]).norm();
            if d < region.d_min - PLACEMENT_TOL {
                report.too_close.push((a, b, d));
            }
        }
    }
    report
}

pub fn validate_placement(poses: &[Pose], region: &MoveRegion) -> PlacementReport {
    let positions: Vec<Vec3> = poses.iter().map(|p| p.position).collect();
    validate_positions(&positions, region)
}

/// Points on the x axis.
pub fn on_x_axis(xs: &[f64]) -> Vec<Vec3> {
    xs.iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect()
}
