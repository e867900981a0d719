//! Linear-array beam designs: null steering by steering-vector
//! orthogonality, multi-beam forming by the grating-lobe condition, and
//! alternating optimization of positions and weights for max-min gain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::beamforming::{steering_vector, Awv, LinearApv};
use crate::error::{Error, Result};
use crate::linalg::{cis, lstsq, principal_eigvec, real, CMat, CVec};
use crate::C64;

const TOL: f64 = 1e-12;

/// Result of a closed-form array construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Constructed {
    Apv { apv: LinearApv },
    NotConstructible { reason: String },
}

impl Constructed {
    pub fn apv(&self) -> Option<&LinearApv> {
        match self {
            Constructed::Apv { apv } => Some(apv),
            Constructed::NotConstructible { .. } => None,
        }
    }

    fn fail(reason: impl Into<String>) -> Self {
        Constructed::NotConstructible { reason: reason.into() }
    }
}

fn check_common(n: usize, a: f64, d_min: f64, wavelength: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("at least one antenna is required".into()));
    }
    if !(a >= 0.0) || !(d_min >= 0.0) || !(wavelength > 0.0) {
        return Err(Error::Domain("region length, d_min and wavelength must be valid".into()));
    }
    Ok(())
}

fn prime_factor_count(mut n: usize) -> usize {
    let mut count = 0;
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            n /= p;
            count += 1;
        }
        p += 1;
    }
    count + usize::from(n > 1)
}

/// All ordered factorizations of `n` into exactly `k` factors, each ≥ 2.
fn ordered_factorizations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 1 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for f in 2..=n {
        if n.is_multiple_of(f) {
            for mut rest in ordered_factorizations(n / f, k - 1) {
                rest.insert(0, f);
                out.push(rest);
            }
        }
    }
    out
}

/// Sorted Minkowski sum of the ULAs `{0, d_k, …, (N_k−1)d_k}`.
fn minkowski(factors: &[usize], spacings: &[f64]) -> Vec<f64> {
    let mut pos = vec![0.0];
    for (&nk, &dk) in factors.iter().zip(spacings) {
        pos = pos.iter().flat_map(|&p| (0..nk).map(move |j| p + j as f64 * dk)).collect();
    }
    pos.sort_by(f64::total_cmp);
    pos
}

fn fits(pos: &[f64], a: f64, d_min: f64) -> bool {
    pos[pos.len() - 1] <= a + TOL && pos.windows(2).all(|w| w[1] - w[0] >= d_min - TOL && w[1] > w[0])
}

/// Array whose steering vectors toward every null are orthogonal to the
/// one toward `theta0`, so the matched weight `a(θ₀)/√N` keeps full gain
/// `N` while nulling all of them.
///
/// `N` is split into one factor per null; factor `N_k` contributes a ULA
/// with spacing `m_k λ / (N_k |Δ_k|)` (`m_k` not a multiple of `N_k`), whose
/// array factor vanishes at `Δ_k = cosθ_k − cosθ₀`. The Minkowski sum of
/// these ULAs inherits every zero. Among the factor assignments that fit
/// the region, the smallest aperture wins. More nulls than prime factors
/// of `N` (with multiplicity) cannot be split this way.
pub fn svo_null_apv(
    theta0: f64,
    nulls: &[f64],
    n: usize,
    a: f64,
    d_min: f64,
    wavelength: f64,
) -> Result<Constructed> {
    check_common(n, a, d_min, wavelength)?;
    if n < 2 {
        return Err(Error::Domain("null steering needs at least two antennas".into()));
    }
    let deltas: Vec<f64> = nulls.iter().map(|t| t.cos() - theta0.cos()).collect();
    if deltas.iter().any(|d| d.abs() < 1e-12) {
        return Err(Error::Domain("null direction coincides with the desired direction".into()));
    }
    if nulls.is_empty() {
        let spacing = if d_min > 0.0 { d_min } else { wavelength / 2.0 };
        let apv = LinearApv::ula(n, spacing, 0.0)?;
        return Ok(if fits(apv.positions(), a, d_min) {
            Constructed::Apv { apv }
        } else {
            Constructed::fail("the region is shorter than a dense array")
        });
    }
    let k = nulls.len();
    let omega = prime_factor_count(n);
    if k > omega {
        return Ok(Constructed::fail(format!(
            "{k} nulls exceed the {omega} prime factors of N = {n}"
        )));
    }
    let mut best: Option<Vec<f64>> = None;
    let mut consider = |pos: Vec<f64>| {
        if fits(&pos, a, d_min) {
            let ap = pos[pos.len() - 1];
            if best.as_ref().is_none_or(|b| ap < b[b.len() - 1] - TOL) {
                best = Some(pos);
            }
        }
    };
    for factors in ordered_factorizations(n, k) {
        // m_k ranges over 1..2N_k, skipping multiples of N_k.
        let choices: Vec<Vec<usize>> =
            factors.iter().map(|&nk| (1..2 * nk).filter(|m| m % nk != 0).collect()).collect();
        let total: usize = choices.iter().map(Vec::len).product();
        for idx in 0..total.min(200_000) {
            let mut r = idx;
            let spacings: Vec<f64> = factors
                .iter()
                .zip(&choices)
                .zip(&deltas)
                .map(|((&nk, ch), &dk)| {
                    let m = ch[r % ch.len()];
                    r /= ch.len();
                    m as f64 * wavelength / (nk as f64 * dk.abs())
                })
                .collect();
            consider(minkowski(&factors, &spacings));
        }
    }
    Ok(match best {
        Some(pos) => Constructed::Apv { apv: LinearApv::new(pos)? },
        None => Constructed::fail("no factor assignment fits the region and spacing constraints"),
    })
}

/// Zero-forcing null steering on a fixed half-wavelength ULA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZfBaseline {
    pub apv: LinearApv,
    pub awv: Awv,
    /// Gain toward the desired direction.
    pub gain: f64,
}

/// Projects `a(θ₀)` off the span of the null steering vectors on an
/// `n`-element half-wavelength ULA.
pub fn zf_fpa_null(theta0: f64, nulls: &[f64], n: usize, wavelength: f64) -> Result<ZfBaseline> {
    let apv = LinearApv::ula(n, wavelength / 2.0, 0.0)?;
    let a0 = steering_vector(&apv, theta0, wavelength);
    let r = if nulls.is_empty() {
        a0.clone()
    } else {
        let b = CMat::from_columns(
            &nulls.iter().map(|&t| steering_vector(&apv, t, wavelength)).collect::<Vec<_>>(),
        );
        let (c, _) = lstsq(&b, &a0, 1e-12);
        &a0 - b * c
    };
    let gain = r.norm_squared();
    let awv = Awv::digital(r)?;
    Ok(ZfBaseline { apv, awv, gain })
}

/// Best rational `p/q` with `q ≤ max_den` within `tol` of `x`.
fn rational_approx(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// ULA on which every desired direction is a grating lobe of `theta0`, so
/// the single matched weight reaches gain `N` toward all of them.
///
/// With `Δ_k = p_k/q_k` in lowest terms, `e^{i2π dΔ_k/λ} = 1` for all `k`
/// exactly when `d/λ` is a multiple of `lcm(q_k)/gcd(p_k)`; the smallest such
/// multiple not below `d_min` is used.
pub fn grating_lobe_apv(
    theta0: f64,
    desired: &[f64],
    n: usize,
    a: f64,
    d_min: f64,
    wavelength: f64,
) -> Result<Constructed> {
    check_common(n, a, d_min, wavelength)?;
    let mut ps = Vec::new();
    let mut qs = Vec::new();
    for &t in desired {
        let delta = t.cos() - theta0.cos();
        if delta.abs() <= 1e-9 {
            continue;
        }
        match rational_approx(delta, 64, 1e-9) {
            Some((p, q)) => {
                ps.push(p);
                qs.push(q);
            }
            None => {
                return Ok(Constructed::fail(format!(
                    "cos difference {delta} is not rational with denominator ≤ 64"
                )))
            }
        }
    }
    let spacing = if ps.is_empty() {
        if d_min > 0.0 {
            d_min
        } else {
            wavelength / 2.0
        }
    } else {
        let l = qs.iter().fold(1i64, |acc, &q| acc / gcd(acc, q) * q);
        let g = ps.iter().fold(0i64, |acc, &p| gcd(acc, p));
        let unit = l as f64 / g as f64 * wavelength;
        let mult = ((d_min / unit) - 1e-9).ceil().max(1.0);
        mult * unit
    };
    if n > 1 && (n - 1) as f64 * spacing > a + TOL {
        return Ok(Constructed::fail(format!(
            "spacing {spacing:.6e} m needs aperture {:.6e} m beyond the region",
            (n - 1) as f64 * spacing
        )));
    }
    Ok(Constructed::Apv { apv: LinearApv::ula(n, spacing, 0.0)? })
}

/// Settings for [`multibeam_ao`] and [`widebeam_ao`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultibeamConfig {
    /// Phase-only weights `e^{iφ}/√N` instead of unit-norm digital weights.
    pub analog: bool,
    /// Candidate position spacing for per-antenna moves, in wavelengths.
    pub grid_step: f64,
    /// Phase candidates tried jointly with each position.
    pub phase_grid: usize,
    pub max_sweeps: usize,
    /// Multiplicative-weight iterations of the weight update.
    pub awv_iters: usize,
    /// ULA spacings tried for initialization.
    pub init_spacings: usize,
}

impl Default for MultibeamConfig {
    fn default() -> Self {
        Self {
            analog: false,
            grid_step: 1.0 / 50.0,
            phase_grid: 32,
            max_sweeps: 30,
            awv_iters: 200,
            init_spacings: 48,
        }
    }
}

/// Positions, weights and the achieved minimum gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamDesign {
    pub apv: LinearApv,
    pub awv: Awv,
    pub min_gain: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// `Σ_n e^{-i c x_n u} w_n` for every `u`.
fn responses(pos: &[f64], w: &[C64], us: &[f64], c: f64) -> Vec<C64> {
    us.iter()
        .map(|&u| pos.iter().zip(w).map(|(&x, &wn)| cis(-c * x * u) * wn).sum())
        .collect()
}

fn min_gain(pos: &[f64], w: &[C64], us: &[f64], c: f64) -> f64 {
    responses(pos, w, us, c).iter().map(|s| s.norm_sqr()).fold(f64::INFINITY, f64::min)
}

/// Max-min weight design for fixed positions: multiplicative weights on the
/// directions with the principal eigenvector of `Σ π_k a_k a_kᴴ` as the
/// primal step, then accept-only ascent on the weakest direction; analog
/// mode projects onto phases and refines them coordinate-wise.
fn awv_step(pos: &[f64], us: &[f64], c: f64, iters: usize, analog: bool, phase_grid: usize) -> (Vec<C64>, f64) {
    let n = pos.len();
    let k = us.len();
    let steer: Vec<CVec> = us
        .iter()
        .map(|&u| CVec::from_iterator(n, pos.iter().map(|&x| cis(c * x * u))))
        .collect();
    let gains_of = |w: &CVec| -> Vec<f64> { steer.iter().map(|a| a.dotc(w).norm_sqr()).collect() };
    let mut pi = vec![1.0 / k as f64; k];
    let mut best_w = CVec::from_element(n, real(1.0 / (n as f64).sqrt()));
    let mut best = gains_of(&best_w).into_iter().fold(f64::INFINITY, f64::min);
    for it in 0..iters.max(1) {
        let mut r = CMat::zeros(n, n);
        for (a, &p) in steer.iter().zip(&pi) {
            r += a * a.adjoint() * real(p);
        }
        let w = principal_eigvec(&r);
        let g = gains_of(&w);
        let m = g.iter().copied().fold(f64::INFINITY, f64::min);
        if m > best {
            best = m;
            best_w = w;
        }
        if k == 1 {
            break;
        }
        let mean = g.iter().sum::<f64>() / k as f64;
        let eta = 2.0 / ((it + 1) as f64).sqrt();
        let mut s = 0.0;
        for (p, gk) in pi.iter_mut().zip(&g) {
            *p *= (-eta * gk / mean.max(1e-300)).exp();
            s += *p;
        }
        for p in pi.iter_mut() {
            *p = (*p / s).max(1e-300);
        }
    }
    // Ascent on the weakest direction.
    let mut mu = 0.1;
    for _ in 0..4 * iters {
        let g = gains_of(&best_w);
        let (kw, _) = g.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let a = &steer[kw];
        let cand = &best_w + a * (a.dotc(&best_w) * real(mu));
        let cand = &cand / real(cand.norm());
        let m = gains_of(&cand).into_iter().fold(f64::INFINITY, f64::min);
        if m > best {
            best = m;
            best_w = cand;
            mu *= 1.5;
        } else {
            mu *= 0.5;
            if mu < 1e-9 {
                break;
            }
        }
    }
    if !analog {
        return (best_w.iter().copied().collect(), best);
    }
    let amp = 1.0 / (n as f64).sqrt();
    let mut w: Vec<C64> = best_w.iter().map(|z| cis(z.arg()) * amp).collect();
    let mut score = min_gain(pos, &w, us, c);
    for _ in 0..8 {
        let mut moved = false;
        for i in 0..n {
            let (cand, val) = best_phase(pos, &w, i, pos[i], amp, us, c, phase_grid, score);
            if let Some(v) = cand {
                w[i] = v;
                score = val;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    (w, score)
}

/// Best phase of antenna `i` placed at `x` with amplitude `amp`; returns the
/// new weight only if it beats `current`.
#[allow(clippy::too_many_arguments)]
fn best_phase(
    pos: &[f64],
    w: &[C64],
    i: usize,
    x: f64,
    amp: f64,
    us: &[f64],
    c: f64,
    phase_grid: usize,
    current: f64,
) -> (Option<C64>, f64) {
    let rest: Vec<C64> = us
        .iter()
        .map(|&u| {
            pos.iter()
                .zip(w)
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (&xj, &wj))| cis(-c * xj * u) * wj)
                .sum()
        })
        .collect();
    let e: Vec<C64> = us.iter().map(|&u| cis(-c * x * u)).collect();
    let mut best = (None, current);
    for p in 0..phase_grid.max(1) {
        let v = cis(2.0 * PI * p as f64 / phase_grid.max(1) as f64) * amp;
        let m = rest.iter().zip(&e).map(|(s, ek)| (s + ek * v).norm_sqr()).fold(f64::INFINITY, f64::min);
        if super::improves(m, best.1) {
            best = (Some(v), m);
        }
    }
    best
}

/// Max-min weights for a fixed array toward the given directions.
pub fn multibeam_awv(apv: &LinearApv, thetas: &[f64], wavelength: f64, config: &MultibeamConfig) -> Result<(Awv, f64)> {
    if thetas.is_empty() {
        return Err(Error::Domain("at least one direction is required".into()));
    }
    let c = 2.0 * PI / wavelength;
    let us: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    let (w, g) = awv_step(apv.positions(), &us, c, config.awv_iters, config.analog, config.phase_grid);
    let w = CVec::from_vec(w);
    let awv = if config.analog { Awv { weights: w, analog: true } } else { Awv::digital(w)? };
    Ok((awv, g))
}

/// Alternating optimization of positions and weights maximizing the
/// minimum gain over the directions `us` (cosines).
fn maxmin_ao(
    us: &[f64],
    n: usize,
    a: f64,
    d_min: f64,
    wavelength: f64,
    config: &MultibeamConfig,
    extra_spacings: &[f64],
) -> Result<BeamDesign> {
    check_common(n, a, d_min, wavelength)?;
    if n > 1 && (n - 1) as f64 * d_min > a + TOL {
        return Err(Error::Infeasible("the region cannot hold N antennas at d_min".into()));
    }
    let c = 2.0 * PI / wavelength;
    let cfg = config;
    let init_iters = (cfg.awv_iters / 3).max(20);

    // Initialization: best ULA over a sweep of spacings.
    let mut spacings = Vec::new();
    if n > 1 {
        let lo = if d_min > 0.0 { d_min } else { wavelength / 8.0 };
        let hi = a / (n - 1) as f64;
        let m = cfg.init_spacings.max(1);
        for i in 0..m {
            let d = if m == 1 { lo } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 };
            if d >= lo - TOL && d <= hi + TOL {
                spacings.push(d.min(hi));
            }
        }
        spacings.extend(extra_spacings.iter().copied().filter(|&d| d >= d_min - TOL && (n - 1) as f64 * d <= a + TOL));
        if spacings.is_empty() {
            spacings.push(hi);
        }
    } else {
        spacings.push(0.0);
    }
    let mut pos = Vec::new();
    let mut w = Vec::new();
    let mut score = f64::NEG_INFINITY;
    for &d in &spacings {
        let p: Vec<f64> = (0..n).map(|i| i as f64 * d).collect();
        let (wi, s) = awv_step(&p, us, c, init_iters, cfg.analog, cfg.phase_grid);
        if s > score {
            pos = p;
            w = wi;
            score = s;
        }
    }
    let (w2, s2) = awv_step(&pos, us, c, cfg.awv_iters, cfg.analog, cfg.phase_grid);
    if s2 > score {
        w = w2;
        score = s2;
    }

    let step = cfg.grid_step * wavelength;
    let candidates: Vec<f64> = {
        let m = (a / step + 1e-9).floor() as usize;
        (0..=m).map(|i| (i as f64 * step).min(a)).collect()
    };
    let mut trace = vec![score];
    let mut iterations = 0;
    for _ in 0..cfg.max_sweeps {
        iterations += 1;
        let before = score;
        for i in 0..n {
            let amp = if cfg.analog { 1.0 / (n as f64).sqrt() } else { w[i].norm() };
            let mut best: Option<(f64, C64)> = None;
            for &x in &candidates {
                let ok = pos.iter().enumerate().all(|(j, &xj)| j == i || (x - xj).abs() >= d_min - TOL && x != xj);
                if !ok {
                    continue;
                }
                let (cand, val) = best_phase(&pos, &w, i, x, amp, us, c, cfg.phase_grid, score);
                if let Some(v) = cand {
                    score = val;
                    best = Some((x, v));
                }
            }
            if let Some((x, v)) = best {
                pos[i] = x;
                w[i] = v;
            }
        }
        let (w2, s2) = awv_step(&pos, us, c, cfg.awv_iters, cfg.analog, cfg.phase_grid);
        if super::improves(s2, score) {
            w = w2;
            score = s2;
        }
        trace.push(score);
        if !super::improves(score, before) {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| pos[i].total_cmp(&pos[j]));
    let apv = LinearApv::new(order.iter().map(|&i| pos[i]).collect())?;
    let wv = CVec::from_iterator(n, order.iter().map(|&i| w[i]));
    let awv = if cfg.analog { Awv { weights: wv, analog: true } } else { Awv::digital(wv)? };
    let min_gain = min_gain(apv.positions(), awv.weights.as_slice(), us, c);
    Ok(BeamDesign { apv, awv, min_gain, trace, iterations })
}

/// Max-min multi-beam design over directions `thetas` (radians).
///
/// Starts from the best ULA over a sweep of spacings (including the
/// grating-lobe spacing when one exists), then alternates per-antenna moves
/// over a position/phase grid with weight re-optimization, accepting only
/// improvements.
pub fn multibeam_ao(
    thetas: &[f64],
    n: usize,
    a: f64,
    d_min: f64,
    wavelength: f64,
    config: &MultibeamConfig,
) -> Result<BeamDesign> {
    if thetas.is_empty() {
        return Err(Error::Domain("at least one direction is required".into()));
    }
    let us: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    let mut extra = Vec::new();
    if let Ok(Constructed::Apv { apv }) = grating_lobe_apv(thetas[0], &thetas[1..], n, a, d_min, wavelength) {
        if apv.len() > 1 {
            extra.push(apv.positions()[1] - apv.positions()[0]);
        }
    }
    maxmin_ao(&us, n, a, d_min, wavelength, config, &extra)
}

/// Wide-beam design maximizing the minimum gain over `[theta_min, theta_max]`
/// sampled at `samples` angles; the reported gain is the minimum over a
/// verification grid four times finer.
#[allow(clippy::too_many_arguments)]
pub fn widebeam_ao(
    theta_min: f64,
    theta_max: f64,
    samples: usize,
    n: usize,
    a: f64,
    d_min: f64,
    wavelength: f64,
    config: &MultibeamConfig,
) -> Result<BeamDesign> {
    if !(theta_min <= theta_max) || samples == 0 {
        return Err(Error::Domain("angular range and sample count must be valid".into()));
    }
    let grid = |m: usize| -> Vec<f64> {
        if theta_max == theta_min || m == 1 {
            vec![theta_min]
        } else {
            (0..m).map(|i| theta_min + (theta_max - theta_min) * i as f64 / (m - 1) as f64).collect()
        }
    };
    let us: Vec<f64> = grid(samples).iter().map(|t| t.cos()).collect();
    let mut design = maxmin_ao(&us, n, a, d_min, wavelength, config, &[])?;
    let fine: Vec<f64> = grid(4 * (samples.max(2) - 1) + 1).iter().map(|t| t.cos()).collect();
    design.min_gain = min_gain(design.apv.positions(), design.awv.weights.as_slice(), &fine, 2.0 * PI / wavelength);
    Ok(design)
}

/// Minimum gain of a fixed design over a fine angular grid (radians).
pub fn min_gain_over(apv: &LinearApv, w: &CVec, thetas: &[f64], wavelength: f64) -> f64 {
    let us: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    min_gain(apv.positions(), w.as_slice(), &us, 2.0 * PI / wavelength)
}
