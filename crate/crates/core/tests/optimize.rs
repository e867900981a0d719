use std::f64::consts::{FRAC_PI_2, PI};

use ma_core::beamforming::{beam_gain, steering_vector, user_sinr_and_rates, zf_combiner, GmaUser, LinearApv, LinearChannel};
use ma_core::channel::{gen_scenario, gen_uplink_users, FieldModel, ScenarioSpec, UplinkSpec, UplinkUser};
use ma_core::error::Error;
use ma_core::geometry::{validate_positions, MoveRegion, RegionKind, Vec3, WaveVector};
use ma_core::linalg::{CMat, CVec};
use ma_core::optimize::*;
use ma_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAMBDA: f64 = 1.0;

fn deg(d: f64) -> f64 {
    d.to_radians()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn siso_gain(b: &CVec, k: &[Vec3], r: &Vec3) -> f64 {
    let cc = 2.0 * PI / LAMBDA;
    k.iter().zip(b.iter()).map(|(k, b)| C64::from_polar(1.0, -cc * k.dot(r)) * b).sum::<C64>().norm_sqr()
}

#[test]
fn gain_bounds_examples() {
    assert_eq!(siso_gain_bounds(&[c(1.0, 0.0)]).unwrap(), (1.0, 1.0));
    assert_eq!(siso_gain_bounds(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap(), (4.0, 0.0));
    let (u, l) = siso_gain_bounds(&[c(3.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]).unwrap();
    assert!((u - 25.0).abs() < 1e-12 && (l - 1.0).abs() < 1e-12);
    assert!(matches!(siso_gain_bounds(&[]), Err(Error::Domain(_))));
}

#[test]
fn grid_search_cases() {
    // Flat objective: first lexicographic point.
    let region = MoveRegion::cube(1.0, 0.0).unwrap();
    let r = grid_search_position(|_| 1.0, Sense::Maximize, &region, 0.25).unwrap();
    assert_eq!(r.placement, Vec3::zeros());
    assert_eq!(r.iterations, 125);

    // Two paths along ±x with relative phase ψ peak at x* = -ψ/(2c) mod λ/2.
    let psi = -1.3;
    let b = CVec::from_vec(vec![c(1.0, 0.0), C64::from_polar(1.0, psi)]);
    let k = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)];
    let seg = MoveRegion::segment(LAMBDA, 0.0).unwrap();
    let step = LAMBDA / 20.0;
    let r = grid_search_position(|p| siso_gain(&b, &k, p), Sense::Maximize, &seg, step).unwrap();
    let x_star = -psi / (2.0 * 2.0 * PI / LAMBDA);
    assert!((r.placement.x - x_star).abs() <= step, "{} vs {x_star}", r.placement.x);
    assert!(r.score > 4.0 * (1.0 - 0.1));

    // One-point region.
    let single = MoveRegion::new(RegionKind::Grid { points: vec![[0.3, 0.2, 0.1]] }, 0.0).unwrap();
    let r = grid_search_position(|p| p.x, Sense::Maximize, &single, 0.1).unwrap();
    assert_eq!(r.placement, Vec3::new(0.3, 0.2, 0.1));

    assert!(grid_search_position(|_| 0.0, Sense::Maximize, &region, 0.0).is_err());
}

#[test]
fn gradient_search_cases() {
    let region = MoveRegion::cube(2.0, 0.0).unwrap();
    let target = Vec3::new(0.7, 1.3, 0.4);
    let cfg = GradientConfig::new(0.1);
    let r = gradient_position_search(|p| -(p - target).norm_squared(), Sense::Maximize, &region, &Vec3::new(1.9, 0.1, 1.5), &cfg).unwrap();
    assert!((r.placement - target).norm() < 1e-6, "{:?}", r.placement);
    assert!(r.trace_is_monotone(Sense::Maximize, 0.0));

    // Minimization of the same bowl, optimum on the boundary.
    let outside = Vec3::new(-0.5, 1.0, 1.0);
    let r = gradient_position_search(|p| (p - outside).norm_squared(), Sense::Minimize, &region, &Vec3::new(1.0, 1.0, 1.0), &cfg).unwrap();
    assert!((r.placement - Vec3::new(0.0, 1.0, 1.0)).norm() < 1e-6);

    // Single path: flat gain, exits without moving.
    let b = CVec::from_vec(vec![c(0.8, -0.3)]);
    let k = [Vec3::new(0.3, 0.4, (1.0f64 - 0.25).sqrt())];
    let start = Vec3::new(0.5, 0.5, 0.5);
    let r = gradient_position_search(|p| siso_gain(&b, &k, p), Sense::Maximize, &region, &start, &cfg).unwrap();
    assert_eq!(r.iterations, 0);
    assert_eq!(r.placement, start);

    assert!(matches!(
        gradient_position_search(|_| 0.0, Sense::Maximize, &region, &Vec3::new(3.0, 0.0, 0.0), &cfg),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn gradient_search_matches_grid_on_four_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let region = MoveRegion::cube(LAMBDA, 0.0).unwrap();
    for trial in 0..5 {
        let sc = gen_scenario(100 + trial, &ScenarioSpec::new(LAMBDA, 4)).unwrap();
        let fm = sc.field_model().unwrap();
        let b = fm.rx_coefficients(&Vec3::zeros());
        let grid = siso_gain_extremes(&b, &fm.rx_k, LAMBDA, &region, LAMBDA / 20.0, false).unwrap();
        let cfg = GradientConfig::new(LAMBDA / 10.0);
        // Best of a few random starts.
        let mut best: f64 = 0.0;
        for _ in 0..8 {
            let s = Vec3::new(rng.random(), rng.random(), rng.random());
            let r = gradient_position_search(|p| siso_gain(&b, &fm.rx_k, p), Sense::Maximize, &region, &s, &cfg).unwrap();
            assert!(r.trace_is_monotone(Sense::Maximize, 0.0));
            best = best.max(r.score);
        }
        assert!(best >= 0.95 * grid.max, "trial {trial}: {best} vs {}", grid.max);
    }
}

#[test]
fn separable_sweep_agrees_with_direct_grid() {
    let sc = gen_scenario(3, &ScenarioSpec::new(LAMBDA, 3)).unwrap();
    let fm = sc.field_model().unwrap();
    let b = fm.rx_coefficients(&Vec3::zeros());
    let region = MoveRegion::cube(LAMBDA, 0.0).unwrap();
    let step = LAMBDA / 8.0;
    let fast = siso_gain_extremes(&b, &fm.rx_k, LAMBDA, &region, step, false).unwrap();
    let hi = grid_search_position(|p| siso_gain(&b, &fm.rx_k, p), Sense::Maximize, &region, step).unwrap();
    let lo = grid_search_position(|p| siso_gain(&b, &fm.rx_k, p), Sense::Minimize, &region, step).unwrap();
    assert!((fast.max - hi.score).abs() < 1e-10 * hi.score.max(1.0));
    assert!((fast.min - lo.score).abs() < 1e-10);
    assert!((fast.argmax - hi.placement).norm() < 1e-12);
    let refined = siso_gain_extremes(&b, &fm.rx_k, LAMBDA, &region, step, true).unwrap();
    assert!(refined.max >= fast.max && refined.min <= fast.min);
    let (ub, _) = siso_gain_bounds(b.as_slice()).unwrap();
    assert!(refined.max <= ub * (1.0 + 1e-12));
}

fn brute_force(gains: &[f64], n: usize, a: usize) -> Option<(f64, Vec<usize>)> {
    fn rec(g: &[f64], n: usize, a: usize, from: usize, cur: &mut Vec<usize>, best: &mut Option<(f64, Vec<usize>)>) {
        if cur.len() == n {
            let s: f64 = cur.iter().map(|&i| g[i]).sum();
            if best.as_ref().is_none_or(|b| s > b.0) {
                *best = Some((s, cur.clone()));
            }
            return;
        }
        for i in from..g.len() {
            cur.push(i);
            rec(g, n, a, i + a, cur, best);
            cur.pop();
        }
    }
    let mut best = None;
    rec(gains, n, a, 0, &mut Vec::new(), &mut best);
    best
}

#[test]
fn graph_examples() {
    let line = SampledLine::with_min_gap(vec![5.0, 1.0, 1.0, 4.0, 1.0, 2.0], 3);
    let r = graph_opt_miso(&line, 2).unwrap();
    let one_based: Vec<usize> = r.placement.indices.iter().map(|i| i + 1).collect();
    assert_eq!(one_based, vec![1, 4]);
    assert_eq!(r.score, 9.0);

    let r = graph_opt_miso(&line, 1).unwrap();
    assert_eq!(r.placement.indices, vec![0]);

    assert!(matches!(graph_opt_miso(&line, 3), Err(Error::Infeasible(_))));

    // Spacing and a_min from a region.
    let l = SampledLine::new(10.0, 0.5, vec![1.0; 100]).unwrap();
    assert_eq!(l.a_min, 5);
    assert!((l.position(0) - 0.1).abs() < 1e-12);
}

#[test]
fn graph_matches_brute_force_n8_m48() {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    let gains: Vec<f64> = (0..48).map(|_| rng.random()).collect();
    let line = SampledLine::with_min_gap(gains.clone(), 5);
    let r = graph_opt_miso(&line, 8).unwrap();
    let (s, idx) = brute_force(&gains, 8, 5).unwrap();
    assert!((r.score - s).abs() < 1e-12);
    assert_eq!(r.placement.indices, idx);
}

#[test]
fn svo_examples() {
    // K = 1, N = 2: orthogonality with spacing λ/(2|Δ|) times an odd integer.
    let (t0, t1) = (deg(90.0), deg(60.0));
    let out = svo_null_apv(t0, &[t1], 2, 20.0, 0.5, LAMBDA).unwrap();
    let apv = out.apv().expect("constructible").clone();
    let d = apv.positions()[1] - apv.positions()[0];
    let base = LAMBDA / (2.0 * (t1.cos() - t0.cos()).abs());
    let ratio = d / base;
    assert!((ratio - ratio.round()).abs() < 1e-9 && ratio.round() as i64 % 2 == 1);
    let inner = steering_vector(&apv, t1, LAMBDA).dotc(&steering_vector(&apv, t0, LAMBDA)).norm();
    assert!(inner.powi(2) <= 1e-12);

    // Standard null-steering instance.
    let nulls = [deg(78.0), deg(98.0), deg(170.0)];
    let out = svo_null_apv(t0, &nulls, 8, 20.0, 0.5, LAMBDA).unwrap();
    let apv = out.apv().expect("constructible").clone();
    apv.check(20.0, 0.5).unwrap();
    let a0 = steering_vector(&apv, t0, LAMBDA);
    let w = &a0 / C64::new(8f64.sqrt(), 0.0);
    assert!((beam_gain(&apv, &w, t0, LAMBDA).unwrap() - 8.0).abs() < 1e-9);
    for &t in &nulls {
        assert!(beam_gain(&apv, &w, t, LAMBDA).unwrap() <= 1e-10);
    }
    let expected = [0.0, 0.5077, 2.405, 2.913, 3.592, 4.100, 5.997, 6.505];
    for (p, e) in apv.positions().iter().zip(expected) {
        assert!((p - e).abs() < 2e-3, "{p} vs {e}");
    }

    // Four nulls exceed the three prime factors of 8.
    let four = [deg(78.0), deg(98.0), deg(170.0), deg(40.0)];
    assert!(matches!(svo_null_apv(t0, &four, 8, 20.0, 0.5, LAMBDA).unwrap(), Constructed::NotConstructible { .. }));
    // A prime N splits into a single factor only.
    assert!(svo_null_apv(t0, &nulls[..2], 7, 20.0, 0.5, LAMBDA).unwrap().apv().is_none());
}

#[test]
fn zf_baseline_loses_gain_on_the_standard_instance() {
    let nulls = [deg(78.0), deg(98.0), deg(170.0)];
    let z = zf_fpa_null(deg(90.0), &nulls, 8, LAMBDA).unwrap();
    assert!(z.gain <= 0.65 * 8.0, "{}", z.gain);
    assert!((beam_gain(&z.apv, &z.awv.weights, deg(90.0), LAMBDA).unwrap() - z.gain).abs() < 1e-9);
    for &t in &nulls {
        assert!(beam_gain(&z.apv, &z.awv.weights, t, LAMBDA).unwrap() < 1e-20);
    }
}

#[test]
fn grating_lobe_examples() {
    let t0 = deg(90.0);
    let t1 = 0.5f64.acos();
    let out = grating_lobe_apv(t0, &[t1], 4, 20.0, 0.5, LAMBDA).unwrap();
    let apv = out.apv().unwrap();
    let d = apv.positions()[1] - apv.positions()[0];
    assert!((d / 2.0 - (d / 2.0).round()).abs() < 1e-9 && d >= 2.0 - 1e-9);
    let a0 = steering_vector(apv, t0, LAMBDA);
    for t in [t0, t1] {
        let g = steering_vector(apv, t, LAMBDA).dotc(&a0).norm();
        assert!((g - 4.0).abs() < 1e-9);
    }

    let only = grating_lobe_apv(t0, &[t0], 5, 10.0, 0.5, LAMBDA).unwrap();
    let apv = only.apv().unwrap();
    apv.check(10.0, 0.5).unwrap();

    let irr = (2f64.sqrt() - 1.0).acos();
    assert!(matches!(grating_lobe_apv(t0, &[irr], 4, 20.0, 0.5, LAMBDA).unwrap(), Constructed::NotConstructible { .. }));
    // Too short a region for the required spacing.
    assert!(grating_lobe_apv(t0, &[t1], 8, 5.0, 0.5, LAMBDA).unwrap().apv().is_none());
}

fn fast_mb() -> MultibeamConfig {
    MultibeamConfig { grid_step: 1.0 / 20.0, max_sweeps: 8, awv_iters: 120, ..Default::default() }
}

#[test]
fn multibeam_single_direction_is_mrt() {
    let d = multibeam_ao(&[deg(50.0)], 6, 10.0, 0.5, LAMBDA, &fast_mb()).unwrap();
    assert!((d.min_gain - 6.0).abs() < 1e-6, "{}", d.min_gain);
    d.apv.check(10.0, 0.5).unwrap();
}

#[test]
fn multibeam_rational_instance_close_to_construction() {
    let thetas = [deg(90.0), 0.5f64.acos(), (-0.25f64).acos()];
    let n = 6;
    let cons = grating_lobe_apv(thetas[0], &thetas[1..], n, 20.0, 0.5, LAMBDA).unwrap();
    let apv = cons.apv().unwrap();
    let w = steering_vector(apv, thetas[0], LAMBDA) / C64::new((n as f64).sqrt(), 0.0);
    let cons_gain = thetas.iter().map(|&t| beam_gain(apv, &w, t, LAMBDA).unwrap()).fold(f64::INFINITY, f64::min);
    assert!((cons_gain - n as f64).abs() < 1e-9);
    let d = multibeam_ao(&thetas, n, 20.0, 0.5, LAMBDA, &fast_mb()).unwrap();
    assert!(d.min_gain >= 0.95 * cons_gain, "{} vs {cons_gain}", d.min_gain);
    assert!(d.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn multibeam_standard_instance_beats_fpa() {
    let thetas = [deg(30.0), deg(120.0), deg(160.0)];
    let cfg = fast_mb();
    let d = multibeam_ao(&thetas, 8, 20.0, 0.5, LAMBDA, &cfg).unwrap();
    d.apv.check(20.0, 0.5).unwrap();
    let fpa = LinearApv::ula(8, 0.5, 0.0).unwrap();
    let (_, fpa_gain) = multibeam_awv(&fpa, &thetas, LAMBDA, &cfg).unwrap();
    assert!(d.min_gain > fpa_gain, "{} vs {fpa_gain}", d.min_gain);
    // Reported gain is the true minimum over the directions.
    let check = min_gain_over(&d.apv, &d.awv.weights, &thetas, LAMBDA);
    assert!((check - d.min_gain).abs() < 1e-9);
}

#[test]
fn widebeam_degenerate_is_mrt() {
    let d = widebeam_ao(deg(70.0), deg(70.0), 8, 4, 5.0, 0.5, LAMBDA, &fast_mb()).unwrap();
    assert!((d.min_gain - 4.0).abs() < 1e-6);
}

#[test]
fn widebeam_two_antennas_match_exhaustive() {
    let (lo, hi) = (deg(80.0), deg(100.0));
    let samples = 9;
    let cfg = MultibeamConfig { grid_step: 1.0 / 100.0, phase_grid: 64, ..fast_mb() };
    let d = widebeam_ao(lo, hi, samples, 2, 3.0, 0.5, LAMBDA, &cfg).unwrap();
    let fine: Vec<f64> = (0..=4 * (samples - 1)).map(|i| lo + (hi - lo) * i as f64 / (4 * (samples - 1)) as f64).collect();
    let mut best: f64 = 0.0;
    for i in 0..=250 {
        let sep = 0.5 + 2.5 * i as f64 / 250.0;
        let apv = LinearApv::new(vec![0.0, sep]).unwrap();
        for ia in 0..=20 {
            let alpha = FRAC_PI_2 * ia as f64 / 20.0;
            for ip in 0..64 {
                let phi = 2.0 * PI * ip as f64 / 64.0;
                let w = CVec::from_vec(vec![c(alpha.cos(), 0.0), C64::from_polar(alpha.sin(), phi)]);
                best = best.max(min_gain_over(&apv, &w, &fine, LAMBDA));
            }
        }
    }
    assert!(d.min_gain >= best - 0.02 * best, "{} vs {best}", d.min_gain);
}

#[test]
fn widebeam_full_range_beats_fpa_analog() {
    let cfg = MultibeamConfig { analog: true, ..fast_mb() };
    // One-degree sampling resolves the beamwidth of a 20λ aperture.
    let d = widebeam_ao(0.0, PI, 181, 8, 20.0, 0.5, LAMBDA, &cfg).unwrap();
    let fpa = LinearApv::ula(8, 0.5, 0.0).unwrap();
    let grid: Vec<f64> = (0..181).map(|i| PI * i as f64 / 180.0).collect();
    let (w, _) = multibeam_awv(&fpa, &grid, LAMBDA, &cfg).unwrap();
    let fine: Vec<f64> = (0..=720).map(|i| PI * i as f64 / 720.0).collect();
    let fpa_gain = min_gain_over(&fpa, &w.weights, &fine, LAMBDA);
    assert!(d.min_gain > fpa_gain, "{} vs {fpa_gain}", d.min_gain);
    assert!(d.awv.weights.iter().all(|z| (z.norm() - 1.0 / 8f64.sqrt()).abs() < 1e-12));
}

fn mimo_model(seed: u64, paths: usize, kappa: Option<f64>) -> FieldModel {
    let mut spec = ScenarioSpec::new(LAMBDA, paths);
    spec.rician_kappa = kappa;
    gen_scenario(seed, &spec).unwrap().field_model().unwrap()
}

#[test]
fn mimo_single_path_is_flat() {
    let m = mimo_model(1, 1, None);
    let region = MoveRegion::plane(2.0, 2.0, 0.5).unwrap();
    let p = MimoProblem { model: &m, tx_region: &region, rx_region: &region, power: 10.0, noise: 1.0, mode: CapacityMode::Instantaneous };
    let start = MimoPlacement { tx: upa(2, 2, 0.5, &region).unwrap(), rx: upa(2, 2, 0.5, &region).unwrap() };
    let cfg = MimoAoConfig { grid_step: 0.25, ..MimoAoConfig::new(LAMBDA) };
    let r = mimo_position_ao(&p, std::slice::from_ref(&start), &cfg, None).unwrap();
    assert_eq!(r.iterations, 1);
    assert_eq!(r.placement, start);
}

#[test]
fn mimo_two_by_two_beats_dense_upa() {
    let region = MoveRegion::plane(2.0, 2.0, 0.5).unwrap();
    for seed in 0..3 {
        let m = mimo_model(seed, 2, None);
        let p = MimoProblem { model: &m, tx_region: &region, rx_region: &region, power: 1000.0, noise: 1.0, mode: CapacityMode::Instantaneous };
        let dense = MimoPlacement { tx: upa(1, 2, 0.5, &region).unwrap(), rx: upa(1, 2, 0.5, &region).unwrap() };
        let base = mimo_capacity_at(&p, &dense);
        let cfg = MimoAoConfig { grid_step: 0.2, ..MimoAoConfig::new(LAMBDA) };
        let r = mimo_position_ao(&p, &[dense], &cfg, None).unwrap();
        assert!(r.score >= base);
        assert!(r.trace_is_monotone(Sense::Maximize, 1e-12));
        assert!((mimo_capacity_at(&p, &r.placement) - r.score).abs() < 1e-9);
        validate_positions(&r.placement.rx, &region).into_result().unwrap();
        validate_positions(&r.placement.tx, &region).into_result().unwrap();
    }
}

#[test]
fn mimo_statistical_matches_instantaneous_for_los_only() {
    let m = mimo_model(5, 4, Some(f64::INFINITY));
    let region = MoveRegion::plane(1.5, 1.5, 0.5).unwrap();
    let start = MimoPlacement { tx: upa(2, 2, 0.5, &region).unwrap(), rx: upa(2, 2, 0.5, &region).unwrap() };
    let cfg = MimoAoConfig { grid_step: 0.25, max_sweeps: 3, ..MimoAoConfig::new(LAMBDA) };
    let ins = MimoProblem { model: &m, tx_region: &region, rx_region: &region, power: 10.0, noise: 1.0, mode: CapacityMode::Instantaneous };
    let sta = MimoProblem { mode: CapacityMode::Statistical { seeds: (0..8).collect() }, ..ins.clone() };
    let a = mimo_position_ao(&ins, std::slice::from_ref(&start), &cfg, None).unwrap();
    let b = mimo_position_ao(&sta, &[start], &cfg, None).unwrap();
    assert_eq!(a.placement, b.placement);
    assert!((a.score - b.score).abs() < 1e-9);
}

#[test]
fn mimo_rejects_infeasible_start() {
    let m = mimo_model(1, 2, None);
    let region = MoveRegion::plane(2.0, 2.0, 0.5).unwrap();
    let p = MimoProblem { model: &m, tx_region: &region, rx_region: &region, power: 1.0, noise: 1.0, mode: CapacityMode::Instantaneous };
    let bad = MimoPlacement { tx: vec![Vec3::zeros(), Vec3::new(0.1, 0.0, 0.0)], rx: upa(1, 2, 0.5, &region).unwrap() };
    assert!(matches!(mimo_position_ao(&p, &[bad], &MimoAoConfig::new(LAMBDA), None), Err(Error::Infeasible(_))));
}

#[test]
fn multiuser_single_user_on_segment_uses_graph() {
    let users = gen_uplink_users(9, &UplinkSpec::new(LAMBDA, 1, 1.0)).unwrap();
    let region = MoveRegion::segment(8.0, 0.5).unwrap();
    let p = MuProblem {
        users: &users,
        region: &region,
        n_r: 4,
        wavelength: LAMBDA,
        noise: 1e-12,
        combiner: Combiner::Mmse,
        utility: Utility::SumRate,
        budget: Budget::SumPower,
        csi: CsiMode::Instantaneous,
    };
    let cfg = MuConfig { line_samples: 160, ..MuConfig::new(LAMBDA) };
    let r = multiuser_position_opt(&p, MuMode::RateCentric { power: 1.0 }, None, &cfg).unwrap();
    let samples: Vec<Vec3> = (1..=160).map(|i| Vec3::new(i as f64 * 8.0 / 160.0, 0.0, 0.0)).collect();
    let h = users[0].response(&samples, LAMBDA);
    let line = SampledLine::from_channel(8.0, 0.5, h.as_slice()).unwrap();
    let g = graph_opt_miso(&line, 4).unwrap();
    let xs: Vec<f64> = r.placement.positions.iter().map(|p| p.x).collect();
    assert_eq!(xs, g.placement.positions);
    let hsel = users[0].response(&r.placement.positions, LAMBDA);
    let expect = (1.0 + hsel.norm_squared() / 1e-12).log2();
    assert!((r.score - expect).abs() < 1e-9 * expect);
    assert!((hsel.norm_squared() - g.score).abs() < 1e-9 * g.score);
}

#[test]
fn zf_is_lossless_for_orthogonal_users() {
    // Two LoS users whose steering vectors on a 2-element λ/2 array are orthogonal.
    let k1 = Vec3::new(0.0, 0.0, 1.0);
    let k2 = Vec3::new(1.0, 0.0, 0.0);
    let users = [
        UplinkUser { distance: 1.0, rx_k: vec![k1], coeffs: CVec::from_vec(vec![c(1.0, 0.0)]) },
        UplinkUser { distance: 1.0, rx_k: vec![k2], coeffs: CVec::from_vec(vec![c(0.0, 1.0)]) },
    ];
    let pos = [Vec3::zeros(), Vec3::new(0.5, 0.0, 0.0)];
    let h = CMat::from_columns(&[users[0].response(&pos, LAMBDA), users[1].response(&pos, LAMBDA)]);
    assert!(h.column(0).dotc(&h.column(1)).norm() < 1e-12);
    let w = zf_combiner(&h).unwrap();
    let powers = [2.0, 3.0];
    let rep = user_sinr_and_rates(&h, &w, &powers, 0.5).unwrap();
    let single: f64 = (0..2).map(|k| (1.0 + powers[k] * h.column(k).norm_squared() / 0.5).log2()).sum();
    assert!((rep.sum_rate - single).abs() < 1e-12);
}

#[test]
fn multiuser_rate_and_power_centric() {
    let users = gen_uplink_users(2, &UplinkSpec::new(0.06, 3, 1.0)).unwrap();
    let region = MoveRegion::plane(4.0 * 0.06, 4.0 * 0.06, 0.03).unwrap();
    let p = MuProblem {
        users: &users,
        region: &region,
        n_r: 4,
        wavelength: 0.06,
        noise: 1e-12,
        combiner: Combiner::Zf,
        utility: Utility::MinRate,
        budget: Budget::MaxPower,
        csi: CsiMode::Instantaneous,
    };
    let cfg = MuConfig { grid_step: 0.03, max_sweeps: 3, ..MuConfig::new(0.06) };
    let r = multiuser_position_opt(&p, MuMode::RateCentric { power: 1.0 }, None, &cfg).unwrap();
    let dense = p.dense_start().unwrap();
    assert!(r.score >= p.evaluate(&dense, &[1.0; 3]));
    assert!(r.trace_is_monotone(Sense::Maximize, 1e-12));
    assert!(r.placement.budget_used <= 1.0 + 1e-12);
    validate_positions(&r.placement.positions, &region).into_result().unwrap();

    let target = 0.5 * r.score;
    let pc = multiuser_position_opt(&p, MuMode::PowerCentric { target, max_power: 1.0 }, None, &cfg).unwrap();
    assert!(pc.score <= 1.0);
    assert!(pc.placement.utility >= target);
    assert!(p.evaluate(&pc.placement.positions, &pc.placement.powers) >= target);
    assert!(pc.trace_is_monotone(Sense::Minimize, 0.0));

    let too_much = multiuser_position_opt(&p, MuMode::PowerCentric { target: 1e3, max_power: 1.0 }, None, &cfg);
    assert!(matches!(too_much, Err(Error::Infeasible(_))));
}

#[test]
fn multiuser_statistical_close_to_instantaneous_at_high_kappa() {
    let wl = 299_792_458.0 / 5e9;
    let users = gen_uplink_users(11, &UplinkSpec::new(wl, 12, 100.0)).unwrap();
    let region = MoveRegion::plane(8.0 * wl, 8.0 * wl, wl / 2.0).unwrap();
    let seeds: Vec<u64> = (0..6).collect();
    let base = MuProblem {
        users: &users,
        region: &region,
        n_r: 16,
        wavelength: wl,
        noise: 1e-12,
        combiner: Combiner::Zf,
        utility: Utility::SumRate,
        budget: Budget::MaxPower,
        csi: CsiMode::Statistical { seeds: seeds.clone() },
    };
    let cfg = MuConfig { grid_step: wl, max_sweeps: 2, ..MuConfig::new(wl) };
    let mode = MuMode::RateCentric { power: 1.0 };
    let sta = multiuser_position_opt(&base, mode, None, &cfg).unwrap();
    // Instantaneous optimum per realization, averaged.
    let mut ins_total = 0.0;
    let mut sta_total = 0.0;
    for &s in &seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let real: Vec<UplinkUser> = users.iter().map(|u| u.with_random_phases(&mut rng)).collect();
        let p = MuProblem { users: &real, csi: CsiMode::Instantaneous, ..base.clone() };
        ins_total += multiuser_position_opt(&p, mode, None, &cfg).unwrap().score;
        sta_total += p.evaluate(&sta.placement.positions, &sta.placement.powers);
    }
    let (ins, st) = (ins_total / seeds.len() as f64, sta_total / seeds.len() as f64);
    assert!(st >= 0.9 * ins, "statistical {st} vs instantaneous {ins}");
}

#[test]
fn pso_cases() {
    let cfg = PsoConfig { seed: 3, ..Default::default() };
    let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let r = pso(sphere, Sense::Minimize, &[(-5.0, 5.0); 3], &cfg).unwrap();
    assert!(r.placement.iter().all(|v| v.abs() < 1e-3), "{:?}", r.placement);
    assert!(r.trace_is_monotone(Sense::Minimize, 0.0));

    let again = pso(sphere, Sense::Minimize, &[(-5.0, 5.0); 3], &cfg).unwrap();
    assert_eq!(r.trace, again.trace);
    assert_eq!(r.placement, again.placement);

    let rastrigin = |x: &[f64]| 20.0 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>();
    let budget = cfg.particles * (cfg.iters + 1);
    let mut wins = 0;
    for seed in 0..10u64 {
        let r = pso(rastrigin, Sense::Minimize, &[(-5.12, 5.12); 2], &PsoConfig { seed, ..cfg.clone() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let random_best = (0..budget)
            .map(|_| rastrigin(&[rng.random_range(-5.12..5.12), rng.random_range(-5.12..5.12)]))
            .fold(f64::INFINITY, f64::min);
        if r.score < random_best {
            wins += 1;
        }
    }
    assert!(wins >= 8, "PSO won {wins}/10");
    assert!(pso(sphere, Sense::Minimize, &[(1.0, 0.0)], &cfg).is_err());
}

#[test]
fn sensing_1d_examples() {
    let x = sensing_1d_optimal(16, 10.0, 0.5).unwrap();
    let p = x.positions();
    for i in 0..8 {
        assert!((p[i] - 0.5 * i as f64).abs() < 1e-12);
        assert!((p[8 + i] - (6.5 + 0.5 * i as f64)).abs() < 1e-12);
    }
    assert!((x.variance() - 11.875).abs() < 1e-12);

    let two = sensing_1d_optimal(2, 3.0, 0.5).unwrap();
    assert_eq!(two.positions(), &[0.0, 3.0]);
    assert!((two.variance() - 9.0 / 4.0).abs() < 1e-12);

    let tight = sensing_1d_optimal(5, 2.0, 0.5).unwrap();
    for (i, v) in tight.positions().iter().enumerate() {
        assert!((v - 0.5 * i as f64).abs() < 1e-12);
    }
    assert!(matches!(sensing_1d_optimal(5, 1.9, 0.5), Err(Error::Infeasible(_))));
}

#[test]
fn sensing_2d_segment_reduces_to_1d() {
    let region = MoveRegion::segment(10.0, 0.5).unwrap();
    let r = sensing_2d_ao(16, &region, CrbMetric::Max, &Sensing2dConfig::new(LAMBDA)).unwrap();
    assert!((r.score - 1.0 / 11.875).abs() < 1e-12);
}

#[test]
fn sensing_2d_small_instance_matches_brute_force() {
    let region = MoveRegion::plane(1.0, 1.0, 0.5).unwrap();
    let cfg = Sensing2dConfig { grid_step: 0.25, max_sweeps: 50 };
    let r = sensing_2d_ao(4, &region, CrbMetric::Max, &cfg).unwrap();
    let pts = grid_points(&region, 0.25).unwrap();
    let mut best = f64::INFINITY;
    let m = pts.len();
    for a in 0..m {
        for b in a + 1..m {
            for c_ in b + 1..m {
                for d in c_ + 1..m {
                    let sel = [pts[a], pts[b], pts[c_], pts[d]];
                    let ok = (0..4).all(|i| (i + 1..4).all(|j| (sel[i] - sel[j]).norm() >= 0.5 - 1e-12));
                    if ok {
                        best = best.min(crb_geometry_factor(&sel, CrbMetric::Max));
                    }
                }
            }
        }
    }
    assert!((r.score - best).abs() < 1e-9 * best, "{} vs {best}", r.score);
    assert!(r.trace_is_monotone(Sense::Minimize, 0.0));
}

#[test]
fn sensing_2d_standard_instance_near_bound() {
    let region = MoveRegion::plane(5.0, 5.0, 0.5).unwrap();
    let cfg = Sensing2dConfig { grid_step: 0.125, max_sweeps: 20 };
    let r = sensing_2d_ao(36, &region, CrbMetric::Max, &cfg).unwrap();
    validate_positions(&r.placement, &region).into_result().unwrap();
    let bound = crb_lower_bound_factor(&region);
    let gap_db = 10.0 * (r.score / bound).log10();
    assert!((-1e-9..=3.0).contains(&gap_db), "gap {gap_db} dB");
}

fn isac_fixture() -> (FieldModel, MoveRegion, MoveRegion) {
    let m = mimo_model(21, 3, Some(1.0));
    (m, MoveRegion::plane(1.0, 1.0, 0.5).unwrap(), MoveRegion::plane(2.0, 2.0, 0.5).unwrap())
}

#[test]
fn isac_endpoints_and_sweep() {
    let (m, txr, rxr) = isac_fixture();
    let problem = IsacProblem {
        model: &m,
        tx: upa(2, 2, 0.5, &txr).unwrap(),
        tx_region: &txr,
        rx_region: &rxr,
        n_r: 4,
        power: 30.0,
        noise: 1.0,
        mode: CapacityMode::Instantaneous,
        metric: CrbMetric::Max,
        crb_scale: 1.0,
    };
    let mcfg = MimoAoConfig { grid_step: 0.25, max_sweeps: 4, optimize_tx: false, refine_levels: 1 };
    let scfg = Sensing2dConfig { grid_step: 0.25, max_sweeps: 20 };

    // Unconstrained threshold reproduces the capacity optimum.
    let loose = isac_constrained_opt(&problem, IsacMode::ComCentric { max_crb: f64::INFINITY }, &mcfg, &scfg).unwrap();
    let mp = MimoProblem { model: &m, tx_region: &txr, rx_region: &rxr, power: 30.0, noise: 1.0, mode: CapacityMode::Instantaneous };
    let starts: Vec<MimoPlacement> =
        planar_starts(4, &rxr).into_iter().map(|rx| MimoPlacement { tx: problem.tx.clone(), rx }).collect();
    let free = mimo_position_ao(&mp, &starts, &mcfg, None).unwrap();
    assert_eq!(loose.placement.rx, free.placement.rx);
    assert!((loose.placement.capacity - free.score).abs() < 1e-9);

    // Tightest threshold keeps the sensing optimum's CRB.
    let sens = sensing_2d_ao(4, &rxr, CrbMetric::Max, &scfg).unwrap();
    let tight = isac_constrained_opt(&problem, IsacMode::ComCentric { max_crb: sens.score }, &mcfg, &scfg).unwrap();
    assert!(tight.placement.crb <= sens.score * (1.0 + 1e-9));
    assert!(tight.placement.capacity >= problem.capacity(&sens.placement) - 1e-9);

    let infeasible = isac_constrained_opt(&problem, IsacMode::ComCentric { max_crb: 0.5 * sens.score }, &mcfg, &scfg);
    assert!(matches!(infeasible, Err(Error::Infeasible(_))));

    // Sen-centric with a trivial capacity floor returns the sensing optimum.
    let sen = isac_constrained_opt(&problem, IsacMode::SenCentric { min_capacity: 0.0 }, &mcfg, &scfg).unwrap();
    assert!((sen.score - sens.score).abs() < 1e-12);

    let eps: Vec<f64> = [1.0, 1.2, 1.5, 2.0, 4.0, 1e9].iter().map(|f| f * sens.score).collect();
    let pts = isac_tradeoff_sweep(&problem, &eps, &mcfg, &scfg).unwrap();
    let caps: Vec<f64> = pts.iter().map(|p| p.solution.as_ref().unwrap().capacity).collect();
    assert!(caps.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{caps:?}");
    for p in &pts {
        assert!(p.solution.as_ref().unwrap().crb <= p.max_crb * (1.0 + 1e-9));
    }
}

#[test]
fn gma_cases() {
    let spec = GmaUserSpec::default_28ghz();
    let wl = spec.wavelength;
    let users = gen_gma_users(4, &spec).unwrap();
    let cfg = GmaConfig::new(wl);
    let a = 10.0 * wl;

    let dense = gma_opt(&users, 4, a, 1, wl, &cfg).unwrap();
    assert_eq!(dense.eta, 1);

    let r = gma_opt(&users, 4, a, 6, wl, &cfg).unwrap();
    let base = ma_core::beamforming::gma_rate(0.0, 1, 4, &users, wl).unwrap();
    assert!(r.rate >= base && r.rate >= dense.rate);
    assert!(r.x + 3.0 * r.eta as f64 * wl / 2.0 <= a + 1e-12);
    assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));

    // One LoS user: the rate does not depend on the array geometry.
    let one = [GmaUser { channel: LinearChannel { u: vec![0.3], gains: vec![c(1e-4, 0.0)] }, snr: 1e8 }];
    let r = gma_opt(&one, 4, a, 4, wl, &cfg).unwrap();
    assert_eq!((r.x, r.eta), (0.0, 1));
    assert_eq!(r.iterations, 1);
    assert!(gma_opt(&one, 4, 0.5 * wl, 4, wl, &cfg).is_err());
}

#[test]
fn uplink_users_are_deterministic_and_scaled() {
    let spec = UplinkSpec::new(0.06, 5, 2.0);
    let a = gen_uplink_users(1, &spec).unwrap();
    let b = gen_uplink_users(1, &spec).unwrap();
    assert_eq!(a, b);
    for u in &a {
        assert!(u.distance >= 20.0 && u.distance <= 100.0);
        assert!((u.rx_k[0].norm() - 1.0).abs() < 1e-12);
        assert!((u.rx_k[0].y + 20.0 / u.distance).abs() < 1e-12);
        assert_eq!(u.rx_k.len(), 6);
    }
    let json = serde_json::to_string(&a[0]).unwrap();
    let back: UplinkUser = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a[0]);
}

#[test]
fn opt_report_serializes() {
    let line = SampledLine::with_min_gap(vec![1.0, 2.0, 3.0], 1);
    let r = graph_opt_miso(&line, 2).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    let back: OptReport<LineSelection> = serde_json::from_str(&s).unwrap();
    assert_eq!(back, r);
    let _ = WaveVector::from_planar(0.1, 0.2);
}
