//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).

use pdc_sim::hbt::{estimate_g2, sample_single_beam, sample_twin_beams, SamplerConfig};
use pdc_sim::optics::{build_kernel, decompose, spatial_gained_2d, GridSpec, KernelParams};
use pdc_sim::scenario::{
    csv_bytes, resolve, run_aperture_scan, run_gain_scan, run_hbt_point, run_position_scan,
    ScenarioConfig,
};
use pdc_sim::schmidt::schmidt_number;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn scenario(name: &str) -> ScenarioConfig {
    let path = format!(
        "{}/../../scenarios/{name}",
        env!("CARGO_MANIFEST_DIR")
    );
    ScenarioConfig::from_path(path.as_ref()).expect("scenario file loads")
}

fn report(criterion: u32, pass: bool, details: &str) {
    println!(
        "acceptance {criterion:02} {} {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {details}");
}

#[test]
fn criterion_01_thermal_oracle() {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let start = Instant::now();
    let est = pool.install(|| {
        let cfg = SamplerConfig {
            pulses: 1_000_000,
            seed: 101,
            ..SamplerConfig::default()
        };
        let batch = sample_single_beam(&[1.0], 100.0, &cfg).unwrap();
        estimate_g2(&batch).unwrap()
    });
    let elapsed = start.elapsed().as_secs_f64();
    let dev = (est.value - 2.0).abs();
    let pass = dev <= 4.0 * est.std_error
        && est.std_error > 5e-4
        && est.std_error < 4e-3
        && elapsed < 10.0;
    report(
        1,
        pass,
        &format!(
            "single-mode thermal: g2 = {:.4} +/- {:.4} (dev {:.1} sigma), {elapsed:.2} s single-threaded",
            est.value,
            est.std_error,
            dev / est.std_error
        ),
    );
}

#[test]
fn criterion_02_auto_correlation_sweep() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let cases = 50;
    let mut within2 = 0;
    let mut within4 = 0;
    for i in 0..cases {
        let k_target: f64 = rng.gen_range(1.0..40.0);
        let t = (k_target - 1.0) / (k_target + 1.0);
        let weights: Vec<f64> = (0..128)
            .map(|n| t.powi(n) * (0.7 + 0.6 * rng.gen::<f64>()))
            .collect();
        let sum: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        let k_actual = schmidt_number(&weights);
        let expect = 1.0 + 1.0 / k_actual;

        let cfg = SamplerConfig {
            pulses: 100_000,
            seed: 5000 + i,
            ..SamplerConfig::default()
        };
        let est = estimate_g2(&sample_single_beam(&weights, 500.0, &cfg).unwrap()).unwrap();
        let dev = (est.value - expect).abs();
        if dev <= 2.0 * est.std_error {
            within2 += 1;
        }
        if dev <= 4.0 * est.std_error {
            within4 += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = within2 >= 48 && within4 == cases && elapsed < 120.0;
    report(
        2,
        pass,
        &format!(
            "auto-correlation law over {cases} random spectra: {within2}/{cases} within 2 sigma, {within4non}/{cases} within 4 sigma, {elapsed:.1} s",
            within4non = within4
        ),
    );
}

#[test]
fn criterion_03_cross_correlation_grid() {
    let mut within2 = 0;
    let mut within4 = 0;
    let mut cases = 0;
    for (gi, k) in [1usize, 5, 20].into_iter().enumerate() {
        for (gj, n_mode) in [0.2f64, 1.0, 100.0].into_iter().enumerate() {
            cases += 1;
            let weights = vec![1.0 / k as f64; k];
            let total = n_mode * k as f64;
            let expect = 1.0 + 1.0 / k as f64 + 1.0 / (n_mode * k as f64);
            let cfg = SamplerConfig {
                pulses: 100_000,
                seed: 7000 + (gi * 3 + gj) as u64,
                ..SamplerConfig::default()
            };
            let (_, cross) = sample_twin_beams(&weights, total, &cfg).unwrap();
            let est = estimate_g2(&cross).unwrap();
            let dev = (est.value - expect).abs();
            if dev <= 2.0 * est.std_error {
                within2 += 1;
            }
            if dev <= 4.0 * est.std_error {
                within4 += 1;
            }
        }
    }
    let need2 = (0.95 * cases as f64).ceil() as usize;
    let pass = within2 >= need2 && within4 == cases;
    report(
        3,
        pass,
        &format!(
            "cross-correlation law on the K x n_mode grid: {within2}/{cases} within 2 sigma, {within4}/{cases} within 4 sigma"
        ),
    );
}

#[test]
fn criterion_04_mehler_svd_equivalence() {
    let mut worst_spectrum: f64 = 0.0;
    let mut worst_square: f64 = 0.0;
    for ratio in [1.5f64, 3.0, 10.0] {
        let params = KernelParams {
            pump_waist_um: 120.0,
            sigma_c_um: Some(120.0 / ratio),
            ..KernelParams::default()
        };
        let kernel = build_kernel(&params, &GridSpec::default()).unwrap();
        let (spectrum, _, _) = decompose(&kernel, 60).unwrap();
        let t = ((ratio - 1.0) / (ratio + 1.0)).powi(2);
        for (n, w) in spectrum.weights().iter().enumerate().take(30) {
            worst_spectrum = worst_spectrum.max((w - (1.0 - t) * t.powi(n as i32)).abs());
        }
        let joint = spectrum.tensor(&spectrum);
        let rel =
            (joint.schmidt_number() - spectrum.schmidt_number().powi(2)).abs()
                / spectrum.schmidt_number().powi(2);
        worst_square = worst_square.max(rel);
    }
    let pass = worst_spectrum < 1e-8 && worst_square < 1e-9;
    report(
        4,
        pass,
        &format!(
            "decomposed spectra vs geometric law: max abs dev {worst_spectrum:.2e} (< 1e-8), 2-D square identity {worst_square:.2e} (< 1e-9)"
        ),
    );
}

#[test]
fn criterion_05_paper_operating_point() {
    let config = scenario("hbt_point.json");
    let (result, _) = run_hbt_point(&config).unwrap();
    let row = result.rows[0];
    let meta = &result.metadata;
    let cal_ok = (meta.resolved_gain - 7.3).abs() < 1e-9
        && meta.gain_proportionality.is_some()
        && meta.fitted_sigma_c_um.is_some();
    let analytic_ok = (row.g2_analytic - 1.0519).abs() <= 0.002;
    let mc_ok = (row.g2_montecarlo - row.g2_analytic).abs() <= 3.0 * row.std_error;
    let pass = cal_ok && analytic_ok && mc_ok;
    report(
        5,
        pass,
        &format!(
            "calibrated operating point: analytic g2 = {:.5} (target 1.0519 +/- 0.002), monte carlo {:.5} +/- {:.5}, K = {:.3}",
            row.g2_analytic, row.g2_montecarlo, row.std_error, row.k_effective
        ),
    );
}

#[test]
fn criterion_06_full_collection_invariance() {
    let config = scenario("fig4a_position_scan.json");
    let result = run_position_scan(&config).unwrap();
    assert_eq!(result.rows.len(), 20);
    let analytic: Vec<f64> = result.rows.iter().map(|r| r.g2_analytic).collect();
    let spread = analytic.iter().cloned().fold(f64::MIN, f64::max)
        - analytic.iter().cloned().fold(f64::MAX, f64::min);
    let mc_ok = result
        .rows
        .iter()
        .all(|r| (r.g2_montecarlo - r.g2_analytic).abs() <= 3.0 * r.std_error);
    let pass = spread < 1e-6 && mc_ok;
    report(
        6,
        pass,
        &format!(
            "full-collection z-scan over {} points: analytic spread {spread:.2e} (< 1e-6), all monte-carlo rows within 3 sigma",
            result.rows.len()
        ),
    );
}

#[test]
fn criterion_07_aperture_scan_shape() {
    let config = scenario("fig3_aperture_scan.json");
    let result = run_aperture_scan(&config).unwrap();
    let rows = &result.rows;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].g2_analytic <= w[0].g2_analytic + 1e-9);

    let resolved = resolve(&config).unwrap();
    let gained = spatial_gained_2d(
        &resolved.spectrum_1d,
        resolved.config.modes_per_axis,
        resolved.gain,
    )
    .unwrap();
    let full = 1.0 + 1.0 / (gained.schmidt_number() * resolved.temporal.schmidt_number());
    let small_target = 1.0 + 1.0 / resolved.temporal.schmidt_number();

    let first = rows.first().unwrap();
    let last = rows.last().unwrap();
    let small_ok = (first.g2_analytic - small_target).abs() / small_target <= 0.02;
    let large_ok = (last.g2_analytic - full).abs() / full <= 0.01;
    let pass = monotone && small_ok && large_ok;
    report(
        7,
        pass,
        &format!(
            "aperture scan: monotone {monotone}, D = {:.2} mm gives {:.5} (target {small_target:.5} +/- 2%), D = {:.2} mm gives {:.5} (full collection {full:.5} +/- 1%)",
            first.control, first.g2_analytic, last.control, last.g2_analytic
        ),
    );
}

#[test]
fn criterion_08_pinhole_scan_shape() {
    let config = scenario("fig4b_position_scan_pinhole_0p12mm.json");
    let result = run_position_scan(&config).unwrap();
    let rows = &result.rows;
    let n = rows.len();
    let (imin, rmin) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.g2_analytic.partial_cmp(&b.1.g2_analytic).unwrap())
        .unwrap();

    let interior = imin > 0 && imin < n - 1;
    let left_max = rows[0].g2_analytic > rows[1].g2_analytic;
    let right_max = rows[n - 1].g2_analytic > rows[n - 2].g2_analytic;
    let strict = rows[0].g2_analytic > rmin.g2_analytic + 1e-3
        && rows[n - 1].g2_analytic > rmin.g2_analytic + 1e-3;

    let ratio_left = rows[0].g2_analytic / rmin.g2_analytic;
    let ratio_right = rows[n - 1].g2_analytic / rmin.g2_analytic;
    let rel = |r: &pdc_sim::scenario::ScanRow| 3.0 * r.std_error / r.g2_montecarlo;
    let mc_ratio_left = rows[0].g2_montecarlo / rows[imin].g2_montecarlo;
    let mc_ratio_right = rows[n - 1].g2_montecarlo / rows[imin].g2_montecarlo;
    let ratios_ok = mc_ratio_left >= ratio_left * (1.0 - rel(&rows[0]) - rel(rmin))
        && mc_ratio_right >= ratio_right * (1.0 - rel(&rows[n - 1]) - rel(rmin));

    let mc_ok = rows
        .iter()
        .all(|r| (r.g2_montecarlo - r.g2_analytic).abs() <= 4.0 * r.std_error);

    let pass = interior && left_max && right_max && strict && ratios_ok && mc_ok;
    report(
        8,
        pass,
        &format!(
            "fixed-pinhole z-scan: maxima {:.4} (focal) and {:.4} (image) over interior minimum {:.4} at z = {:.2} cm; monte-carlo ratios {:.3}/{:.3} vs analytic {:.3}/{:.3}",
            rows[0].g2_analytic,
            rows[n - 1].g2_analytic,
            rmin.g2_analytic,
            rmin.control,
            mc_ratio_left,
            mc_ratio_right,
            ratio_left,
            ratio_right
        ),
    );
}

#[test]
fn criterion_09_gain_scan_monotone() {
    let config = scenario("fig2_gain_scan.json");
    let result = run_gain_scan(&config).unwrap();
    let strictly_increasing = result
        .rows
        .windows(2)
        .all(|w| w[1].g2_analytic > w[0].g2_analytic);
    let pass = strictly_increasing && result.rows.len() == 12;
    report(
        9,
        pass,
        &format!(
            "gain scan {:.1} -> {:.1}: analytic g2 strictly increasing from {:.4} to {:.4}",
            result.rows.first().unwrap().control,
            result.rows.last().unwrap().control,
            result.rows.first().unwrap().g2_analytic,
            result.rows.last().unwrap().g2_analytic
        ),
    );
}

#[test]
fn criterion_10_worker_determinism() {
    let mut config = scenario("fig3_aperture_scan.json");
    config.sampler.pulses = 4000;
    if let pdc_sim::scenario::ScanSpec::ApertureScan { diameters_mm, .. } = &mut config.scan {
        diameters_mm.truncate(4);
    }
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = single.install(|| csv_bytes(&run_aperture_scan(&config).unwrap()));
    let b = many.install(|| csv_bytes(&run_aperture_scan(&config).unwrap()));
    let pass = a == b;
    report(
        10,
        pass,
        &format!(
            "same seed under 1 vs 4 workers: {} CSV bytes byte-identical = {pass}",
            a.len()
        ),
    );
}
