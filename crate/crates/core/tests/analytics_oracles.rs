use fpa_core::analytics::{
    clt_moments, pe_gaussian_approx, pe_low_snr, pe_single_detector, skellam_positive_prob, weight_quality,
    SkellamParams, DEFAULT_SKELLAM_TOL,
};
use fpa_core::experiments::{analytic_estimate, run_monte_carlo};
use fpa_core::photon::CountSampler;
use fpa_core::receiver::compute_weights;
use fpa_core::rng::stream_rng;
use fpa_core::{ArrayGeometry, BeamParams, Method, Point, Scenario, SlotKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Poisson pmf on `0..=cap`, built in log space.
fn log_pmf(mu: f64, cap: usize) -> Vec<f64> {
    (0..=cap)
        .map(|k| {
            if mu == 0.0 {
                if k == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                k as f64 * mu.ln() - mu - libm::lgamma(k as f64 + 1.0)
            }
        })
        .collect()
}

/// `P(A > B)` for independent Poissons by direct double summation.
fn brute_positive(mu1: f64, mu2: f64) -> f64 {
    let cap = |mu: f64| (mu + 40.0 * mu.sqrt() + 60.0) as usize;
    let (a, b) = (log_pmf(mu1, cap(mu1)), log_pmf(mu2, cap(mu2)));
    let mut total = 0.0;
    for (j, &lb) in b.iter().enumerate() {
        let pb = lb.exp();
        if pb == 0.0 {
            continue;
        }
        let tail: f64 = a.iter().skip(j + 1).map(|&la| la.exp()).sum();
        total += pb * tail;
    }
    total
}

fn q_oracle(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn cell_masses(beam: &BeamParams, geom: &ArrayGeometry) -> Vec<f64> {
    geom.cell_regions()
        .unwrap()
        .iter()
        .map(|r| beam.cell_signal_mass(r).unwrap())
        .collect()
}

#[test]
fn skellam_matches_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let mu1 = rng.random_range(0.0..200.0);
        let mu2 = rng.random_range(0.0..200.0);
        let got = skellam_positive_prob(&SkellamParams::new(mu1, mu2).unwrap(), DEFAULT_SKELLAM_TOL).unwrap();
        let want = brute_positive(mu1, mu2);
        assert!((got - want).abs() < 2e-12, "({mu1}, {mu2}): {got} vs {want}");
    }
    let got = skellam_positive_prob(&SkellamParams::new(56.0, 6.0).unwrap(), DEFAULT_SKELLAM_TOL).unwrap();
    assert!((got - brute_positive(56.0, 6.0)).abs() < 2e-12);
}

#[test]
fn single_detector_symmetric_and_monotone() {
    for (noise, k) in [(3.0, 2), (6.0, 8), (24.0, 16)] {
        let p0: f64 = {
            // P(A = B) for equal rates
            let a = log_pmf(noise, 400);
            a.iter().map(|&l| (2.0 * l).exp()).sum()
        };
        let pe = pe_single_detector(0.0, noise, k).unwrap().value;
        let pc = ((1.0 - p0) / 2.0).powi(k as i32 - 1);
        assert!((1.0 - pe - pc).abs() < 1e-11);
    }
    let mut prev = 1.0;
    for step in 1..40 {
        let pe = pe_single_detector(step as f64 * 2.5, 6.0, 8).unwrap().value;
        assert!(pe < prev && pe >= 0.0);
        prev = pe;
    }
}

#[test]
fn weight_quality_metric() {
    let beam = BeamParams::from_peak_intensity(200.0, 0.2, Point::ORIGIN).unwrap();
    let q = |m: usize| {
        let g = ArrayGeometry::with_cell_count(1.0, m).unwrap();
        weight_quality(&cell_masses(&beam, &g), beam.i0(), g.cell_area().unwrap()).unwrap()
    };
    let (q1, q4) = (q(1), q(4));
    assert!(((q1 - q4) / q1).abs() < 1e-9, "{q1} vs {q4}");
    let series: Vec<f64> = [4, 16, 36, 64].iter().map(|&m| q(m)).collect();
    assert!(series.windows(2).all(|w| w[1] > w[0]), "{series:?}");
    // single cell: s_1 is the whole-array fraction of the beam
    let s1 = (2.0 * std::f64::consts::PI) * libm::erf(1.0 / (0.2 * std::f64::consts::SQRT_2)).powi(2);
    assert!((q1 - (s1 * s1 / 4.0).sqrt()).abs() < 1e-12);
}

#[test]
fn low_snr_tracks_gaussian_at_low_snr() {
    for m in [16, 64] {
        let geom = ArrayGeometry::with_cell_count(1.0, m).unwrap();
        for peak in [100.0, 150.0, 200.0] {
            let beam = BeamParams::from_peak_intensity(peak, 0.8, Point::ORIGIN).unwrap();
            let s = Scenario::with_noise_photons(beam, geom.clone(), 20_000.0, 8, 1, 0).unwrap();
            let low = analytic_estimate(&s, Method::LowSnr).unwrap();
            let gauss = analytic_estimate(&s, Method::GaussianApprox).unwrap();
            assert!(!low.regime_warning);
            let rel = (low.value - gauss.value).abs() / gauss.value;
            assert!(rel < 0.1, "M = {m}, I_p = {peak}: {} vs {}", low.value, gauss.value);
        }
    }
}

#[test]
fn low_snr_at_twelve_photons_is_pinned_and_flagged() {
    let beam = BeamParams::from_peak_intensity(50.0, 0.2, Point::new(0.4, 0.4)).unwrap();
    let geom = ArrayGeometry::with_cell_count(1.0, 144).unwrap();
    let lambda_n = 6.0;
    let masses = cell_masses(&beam, &geom);
    let area = geom.cell_area().unwrap();
    let got = pe_low_snr(beam.i0(), lambda_n, &masses, area, 8).unwrap();

    // direct evaluation with masses from a midpoint rule on each cell
    let mut oracle_sq = 0.0;
    for r in geom.cell_regions().unwrap() {
        let n = 300;
        let (hx, hy) = (r.width() / n as f64, r.height() / n as f64);
        let mut mass = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = r.x_min + (i as f64 + 0.5) * hx;
                let y = r.y_min + (j as f64 + 0.5) * hy;
                mass += beam.intensity_at(x, y) * hx * hy;
            }
        }
        oracle_sq += (mass / beam.i0()).powi(2);
    }
    let arg = beam.i0() / (2.0 * lambda_n).sqrt() * (oracle_sq / area).sqrt();
    let want = 1.0 - q_oracle(-arg).powi(7);
    assert!(((got.value - want) / want).abs() < 1e-4, "{} vs {want}", got.value);
    // per-cell SNR reaches ~8 here, far outside the approximation's regime
    assert!(got.regime_warning);

    let s = Scenario::new(beam, geom, lambda_n, 8, 100_000, 12).unwrap();
    let mc = run_monte_carlo(&s).unwrap();
    println!(
        "low-SNR {:.3e} vs Monte Carlo {:.3e} ± {:.1e}",
        got.value, mc.value, mc.half_width_95
    );
    assert!(mc.value > got.value);
}

#[test]
fn clt_moments_match_simulated_statistic() {
    let beam = BeamParams::from_peak_intensity(200.0, 0.2, Point::ORIGIN).unwrap();
    let geom = ArrayGeometry::with_cell_count(1.0, 64).unwrap();
    let lambda_n = 6.0;
    let sampler = CountSampler::new(&beam, &geom, lambda_n).unwrap();
    let w = compute_weights(&beam, &geom, lambda_n).unwrap();
    let mp = clt_moments(sampler.signal_mass(), &w, sampler.cell_noise()).unwrap();

    let draws = 1_000_000u64;
    let mut rng = stream_rng(404, 0);
    let (mut sig, mut noise) = (vec![0u32; 64], vec![0u32; 64]);
    let xs: Vec<f64> = (0..draws)
        .map(|_| {
            sampler.sample_into(SlotKind::SignalPlusNoise, &mut rng, &mut sig);
            sampler.sample_into(SlotKind::NoiseOnly, &mut rng, &mut noise);
            w.iter()
                .zip(sig.iter().zip(&noise))
                .map(|(a, (&zs, &zn))| a * (zs as f64 - zn as f64))
                .sum()
        })
        .collect();
    let n = draws as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let mean_se = mp.sigma_x / n.sqrt();
    assert!((mean - mp.mu_x).abs() < 3.0 * mean_se, "mean {mean} vs {}", mp.mu_x);
    let var_se = ((m4 - var * var) / n).sqrt();
    let target = mp.sigma_x.powi(2);
    assert!((var - target).abs() < 3.0 * var_se, "var {var} vs {target}");
}

#[test]
fn gaussian_approx_values() {
    let pe = pe_gaussian_approx(
        &fpa_core::analytics::MomentPair {
            mu_x: 3.0,
            sigma_x: 1.0,
        },
        2,
    )
    .unwrap();
    assert!((pe.value - q_oracle(3.0)).abs() < 1e-14);
    assert!((pe.value - 0.00135).abs() < 1e-5);
    let pe = pe_gaussian_approx(
        &fpa_core::analytics::MomentPair {
            mu_x: 0.0,
            sigma_x: 2.0,
        },
        8,
    )
    .unwrap();
    assert!((pe.value - (1.0 - 0.5f64.powi(7))).abs() < 1e-14);
}
