//! Closed-form and semi-analytic symbol-error probabilities.
//!
//! All of these use the pairwise form `P_e = 1 − P(X > 0)^(K−1)`, where
//! `X = Σ_m α_m (Z_m^(signal) − Z_m^(noise))` compares the signal slot with
//! one noise slot.

use crate::error::{contract, domain, Result};
use crate::estimate::{Method, PeEstimate};
use crate::special::ln_factorial;

pub use crate::special::q_function;

/// Threshold on the largest per-cell SNR above which the low-SNR formula is
/// flagged.
pub const LOW_SNR_LIMIT: f64 = 0.1;

/// Tolerance used when a caller does not pick one.
pub const DEFAULT_SKELLAM_TOL: f64 = 1e-12;

/// Difference `N₁ − N₂` of independent Poisson counts with means `mu1`, `mu2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkellamParams {
    pub mu1: f64,
    pub mu2: f64,
}

impl SkellamParams {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        for (name, v) in [("mu1", mu1), ("mu2", mu2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return domain(format!("Skellam {name} must be non-negative, got {v}"));
            }
        }
        Ok(Self { mu1, mu2 })
    }

    pub fn mean(&self) -> f64 {
        self.mu1 - self.mu2
    }

    pub fn variance(&self) -> f64 {
        self.mu1 + self.mu2
    }
}

/// Mean and standard deviation of the weighted statistic `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub mu_x: f64,
    pub sigma_x: f64,
}

/// Chernoff bound `P(N ≥ k) ≤ e^{−μ}(eμ/k)^k` for `N ~ Poisson(μ)`, `k > μ`.
fn poisson_upper_tail_bound(mu: f64, k: u64) -> f64 {
    let k = k as f64;
    if k <= mu {
        return 1.0;
    }
    (-mu + k * (1.0 + (mu / k).ln())).exp()
}

/// Smallest `b` with `P(N > b) ≤ tol`.
fn truncation_point(mu: f64, tol: f64) -> u64 {
    let mut b = mu.ceil() as u64;
    let mut step = (mu.sqrt().ceil() as u64).max(1);
    while poisson_upper_tail_bound(mu, b + 1) > tol {
        b += step;
        step *= 2;
    }
    // back off the doubling overshoot
    let mut lo = mu.ceil() as u64;
    let mut hi = b;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if poisson_upper_tail_bound(mu, mid + 1) <= tol {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    hi
}

fn poisson_pmf_table(mu: f64, upto: u64) -> Vec<f64> {
    if mu == 0.0 {
        let mut t = vec![0.0; upto as usize + 1];
        t[0] = 1.0;
        return t;
    }
    let ln_mu = mu.ln();
    (0..=upto)
        .map(|k| (k as f64 * ln_mu - mu - ln_factorial(k)).exp())
        .collect()
}

/// `(P(X > 0), P(X ≤ 0))`, each summed directly so neither suffers
/// cancellation. Neglected probability mass is below `tol`.
fn skellam_split(p: &SkellamParams, tol: f64) -> (f64, f64) {
    if p.mu1 == 0.0 {
        return (0.0, 1.0);
    }
    if p.mu2 == 0.0 {
        return (-(-p.mu1).exp_m1(), (-p.mu1).exp());
    }
    let b_max = truncation_point(p.mu2, tol / 2.0);
    let a_max = truncation_point(p.mu1, tol / 2.0).max(b_max + 1);
    let p1 = poisson_pmf_table(p.mu1, a_max);
    let p2 = poisson_pmf_table(p.mu2, b_max);

    // suffix[j] = P(j ≤ N₁ ≤ a_max), prefix accumulated on the fly
    let mut suffix = vec![0.0; p1.len() + 1];
    for j in (0..p1.len()).rev() {
        suffix[j] = suffix[j + 1] + p1[j];
    }
    let mut positive = 0.0;
    let mut non_positive = 0.0;
    let mut prefix = 0.0;
    for (b, &q) in p2.iter().enumerate() {
        prefix += p1[b];
        positive += q * suffix[b + 1];
        non_positive += q * prefix;
    }
    (positive.min(1.0), non_positive.min(1.0))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol <= 1e-6 {
        Ok(())
    } else {
        domain(format!("Skellam tolerance must lie in (0, 1e-6], got {tol}"))
    }
}

/// `P(X > 0)` for a Skellam variable, by truncated convolution.
pub fn skellam_positive_prob(p: &SkellamParams, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    Ok(skellam_split(p, tol).0)
}

/// `1 − (1 − q)^(K−1)` evaluated without cancellation for small `q`.
fn pe_from_pairwise_failure(q: f64, ppm_order: usize) -> f64 {
    if q >= 1.0 {
        return 1.0;
    }
    (-((ppm_order - 1) as f64 * (-q).ln_1p()).exp_m1()).clamp(0.0, 1.0)
}

fn check_order(ppm_order: usize) -> Result<()> {
    if ppm_order >= 2 {
        Ok(())
    } else {
        domain(format!("PPM order must be at least 2, got {ppm_order}"))
    }
}

/// Single-detector (`M = 1`) error probability.
///
/// `captured_signal` is the beam mass on the detector and `noise_mass` is
/// `λ_n·A_d`, so the pairwise statistic is Skellam with
/// `μ₁ = captured_signal + noise_mass`, `μ₂ = noise_mass`.
pub fn pe_single_detector(captured_signal: f64, noise_mass: f64, ppm_order: usize) -> Result<PeEstimate> {
    pe_single_detector_with_tol(captured_signal, noise_mass, ppm_order, DEFAULT_SKELLAM_TOL)
}

pub fn pe_single_detector_with_tol(
    captured_signal: f64,
    noise_mass: f64,
    ppm_order: usize,
    tol: f64,
) -> Result<PeEstimate> {
    check_order(ppm_order)?;
    check_tol(tol)?;
    let params = SkellamParams::new(captured_signal + noise_mass, noise_mass)?;
    let (_, fail) = skellam_split(&params, tol);
    Ok(PeEstimate::analytic(
        pe_from_pairwise_failure(fail, ppm_order),
        Method::SkellamExact,
    ))
}

/// `μ_X = Σ α_m·I₀s_m`, `σ_X² = Σ α_m²·(I₀s_m + 2·cell_noise)`.
pub fn clt_moments(masses: &[f64], weights: &[f64], cell_noise: f64) -> Result<MomentPair> {
    if masses.len() != weights.len() {
        return contract(format!("{} cell masses but {} weights", masses.len(), weights.len()));
    }
    let (mu_x, var) = masses.iter().zip(weights).fold((0.0, 0.0), |(mu, var), (&s, &a)| {
        (mu + a * s, var + a * a * (s + 2.0 * cell_noise))
    });
    Ok(MomentPair {
        mu_x,
        sigma_x: var.sqrt(),
    })
}

/// `1 − Q(−μ_X/σ_X)^(K−1)`.
pub fn pe_gaussian_approx(mp: &MomentPair, ppm_order: usize) -> Result<PeEstimate> {
    check_order(ppm_order)?;
    if !(mp.sigma_x > 0.0) {
        return domain(format!("σ_X must be positive, got {}", mp.sigma_x));
    }
    // Q(−t) = 1 − Q(t)
    let fail = q_function(mp.mu_x / mp.sigma_x);
    Ok(PeEstimate::analytic(
        pe_from_pairwise_failure(fail, ppm_order),
        Method::GaussianApprox,
    ))
}

/// Low-SNR approximation
/// `P_e ≈ 1 − Q(−(I₀/√(2λ_n))·√(Σ s_m²/A^(M)))^(K−1)`.
///
/// `masses` holds `I₀s_m`. The estimate is flagged when some cell has
/// `SNR_m ≥ 0.1`.
pub fn pe_low_snr(i0: f64, lambda_n: f64, masses: &[f64], cell_area: f64, ppm_order: usize) -> Result<PeEstimate> {
    check_order(ppm_order)?;
    if !(lambda_n > 0.0) {
        return domain(format!("noise intensity must be positive, got {lambda_n}"));
    }
    if !(cell_area > 0.0) {
        return domain(format!("cell area must be positive, got {cell_area}"));
    }
    let arg = if i0 > 0.0 {
        let shape_sq: f64 = masses.iter().map(|&m| (m / i0).powi(2)).sum();
        i0 / (2.0 * lambda_n).sqrt() * (shape_sq / cell_area).sqrt()
    } else {
        0.0
    };
    let cell_noise = lambda_n * cell_area;
    let max_snr = masses.iter().fold(0.0f64, |m, &s| m.max(s / cell_noise));
    let mut est = PeEstimate::analytic(pe_from_pairwise_failure(q_function(arg), ppm_order), Method::LowSnr);
    est.regime_warning = max_snr >= LOW_SNR_LIMIT;
    Ok(est)
}

/// `√(Σ s_m² / A^(M))` with `s_m = mass_m / I₀`.
pub fn weight_quality(masses: &[f64], i0: f64, cell_area: f64) -> Result<f64> {
    if !(i0 > 0.0) {
        return domain(format!("beam amplitude must be positive, got {i0}"));
    }
    if !(cell_area > 0.0) {
        return domain(format!("cell area must be positive, got {cell_area}"));
    }
    let sum: f64 = masses.iter().map(|&m| (m / i0).powi(2)).sum();
    Ok((sum / cell_area).sqrt())
}
