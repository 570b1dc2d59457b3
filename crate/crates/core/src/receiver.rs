//! Hard-decision maximum-likelihood PPM detectors.
//!
//! Discrete arrays: each slot is scored by `Σ_m α_m Z_m` with
//! `α_m = ln(1 + SNR_m)`, and the largest score wins.
//! Continuous arrays: each slot is scored by the Poisson point-process
//! log-likelihood ratio `Σ_i ln(1 + λ_s(x_i)/λ_n)`. Terms shared by every
//! slot of a symbol are dropped since they cannot change the argmax.
//!
//! Slot and symbol indices are 0-based.

use rand::Rng;

use crate::beam::BeamParams;
use crate::error::{contract, domain, Result};
use crate::geometry::{ArrayGeometry, Point};
use crate::photon::SlotObservation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// A tie for the maximum is never a correct decision.
    #[default]
    Strict,
    /// Ties are broken uniformly at random among the tied slots.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub ppm_order: usize,
    pub lambda_n: f64,
    pub weights: Vec<f64>,
    pub tie_rule: TieRule,
}

impl ReceiverConfig {
    pub fn new(ppm_order: usize, lambda_n: f64, weights: Vec<f64>, tie_rule: TieRule) -> Result<Self> {
        if ppm_order < 2 {
            return domain(format!("PPM order must be at least 2, got {ppm_order}"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return domain(format!("weights must be finite and non-negative, found {w}"));
        }
        Ok(Self {
            ppm_order,
            lambda_n,
            weights,
            tie_rule,
        })
    }

    /// Receiver matched to `beam`: weights come from [`compute_weights`].
    pub fn matched(
        beam: &BeamParams,
        geom: &ArrayGeometry,
        lambda_n: f64,
        ppm_order: usize,
        tie_rule: TieRule,
    ) -> Result<Self> {
        Self::new(ppm_order, lambda_n, compute_weights(beam, geom, lambda_n)?, tie_rule)
    }
}

/// `α_m = ln(1 + mass_m / cell_noise)`.
pub fn weights_from_masses(masses: &[f64], cell_noise: f64) -> Result<Vec<f64>> {
    if !(cell_noise > 0.0 && cell_noise.is_finite()) {
        return domain(format!(
            "noise mass per cell must be positive (α_m is unbounded otherwise), got {cell_noise}"
        ));
    }
    Ok(masses.iter().map(|&s| (s / cell_noise).ln_1p()).collect())
}

/// Optimal per-cell weights for a discrete array.
pub fn compute_weights(beam: &BeamParams, geom: &ArrayGeometry, lambda_n: f64) -> Result<Vec<f64>> {
    if !(lambda_n > 0.0) {
        return domain(format!("noise intensity must be positive, got {lambda_n}"));
    }
    let cell_noise = lambda_n * geom.cell_area()?;
    let masses = geom
        .cell_regions()?
        .iter()
        .map(|r| beam.cell_signal_mass(r))
        .collect::<Result<Vec<_>>>()?;
    weights_from_masses(&masses, cell_noise)
}

/// `Σ_m α_m z_m`.
pub fn weighted_statistic(counts: &[u32], weights: &[f64]) -> f64 {
    counts.iter().zip(weights).map(|(&z, &a)| a * z as f64).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    /// First slot attaining the maximum statistic.
    pub decided_symbol: usize,
    pub statistics: Vec<f64>,
    /// Number of slots attaining the maximum.
    pub maxima: usize,
}

impl DetectionOutcome {
    pub fn from_statistics(statistics: Vec<f64>) -> Self {
        let (decided_symbol, maxima) = argmax(&statistics);
        Self {
            decided_symbol,
            statistics,
            maxima,
        }
    }

    pub fn is_tied(&self) -> bool {
        self.maxima > 1
    }

    /// Symbol chosen under `rule`. Strict keeps the first maximum.
    pub fn decide<R: Rng + ?Sized>(&self, rule: TieRule, rng: &mut R) -> usize {
        match rule {
            TieRule::Strict => self.decided_symbol,
            TieRule::Random if self.maxima > 1 => {
                let pick = rng.random_range(0..self.maxima);
                let best = self.statistics[self.decided_symbol];
                self.statistics
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s == best)
                    .nth(pick)
                    .map(|(k, _)| k)
                    .unwrap_or(self.decided_symbol)
            }
            TieRule::Random => self.decided_symbol,
        }
    }

    /// Scores the decision against the transmitted symbol.
    pub fn is_correct<R: Rng + ?Sized>(&self, transmitted: usize, rule: TieRule, rng: &mut R) -> bool {
        match rule {
            TieRule::Strict => self.decided_symbol == transmitted && self.maxima == 1,
            TieRule::Random => self.decide(rule, rng) == transmitted,
        }
    }
}

/// Index of the first maximum and how many entries share it.
pub(crate) fn argmax(values: &[f64]) -> (usize, usize) {
    let mut best = 0;
    let mut ties = 0;
    for (k, &v) in values.iter().enumerate() {
        if k == 0 || v > values[best] {
            best = k;
            ties = 1;
        } else if v == values[best] {
            ties += 1;
        }
    }
    (best, ties)
}

fn check_slots(slots: &[SlotObservation], ppm_order: usize) -> Result<()> {
    if slots.len() != ppm_order {
        return contract(format!("expected {ppm_order} slot observations, got {}", slots.len()));
    }
    Ok(())
}

/// Weighted-count ML detection over the K slots of one symbol.
pub fn detect_discrete(slots: &[SlotObservation], cfg: &ReceiverConfig) -> Result<DetectionOutcome> {
    check_slots(slots, cfg.ppm_order)?;
    let stats = slots
        .iter()
        .map(|obs| match obs.counts() {
            Some(c) if c.len() == cfg.weights.len() => Ok(weighted_statistic(c, &cfg.weights)),
            Some(c) => contract(format!(
                "slot has {} cell counts but receiver has {} weights",
                c.len(),
                cfg.weights.len()
            )),
            None => contract("discrete detector given a continuous observation"),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionOutcome::from_statistics(stats))
}

/// Precomputed per-photon log-likelihood term for a continuous array.
#[derive(Debug, Clone, Copy)]
pub struct PointScorer {
    center: Point,
    inv_two_var: f64,
    peak_snr: f64,
}

impl PointScorer {
    pub fn new(beam: &BeamParams, lambda_n: f64) -> Result<Self> {
        if !(lambda_n > 0.0 && lambda_n.is_finite()) {
            return domain(format!("noise intensity must be positive, got {lambda_n}"));
        }
        let s = beam.spot_size();
        Ok(Self {
            center: beam.center(),
            inv_two_var: 1.0 / (2.0 * s * s),
            peak_snr: beam.peak_intensity() / lambda_n,
        })
    }

    /// `ln(1 + λ_s(p)/λ_n)`.
    pub fn score(&self, p: Point) -> f64 {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        (self.peak_snr * (-(dx * dx + dy * dy) * self.inv_two_var).exp()).ln_1p()
    }

    pub fn slot_statistic(&self, points: &[Point]) -> f64 {
        points.iter().map(|&p| self.score(p)).sum()
    }
}

/// Log-likelihood ratio of one continuous-array slot, `Σ ln(1 + λ_s/λ_n)`.
pub fn continuous_slot_statistic(obs: &SlotObservation, beam: &BeamParams, lambda_n: f64) -> Result<f64> {
    let Some(points) = obs.locations() else {
        return contract("continuous statistic needs photon locations");
    };
    Ok(PointScorer::new(beam, lambda_n)?.slot_statistic(points))
}

/// ML detection for a continuous array: argmax of the per-slot log-likelihood ratio.
pub fn detect_continuous(slots: &[SlotObservation], beam: &BeamParams, lambda_n: f64) -> Result<DetectionOutcome> {
    if slots.len() < 2 {
        return contract("a PPM symbol has at least two slots");
    }
    let scorer = PointScorer::new(beam, lambda_n)?;
    let stats = slots
        .iter()
        .map(|obs| match obs.locations() {
            Some(p) => Ok(scorer.slot_statistic(p)),
            None => contract("continuous detector given per-cell counts"),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionOutcome::from_statistics(stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon::{Evidence, SlotKind};
    use crate::rng::stream_rng;

    fn counts(c: &[u32]) -> SlotObservation {
        SlotObservation {
            kind: SlotKind::NoiseOnly,
            evidence: Evidence::Counts(c.to_vec()),
        }
    }

    fn points(p: &[(f64, f64)]) -> SlotObservation {
        SlotObservation {
            kind: SlotKind::NoiseOnly,
            evidence: Evidence::Locations(p.iter().map(|&(x, y)| Point::new(x, y)).collect()),
        }
    }

    fn fig_beam() -> BeamParams {
        BeamParams::from_peak_intensity(200.0, 0.2, Point::ORIGIN).unwrap()
    }

    #[test]
    fn weights_dark_beam_are_zero() {
        let beam = BeamParams::from_spot_size(0.0, 0.2, Point::ORIGIN).unwrap();
        let g = ArrayGeometry::with_cell_count(1.0, 16).unwrap();
        assert!(compute_weights(&beam, &g, 6.0).unwrap().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn weight_of_snr_e_minus_one_is_one() {
        let w = weights_from_masses(&[std::f64::consts::E - 1.0], 1.0).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrant_weights_symmetric() {
        // quadrant mass ≈ 50.26 / 4, noise per quadrant = 6 · 1
        let g = ArrayGeometry::with_cell_count(1.0, 4).unwrap();
        let w = compute_weights(&fig_beam(), &g, 6.0).unwrap();
        let quadrant = fig_beam().cell_signal_mass(&g.cell_region(0).unwrap()).unwrap();
        assert!((quadrant - 12.566).abs() < 1e-3);
        for a in &w {
            assert!((a - w[0]).abs() < 1e-14);
            assert!((a - (1.0 + quadrant / 6.0).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn noiseless_weights_rejected() {
        let g = ArrayGeometry::with_cell_count(1.0, 4).unwrap();
        assert!(matches!(
            compute_weights(&fig_beam(), &g, 0.0),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn all_zero_counts_tie() {
        let cfg = ReceiverConfig::new(4, 1.0, vec![1.0, 2.0], TieRule::Strict).unwrap();
        let slots: Vec<_> = (0..4).map(|_| counts(&[0, 0])).collect();
        let out = detect_discrete(&slots, &cfg).unwrap();
        assert_eq!(out.maxima, 4);
        let mut rng = stream_rng(0, 0);
        for k in 0..4 {
            assert!(!out.is_correct(k, TieRule::Strict, &mut rng));
        }
    }

    #[test]
    fn single_cell_ignores_weight_value() {
        let slots = vec![counts(&[5]), counts(&[7]), counts(&[3])];
        for w in [0.01, 1.0, 42.0] {
            let cfg = ReceiverConfig::new(3, 1.0, vec![w], TieRule::Strict).unwrap();
            assert_eq!(detect_discrete(&slots, &cfg).unwrap().decided_symbol, 1);
        }
    }

    #[test]
    fn extra_peak_photon_wins_iff_weight_positive() {
        let base = [2, 3, 1, 0];
        let mut peak = base;
        peak[1] += 1;
        let slots = vec![counts(&peak), counts(&base)];
        let cfg = ReceiverConfig::new(2, 1.0, vec![0.5, 1.5, 0.5, 0.1], TieRule::Strict).unwrap();
        let out = detect_discrete(&slots, &cfg).unwrap();
        assert_eq!((out.decided_symbol, out.maxima), (0, 1));
        let cfg = ReceiverConfig::new(2, 1.0, vec![0.5, 0.0, 0.5, 0.1], TieRule::Strict).unwrap();
        assert!(detect_discrete(&slots, &cfg).unwrap().is_tied());
    }

    #[test]
    fn detector_contract_checks() {
        let cfg = ReceiverConfig::new(2, 1.0, vec![1.0, 1.0], TieRule::Strict).unwrap();
        assert!(detect_discrete(&[counts(&[1, 1])], &cfg).is_err());
        assert!(detect_discrete(&[counts(&[1, 1]), counts(&[1])], &cfg).is_err());
        assert!(detect_discrete(&[counts(&[1, 1]), points(&[(0.0, 0.0)])], &cfg).is_err());
        assert!(detect_continuous(&[points(&[]), counts(&[1])], &fig_beam(), 6.0).is_err());
        assert!(ReceiverConfig::new(1, 1.0, vec![1.0], TieRule::Strict).is_err());
        assert!(ReceiverConfig::new(2, 1.0, vec![f64::INFINITY], TieRule::Strict).is_err());
        assert!(ReceiverConfig::new(2, 1.0, vec![-0.1], TieRule::Strict).is_err());
    }

    #[test]
    fn continuous_statistic_values() {
        let beam = fig_beam();
        assert_eq!(continuous_slot_statistic(&points(&[]), &beam, 6.0).unwrap(), 0.0);
        let s = continuous_slot_statistic(&points(&[(0.0, 0.0)]), &beam, 6.0).unwrap();
        assert!((s - (1.0f64 + 200.0 / 6.0).ln()).abs() < 1e-12);
        assert!((s - 3.536).abs() < 1e-3);
        assert!(continuous_slot_statistic(&points(&[]), &beam, 0.0).is_err());
        assert!(continuous_slot_statistic(&counts(&[1]), &beam, 6.0).is_err());
    }

    #[test]
    fn continuous_statistic_radially_monotone() {
        let beam = BeamParams::from_peak_intensity(50.0, 0.2, Point::new(0.2, 0.2)).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in (0..=40).rev() {
            let r = k as f64 * 0.02;
            let s =
                continuous_slot_statistic(&points(&[(0.2 + r * 0.6, 0.2 - r * 0.8), (-0.5, 0.9)]), &beam, 6.0).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn continuous_detection_ordering() {
        let beam = fig_beam();
        let slots = vec![points(&[(0.9, -0.9)]), points(&[(0.0, 0.0)]), points(&[])];
        let out = detect_continuous(&slots, &beam, 6.0).unwrap();
        assert_eq!((out.decided_symbol, out.maxima), (1, 1));
        let empty = vec![points(&[]), points(&[]), points(&[])];
        assert_eq!(detect_continuous(&empty, &beam, 6.0).unwrap().maxima, 3);
    }

    #[test]
    fn random_ties_pick_among_maxima() {
        let out = DetectionOutcome::from_statistics(vec![1.0, 3.0, 0.5, 3.0]);
        let mut rng = stream_rng(11, 0);
        let mut seen = [0usize; 4];
        for _ in 0..1000 {
            seen[out.decide(TieRule::Random, &mut rng)] += 1;
        }
        assert_eq!(seen[0] + seen[2], 0);
        assert!(seen[1] > 400 && seen[3] > 400);
        assert_eq!(out.decide(TieRule::Strict, &mut rng), 1);
    }
}
