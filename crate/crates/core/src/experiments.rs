//! Monte Carlo harness and experiment families.
//!
//! A trial simulates one K-PPM symbol: slot 0 carries the signal, slots
//! `1..K` are noise only (the error probability does not depend on which
//! slot is transmitted). Photons are always drawn from the true beam;
//! detection uses the weights of `estimated_beam` when one is given.
//!
//! Trials are grouped into fixed chunks of [`CHUNK_TRIALS`]; chunk `c` draws
//! from stream `c` of the scenario seed, so estimates are identical whatever
//! the worker count. Every slot is drawn in full on every trial, which keeps
//! the random stream independent of the receiver and makes sweeps over
//! estimated parameters use common random numbers.

use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::analytics::{self, clt_moments};
use crate::beam::BeamParams;
use crate::error::{contract, domain, Error, Result};
use crate::estimate::{Method, PeEstimate};
use crate::geometry::{ArrayGeometry, Point};
use crate::photon::{CountSampler, LocationSampler, SlotKind};
use crate::receiver::{compute_weights, weighted_statistic, PointScorer, TieRule};
use crate::rng::{derive_seed, stream_rng, SimRng};

pub const CHUNK_TRIALS: u64 = 4096;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_MAX_TRIALS: u64 = 10_000_000;
/// Beam centers are averaged uniformly over `[-0.75, 0.75]²`.
pub const POSITION_RANGE: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Beam that generates the photons.
    pub beam: BeamParams,
    pub geom: ArrayGeometry,
    /// Background intensity, photons/m²/slot.
    pub lambda_n: f64,
    pub ppm_order: usize,
    /// Beam assumed by the receiver; `None` means the true beam is known.
    pub estimated_beam: Option<BeamParams>,
    pub trials: u64,
    /// When set, trials are doubled until the 95% half-width drops to
    /// `max(0.1·P_e, 1e-4)` or this cap is reached.
    pub max_trials: Option<u64>,
    pub seed: u64,
    pub tie_rule: TieRule,
}

impl Scenario {
    pub fn new(
        beam: BeamParams,
        geom: ArrayGeometry,
        lambda_n: f64,
        ppm_order: usize,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let s = Self {
            beam,
            geom,
            lambda_n,
            ppm_order,
            estimated_beam: None,
            trials,
            max_trials: None,
            seed,
            tie_rule: TieRule::Strict,
        };
        s.validate()?;
        Ok(s)
    }

    /// Noise given as `n_b`, mean background photons per slot over the array.
    pub fn with_noise_photons(
        beam: BeamParams,
        geom: ArrayGeometry,
        noise_photons: f64,
        ppm_order: usize,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let lambda_n = noise_photons / geom.total_area();
        Self::new(beam, geom, lambda_n, ppm_order, trials, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return domain("trials must be at least 1");
        }
        if self.ppm_order < 2 {
            return domain(format!("PPM order must be at least 2, got {}", self.ppm_order));
        }
        if !(self.lambda_n >= 0.0 && self.lambda_n.is_finite()) {
            return domain(format!("noise intensity must be non-negative, got {}", self.lambda_n));
        }
        if let Some(cap) = self.max_trials {
            if cap < self.trials {
                return domain("max_trials must not be below trials");
            }
        }
        Ok(())
    }

    /// `n_b = λ_n·A_d`.
    pub fn noise_photons(&self) -> f64 {
        self.lambda_n * self.geom.total_area()
    }

    /// Beam the receiver is matched to.
    pub fn receiver_beam(&self) -> &BeamParams {
        self.estimated_beam.as_ref().unwrap_or(&self.beam)
    }

    pub fn with_geometry(&self, geom: ArrayGeometry) -> Self {
        Self { geom, ..self.clone() }
    }

    /// Moves the true beam to `center`, carrying any estimate along so the
    /// estimation offset is preserved.
    pub fn with_center(&self, center: Point) -> Self {
        let old = self.beam.center();
        let estimated_beam = self.estimated_beam.map(|e| {
            let c = e.center();
            e.with_center(Point::new(c.x + center.x - old.x, c.y + center.y - old.y))
        });
        Self {
            beam: self.beam.with_center(center),
            estimated_beam,
            ..self.clone()
        }
    }
}

/// Which slot-level simulator a scenario needs.
enum TrialKernel {
    Discrete {
        sampler: CountSampler,
        weights: Vec<f64>,
    },
    Continuous {
        sampler: LocationSampler,
        scorer: PointScorer,
    },
}

impl TrialKernel {
    fn build(s: &Scenario) -> Result<Self> {
        s.validate()?;
        if s.geom.is_continuous() {
            Ok(Self::Continuous {
                sampler: LocationSampler::new(&s.beam, &s.geom, s.lambda_n)?,
                scorer: PointScorer::new(s.receiver_beam(), s.lambda_n)?,
            })
        } else {
            Ok(Self::Discrete {
                sampler: CountSampler::new(&s.beam, &s.geom, s.lambda_n)?,
                weights: compute_weights(s.receiver_beam(), &s.geom, s.lambda_n)?,
            })
        }
    }

    /// Number of symbol errors in `trials` trials using `rng`.
    fn run_chunk(&self, s: &Scenario, trials: u64, rng: &mut SimRng) -> u64 {
        let k = s.ppm_order;
        let mut stats = vec![0.0; k];
        let mut errors = 0;
        match self {
            Self::Discrete { sampler, weights } => {
                let mut counts = vec![0u32; sampler.cell_count()];
                for _ in 0..trials {
                    for (slot, stat) in stats.iter_mut().enumerate() {
                        let kind = if slot == 0 {
                            SlotKind::SignalPlusNoise
                        } else {
                            SlotKind::NoiseOnly
                        };
                        sampler.sample_into(kind, rng, &mut counts);
                        *stat = weighted_statistic(&counts, weights);
                    }
                    errors += is_error(&stats, s.tie_rule, rng) as u64;
                }
            }
            Self::Continuous { sampler, scorer } => {
                let mut points = Vec::new();
                for _ in 0..trials {
                    for (slot, stat) in stats.iter_mut().enumerate() {
                        let kind = if slot == 0 {
                            SlotKind::SignalPlusNoise
                        } else {
                            SlotKind::NoiseOnly
                        };
                        sampler.sample_into(kind, rng, &mut points);
                        *stat = scorer.slot_statistic(&points);
                    }
                    errors += is_error(&stats, s.tie_rule, rng) as u64;
                }
            }
        }
        errors
    }
}

/// Slot 0 is the transmitted one.
fn is_error(stats: &[f64], rule: TieRule, rng: &mut SimRng) -> bool {
    let signal = stats[0];
    let mut ties = 1;
    for &s in &stats[1..] {
        if s > signal {
            return true;
        }
        if s == signal {
            ties += 1;
        }
    }
    match rule {
        TieRule::Strict => ties > 1,
        TieRule::Random => ties > 1 && rng.random_range(0..ties) != 0,
    }
}

/// Runs chunks `[first_chunk, ..)` covering `trials` trials; returns errors.
fn run_trials(kernel: &TrialKernel, s: &Scenario, first_chunk: u64, trials: u64) -> u64 {
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS);
            let mut rng = stream_rng(s.seed, first_chunk + c);
            kernel.run_chunk(s, n, &mut rng)
        })
        .sum()
}

fn precise_enough(est: &PeEstimate) -> bool {
    est.half_width_95 <= (0.1 * est.value).max(1e-4)
}

/// Monte Carlo symbol-error probability for a discrete or continuous array.
pub fn run_monte_carlo(s: &Scenario) -> Result<PeEstimate> {
    let kernel = TrialKernel::build(s)?;
    let mut done = s.trials;
    let mut errors = run_trials(&kernel, s, 0, done);
    let mut est = PeEstimate::from_counts(errors, done);
    if let Some(cap) = s.max_trials {
        while !precise_enough(&est) && done < cap {
            let extra = done.min(cap - done);
            let first_chunk = done.div_ceil(CHUNK_TRIALS);
            errors += run_trials(&kernel, s, first_chunk, extra);
            done += extra;
            est = PeEstimate::from_counts(errors, done);
        }
    }
    Ok(est)
}

/// Monte Carlo over the continuous-array detector, the lower bound on every
/// discrete array's error probability.
pub fn continuous_lower_bound(s: &Scenario) -> Result<PeEstimate> {
    if !s.geom.is_continuous() {
        return contract("lower-bound runs need a continuous array");
    }
    run_monte_carlo(s)
}

fn signal_masses(beam: &BeamParams, geom: &ArrayGeometry) -> Result<Vec<f64>> {
    geom.cell_regions()?.iter().map(|r| beam.cell_signal_mass(r)).collect()
}

/// Closed-form or semi-analytic estimate for a discrete scenario.
///
/// `SkellamExact` needs `M = 1`; `MonteCarlo` defers to [`run_monte_carlo`].
pub fn analytic_estimate(s: &Scenario, method: Method) -> Result<PeEstimate> {
    s.validate()?;
    if method == Method::MonteCarlo {
        return run_monte_carlo(s);
    }
    let masses = signal_masses(&s.beam, &s.geom)?;
    let cell_area = s.geom.cell_area()?;
    let cell_noise = s.lambda_n * cell_area;
    match method {
        Method::SkellamExact => {
            if masses.len() != 1 {
                return contract("the Skellam form applies to single-detector arrays only");
            }
            analytics::pe_single_detector(masses[0], cell_noise, s.ppm_order)
        }
        Method::GaussianApprox => {
            let weights = compute_weights(s.receiver_beam(), &s.geom, s.lambda_n)?;
            let mp = clt_moments(&masses, &weights, cell_noise)?;
            analytics::pe_gaussian_approx(&mp, s.ppm_order)
        }
        Method::LowSnr => analytics::pe_low_snr(s.beam.i0(), s.lambda_n, &masses, cell_area, s.ppm_order),
        Method::MonteCarlo => unreachable!(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionAverage {
    /// Mean over centers. The interval is `1.96·sd/√count` (the single
    /// run's interval when `count == 1`); `trials_used` sums all runs.
    pub estimate: PeEstimate,
    /// Sample standard deviation of the per-center values.
    pub spread: f64,
    pub per_center: Vec<(Point, PeEstimate)>,
}

/// Centers drawn uniformly on `[-0.75, 0.75]²` from the scenario seed.
pub fn sample_centers(seed: u64, count: usize) -> Vec<Point> {
    let mut rng = stream_rng(derive_seed(seed, u64::MAX), 0);
    (0..count)
        .map(|_| {
            let x = rng.random_range(-POSITION_RANGE..=POSITION_RANGE);
            let y = rng.random_range(-POSITION_RANGE..=POSITION_RANGE);
            Point::new(x, y)
        })
        .collect()
}

/// Averages `estimator` over the given beam centers. The run for center `i`
/// uses seed `derive_seed(s.seed, i)`.
pub fn average_over_centers<F>(s: &Scenario, centers: &[Point], estimator: F) -> Result<PositionAverage>
where
    F: Fn(&Scenario) -> Result<PeEstimate>,
{
    if centers.is_empty() {
        return domain("position averaging needs at least one center");
    }
    let per_center = centers
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut sub = s.with_center(c);
            sub.seed = derive_seed(s.seed, i as u64);
            estimator(&sub).map(|e| (c, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_center.len() as f64;
    let mean = per_center.iter().map(|(_, e)| e.value).sum::<f64>() / n;
    let spread = if per_center.len() > 1 {
        (per_center.iter().map(|(_, e)| (e.value - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let first = per_center[0].1;
    let half = if per_center.len() > 1 {
        crate::estimate::Z95 * spread / n.sqrt()
    } else {
        first.half_width_95
    };
    let estimate = PeEstimate {
        value: mean,
        half_width_95: half,
        ci95_low: if per_center.len() > 1 {
            (mean - half).max(0.0)
        } else {
            first.ci95_low
        },
        ci95_high: if per_center.len() > 1 {
            (mean + half).min(1.0)
        } else {
            first.ci95_high
        },
        method: first.method,
        trials_used: per_center.iter().map(|(_, e)| e.trials_used).sum(),
        regime_warning: per_center.iter().any(|(_, e)| e.regime_warning),
    };
    Ok(PositionAverage {
        estimate,
        spread,
        per_center,
    })
}

/// Monte Carlo error probability averaged over `count` random beam centers.
pub fn average_over_positions(s: &Scenario, count: usize) -> Result<PositionAverage> {
    if count == 0 {
        return domain("position averaging needs at least one center");
    }
    average_over_centers(s, &sample_centers(s.seed, count), run_monte_carlo)
}

/// Receiver parameter perturbed in a mismatch sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MismatchParameter {
    /// Estimated spot size `ρ̂(z)`; the estimate keeps the true amplitude `I₀`.
    Rho,
    /// Estimated peak-SNR factor `Î_p(z)/λ_n`.
    SnrRatio,
    /// Estimated beam center abscissa `x̂₀` (`ŷ₀` stays exact).
    X0,
}

impl MismatchParameter {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Rho => "rho",
            Self::SnrRatio => "snr_ratio",
            Self::X0 => "x0",
        }
    }

    /// Receiver beam with this parameter set to `value`.
    pub fn apply(&self, s: &Scenario, value: f64) -> Result<BeamParams> {
        let base = *s.receiver_beam();
        match self {
            Self::Rho => base.with_spot_size(value),
            Self::SnrRatio => {
                if !(s.lambda_n > 0.0) {
                    return domain("an SNR-ratio estimate needs positive noise");
                }
                let spot = base.spot_size();
                base.with_i0(value * s.lambda_n * spot * spot)
            }
            Self::X0 => Ok(base.with_center(Point::new(value, base.center().y))),
        }
    }
}

impl FromStr for MismatchParameter {
    type Err = Error;

    fn from_str(tag: &str) -> Result<Self> {
        match tag {
            "rho" => Ok(Self::Rho),
            "snr_ratio" => Ok(Self::SnrRatio),
            "x0" => Ok(Self::X0),
            other => domain(format!(
                "unknown mismatch parameter '{other}' (expected rho, snr_ratio or x0)"
            )),
        }
    }
}

/// Error probability versus an estimated receiver parameter. Every grid
/// point reuses the scenario seed, so all points see the same photons.
pub fn mismatch_sweep(s: &Scenario, parameter: MismatchParameter, grid: &[f64]) -> Result<Vec<(f64, PeEstimate)>> {
    if grid.is_empty() {
        return domain("mismatch grid is empty");
    }
    grid.iter()
        .map(|&v| {
            let mut point = s.clone();
            point.estimated_beam = Some(parameter.apply(s, v)?);
            run_monte_carlo(&point).map(|e| (v, e))
        })
        .collect()
}

/// Real-operation count of some estimator, as a function of `M` and `K`.
pub trait EstimatorCost {
    fn label(&self) -> String;
    fn multiplies(&self, cells: u64, ppm_order: u64) -> u64;
    fn additions(&self, cells: u64, ppm_order: u64) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorModel {
    #[default]
    None,
    /// Centroid estimator, about `2MK` of each operation.
    Centroid,
    /// `c·MK` multiplies and `d·MK` additions.
    PerCellSlot { multiplies: u64, additions: u64 },
}

impl EstimatorCost for EstimatorModel {
    fn label(&self) -> String {
        match self {
            Self::None => "none".into(),
            Self::Centroid => "centroid".into(),
            Self::PerCellSlot { multiplies, additions } => {
                format!("{multiplies}MK mul + {additions}MK add")
            }
        }
    }

    fn multiplies(&self, cells: u64, ppm_order: u64) -> u64 {
        match self {
            Self::None => 0,
            Self::Centroid => 2 * cells * ppm_order,
            Self::PerCellSlot { multiplies, .. } => multiplies * cells * ppm_order,
        }
    }

    fn additions(&self, cells: u64, ppm_order: u64) -> u64 {
        match self {
            Self::None => 0,
            Self::Centroid => 2 * cells * ppm_order,
            Self::PerCellSlot { additions, .. } => additions * cells * ppm_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpCount {
    pub label: String,
    pub multiplies: u64,
    pub additions: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityReport {
    /// Detection cost, `K·M` each.
    pub real_multiplies: u64,
    pub real_additions: u64,
    /// `C_{x₀,y₀}(M)`.
    pub estimator_cost_position: OpCount,
    /// `C_{ρ(z)}(M)`.
    pub estimator_cost_rho: OpCount,
}

impl ComplexityReport {
    pub fn total_multiplies(&self) -> u64 {
        self.real_multiplies + self.estimator_cost_position.multiplies + self.estimator_cost_rho.multiplies
    }

    pub fn total_additions(&self) -> u64 {
        self.real_additions + self.estimator_cost_position.additions + self.estimator_cost_rho.additions
    }
}

fn op_count(model: &dyn EstimatorCost, cells: u64, k: u64) -> OpCount {
    OpCount {
        label: model.label(),
        multiplies: model.multiplies(cells, k),
        additions: model.additions(cells, k),
    }
}

/// Per-symbol operation counts for an `M`-cell array and `K`-PPM.
pub fn complexity_report(
    cells: u64,
    ppm_order: u64,
    position: &dyn EstimatorCost,
    rho: &dyn EstimatorCost,
) -> Result<ComplexityReport> {
    if cells == 0 {
        return domain("M must be at least 1");
    }
    if ppm_order < 2 {
        return domain(format!("PPM order must be at least 2, got {ppm_order}"));
    }
    Ok(ComplexityReport {
        real_multiplies: cells * ppm_order,
        real_additions: cells * ppm_order,
        estimator_cost_position: op_count(position, cells, ppm_order),
        estimator_cost_rho: op_count(rho, cells, ppm_order),
    })
}
