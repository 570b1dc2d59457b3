//! Run configuration: a TOML document with units spelled out in key names.

use std::f64::consts::PI;
use std::path::PathBuf;

use fpa_core::beam::{DEFAULT_WAVELENGTH, LIGHT_SPEED, PLANCK};
use fpa_core::experiments::{EstimatorModel, DEFAULT_MAX_TRIALS, DEFAULT_TRIALS};
use fpa_core::{signal_photons, BeamParams, LinkBudget, MismatchParameter, Point, TieRule};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    NoiseSweep,
    MSweep,
    PositionAverage,
    Mismatch,
    LowerBound,
    Complexity,
    WeightQuality,
}

impl ExperimentKind {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::NoiseSweep => "noise_sweep",
            Self::MSweep => "m_sweep",
            Self::PositionAverage => "position_average",
            Self::Mismatch => "mismatch",
            Self::LowerBound => "lower_bound",
            Self::Complexity => "complexity",
            Self::WeightQuality => "weight_quality",
        }
    }
}

/// How each error probability is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Skellam for `M = 1`, Gaussian for `M ≥ 64`, Monte Carlo in between.
    /// Mismatch runs always simulate.
    #[default]
    Auto,
    MonteCarlo,
    Skellam,
    Gaussian,
    LowSnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieChoice {
    #[default]
    Strict,
    Random,
}

impl From<TieChoice> for TieRule {
    fn from(t: TieChoice) -> Self {
        match t {
            TieChoice::Strict => TieRule::Strict,
            TieChoice::Random => TieRule::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    #[default]
    None,
    Centroid,
}

impl From<EstimatorChoice> for EstimatorModel {
    fn from(e: EstimatorChoice) -> Self {
        match e {
            EstimatorChoice::None => EstimatorModel::None,
            EstimatorChoice::Centroid => EstimatorModel::Centroid,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    seed: Option<u64>,
    trials: Option<u64>,
    max_trials: Option<u64>,
    #[serde(default)]
    adaptive: bool,
    ppm_order: Option<usize>,
    #[serde(default)]
    method: MethodChoice,
    #[serde(default)]
    tie_rule: TieChoice,
    output_path: Option<PathBuf>,
    array: RawArray,
    beam: Option<RawBeam>,
    noise: Option<RawNoise>,
    sweep: Option<RawSweep>,
    positions: Option<RawPositions>,
    complexity: Option<RawComplexity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArray {
    half_extent_m: Option<f64>,
    cells: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    spot_size_m: Option<f64>,
    waist_m: Option<f64>,
    distance_m: Option<f64>,
    wavelength_m: Option<f64>,
    center_m: Option<[f64; 2]>,
    peak_intensity_per_m2: Option<f64>,
    n_s: Option<f64>,
    link: Option<RawLink>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    rx_power_w: f64,
    slot_width_s: f64,
    efficiency: Option<f64>,
    wavelength_m: Option<f64>,
    planck_j_s: Option<f64>,
    light_speed_m_per_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    n_b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: String,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPositions {
    count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComplexity {
    #[serde(default)]
    position_estimator: EstimatorChoice,
    #[serde(default)]
    rho_estimator: EstimatorChoice,
}

/// The swept quantity of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    NoisePhotons,
    Mismatch(MismatchParameter),
}

impl Axis {
    pub fn column(&self) -> &'static str {
        match self {
            Axis::NoisePhotons => "n_b",
            Axis::Mismatch(MismatchParameter::Rho) => "rho_hat_m",
            Axis::Mismatch(MismatchParameter::SnrRatio) => "snr_ratio_hat",
            Axis::Mismatch(MismatchParameter::X0) => "x0_hat_m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub trials: u64,
    /// Trial cap for adaptive escalation; `None` runs exactly `trials`.
    pub max_trials: Option<u64>,
    pub ppm_order: usize,
    pub method: MethodChoice,
    pub tie_rule: TieRule,
    pub output_path: Option<PathBuf>,
    pub half_extent: f64,
    pub cells: Vec<usize>,
    /// `None` for experiments that need no beam (complexity).
    pub beam: Option<BeamParams>,
    /// Fixed noise level `n_b`, when the experiment does not sweep it.
    pub noise_photons: Option<f64>,
    pub sweep: Option<Sweep>,
    pub positions: usize,
    pub position_estimator: EstimatorModel,
    pub rho_estimator: EstimatorModel,
}

fn invalid<T>(path: &str, message: impl Into<String>) -> Result<T> {
    Err(CliError::Config {
        path: path.to_string(),
        message: message.into(),
    })
}

fn positive(path: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        invalid(path, format!("must be a positive number, got {v}"))
    }
}

fn core_error(path: &str, e: fpa_core::Error) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: e.to_string(),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Syntax(e.to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config {
            path: if path == "." { "<root>".into() } else { path },
            message: e.into_inner().message().to_string(),
        }
    })?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<RunConfig> {
    let kind = raw.experiment;
    let ppm_order = raw.ppm_order.unwrap_or(8);
    if ppm_order < 2 {
        return invalid("ppm_order", format!("PPM needs at least 2 slots, got {ppm_order}"));
    }
    let trials = raw.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return invalid("trials", "must be at least 1");
    }
    let max_trials = match (raw.max_trials, raw.adaptive) {
        (Some(cap), _) if cap < trials => {
            return invalid("max_trials", format!("{cap} is below trials = {trials}"));
        }
        (Some(cap), _) => Some(cap),
        (None, true) => Some(DEFAULT_MAX_TRIALS.max(trials)),
        (None, false) => None,
    };

    let half_extent = positive("array.half_extent_m", raw.array.half_extent_m.unwrap_or(1.0))?;
    if raw.array.cells.is_empty() {
        return invalid("array.cells", "needs at least one cell count");
    }
    for &m in &raw.array.cells {
        let side = (m as f64).sqrt().round() as usize;
        if m == 0 || side * side != m {
            return invalid("array.cells", format!("{m} is not a positive perfect square"));
        }
    }

    if raw.method == MethodChoice::Skellam && raw.array.cells.iter().any(|&m| m != 1) {
        return invalid(
            "method",
            "skellam applies to single-cell arrays only (array.cells = [1])",
        );
    }

    let needs_beam = kind != ExperimentKind::Complexity;
    let beam = match (&raw.beam, needs_beam) {
        (Some(b), _) => Some(build_beam(b)?),
        (None, true) => return invalid("beam", "missing table"),
        (None, false) => None,
    };

    let needs_fixed_noise = matches!(kind, ExperimentKind::MSweep | ExperimentKind::Mismatch);
    let noise_photons = match &raw.noise {
        Some(n) => {
            if !(n.n_b > 0.0 && n.n_b.is_finite()) {
                return invalid("noise.n_b", format!("must be a positive number, got {}", n.n_b));
            }
            Some(n.n_b)
        }
        None if needs_fixed_noise => return invalid("noise.n_b", "missing key"),
        None => None,
    };

    let sweep = match kind {
        ExperimentKind::NoiseSweep | ExperimentKind::PositionAverage | ExperimentKind::LowerBound => {
            let s = raw
                .sweep
                .as_ref()
                .map_or_else(|| invalid("sweep", "missing table"), Ok)?;
            if s.axis != "n_b" {
                return invalid("sweep.axis", format!("{} sweeps n_b, got '{}'", kind.tag(), s.axis));
            }
            Some(sweep_values(Axis::NoisePhotons, &s.values)?)
        }
        ExperimentKind::Mismatch => {
            let s = raw
                .sweep
                .as_ref()
                .map_or_else(|| invalid("sweep", "missing table"), Ok)?;
            let p: MismatchParameter = s.axis.parse().map_err(|e| core_error("sweep.axis", e))?;
            Some(sweep_values(Axis::Mismatch(p), &s.values)?)
        }
        _ => {
            if raw.sweep.is_some() {
                return invalid("sweep", format!("{} takes no sweep", kind.tag()));
            }
            None
        }
    };

    let positions = match (&raw.positions, kind) {
        (Some(p), ExperimentKind::PositionAverage) if p.count >= 1 => p.count,
        (Some(_), ExperimentKind::PositionAverage) => return invalid("positions.count", "must be at least 1"),
        (None, ExperimentKind::PositionAverage) => return invalid("positions.count", "missing key"),
        (Some(_), _) => return invalid("positions", format!("{} does not average positions", kind.tag())),
        (None, _) => 1,
    };

    let (position_estimator, rho_estimator) = raw
        .complexity
        .as_ref()
        .map(|c| (c.position_estimator.into(), c.rho_estimator.into()))
        .unwrap_or_default();

    Ok(RunConfig {
        experiment: kind,
        seed: raw.seed.unwrap_or(0),
        trials,
        max_trials,
        ppm_order,
        method: raw.method,
        tie_rule: raw.tie_rule.into(),
        output_path: raw.output_path,
        half_extent,
        cells: raw.array.cells,
        beam,
        noise_photons,
        sweep,
        positions,
        position_estimator,
        rho_estimator,
    })
}

fn sweep_values(axis: Axis, values: &[f64]) -> Result<Sweep> {
    if values.is_empty() {
        return invalid("sweep.values", "needs at least one value");
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return invalid("sweep.values", format!("{v} is not finite"));
    }
    let must_be_positive = !matches!(axis, Axis::Mismatch(MismatchParameter::X0));
    if must_be_positive {
        if let Some(v) = values.iter().find(|&&v| v <= 0.0) {
            return invalid(
                "sweep.values",
                format!("{} values must be positive, got {v}", axis.column()),
            );
        }
    }
    Ok(Sweep {
        axis,
        values: values.to_vec(),
    })
}

fn build_beam(b: &RawBeam) -> Result<BeamParams> {
    let center = b.center_m.unwrap_or([0.0, 0.0]);
    let center = Point::new(center[0], center[1]);
    let wavelength = b.wavelength_m.unwrap_or(DEFAULT_WAVELENGTH);

    let unit = match (b.spot_size_m, b.waist_m) {
        (Some(_), Some(_)) => return invalid("beam", "give either spot_size_m or waist_m, not both"),
        (Some(spot), None) => {
            if b.distance_m.is_some() {
                return invalid("beam.distance_m", "only used together with waist_m");
            }
            BeamParams::new(1.0, spot, wavelength, 0.0, center).map_err(|e| core_error("beam.spot_size_m", e))?
        }
        (None, Some(waist)) => BeamParams::new(1.0, waist, wavelength, b.distance_m.unwrap_or(0.0), center)
            .map_err(|e| core_error("beam.waist_m", e))?,
        (None, None) => return invalid("beam.spot_size_m", "missing key (or give waist_m)"),
    };

    let given = [b.peak_intensity_per_m2.is_some(), b.n_s.is_some(), b.link.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return invalid(
            "beam",
            "give exactly one of peak_intensity_per_m2, n_s or a [beam.link] table",
        );
    }
    let spot = unit.spot_size();
    let i0 = if let Some(peak) = b.peak_intensity_per_m2 {
        if !(peak >= 0.0 && peak.is_finite()) {
            return invalid(
                "beam.peak_intensity_per_m2",
                format!("must be non-negative, got {peak}"),
            );
        }
        peak * spot * spot
    } else if let Some(n_s) = b.n_s {
        if !(n_s >= 0.0 && n_s.is_finite()) {
            return invalid("beam.n_s", format!("must be non-negative, got {n_s}"));
        }
        n_s / (2.0 * PI)
    } else {
        let l = b.link.as_ref().expect("checked above");
        let budget = LinkBudget {
            rx_power: l.rx_power_w,
            slot_width: l.slot_width_s,
            efficiency: l.efficiency.unwrap_or(0.5),
            wavelength: l.wavelength_m.unwrap_or(wavelength),
            planck: l.planck_j_s.unwrap_or(PLANCK),
            light_speed: l.light_speed_m_per_s.unwrap_or(LIGHT_SPEED),
        };
        budget.validate().map_err(|e| core_error("beam.link", e))?;
        signal_photons(&budget) / (2.0 * PI)
    };
    unit.with_i0(i0).map_err(|e| core_error("beam", e))
}
