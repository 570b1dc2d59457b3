//! Experiment dispatch: one result row per (axis point, M).

use fpa_core::analytics::weight_quality;
use fpa_core::experiments::{
    analytic_estimate, average_over_centers, average_over_positions, complexity_report, continuous_lower_bound,
    sample_centers, EstimatorCost,
};
use fpa_core::{ArrayGeometry, BeamParams, Method, PeEstimate, Scenario};

use crate::config::{Axis, ExperimentKind, MethodChoice, RunConfig};
use crate::error::{CliError, Result};

/// Column names of the error-probability experiments after the axis column.
pub const PE_COLUMNS: [&str; 6] = ["M", "pe", "pe_ci95", "method", "trials", "seed"];

pub const COMPLEXITY_COLUMNS: [&str; 12] = [
    "M",
    "K",
    "detection_multiplies",
    "detection_additions",
    "position_estimator",
    "position_multiplies",
    "position_additions",
    "rho_estimator",
    "rho_multiplies",
    "rho_additions",
    "total_multiplies",
    "total_additions",
];

pub const WEIGHT_QUALITY_COLUMNS: [&str; 2] = ["M", "weight_quality"];

/// Label used in the `M` column for the continuous array.
pub const CONTINUOUS_LABEL: &str = "continuous";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Approximations evaluated outside their regime, one line each.
    pub warnings: Vec<String>,
}

/// Probabilities are printed with 17 significant digits so they parse back
/// to the same `f64`.
pub fn format_probability(p: f64) -> String {
    format!("{p:.16e}")
}

fn pe_header(axis: &str) -> Vec<String> {
    std::iter::once(axis).chain(PE_COLUMNS).map(String::from).collect()
}

fn resolve_method(choice: MethodChoice, cells: usize, simulate: bool) -> Method {
    match choice {
        MethodChoice::Auto if simulate => Method::MonteCarlo,
        MethodChoice::Auto if cells == 1 => Method::SkellamExact,
        MethodChoice::Auto if cells >= 64 => Method::GaussianApprox,
        MethodChoice::Auto | MethodChoice::MonteCarlo => Method::MonteCarlo,
        MethodChoice::Skellam => Method::SkellamExact,
        MethodChoice::Gaussian => Method::GaussianApprox,
        MethodChoice::LowSnr => Method::LowSnr,
    }
}

struct PeRunner<'a> {
    cfg: &'a RunConfig,
    beam: BeamParams,
    table: Table,
}

impl<'a> PeRunner<'a> {
    fn new(cfg: &'a RunConfig, axis: &str) -> Result<Self> {
        let beam = cfg.beam.ok_or_else(|| CliError::Config {
            path: "beam".into(),
            message: "missing table".into(),
        })?;
        Ok(Self {
            cfg,
            beam,
            table: Table {
                header: pe_header(axis),
                ..Table::default()
            },
        })
    }

    fn scenario(&self, geom: ArrayGeometry, n_b: f64) -> Result<Scenario> {
        let mut s =
            Scenario::with_noise_photons(self.beam, geom, n_b, self.cfg.ppm_order, self.cfg.trials, self.cfg.seed)?;
        s.max_trials = self.cfg.max_trials;
        s.tie_rule = self.cfg.tie_rule;
        Ok(s)
    }

    fn discrete(&self, cells: usize, n_b: f64) -> Result<Scenario> {
        self.scenario(ArrayGeometry::with_cell_count(self.cfg.half_extent, cells)?, n_b)
    }

    fn push(&mut self, axis_value: f64, m_label: String, est: PeEstimate, seed: u64) {
        if est.regime_warning {
            self.table.warnings.push(format!(
                "{} estimate at {} = {axis_value}, M = {m_label} is outside its low-SNR regime",
                est.method, self.table.header[0],
            ));
        }
        self.table.rows.push(vec![
            axis_value.to_string(),
            m_label,
            format_probability(est.value),
            format_probability(est.half_width_95),
            est.method.tag().to_string(),
            est.trials_used.to_string(),
            seed.to_string(),
        ]);
    }

    fn into_table(self) -> Table {
        self.table
    }
}

fn noise_axis(cfg: &RunConfig) -> &[f64] {
    match &cfg.sweep {
        Some(s) if s.axis == Axis::NoisePhotons => &s.values,
        _ => &[],
    }
}

fn noise_sweep(cfg: &RunConfig, with_bound: bool) -> Result<Table> {
    let mut r = PeRunner::new(cfg, "n_b")?;
    for &n_b in noise_axis(cfg) {
        for &m in &cfg.cells {
            let s = r.discrete(m, n_b)?;
            let est = analytic_estimate(&s, resolve_method(cfg.method, m, false))?;
            r.push(n_b, m.to_string(), est, s.seed);
        }
        if with_bound {
            let s = r.scenario(ArrayGeometry::continuous(cfg.half_extent)?, n_b)?;
            let est = continuous_lower_bound(&s)?;
            r.push(n_b, CONTINUOUS_LABEL.into(), est, s.seed);
        }
    }
    Ok(r.into_table())
}

fn m_sweep(cfg: &RunConfig) -> Result<Table> {
    let n_b = fixed_noise(cfg)?;
    let mut r = PeRunner::new(cfg, "n_b")?;
    for &m in &cfg.cells {
        let s = r.discrete(m, n_b)?;
        let est = analytic_estimate(&s, resolve_method(cfg.method, m, false))?;
        r.push(n_b, m.to_string(), est, s.seed);
    }
    Ok(r.into_table())
}

fn position_average(cfg: &RunConfig) -> Result<Table> {
    let mut r = PeRunner::new(cfg, "n_b")?;
    for &n_b in noise_axis(cfg) {
        for &m in &cfg.cells {
            let s = r.discrete(m, n_b)?;
            let method = resolve_method(cfg.method, m, false);
            let avg = if method == Method::MonteCarlo {
                average_over_positions(&s, cfg.positions)?
            } else {
                let centers = sample_centers(s.seed, cfg.positions);
                average_over_centers(&s, &centers, |sub| analytic_estimate(sub, method))?
            };
            r.push(n_b, m.to_string(), avg.estimate, s.seed);
        }
    }
    Ok(r.into_table())
}

fn mismatch(cfg: &RunConfig) -> Result<Table> {
    let n_b = fixed_noise(cfg)?;
    let sweep = cfg.sweep.as_ref().expect("validated");
    let Axis::Mismatch(parameter) = sweep.axis else {
        unreachable!("validated mismatch axis")
    };
    let mut r = PeRunner::new(cfg, sweep.axis.column())?;
    for &v in &sweep.values {
        for &m in &cfg.cells {
            let mut s = r.discrete(m, n_b)?;
            s.estimated_beam = Some(parameter.apply(&s, v)?);
            let est = analytic_estimate(&s, resolve_method(cfg.method, m, true))?;
            r.push(v, m.to_string(), est, s.seed);
        }
    }
    Ok(r.into_table())
}

fn fixed_noise(cfg: &RunConfig) -> Result<f64> {
    cfg.noise_photons.ok_or_else(|| CliError::Config {
        path: "noise.n_b".into(),
        message: "missing key".into(),
    })
}

fn complexity(cfg: &RunConfig) -> Result<Table> {
    let header = COMPLEXITY_COLUMNS.iter().map(|c| c.to_string()).collect();
    let k = cfg.ppm_order as u64;
    let rows = cfg
        .cells
        .iter()
        .map(|&m| {
            let rep = complexity_report(m as u64, k, &cfg.position_estimator, &cfg.rho_estimator)?;
            Ok(vec![
                m.to_string(),
                k.to_string(),
                rep.real_multiplies.to_string(),
                rep.real_additions.to_string(),
                cfg.position_estimator.label(),
                rep.estimator_cost_position.multiplies.to_string(),
                rep.estimator_cost_position.additions.to_string(),
                cfg.rho_estimator.label(),
                rep.estimator_cost_rho.multiplies.to_string(),
                rep.estimator_cost_rho.additions.to_string(),
                rep.total_multiplies().to_string(),
                rep.total_additions().to_string(),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(Table {
        header,
        rows,
        warnings: Vec::new(),
    })
}

fn weight_quality_table(cfg: &RunConfig) -> Result<Table> {
    let beam = cfg.beam.expect("validated");
    let header = WEIGHT_QUALITY_COLUMNS.iter().map(|c| c.to_string()).collect();
    let rows = cfg
        .cells
        .iter()
        .map(|&m| {
            let geom = ArrayGeometry::with_cell_count(cfg.half_extent, m)?;
            let masses = geom
                .cell_regions()?
                .iter()
                .map(|r| beam.cell_signal_mass(r))
                .collect::<fpa_core::Result<Vec<_>>>()?;
            let q = weight_quality(&masses, beam.i0(), geom.cell_area()?)?;
            Ok(vec![m.to_string(), format_probability(q)])
        })
        .collect::<Result<_>>()?;
    Ok(Table {
        header,
        rows,
        warnings: Vec::new(),
    })
}

/// Runs the configured experiment and returns its result table.
pub fn run(cfg: &RunConfig) -> Result<Table> {
    match cfg.experiment {
        ExperimentKind::NoiseSweep => noise_sweep(cfg, false),
        ExperimentKind::LowerBound => noise_sweep(cfg, true),
        ExperimentKind::MSweep => m_sweep(cfg),
        ExperimentKind::PositionAverage => position_average(cfg),
        ExperimentKind::Mismatch => mismatch(cfg),
        ExperimentKind::Complexity => complexity(cfg),
        ExperimentKind::WeightQuality => weight_quality_table(cfg),
    }
}
