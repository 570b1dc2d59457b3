use std::fmt;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    MonteCarlo,
    SkellamExact,
    GaussianApprox,
    LowSnr,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::SkellamExact => "skellam-exact",
            Method::GaussianApprox => "gaussian-approx",
            Method::LowSnr => "low-snr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A symbol-error probability with its provenance.
///
/// Analytic estimates carry a zero-width interval and `trials_used == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeEstimate {
    pub value: f64,
    pub half_width_95: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub method: Method,
    pub trials_used: u64,
    /// Set when an approximation is evaluated outside its intended regime.
    pub regime_warning: bool,
}

impl PeEstimate {
    pub fn analytic(value: f64, method: Method) -> Self {
        let value = value.clamp(0.0, 1.0);
        Self {
            value,
            half_width_95: 0.0,
            ci95_low: value,
            ci95_high: value,
            method,
            trials_used: 0,
            regime_warning: false,
        }
    }

    /// Error fraction `errors / trials` with a Wilson score interval.
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        assert!(trials > 0 && errors <= trials);
        let n = trials as f64;
        let p = errors as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            value: p,
            half_width_95: half,
            ci95_low: (center - half).clamp(0.0, p),
            ci95_high: (center + half).clamp(p, 1.0),
            method: Method::MonteCarlo,
            trials_used: trials,
            regime_warning: false,
        }
    }

    /// Binomial standard error `sqrt(p(1-p)/n)` at probability `p` for this
    /// estimate's trial count. Zero for analytic estimates.
    pub fn standard_error_at(&self, p: f64) -> f64 {
        if self.trials_used == 0 {
            0.0
        } else {
            (p * (1.0 - p) / self.trials_used as f64).sqrt()
        }
    }

    /// Standard error at the estimate's own value.
    pub fn standard_error(&self) -> f64 {
        self.standard_error_at(self.value)
    }
}
