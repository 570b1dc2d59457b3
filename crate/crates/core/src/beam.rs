//! Gaussian beam intensity on the focal plane and the photon link budget.
//!
//! Intensities are photons per m² per PPM slot. The beam amplitude `i0`
//! therefore already includes the slot width and the photoconversion
//! efficiency; the peak intensity is `i0 / ρ(z)²` and the total mass over
//! the infinite plane is `2π·i0`.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::geometry::{Point, Rect};
use crate::special::normal_interval;

/// Default carrier wavelength, 1550 nm.
pub const DEFAULT_WAVELENGTH: f64 = 1550e-9;
/// Planck's constant in J·s, at the precision used for the reference link.
pub const PLANCK: f64 = 6.62607004e-34;
/// Speed of light, rounded to 3e8 m/s.
pub const LIGHT_SPEED: f64 = 3e8;

/// Spot size `ρ(z) = ρ₀·sqrt(1 + (λz / πρ₀²)²)`.
pub fn spot_size(waist: f64, wavelength: f64, distance: f64) -> Result<f64> {
    if !(waist > 0.0 && waist.is_finite()) {
        return domain(format!("beam waist must be positive, got {waist}"));
    }
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return domain(format!("wavelength must be positive, got {wavelength}"));
    }
    if !(distance >= 0.0 && distance.is_finite()) {
        return domain(format!("link distance must be non-negative, got {distance}"));
    }
    let r = wavelength * distance / (PI * waist * waist);
    Ok(waist * r.hypot(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    i0: f64,
    waist: f64,
    wavelength: f64,
    distance: f64,
    center: Point,
    spot: f64,
}

impl BeamParams {
    pub fn new(i0: f64, waist: f64, wavelength: f64, distance: f64, center: Point) -> Result<Self> {
        if !(i0 >= 0.0 && i0.is_finite()) {
            return domain(format!("beam amplitude must be non-negative, got {i0}"));
        }
        if !(center.x.is_finite() && center.y.is_finite()) {
            return domain("beam center must be finite");
        }
        let spot = spot_size(waist, wavelength, distance)?;
        Ok(Self {
            i0,
            waist,
            wavelength,
            distance,
            center,
            spot,
        })
    }

    /// Beam observed at its waist (`z = 0`), so `ρ(z)` equals `spot`.
    pub fn from_spot_size(i0: f64, spot: f64, center: Point) -> Result<Self> {
        Self::new(i0, spot, DEFAULT_WAVELENGTH, 0.0, center)
    }

    /// Beam with peak intensity `I_p = i0 / ρ²`.
    pub fn from_peak_intensity(peak: f64, spot: f64, center: Point) -> Result<Self> {
        if !(peak >= 0.0 && peak.is_finite()) {
            return domain(format!("peak intensity must be non-negative, got {peak}"));
        }
        Self::from_spot_size(peak * spot * spot, spot, center)
    }

    pub fn i0(&self) -> f64 {
        self.i0
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// `ρ(z)`.
    pub fn spot_size(&self) -> f64 {
        self.spot
    }

    /// `I_p(z) = i0 / ρ(z)²`.
    pub fn peak_intensity(&self) -> f64 {
        self.i0 / (self.spot * self.spot)
    }

    /// Mass over the whole plane, `2π·i0`.
    pub fn total_mass(&self) -> f64 {
        2.0 * PI * self.i0
    }

    pub fn with_center(mut self, center: Point) -> Self {
        self.center = center;
        self
    }

    pub fn with_i0(self, i0: f64) -> Result<Self> {
        Self::new(i0, self.waist, self.wavelength, self.distance, self.center)
    }

    /// Same amplitude and center, spot size replaced by `spot` (as a waist
    /// observed at `z = 0`).
    pub fn with_spot_size(self, spot: f64) -> Result<Self> {
        Self::new(self.i0, spot, self.wavelength, 0.0, self.center)
    }

    /// `λ_s(x, y)`.
    pub fn intensity_at(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center.x;
        let dy = y - self.center.y;
        let s2 = self.spot * self.spot;
        self.i0 / s2 * (-(dx * dx + dy * dy) / (2.0 * s2)).exp()
    }

    /// `∬_rect λ_s dx dy`, in closed form.
    ///
    /// The Gaussian is separable, so the integral is
    /// `2π·i0·P_x·P_y` with `P_x`, `P_y` the normal interval probabilities
    /// of the rectangle's sides.
    pub fn cell_signal_mass(&self, rect: &Rect) -> Result<f64> {
        if rect.is_degenerate() {
            return domain(format!("rectangle has no area: {rect:?}"));
        }
        if self.i0 == 0.0 {
            return Ok(0.0);
        }
        let px = normal_interval(rect.x_min, rect.x_max, self.center.x, self.spot);
        let py = normal_interval(rect.y_min, rect.y_max, self.center.y, self.spot);
        Ok(self.total_mass() * px * py)
    }
}

/// Received-power link budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Received laser power `P_R`, W.
    pub rx_power: f64,
    /// PPM slot width `T_s`, s.
    pub slot_width: f64,
    /// Photoconversion efficiency `η`.
    pub efficiency: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    pub planck: f64,
    pub light_speed: f64,
}

impl LinkBudget {
    /// Budget with the default physical constants.
    pub fn new(rx_power: f64, slot_width: f64, efficiency: f64, wavelength: f64) -> Result<Self> {
        let b = Self {
            rx_power,
            slot_width,
            efficiency,
            wavelength,
            planck: PLANCK,
            light_speed: LIGHT_SPEED,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rx_power", self.rx_power),
            ("slot_width", self.slot_width),
            ("wavelength", self.wavelength),
            ("planck", self.planck),
            ("light_speed", self.light_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return domain(format!("efficiency must lie in [0, 1], got {}", self.efficiency));
        }
        Ok(())
    }

    /// Energy of one photon, `hc/λ`.
    pub fn photon_energy(&self) -> f64 {
        self.planck * self.light_speed / self.wavelength
    }
}

/// Mean detected signal photons per slot, `n_s = P_R·T_s·η / (hc/λ)`.
pub fn signal_photons(budget: &LinkBudget) -> f64 {
    budget.rx_power * budget.slot_width * budget.efficiency / budget.photon_energy()
}
