//! Poisson photon evidence for one PPM slot.
//!
//! Discrete arrays report per-cell counts `Z_m`, independent Poisson with
//! mean `∬_{A_m} λ_s + λ_n·A^(M)` in the signal slot and `λ_n·A^(M)` in a
//! noise-only slot. Continuous arrays report every photon position: a
//! superposition of a Gaussian cluster truncated to the array and a uniform
//! background.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::beam::BeamParams;
use crate::error::{contract, domain, Result};
use crate::geometry::{ArrayGeometry, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    SignalPlusNoise,
    NoiseOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Counts(Vec<u32>),
    Locations(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotObservation {
    pub kind: SlotKind,
    pub evidence: Evidence,
}

impl SlotObservation {
    pub fn counts(&self) -> Option<&[u32]> {
        match &self.evidence {
            Evidence::Counts(c) => Some(c),
            Evidence::Locations(_) => None,
        }
    }

    pub fn locations(&self) -> Option<&[Point]> {
        match &self.evidence {
            Evidence::Locations(l) => Some(l),
            Evidence::Counts(_) => None,
        }
    }

    /// Total number of photodetections in the slot.
    pub fn photon_count(&self) -> u64 {
        match &self.evidence {
            Evidence::Counts(c) => c.iter().map(|&z| z as u64).sum(),
            Evidence::Locations(l) => l.len() as u64,
        }
    }

    /// Quantizes a continuous observation onto the cells of `geom`.
    pub fn bin(&self, geom: &ArrayGeometry) -> Result<SlotObservation> {
        let Some(points) = self.locations() else {
            return contract("only continuous observations can be binned");
        };
        let mut counts = vec![0u32; geom.cell_count()?];
        for &p in points {
            match geom.cell_of(p)? {
                Some(m) => counts[m] += 1,
                None => return contract(format!("photon at {p:?} lies outside the array")),
            }
        }
        Ok(SlotObservation {
            kind: self.kind,
            evidence: Evidence::Counts(counts),
        })
    }
}

fn check_noise(lambda_n: f64) -> Result<()> {
    if lambda_n >= 0.0 && lambda_n.is_finite() {
        Ok(())
    } else {
        domain(format!("noise intensity must be non-negative, got {lambda_n}"))
    }
}

fn poisson(mean: f64) -> Option<Poisson<f64>> {
    if mean > 0.0 {
        Poisson::new(mean).ok()
    } else {
        None
    }
}

fn draw<R: Rng + ?Sized>(dist: &Option<Poisson<f64>>, rng: &mut R) -> u64 {
    match dist {
        Some(d) => d.sample(rng) as u64,
        None => 0,
    }
}

/// Per-cell Poisson sampler for a fixed (beam, array, noise) triple.
///
/// Construction computes the cell means once; sampling only draws.
#[derive(Debug, Clone)]
pub struct CountSampler {
    signal_mass: Vec<f64>,
    cell_noise: f64,
    signal_slot: Vec<Option<Poisson<f64>>>,
    noise_slot: Option<Poisson<f64>>,
}

impl CountSampler {
    pub fn new(beam: &BeamParams, geom: &ArrayGeometry, lambda_n: f64) -> Result<Self> {
        check_noise(lambda_n)?;
        let cell_noise = lambda_n * geom.cell_area()?;
        let signal_mass = geom
            .cell_regions()?
            .iter()
            .map(|r| beam.cell_signal_mass(r))
            .collect::<Result<Vec<_>>>()?;
        let signal_slot = signal_mass.iter().map(|&s| poisson(s + cell_noise)).collect();
        Ok(Self {
            signal_mass,
            cell_noise,
            signal_slot,
            noise_slot: poisson(cell_noise),
        })
    }

    pub fn cell_count(&self) -> usize {
        self.signal_mass.len()
    }

    /// Signal mass `I₀s_m` per cell.
    pub fn signal_mass(&self) -> &[f64] {
        &self.signal_mass
    }

    /// Noise mass per cell, `λ_n·A^(M)`.
    pub fn cell_noise(&self) -> f64 {
        self.cell_noise
    }

    /// Fills `out` (length `M`) with one slot's counts.
    pub fn sample_into<R: Rng + ?Sized>(&self, kind: SlotKind, rng: &mut R, out: &mut [u32]) {
        debug_assert_eq!(out.len(), self.signal_mass.len());
        match kind {
            SlotKind::SignalPlusNoise => {
                for (z, d) in out.iter_mut().zip(&self.signal_slot) {
                    *z = draw(d, rng) as u32;
                }
            }
            SlotKind::NoiseOnly => {
                for z in out.iter_mut() {
                    *z = draw(&self.noise_slot, rng) as u32;
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, kind: SlotKind, rng: &mut R) -> SlotObservation {
        let mut counts = vec![0; self.cell_count()];
        self.sample_into(kind, rng, &mut counts);
        SlotObservation {
            kind,
            evidence: Evidence::Counts(counts),
        }
    }
}

/// Draws per-cell counts for one slot of a discrete array.
pub fn sample_cell_counts<R: Rng + ?Sized>(
    beam: &BeamParams,
    geom: &ArrayGeometry,
    lambda_n: f64,
    kind: SlotKind,
    rng: &mut R,
) -> Result<SlotObservation> {
    Ok(CountSampler::new(beam, geom, lambda_n)?.sample(kind, rng))
}

/// Smallest per-axis probability of a Gaussian draw landing on the array
/// that the rejection sampler accepts.
const MIN_AXIS_ACCEPTANCE: f64 = 1e-4;

/// Photon-position sampler for a continuous array.
#[derive(Debug, Clone)]
pub struct LocationSampler {
    center: Point,
    spot: f64,
    half_extent: f64,
    signal_count: Option<Poisson<f64>>,
    noise_count: Option<Poisson<f64>>,
}

impl LocationSampler {
    pub fn new(beam: &BeamParams, geom: &ArrayGeometry, lambda_n: f64) -> Result<Self> {
        check_noise(lambda_n)?;
        if !geom.is_continuous() {
            return contract("photon locations are sampled on continuous arrays only");
        }
        let bounds = geom.bounds();
        let captured = beam.cell_signal_mass(&bounds)?;
        if beam.i0() > 0.0 {
            let e = geom.half_extent();
            let c = beam.center();
            let s = beam.spot_size();
            let ax = crate::special::normal_interval(-e, e, c.x, s);
            let ay = crate::special::normal_interval(-e, e, c.y, s);
            if ax.min(ay) < MIN_AXIS_ACCEPTANCE {
                return domain(format!(
                    "beam at {c:?} barely overlaps the array; rejection sampling would stall"
                ));
            }
        }
        Ok(Self {
            center: beam.center(),
            spot: beam.spot_size(),
            half_extent: geom.half_extent(),
            signal_count: poisson(captured),
            noise_count: poisson(lambda_n * geom.total_area()),
        })
    }

    fn truncated_axis<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        // x and y are independent, so truncating each axis to [-e, e]
        // separately is the same as rejecting 2-D points outside the square.
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let v = mean + self.spot * z;
            if v.abs() <= self.half_extent {
                return v;
            }
        }
    }

    /// Appends one slot's photon positions to `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, kind: SlotKind, rng: &mut R, out: &mut Vec<Point>) {
        out.clear();
        if kind == SlotKind::SignalPlusNoise {
            let n = draw(&self.signal_count, rng);
            for _ in 0..n {
                let x = self.truncated_axis(self.center.x, rng);
                let y = self.truncated_axis(self.center.y, rng);
                out.push(Point::new(x, y));
            }
        }
        let n = draw(&self.noise_count, rng);
        let e = self.half_extent;
        for _ in 0..n {
            let x = rng.random_range(-e..=e);
            let y = rng.random_range(-e..=e);
            out.push(Point::new(x, y));
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, kind: SlotKind, rng: &mut R) -> SlotObservation {
        let mut points = Vec::new();
        self.sample_into(kind, rng, &mut points);
        SlotObservation {
            kind,
            evidence: Evidence::Locations(points),
        }
    }
}

/// Draws photon positions for one slot of a continuous array.
pub fn sample_photon_locations<R: Rng + ?Sized>(
    beam: &BeamParams,
    geom: &ArrayGeometry,
    lambda_n: f64,
    kind: SlotKind,
    rng: &mut R,
) -> Result<SlotObservation> {
    Ok(LocationSampler::new(beam, geom, lambda_n)?.sample(kind, rng))
}
