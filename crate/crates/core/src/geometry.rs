//! Square focal-plane array geometry.
//!
//! The array spans `[-e, e]²` and is either partitioned into `n × n` equal
//! square cells (discrete mode, `M = n²`) or treated as a continuous
//! position-sensitive surface. Cells are indexed row-major starting from the
//! bottom-left corner: cell `m` sits in row `m / n` (counting up in `y`) and
//! column `m % n` (counting right in `x`). Every per-cell vector in the crate
//! (masses, weights, counts) uses this order.

use crate::error::{contract, domain, Result};

/// A point on the focal plane, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// The square `[-h, h]²`.
    pub fn centered_square(half: f64) -> Self {
        Self::new(-half, half, -half, half)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Discrete {
        cells_per_side: usize,
    },
    /// The `M → ∞` limit: exact photon positions are observed.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    half_extent: f64,
    layout: Layout,
    /// Cell edge coordinates along one axis, `n + 1` entries. Empty in
    /// continuous mode.
    edges: Vec<f64>,
}

impl ArrayGeometry {
    pub fn discrete(half_extent: f64, cells_per_side: usize) -> Result<Self> {
        check_extent(half_extent)?;
        if cells_per_side == 0 {
            return domain("cells_per_side must be at least 1");
        }
        let n = cells_per_side;
        let edges = (0..=n)
            .map(|k| {
                if k == n {
                    half_extent
                } else {
                    half_extent * ((2 * k) as f64 - n as f64) / n as f64
                }
            })
            .collect();
        Ok(Self {
            half_extent,
            layout: Layout::Discrete { cells_per_side },
            edges,
        })
    }

    /// Builds a discrete array with `cell_count` cells. `cell_count` must be
    /// a perfect square.
    pub fn with_cell_count(half_extent: f64, cell_count: usize) -> Result<Self> {
        let side = cell_count.isqrt();
        if side == 0 || side * side != cell_count {
            return domain(format!("cell count {cell_count} is not a positive perfect square"));
        }
        Self::discrete(half_extent, side)
    }

    pub fn continuous(half_extent: f64) -> Result<Self> {
        check_extent(half_extent)?;
        Ok(Self {
            half_extent,
            layout: Layout::Continuous,
            edges: Vec::new(),
        })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.layout, Layout::Continuous)
    }

    /// The whole array as a rectangle.
    pub fn bounds(&self) -> Rect {
        Rect::centered_square(self.half_extent)
    }

    /// Total array area `A_d`.
    pub fn total_area(&self) -> f64 {
        4.0 * self.half_extent * self.half_extent
    }

    pub fn cells_per_side(&self) -> Result<usize> {
        match self.layout {
            Layout::Discrete { cells_per_side } => Ok(cells_per_side),
            Layout::Continuous => contract("continuous array has no cells"),
        }
    }

    /// Number of cells `M`.
    pub fn cell_count(&self) -> Result<usize> {
        self.cells_per_side().map(|n| n * n)
    }

    /// Uniform cell area `A^(M) = 4e²/M`.
    pub fn cell_area(&self) -> Result<f64> {
        let m = self.cell_count()?;
        Ok(self.total_area() / m as f64)
    }

    /// Region of cell `m`.
    pub fn cell_region(&self, m: usize) -> Result<Rect> {
        let n = self.cells_per_side()?;
        if m >= n * n {
            return contract(format!("cell index {m} out of range for M = {}", n * n));
        }
        let (row, col) = (m / n, m % n);
        Ok(Rect::new(
            self.edges[col],
            self.edges[col + 1],
            self.edges[row],
            self.edges[row + 1],
        ))
    }

    pub fn cell_regions(&self) -> Result<Vec<Rect>> {
        let m = self.cell_count()?;
        (0..m).map(|i| self.cell_region(i)).collect()
    }

    /// Index of the cell containing `p`, or `None` when `p` lies outside the
    /// array. Points on an interior edge belong to the cell above/right of it.
    pub fn cell_of(&self, p: Point) -> Result<Option<usize>> {
        let n = self.cells_per_side()?;
        if !self.bounds().contains(p) {
            return Ok(None);
        }
        let col = self.axis_bin(p.x, n);
        let row = self.axis_bin(p.y, n);
        Ok(Some(row * n + col))
    }

    fn axis_bin(&self, v: f64, n: usize) -> usize {
        let width = 2.0 * self.half_extent / n as f64;
        let mut k = (((v + self.half_extent) / width).floor().max(0.0) as usize).min(n - 1);
        // settle against the stored edges so binning agrees with cell_region
        while k > 0 && v < self.edges[k] {
            k -= 1;
        }
        while k + 1 < n && v >= self.edges[k + 1] {
            k += 1;
        }
        k
    }
}

fn check_extent(half_extent: f64) -> Result<()> {
    if half_extent > 0.0 && half_extent.is_finite() {
        Ok(())
    } else {
        domain(format!("array half extent must be positive, got {half_extent}"))
    }
}
