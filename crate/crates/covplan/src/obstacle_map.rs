//! Occupancy grid construction and exact Euclidean distance transforms.
//!
//! Circular obstacles are stamped into a binary grid; [`compute_edt`] turns
//! the grid into a [`DistanceField`] holding, for every cell, the metric
//! distance to the nearest occupied cell. The trajectory optimizer queries the
//! field with bilinear interpolation ([`DistanceField::query_distance`]) and
//! differentiates it ([`DistanceField::query_gradient`]) for clearance costs.
//!
//! The transform is the exact two-pass separable squared-distance transform
//! (Felzenszwalb-style parabola envelope), not a chamfer approximation: on any
//! grid it reproduces the all-pairs nearest-occupied-cell scan bit for bit.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Point2;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid world bounds: {0}")]
    InvalidBounds(String),
    #[error("grid step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("{axis} = {value} is outside [{lo}, {hi}] by more than one cell")]
    OutOfBounds {
        axis: char,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// Axis-aligned rectangle the planner operates in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl WorldBounds {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, GridError> {
        let b = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(GridError::InvalidBounds(format!(
                "need x_min < x_max and y_min < y_max, got x [{}, {}], y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

/// Circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Point2,
    pub radius: f64,
}

/// Binary occupancy grid, row-major with `cell(ix, iy)` at index `iy * nx + ix`.
///
/// Cell `(0, 0)` is centered on `(x_min, y_min)`; cell `(ix, iy)` on
/// `origin + step * (ix, iy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    cells: Vec<bool>,
    nx: usize,
    ny: usize,
    step: f64,
    origin: Point2,
    bounds: WorldBounds,
}

impl OccupancyGrid {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn bounds(&self) -> WorldBounds {
        self.bounds
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.cells[iy * self.nx + ix]
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + ix as f64 * self.step,
            self.origin.y + iy as f64 * self.step,
        )
    }
}

/// Per-cell metric distance to the nearest occupied cell, same layout as the
/// grid it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    distances: Vec<f64>,
    nx: usize,
    ny: usize,
    step: f64,
    origin: Point2,
    bounds: WorldBounds,
}

/// Result of an interpolated distance lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSample {
    /// Interpolated clearance in meters; 0 when the query was out of bounds.
    pub distance: f64,
    pub out_of_bounds: bool,
}

/// Result of a distance-gradient lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSample {
    /// d(clearance)/d(position), dimensionless.
    pub gradient: Point2,
    /// True when the query sat within one cell of the grid border, where the
    /// interpolation cell is clamped and the derivative is one-sided.
    pub near_border: bool,
    pub out_of_bounds: bool,
}

/// Number of cells needed to span `extent` at resolution `step`.
///
/// A small relative epsilon keeps exact multiples (e.g. 20 m / 0.1 m) from
/// spilling into an extra cell through floating-point rounding.
fn cell_count(extent: f64, step: f64) -> usize {
    ((extent / step) - 1e-9).ceil().max(1.0) as usize
}

/// Round-half-up on each axis, then clamp into the grid.
///
/// Positions may overhang the bounds by at most one cell (`step`); anything
/// further out is an error naming the offending coordinate.
pub fn pos2grid(position: Point2, grid: &OccupancyGrid) -> Result<(usize, usize), GridError> {
    let b = grid.bounds;
    let step = grid.step;
    for (axis, value, lo, hi) in [
        ('x', position.x, b.x_min, b.x_max),
        ('y', position.y, b.y_min, b.y_max),
    ] {
        if value < lo - step || value > hi + step {
            return Err(GridError::OutOfBounds {
                axis,
                value,
                lo,
                hi,
            });
        }
    }
    let round_half_up = |v: f64| (v + 0.5).floor();
    let ix = round_half_up((position.x - grid.origin.x) / step);
    let iy = round_half_up((position.y - grid.origin.y) / step);
    Ok((
        (ix.max(0.0) as usize).min(grid.nx - 1),
        (iy.max(0.0) as usize).min(grid.ny - 1),
    ))
}

/// Stamp circular obstacles into a fresh binary grid.
///
/// A cell is occupied iff its center lies within `radius` of some obstacle
/// center. Obstacles may overhang or sit outside the bounds; only in-bounds
/// cells are ever written.
pub fn build_occupancy(
    obstacles: &[Obstacle],
    bounds: WorldBounds,
    step: f64,
) -> Result<OccupancyGrid, GridError> {
    bounds.validate()?;
    if !(step > 0.0) {
        return Err(GridError::InvalidStep(step));
    }
    let nx = cell_count(bounds.width(), step);
    let ny = cell_count(bounds.height(), step);
    let origin = Point2::new(bounds.x_min, bounds.y_min);
    let mut cells = vec![false; nx * ny];

    for obs in obstacles {
        // Cell-index window covering the disk, clipped to the grid.
        let lo_x = ((obs.center.x - obs.radius - origin.x) / step).floor().max(0.0) as usize;
        let hi_x = (((obs.center.x + obs.radius - origin.x) / step).ceil().max(0.0) as usize)
            .min(nx.saturating_sub(1));
        let lo_y = ((obs.center.y - obs.radius - origin.y) / step).floor().max(0.0) as usize;
        let hi_y = (((obs.center.y + obs.radius - origin.y) / step).ceil().max(0.0) as usize)
            .min(ny.saturating_sub(1));
        if lo_x >= nx || lo_y >= ny {
            continue;
        }
        let r_sq = obs.radius * obs.radius;
        for iy in lo_y..=hi_y {
            let cy = origin.y + iy as f64 * step;
            for ix in lo_x..=hi_x {
                let cx = origin.x + ix as f64 * step;
                let dx = cx - obs.center.x;
                let dy = cy - obs.center.y;
                if dx * dx + dy * dy <= r_sq {
                    cells[iy * nx + ix] = true;
                }
            }
        }
    }

    Ok(OccupancyGrid {
        cells,
        nx,
        ny,
        step,
        origin,
        bounds,
    })
}

/// 1D lower envelope of parabolas (squared-distance transform).
///
/// `f` holds per-sample squared offsets; the result at `q` is
/// `min_p ((q - p)^2 + f[p])`. All values are exact integers in f64, so the
/// output is exact as well.
fn squared_dt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    debug_assert_eq!(out.len(), n);
    if n == 1 {
        out[0] = f[0];
        return;
    }
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        loop {
            let p = v[k] as f64;
            let s = ((f[q] + qf * qf) - (f[v[k]] + p * p)) / (2.0 * qf - 2.0 * p);
            if s <= z[k] {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        out[q] = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance transform of an occupancy grid.
///
/// Every cell gets `step * ||c - o||` for the nearest occupied cell `o`
/// (cell-index metric), zero on occupied cells. A fully free grid gets the
/// sentinel `hypot(nx * step, ny * step)` (the full grid diagonal) everywhere.
pub fn compute_edt(grid: &OccupancyGrid) -> DistanceField {
    let (nx, ny) = (grid.nx, grid.ny);
    let step = grid.step;
    let diagonal = (nx as f64 * step).hypot(ny as f64 * step);

    if grid.occupied_count() == 0 {
        return DistanceField {
            distances: vec![diagonal; nx * ny],
            nx,
            ny,
            step,
            origin: grid.origin,
            bounds: grid.bounds,
        };
    }

    // Pass 1: per column, integer cell distance to the nearest occupied cell
    // along y. `big` exceeds any in-grid distance, so parabolas seeded from
    // empty columns can never win in pass 2.
    let big = (nx + ny) as f64;
    let mut col_dist = vec![big; nx * ny];
    for ix in 0..nx {
        let mut d = big;
        for iy in 0..ny {
            d = if grid.cells[iy * nx + ix] {
                0.0
            } else {
                (d + 1.0).min(big)
            };
            col_dist[iy * nx + ix] = d;
        }
        d = col_dist[(ny - 1) * nx + ix];
        for iy in (0..ny).rev() {
            d = if grid.cells[iy * nx + ix] {
                0.0
            } else {
                (d + 1.0).min(big)
            };
            let c = &mut col_dist[iy * nx + ix];
            *c = c.min(d);
            d = *c;
        }
    }

    // Pass 2: per row, parabola envelope over squared column distances.
    let mut distances = vec![0.0f64; nx * ny];
    let mut f = vec![0.0f64; nx];
    let mut row_sq = vec![0.0f64; nx];
    for iy in 0..ny {
        for ix in 0..nx {
            let g = col_dist[iy * nx + ix];
            f[ix] = g * g;
        }
        squared_dt_1d(&f, &mut row_sq);
        for ix in 0..nx {
            distances[iy * nx + ix] = step * row_sq[ix].sqrt();
        }
    }

    DistanceField {
        distances,
        nx,
        ny,
        step,
        origin: grid.origin,
        bounds: grid.bounds,
    }
}

impl DistanceField {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn bounds(&self) -> WorldBounds {
        self.bounds
    }

    /// Stored (cell-center) distance.
    pub fn cell_distance(&self, ix: usize, iy: usize) -> f64 {
        self.distances[iy * self.nx + ix]
    }

    /// Interpolation-cell data at a clamped grid coordinate: base index,
    /// fraction, and whether the raw coordinate was clamped.
    ///
    /// Fractions within 1e-9 of the lattice snap onto it, so a query at a
    /// cell center reproduces the stored value exactly even when the center
    /// coordinate itself picked up rounding (e.g. `ix * 0.1`).
    fn interp_axis(&self, raw: f64, n: usize) -> (usize, f64, bool) {
        let clamped = raw.clamp(0.0, (n - 1) as f64);
        let i0 = (clamped.floor() as usize).min(n.saturating_sub(2));
        let mut frac = clamped - i0 as f64;
        if frac < 1e-9 {
            frac = 0.0;
        } else if frac > 1.0 - 1e-9 {
            frac = 1.0;
        }
        (i0, frac, raw != clamped)
    }

    /// Bilinear interpolation of the four surrounding cell distances.
    ///
    /// Out-of-bounds positions are treated as maximally unsafe: distance 0,
    /// flagged in the sample.
    pub fn query_distance(&self, position: Point2) -> DistanceSample {
        if !self.bounds.contains(position) {
            return DistanceSample {
                distance: 0.0,
                out_of_bounds: true,
            };
        }
        let gx = (position.x - self.origin.x) / self.step;
        let gy = (position.y - self.origin.y) / self.step;
        let (ix, fx, _) = self.interp_axis(gx, self.nx);
        let (iy, fy, _) = self.interp_axis(gy, self.ny);
        let ix1 = (ix + 1).min(self.nx - 1);
        let iy1 = (iy + 1).min(self.ny - 1);
        let d00 = self.distances[iy * self.nx + ix];
        let d10 = self.distances[iy * self.nx + ix1];
        let d01 = self.distances[iy1 * self.nx + ix];
        let d11 = self.distances[iy1 * self.nx + ix1];
        let distance = (1.0 - fx) * (1.0 - fy) * d00
            + fx * (1.0 - fy) * d10
            + (1.0 - fx) * fy * d01
            + fx * fy * d11;
        DistanceSample {
            distance,
            out_of_bounds: false,
        }
    }

    /// Spatial derivative of [`query_distance`](Self::query_distance).
    ///
    /// Within an interpolation cell the bilinear surface is differentiable;
    /// the returned vector is that exact derivative (the limit of a central
    /// difference as the stencil shrinks). Beyond the cell-center lattice the
    /// clamped interpolation is constant, so the corresponding component is 0;
    /// queries within one cell of the border are flagged as one-sided.
    pub fn query_gradient(&self, position: Point2) -> GradientSample {
        if !self.bounds.contains(position) {
            return GradientSample {
                gradient: Point2::zeros(),
                near_border: true,
                out_of_bounds: true,
            };
        }
        let gx = (position.x - self.origin.x) / self.step;
        let gy = (position.y - self.origin.y) / self.step;
        let (ix, fx, clamped_x) = self.interp_axis(gx, self.nx);
        let (iy, fy, clamped_y) = self.interp_axis(gy, self.ny);
        let ix1 = (ix + 1).min(self.nx - 1);
        let iy1 = (iy + 1).min(self.ny - 1);
        let d00 = self.distances[iy * self.nx + ix];
        let d10 = self.distances[iy * self.nx + ix1];
        let d01 = self.distances[iy1 * self.nx + ix];
        let d11 = self.distances[iy1 * self.nx + ix1];
        let dx = if clamped_x {
            0.0
        } else {
            ((1.0 - fy) * (d10 - d00) + fy * (d11 - d01)) / self.step
        };
        let dy = if clamped_y {
            0.0
        } else {
            ((1.0 - fx) * (d01 - d00) + fx * (d11 - d10)) / self.step
        };
        let near_border = gx < 1.0 || gx > (self.nx - 2) as f64 || gy < 1.0 || gy > (self.ny - 2) as f64;
        GradientSample {
            gradient: Point2::new(dx, dy),
            near_border,
            out_of_bounds: false,
        }
    }

    /// CSV matrix export: one line per grid row (south to north), cells west
    /// to east, comma-separated meters.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if ix > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "{}", self.distances[iy * self.nx + ix])?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
