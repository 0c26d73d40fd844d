//! Array placement and pose conversions.
//!
//! The surface lies in the `z = 0` plane with its geometric centre at the
//! origin. Columns run along `x`, rows along `y`. The incidence side is
//! `z > 0`, the transmission side `z < 0`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub const ORIGIN: CartesianPoint = CartesianPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::invalid("point", "coordinates must be finite"));
        }
        Ok(Self { x, y, z })
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Reflection through the array plane.
    pub fn mirrored_z(self) -> Self {
        Self { z: -self.z, ..self }
    }
}

/// Distance, zenith and azimuth of a point relative to the array centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPose {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPose {
    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid("r", format!("must be > 0, got {r}")));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(
                "theta",
                format!(
                    "zenith must lie in [0, 180] degrees, got {:.4}",
                    theta.to_degrees()
                ),
            ));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::invalid(
                "phi",
                format!(
                    "azimuth must lie in [0, 360) degrees, got {:.4}",
                    phi.to_degrees()
                ),
            ));
        }
        Ok(Self { r, theta, phi })
    }

    /// Pose from degrees, wrapping the azimuth into `[0, 360)`.
    pub fn from_degrees(r: f64, theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(
            r,
            theta_deg.to_radians(),
            phi_deg.rem_euclid(360.0).to_radians(),
        )
    }

    /// Pose in the `x z` plane from a signed angle: negative angles map to
    /// azimuth 180 degrees.
    pub fn in_xz_plane(r: f64, signed_zenith: f64) -> Result<Self> {
        let phi = if signed_zenith < 0.0 { PI } else { 0.0 };
        Self::new(r, signed_zenith.abs(), phi)
    }
}

/// Maps `(r, theta, phi)` to `(r sin theta cos phi, r sin theta sin phi, r cos theta)`.
pub fn spherical_to_cartesian(pose: SphericalPose) -> CartesianPoint {
    let (st, ct) = pose.theta.sin_cos();
    let (sp, cp) = pose.phi.sin_cos();
    CartesianPoint {
        x: pose.r * st * cp,
        y: pose.r * st * sp,
        z: pose.r * ct,
    }
}

/// Uniform planar array: `n_rows x n_cols` units with pitches in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub n_rows: usize,
    pub n_cols: usize,
    pub pitch_x: f64,
    pub pitch_y: f64,
}

impl ArrayLayout {
    pub fn new(n_rows: usize, n_cols: usize, pitch_x: f64, pitch_y: f64) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::invalid(
                "layout",
                "array needs at least one row and one column",
            ));
        }
        if !(pitch_x.is_finite() && pitch_x > 0.0) {
            return Err(Error::invalid("pitch_x", "must be > 0"));
        }
        if !(pitch_y.is_finite() && pitch_y > 0.0) {
            return Err(Error::invalid("pitch_y", "must be > 0"));
        }
        Ok(Self {
            n_rows,
            n_cols,
            pitch_x,
            pitch_y,
        })
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Geometric area of one unit cell.
    pub fn unit_area(&self) -> f64 {
        self.pitch_x * self.pitch_y
    }

    /// Element indices in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = ElementIndex> + '_ {
        (1..=self.n_rows)
            .flat_map(move |row| (1..=self.n_cols).map(move |col| ElementIndex { row, col }))
    }

    /// Row-major flat position of `idx`.
    pub fn flat_index(&self, idx: ElementIndex) -> Result<usize> {
        self.check(idx)?;
        Ok((idx.row - 1) * self.n_cols + (idx.col - 1))
    }

    fn check(&self, idx: ElementIndex) -> Result<()> {
        if idx.row == 0 || idx.col == 0 || idx.row > self.n_rows || idx.col > self.n_cols {
            return Err(Error::InvalidElement {
                row: idx.row,
                col: idx.col,
                rows: self.n_rows,
                cols: self.n_cols,
            });
        }
        Ok(())
    }
}

/// 1-based `(row, col)` position of a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElementIndex {
    pub row: usize,
    pub col: usize,
}

impl ElementIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Centre of unit `idx`.
///
/// The column offset is scaled by `pitch_x` and the row offset by `pitch_y`,
/// so `x = (col - (N_cols + 1) / 2) * pitch_x` and
/// `y = ((N_rows + 1) / 2 - row) * pitch_y`.
pub fn element_position(layout: &ArrayLayout, idx: ElementIndex) -> Result<CartesianPoint> {
    layout.check(idx)?;
    let col_offset = idx.col as f64 - (layout.n_cols as f64 + 1.0) / 2.0;
    let row_offset = (layout.n_rows as f64 + 1.0) / 2.0 - idx.row as f64;
    Ok(CartesianPoint {
        x: col_offset * layout.pitch_x,
        y: row_offset * layout.pitch_y,
        z: 0.0,
    })
}

pub fn distance(a: CartesianPoint, b: CartesianPoint) -> f64 {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Angle between the element normal facing `point` and the element-to-point
/// direction. Always in `[0, pi/2]`.
pub fn departure_zenith(point: CartesianPoint, element: CartesianPoint) -> Result<f64> {
    let d = distance(point, element);
    if d == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let cos = ((point.z - element.z).abs() / d).min(1.0);
    Ok(cos.acos().min(FRAC_PI_2))
}
