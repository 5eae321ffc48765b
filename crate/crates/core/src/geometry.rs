//! Array and surface layouts.
//!
//! All coordinates are in meters. Surfaces are planes of constant `y`; the
//! user sits near the origin and the base station lies far along `+y`.
//! Surface elements are addressed by a flat index that runs along `x` first,
//! starting at the most negative `(x, z)` corner.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const ORIGIN: Position3D = Position3D::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Position3D {
    type Output = Position3D;
    fn add(self, rhs: Position3D) -> Position3D {
        Position3D::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Position3D {
    type Output = Position3D;
    fn sub(self, rhs: Position3D) -> Position3D {
        Position3D::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Position3D {
    type Output = Position3D;
    fn mul(self, s: f64) -> Position3D {
        Position3D::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Uniform linear array of point antennas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaSpec {
    pub count: usize,
    pub spacing: f64,
    pub center: Position3D,
    /// Unit direction along which the elements are laid out.
    pub axis: Position3D,
}

impl UlaSpec {
    /// Array along the x-axis, broadside toward `+y`.
    pub fn along_x(count: usize, spacing: f64, center: Position3D) -> Self {
        Self {
            count,
            spacing,
            center,
            axis: Position3D::new(1.0, 0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidScenario("ULA needs at least one antenna".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "ULA spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidScenario("ULA center is not finite".into()));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidScenario("ULA axis must have unit norm".into()));
        }
        Ok(())
    }
}

/// Uniform planar array of square, closely packed elements in a plane `y = plane_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpaLayerSpec {
    /// Elements along x.
    pub cols: usize,
    /// Elements along z.
    pub rows: usize,
    /// Side length of one (square) element; also the pitch.
    pub element_size: f64,
    pub plane_y: f64,
    /// Grid centroid `(x, z)`.
    pub center_xz: (f64, f64),
}

impl UpaLayerSpec {
    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical extent `(along x, along z)`.
    pub fn extents(&self) -> (f64, f64) {
        (
            self.cols as f64 * self.element_size,
            self.rows as f64 * self.element_size,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.cols == 0 || self.rows == 0 {
            return Err(Error::InvalidScenario("surface layer needs at least one element".into()));
        }
        if !(self.element_size > 0.0 && self.element_size.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "element size must be positive, got {}",
                self.element_size
            )));
        }
        if !self.plane_y.is_finite() || !self.center_xz.0.is_finite() || !self.center_xz.1.is_finite() {
            return Err(Error::InvalidScenario("layer position is not finite".into()));
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in an xz-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl Rect {
    pub fn centered(cx: f64, cz: f64, half_x: f64, half_z: f64) -> Self {
        Self {
            x0: cx - half_x,
            x1: cx + half_x,
            z0: cz - half_z,
            z1: cz + half_z,
        }
    }

    pub fn square(cx: f64, cz: f64, side: f64) -> Self {
        Self::centered(cx, cz, side / 2.0, side / 2.0)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.z1 - self.z0)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.z0 + self.z1))
    }

    pub fn translated(&self, dx: f64, dz: f64) -> Self {
        Self {
            x0: self.x0 + dx,
            x1: self.x1 + dx,
            z0: self.z0 + dz,
            z1: self.z1 + dz,
        }
    }
}

/// Element centers `(α_n, β_n)` of one planar layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGrid {
    pub centers: Vec<(f64, f64)>,
    pub plane_y: f64,
    pub element_size: f64,
    pub cols: usize,
    pub rows: usize,
    pub center_xz: (f64, f64),
}

impl ElementGrid {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Region `Ω_n` occupied by element `n`.
    pub fn region(&self, n: usize) -> Rect {
        let (cx, cz) = self.centers[n];
        Rect::square(cx, cz, self.element_size)
    }

    pub fn position(&self, n: usize) -> Position3D {
        let (x, z) = self.centers[n];
        Position3D::new(x, self.plane_y, z)
    }

    /// `(col, row)` of a flat index.
    pub fn col_row(&self, n: usize) -> (usize, usize) {
        (n % self.cols, n / self.cols)
    }

    pub fn total_area(&self) -> f64 {
        self.len() as f64 * self.element_size * self.element_size
    }
}

/// Centers of a closely packed layer, row-major with `x` varying fastest.
pub fn element_centers(layer: &UpaLayerSpec) -> ElementGrid {
    let a = layer.element_size;
    let (cx, cz) = layer.center_xz;
    let x_start = cx - 0.5 * (layer.cols as f64 - 1.0) * a;
    let z_start = cz - 0.5 * (layer.rows as f64 - 1.0) * a;
    let centers = (0..layer.rows)
        .flat_map(|r| {
            (0..layer.cols).map(move |c| (x_start + c as f64 * a, z_start + r as f64 * a))
        })
        .collect();
    ElementGrid {
        centers,
        plane_y: layer.plane_y,
        element_size: a,
        cols: layer.cols,
        rows: layer.rows,
        center_xz: layer.center_xz,
    }
}

/// Antenna positions centered on `spec.center`, spaced along `spec.axis`.
pub fn ula_positions(spec: &UlaSpec) -> Vec<Position3D> {
    let half = 0.5 * (spec.count as f64 - 1.0);
    (0..spec.count)
        .map(|k| spec.center + spec.axis * ((k as f64 - half) * spec.spacing))
        .collect()
}

/// Splits a doubly-symmetric grid into disjoint groups of four mirror images.
///
/// Each tuple is ordered `(+α,+β), (−α,+β), (+α,−β), (−α,−β)` relative to the
/// grid centroid, and tuples are sorted by the index of their `(+α,+β)` member.
pub fn quaternion_partition(grid: &ElementGrid) -> Result<Vec<[usize; 4]>> {
    let (cx, cz) = grid.center_xz;
    let tol = 1e-9 * grid.element_size.max(f64::MIN_POSITIVE);
    let rel: Vec<(f64, f64)> = grid.centers.iter().map(|&(x, z)| (x - cx, z - cz)).collect();

    if rel.iter().any(|&(a, b)| a.abs() <= tol || b.abs() <= tol) {
        return Err(Error::GridHasAxisElements);
    }

    let find = |alpha: f64, beta: f64| {
        rel.iter()
            .position(|&(a, b)| (a - alpha).abs() <= tol && (b - beta).abs() <= tol)
    };

    let mut used = vec![false; rel.len()];
    let mut out = Vec::with_capacity(rel.len() / 4);
    for (i, &(a, b)) in rel.iter().enumerate() {
        if used[i] {
            continue;
        }
        let (pa, pb) = (a.abs(), b.abs());
        let mut tuple = [0usize; 4];
        for (slot, (sa, sb)) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)]
            .into_iter()
            .enumerate()
        {
            let (ta, tb) = (sa * pa, sb * pb);
            match find(ta, tb) {
                Some(j) if !used[j] => tuple[slot] = j,
                _ => {
                    return Err(Error::GridNotSymmetric {
                        index: i,
                        alpha: ta + cx,
                        beta: tb + cz,
                    })
                }
            }
        }
        for &j in &tuple {
            used[j] = true;
        }
        out.push(tuple);
    }
    out.sort_by_key(|t| t[0]);
    Ok(out)
}
