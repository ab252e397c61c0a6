//! Computational grids and sampled fields.
//!
//! Two kinds of grid are supported:
//!
//! * **radial**: a uniform staggered grid `r_j = (j + 1/2) h`, `j = 0..M`, on
//!   `(0, r_max)`. No node sits at the origin; even parity is imposed through a
//!   reflected ghost node and the outer face `r = r_max` carries a homogeneous
//!   Dirichlet condition. Cell volumes and face areas are the exact ones of the
//!   shells `[j h, (j + 1) h]`, which makes the discrete Laplacian self-adjoint
//!   for the grid quadrature.
//! * **periodic**: a uniform box `[-L/2, L/2)^d` with `M` points per side and
//!   Fourier collocation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Radial,
    Periodic,
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridKind::Radial => f.write_str("radial"),
            GridKind::Periodic => f.write_str("periodic"),
        }
    }
}

/// Geometry of a radial staggered grid.
#[derive(Debug, Clone)]
pub struct RadialGeometry {
    /// Node radii `(j + 1/2) h`.
    pub nodes: Vec<f64>,
    /// `r^(d-1)` at the outer face of cell `j`, i.e. at `(j + 1) h`.
    pub face_area: Vec<f64>,
    /// Shell volume of cell `j` divided by the sphere area.
    pub volume: Vec<f64>,
    /// Area of the unit sphere `S^(d-1)` (2, 2π, 4π).
    pub sphere_area: f64,
    pub(crate) lap: Tridiagonal,
}

/// A real tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

pub struct PeriodicGeometry {
    /// Node coordinates along one axis.
    pub coords: Vec<f64>,
    /// Angular wavenumbers along one axis in FFT order.
    pub wavenumbers: Vec<f64>,
    /// `|k|^2` for every flattened mode.
    pub k2: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGeometry")
            .field("points", &self.coords.len())
            .finish_non_exhaustive()
    }
}

#[derive(Debug)]
pub struct Grid {
    kind: GridKind,
    dim: usize,
    extent: f64,
    points: usize,
    spacing: f64,
    radial: Option<RadialGeometry>,
    periodic: Option<PeriodicGeometry>,
}

pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

fn check(dim: usize, extent: f64, points: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
    }
    if points < MIN_POINTS {
        return Err(Error::InvalidGrid(format!(
            "point count {points} below minimum {MIN_POINTS}"
        )));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::InvalidGrid(format!("extent {extent} must be positive")));
    }
    Ok(())
}

impl Grid {
    /// Radial grid on `(0, r_max)` with `points` cells.
    pub fn radial(dim: usize, r_max: f64, points: usize) -> Result<Arc<Grid>> {
        check(dim, r_max, points)?;
        let h = r_max / points as f64;
        let d = dim as i32;
        let nodes: Vec<f64> = (0..points).map(|j| (j as f64 + 0.5) * h).collect();
        let face_area: Vec<f64> = (0..points)
            .map(|j| ((j + 1) as f64 * h).powi(d - 1))
            .collect();
        let volume: Vec<f64> = (0..points)
            .map(|j| {
                let (a, b) = (j as f64, (j + 1) as f64);
                (b.powi(d) - a.powi(d)) * h.powi(d) / dim as f64
            })
            .collect();

        let mut lower = vec![0.0; points];
        let mut diag = vec![0.0; points];
        let mut upper = vec![0.0; points];
        for j in 0..points {
            let scale = 1.0 / (h * volume[j]);
            let outer = face_area[j] * scale;
            if j + 1 < points {
                upper[j] = outer;
                diag[j] -= outer;
            } else {
                // ghost f_M = -f_{M-1}: zero at the face r = r_max
                diag[j] -= 2.0 * outer;
            }
            if j > 0 {
                let inner = face_area[j - 1] * scale;
                lower[j] = inner;
                diag[j] -= inner;
            }
        }

        Ok(Arc::new(Grid {
            kind: GridKind::Radial,
            dim,
            extent: r_max,
            points,
            spacing: h,
            radial: Some(RadialGeometry {
                nodes,
                face_area,
                volume,
                sphere_area: sphere_area(dim),
                lap: Tridiagonal { lower, diag, upper },
            }),
            periodic: None,
        }))
    }

    /// Periodic box `[-L/2, L/2)^dim` with `points` nodes per side.
    pub fn periodic(dim: usize, length: f64, points: usize) -> Result<Arc<Grid>> {
        check(dim, length, points)?;
        if !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid("periodic point count must be even".into()));
        }
        let h = length / points as f64;
        let coords: Vec<f64> = (0..points).map(|i| -0.5 * length + i as f64 * h).collect();
        let dk = 2.0 * PI / length;
        let wavenumbers: Vec<f64> = (0..points)
            .map(|i| {
                let f = if i < points / 2 { i as i64 } else { i as i64 - points as i64 };
                f as f64 * dk
            })
            .collect();
        let total = points.pow(dim as u32);
        let mut k2 = vec![0.0; total];
        for (idx, slot) in k2.iter_mut().enumerate() {
            let mut rest = idx;
            let mut acc = 0.0;
            for _ in 0..dim {
                let k = wavenumbers[rest % points];
                acc += k * k;
                rest /= points;
            }
            *slot = acc;
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        Ok(Arc::new(Grid {
            kind: GridKind::Periodic,
            dim,
            extent: length,
            points,
            spacing: h,
            radial: None,
            periodic: Some(PeriodicGeometry {
                coords,
                wavenumbers,
                k2,
                forward,
                inverse,
            }),
        }))
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of stored values.
    pub fn len(&self) -> usize {
        match self.kind {
            GridKind::Radial => self.points,
            GridKind::Periodic => self.points.pow(self.dim as u32),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radial_geometry(&self) -> Option<&RadialGeometry> {
        self.radial.as_ref()
    }

    pub fn periodic_geometry(&self) -> Option<&PeriodicGeometry> {
        self.periodic.as_ref()
    }

    pub(crate) fn radial_or_err(&self) -> Result<&RadialGeometry> {
        self.radial.as_ref().ok_or(Error::WrongGridKind { expected: "radial" })
    }

    pub(crate) fn periodic_or_err(&self) -> Result<&PeriodicGeometry> {
        self.periodic
            .as_ref()
            .ok_or(Error::WrongGridKind { expected: "periodic" })
    }

    /// Quadrature weight of each stored value, including the sphere area on
    /// radial grids.
    pub fn weights(&self) -> Vec<f64> {
        match (&self.radial, &self.periodic) {
            (Some(g), _) => g.volume.iter().map(|v| v * g.sphere_area).collect(),
            _ => vec![self.spacing.powi(self.dim as i32); self.len()],
        }
    }

    /// Radius `|x|` of every stored value.
    pub fn radii(&self) -> Vec<f64> {
        match (&self.radial, &self.periodic) {
            (Some(g), _) => g.nodes.clone(),
            (_, Some(p)) => (0..self.len())
                .map(|idx| {
                    self.position(idx, p)
                        .iter()
                        .take(self.dim)
                        .map(|x| x * x)
                        .sum::<f64>()
                        .sqrt()
                })
                .collect(),
            _ => unreachable!(),
        }
    }

    /// Cartesian position of a flattened periodic index. Axis 0 varies slowest.
    pub(crate) fn position(&self, idx: usize, p: &PeriodicGeometry) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = p.coords[rest % self.points];
            rest /= self.points;
        }
        out
    }

    /// Coordinates of node `idx`: `[r, 0, 0]` on radial grids, the Cartesian
    /// position (axis 0 slowest) on periodic grids.
    pub fn node_position(&self, idx: usize) -> [f64; 3] {
        match (&self.radial, &self.periodic) {
            (Some(r), _) => [r.nodes[idx], 0.0, 0.0],
            (_, Some(p)) => self.position(idx, p),
            _ => unreachable!("grid has geometry"),
        }
    }

    /// Same-kind grid check used by binary operations.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.kind == other.kind
            && self.dim == other.dim
            && self.points == other.points
            && self.extent == other.extent
    }
}

impl PeriodicGeometry {
    /// In-place d-dimensional forward DFT (unnormalized).
    pub fn forward(&self, data: &mut [Complex64], dim: usize) {
        self.transform(data, dim, &self.forward);
    }

    /// In-place d-dimensional inverse DFT, normalized so that
    /// `inverse(forward(f)) == f`.
    pub fn inverse(&self, data: &mut [Complex64], dim: usize) {
        self.transform(data, dim, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], dim: usize, plan: &Arc<dyn Fft<f64>>) {
        let m = self.coords.len();
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        for row in data.chunks_exact_mut(m) {
            plan.process_with_scratch(row, &mut scratch);
        }
        if dim == 1 {
            return;
        }
        let mut line = vec![Complex64::default(); m];
        for axis in 0..dim - 1 {
            let stride = m.pow((dim - 1 - axis) as u32);
            let block = stride * m;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Parity of a field about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Unspecified,
}

/// Scalar types a field may hold.
pub trait Scalar:
    Copy
    + Default
    + Send
    + Sync
    + fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + std::ops::AddAssign
{
    fn to_complex(self) -> Complex64;
    fn from_complex(c: Complex64) -> Self;
    fn abs2(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(c: Complex64) -> Self {
        c.re
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(c: Complex64) -> Self {
        c
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Values sampled on a grid.
#[derive(Debug, Clone)]
pub struct Field<T> {
    grid: Arc<Grid>,
    values: Vec<T>,
    parity: Parity,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Scalar> Field<T> {
    pub fn new(grid: Arc<Grid>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                expected: grid.len(),
            });
        }
        let parity = match grid.kind() {
            GridKind::Radial => Parity::Even,
            GridKind::Periodic => Parity::Unspecified,
        };
        Ok(Field { grid, values, parity })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![T::default(); grid.len()];
        Field::new(grid, values).expect("length matches by construction")
    }

    /// Samples `f(|x|)` (radial) or `f(|x|)` at every box node (periodic).
    pub fn from_radial_fn(grid: Arc<Grid>, f: impl Fn(f64) -> T) -> Self {
        let values = grid.radii().into_iter().map(f).collect();
        Field::new(grid, values).expect("length matches by construction")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            parity: self.parity,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn with_values<U: Scalar>(&self, values: Vec<U>) -> Field<U> {
        debug_assert_eq!(values.len(), self.values.len());
        Field {
            grid: self.grid.clone(),
            values,
            parity: self.parity,
        }
    }
}

impl Field<Complex64> {
    pub fn modulus_squared(&self) -> RealField {
        self.map(|z| z.norm_sqr())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_nodes_avoid_origin() {
        let g = Grid::radial(3, 8.0, 32).unwrap();
        let geo = g.radial_geometry().unwrap();
        assert!(geo.nodes.iter().all(|&r| r > 0.0));
        assert!((g.spacing() - 0.25).abs() < 1e-15);
        let total: f64 = geo.volume.iter().sum();
        assert!((total - 8.0f64.powi(3) / 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::radial(2, 1.0, 8).is_err());
        assert!(Grid::periodic(4, 1.0, 32).is_err());
        assert!(Grid::periodic(2, -1.0, 32).is_err());
        assert!(Grid::periodic(1, 1.0, 33).is_err());
    }

    #[test]
    fn fft_round_trip_3d() {
        let g = Grid::periodic(3, 6.0, 16).unwrap();
        let p = g.periodic_geometry().unwrap();
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        p.forward(&mut data, 3);
        p.inverse(&mut data, 3);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn field_length_checked() {
        let g = Grid::radial(2, 4.0, 16).unwrap();
        assert!(RealField::new(g.clone(), vec![0.0; 15]).is_err());
        assert_eq!(RealField::zeros(g).parity(), Parity::Even);
    }
}
