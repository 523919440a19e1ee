//! Meridian (r, z) grid and the axis-aware finite-difference operators.
//!
//! Radial nodes sit at half-cell offsets `r_i = (i + 1/2) dr`, so no node is
//! ever placed on the axis and every `1/r` factor is finite. The axial
//! direction is periodic with `Nz` a power of two.

use std::ops::{Index, IndexMut};
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};

/// Uniform meridian grid on `(0, Rmax] x [0, Lz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeridianGrid {
    nr: usize,
    nz: usize,
    rmax: f64,
    lz: f64,
    dr: f64,
    dz: f64,
}

impl MeridianGrid {
    pub fn new(nr: usize, nz: usize, rmax: f64, lz: f64) -> Result<Self> {
        if nr < 4 {
            return Err(Error::InvalidGrid(format!("Nr = {nr} must be at least 4")));
        }
        if nz < 8 || !nz.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "Nz = {nz} must be a power of two and at least 8"
            )));
        }
        if !(rmax.is_finite() && rmax > 0.0) {
            return Err(Error::InvalidGrid(format!("Rmax = {rmax} must be positive")));
        }
        if !(lz.is_finite() && lz > 0.0) {
            return Err(Error::InvalidGrid(format!("Lz = {lz} must be positive")));
        }
        Ok(Self {
            nr,
            nz,
            rmax,
            lz,
            dr: rmax / nr as f64,
            dz: lz / nz as f64,
        })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn rmax(&self) -> f64 {
        self.rmax
    }
    pub fn lz(&self) -> f64 {
        self.lz
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn len(&self) -> usize {
        self.nr * self.nz
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Radial node `r_i = (i + 1/2) dr`.
    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr
    }

    /// Radius of the cell face between nodes `i` and `i + 1`.
    #[inline]
    pub fn r_face(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.dr
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.dz
    }

    pub fn r_nodes(&self) -> Vec<f64> {
        (0..self.nr).map(|i| self.r(i)).collect()
    }

    pub fn z_nodes(&self) -> Vec<f64> {
        (0..self.nz).map(|j| self.z(j)).collect()
    }

    /// Quadrature weight `r_i dr dz` of a meridian cell.
    #[inline]
    pub fn cell_weight(&self, i: usize) -> f64 {
        self.r(i) * self.dr * self.dz
    }
}

/// Convenience constructor mirroring [`MeridianGrid::new`].
pub fn make_grid(nr: usize, nz: usize, rmax: f64, lz: f64) -> Result<MeridianGrid> {
    MeridianGrid::new(nr, nz, rmax, lz)
}

/// Reflection sign used for the ghost value across `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisParity {
    Even,
    Odd,
}

impl AxisParity {
    pub fn sign(self) -> f64 {
        match self {
            AxisParity::Even => 1.0,
            AxisParity::Odd => -1.0,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(AxisParity::Even),
            -1 => Some(AxisParity::Odd),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            AxisParity::Even => AxisParity::Odd,
            AxisParity::Odd => AxisParity::Even,
        }
    }
}

/// Which physical quantity a modal coefficient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    R,
    Theta,
    Z,
    Pressure,
}

/// Regularity parity of the mode-`k` coefficient of `component` at the axis.
///
/// Scalars (`z`, pressure) extend as `(-1)^k`; the in-plane vector
/// components `r`, `theta` carry the opposite sign.
pub fn axis_parity(component: Component, k: usize) -> AxisParity {
    let even_k = k.is_multiple_of(2);
    match component {
        Component::Z | Component::Pressure => {
            if even_k {
                AxisParity::Even
            } else {
                AxisParity::Odd
            }
        }
        Component::R | Component::Theta => {
            if even_k {
                AxisParity::Odd
            } else {
                AxisParity::Even
            }
        }
    }
}

/// A real scalar on the meridian grid, stored r-major (`values[i * nz + j]`).
#[derive(Debug, Clone, PartialEq)]
pub struct MeridianScalar {
    grid: MeridianGrid,
    values: Vec<f64>,
}

impl MeridianScalar {
    pub fn zeros(grid: &MeridianGrid) -> Self {
        Self {
            grid: *grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &MeridianGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for a {}x{} grid, got {}",
                grid.len(),
                grid.nr(),
                grid.nz(),
                values.len()
            )));
        }
        Ok(Self {
            grid: *grid,
            values,
        })
    }

    /// Samples `f(r, z)` at every node.
    pub fn from_fn(grid: &MeridianGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nr() {
            let r = grid.r(i);
            for j in 0..grid.nz() {
                values.push(f(r, grid.z(j)));
            }
        }
        Self {
            grid: *grid,
            values,
        }
    }

    pub fn grid(&self) -> &MeridianGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nz = self.grid.nz();
        &self.values[i * nz..(i + 1) * nz]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let nz = self.grid.nz();
        &mut self.values[i * nz..(i + 1) * nz]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert!(self.same_grid(other));
        for (y, x) in self.values.iter_mut().zip(&other.values) {
            *y += a * x;
        }
    }

    /// Pointwise map producing a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `f(r_i) * self` for a purely radial factor.
    pub fn mul_radial(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.grid.nr() {
            let w = f(self.grid.r(i));
            for v in out.row_mut(i) {
                *v *= w;
            }
        }
        out
    }

    /// `self / r`.
    pub fn div_r(&self) -> Self {
        self.mul_radial(|r| 1.0 / r)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

impl Index<(usize, usize)> for MeridianScalar {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.grid.nz() + j]
    }
}

impl IndexMut<(usize, usize)> for MeridianScalar {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        let nz = self.grid.nz();
        &mut self.values[i * nz + j]
    }
}

static DDR_SIGN_FAULT: AtomicBool = AtomicBool::new(false);

/// Fault injection for harness self-tests: flips the sign of every [`ddr`]
/// result while enabled. Process-global.
#[doc(hidden)]
pub fn set_ddr_sign_fault(enabled: bool) {
    DDR_SIGN_FAULT.store(enabled, Ordering::SeqCst);
}

/// Second-order radial derivative.
///
/// Central differences in the interior, the ghost `f(-1) = sign * f(0)` at
/// the axis and the one-sided stencil `(3f_{N-1} - 4f_{N-2} + f_{N-3}) / 2dr`
/// at the outer node.
pub fn ddr(f: &MeridianScalar, parity: AxisParity) -> MeridianScalar {
    let g = f.grid;
    let (nr, nz) = (g.nr(), g.nz());
    let h = 0.5 / g.dr();
    let s = parity.sign();
    let mut out = MeridianScalar::zeros(&g);
    let v = &f.values;
    let o = &mut out.values;
    for j in 0..nz {
        o[j] = h * (v[nz + j] - s * v[j]);
    }
    for i in 1..nr - 1 {
        let (lo, mid, hi) = ((i - 1) * nz, i * nz, (i + 1) * nz);
        for j in 0..nz {
            o[mid + j] = h * (v[hi + j] - v[lo + j]);
        }
    }
    let (a, b, c) = ((nr - 1) * nz, (nr - 2) * nz, (nr - 3) * nz);
    for j in 0..nz {
        o[a + j] = h * (3.0 * v[a + j] - 4.0 * v[b + j] + v[c + j]);
    }
    if DDR_SIGN_FAULT.load(Ordering::Relaxed) {
        out.scale(-1.0);
    }
    out
}

/// Second-order periodic central derivative in `z`.
pub fn ddz(f: &MeridianScalar) -> MeridianScalar {
    let g = f.grid;
    let nz = g.nz();
    let h = 0.5 / g.dz();
    let mut out = MeridianScalar::zeros(&g);
    for i in 0..g.nr() {
        let src = f.row(i);
        let dst = out.row_mut(i);
        dst[0] = h * (src[1] - src[nz - 1]);
        for j in 1..nz - 1 {
            dst[j] = h * (src[j + 1] - src[j - 1]);
        }
        dst[nz - 1] = h * (src[0] - src[nz - 2]);
    }
    out
}
