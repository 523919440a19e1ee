//! θ-Fourier data model: modal scalar and vector fields, modal calculus,
//! Parseval norms, parity classes and physical-space sampling.
//!
//! A field with truncation `K` stores `2K + 1` meridian slots in the order
//! `[c0, c1, s1, c2, s2, ...]`, representing
//! `f(r, θ, z) = c0 + Σ_k (c_k cos kθ + s_k sin kθ)`.

use std::f64::consts::PI;

use crate::elliptic;
use crate::error::{Error, Result};
use crate::grid::{axis_parity, ddr, ddz, AxisParity, Component, MeridianGrid, MeridianScalar};

/// Cosine or sine half of a Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trig {
    Cos,
    Sin,
}

/// Storage index of the `(k, trig)` coefficient. `(0, Sin)` does not exist.
#[inline]
pub fn slot_index(k: usize, trig: Trig) -> usize {
    match (k, trig) {
        (0, Trig::Cos) => 0,
        (0, Trig::Sin) => panic!("mode 0 has no sine coefficient"),
        (k, Trig::Cos) => 2 * k - 1,
        (k, Trig::Sin) => 2 * k,
    }
}

/// Inverse of [`slot_index`].
#[inline]
pub fn slot_mode(s: usize) -> (usize, Trig) {
    if s == 0 {
        (0, Trig::Cos)
    } else if s % 2 == 1 {
        (s.div_ceil(2), Trig::Cos)
    } else {
        (s / 2, Trig::Sin)
    }
}

#[inline]
pub fn num_slots(kmax: usize) -> usize {
    2 * kmax + 1
}

/// Parseval weight of a slot: 1 for the mean, 1/2 for cos/sin coefficients.
#[inline]
pub fn slot_weight(s: usize) -> f64 {
    if s == 0 {
        1.0
    } else {
        0.5
    }
}

/// Weighted meridian sum `Σ r_i dr dz f g` in a fixed (row-major) order.
pub fn meridian_dot(f: &MeridianScalar, g: &MeridianScalar) -> f64 {
    let grid = f.grid();
    let mut total = 0.0;
    for i in 0..grid.nr() {
        let row: f64 = f.row(i).iter().zip(g.row(i)).map(|(a, b)| a * b).sum();
        total += grid.cell_weight(i) * row;
    }
    total
}

/// A scalar in modal form (divergence residuals, pressure, one velocity
/// component).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalScalarField {
    grid: MeridianGrid,
    kmax: usize,
    slots: Vec<MeridianScalar>,
}

/// Modal pressure `(P_k, Q_k)` uses the scalar layout.
pub type ModalPressure = ModalScalarField;

impl ModalScalarField {
    pub fn zeros(grid: &MeridianGrid, kmax: usize) -> Self {
        Self {
            grid: *grid,
            kmax,
            slots: vec![MeridianScalar::zeros(grid); num_slots(kmax)],
        }
    }

    pub fn from_slots(grid: &MeridianGrid, kmax: usize, slots: Vec<MeridianScalar>) -> Result<Self> {
        if slots.len() != num_slots(kmax) {
            return Err(Error::ShapeMismatch(format!(
                "K = {kmax} needs {} slots, got {}",
                num_slots(kmax),
                slots.len()
            )));
        }
        if slots.iter().any(|s| s.grid() != grid) {
            return Err(Error::ShapeMismatch("slot grid differs from field grid".into()));
        }
        Ok(Self {
            grid: *grid,
            kmax,
            slots,
        })
    }

    pub fn grid(&self) -> &MeridianGrid {
        &self.grid
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn slots(&self) -> &[MeridianScalar] {
        &self.slots
    }

    pub fn slots_mut(&mut self) -> &mut [MeridianScalar] {
        &mut self.slots
    }

    pub fn into_slots(self) -> Vec<MeridianScalar> {
        self.slots
    }

    pub fn slot(&self, s: usize) -> &MeridianScalar {
        &self.slots[s]
    }

    pub fn slot_mut(&mut self, s: usize) -> &mut MeridianScalar {
        &mut self.slots[s]
    }

    pub fn cos(&self, k: usize) -> &MeridianScalar {
        &self.slots[slot_index(k, Trig::Cos)]
    }

    pub fn cos_mut(&mut self, k: usize) -> &mut MeridianScalar {
        &mut self.slots[slot_index(k, Trig::Cos)]
    }

    /// Sine coefficient of mode `k >= 1`.
    pub fn sin(&self, k: usize) -> &MeridianScalar {
        &self.slots[slot_index(k, Trig::Sin)]
    }

    pub fn sin_mut(&mut self, k: usize) -> &mut MeridianScalar {
        &mut self.slots[slot_index(k, Trig::Sin)]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.grid == other.grid && self.kmax == other.kmax
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "fields differ: K {} vs {}, grid {}x{} vs {}x{}",
                self.kmax,
                other.kmax,
                self.grid.nr(),
                self.grid.nz(),
                other.grid.nr(),
                other.grid.nz()
            )))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.slots.iter().all(MeridianScalar::is_zero)
    }

    pub fn all_finite(&self) -> bool {
        self.slots.iter().all(MeridianScalar::all_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.slots.iter().fold(0.0, |m, s| m.max(s.max_abs()))
    }

    pub fn scale(&mut self, a: f64) {
        self.slots.iter_mut().for_each(|s| s.scale(a));
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (y, x) in self.slots.iter_mut().zip(&other.slots) {
            y.axpy(a, x);
        }
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

    /// Applies `f(slot_index, slot)` to every slot.
    pub fn map_slots(&self, f: impl Fn(usize, &MeridianScalar) -> MeridianScalar) -> Self {
        Self {
            grid: self.grid,
            kmax: self.kmax,
            slots: self.slots.iter().enumerate().map(|(s, x)| f(s, x)).collect(),
        }
    }

    /// Re-truncates (or zero-pads) to `kmax` modes.
    pub fn with_kmax(&self, kmax: usize) -> Self {
        let mut out = Self::zeros(&self.grid, kmax);
        let n = num_slots(kmax.min(self.kmax));
        out.slots[..n].clone_from_slice(&self.slots[..n]);
        out
    }

    /// Weighted L² inner product `∫ f g dx` over the cylinder.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        let mut total = 0.0;
        for (s, (a, b)) in self.slots.iter().zip(&other.slots).enumerate() {
            total += slot_weight(s) * meridian_dot(a, b);
        }
        2.0 * PI * total
    }

    pub fn l2(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// The θ-average: keeps mode 0, zeroes every other slot.
    pub fn theta_average(&self) -> Self {
        let mut out = Self::zeros(&self.grid, self.kmax);
        out.slots[0] = self.slots[0].clone();
        out
    }

    /// `∂_θ f` on coefficients: `cos kθ → -k sin kθ`, `sin kθ → k cos kθ`.
    pub fn theta_derivative(&self) -> Self {
        let mut out = Self::zeros(&self.grid, self.kmax);
        for k in 1..=self.kmax {
            let kf = k as f64;
            *out.sin_mut(k) = self.cos(k).scaled(-kf);
            *out.cos_mut(k) = self.sin(k).scaled(kf);
        }
        out
    }

    /// Radial derivative of every slot, using the axis parity of
    /// `component` for each mode.
    pub fn ddr(&self, component: Component) -> Self {
        self.map_slots(|s, f| ddr(f, axis_parity(component, slot_mode(s).0)))
    }

    pub fn ddz(&self) -> Self {
        self.map_slots(|_, f| ddz(f))
    }

    pub fn div_r(&self) -> Self {
        self.map_slots(|_, f| f.div_r())
    }
}

/// A velocity-type field with `r`, `θ`, `z` components in modal form.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalVectorField {
    pub r: ModalScalarField,
    pub theta: ModalScalarField,
    pub z: ModalScalarField,
}

pub const VECTOR_COMPONENTS: [Component; 3] = [Component::R, Component::Theta, Component::Z];

impl ModalVectorField {
    pub fn zeros(grid: &MeridianGrid, kmax: usize) -> Self {
        let z = ModalScalarField::zeros(grid, kmax);
        Self {
            r: z.clone(),
            theta: z.clone(),
            z,
        }
    }

    pub fn from_components(
        r: ModalScalarField,
        theta: ModalScalarField,
        z: ModalScalarField,
    ) -> Result<Self> {
        r.check_shape(&theta)?;
        r.check_shape(&z)?;
        Ok(Self { r, theta, z })
    }

    pub fn grid(&self) -> &MeridianGrid {
        self.r.grid()
    }

    pub fn kmax(&self) -> usize {
        self.r.kmax()
    }

    pub fn component(&self, c: Component) -> &ModalScalarField {
        match c {
            Component::R => &self.r,
            Component::Theta => &self.theta,
            Component::Z => &self.z,
            Component::Pressure => panic!("velocity has no pressure component"),
        }
    }

    pub fn component_mut(&mut self, c: Component) -> &mut ModalScalarField {
        match c {
            Component::R => &mut self.r,
            Component::Theta => &mut self.theta,
            Component::Z => &mut self.z,
            Component::Pressure => panic!("velocity has no pressure component"),
        }
    }

    pub fn components(&self) -> [&ModalScalarField; 3] {
        [&self.r, &self.theta, &self.z]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.r.same_shape(&other.r)
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        self.r.check_shape(&other.r)
    }

    pub fn is_zero(&self) -> bool {
        self.r.is_zero() && self.theta.is_zero() && self.z.is_zero()
    }

    pub fn all_finite(&self) -> bool {
        self.r.all_finite() && self.theta.all_finite() && self.z.all_finite()
    }

    pub fn scale(&mut self, a: f64) {
        self.r.scale(a);
        self.theta.scale(a);
        self.z.scale(a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.r.axpy(a, &other.r);
        self.theta.axpy(a, &other.theta);
        self.z.axpy(a, &other.z);
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

    pub fn with_kmax(&self, kmax: usize) -> Self {
        Self {
            r: self.r.with_kmax(kmax),
            theta: self.theta.with_kmax(kmax),
            z: self.z.with_kmax(kmax),
        }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.r.inner(&other.r) + self.theta.inner(&other.theta) + self.z.inner(&other.z)
    }

    pub fn l2(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn energy(&self) -> f64 {
        self.inner(self)
    }

    /// True when every `k >= 1` slot is exactly zero.
    pub fn is_axisymmetric(&self) -> bool {
        self.components()
            .iter()
            .all(|c| c.slots()[1..].iter().all(MeridianScalar::is_zero))
    }
}

/// Componentwise θ-average.
pub fn theta_average(u: &ModalVectorField) -> ModalVectorField {
    ModalVectorField {
        r: u.r.theta_average(),
        theta: u.theta.theta_average(),
        z: u.z.theta_average(),
    }
}

/// Scalar `∂_θ f`.
pub fn theta_derivative(f: &ModalScalarField) -> ModalScalarField {
    f.theta_derivative()
}

/// `∂_θ u` including the rotation of the cylindrical basis:
/// `(∂_θu^r − u^θ, ∂_θu^θ + u^r, ∂_θu^z)`.
pub fn theta_derivative_vector(u: &ModalVectorField) -> ModalVectorField {
    let mut r = u.r.theta_derivative();
    r.axpy(-1.0, &u.theta);
    let mut theta = u.theta.theta_derivative();
    theta.axpy(1.0, &u.r);
    ModalVectorField {
        r,
        theta,
        z: u.z.theta_derivative(),
    }
}

/// Conservative radial divergence `(1/r) ∂_r (r f)` on cell faces.
///
/// Face fluxes are `r_{i+1/2} (f_i + f_{i+1}) / 2`; the axis face has zero
/// radius and the wall flux vanishes (odd reflection of a Dirichlet field).
pub fn radial_divergence(f: &MeridianScalar) -> MeridianScalar {
    let g = *f.grid();
    let (nr, nz) = (g.nr(), g.nz());
    let dr = g.dr();
    let mut out = MeridianScalar::zeros(&g);
    let mut flux_lo = vec![0.0; nz];
    let mut flux_hi = vec![0.0; nz];
    for i in 0..nr {
        if i + 1 < nr {
            let rf = 0.5 * g.r_face(i);
            let (a, b) = (f.row(i), f.row(i + 1));
            for j in 0..nz {
                flux_hi[j] = rf * (a[j] + b[j]);
            }
        } else {
            flux_hi.iter_mut().for_each(|v| *v = 0.0);
        }
        let w = 1.0 / (g.r(i) * dr);
        let dst = out.row_mut(i);
        for j in 0..nz {
            dst[j] = w * (flux_hi[j] - flux_lo[j]);
        }
        std::mem::swap(&mut flux_lo, &mut flux_hi);
    }
    out
}

/// Radial gradient, the negative weighted adjoint of [`radial_divergence`].
pub fn radial_gradient(phi: &MeridianScalar) -> MeridianScalar {
    let g = *phi.grid();
    let (nr, nz) = (g.nr(), g.nz());
    let dr = g.dr();
    let mut out = MeridianScalar::zeros(&g);
    for i in 0..nr {
        let w = 0.5 / (g.r(i) * dr);
        let mid = phi.row(i).to_vec();
        let dst = out.row_mut(i);
        if i + 1 < nr {
            let rf = g.r_face(i);
            let hi = phi.row(i + 1);
            for j in 0..nz {
                dst[j] += w * rf * (hi[j] - mid[j]);
            }
        }
        if i > 0 {
            let rf = g.r_face(i - 1);
            let lo = phi.row(i - 1);
            for j in 0..nz {
                dst[j] += w * rf * (mid[j] - lo[j]);
            }
        }
    }
    out
}

/// Modal divergence residual. Cos slot of mode `k`:
/// `D_r u^r_k + ∂_z u^z_k + k v^θ_k / r`; sin slot:
/// `D_r v^r_k + ∂_z v^z_k − k u^θ_k / r`.
pub fn modal_divergence(u: &ModalVectorField) -> ModalScalarField {
    let grid = *u.grid();
    let slots = (0..num_slots(u.kmax()))
        .map(|s| {
            let mut d = radial_divergence(u.r.slot(s));
            d.axpy(1.0, &ddz(u.z.slot(s)));
            let (k, trig) = slot_mode(s);
            if k > 0 {
                let kf = k as f64;
                match trig {
                    Trig::Cos => d.axpy(kf, &u.theta.sin(k).div_r()),
                    Trig::Sin => d.axpy(-kf, &u.theta.cos(k).div_r()),
                }
            }
            d
        })
        .collect();
    ModalScalarField {
        grid,
        kmax: u.kmax(),
        slots,
    }
}

/// Modal gradient of a scalar potential, the negative adjoint of
/// [`modal_divergence`] in the weighted inner product.
pub fn modal_gradient(phi: &ModalScalarField) -> ModalVectorField {
    let grid = *phi.grid();
    let kmax = phi.kmax();
    let r = phi.map_slots(|_, f| radial_gradient(f));
    let z = phi.ddz();
    let mut theta = ModalScalarField::zeros(&grid, kmax);
    for k in 1..=kmax {
        let kf = k as f64;
        *theta.sin_mut(k) = phi.cos(k).div_r().scaled(-kf);
        *theta.cos_mut(k) = phi.sin(k).div_r().scaled(kf);
    }
    ModalVectorField { r, theta, z }
}

/// Modal vorticity `curl u`.
pub fn modal_curl(u: &ModalVectorField) -> ModalVectorField {
    let dth_z = u.z.theta_derivative().div_r();
    let dth_r = u.r.theta_derivative().div_r();
    let mut wr = dth_z;
    wr.axpy(-1.0, &u.theta.ddz());
    let mut wt = u.r.ddz();
    wt.axpy(-1.0, &u.z.ddr(Component::Z));
    let mut wz = u.theta.ddr(Component::Theta);
    wz.axpy(1.0, &u.theta.div_r());
    wz.axpy(-1.0, &dth_r);
    ModalVectorField {
        r: wr,
        theta: wt,
        z: wz,
    }
}

/// Mode-0 `ω^θ / r` with `ω^θ = ∂_z u^r_0 − ∂_r u^z_0`.
pub fn omega_over_r(u: &ModalVectorField) -> MeridianScalar {
    let mut w = ddz(u.r.cos(0));
    w.axpy(-1.0, &ddr(u.z.cos(0), AxisParity::Even));
    w.div_r()
}

/// L² norm of the axisymmetric `ω^θ / r`.
pub fn omega_over_r_l2(u: &ModalVectorField) -> f64 {
    let w = omega_over_r(u);
    (2.0 * PI * meridian_dot(&w, &w)).max(0.0).sqrt()
}

/// Structural class of populated slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParityClass {
    General,
    /// `u^r`, `u^z` in cos slots (and mode 0) only; `u^θ` in sin slots only.
    CosMeridianSinSwirl,
}

fn slot_energy(f: &ModalScalarField, s: usize) -> f64 {
    2.0 * PI * slot_weight(s) * meridian_dot(f.slot(s), f.slot(s))
}

/// Energy fraction held in slots that `class` forbids.
pub fn parity_violation(u: &ModalVectorField, class: ParityClass) -> f64 {
    if class == ParityClass::General {
        return 0.0;
    }
    let total = u.energy();
    if total == 0.0 {
        return 0.0;
    }
    let mut bad = 0.0;
    for s in 0..num_slots(u.kmax()) {
        match slot_mode(s).1 {
            Trig::Sin => bad += slot_energy(&u.r, s) + slot_energy(&u.z, s),
            Trig::Cos => bad += slot_energy(&u.theta, s),
        }
    }
    bad / total
}

/// Energy fraction carried by modes `k >= 1`.
pub fn nonaxisymmetric_share(u: &ModalVectorField) -> f64 {
    let total = u.energy();
    if total == 0.0 {
        return 0.0;
    }
    let mut e = 0.0;
    for s in 1..num_slots(u.kmax()) {
        for c in u.components() {
            e += slot_energy(c, s);
        }
    }
    e / total
}

/// Energy fraction of the mean swirl `u^θ_0`.
pub fn swirl_mean_share(u: &ModalVectorField) -> f64 {
    let total = u.energy();
    if total == 0.0 {
        0.0
    } else {
        slot_energy(&u.theta, 0) / total
    }
}

/// Norm summary of a velocity field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormReport {
    pub l2: f64,
    pub h1dot: f64,
    pub h1axi: f64,
    pub linf: f64,
    pub divmax: f64,
}

/// `Σ_comp ‖∂_r f‖² + ‖∂_z f‖² + ‖f/r‖²` with parity-aware `∂_r`.
pub fn h1axi_squared(u: &ModalVectorField) -> f64 {
    let mut total = 0.0;
    for c in VECTOR_COMPONENTS {
        let f = u.component(c);
        let dr = f.ddr(c);
        let dz = f.ddz();
        let fr = f.div_r();
        total += dr.inner(&dr) + dz.inner(&dz) + fr.inner(&fr);
    }
    total
}

/// Full set of norms: L², discrete Dirichlet seminorm of the diffusion
/// operator, axisymmetric-type H¹, sampled maximum speed and the largest
/// divergence residual.
pub fn norms(u: &ModalVectorField) -> NormReport {
    let a_u = elliptic::vector_laplacian_apply(u);
    NormReport {
        l2: u.l2(),
        h1dot: (-a_u.inner(u)).max(0.0).sqrt(),
        h1axi: h1axi_squared(u).max(0.0).sqrt(),
        linf: max_speed(u),
        divmax: modal_divergence(u).max_abs(),
    }
}

/// Values of a modal scalar at `n_theta` equispaced angles; `values[m]` is
/// the meridian array at `θ_m = 2π m / n_theta`.
pub fn sample_scalar(f: &ModalScalarField, n_theta: usize) -> Vec<MeridianScalar> {
    let kmax = f.kmax();
    (0..n_theta)
        .map(|m| {
            let theta = 2.0 * PI * m as f64 / n_theta as f64;
            let mut out = f.cos(0).clone();
            for k in 1..=kmax {
                let a = k as f64 * theta;
                out.axpy(a.cos(), f.cos(k));
                out.axpy(a.sin(), f.sin(k));
            }
            out
        })
        .collect()
}

/// Physical-space samples of a vector field at every meridian node.
#[derive(Debug, Clone)]
pub struct PhysicalSamples {
    pub n_theta: usize,
    pub r: Vec<MeridianScalar>,
    pub theta: Vec<MeridianScalar>,
    pub z: Vec<MeridianScalar>,
}

pub fn min_samples(kmax: usize) -> usize {
    4 * kmax + 2
}

/// Evaluates the truncated series at `θ_m = 2π m / n_theta`.
pub fn sample_physical(u: &ModalVectorField, n_theta: usize) -> Result<PhysicalSamples> {
    let need = min_samples(u.kmax());
    if n_theta < need {
        return Err(Error::InvalidInput(format!(
            "n_theta = {n_theta} is below the resolution bound {need}"
        )));
    }
    Ok(PhysicalSamples {
        n_theta,
        r: sample_scalar(&u.r, n_theta),
        theta: sample_scalar(&u.theta, n_theta),
        z: sample_scalar(&u.z, n_theta),
    })
}

/// Largest sampled Euclidean speed.
pub fn max_speed(u: &ModalVectorField) -> f64 {
    let s = sample_physical(u, min_samples(u.kmax())).expect("minimal resolution");
    let mut m = 0.0_f64;
    for t in 0..s.n_theta {
        let (a, b, c) = (s.r[t].values(), s.theta[t].values(), s.z[t].values());
        for idx in 0..a.len() {
            m = m.max((a[idx] * a[idx] + b[idx] * b[idx] + c[idx] * c[idx]).sqrt());
        }
    }
    m
}
