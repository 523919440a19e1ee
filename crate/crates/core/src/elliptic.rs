//! Per-mode elliptic solves: scalar Helmholtz, pressure Poisson, the
//! divergence-free projection and the implicit vector diffusion step.
//!
//! Every solve transforms the periodic `z` direction with an FFT and then
//! runs a banded direct solve in `r` for each axial wavenumber.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{AxisParity, MeridianGrid, MeridianScalar};
use crate::modal::{
    modal_divergence, modal_gradient, num_slots, slot_index, slot_mode, ModalScalarField,
    ModalVectorField, Trig,
};

/// Relative compatibility defect tolerated by singular Neumann solves.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Boundary condition at `r = Rmax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OuterBc {
    Dirichlet0,
    Neumann0,
}

/// Parameters of `(σ − L_m) x = rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzSpec {
    pub k_theta: usize,
    pub m: usize,
    pub sigma: f64,
    pub parity: AxisParity,
    pub outer_bc: OuterBc,
}

impl HelmholtzSpec {
    fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "Helmholtz shift sigma = {} must be finite and nonnegative",
                self.sigma
            )));
        }
        Ok(())
    }

    fn has_nullspace(&self) -> bool {
        self.sigma == 0.0 && self.m == 0 && self.outer_bc == OuterBc::Neumann0
    }
}

// ---------------------------------------------------------------------------
// banded LU

/// Banded matrix factored in place by Doolittle LU without pivoting.
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    a: Vec<f64>,
}

impl BandLu {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            a: vec![0.0; n * (kl + ku + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.a[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let p = self.idx(i, j);
        self.a[p] = v;
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.idx(i, j);
        self.a[p] += v;
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        for p in 0..n {
            let piv = self.get(p, p);
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::InvalidInput(format!("zero pivot at row {p} in banded solve")));
            }
            for i in p + 1..=(p + self.kl).min(n - 1) {
                let l = self.get(i, p) / piv;
                self.set(i, p, l);
                for j in p + 1..=(p + self.ku).min(n - 1) {
                    let v = self.get(p, j);
                    self.add(i, j, -l * v);
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut acc = b[i];
            for p in i.saturating_sub(self.kl)..i {
                acc -= self.get(i, p) * b[p];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + self.ku).min(n - 1) {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
    }
}

// ---------------------------------------------------------------------------
// z transforms

type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn fft_pair(nz: usize) -> FftPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, FftPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(nz)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(nz), planner.plan_fft_inverse(nz))
        })
        .clone()
}

/// Row-wise forward DFT in `z`; result is `nr × nz`, r-major.
fn forward_z(f: &MeridianScalar) -> Vec<Complex64> {
    let g = f.grid();
    let (fwd, _) = fft_pair(g.nz());
    let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    buf
}

fn inverse_z(grid: &MeridianGrid, mut buf: Vec<Complex64>) -> MeridianScalar {
    let (_, inv) = fft_pair(grid.nz());
    inv.process(&mut buf);
    let s = 1.0 / grid.nz() as f64;
    let values = buf.iter().map(|c| c.re * s).collect();
    MeridianScalar::from_values(grid, values).expect("shape preserved")
}

/// Symbol of the compact second difference in `z`: `4 sin²(κ dz / 2) / dz²`.
fn compact_symbol(grid: &MeridianGrid, q: usize) -> f64 {
    let s = (PI * q as f64 / grid.nz() as f64).sin();
    4.0 * s * s / (grid.dz() * grid.dz())
}

/// Symbol of the squared central difference in `z`: `(sin(κ dz) / dz)²`.
/// Exactly zero at the mean and Nyquist wavenumbers.
fn wide_symbol(grid: &MeridianGrid, q: usize) -> f64 {
    let nz = grid.nz();
    if q == 0 || 2 * q == nz {
        return 0.0;
    }
    let s = (2.0 * PI * q as f64 / nz as f64).sin() / grid.dz();
    s * s
}

/// Transforms `rhs` in `z`, hands each wavenumber's real and imaginary
/// radial columns to `per_q` for an in-place solve, and transforms back.
fn solve_columns(
    grid: &MeridianGrid,
    rhs: &MeridianScalar,
    mut per_q: impl FnMut(usize, &mut [f64], &mut [f64]) -> Result<()>,
) -> Result<MeridianScalar> {
    let (nr, nz) = (grid.nr(), grid.nz());
    let mut spec = forward_z(rhs);
    let mut re = vec![0.0; nr];
    let mut im = vec![0.0; nr];
    for q in 0..nz {
        for i in 0..nr {
            let c = spec[i * nz + q];
            re[i] = c.re;
            im[i] = c.im;
        }
        per_q(q, &mut re, &mut im)?;
        for i in 0..nr {
            spec[i * nz + q] = Complex64::new(re[i], im[i]);
        }
    }
    Ok(inverse_z(grid, spec))
}

/// Removes the weighted mean `Σ r_i x_i / Σ r_i` from a column. Applied to
/// a right-hand side this enforces the solvability condition of the
/// singular radial systems; applied to a solution it fixes the constant.
fn remove_weighted_mean(grid: &MeridianGrid, x: &mut [f64]) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, v) in x.iter().enumerate() {
        num += grid.r(i) * v;
        den += grid.r(i);
    }
    let c = num / den;
    x.iter_mut().for_each(|v| *v -= c);
}

// ---------------------------------------------------------------------------
// compact radial operator

/// Flux-form coefficients of `−[(1/r)∂_r(r ∂_r)]` plus `m²/r²`; returns
/// (lower, diag, upper). The axis face has zero radius, so no ghost value
/// enters there.
fn compact_radial(grid: &MeridianGrid, m: usize, bc: OuterBc) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nr = grid.nr();
    let dr2 = grid.dr() * grid.dr();
    let m2 = (m * m) as f64;
    let mut lo = vec![0.0; nr];
    let mut di = vec![0.0; nr];
    let mut up = vec![0.0; nr];
    for i in 0..nr {
        let ri = grid.r(i);
        let w = 1.0 / (ri * dr2);
        let rm = if i > 0 { grid.r_face(i - 1) } else { 0.0 };
        let rp = grid.r_face(i);
        di[i] = m2 / (ri * ri) + w * rm;
        if i > 0 {
            lo[i] = -w * rm;
        }
        if i + 1 < nr {
            di[i] += w * rp;
            up[i] = -w * rp;
        } else if bc == OuterBc::Dirichlet0 {
            di[i] += 2.0 * w * rp;
        }
    }
    (lo, di, up)
}

fn compact_matrix(coef: &(Vec<f64>, Vec<f64>, Vec<f64>), shift: f64, n: usize) -> BandLu {
    let (lo, di, up) = coef;
    let mut a = BandLu::new(n, 1, 1);
    for i in 0..n {
        a.set(i, i, di[i] + shift);
        if i > 0 {
            a.set(i, i - 1, lo[i]);
        }
        if i + 1 < n {
            a.set(i, i + 1, up[i]);
        }
    }
    a
}

/// `Σ r |·|`-relative size of the radial-constant null component at zero
/// axial wavenumber.
fn compatibility_defect(rhs: &MeridianScalar) -> f64 {
    let g = rhs.grid();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..g.nr() {
        let r = g.r(i);
        for &v in rhs.row(i) {
            num += r * v;
            den += r * v.abs();
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).abs()
    }
}

/// Solves `(σ − L_m) x = rhs` with `L_m = (1/r)∂_r(r∂_r) + ∂_z² − m²/r²`
/// in compact flux form.
pub fn helmholtz_solve(spec: &HelmholtzSpec, rhs: &MeridianScalar) -> Result<MeridianScalar> {
    spec.validate()?;
    let grid = *rhs.grid();
    let nr = grid.nr();
    let singular = spec.has_nullspace();
    if singular {
        let defect = compatibility_defect(rhs);
        if defect > COMPATIBILITY_TOL {
            return Err(Error::Incompatible {
                defect,
                tolerance: COMPATIBILITY_TOL,
            });
        }
    }
    let coef = compact_radial(&grid, spec.m, spec.outer_bc);
    solve_columns(&grid, rhs, |q, re, im| {
        let shift = spec.sigma + compact_symbol(&grid, q);
        if singular && q == 0 {
            // constants span the null space: pin the last node, then
            // normalize to zero weighted mean
            remove_weighted_mean(&grid, re);
            remove_weighted_mean(&grid, im);
            let mut a = compact_matrix(&coef, 0.0, nr - 1);
            a.factor()?;
            for col in [&mut *re, &mut *im] {
                a.solve(&mut col[..nr - 1]);
                col[nr - 1] = 0.0;
                remove_weighted_mean(&grid, col);
            }
        } else {
            let mut a = compact_matrix(&coef, shift, nr);
            a.factor()?;
            a.solve(re);
            a.solve(im);
        }
        Ok(())
    })
}

/// Applies `(σ − L_m)` in physical space, the exact operator inverted by
/// [`helmholtz_solve`].
pub fn helmholtz_apply(spec: &HelmholtzSpec, x: &MeridianScalar) -> MeridianScalar {
    let grid = *x.grid();
    let (nr, nz) = (grid.nr(), grid.nz());
    let (lo, di, up) = compact_radial(&grid, spec.m, spec.outer_bc);
    let idz2 = 1.0 / (grid.dz() * grid.dz());
    let mut out = MeridianScalar::zeros(&grid);
    for i in 0..nr {
        let row = x.row(i);
        let below = if i > 0 { Some(x.row(i - 1)) } else { None };
        let above = if i + 1 < nr { Some(x.row(i + 1)) } else { None };
        let dst = out.row_mut(i);
        for j in 0..nz {
            let jm = if j == 0 { nz - 1 } else { j - 1 };
            let jp = if j + 1 == nz { 0 } else { j + 1 };
            let mut v = (spec.sigma + di[i]) * row[j];
            if let Some(b) = below {
                v += lo[i] * b[j];
            }
            if let Some(a) = above {
                v += up[i] * a[j];
            }
            v -= idz2 * (row[jp] - 2.0 * row[j] + row[jm]);
            dst[j] = v;
        }
    }
    out
}

/// Solves `L_k P = rhs_cos`, `L_k Q = rhs_sin` for the mode-`k` pressure
/// with Neumann conditions at the wall. The mode-0 null space is fixed by
/// zero weighted mean; `rhs_sin` must vanish for `k = 0` and `Q` is zero.
pub fn pressure_poisson(
    k: usize,
    rhs_cos: &MeridianScalar,
    rhs_sin: &MeridianScalar,
) -> Result<(MeridianScalar, MeridianScalar)> {
    let spec = HelmholtzSpec {
        k_theta: k,
        m: k,
        sigma: 0.0,
        parity: crate::grid::axis_parity(crate::grid::Component::Pressure, k),
        outer_bc: OuterBc::Neumann0,
    };
    // σ − L = −L, so negate the right-hand side
    let p = helmholtz_solve(&spec, &rhs_cos.scaled(-1.0))?;
    let q = if k == 0 {
        if !rhs_sin.is_zero() {
            return Err(Error::InvalidInput("mode 0 has no sine slot".into()));
        }
        MeridianScalar::zeros(rhs_sin.grid())
    } else {
        helmholtz_solve(&spec, &rhs_sin.scaled(-1.0))?
    };
    Ok((p, q))
}

// ---------------------------------------------------------------------------
// projection

/// Band of `D_r G_r` (kl = ku = 2) probed column by column.
fn div_grad_band(grid: &MeridianGrid) -> Vec<[f64; 5]> {
    let nr = grid.nr();
    let dr = grid.dr();
    let mut band = vec![[0.0; 5]; nr];
    // G_r e_c is supported on nodes c-1..c+1, D_r of that on c-2..c+2
    for c in 0..nr {
        let mut g = vec![0.0; nr];
        for (i, gi) in g.iter_mut().enumerate() {
            let phi = |n: usize| if n == c { 1.0 } else { 0.0 };
            let mut v = 0.0;
            if i + 1 < nr {
                v += grid.r_face(i) * (phi(i + 1) - phi(i));
            }
            if i > 0 {
                v += grid.r_face(i - 1) * (phi(i) - phi(i - 1));
            }
            *gi = v / (2.0 * grid.r(i) * dr);
        }
        for i in c.saturating_sub(2)..=(c + 2).min(nr - 1) {
            let hi = if i + 1 < nr {
                0.5 * grid.r_face(i) * (g[i] + g[i + 1])
            } else {
                0.0
            };
            let lo = if i > 0 {
                0.5 * grid.r_face(i - 1) * (g[i - 1] + g[i])
            } else {
                0.0
            };
            band[i][c + 2 - i] = (hi - lo) / (grid.r(i) * dr);
        }
    }
    band
}

/// Solves `D G φ = d` for one slot of mode `k`.
fn solve_div_grad(grid: &MeridianGrid, band: &[[f64; 5]], k: usize, d: &MeridianScalar) -> Result<MeridianScalar> {
    let nr = grid.nr();
    let k2 = (k * k) as f64;
    solve_columns(grid, d, |q, re, im| {
        let s2 = wide_symbol(grid, q);
        let singular = k == 0 && s2 == 0.0;
        let n = if singular { nr - 1 } else { nr };
        // assemble −D G + k²/r² + s² (positive definite off the null space)
        let mut a = BandLu::new(n, 2, 2);
        for i in 0..n {
            let ri = grid.r(i);
            for (off, &v) in band[i].iter().enumerate() {
                let j = i + off;
                if j < 2 || j - 2 >= n {
                    continue;
                }
                a.set(i, j - 2, -v);
            }
            a.add(i, i, k2 / (ri * ri) + s2);
        }
        a.factor()?;
        for col in [&mut *re, &mut *im] {
            col.iter_mut().for_each(|v| *v = -*v);
            if singular {
                remove_weighted_mean(grid, col);
                a.solve(&mut col[..n]);
                col[nr - 1] = 0.0;
                remove_weighted_mean(grid, col);
            } else {
                a.solve(col);
            }
        }
        Ok(())
    })
}

/// Discrete Leray projection: returns `(u − Gφ, φ)` with `D G φ = D u`.
pub fn project_with_potential(u: &ModalVectorField) -> Result<(ModalVectorField, ModalScalarField)> {
    let grid = *u.grid();
    let kmax = u.kmax();
    let div = modal_divergence(u);
    let band = div_grad_band(&grid);
    let slots: Vec<MeridianScalar> = (0..num_slots(kmax))
        .into_par_iter()
        .map(|s| {
            let d = div.slot(s);
            if d.is_zero() {
                Ok(MeridianScalar::zeros(&grid))
            } else {
                solve_div_grad(&grid, &band, slot_mode(s).0, d)
            }
        })
        .collect::<Result<_>>()?;
    let phi = ModalScalarField::from_slots(&grid, kmax, slots)?;
    let mut out = u.clone();
    out.axpy(-1.0, &modal_gradient(&phi));
    Ok((out, phi))
}

/// Discrete Leray projection onto modally divergence-free fields.
pub fn project_divfree(u: &ModalVectorField) -> Result<ModalVectorField> {
    project_with_potential(u).map(|(v, _)| v)
}

// ---------------------------------------------------------------------------
// vector diffusion

/// One scalar solve of the decoupled vector diffusion system.
#[derive(Debug, Clone, Copy)]
enum Source {
    Slot(usize, usize),
    Sum(usize, usize, usize, usize),
    Diff(usize, usize, usize, usize),
}

/// Component index 0..3 for (r, θ, z).
fn comp(u: &ModalVectorField, c: usize) -> &ModalScalarField {
    match c {
        0 => &u.r,
        1 => &u.theta,
        _ => &u.z,
    }
}

fn comp_mut(u: &mut ModalVectorField, c: usize) -> &mut ModalScalarField {
    match c {
        0 => &mut u.r,
        1 => &mut u.theta,
        _ => &mut u.z,
    }
}

/// A scalar job: source combination and potential index `m`.
#[derive(Debug, Clone, Copy)]
struct Job {
    src: Source,
    m: usize,
    k: usize,
}

/// The sum/difference diagonalization of the vector Laplacian, mode by mode.
///
/// Mode 0: `u^r`, `u^θ` see `1/r²`, `u^z` none. Mode `k`: the `z` slots see
/// `k²/r²`; `(u^r cos, u^θ sin)` decouple into `a ± b` with potentials
/// `(k ± 1)²`, and `(u^r sin, u^θ cos)` into `c ± d` with `(k ∓ 1)²`.
fn diffusion_jobs(kmax: usize) -> Vec<Job> {
    let mut jobs = vec![
        Job { src: Source::Slot(0, 0), m: 1, k: 0 },
        Job { src: Source::Slot(1, 0), m: 1, k: 0 },
        Job { src: Source::Slot(2, 0), m: 0, k: 0 },
    ];
    for k in 1..=kmax {
        let (c, s) = (slot_index(k, Trig::Cos), slot_index(k, Trig::Sin));
        jobs.push(Job { src: Source::Slot(2, c), m: k, k });
        jobs.push(Job { src: Source::Slot(2, s), m: k, k });
        jobs.push(Job { src: Source::Sum(0, c, 1, s), m: k + 1, k });
        jobs.push(Job { src: Source::Diff(0, c, 1, s), m: k - 1, k });
        jobs.push(Job { src: Source::Sum(0, s, 1, c), m: k - 1, k });
        jobs.push(Job { src: Source::Diff(0, s, 1, c), m: k + 1, k });
    }
    jobs
}

fn gather(u: &ModalVectorField, src: Source) -> MeridianScalar {
    match src {
        Source::Slot(c, s) => comp(u, c).slot(s).clone(),
        Source::Sum(c1, s1, c2, s2) => comp(u, c1).slot(s1).add(comp(u, c2).slot(s2)),
        Source::Diff(c1, s1, c2, s2) => comp(u, c1).slot(s1).sub(comp(u, c2).slot(s2)),
    }
}

/// Reassembles component slots from the scalar job outputs (same order as
/// [`diffusion_jobs`]).
fn scatter(grid: &MeridianGrid, kmax: usize, out: Vec<MeridianScalar>) -> ModalVectorField {
    let mut u = ModalVectorField::zeros(grid, kmax);
    let mut it = out.into_iter();
    for c in 0..3 {
        *comp_mut(&mut u, c).slot_mut(0) = it.next().expect("mode-0 job");
    }
    for k in 1..=kmax {
        let (c, s) = (slot_index(k, Trig::Cos), slot_index(k, Trig::Sin));
        *u.z.slot_mut(c) = it.next().expect("job");
        *u.z.slot_mut(s) = it.next().expect("job");
        let (p1s, p1d) = (it.next().expect("job"), it.next().expect("job"));
        let (p2s, p2d) = (it.next().expect("job"), it.next().expect("job"));
        let half = |a: &MeridianScalar, b: &MeridianScalar, sign: f64| {
            let mut x = a.clone();
            x.axpy(sign, b);
            x.scale(0.5);
            x
        };
        *u.r.slot_mut(c) = half(&p1s, &p1d, 1.0);
        *u.theta.slot_mut(s) = half(&p1s, &p1d, -1.0);
        *u.r.slot_mut(s) = half(&p2s, &p2d, 1.0);
        *u.theta.slot_mut(c) = half(&p2s, &p2d, -1.0);
    }
    u
}

fn velocity_spec(job: &Job, sigma: f64) -> HelmholtzSpec {
    HelmholtzSpec {
        k_theta: job.k,
        m: job.m,
        sigma,
        parity: AxisParity::Even,
        outer_bc: OuterBc::Dirichlet0,
    }
}

/// Solves `(σ − A) u = rhs` where `A` is the discrete vector Laplacian with
/// Dirichlet walls; requires `σ > 0`.
pub fn vector_diffusion_solve(sigma: f64, rhs: &ModalVectorField) -> Result<ModalVectorField> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidInput(format!("diffusion shift sigma = {sigma} must be positive")));
    }
    let grid = *rhs.grid();
    let jobs = diffusion_jobs(rhs.kmax());
    let out = jobs
        .par_iter()
        .map(|job| {
            let b = gather(rhs, job.src);
            if b.is_zero() {
                Ok(b)
            } else {
                helmholtz_solve(&velocity_spec(job, sigma), &b)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scatter(&grid, rhs.kmax(), out))
}

/// `(σ − A) u`.
pub fn vector_diffusion_apply(sigma: f64, u: &ModalVectorField) -> ModalVectorField {
    let grid = *u.grid();
    let jobs = diffusion_jobs(u.kmax());
    let out = jobs
        .par_iter()
        .map(|job| helmholtz_apply(&velocity_spec(job, sigma), &gather(u, job.src)))
        .collect();
    scatter(&grid, u.kmax(), out)
}

/// The discrete vector Laplacian `A u`.
pub fn vector_laplacian_apply(u: &ModalVectorField) -> ModalVectorField {
    vector_diffusion_apply(0.0, u).scaled(-1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn grid() -> MeridianGrid {
        make_grid(24, 32, 3.0, 4.0).unwrap()
    }

    fn blob(g: &MeridianGrid, r0: f64, z0: f64) -> MeridianScalar {
        MeridianScalar::from_fn(g, |r, z| {
            let dz = (z - z0 + 2.0).rem_euclid(4.0) - 2.0;
            (-((r - r0).powi(2) + dz * dz) / 0.3).exp() * (1.0 + 0.3 * (3.0 * z).sin())
        })
    }

    fn rel(a: &MeridianScalar, b: &MeridianScalar) -> f64 {
        a.sub(b).max_abs() / b.max_abs()
    }

    #[test]
    fn band_lu_solves_tridiagonal() {
        let mut a = BandLu::new(3, 1, 1);
        for i in 0..3 {
            a.set(i, i, 4.0);
        }
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 2, 1.0);
        a.set(2, 1, 1.0);
        a.factor().unwrap();
        let mut b = vec![5.0, 6.0, 5.0];
        a.solve(&mut b);
        for v in b {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn helmholtz_round_trip() {
        let g = grid();
        let x0 = blob(&g, 1.2, 2.0);
        for (m, sigma, bc) in [
            (0, 1.0, OuterBc::Dirichlet0),
            (1, 500.0, OuterBc::Dirichlet0),
            (3, 0.0, OuterBc::Neumann0),
            (2, 2.0, OuterBc::Neumann0),
        ] {
            let spec = HelmholtzSpec {
                k_theta: m,
                m,
                sigma,
                parity: AxisParity::Even,
                outer_bc: bc,
            };
            let rhs = helmholtz_apply(&spec, &x0);
            let x = helmholtz_solve(&spec, &rhs).unwrap();
            assert!(rel(&x, &x0) < 1e-10, "m={m}: {}", rel(&x, &x0));
            assert!(rel(&helmholtz_apply(&spec, &x), &rhs) < 1e-11);
        }
    }

    #[test]
    fn singular_neumann_checks_compatibility() {
        let g = grid();
        let spec = HelmholtzSpec {
            k_theta: 0,
            m: 0,
            sigma: 0.0,
            parity: AxisParity::Even,
            outer_bc: OuterBc::Neumann0,
        };
        let x0 = blob(&g, 1.0, 1.0);
        let rhs = helmholtz_apply(&spec, &x0);
        let x = helmholtz_solve(&spec, &rhs).unwrap();
        // differs from x0 by a constant at most
        let d = x.sub(&x0);
        let c = d[(0, 0)];
        assert!(d.values().iter().all(|v| (v - c).abs() < 1e-9));
        let ones = MeridianScalar::from_fn(&g, |_, _| 1.0);
        assert!(matches!(helmholtz_solve(&spec, &ones), Err(Error::Incompatible { .. })));
    }

    #[test]
    fn constant_rhs_far_from_walls() {
        let g = make_grid(64, 16, 16.0, 4.0).unwrap();
        let spec = HelmholtzSpec {
            k_theta: 0,
            m: 0,
            sigma: 1.0,
            parity: AxisParity::Even,
            outer_bc: OuterBc::Dirichlet0,
        };
        let rhs = MeridianScalar::from_fn(&g, |_, _| 2.0);
        let x = helmholtz_solve(&spec, &rhs).unwrap();
        assert!((x[(4, 5)] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn pressure_slots_do_not_mix() {
        let g = grid();
        let p0 = blob(&g, 1.0, 2.0);
        let spec = HelmholtzSpec {
            k_theta: 2,
            m: 2,
            sigma: 0.0,
            parity: AxisParity::Even,
            outer_bc: OuterBc::Neumann0,
        };
        let lap = helmholtz_apply(&spec, &p0).scaled(-1.0);
        let (p, q) = pressure_poisson(2, &MeridianScalar::zeros(&g), &lap).unwrap();
        assert!(p.is_zero());
        assert!(rel(&q, &p0) < 1e-9);
        let (p, q) = pressure_poisson(0, &MeridianScalar::zeros(&g), &MeridianScalar::zeros(&g)).unwrap();
        assert!(p.is_zero() && q.is_zero());
    }

    fn random_field(g: &MeridianGrid, kmax: usize) -> ModalVectorField {
        let mut u = ModalVectorField::zeros(g, kmax);
        for s in 0..num_slots(kmax) {
            let f = s as f64;
            *u.r.slot_mut(s) = blob(g, 0.8 + 0.1 * f, 1.0 + 0.2 * f);
            *u.theta.slot_mut(s) = blob(g, 1.5 - 0.05 * f, 3.0 - 0.1 * f);
            *u.z.slot_mut(s) = blob(g, 1.0 + 0.07 * f, 0.5 + 0.3 * f);
        }
        u
    }

    #[test]
    fn projection_is_idempotent_and_divergence_free() {
        let g = grid();
        let u = random_field(&g, 3);
        let p = project_divfree(&u).unwrap();
        let div = modal_divergence(&p).max_abs();
        assert!(div < 1e-10 * u.l2(), "div {div}");
        let pp = project_divfree(&p).unwrap();
        assert!(pp.sub(&p).l2() < 1e-11 * p.l2());
        // orthogonality of the removed gradient
        let gphi = u.sub(&p);
        assert!(gphi.inner(&p).abs() < 1e-10 * u.energy());
    }

    #[test]
    fn projection_annihilates_gradients() {
        let g = grid();
        let mut phi = ModalScalarField::zeros(&g, 2);
        for s in 0..5 {
            *phi.slot_mut(s) = blob(&g, 1.0 + 0.1 * s as f64, 2.0);
        }
        let u = modal_gradient(&phi);
        let p = project_divfree(&u).unwrap();
        assert!(p.l2() < 1e-10 * u.l2(), "{}", p.l2() / u.l2());
    }

    #[test]
    fn vector_diffusion_round_trip_and_symmetry() {
        let g = grid();
        let u = random_field(&g, 3);
        let rhs = vector_diffusion_apply(50.0, &u);
        let x = vector_diffusion_solve(50.0, &rhs).unwrap();
        assert!(x.sub(&u).l2() < 1e-11 * u.l2());
        let w = random_field(&g, 3).scaled(0.5).add(&theta_shift(&u));
        let lhs = vector_laplacian_apply(&u).inner(&w);
        let rhs = u.inner(&vector_laplacian_apply(&w));
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs());
        assert!(vector_laplacian_apply(&u).inner(&u) < 0.0);
    }

    fn theta_shift(u: &ModalVectorField) -> ModalVectorField {
        crate::modal::theta_derivative_vector(u)
    }

    #[test]
    fn vector_laplacian_coupling_signs() {
        // Δ^r cos_k contains −2k v^θ_k / r²
        let g = grid();
        let k = 2;
        let b = blob(&g, 1.3, 2.0);
        let mut u = ModalVectorField::zeros(&g, k);
        *u.theta.sin_mut(k) = b.clone();
        let a = vector_laplacian_apply(&u);
        let expect = b.mul_radial(|r| -2.0 * k as f64 / (r * r));
        assert!(rel(a.r.cos(k), &expect) < 1e-12);
        let mut v = ModalVectorField::zeros(&g, k);
        *v.theta.cos_mut(k) = b.clone();
        let a = vector_laplacian_apply(&v);
        assert!(rel(a.r.sin(k), &expect.scaled(-1.0)) < 1e-12);
    }
}
