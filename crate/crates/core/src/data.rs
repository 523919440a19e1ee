//! Initial data: a Stokes stream function for the axisymmetric meridian
//! flow plus an ε-scaled perturbation made of a mean swirl and a few
//! θ-modes whose swirl coefficients are closed by the divergence
//! constraint.

use crate::error::{Error, Result};
use crate::grid::{ddz, MeridianGrid, MeridianScalar};
use crate::modal::{radial_divergence, ModalVectorField, ParityClass};
use crate::solver::HierarchyInit;

/// Gaussian bump `A exp(−((r − r0)² + (z − z0)²) / w²)`, periodic in `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub amplitude: f64,
    pub r0: f64,
    pub z0: f64,
    pub width: f64,
}

impl Blob {
    pub fn eval(&self, r: f64, z: f64, lz: f64) -> f64 {
        let mut dz = (z - self.z0) % lz;
        if dz > 0.5 * lz {
            dz -= lz;
        } else if dz < -0.5 * lz {
            dz += lz;
        }
        let dr = r - self.r0;
        self.amplitude * (-(dr * dr + dz * dz) / (self.width * self.width)).exp()
    }

    pub fn sample(&self, grid: &MeridianGrid) -> MeridianScalar {
        let lz = grid.lz();
        MeridianScalar::from_fn(grid, |r, z| self.eval(r, z, lz))
    }
}

/// Recipe for the initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFamily {
    /// Stream function `ψ = r² · blob`.
    pub psi: Blob,
    /// Mean swirl `a^θ_0 = (r / r0) · blob`.
    pub swirl: Blob,
    /// θ-modes carried by the perturbation.
    pub modes: Vec<usize>,
    /// Peak size of the meridian mode coefficients.
    pub mode_amplitude: f64,
    /// `General` also populates the sine family of `u^r`, `u^z` and the
    /// cosine family of `u^θ`.
    pub class: ParityClass,
}

impl Default for DataFamily {
    fn default() -> Self {
        Self {
            psi: Blob {
                amplitude: 0.1,
                r0: 1.5,
                z0: 2.0,
                width: 0.5,
            },
            swirl: Blob {
                amplitude: 0.1,
                r0: 1.5,
                z0: 2.0,
                width: 0.5,
            },
            modes: vec![1, 2, 3],
            mode_amplitude: 0.1,
            class: ParityClass::General,
        }
    }
}

impl DataFamily {
    /// The default family restricted to the cos-meridian / sin-swirl
    /// class, which has no mean swirl.
    pub fn odevity() -> Self {
        let base = Self::default();
        Self {
            class: ParityClass::CosMeridianSinSwirl,
            swirl: Blob {
                amplitude: 0.0,
                ..base.swirl
            },
            ..base
        }
    }

    /// No perturbation at all.
    pub fn meridian_only() -> Self {
        Self {
            swirl: Blob {
                amplitude: 0.0,
                ..Self::default().swirl
            },
            modes: Vec::new(),
            ..Self::default()
        }
    }

    fn mode_blob(&self, k: usize, which: usize) -> Blob {
        let kf = k as f64;
        let shift = [0.0, 0.35, -0.3, 0.2][which % 4];
        Blob {
            amplitude: self.mode_amplitude / kf,
            r0: self.psi.r0 + 0.1 * (kf - 2.0),
            z0: self.psi.z0 + shift + 0.15 * (kf - 2.0),
            width: self.psi.width,
        }
    }
}

/// Axisymmetric meridian velocity of a Stokes stream function,
/// `u^r = −∂_z ψ / r`, `u^z = D_r(ψ / r)`. Because `D_r` and `∂_z` commute,
/// the discrete divergence vanishes up to rounding.
pub fn stream_function_velocity(psi: &MeridianScalar, kmax: usize) -> ModalVectorField {
    let grid = *psi.grid();
    let psi_r = psi.div_r();
    let mut u = ModalVectorField::zeros(&grid, kmax);
    *u.r.cos_mut(0) = ddz(&psi_r).scaled(-1.0);
    *u.z.cos_mut(0) = radial_divergence(&psi_r);
    u
}

/// Swirl coefficient that makes the cosine residual of mode `k` vanish:
/// `b^θ_k = −(r / k)(D_r a^r_k + ∂_z a^z_k)`.
pub fn close_cos_family(ar: &MeridianScalar, az: &MeridianScalar, k: usize) -> Result<MeridianScalar> {
    if k == 0 {
        return Err(Error::InvalidInput("mode 0 carries no swirl closure".into()));
    }
    let mut d = radial_divergence(ar);
    d.axpy(1.0, &ddz(az));
    let kf = k as f64;
    Ok(d.mul_radial(|r| -r / kf))
}

/// Swirl coefficient closing the sine residual of mode `k`:
/// `a^θ_k = (r / k)(D_r b^r_k + ∂_z b^z_k)`.
pub fn close_sin_family(br: &MeridianScalar, bz: &MeridianScalar, k: usize) -> Result<MeridianScalar> {
    close_cos_family(br, bz, k).map(|x| x.scaled(-1.0))
}

/// Splits the data into the ε-independent base and first-order parts.
pub fn initial_profiles(family: &DataFamily, grid: &MeridianGrid, kmax: usize) -> Result<HierarchyInit> {
    for &k in &family.modes {
        if k == 0 {
            return Err(Error::InvalidInput("mode 0 carries no swirl closure".into()));
        }
        if k > kmax {
            return Err(Error::InvalidInput(format!("data mode {k} exceeds truncation K = {kmax}")));
        }
    }
    let r0 = family.psi.r0;
    let psi = family.psi.sample(grid).mul_radial(|r| r * r);
    let base = stream_function_velocity(&psi, kmax);

    let mut first = ModalVectorField::zeros(grid, kmax);
    *first.theta.cos_mut(0) = family.swirl.sample(grid).mul_radial(|r| r / r0);
    for &k in &family.modes {
        // regular at the axis: r-type coefficients like r^(k-1), z-type like r^k
        let e = k as i32;
        let ar = family.mode_blob(k, 0).sample(grid).mul_radial(|r| (r / r0).powi(e - 1));
        let az = family.mode_blob(k, 1).sample(grid).mul_radial(|r| (r / r0).powi(e));
        *first.theta.sin_mut(k) = close_cos_family(&ar, &az, k)?;
        *first.r.cos_mut(k) = ar;
        *first.z.cos_mut(k) = az;
        if family.class == ParityClass::General {
            let br = family.mode_blob(k, 2).sample(grid).mul_radial(|r| 0.7 * (r / r0).powi(e - 1));
            let bz = family.mode_blob(k, 3).sample(grid).mul_radial(|r| -0.8 * (r / r0).powi(e));
            *first.theta.cos_mut(k) = close_sin_family(&br, &bz, k)?;
            *first.r.sin_mut(k) = br;
            *first.z.sin_mut(k) = bz;
        }
    }
    Ok(HierarchyInit { base, first })
}

/// `u_0 = base + ε · first`.
pub fn build_initial(family: &DataFamily, grid: &MeridianGrid, kmax: usize, eps: f64) -> Result<ModalVectorField> {
    let init = initial_profiles(family, grid, kmax)?;
    let mut u = init.base;
    u.axpy(eps, &init.first);
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::modal::{modal_divergence, parity_violation};

    fn grid() -> MeridianGrid {
        make_grid(24, 32, 4.0, 4.0).unwrap()
    }

    #[test]
    fn eps_zero_is_axisymmetric_without_swirl() {
        let u = build_initial(&DataFamily::default(), &grid(), 4, 0.0).unwrap();
        assert!(u.is_axisymmetric());
        assert!(u.theta.is_zero());
        assert!(u.l2() > 0.0);
    }

    #[test]
    fn constructed_data_is_divergence_free() {
        for fam in [DataFamily::default(), DataFamily::odevity()] {
            let u = build_initial(&fam, &grid(), 4, 0.3).unwrap();
            let div = modal_divergence(&u).max_abs();
            assert!(div <= 1e-12 * u.l2(), "{div}");
        }
    }

    #[test]
    fn odevity_family_is_in_class() {
        let u = build_initial(&DataFamily::odevity(), &grid(), 4, 0.5).unwrap();
        assert_eq!(parity_violation(&u, ParityClass::CosMeridianSinSwirl), 0.0);
        let v = build_initial(&DataFamily::default(), &grid(), 4, 0.5).unwrap();
        assert!(parity_violation(&v, ParityClass::CosMeridianSinSwirl) > 0.0);
    }

    #[test]
    fn rejects_mode_zero_and_overflow() {
        let mut fam = DataFamily::default();
        fam.modes = vec![0];
        assert!(build_initial(&fam, &grid(), 4, 0.1).is_err());
        fam.modes = vec![5];
        assert!(build_initial(&fam, &grid(), 4, 0.1).is_err());
    }
}
