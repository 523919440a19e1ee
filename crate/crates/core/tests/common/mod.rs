//! Pseudo-spectral oracle for the modal products: sample the θ-series on a
//! fine grid, multiply pointwise, project back with a direct DFT.
#![allow(dead_code)]

use std::f64::consts::PI;

use cylns_core::grid::{ddr, ddz, AxisParity, MeridianGrid, MeridianScalar};
use cylns_core::modal::{ModalScalarField, ModalVectorField};
use cylns_core::random::FieldRng;
use cylns_core::{advect, convolve_modes, make_grid, Component};

pub const PAIRS: usize = 100;
pub const TOL: f64 = 1e-11;

/// Values at `θ_m = 2π m / n` for every meridian node, `[m][idx]`.
pub fn synth(f: &ModalScalarField, n: usize) -> Vec<Vec<f64>> {
    let len = f.grid().len();
    (0..n)
        .map(|m| {
            let th = 2.0 * PI * m as f64 / n as f64;
            (0..len)
                .map(|idx| {
                    let mut v = f.cos(0).values()[idx];
                    for k in 1..=f.kmax() {
                        let a = k as f64 * th;
                        v += f.cos(k).values()[idx] * a.cos() + f.sin(k).values()[idx] * a.sin();
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// `∂_θ` of the series, sampled.
pub fn synth_dtheta(f: &ModalScalarField, n: usize) -> Vec<Vec<f64>> {
    let len = f.grid().len();
    (0..n)
        .map(|m| {
            let th = 2.0 * PI * m as f64 / n as f64;
            (0..len)
                .map(|idx| {
                    let mut v = 0.0;
                    for k in 1..=f.kmax() {
                        let kf = k as f64;
                        let a = kf * th;
                        v += kf * (-f.cos(k).values()[idx] * a.sin() + f.sin(k).values()[idx] * a.cos());
                    }
                    v
                })
                .collect()
        })
        .collect()
}

pub fn analyse(grid: &MeridianGrid, kmax: usize, samples: &[Vec<f64>]) -> ModalScalarField {
    let n = samples.len();
    let len = grid.len();
    let mut out = ModalScalarField::zeros(grid, kmax);
    for k in 0..=kmax {
        let (mut c, mut s) = (vec![0.0; len], vec![0.0; len]);
        for (m, row) in samples.iter().enumerate() {
            let a = 2.0 * PI * (k * m) as f64 / n as f64;
            for idx in 0..len {
                c[idx] += row[idx] * a.cos();
                s[idx] += row[idx] * a.sin();
            }
        }
        let w = if k == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
        *out.cos_mut(k) = MeridianScalar::from_values(grid, c.iter().map(|x| x * w).collect()).unwrap();
        if k > 0 {
            *out.sin_mut(k) = MeridianScalar::from_values(grid, s.iter().map(|x| x * w).collect()).unwrap();
        }
    }
    out
}

pub fn rel_err(a: &ModalScalarField, b: &ModalScalarField) -> f64 {
    let scale = b.max_abs().max(1e-300);
    a.sub(b).max_abs() / scale
}

pub fn n_theta(kmax: usize) -> usize {
    4 * kmax + 4
}

/// Axis parity of slot `s` of component `c`: `(−1)^k` for `z`,
/// `(−1)^(k+1)` for `r` and `θ`.
pub fn parity(c: Component, s: usize) -> AxisParity {
    let k = s.div_ceil(2);
    let odd_k = k % 2 == 1;
    let even = match c {
        Component::R | Component::Theta => odd_k,
        _ => !odd_k,
    };
    if even {
        AxisParity::Even
    } else {
        AxisParity::Odd
    }
}

pub fn ddr_field(f: &ModalScalarField, c: Component) -> ModalScalarField {
    f.map_slots(|s, x| ddr(x, parity(c, s)))
}

/// Worst relative error of `convolve_modes` against the oracle over
/// `pairs` random pairs.
pub fn convolution_error(seed: u64, pairs: usize) -> f64 {
    let g = make_grid(8, 8, 2.0, 2.0).unwrap();
    let kmax = 4;
    let mut rng = FieldRng::new(seed);
    let n = n_theta(kmax);
    let mut worst = 0.0_f64;
    for _ in 0..pairs {
        let a = rng.scalar(&g, kmax);
        let b = rng.scalar(&g, kmax);
        let (sa, sb) = (synth(&a, n), synth(&b, n));
        let prod: Vec<Vec<f64>> = sa
            .iter()
            .zip(&sb)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).collect())
            .collect();
        let oracle = analyse(&g, kmax, &prod);
        worst = worst.max(rel_err(&convolve_modes(&a, &b).unwrap(), &oracle));
    }
    worst
}

/// Worst relative error of `advect` against physical-space evaluation.
pub fn advection_error(seed: u64, pairs: usize) -> f64 {
    let g = make_grid(8, 8, 2.0, 2.0).unwrap();
    let kmax = 3;
    let mut rng = FieldRng::new(seed);
    let n = n_theta(kmax);
    let r: Vec<f64> = (0..g.len()).map(|idx| g.r(idx / g.nz())).collect();
    let mut worst = 0.0_f64;
    for _ in 0..pairs {
        let u = rng.vector(&g, kmax);
        let w = rng.vector(&g, kmax);
        let [ur, ut, uz] = [synth(&u.r, n), synth(&u.theta, n), synth(&u.z, n)];
        let [wr, wt] = [synth(&w.r, n), synth(&w.theta, n)];
        let comps = [Component::R, Component::Theta, Component::Z];
        let fast: ModalVectorField = advect(&u, &w).unwrap();
        for c in comps {
            let wc = w.component(c);
            let dr = synth(&ddr_field(wc, c), n);
            let dz = synth(&wc.map_slots(|_, x| ddz(x)), n);
            let dth = synth_dtheta(wc, n);
            let prod: Vec<Vec<f64>> = (0..n)
                .map(|m| {
                    (0..g.len())
                        .map(|i| {
                            let rot = match c {
                                Component::R => -wt[m][i],
                                Component::Theta => wr[m][i],
                                _ => 0.0,
                            };
                            ur[m][i] * dr[m][i] + uz[m][i] * dz[m][i] + ut[m][i] / r[i] * (dth[m][i] + rot)
                        })
                        .collect()
                })
                .collect();
            worst = worst.max(rel_err(fast.component(c), &analyse(&g, kmax, &prod)));
        }
    }
    worst
}
