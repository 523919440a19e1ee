//! Modal evaluation of the advection term `(u·∇) w` in cylindrical
//! coordinates and the forcing terms of the profile hierarchy.
//!
//! Products of θ-series are formed by direct trigonometric convolution.
//! A product term is skipped whenever either input slot is identically
//! zero, so slots that are structurally zero stay bitwise zero.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::MeridianScalar;
use crate::modal::{
    num_slots, slot_index, slot_mode, theta_derivative_vector, ModalScalarField, ModalVectorField,
    Trig, VECTOR_COMPONENTS,
};
use crate::solver::ProfileHierarchy;

/// Output of [`advect`]: the modal coefficients of `(u·∇) w`.
pub type AdvectionResult = ModalVectorField;

/// One term `out += coeff · a[a_slot] · b[b_slot]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvTerm {
    pub a: usize,
    pub b: usize,
    pub coeff: f64,
}

/// Product terms grouped by output slot, in a fixed order.
#[derive(Debug, Clone)]
pub struct ConvolutionPlan {
    pub kmax: usize,
    pub by_output: Vec<Vec<ConvTerm>>,
}

impl ConvolutionPlan {
    pub fn new(kmax: usize) -> Self {
        let mut acc: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); num_slots(kmax)];
        let mut push = |k: i64, trig: Trig, a: usize, b: usize, c: f64| {
            // sin of a negative mode flips sign; sin 0 vanishes
            let (k, c) = match trig {
                Trig::Sin if k < 0 => (-k, -c),
                _ => (k.abs(), c),
            };
            if k as usize > kmax || (trig == Trig::Sin && k == 0) {
                return;
            }
            *acc[slot_index(k as usize, trig)].entry((a, b)).or_insert(0.0) += c;
        };
        for a in 0..num_slots(kmax) {
            let (k1, t1) = slot_mode(a);
            for b in 0..num_slots(kmax) {
                let (k2, t2) = slot_mode(b);
                let (p, m) = ((k1 + k2) as i64, k1 as i64 - k2 as i64);
                match (t1, t2) {
                    (Trig::Cos, Trig::Cos) => {
                        push(p, Trig::Cos, a, b, 0.5);
                        push(m, Trig::Cos, a, b, 0.5);
                    }
                    (Trig::Sin, Trig::Sin) => {
                        push(m, Trig::Cos, a, b, 0.5);
                        push(p, Trig::Cos, a, b, -0.5);
                    }
                    (Trig::Sin, Trig::Cos) => {
                        push(p, Trig::Sin, a, b, 0.5);
                        push(m, Trig::Sin, a, b, 0.5);
                    }
                    (Trig::Cos, Trig::Sin) => {
                        push(p, Trig::Sin, a, b, 0.5);
                        push(-m, Trig::Sin, a, b, 0.5);
                    }
                }
            }
        }
        let by_output = acc
            .into_iter()
            .map(|m| {
                m.into_iter()
                    .filter(|&(_, c)| c != 0.0)
                    .map(|((a, b), coeff)| ConvTerm { a, b, coeff })
                    .collect()
            })
            .collect();
        Self { kmax, by_output }
    }

    pub fn num_terms(&self) -> usize {
        self.by_output.iter().map(Vec::len).sum()
    }
}

/// Shared plan per truncation.
pub fn convolution_plan(kmax: usize) -> Arc<ConvolutionPlan> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<ConvolutionPlan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(kmax)
        .or_insert_with(|| Arc::new(ConvolutionPlan::new(kmax)))
        .clone()
}

/// `Σ_p a_p · b_p` as a modal field, truncated to `K`. Each output slot is
/// accumulated pair by pair, term by term, in plan order.
fn convolve_sum(pairs: &[(&ModalScalarField, &ModalScalarField)]) -> ModalScalarField {
    let (a0, _) = pairs[0];
    let grid = *a0.grid();
    let kmax = a0.kmax();
    let plan = convolution_plan(kmax);
    let zero: Vec<(Vec<bool>, Vec<bool>)> = pairs
        .iter()
        .map(|(a, b)| {
            (
                a.slots().iter().map(MeridianScalar::is_zero).collect(),
                b.slots().iter().map(MeridianScalar::is_zero).collect(),
            )
        })
        .collect();
    let slots: Vec<MeridianScalar> = plan
        .by_output
        .par_iter()
        .map(|terms| {
            let mut out = MeridianScalar::zeros(&grid);
            for ((a, b), (za, zb)) in pairs.iter().zip(&zero) {
                for t in terms {
                    if za[t.a] || zb[t.b] {
                        continue;
                    }
                    let (x, y) = (a.slot(t.a).values(), b.slot(t.b).values());
                    for ((o, &p), &q) in out.values_mut().iter_mut().zip(x).zip(y) {
                        *o += t.coeff * p * q;
                    }
                }
            }
            out
        })
        .collect();
    ModalScalarField::from_slots(&grid, kmax, slots).expect("plan matches layout")
}

/// Coefficients of the pointwise product of two truncated θ-series,
/// truncated back to `K`.
pub fn convolve_modes(a: &ModalScalarField, b: &ModalScalarField) -> Result<ModalScalarField> {
    a.check_shape(b)?;
    Ok(convolve_sum(&[(a, b)]))
}

/// `(u·∇) w` with the cylindrical geometric terms:
/// `u^r ∂_r w + u^z ∂_z w + (u^θ / r)(∂_θ w + e_z × w)` where the last
/// bracket is [`theta_derivative_vector`].
pub fn advect(u: &ModalVectorField, w: &ModalVectorField) -> Result<AdvectionResult> {
    u.check_shape(w)?;
    let rot = theta_derivative_vector(w);
    let parts: Vec<ModalScalarField> = VECTOR_COMPONENTS
        .iter()
        .map(|&c| {
            let wc = w.component(c);
            let dr = wc.ddr(c);
            let dz = wc.ddz();
            let th = rot.component(c).div_r();
            convolve_sum(&[(&u.r, &dr), (&u.z, &dz), (&u.theta, &th)])
        })
        .collect();
    let mut it = parts.into_iter();
    Ok(ModalVectorField {
        r: it.next().expect("r"),
        theta: it.next().expect("theta"),
        z: it.next().expect("z"),
    })
}

/// `Σ_{i=lo}^{hi} advect(u_i, u_{n-i})` in ascending `i`.
pub(crate) fn advect_sum(orders: &[ModalVectorField], n: usize, lo: usize, hi: usize) -> Result<ModalVectorField> {
    let mut out = ModalVectorField::zeros(orders[0].grid(), orders[0].kmax());
    for i in lo..=hi {
        out.axpy(1.0, &advect(&orders[i], &orders[n - i])?);
    }
    Ok(out)
}

/// Forcing of the order-`n` profile equation,
/// `−Σ_{i=1}^{n−1} (u_(i)·∇) u_(n−i)`.
pub fn hierarchy_forcing(h: &ProfileHierarchy, n: usize) -> Result<ModalVectorField> {
    let orders = h.orders();
    let template = orders.first().ok_or(Error::MissingOrder(0))?;
    if n < 2 {
        return Ok(ModalVectorField::zeros(template.grid(), template.kmax()));
    }
    if orders.len() < n {
        return Err(Error::MissingOrder(orders.len()));
    }
    Ok(advect_sum(orders, n, 1, n - 1)?.scaled(-1.0))
}
