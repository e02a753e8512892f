//! Spectral winding numbers: Bloch contour, real-space polar factor and
//! flux insertion.

use std::f64::consts::{PI, TAU};
use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{BoundaryCondition, EffectiveHamiltonian};
use crate::lattice::{FluxSpec, HoppingTable, LatticeModel, StripCut, StripReduction};
use crate::linalg;

/// Maximum distance from an integer accepted for the contour windings.
pub const QUANTIZATION_TOLERANCE: f64 = 1e-6;

/// Residual below which a real-space winding counts as quantized.
pub const REALSPACE_VERDICT_TOLERANCE: f64 = 0.1;

const MAX_REFINE_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingResult {
    pub base_energy: Complex64,
    pub value: f64,
    pub quantized: i64,
    pub residual: f64,
}

impl WindingResult {
    pub fn new(base_energy: Complex64, value: f64) -> Self {
        let quantized = value.round() as i64;
        Self {
            base_energy,
            value,
            quantized,
            residual: (value - quantized as f64).abs(),
        }
    }

    pub fn is_quantized(&self, tolerance: f64) -> bool {
        self.residual < tolerance
    }
}

/// Winding number of a closed curve `z(t)`, `t in [0, 1]`, around the origin.
///
/// Phase increments between consecutive samples are summed; any interval
/// whose increment exceeds `pi/2` is bisected until it does not.
pub fn contour_winding<F>(z: F, samples: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    if samples < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 contour samples, got {samples}"
        )));
    }
    let values: Vec<Complex64> = (0..samples)
        .into_par_iter()
        .map(|k| z(k as f64 / samples as f64))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for k in 0..samples {
        let t0 = k as f64 / samples as f64;
        let t1 = (k + 1) as f64 / samples as f64;
        let z1 = values[(k + 1) % samples];
        total += increment(&z, t0, values[k], t1, z1, 0)?;
    }
    Ok(total / TAU)
}

fn increment<F>(z: &F, t0: f64, z0: Complex64, t1: f64, z1: Complex64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let d = (z1 / z0).arg();
    if d.abs() <= 0.5 * PI || depth >= MAX_REFINE_DEPTH {
        return Ok(d);
    }
    let tm = 0.5 * (t0 + t1);
    let zm = z(tm)?;
    Ok(increment(z, t0, z0, tm, zm, depth + 1)? + increment(z, tm, zm, t1, z1, depth + 1)?)
}

/// Translation-invariant hopping table `tau_l`, the input of the Bloch winding.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochTable(HoppingTable);

impl BlochTable {
    /// Reduce `model` on the given cut; fails if the table depends on `n`.
    pub fn new(model: &LatticeModel, cut: &StripCut, flux: &FluxSpec, k_x: f64) -> Result<Self> {
        let reduction = StripReduction::new(model, cut, flux, k_x);
        let t0 = reduction.table(0);
        let scale = t0.iter().map(|(_, t)| t.norm()).fold(0.0, f64::max);
        for n in [1, 2, 7, 1000] {
            if reduction.table(n).max_deviation(&t0) > 1e-12 * scale.max(1.0) {
                return Err(Error::NotTranslationInvariant);
            }
        }
        Ok(Self(t0))
    }

    pub fn from_table(table: HoppingTable) -> Self {
        Self(table)
    }

    pub fn table(&self) -> &HoppingTable {
        &self.0
    }

    /// `H_y(u) = sum_l tau_l exp(i u l)` with `u = k_y a`.
    pub fn energy(&self, u: f64) -> Complex64 {
        self.0.bloch(u)
    }

    /// Table with `l -> -l`, i.e. the curve traversed backward.
    pub fn reflected(&self) -> Self {
        Self(HoppingTable::from_entries(
            self.0.iter().map(|(l, t)| (-l, t)),
        ))
    }
}

/// Bloch winding with the default 4096 samples.
pub fn winding_bloch(table: &BlochTable, base_energy: Complex64) -> Result<WindingResult> {
    winding_bloch_with(table, base_energy, 4096)
}

pub fn winding_bloch_with(
    table: &BlochTable,
    base_energy: Complex64,
    samples: usize,
) -> Result<WindingResult> {
    let scale: f64 = table
        .0
        .iter()
        .map(|(_, t)| t.norm())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let on_curve = 1e-10 * scale;
    let nearest = (0..samples)
        .map(|k| (table.energy(TAU * k as f64 / samples as f64) - base_energy).norm())
        .fold(f64::INFINITY, f64::min);
    let curve_error = |distance: f64| Error::BaseEnergyOnCurve {
        re: base_energy.re,
        im: base_energy.im,
        distance,
    };
    if nearest < on_curve {
        return Err(curve_error(nearest));
    }
    let value = contour_winding(
        |t| {
            let z = table.energy(TAU * t) - base_energy;
            if z.norm() < on_curve {
                Err(curve_error(z.norm()))
            } else {
                Ok(z)
            }
        },
        samples,
    )?;
    let result = WindingResult::new(base_energy, value);
    if !result.is_quantized(QUANTIZATION_TOLERANCE) {
        return Err(Error::NotQuantized {
            value,
            residual: result.residual,
        });
    }
    Ok(result)
}

/// Default bulk window: the middle half of the chain.
pub fn bulk_window(len: usize) -> Range<usize> {
    len / 4..len - len / 4
}

/// Real-space winding over the default bulk window.
pub fn winding_realspace(
    h: &EffectiveHamiltonian,
    base_energy: Complex64,
) -> Result<WindingResult> {
    winding_realspace_window(h, base_energy, bulk_window(h.len()))
}

/// Real-space winding `Tr_W(Q^dagger [Q, X]) / |W|` of the unitary polar
/// factor `Q` of `H - E_B`.
///
/// The trace over the whole chain vanishes identically for any finite
/// unitary `Q`, so the trace is restricted to the site window `W`
/// (0-based), away from the boundaries.
pub fn winding_realspace_window(
    h: &EffectiveHamiltonian,
    base_energy: Complex64,
    window: Range<usize>,
) -> Result<WindingResult> {
    if h.bc() != BoundaryCondition::Open {
        return Err(Error::InvalidArgument(
            "real-space winding needs an open chain".into(),
        ));
    }
    let n = h.len();
    if window.is_empty() || window.end > n {
        return Err(Error::InvalidArgument(format!(
            "window {window:?} invalid for L = {n}"
        )));
    }
    let mut shifted = h.matrix().clone();
    for i in 0..n {
        shifted[(i, i)] -= base_energy;
    }
    let eigs = linalg::eigenvalues(h.matrix().as_ref())?;
    let distance = eigs
        .iter()
        .map(|e| (e - base_energy).norm())
        .fold(f64::INFINITY, f64::min);
    let scale = h.frobenius_norm() / (n as f64).sqrt();
    if distance < 1e-9 * scale.max(base_energy.norm()).max(f64::MIN_POSITIVE) {
        return Err(Error::SingularShift { distance });
    }
    let (q, _) = linalg::polar_unitary(shifted.as_ref())?;
    // (Q^dagger [Q, X])_ii = x_i - sum_j x_j |Q_ji|^2
    let len = window.len() as f64;
    let mut total = 0.0;
    for i in window {
        let spread: f64 = (0..n).map(|j| j as f64 * q[(j, i)].norm_sqr()).sum();
        total += i as f64 - spread;
    }
    Ok(WindingResult::new(base_energy, total / len))
}

/// Number of flux samples used when none is given.
pub const DEFAULT_FLUX_SAMPLES: usize = 720;

/// Relative LU pivot below which `det(H(phi) - E_B)` is treated as zero.
const ZERO_PIVOT: f64 = 1e-13;

/// Winding of `det(H(phi) - E_B)` as the boundary phase `phi` runs over
/// `[0, 2 pi)`. `build` returns the chain with the inserted phase.
pub fn winding_flux<F>(build: F, base_energy: Complex64, samples: usize) -> Result<WindingResult>
where
    F: Fn(f64) -> Result<EffectiveHamiltonian> + Sync,
{
    let det_phase = |t: f64| -> Result<Complex64> {
        let phi = TAU * t;
        let h = build(phi)?;
        let mut m = h.matrix().clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= base_energy;
        }
        let d = linalg::log_det(m.as_ref())?;
        if d.min_pivot_ratio < ZERO_PIVOT {
            return Err(Error::ZeroDeterminant { phase: phi });
        }
        Ok(Complex64::cis(d.phase))
    };
    let value = contour_winding(det_phase, samples)?;
    let result = WindingResult::new(base_energy, value);
    if !result.is_quantized(QUANTIZATION_TOLERANCE) {
        return Err(Error::NotQuantized {
            value,
            residual: result.residual,
        });
    }
    Ok(result)
}
