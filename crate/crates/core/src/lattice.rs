//! Bravais lattices with a hopping set, strip cuts, Landau-gauge Peierls
//! phases and the strip reduction to effective 1D hopping tables.
//!
//! Conventions: the crystal axes `X`, `Y` span an angle `alpha`; the strip
//! frame `(x, y)` is oblique with the same angle, `x` rotated by `theta` from
//! `X`. Sites of the reduced chain sit at `y = n a`. The vector potential is
//! the Landau gauge `A = (B sin(alpha) y, 0, 0)`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Primitive cell of a 2D Bravais lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BravaisSpec {
    pub a_x: f64,
    pub a_y: f64,
    /// Angle between the primitive vectors, in radians.
    pub alpha: f64,
}

impl BravaisSpec {
    pub fn new(a_x: f64, a_y: f64, alpha: f64) -> Result<Self> {
        if !(a_x.is_finite() && a_x > 0.0) || !(a_y.is_finite() && a_y > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "lattice constants must be positive, got a_X = {a_x}, a_Y = {a_y}"
            )));
        }
        if !(alpha > 0.0 && alpha < PI) {
            return Err(Error::InvalidLattice(format!(
                "angle between primitive vectors must lie in (0, pi), got {alpha}"
            )));
        }
        Ok(Self { a_x, a_y, alpha })
    }

    pub fn rectangular(a_x: f64, a_y: f64) -> Result<Self> {
        Self::new(a_x, a_y, FRAC_PI_2)
    }

    pub fn square() -> Self {
        Self {
            a_x: 1.0,
            a_y: 1.0,
            alpha: FRAC_PI_2,
        }
    }

    pub fn is_rectangular(&self) -> bool {
        (self.alpha - FRAC_PI_2).abs() < 1e-12
    }

    /// Cartesian components of `n_X a_X u_X + n_Y a_Y u_Y`, with `u_X` along
    /// the first Cartesian axis.
    pub fn cartesian(&self, n_x: i64, n_y: i64) -> [f64; 2] {
        let (s, c) = self.alpha.sin_cos();
        let nx = n_x as f64 * self.a_x;
        let ny = n_y as f64 * self.a_y;
        [nx + ny * c, ny * s]
    }

    /// Area of the primitive cell.
    pub fn cell_area(&self) -> f64 {
        self.a_x * self.a_y * self.alpha.sin()
    }
}

/// A single hop `t(delta)` with `delta = n_X a_X u_X + n_Y a_Y u_Y`.
///
/// The amplitude multiplies `psi(R + delta)` in the equation for `psi(R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoppingTerm {
    pub n_x: i64,
    pub n_y: i64,
    pub amplitude: Complex64,
}

impl HoppingTerm {
    pub fn new(n_x: i64, n_y: i64, amplitude: Complex64) -> Result<Self> {
        if n_x == 0 && n_y == 0 {
            return Err(Error::InvalidHopping(
                "hop (0, 0) is an on-site term".into(),
            ));
        }
        if amplitude == Complex64::new(0.0, 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidHopping(format!(
                "hop ({n_x}, {n_y}) needs a finite nonzero amplitude, got {amplitude}"
            )));
        }
        Ok(Self {
            n_x,
            n_y,
            amplitude,
        })
    }
}

/// Bravais geometry plus the explicit hopping set. Both `+delta` and
/// `-delta` must be listed when both hops exist; nothing is symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    bravais: BravaisSpec,
    hops: Vec<HoppingTerm>,
}

impl LatticeModel {
    pub fn new(bravais: BravaisSpec, hops: Vec<HoppingTerm>) -> Result<Self> {
        if hops.is_empty() {
            return Err(Error::InvalidHopping("hopping set is empty".into()));
        }
        for (i, a) in hops.iter().enumerate() {
            if hops[..i].iter().any(|b| b.n_x == a.n_x && b.n_y == a.n_y) {
                return Err(Error::InvalidHopping(format!(
                    "hop ({}, {}) listed twice",
                    a.n_x, a.n_y
                )));
            }
        }
        Ok(Self { bravais, hops })
    }

    /// Anisotropic nearest-neighbor model with independent left/right
    /// amplitudes: `t(+a_X) = kx_left`, `t(-a_X) = kx_right`,
    /// `t(+a_Y) = ky_left`, `t(-a_Y) = ky_right`.
    pub fn nearest_neighbor(
        bravais: BravaisSpec,
        kx_left: Complex64,
        kx_right: Complex64,
        ky_left: Complex64,
        ky_right: Complex64,
    ) -> Result<Self> {
        let candidates = [
            (1, 0, kx_left),
            (-1, 0, kx_right),
            (0, 1, ky_left),
            (0, -1, ky_right),
        ];
        let hops = candidates
            .into_iter()
            .filter(|(_, _, t)| *t != Complex64::new(0.0, 0.0))
            .map(|(nx, ny, t)| HoppingTerm::new(nx, ny, t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bravais, hops)
    }

    pub fn bravais(&self) -> &BravaisSpec {
        &self.bravais
    }

    pub fn hops(&self) -> &[HoppingTerm] {
        &self.hops
    }

    pub fn hop(&self, n_x: i64, n_y: i64) -> Option<&HoppingTerm> {
        self.hops.iter().find(|h| h.n_x == n_x && h.n_y == n_y)
    }

    /// Same geometry with every amplitude mapped through `f`.
    pub fn map_amplitudes(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        let hops = self
            .hops
            .iter()
            .map(|h| HoppingTerm::new(h.n_x, h.n_y, f(h.amplitude)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.bravais, hops)
    }
}

/// Coprime `(p, q)` cut of the lattice: the strip edge direction `x` makes the
/// angle `theta` with `X` and the reduced chain has lattice constant `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripCut {
    p: i64,
    q: i64,
    theta: f64,
    a: f64,
}

impl StripCut {
    pub fn p(&self) -> i64 {
        self.p
    }
    pub fn q(&self) -> i64 {
        self.q
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    /// Reduced lattice constant of the effective 1D chain.
    pub fn a(&self) -> f64 {
        self.a
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Magnetic flux density `B` (flux quanta per unit area).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSpec {
    value: f64,
    rational: Option<(i64, i64)>,
}

impl FluxSpec {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            rational: Some((0, 1)),
        }
    }

    pub fn real(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidFlux(format!(
                "flux must be finite, got {value}"
            )));
        }
        Ok(Self {
            value,
            rational: None,
        })
    }

    pub fn rational(numerator: i64, denominator: i64) -> Result<Self> {
        if denominator <= 0 {
            return Err(Error::InvalidFlux(format!(
                "denominator must be positive, got {denominator}"
            )));
        }
        Ok(Self {
            value: numerator as f64 / denominator as f64,
            rational: Some((numerator, denominator)),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn rational_tag(&self) -> Option<(i64, i64)> {
        self.rational
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }
}

/// Derive the strip angle and reduced lattice constant of a coprime cut.
///
/// `theta` solves `a_X sin(theta) / (a_Y sin(alpha - theta)) = p / q`, so that
/// `tan(theta) = p a_Y sin(alpha) / (q a_X + p a_Y cos(alpha))`. The reduced
/// constant uses `a = a_Y sin(alpha - theta) / (q sin(alpha))`, which stays
/// valid in the `p = 0` limit.
pub fn strip_parameters(bravais: &BravaisSpec, p: i64, q: i64) -> Result<StripCut> {
    let invalid = |reason: &str| Error::InvalidCut {
        p,
        q,
        reason: reason.to_string(),
    };
    if p == 0 && q == 0 {
        return Err(invalid("p = q = 0 does not define a direction"));
    }
    if q < 1 {
        return Err(invalid("q must be at least 1"));
    }
    if p < 0 {
        return Err(invalid("p must be non-negative"));
    }
    if gcd(p, q) != 1 {
        return Err(invalid(&format!(
            "p and q are not coprime (gcd = {})",
            gcd(p, q)
        )));
    }
    let (s, c) = bravais.alpha.sin_cos();
    let pf = p as f64;
    let qf = q as f64;
    let theta = (pf * bravais.a_y * s).atan2(qf * bravais.a_x + pf * bravais.a_y * c);
    let a = bravais.a_y * (bravais.alpha - theta).sin() / (qf * s);
    Ok(StripCut { p, q, theta, a })
}

/// Components of a hop in the oblique strip frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub delta_x: f64,
    pub delta_y: f64,
    /// Integer chain shift `l` with `delta_y = l a`.
    pub shift: i64,
}

pub fn project_delta(cut: &StripCut, bravais: &BravaisSpec, term: &HoppingTerm) -> Projection {
    let s = bravais.alpha.sin();
    let theta = cut.theta;
    let nx = term.n_x as f64 * bravais.a_x;
    let ny = term.n_y as f64 * bravais.a_y;
    let delta_x = nx * (bravais.alpha + theta).sin() / s + ny * theta.sin() / s;
    let delta_y = -nx * theta.sin() / s + ny * (bravais.alpha - theta).sin() / s;
    Projection {
        delta_x,
        delta_y,
        shift: -term.n_x * cut.p + term.n_y * cut.q,
    }
}

/// Static part `theta_delta = pi B delta_y sin(alpha) (delta_x + delta_y cos(alpha))`
/// of the Peierls phase.
pub fn peierls_static_phase(
    bravais: &BravaisSpec,
    flux: &FluxSpec,
    delta_x: f64,
    delta_y: f64,
) -> f64 {
    let (s, c) = bravais.alpha.sin_cos();
    PI * flux.value * delta_y * s * (delta_x + delta_y * c)
}

/// Effective hopping amplitudes `tau_l(n)` of the reduced chain, keyed by
/// shift `l`. The `l = 0` entry is the on-site energy.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HoppingTable(BTreeMap<i64, Complex64>);

impl HoppingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut table = Self::new();
        for (l, t) in entries {
            table.add(l, t);
        }
        table
    }

    pub fn add(&mut self, shift: i64, amplitude: Complex64) {
        *self.0.entry(shift).or_default() += amplitude;
    }

    pub fn get(&self, shift: i64) -> Complex64 {
        self.0.get(&shift).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.0.iter().map(|(&l, &t)| (l, t))
    }

    pub fn shifts(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.keys().copied()
    }

    pub fn max_shift(&self) -> i64 {
        self.0.keys().map(|l| l.abs()).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bloch Hamiltonian `H_y(u) = sum_l tau_l exp(i u l)` with `u = k_y a`.
    pub fn bloch(&self, u: f64) -> Complex64 {
        self.iter()
            .map(|(l, t)| t * Complex64::cis(u * l as f64))
            .sum()
    }

    /// Largest entrywise deviation from another table.
    pub fn max_deviation(&self, other: &HoppingTable) -> f64 {
        self.0
            .keys()
            .chain(other.0.keys())
            .map(|&l| (self.get(l) - other.get(l)).norm())
            .fold(0.0, f64::max)
    }
}

/// One hop of the lattice pre-projected onto the strip frame:
/// `tau contribution = amplitude * exp(i gradient * n)`.
#[derive(Debug, Clone, Copy)]
struct ReducedHop {
    shift: i64,
    amplitude: Complex64,
    gradient: f64,
}

/// Strip reduction of a lattice model at fixed flux and quasi-momentum,
/// cheap to evaluate at many chain sites.
#[derive(Debug, Clone)]
pub struct StripReduction {
    hops: Vec<ReducedHop>,
    max_shift: i64,
}

impl StripReduction {
    pub fn new(model: &LatticeModel, cut: &StripCut, flux: &FluxSpec, k_x: f64) -> Self {
        let bravais = model.bravais();
        let (s, c) = bravais.alpha.sin_cos();
        let b = flux.value;
        let hops: Vec<ReducedHop> = model
            .hops()
            .iter()
            .map(|term| {
                let proj = project_delta(cut, bravais, term);
                let ly = proj.shift as f64 * cut.a;
                let static_phase = peierls_static_phase(bravais, flux, proj.delta_x, ly);
                ReducedHop {
                    shift: proj.shift,
                    amplitude: term.amplitude * Complex64::cis(k_x * proj.delta_x + static_phase),
                    gradient: TAU * b * cut.a * s * (proj.delta_x + ly * c),
                }
            })
            .collect();
        let max_shift = hops.iter().map(|h| h.shift.abs()).max().unwrap_or(0);
        Self { hops, max_shift }
    }

    pub fn max_shift(&self) -> i64 {
        self.max_shift
    }

    pub fn table(&self, n: i64) -> HoppingTable {
        let mut table = HoppingTable::new();
        for hop in &self.hops {
            table.add(
                hop.shift,
                hop.amplitude * Complex64::cis(hop.gradient * n as f64),
            );
        }
        table
    }
}

/// Effective hopping table `tau_l(n)` at chain site `n`.
pub fn effective_hopping_table(
    model: &LatticeModel,
    cut: &StripCut,
    flux: &FluxSpec,
    k_x: f64,
    n: i64,
) -> HoppingTable {
    StripReduction::new(model, cut, flux, k_x).table(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reciprocity {
    pub reciprocal: bool,
    pub hermitian: bool,
}

/// Reciprocal: every hop has its reverse with equal modulus. Hermitian:
/// additionally `t(-delta) = conj(t(delta))`.
pub fn classify_reciprocity(model: &LatticeModel) -> Reciprocity {
    let scale = model
        .hops()
        .iter()
        .map(|h| h.amplitude.norm())
        .fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    let mut reciprocal = true;
    let mut hermitian = true;
    for hop in model.hops() {
        match model.hop(-hop.n_x, -hop.n_y) {
            None => {
                return Reciprocity {
                    reciprocal: false,
                    hermitian: false,
                }
            }
            Some(rev) => {
                if (rev.amplitude.norm() - hop.amplitude.norm()).abs() > tol {
                    reciprocal = false;
                }
                if (rev.amplitude - hop.amplitude.conj()).norm() > tol {
                    hermitian = false;
                }
            }
        }
    }
    Reciprocity {
        reciprocal,
        hermitian: reciprocal && hermitian,
    }
}

/// Bloch energy `E(k) = sum t(delta) exp(i k . delta)`; `k` in Cartesian
/// components with the first axis along `X`.
pub fn bloch_energy(model: &LatticeModel, k: [f64; 2]) -> Complex64 {
    model
        .hops()
        .iter()
        .map(|h| {
            let d = model.bravais().cartesian(h.n_x, h.n_y);
            h.amplitude * Complex64::cis(k[0] * d[0] + k[1] * d[1])
        })
        .sum()
}

/// Area of the Bloch-spectrum image in the complex plane.
///
/// The Brillouin zone is sampled on a `4 resolution x 4 resolution` grid of
/// reduced momenta (`k . delta = n_X k_1 + n_Y k_2`) and every sample marks
/// the square pixel that contains it. Pixels have side
/// `diameter / resolution`, `diameter` being the larger bounding-box side of
/// the image. A real spectrum therefore reports at most one row of pixels.
pub fn spectral_area(model: &LatticeModel, resolution: usize) -> Result<f64> {
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!(
            "spectral area resolution must be >= 64, got {resolution}"
        )));
    }
    let samples = 4 * resolution;
    let step = TAU / samples as f64;
    // Per-hop phase tables keep the inner loop to complex multiplies.
    let tables: Vec<(Complex64, Vec<Complex64>, Vec<Complex64>)> = model
        .hops()
        .iter()
        .map(|h| {
            let row = (0..samples)
                .map(|i| Complex64::cis(h.n_x as f64 * step * i as f64))
                .collect();
            let col = (0..samples)
                .map(|j| Complex64::cis(h.n_y as f64 * step * j as f64))
                .collect();
            (h.amplitude, row, col)
        })
        .collect();
    let energy = |i: usize, j: usize| -> Complex64 {
        tables.iter().map(|(t, row, col)| t * row[i] * col[j]).sum()
    };

    let (mut re_min, mut re_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut im_min, mut im_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..samples {
        for j in 0..samples {
            let e = energy(i, j);
            re_min = re_min.min(e.re);
            re_max = re_max.max(e.re);
            im_min = im_min.min(e.im);
            im_max = im_max.max(e.im);
        }
    }
    let diameter = (re_max - re_min).max(im_max - im_min);
    if diameter <= 0.0 {
        return Ok(0.0);
    }
    let side = diameter / resolution as f64;
    let nx = ((re_max - re_min) / side) as usize + 1;
    let ny = ((im_max - im_min) / side) as usize + 1;
    let mut occupied = vec![false; nx * ny];
    for i in 0..samples {
        for j in 0..samples {
            let e = energy(i, j);
            let px = (((e.re - re_min) / side) as usize).min(nx - 1);
            let py = (((e.im - im_min) / side) as usize).min(ny - 1);
            occupied[py * nx + px] = true;
        }
    }
    let count = occupied.iter().filter(|&&o| o).count();
    Ok(count as f64 * side * side)
}
