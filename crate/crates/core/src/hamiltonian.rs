//! Dense effective 1D Hamiltonians of the strip geometry.
//!
//! Sites are indexed `n = 1..=L` and row `n - 1` of the matrix holds the
//! equation `E phi_n = sum_l tau_l(n) phi_{n+l}`. Under OBC shifts that leave
//! `[1, L]` are dropped; under PBC they wrap with no extra phase unless a
//! twist is requested explicitly.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{
    strip_parameters, BravaisSpec, FluxSpec, LatticeModel, StripCut, StripReduction,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Open,
    Periodic,
    /// Periodic with the boundary link multiplied by `exp(+i phase)` for hops
    /// wrapping forward and `exp(-i phase)` for hops wrapping backward.
    Twisted(f64),
}

impl BoundaryCondition {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Open => "obc",
            Self::Periodic => "pbc",
            Self::Twisted(_) => "twisted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builder {
    Generic,
    Hofstadter,
    ReciprocalDiagonal,
    GaugeChain,
    Custom,
}

#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    matrix: Mat<Complex64>,
    bc: BoundaryCondition,
    k_x: f64,
    flux: FluxSpec,
    builder: Builder,
    shifts: BTreeSet<i64>,
}

impl EffectiveHamiltonian {
    /// Wrap an externally built square matrix.
    pub fn from_matrix(matrix: Mat<Complex64>, bc: BoundaryCondition) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonian must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut shifts = BTreeSet::new();
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                if matrix[(i, j)] != Complex64::default() {
                    shifts.insert(j as i64 - i as i64);
                }
            }
        }
        Ok(Self {
            matrix,
            bc,
            k_x: 0.0,
            flux: FluxSpec::zero(),
            builder: Builder::Custom,
            shifts,
        })
    }

    pub(crate) fn set_origin(
        &mut self,
        builder: Builder,
        k_x: f64,
        flux: FluxSpec,
        shifts: BTreeSet<i64>,
    ) {
        self.builder = builder;
        self.k_x = k_x;
        self.flux = flux;
        self.shifts = shifts;
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn k_x(&self) -> f64 {
        self.k_x
    }

    pub fn flux(&self) -> &FluxSpec {
        &self.flux
    }

    pub fn builder(&self) -> Builder {
        self.builder
    }

    /// Declared chain shifts `l` (before wrapping).
    pub fn shifts(&self) -> &BTreeSet<i64> {
        &self.shifts
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::linalg::frobenius_norm(self.matrix.as_ref())
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Nonzero entries in row-major order.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, Complex64)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.matrix[(i, j)];
                if v != Complex64::default() {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            (0..n).all(|j| (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm() <= tol)
        })
    }
}

/// Fill an `L x L` chain matrix row by row. `row(n)` returns `(shift, amplitude)`
/// pairs for site `n` (1-based).
pub(crate) fn fill_chain(
    len: usize,
    bc: BoundaryCondition,
    max_shift: i64,
    mut row: impl FnMut(i64) -> Vec<(i64, Complex64)>,
) -> Result<Mat<Complex64>> {
    let needed = 2 * max_shift as usize + 1;
    if len < needed {
        return Err(Error::SizeTooSmall {
            len,
            max_shift,
            needed,
        });
    }
    let l = len as i64;
    let twist = match bc {
        BoundaryCondition::Open => None,
        BoundaryCondition::Periodic => Some(0.0),
        BoundaryCondition::Twisted(phase) => Some(phase),
    };
    let mut m = Mat::<Complex64>::zeros(len, len);
    for n in 1..=l {
        for (shift, amp) in row(n) {
            let target = n + shift;
            let (col, factor) = if (1..=l).contains(&target) {
                (target, Complex64::new(1.0, 0.0))
            } else if let Some(phase) = twist {
                let wrapped = (target - 1).rem_euclid(l) + 1;
                let sign = if target > l { 1.0 } else { -1.0 };
                (wrapped, Complex64::cis(sign * phase))
            } else {
                continue;
            };
            m[((n - 1) as usize, (col - 1) as usize)] += amp * factor;
        }
    }
    Ok(m)
}

/// Generic strip reduction of an arbitrary lattice model.
pub fn assemble(
    model: &LatticeModel,
    cut: &StripCut,
    flux: &FluxSpec,
    k_x: f64,
    len: usize,
    bc: BoundaryCondition,
) -> Result<EffectiveHamiltonian> {
    let reduction = StripReduction::new(model, cut, flux, k_x);
    let mut shifts = BTreeSet::new();
    let matrix = fill_chain(len, bc, reduction.max_shift(), |n| {
        let table = reduction.table(n);
        shifts.extend(table.shifts());
        table.iter().collect()
    })?;
    Ok(EffectiveHamiltonian {
        matrix,
        bc,
        k_x,
        flux: *flux,
        builder: Builder::Generic,
        shifts,
    })
}

/// Nonreciprocal anisotropic Harper-Hofstadter parameters with the
/// imaginary-gauge parameterization `kappa^(L,R) = J exp(+-h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HofstadterParams {
    pub j_x: f64,
    pub j_y: f64,
    pub h_x: f64,
    pub h_y: f64,
}

impl HofstadterParams {
    pub fn new(j_x: f64, j_y: f64, h_x: f64, h_y: f64) -> Result<Self> {
        if !(j_x > 0.0 && j_y > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "hopping amplitudes must be positive, got J_X = {j_x}, J_Y = {j_y}"
            )));
        }
        Ok(Self { j_x, j_y, h_x, h_y })
    }

    /// `t(+a_X)`
    pub fn kappa_x_left(&self) -> Complex64 {
        Complex64::new(self.j_x * self.h_x.exp(), 0.0)
    }
    /// `t(-a_X)`
    pub fn kappa_x_right(&self) -> Complex64 {
        Complex64::new(self.j_x * (-self.h_x).exp(), 0.0)
    }
    /// `t(+a_Y)`
    pub fn kappa_y_left(&self) -> Complex64 {
        Complex64::new(self.j_y * self.h_y.exp(), 0.0)
    }
    /// `t(-a_Y)`
    pub fn kappa_y_right(&self) -> Complex64 {
        Complex64::new(self.j_y * (-self.h_y).exp(), 0.0)
    }

    /// The full 2D nearest-neighbor model on a rectangular lattice.
    pub fn lattice_model(&self, bravais: BravaisSpec) -> Result<LatticeModel> {
        LatticeModel::nearest_neighbor(
            bravais,
            self.kappa_x_left(),
            self.kappa_x_right(),
            self.kappa_y_left(),
            self.kappa_y_right(),
        )
    }
}

fn require_rectangular(bravais: &BravaisSpec) -> Result<()> {
    if !bravais.is_rectangular() {
        return Err(Error::InvalidLattice(format!(
            "this builder needs a rectangular lattice, got alpha = {}",
            bravais.alpha
        )));
    }
    Ok(())
}

/// Four-shift chain of the nonreciprocal Harper-Hofstadter model on a
/// `(p, q)` cut of a rectangular lattice, written out in closed form.
pub fn hofstadter_nonreciprocal(
    params: &HofstadterParams,
    bravais: &BravaisSpec,
    cut: &StripCut,
    flux: &FluxSpec,
    k_x: f64,
    len: usize,
    bc: BoundaryCondition,
) -> Result<EffectiveHamiltonian> {
    require_rectangular(bravais)?;
    let (sin_t, cos_t) = cut.theta().sin_cos();
    let (a, ax, ay, b) = (cut.a(), bravais.a_x, bravais.a_y, flux.value());
    let (p, q) = (cut.p(), cut.q());
    let alpha_x = b * a * ax * cos_t;
    let alpha_y = b * a * ay * sin_t;
    let sigma_p = -k_x * ax * cos_t - PI * b * ax * a * p as f64 * cos_t;
    let sigma_mp = k_x * ax * cos_t - PI * b * ax * a * p as f64 * cos_t;
    let sigma_q = k_x * ay * sin_t + PI * b * ay * a * q as f64 * sin_t;
    let sigma_mq = -k_x * ay * sin_t + PI * b * ay * a * q as f64 * sin_t;
    let kxl = params.kappa_x_left();
    let kxr = params.kappa_x_right();
    let kyl = params.kappa_y_left();
    let kyr = params.kappa_y_right();

    let matrix = fill_chain(len, bc, p.max(q), |n| {
        let n = n as f64;
        vec![
            (p, kxr * Complex64::cis(-TAU * alpha_x * n + sigma_p)),
            (-p, kxl * Complex64::cis(TAU * alpha_x * n + sigma_mp)),
            (q, kyl * Complex64::cis(TAU * alpha_y * n + sigma_q)),
            (-q, kyr * Complex64::cis(-TAU * alpha_y * n + sigma_mq)),
        ]
    })?;
    Ok(EffectiveHamiltonian {
        matrix,
        bc,
        k_x,
        flux: *flux,
        builder: Builder::Hofstadter,
        shifts: [p, -p, q, -q].into_iter().collect(),
    })
}

/// Reciprocal non-Hermitian amplitudes `kappa_X`, `kappa_Y` (same in both
/// directions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalDiagonalParams {
    pub kappa_x: Complex64,
    pub kappa_y: Complex64,
}

impl ReciprocalDiagonalParams {
    pub fn new(kappa_x: Complex64, kappa_y: Complex64) -> Result<Self> {
        let zero = Complex64::default();
        if kappa_x == zero || kappa_y == zero {
            return Err(Error::InvalidArgument(
                "kappa_X and kappa_Y must be nonzero".into(),
            ));
        }
        Ok(Self { kappa_x, kappa_y })
    }

    /// Phase of `kappa_X conj(kappa_Y)`.
    pub fn rho(&self) -> f64 {
        (self.kappa_x * self.kappa_y.conj()).arg()
    }

    pub fn lattice_model(&self, bravais: BravaisSpec) -> Result<LatticeModel> {
        LatticeModel::nearest_neighbor(
            bravais,
            self.kappa_x,
            self.kappa_x,
            self.kappa_y,
            self.kappa_y,
        )
    }
}

/// Left/right hopping rates of the `p = q = 1` diagonal cut.
#[derive(Debug, Clone, Copy)]
pub struct DiagonalCutChain {
    params: ReciprocalDiagonalParams,
    cut: StripCut,
    a_x: f64,
    a_y: f64,
    /// Flux per plaquette `B a_X a_Y`.
    phi: f64,
    k_x: f64,
    flux: FluxSpec,
}

impl DiagonalCutChain {
    pub fn new(
        params: &ReciprocalDiagonalParams,
        bravais: &BravaisSpec,
        flux: &FluxSpec,
        k_x: f64,
    ) -> Result<Self> {
        require_rectangular(bravais)?;
        let cut = strip_parameters(bravais, 1, 1)?;
        Ok(Self {
            params: *params,
            cut,
            a_x: bravais.a_x,
            a_y: bravais.a_y,
            phi: flux.value() * bravais.a_x * bravais.a_y,
            k_x,
            flux: *flux,
        })
    }

    pub fn cut(&self) -> &StripCut {
        &self.cut
    }

    pub fn k_x(&self) -> f64 {
        self.k_x
    }

    pub fn flux(&self) -> FluxSpec {
        self.flux
    }

    /// Flux per plaquette.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    fn phases(&self, n: i64) -> (f64, f64) {
        let (s, c) = self.cut.theta().sin_cos();
        let alpha_x = self.phi * c * c;
        let alpha_y = self.phi * s * s;
        let n = n as f64;
        let x_phase = TAU * alpha_x * n + self.k_x * self.a_x * c + PI * self.phi * c * c;
        let y_phase = TAU * alpha_y * n + self.k_x * self.a_y * s + PI * self.phi * s * s;
        (x_phase, y_phase)
    }

    /// `W_n^(L)`, amplitude of `phi_{n+1}` in the equation for site `n`.
    pub fn w_left(&self, n: i64) -> Complex64 {
        let (xp, yp) = self.phases(n);
        self.params.kappa_x * Complex64::cis(-xp) + self.params.kappa_y * Complex64::cis(yp)
    }

    /// `W_n^(R)`; site `n` couples to `phi_{n-1}` through `W_{n-1}^(R)`.
    pub fn w_right(&self, n: i64) -> Complex64 {
        let (xp, yp) = self.phases(n);
        self.params.kappa_x * Complex64::cis(xp) + self.params.kappa_y * Complex64::cis(-yp)
    }

    /// `omega_n = pi Phi (2n + 1) + k_x a / (sin(theta) cos(theta))`.
    pub fn omega(&self, n: i64) -> f64 {
        let (s, c) = self.cut.theta().sin_cos();
        PI * self.phi * (2 * n + 1) as f64 + self.k_x * self.cut.a() / (s * c)
    }
}

/// Nearest-neighbor chain of the reciprocal model cut along the diagonal of
/// the rectangular cell (`p = q = 1`).
pub fn reciprocal_diagonal(
    params: &ReciprocalDiagonalParams,
    bravais: &BravaisSpec,
    flux: &FluxSpec,
    k_x: f64,
    len: usize,
    bc: BoundaryCondition,
) -> Result<EffectiveHamiltonian> {
    let chain = DiagonalCutChain::new(params, bravais, flux, k_x)?;
    let matrix = fill_chain(len, bc, 1, |n| {
        vec![(1, chain.w_left(n)), (-1, chain.w_right(n - 1))]
    })?;
    Ok(EffectiveHamiltonian {
        matrix,
        bc,
        k_x,
        flux: *flux,
        builder: Builder::ReciprocalDiagonal,
        shifts: [1, -1].into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalRatio {
    Finite(f64),
    /// `|W_n^(L)| = 0`: the ratio is a pole.
    Pole,
}

impl LocalRatio {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(*v),
            Self::Pole => None,
        }
    }
}

/// Local nonreciprocity `|W_n^(R)|^2 / |W_n^(L)|^2` from its closed form
/// in terms of `omega_n` and `rho`.
pub fn local_ratio(
    params: &ReciprocalDiagonalParams,
    bravais: &BravaisSpec,
    flux: &FluxSpec,
    k_x: f64,
    n: i64,
) -> Result<LocalRatio> {
    let chain = DiagonalCutChain::new(params, bravais, flux, k_x)?;
    let (mx, my) = (params.kappa_x.norm(), params.kappa_y.norm());
    let base = mx * mx + my * my;
    let omega = chain.omega(n);
    let rho = params.rho();
    let num = base + 2.0 * mx * my * (omega + rho).cos();
    let den = base + 2.0 * mx * my * (omega - rho).cos();
    if den <= 1e-14 * base {
        return Ok(LocalRatio::Pole);
    }
    Ok(LocalRatio::Finite(num / den))
}
