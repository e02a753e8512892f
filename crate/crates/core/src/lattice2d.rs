//! Finite square-lattice simulations on masked site sets.
//!
//! Landau gauge along the rows: the hop `(X, Y) -> (X + 1, Y)` picks up
//! `exp(2 pi i Phi Y)` with `Phi` the flux per plaquette; vertical hops carry
//! no phase.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::TAU;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    BoundaryCondition, EffectiveHamiltonian, HofstadterParams, ReciprocalDiagonalParams,
};
use crate::lattice::FluxSpec;
use crate::spectral::{diagonalize, SpectralResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Rectangle {
        width: usize,
        height: usize,
    },
    /// Sites with `0 <= Y <= X <= L - 1`; the hypotenuse is `X = Y`.
    LowerTriangle,
    /// Integer points inside or on a closed polygon.
    Polygon(Vec<[f64; 2]>),
    /// An explicit site list.
    Explicit,
}

/// Site set of a finite sample, ordered row-major by `Y` then `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryMask {
    shape: Shape,
    len: usize,
    sites: Vec<(i64, i64)>,
    index: HashMap<(i64, i64), usize>,
}

impl GeometryMask {
    fn from_parts(shape: Shape, len: usize, mut sites: Vec<(i64, i64)>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptyMask);
        }
        sites.sort_by_key(|&(x, y)| (y, x));
        let mut index = HashMap::with_capacity(sites.len());
        for (i, &s) in sites.iter().enumerate() {
            if index.insert(s, i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate site {s:?}")));
            }
        }
        Ok(Self {
            shape,
            len,
            sites,
            index,
        })
    }

    pub fn rectangle(width: usize, height: usize) -> Result<Self> {
        let sites = (0..height as i64)
            .flat_map(|y| (0..width as i64).map(move |x| (x, y)))
            .collect();
        Self::from_parts(Shape::Rectangle { width, height }, width.max(height), sites)
    }

    pub fn lower_triangle(len: usize) -> Result<Self> {
        let sites = (0..len as i64)
            .flat_map(|y| (y..len as i64).map(move |x| (x, y)))
            .collect();
        Self::from_parts(Shape::LowerTriangle, len, sites)
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &vertices {
            for k in 0..2 {
                if !v[k].is_finite() {
                    return Err(Error::InvalidArgument("non-finite polygon vertex".into()));
                }
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let mut sites = Vec::new();
        for y in lo[1].ceil() as i64..=hi[1].floor() as i64 {
            for x in lo[0].ceil() as i64..=hi[0].floor() as i64 {
                if inside_polygon(&vertices, x as f64, y as f64) {
                    sites.push((x, y));
                }
            }
        }
        let len = ((hi[0] - lo[0]).max(hi[1] - lo[1]).floor() as usize) + 1;
        Self::from_parts(Shape::Polygon(vertices), len, sites)
    }

    pub fn from_sites(sites: Vec<(i64, i64)>) -> Result<Self> {
        let len = extent(&sites);
        Self::from_parts(Shape::Explicit, len, sites)
    }

    /// Same mask with one site removed; the result is an explicit site list.
    pub fn without_site(&self, site: (i64, i64)) -> Result<Self> {
        let sites = self.sites.iter().copied().filter(|&s| s != site).collect();
        Self::from_parts(Shape::Explicit, self.len, sites)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Linear size `L`.
    pub fn linear_size(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[(i64, i64)] {
        &self.sites
    }

    pub fn index_of(&self, x: i64, y: i64) -> Option<usize> {
        self.index.get(&(x, y)).copied()
    }

    /// Sites the edge band is measured from: the hypotenuse for the
    /// triangle, otherwise every site missing a nearest neighbor.
    pub fn edge_sites(&self) -> Vec<usize> {
        match self.shape {
            Shape::LowerTriangle => (0..self.sites.len())
                .filter(|&i| self.sites[i].0 == self.sites[i].1)
                .collect(),
            _ => (0..self.sites.len())
                .filter(|&i| {
                    let (x, y) = self.sites[i];
                    [(1, 0), (-1, 0), (0, 1), (0, -1)]
                        .iter()
                        .any(|(dx, dy)| self.index_of(x + dx, y + dy).is_none())
                })
                .collect(),
        }
    }

    /// Lattice-path distance of every site to the edge set.
    pub fn edge_distance(&self) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.sites.len()];
        let mut queue = VecDeque::new();
        for i in self.edge_sites() {
            dist[i] = 0;
            queue.push_back(i);
        }
        while let Some(i) = queue.pop_front() {
            let (x, y) = self.sites[i];
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if let Some(j) = self.index_of(x + dx, y + dy) {
                    if dist[j] == usize::MAX {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        dist
    }
}

fn extent(sites: &[(i64, i64)]) -> usize {
    let span = |f: fn(&(i64, i64)) -> i64| {
        let lo = sites.iter().map(f).min().unwrap_or(0);
        let hi = sites.iter().map(f).max().unwrap_or(-1);
        (hi - lo + 1).max(0) as usize
    };
    span(|s| s.0).max(span(|s| s.1))
}

fn inside_polygon(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    const EPS: f64 = 1e-9;
    let n = v.len();
    // on an edge counts as inside
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        let within = x >= a[0].min(b[0]) - EPS
            && x <= a[0].max(b[0]) + EPS
            && y >= a[1].min(b[1]) - EPS
            && y <= a[1].max(b[1]) + EPS;
        if cross.abs() < EPS * (1.0 + (b[0] - a[0]).hypot(b[1] - a[1])) && within {
            return true;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a[1] > y) != (b[1] > y) {
            let xc = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

/// Nearest-neighbor amplitudes on the square lattice: `x_forward` is the
/// amplitude of `psi(X + 1, Y)` in the equation for `(X, Y)`, and so on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestNeighborHops {
    pub x_forward: Complex64,
    pub x_backward: Complex64,
    pub y_forward: Complex64,
    pub y_backward: Complex64,
}

impl From<&HofstadterParams> for NearestNeighborHops {
    fn from(p: &HofstadterParams) -> Self {
        Self {
            x_forward: p.kappa_x_left(),
            x_backward: p.kappa_x_right(),
            y_forward: p.kappa_y_left(),
            y_backward: p.kappa_y_right(),
        }
    }
}

impl From<&ReciprocalDiagonalParams> for NearestNeighborHops {
    fn from(p: &ReciprocalDiagonalParams) -> Self {
        Self {
            x_forward: p.kappa_x,
            x_backward: p.kappa_x,
            y_forward: p.kappa_y,
            y_backward: p.kappa_y,
        }
    }
}

/// Dense Hamiltonian on the mask; hops leaving the mask are dropped. `flux`
/// is the flux per plaquette.
pub fn build_masked_hamiltonian(
    hops: &NearestNeighborHops,
    flux: &FluxSpec,
    mask: &GeometryMask,
) -> Result<Mat<Complex64>> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let phi = flux.value();
    let n = mask.len();
    let mut m = Mat::<Complex64>::zeros(n, n);
    for (i, &(x, y)) in mask.sites().iter().enumerate() {
        let peierls = Complex64::cis(TAU * phi * y as f64);
        let targets = [
            (x + 1, y, hops.x_forward * peierls),
            (x - 1, y, hops.x_backward * peierls.conj()),
            (x, y + 1, hops.y_forward),
            (x, y - 1, hops.y_backward),
        ];
        for (tx, ty, amp) in targets {
            if let Some(j) = mask.index_of(tx, ty) {
                m[(i, j)] = amp;
            }
        }
    }
    Ok(m)
}

/// Gauge-invariant loop product around every plaquette whose four corners
/// are in the mask, with the bare amplitudes divided out. Keyed by the
/// lower-left corner.
pub fn plaquette_fluxes(
    matrix: &Mat<Complex64>,
    hops: &NearestNeighborHops,
    mask: &GeometryMask,
) -> Vec<((i64, i64), Complex64)> {
    let bare = hops.x_forward * hops.y_forward * hops.x_backward * hops.y_backward;
    let mut out = Vec::new();
    for &(x, y) in mask.sites() {
        let corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)];
        let idx: Option<Vec<usize>> = corners
            .iter()
            .map(|&(cx, cy)| mask.index_of(cx, cy))
            .collect();
        if let Some(idx) = idx {
            // counterclockwise particle motion s_k -> s_{k+1}: amplitude H[s_{k+1}][s_k]
            let loop_product: Complex64 =
                (0..4).map(|k| matrix[(idx[(k + 1) % 4], idx[k])]).product();
            out.push(((x, y), loop_product / bare));
        }
    }
    out
}

/// Mean eigenvector distribution `I_{X,Y}` on a mask.
#[derive(Debug, Clone)]
pub struct Distribution2D {
    values: Vec<f64>,
    mask: GeometryMask,
    spectrum: Vec<Complex64>,
}

impl Distribution2D {
    /// Wrap a per-site distribution given in mask order.
    pub fn new(values: Vec<f64>, mask: GeometryMask) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(Error::SizeMismatch {
                left: values.len(),
                right: mask.len(),
            });
        }
        Ok(Self {
            values,
            mask,
            spectrum: Vec::new(),
        })
    }

    pub fn uniform(mask: GeometryMask) -> Self {
        let n = mask.len();
        Self {
            values: vec![1.0 / n as f64; n],
            mask,
            spectrum: Vec::new(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &GeometryMask {
        &self.mask
    }

    /// Eigenvalues of the solve the map came from (empty when built by hand).
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn at(&self, x: i64, y: i64) -> Option<f64> {
        self.mask.index_of(x, y).map(|i| self.values[i])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Diagonalize the masked Hamiltonian and average `|psi(X, Y)|^2` over all
/// eigenstates.
pub fn distribution_map(matrix: &Mat<Complex64>, mask: &GeometryMask) -> Result<Distribution2D> {
    if matrix.nrows() != mask.len() {
        return Err(Error::SizeMismatch {
            left: matrix.nrows(),
            right: mask.len(),
        });
    }
    let h = EffectiveHamiltonian::from_matrix(matrix.clone(), BoundaryCondition::Open)?;
    let result: SpectralResult = diagonalize(&h)?;
    Ok(Distribution2D {
        values: result.mean_distribution().to_vec(),
        mask: mask.clone(),
        spectrum: result.eigenvalues().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeWeight {
    pub fraction: f64,
    /// `band sites / N`, the value for a uniform distribution.
    pub baseline: f64,
    pub band_sites: usize,
    /// Set when the band covers every site; `fraction` is then 1.
    pub band_exceeds_lattice: bool,
}

impl EdgeWeight {
    /// `fraction / baseline`
    pub fn enhancement(&self) -> f64 {
        self.fraction / self.baseline
    }
}

/// Weight within `band_width` lattice steps of the mask's edge set (sites at
/// distance `< band_width`).
pub fn edge_weight_fraction(dist: &Distribution2D, band_width: usize) -> Result<EdgeWeight> {
    if band_width == 0 {
        return Err(Error::InvalidArgument(
            "band width must be at least 1".into(),
        ));
    }
    let d = dist.mask.edge_distance();
    let in_band: Vec<bool> = d.iter().map(|&k| k < band_width).collect();
    let band_sites = in_band.iter().filter(|&&b| b).count();
    let n = dist.values.len();
    let total = dist.total();
    if band_sites == n {
        return Ok(EdgeWeight {
            fraction: 1.0,
            baseline: 1.0,
            band_sites,
            band_exceeds_lattice: true,
        });
    }
    let weight: f64 = dist
        .values
        .iter()
        .zip(&in_band)
        .filter(|(_, &b)| b)
        .map(|(v, _)| v)
        .sum();
    Ok(EdgeWeight {
        fraction: weight / total,
        baseline: band_sites as f64 / n as f64,
        band_sites,
        band_exceeds_lattice: false,
    })
}
