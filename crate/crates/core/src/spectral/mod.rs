//! Diagonalization and skin-effect diagnostics.

mod winding;

pub use winding::{
    bulk_window, contour_winding, winding_bloch, winding_bloch_with, winding_flux,
    winding_realspace, winding_realspace_window, BlochTable, WindingResult, DEFAULT_FLUX_SAMPLES,
    QUANTIZATION_TOLERANCE, REALSPACE_VERDICT_TOLERANCE,
};

use std::cmp::Ordering;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{EffectiveHamiltonian, HofstadterParams};
use crate::linalg;

/// Eigenpair residuals must stay below this multiple of `||H||_F`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Full right eigendecomposition of an effective Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    eigenvalues: Vec<Complex64>,
    eigenvectors: Mat<Complex64>,
    residuals: Vec<f64>,
    ipr: Vec<f64>,
    mean_distribution: Vec<f64>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Sorted lexicographically by `(Re, Im)`.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Column `l` is the unit-norm right eigenvector of `eigenvalues()[l]`.
    pub fn eigenvectors(&self) -> &Mat<Complex64> {
        &self.eigenvectors
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn ipr(&self) -> &[f64] {
        &self.ipr
    }

    pub fn mean_distribution(&self) -> &[f64] {
        &self.mean_distribution
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn median_ipr(&self) -> f64 {
        median(&self.ipr)
    }
}

fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Diagonalize `H`, normalize eigenvectors and enforce the residual bound.
pub fn diagonalize(h: &EffectiveHamiltonian) -> Result<SpectralResult> {
    let m = h.matrix();
    let n = m.nrows();
    let (values, vectors) = linalg::eig(m.as_ref())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_complex(&values[i], &values[j]));

    let mut eigenvectors = Mat::<Complex64>::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let col = vectors.col(src);
        let norm = (0..n).map(|i| col[i].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            eigenvectors[(i, dst)] = col[i] / norm;
        }
        eigenvalues.push(values[src]);
    }

    let hv = m * &eigenvectors;
    let residuals: Vec<f64> = (0..n)
        .map(|l| {
            (0..n)
                .map(|i| (hv[(i, l)] - eigenvalues[l] * eigenvectors[(i, l)]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let tolerance = RESIDUAL_TOLERANCE * h.frobenius_norm().max(f64::MIN_POSITIVE);
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst.is_nan() || worst >= tolerance {
        return Err(Error::Residual {
            residual: worst,
            tolerance,
            fingerprint: linalg::fingerprint(m.as_ref()),
        });
    }

    let ipr = ipr_of(&eigenvectors);
    let mean_distribution = mean_distribution_of(&eigenvectors);
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors,
        residuals,
        ipr,
        mean_distribution,
    })
}

fn ipr_of(vectors: &Mat<Complex64>) -> Vec<f64> {
    (0..vectors.ncols())
        .map(|l| {
            (0..vectors.nrows())
                .map(|n| vectors[(n, l)].norm_sqr().powi(2))
                .sum()
        })
        .collect()
}

fn mean_distribution_of(vectors: &Mat<Complex64>) -> Vec<f64> {
    let states = vectors.ncols() as f64;
    (0..vectors.nrows())
        .map(|n| {
            (0..vectors.ncols())
                .map(|l| vectors[(n, l)].norm_sqr())
                .sum::<f64>()
                / states
        })
        .collect()
}

/// Mean eigenvector distribution `I_n = (1/L) sum_l |phi_n^(l)|^2`.
pub fn mean_distribution(result: &SpectralResult) -> Vec<f64> {
    result.mean_distribution.clone()
}

/// Inverse participation ratio `sum_n |phi_n^(l)|^4` per state.
pub fn ipr(result: &SpectralResult) -> Vec<f64> {
    result.ipr.clone()
}

/// IPR of an arbitrary vector after normalization.
pub fn ipr_of_vector(v: &[Complex64]) -> f64 {
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    v.iter().map(|z| (z.norm_sqr() / total).powi(2)).sum()
}

/// Default OBC/PBC distance threshold in units of the spectral diameter.
pub const COMPARE_THRESHOLD: f64 = 0.05;

/// Default number of OBC eigenvalues that may be excluded as edge states.
pub const DEFAULT_EDGE_BUDGET: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumVerdict {
    Nhse,
    NoNhse,
}

impl SpectrumVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Nhse => "NHSE",
            Self::NoNhse => "no-NHSE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComparison {
    pub verdict: SpectrumVerdict,
    /// `max(d(A -> B), d(B -> A)) / diameter`.
    pub distance: f64,
    /// Raw directed distances `[obc -> pbc, pbc -> obc]`, the first after exclusion.
    pub directed: [f64; 2],
    pub diameter: f64,
    pub edge_budget: usize,
    pub threshold: f64,
}

/// Symmetric Hausdorff-style distance between the OBC and PBC spectra.
///
/// In each direction the nearest-neighbor distance of every point of one set
/// to the other set is computed and the maximum is kept. Up to `edge_budget`
/// worst-matched OBC points are discarded first, since in-gap edge states
/// have no PBC partner. The larger of the two directions, divided by the
/// diameter of the union, is compared to `threshold`. With a zero budget the
/// result is symmetric in its arguments.
pub fn compare_spectra_with(
    obc: &SpectralResult,
    pbc: &SpectralResult,
    edge_budget: usize,
    threshold: f64,
) -> Result<SpectralComparison> {
    let a = obc.eigenvalues();
    let b = pbc.eigenvalues();
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let directed = [
        directed_distance(a, b, edge_budget),
        directed_distance(b, a, 0),
    ];
    let diameter = diameter(a.iter().chain(b.iter()));
    let raw = directed[0].max(directed[1]);
    let distance = if diameter > 0.0 { raw / diameter } else { 0.0 };
    let verdict = if distance > threshold {
        SpectrumVerdict::Nhse
    } else {
        SpectrumVerdict::NoNhse
    };
    Ok(SpectralComparison {
        verdict,
        distance,
        directed,
        diameter,
        edge_budget,
        threshold,
    })
}

pub fn compare_spectra(
    obc: &SpectralResult,
    pbc: &SpectralResult,
    edge_budget: usize,
) -> Result<SpectralComparison> {
    compare_spectra_with(obc, pbc, edge_budget, COMPARE_THRESHOLD)
}

fn directed_distance(from: &[Complex64], to: &[Complex64], drop: usize) -> f64 {
    let mut d: Vec<f64> = from
        .iter()
        .map(|z| {
            to.iter()
                .map(|w| (z - w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    d.sort_by(f64::total_cmp);
    let keep = d.len().saturating_sub(drop);
    if keep == 0 {
        0.0
    } else {
        d[keep - 1]
    }
}

fn diameter<'a>(points: impl Iterator<Item = &'a Complex64> + Clone) -> f64 {
    let mut best: f64 = 0.0;
    for (i, z) in points.clone().enumerate() {
        for w in points.clone().skip(i + 1) {
            best = best.max((z - w).norm());
        }
    }
    best
}

/// Margins closer to zero than this are reported as undetermined.
pub const NEAR_CRITICAL_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationRegime {
    /// NHSE survives (skin or extended bulk).
    Skin,
    BulkLocalized,
    NearCritical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionVerdict {
    pub regime: LocalizationRegime,
    /// `|h_Y| + ln|J_Y/J_X| - |h_X|`
    pub margin: f64,
}

/// Bulk Anderson-localization criterion of the nonreciprocal
/// Aubry-Andre-Harper chain at irrational flux.
pub fn localization_criterion(params: &HofstadterParams) -> CriterionVerdict {
    let margin = params.h_y.abs() + (params.j_y / params.j_x).abs().ln() - params.h_x.abs();
    let regime = if margin.abs() < NEAR_CRITICAL_MARGIN {
        LocalizationRegime::NearCritical
    } else if margin < 0.0 {
        LocalizationRegime::BulkLocalized
    } else {
        LocalizationRegime::Skin
    };
    CriterionVerdict { regime, margin }
}

/// Two-size localization statistics from runs at `L` and `2L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeScaling {
    /// `median IPR(2L) / median IPR(L)`: about 1 when localized, about 1/2
    /// when extended.
    pub median_ipr_ratio: f64,
    /// `max I_n / median I_n` of the larger run.
    pub edge_pileup: f64,
}

impl SizeScaling {
    pub fn new(small: &SpectralResult, large: &SpectralResult) -> Self {
        let md = large.mean_distribution();
        let peak = md.iter().copied().fold(0.0, f64::max);
        Self {
            median_ipr_ratio: large.median_ipr() / small.median_ipr(),
            edge_pileup: peak / median(md),
        }
    }

    /// Localized bulk: IPR ratio within `[0.7, 1.4]`.
    pub fn is_localized(&self) -> bool {
        (0.7..=1.4).contains(&self.median_ipr_ratio)
    }
}
