//! Transfer matrices of nearest-neighbor chains, global reciprocity and
//! Lyapunov exponents.
//!
//! A chain site `n` obeys `E phi_n = left(n) phi_{n-1} + onsite(n) phi_n +
//! right(n) phi_{n+1}`, giving
//! `M_n = [[(E - onsite) / right, -left / right], [1, 0]]` acting on
//! `(phi_n, phi_{n-1})`.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    fill_chain, BoundaryCondition, Builder, DiagonalCutChain, EffectiveHamiltonian,
    HofstadterParams, ReciprocalDiagonalParams,
};
use crate::lattice::{strip_parameters, BravaisSpec, FluxSpec, StripReduction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSite {
    /// Amplitude of `phi_{n-1}`.
    pub left: Complex64,
    pub onsite: Complex64,
    /// Amplitude of `phi_{n+1}`.
    pub right: Complex64,
}

pub trait NearestNeighborChain {
    fn site(&self, n: i64) -> ChainSite;
}

impl<F: Fn(i64) -> ChainSite> NearestNeighborChain for F {
    fn site(&self, n: i64) -> ChainSite {
        self(n)
    }
}

/// Chain of the gauge-transformed diagonal cut:
/// `E xi_n = W~_n^(L) xi_{n+1} + W~_{n-1}^(R) xi_{n-1}`.
#[derive(Debug, Clone, Copy)]
pub struct GaugeTransformedChain {
    inner: DiagonalCutChain,
    kappa_x: Complex64,
    kappa_y: Complex64,
    sigma_x: f64,
}

impl GaugeTransformedChain {
    /// `kappa_X + kappa_Y exp(i omega_n)`
    pub fn w_left(&self, n: i64) -> Complex64 {
        self.kappa_x + self.kappa_y * Complex64::cis(self.omega(n))
    }

    /// `kappa_X + kappa_Y exp(-i omega_n)`
    pub fn w_right(&self, n: i64) -> Complex64 {
        self.kappa_x + self.kappa_y * Complex64::cis(-self.omega(n))
    }

    pub fn omega(&self, n: i64) -> f64 {
        self.inner.omega(n)
    }

    /// `k_x a_X cos(theta) + pi Phi cos^2(theta)`
    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    /// Flux per plaquette `Phi`.
    pub fn phi(&self) -> f64 {
        self.inner.phi()
    }

    /// The untransformed chain this was derived from.
    pub fn original(&self) -> &DiagonalCutChain {
        &self.inner
    }

    /// On-site gauge factor `g_n` with `phi_n = g_n xi_n`; unimodular.
    pub fn gauge_factor(&self, n: i64) -> Complex64 {
        let (_, c) = self.inner.cut().theta().sin_cos();
        let alpha_x = self.phi() * c * c;
        let n = n as f64;
        Complex64::cis(PI * alpha_x * n * n + self.sigma_x * n - PI * alpha_x * n)
    }

    pub fn hamiltonian(&self, len: usize, bc: BoundaryCondition) -> Result<EffectiveHamiltonian> {
        let matrix = fill_chain(len, bc, 1, |n| {
            vec![(1, self.w_left(n)), (-1, self.w_right(n - 1))]
        })?;
        let mut h = EffectiveHamiltonian::from_matrix(matrix, bc)?;
        h.set_origin(
            Builder::GaugeChain,
            self.inner.k_x(),
            self.inner.flux(),
            [1, -1].into_iter().collect::<BTreeSet<_>>(),
        );
        Ok(h)
    }
}

impl NearestNeighborChain for GaugeTransformedChain {
    fn site(&self, n: i64) -> ChainSite {
        ChainSite {
            left: self.w_right(n - 1),
            onsite: Complex64::default(),
            right: self.w_left(n),
        }
    }
}

impl NearestNeighborChain for DiagonalCutChain {
    fn site(&self, n: i64) -> ChainSite {
        ChainSite {
            left: self.w_right(n - 1),
            onsite: Complex64::default(),
            right: self.w_left(n),
        }
    }
}

/// Gauge-transformed chain of the reciprocal model on the diagonal cut of a
/// rectangular lattice.
pub fn gauge_transform(
    params: &ReciprocalDiagonalParams,
    bravais: &BravaisSpec,
    flux: &FluxSpec,
    k_x: f64,
) -> Result<GaugeTransformedChain> {
    let inner = DiagonalCutChain::new(params, bravais, flux, k_x)?;
    let (_, c) = inner.cut().theta().sin_cos();
    let sigma_x = k_x * bravais.a_x * c + PI * inner.phi() * c * c;
    Ok(GaugeTransformedChain {
        inner,
        kappa_x: params.kappa_x,
        kappa_y: params.kappa_y,
        sigma_x,
    })
}

/// Nonreciprocal Aubry-Andre-Harper chain: the Harper-Hofstadter model on
/// the `(p, q) = (0, 1)` cut.
#[derive(Debug, Clone)]
pub struct HarperChain {
    reduction: StripReduction,
}

impl HarperChain {
    pub fn new(
        params: &HofstadterParams,
        bravais: &BravaisSpec,
        flux: &FluxSpec,
        k_x: f64,
    ) -> Result<Self> {
        let model = params.lattice_model(*bravais)?;
        let cut = strip_parameters(bravais, 0, 1)?;
        Ok(Self {
            reduction: StripReduction::new(&model, &cut, flux, k_x),
        })
    }
}

impl NearestNeighborChain for HarperChain {
    fn site(&self, n: i64) -> ChainSite {
        let t = self.reduction.table(n);
        ChainSite {
            left: t.get(-1),
            onsite: t.get(0),
            right: t.get(1),
        }
    }
}

/// Entries above this magnitude trigger a rescaling of the running product.
const RESCALE_AT: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferProduct {
    /// `S / exp(log_scale)`, row-major.
    scaled: [[Complex64; 2]; 2],
    log_scale: f64,
    log_abs_det: f64,
    q: usize,
    energy: Complex64,
}

impl TransferProduct {
    /// The rescaled product; the true `S` is this times `exp(log_scale())`.
    pub fn scaled(&self) -> [[Complex64; 2]; 2] {
        self.scaled
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// `S` itself; entries overflow to infinity for very long products.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let f = self.log_scale.exp();
        self.scaled.map(|row| row.map(|z| z * f))
    }

    /// `ln |S_ij|`.
    pub fn log_abs_entry(&self, i: usize, j: usize) -> f64 {
        self.scaled[i][j].norm().ln() + self.log_scale
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn energy(&self) -> Complex64 {
        self.energy
    }

    /// `ln |det S|` accumulated as `sum_n ln|det M_n|`.
    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    pub fn det_magnitude(&self) -> f64 {
        self.log_abs_det.exp()
    }

    /// Eigenvalues `lambda_{1,2}` of the scaled product (multiply by
    /// `exp(log_scale)` for the true values), ordered by decreasing modulus.
    pub fn scaled_eigenvalues(&self) -> (Complex64, Complex64) {
        let [[a, b], [c, d]] = self.scaled;
        let half_tr = 0.5 * (a + d);
        let disc = (half_tr * half_tr - (a * d - b * c)).sqrt();
        let (l1, l2) = (half_tr + disc, half_tr - disc);
        if l1.norm() >= l2.norm() {
            (l1, l2)
        } else {
            (l2, l1)
        }
    }

    /// `(ln|lambda_1|, ln|lambda_2|)`. The smaller one is taken from the
    /// determinant, which stays accurate when the two moduli differ by many
    /// orders of magnitude.
    pub fn log_abs_eigenvalues(&self) -> (f64, f64) {
        let (l1, _) = self.scaled_eigenvalues();
        let big = l1.norm().ln() + self.log_scale;
        (big, self.log_abs_det - big)
    }
}

fn transfer_matrix(site: &ChainSite, energy: Complex64) -> [[Complex64; 2]; 2] {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    [
        [(energy - site.onsite) / site.right, -site.left / site.right],
        [one, zero],
    ]
}

fn mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn checked_site<C: NearestNeighborChain + ?Sized>(chain: &C, n: i64) -> Result<ChainSite> {
    let s = chain.site(n);
    if s.right.norm() == 0.0 || !s.right.norm().is_finite() {
        return Err(Error::Pole { site: n });
    }
    Ok(s)
}

/// `S(E) = M_q ... M_1`, rescaled on the fly.
pub fn transfer_product<C: NearestNeighborChain + ?Sized>(
    chain: &C,
    energy: Complex64,
    q: usize,
) -> Result<TransferProduct> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    let mut s = [[one, zero], [zero, one]];
    let mut log_scale = 0.0;
    let mut log_abs_det = 0.0;
    for n in 1..=q as i64 {
        let site = checked_site(chain, n)?;
        log_abs_det += site.left.norm().ln() - site.right.norm().ln();
        s = mul(&transfer_matrix(&site, energy), &s);
        let peak = s.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if peak > RESCALE_AT {
            log_scale += peak.ln();
            s = s.map(|row| row.map(|z| z / peak));
        }
    }
    Ok(TransferProduct {
        scaled: s,
        log_scale,
        log_abs_det,
        q,
        energy,
    })
}

/// `ln |det S|` for a chain of period `q`:
/// `sum_{n=1}^q ln|W~_n^(R)| - ln|W~_n^(L)|`.
///
/// For an exactly `q`-periodic chain this equals the telescoped
/// `sum_n ln|det M_n|`; for a quasi-periodic chain it is the periodized
/// value. No energy dependence.
pub fn log_det_magnitude(chain: &GaugeTransformedChain, q: usize) -> Result<f64> {
    let mut acc = 0.0;
    for n in 1..=q as i64 {
        let l = chain.w_left(n).norm();
        if l == 0.0 {
            return Err(Error::Pole { site: n });
        }
        acc += chain.w_right(n).norm().ln() - l.ln();
    }
    Ok(acc)
}

/// `|det S(E)|`, accumulated in log space.
pub fn det_magnitude(chain: &GaugeTransformedChain, q: usize) -> Result<f64> {
    log_det_magnitude(chain, q).map(f64::exp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityGap {
    /// `sum_{n=1}^q ln(|kX|^2 + |kY|^2 + 2|kX||kY| cos(omega_n + s rho))` for `s = +1, -1`.
    pub sums: [f64; 2],
    /// `(1/2 pi) int_0^{2 pi} ln(|kX|^2 + |kY|^2 + 2|kX||kY| cos w) dw`
    pub mean_integral: f64,
    /// `max_s |sums[s] - q * mean_integral| / q`
    pub gap: f64,
}

/// Points of the periodic midpoint rule for the identity integral.
pub const IDENTITY_QUADRATURE_POINTS: usize = 10_000;

/// Compare the site sums behind `|det S|` with their uniform-filling limit.
///
/// The gap is reported per site: the unnormalized difference stays of order
/// one even when the phases `omega_n` fill the circle uniformly.
pub fn integral_identity_gap(
    params: &ReciprocalDiagonalParams,
    bravais: &BravaisSpec,
    flux: &FluxSpec,
    k_x: f64,
    q: usize,
) -> Result<IdentityGap> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!(
            "identity gap needs q >= 2, got {q}"
        )));
    }
    let chain = DiagonalCutChain::new(params, bravais, flux, k_x)?;
    let (mx, my) = (params.kappa_x.norm(), params.kappa_y.norm());
    let base = mx * mx + my * my;
    let amp = 2.0 * mx * my;
    let rho = params.rho();
    let f = |w: f64| (base + amp * w.cos()).ln();
    let mut sums = [0.0; 2];
    for n in 1..=q as i64 {
        let w = chain.omega(n);
        sums[0] += f(w + rho);
        sums[1] += f(w - rho);
    }
    let m = IDENTITY_QUADRATURE_POINTS;
    // offset midpoint nodes avoid w = pi, where the integrand diverges
    // when |kX| = |kY|
    let mean_integral = (0..m)
        .map(|j| f(TAU * (j as f64 + 0.5) / m as f64))
        .sum::<f64>()
        / m as f64;
    let qf = q as f64;
    let gap = sums
        .iter()
        .map(|s| (s - qf * mean_integral).abs())
        .fold(0.0, f64::max)
        / qf;
    Ok(IdentityGap {
        sums,
        mean_integral,
        gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    /// Signed growth rate `(1/L) ln ||M_L ... M_1 v||`.
    pub exponent: f64,
    /// Standard error from segment statistics.
    pub stderr: f64,
    pub segments: usize,
    pub converged: bool,
}

const LYAPUNOV_SEGMENTS: usize = 20;

/// Top Lyapunov exponent of the transfer product at energy `E` over `length`
/// sites, by iterating and renormalizing a vector.
pub fn lyapunov_exponent<C: NearestNeighborChain + ?Sized>(
    chain: &C,
    energy: Complex64,
    length: usize,
) -> Result<LyapunovEstimate> {
    if length < LYAPUNOV_SEGMENTS {
        return Err(Error::InvalidArgument(format!(
            "Lyapunov length {length} too short"
        )));
    }
    // a short burn-in aligns the vector with the growing direction
    let burn_in = (length / 100).max(50);
    let mut v = [Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.1)];
    let step = |n: i64, v: &mut [Complex64; 2]| -> Result<f64> {
        let m = transfer_matrix(&checked_site(chain, n)?, energy);
        let w = [m[0][0] * v[0] + m[0][1] * v[1], v[0]];
        let norm = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        *v = [w[0] / norm, w[1] / norm];
        Ok(norm.ln())
    };
    let mut n = 1i64;
    for _ in 0..burn_in {
        step(n, &mut v)?;
        n += 1;
    }
    let seg_len = length / LYAPUNOV_SEGMENTS;
    let mut rates = Vec::with_capacity(LYAPUNOV_SEGMENTS);
    for _ in 0..LYAPUNOV_SEGMENTS {
        let mut acc = 0.0;
        for _ in 0..seg_len {
            acc += step(n, &mut v)?;
            n += 1;
        }
        rates.push(acc / seg_len as f64);
    }
    let k = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / k;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let stderr = (var / k).sqrt();
    let converged = stderr.is_finite() && stderr <= 0.01 + 0.05 * mean.abs();
    Ok(LyapunovEstimate {
        exponent: mean,
        stderr,
        segments: LYAPUNOV_SEGMENTS,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::reciprocal_diagonal;
    use crate::linalg;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fig6_like(flux: FluxSpec, k_x: f64) -> GaugeTransformedChain {
        let p = ReciprocalDiagonalParams::new(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        let b = BravaisSpec::rectangular(SQRT_2, SQRT_2).unwrap();
        gauge_transform(&p, &b, &flux, k_x).unwrap()
    }

    #[test]
    fn trivial_single_step() {
        let chain = |_n: i64| ChainSite {
            left: c(1.0, 0.0),
            onsite: c(0.0, 0.0),
            right: c(1.0, 0.0),
        };
        let s = transfer_product(&chain, c(0.0, 0.0), 1).unwrap().matrix();
        assert_eq!(s, [[c(0.0, 0.0), c(-1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
    }

    #[test]
    fn pole_reported() {
        let chain = |n: i64| ChainSite {
            left: c(1.0, 0.0),
            onsite: c(0.0, 0.0),
            right: c(if n == 3 { 0.0 } else { 1.0 }, 0.0),
        };
        assert_eq!(
            transfer_product(&chain, c(0.2, 0.0), 5).unwrap_err(),
            Error::Pole { site: 3 }
        );
    }

    #[test]
    fn no_field_no_momentum_is_homogeneous() {
        let g = fig6_like(FluxSpec::zero(), 0.0);
        for n in 0..8 {
            assert!((g.w_left(n) - g.w_left(0)).norm() < 1e-15);
            assert!((g.w_right(n) - g.w_right(0)).norm() < 1e-15);
        }
    }

    #[test]
    fn vanishing_kappa_y_leaves_kappa_x() {
        let p = ReciprocalDiagonalParams {
            kappa_x: c(0.7, 0.2),
            kappa_y: c(0.0, 0.0),
        };
        let g = gauge_transform(
            &p,
            &BravaisSpec::square(),
            &FluxSpec::real(0.3).unwrap(),
            1.1,
        )
        .unwrap();
        for n in 0..5 {
            assert_eq!(g.w_left(n), p.kappa_x);
            assert_eq!(g.w_right(n), p.kappa_x);
        }
    }

    #[test]
    fn gauge_preserves_magnitudes_and_is_a_similarity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = ReciprocalDiagonalParams::new(
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
            .unwrap();
            let b =
                BravaisSpec::rectangular(rng.gen_range(0.6..1.8), rng.gen_range(0.6..1.8)).unwrap();
            let f = FluxSpec::real(rng.gen_range(-0.5..0.5)).unwrap();
            let kx = rng.gen_range(-3.0..3.0);
            let g = gauge_transform(&p, &b, &f, kx).unwrap();
            let orig = g.original();
            for n in -4..12 {
                assert!((g.w_left(n).norm() - orig.w_left(n).norm()).abs() < 1e-12);
                assert!((g.w_right(n).norm() - orig.w_right(n).norm()).abs() < 1e-12);
                // xi-equation entries are G^-1 H G
                let ratio = g.gauge_factor(n + 1) / g.gauge_factor(n);
                assert!((orig.w_left(n) * ratio - g.w_left(n)).norm() < 1e-11);
                assert!((orig.w_right(n) / ratio - g.w_right(n)).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn gauge_chain_spectrum_matches_original() {
        let p = ReciprocalDiagonalParams::new(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        let b = BravaisSpec::rectangular(SQRT_2, SQRT_2).unwrap();
        let f = FluxSpec::rational(1, 5).unwrap();
        let kx = TAU / 5.0;
        let g = gauge_transform(&p, &b, &f, kx).unwrap();
        let h1 = reciprocal_diagonal(&p, &b, &f, kx, 30, BoundaryCondition::Open).unwrap();
        let h2 = g.hamiltonian(30, BoundaryCondition::Open).unwrap();
        let d1 = linalg::log_det(h1.matrix().as_ref()).unwrap();
        let d2 = linalg::log_det(h2.matrix().as_ref()).unwrap();
        assert!((d1.log_abs - d2.log_abs).abs() < 1e-10);
    }

    #[test]
    fn det_is_product_of_site_dets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let sites: Vec<ChainSite> = (0..40)
            .map(|_| ChainSite {
                left: c(rng.gen_range(0.2..2.0), rng.gen_range(-1.0..1.0)),
                onsite: c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                right: c(rng.gen_range(0.2..2.0), rng.gen_range(-1.0..1.0)),
            })
            .collect();
        let chain = |n: i64| sites[n as usize % 40];
        // short product: the 2x2 determinant is still well conditioned
        let t = transfer_product(&chain, c(0.3, -0.2), 5).unwrap();
        let direct: Complex64 = (1..=5).map(|n| chain(n).left / chain(n).right).product();
        let [[a, b], [cc, d]] = t.matrix();
        let det = a * d - b * cc;
        assert!((det / direct - 1.0).norm() < 1e-10);
        let t = transfer_product(&chain, c(0.3, -0.2), 37).unwrap();
        let direct: f64 = (1..=37)
            .map(|n| (chain(n).left / chain(n).right).norm().ln())
            .sum();
        assert!((t.log_abs_det() - direct).abs() < 1e-12);
    }

    #[test]
    fn product_entry_is_characteristic_polynomial() {
        // (S)_{11} prod right(n) = det(E - H_OBC)
        let g = fig6_like(FluxSpec::real(0.137).unwrap(), 0.4);
        let len = 25;
        let h = g.hamiltonian(len, BoundaryCondition::Open).unwrap();
        for e in [c(0.3, 0.1), c(-1.2, 0.7)] {
            let t = transfer_product(&g, e, len).unwrap();
            let log_right: f64 = (1..=len as i64).map(|n| g.w_left(n).norm().ln()).sum();
            let mut m = h.matrix().clone();
            for i in 0..len {
                for j in 0..len {
                    m[(i, j)] = -m[(i, j)];
                }
                m[(i, i)] += e;
            }
            let d = linalg::log_det(m.as_ref()).unwrap();
            assert!((t.log_abs_entry(0, 0) + log_right - d.log_abs).abs() < 1e-9);
        }
    }

    #[test]
    fn rescaling_survives_long_products() {
        let chain = |_n: i64| ChainSite {
            left: c(1.0, 0.0),
            onsite: c(0.0, 0.0),
            right: c(0.5, 0.0),
        };
        let t = transfer_product(&chain, c(3.0, 0.0), 2000).unwrap();
        assert!(t.log_scale() > 0.0);
        assert!(t.scaled().iter().flatten().all(|z| z.re.is_finite()));
        // M = [[6, -2], [1, 0]]: eigenvalues 3 +- sqrt 7
        let (big, small) = t.log_abs_eigenvalues();
        assert!((big / 2000.0 - (3.0 + 7f64.sqrt()).ln()).abs() < 1e-9);
        assert!((small / 2000.0 - (3.0 - 7f64.sqrt()).ln()).abs() < 1e-9);
    }

    #[test]
    fn half_flux_det_is_one() {
        // Phi = 1/2 with a_X = a_Y = sqrt 2 means B = 1/4
        let g = fig6_like(FluxSpec::rational(1, 4).unwrap(), 0.37);
        assert!((g.phi() - 0.5).abs() < 1e-15);
        assert!((det_magnitude(&g, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((det_magnitude(&g, 40).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodized_det_matches_product_on_full_periods() {
        // Phi = 1/5 gives period 5
        let g = fig6_like(FluxSpec::rational(1, 10).unwrap(), 0.3);
        let t = transfer_product(&g, c(0.2, 0.1), 15).unwrap();
        assert!((t.log_abs_det() - log_det_magnitude(&g, 15).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_rho_det_is_one() {
        let p = ReciprocalDiagonalParams::new(c(0.6, 0.8), c(1.2, 1.6)).unwrap();
        let g = gauge_transform(
            &p,
            &BravaisSpec::rectangular(1.0, 1.3).unwrap(),
            &FluxSpec::real(0.217).unwrap(),
            0.9,
        )
        .unwrap();
        for q in [1, 7, 50] {
            assert!((det_magnitude(&g, q).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn det_independent_of_energy() {
        let g = fig6_like(FluxSpec::real(0.173).unwrap(), 0.5);
        let base = transfer_product(&g, c(0.0, 0.0), 30).unwrap().log_abs_det();
        for e in [c(1.0, 0.3), c(-2.0, 1.0), c(0.1, -0.9)] {
            assert!((transfer_product(&g, e, 30).unwrap().log_abs_det() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_integral_closed_form_and_rho_independence() {
        for (kx, ky) in [
            (c(1.0, 0.0), c(0.0, 0.5)),
            (c(0.3, 0.4), c(1.0, -1.0)),
            (c(1.0, 0.0), c(0.0, 1.0)),
        ] {
            let p = ReciprocalDiagonalParams::new(kx, ky).unwrap();
            let g = integral_identity_gap(
                &p,
                &BravaisSpec::square(),
                &FluxSpec::real(0.3819660112501051).unwrap(),
                0.2,
                100,
            )
            .unwrap();
            let (a, b) = (kx.norm_sqr() + ky.norm_sqr(), 2.0 * kx.norm() * ky.norm());
            let closed = ((a + (a * a - b * b).sqrt()) / 2.0).ln();
            let tol = if (kx.norm() - ky.norm()).abs() < 1e-12 {
                1e-3
            } else {
                1e-12
            };
            assert!(
                (g.mean_integral - closed).abs() < tol,
                "{} vs {closed}",
                g.mean_integral
            );
        }
    }

    #[test]
    fn identity_gap_shrinks_with_period() {
        let p = ReciprocalDiagonalParams::new(c(1.0, 0.0), c(0.0, 0.6)).unwrap();
        let b = BravaisSpec::rectangular(SQRT_2, SQRT_2).unwrap();
        // Phi = B a_X a_Y = 377/610
        let f = FluxSpec::rational(377, 1220).unwrap();
        let small = integral_identity_gap(&p, &b, &f, 0.1, 305).unwrap().gap;
        let large = integral_identity_gap(&p, &b, &f, 0.1, 610).unwrap().gap;
        assert!(large < small, "{large} vs {small}");
        assert!(large < 1e-10);
    }

    #[test]
    fn harper_chain_lyapunov_in_localized_phase() {
        // hermitian Aubry-Andre with J_X / J_Y = 2: lambda = ln 2 inside the spectrum
        let params = HofstadterParams::new(2.0, 1.0, 0.0, 0.0).unwrap();
        let b = BravaisSpec::square();
        let f = FluxSpec::real((5f64.sqrt() - 1.0) / 2.0).unwrap();
        let chain = HarperChain::new(&params, &b, &f, 0.0).unwrap();
        let h = crate::hamiltonian::hofstadter_nonreciprocal(
            &params,
            &b,
            &strip_parameters(&b, 0, 1).unwrap(),
            &f,
            0.0,
            200,
            BoundaryCondition::Open,
        )
        .unwrap();
        let eigs = linalg::eigenvalues(h.matrix().as_ref()).unwrap();
        let e = eigs
            .iter()
            .min_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        let est = lyapunov_exponent(&chain, c(e.re, 0.0), 20_000).unwrap();
        assert!(
            (est.exponent - 2f64.ln()).abs() < 0.05 * 2f64.ln(),
            "{est:?}"
        );
        assert!(est.converged);
    }
}
