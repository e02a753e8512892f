use std::f64::consts::{PI, SQRT_2, TAU};

use proptest::prelude::*;
use skinlab_core::spectral::{ipr_of_vector, winding_bloch_with};
use skinlab_core::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex(range: f64) -> impl Strategy<Value = Complex64> {
    (-range..range, -range..range).prop_map(|(re, im)| c(re, im))
}

fn nonzero_complex() -> impl Strategy<Value = Complex64> {
    (0.3f64..1.5, 0.0..TAU).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

fn bravais() -> impl Strategy<Value = BravaisSpec> {
    (0.6f64..1.6, 0.6f64..1.6, 0.4f64..2.7)
        .prop_map(|(ax, ay, alpha)| BravaisSpec::new(ax, ay, alpha).unwrap())
}

fn rectangular() -> impl Strategy<Value = BravaisSpec> {
    (0.6f64..1.6, 0.6f64..1.6).prop_map(|(ax, ay)| BravaisSpec::rectangular(ax, ay).unwrap())
}

fn coprime_cut() -> impl Strategy<Value = (i64, i64)> {
    prop_oneof![
        Just((0, 1)),
        Just((1, 1)),
        Just((1, 2)),
        Just((2, 1)),
        Just((2, 3)),
        Just((3, 2))
    ]
}

fn hofstadter() -> impl Strategy<Value = HofstadterParams> {
    (0.4f64..2.0, 0.4f64..2.0, -0.6f64..0.6, -0.6f64..0.6)
        .prop_map(|(jx, jy, hx, hy)| HofstadterParams::new(jx, jy, hx, hy).unwrap())
}

fn generic_model(b: BravaisSpec, amps: [Complex64; 6]) -> LatticeModel {
    let shifts = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];
    let hops = shifts
        .iter()
        .zip(amps)
        .map(|(&(x, y), a)| HoppingTerm::new(x, y, a).unwrap())
        .collect();
    LatticeModel::new(b, hops).unwrap()
}

fn max_entry_diff(a: &EffectiveHamiltonian, b: &EffectiveHamiltonian) -> f64 {
    let n = a.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a.entry(i, j) - b.entry(i, j)).norm());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projected_offsets_are_integers(b in bravais(), cut in coprime_cut(), nx in -3i64..4, ny in -3i64..4) {
        prop_assume!((nx, ny) != (0, 0));
        let strip = strip_parameters(&b, cut.0, cut.1).unwrap();
        let term = HoppingTerm::new(nx, ny, c(1.0, 0.0)).unwrap();
        let proj = project_delta(&strip, &b, &term);
        prop_assert!((proj.delta_y / strip.a() - (-nx * cut.0 + ny * cut.1) as f64).abs() < 1e-12);
        prop_assert_eq!(proj.shift, -nx * cut.0 + ny * cut.1);
    }

    #[test]
    fn zero_field_table_is_site_independent(b in bravais(), cut in coprime_cut(), amps in prop::array::uniform6(nonzero_complex()), k_x in -PI..PI) {
        let model = generic_model(b, amps);
        let strip = strip_parameters(&b, cut.0, cut.1).unwrap();
        let first = effective_hopping_table(&model, &strip, &FluxSpec::zero(), k_x, 0);
        for n in 1..=100 {
            let t = effective_hopping_table(&model, &strip, &FluxSpec::zero(), k_x, n);
            prop_assert!(t.max_deviation(&first) < 1e-14);
        }
    }

    #[test]
    fn rational_flux_table_has_the_denominator_as_period(numerator in 1i64..12, denominator in 2i64..13, amps in prop::array::uniform6(nonzero_complex()), k_x in -PI..PI, n in -20i64..20) {
        let b = BravaisSpec::square();
        let model = generic_model(b, amps);
        let strip = strip_parameters(&b, 0, 1).unwrap();
        let flux = FluxSpec::rational(numerator, denominator).unwrap();
        let here = effective_hopping_table(&model, &strip, &flux, k_x, n);
        let there = effective_hopping_table(&model, &strip, &flux, k_x, n + denominator);
        prop_assert!(here.max_deviation(&there) < 1e-12);
    }

    #[test]
    fn hermitian_models_are_reciprocal(b in bravais(), a in prop::array::uniform3(nonzero_complex())) {
        let model = LatticeModel::new(b, vec![
            HoppingTerm::new(1, 0, a[0]).unwrap(),
            HoppingTerm::new(-1, 0, a[0].conj()).unwrap(),
            HoppingTerm::new(0, 1, a[1]).unwrap(),
            HoppingTerm::new(0, -1, a[1].conj()).unwrap(),
            HoppingTerm::new(2, -1, a[2]).unwrap(),
            HoppingTerm::new(-2, 1, a[2].conj()).unwrap(),
        ]).unwrap();
        let r = classify_reciprocity(&model);
        prop_assert!(r.reciprocal && r.hermitian);
    }

    #[test]
    fn hofstadter_builder_matches_generic_path(params in hofstadter(), b in rectangular(), cut in coprime_cut(), phi in -0.7f64..0.7, k_x in -PI..PI, len in 13usize..=64, periodic in any::<bool>()) {
        let bc = if periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Open };
        let strip = strip_parameters(&b, cut.0, cut.1).unwrap();
        let flux = FluxSpec::real(phi).unwrap();
        let direct = hofstadter_nonreciprocal(&params, &b, &strip, &flux, k_x, len, bc).unwrap();
        let generic = assemble(&params.lattice_model(b).unwrap(), &strip, &flux, k_x, len, bc).unwrap();
        prop_assert!(max_entry_diff(&direct, &generic) < 1e-12);
    }

    #[test]
    fn diagonal_builder_matches_generic_path(kx in nonzero_complex(), ky in nonzero_complex(), b in rectangular(), phi in -0.7f64..0.7, k_x in -PI..PI, len in 3usize..=64, periodic in any::<bool>()) {
        let bc = if periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Open };
        let params = ReciprocalDiagonalParams::new(kx, ky).unwrap();
        let flux = FluxSpec::real(phi).unwrap();
        let direct = reciprocal_diagonal(&params, &b, &flux, k_x, len, bc).unwrap();
        let strip = strip_parameters(&b, 1, 1).unwrap();
        let generic = assemble(&params.lattice_model(b).unwrap(), &strip, &flux, k_x, len, bc).unwrap();
        prop_assert!(max_entry_diff(&direct, &generic) < 1e-12);
    }

    // Only holds when distinct hops project to distinct shifts; on the
    // diagonal cut +X and -Y interfere and k_x breaks reciprocity.
    #[test]
    fn reciprocal_obc_moduli_are_symmetric(
        b in rectangular(),
        cut in prop_oneof![Just((0, 1)), Just((1, 2)), Just((2, 1)), Just((2, 3)), Just((3, 2))],
        moduli in prop::array::uniform2(0.3f64..1.5),
        phases in prop::array::uniform4(0.0..TAU),
        phi in -0.7f64..0.7,
        k_x in -PI..PI,
        len in 7usize..40,
    ) {
        let hop = |x, y, r, a| HoppingTerm::new(x, y, Complex64::from_polar(r, a)).unwrap();
        let model = LatticeModel::new(b, vec![
            hop(1, 0, moduli[0], phases[0]),
            hop(-1, 0, moduli[0], phases[1]),
            hop(0, 1, moduli[1], phases[2]),
            hop(0, -1, moduli[1], phases[3]),
        ]).unwrap();
        prop_assert!(classify_reciprocity(&model).reciprocal);
        let strip = strip_parameters(&b, cut.0, cut.1).unwrap();
        let h = assemble(&model, &strip, &FluxSpec::real(phi).unwrap(), k_x, len, BoundaryCondition::Open).unwrap();
        for i in 0..len {
            for j in 0..len {
                prop_assert!((h.entry(i, j).norm() - h.entry(j, i).norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn imaginary_gauge_keeps_hopping_product(params in hofstadter()) {
        prop_assert!(((params.kappa_x_left() * params.kappa_x_right()).norm() - params.j_x * params.j_x).abs() < 1e-12);
        prop_assert!(((params.kappa_y_left() * params.kappa_y_right()).norm() - params.j_y * params.j_y).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn diagonalization_invariants(params in hofstadter(), cut in coprime_cut(), phi in -0.7f64..0.7, k_x in -PI..PI, len in 13usize..60, periodic in any::<bool>()) {
        let bc = if periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Open };
        let b = BravaisSpec::square();
        let strip = strip_parameters(&b, cut.0, cut.1).unwrap();
        let h = hofstadter_nonreciprocal(&params, &b, &strip, &FluxSpec::real(phi).unwrap(), k_x, len, bc).unwrap();
        let r = diagonalize(&h).unwrap();
        prop_assert!(r.max_residual() < 1e-9 * h.frobenius_norm());
        prop_assert!((r.mean_distribution().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for &p in r.ipr() {
            prop_assert!(p >= 1.0 / len as f64 - 1e-12 && p <= 1.0 + 1e-12);
        }
        let v = r.eigenvectors();
        for l in 0..len {
            let col: Vec<Complex64> = (0..len).map(|i| v[(i, l)]).collect();
            prop_assert!((col.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((ipr_of_vector(&col) - r.ipr()[l]).abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_winding_is_orientation_antisymmetric(t in prop::array::uniform4(complex(1.2)), e_b in complex(1.5)) {
        let table = HoppingTable::from_entries([(1, t[0]), (-1, t[1]), (2, t[2]), (-2, t[3])]);
        let bloch = BlochTable::from_table(table);
        if let Ok(w) = winding_bloch_with(&bloch, e_b, 2048) {
            let back = winding_bloch_with(&bloch.reflected(), e_b, 2048).unwrap();
            prop_assert!(w.residual < 1e-6);
            prop_assert_eq!(back.quantized, -w.quantized);
        }
    }

    #[test]
    fn flux_winding_is_integer(params in hofstadter(), phi in -0.7f64..0.7, k_x in -PI..PI, len in 8usize..30, e_b in complex(2.0)) {
        let b = BravaisSpec::square();
        let strip = strip_parameters(&b, 0, 1).unwrap();
        let flux = FluxSpec::real(phi).unwrap();
        let w = winding_flux(|twist| hofstadter_nonreciprocal(&params, &b, &strip, &flux, k_x, len, BoundaryCondition::Twisted(twist)), e_b, 180);
        match w {
            Ok(w) => prop_assert!(w.residual < 1e-6),
            Err(Error::ZeroDeterminant { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn comparison_without_budget_is_symmetric(params in hofstadter(), phi in -0.7f64..0.7, len in 13usize..40) {
        let b = BravaisSpec::square();
        let strip = strip_parameters(&b, 0, 1).unwrap();
        let flux = FluxSpec::real(phi).unwrap();
        let obc = diagonalize(&hofstadter_nonreciprocal(&params, &b, &strip, &flux, 0.0, len, BoundaryCondition::Open).unwrap()).unwrap();
        let pbc = diagonalize(&hofstadter_nonreciprocal(&params, &b, &strip, &flux, 0.0, len, BoundaryCondition::Periodic).unwrap()).unwrap();
        let fwd = compare_spectra(&obc, &pbc, 0).unwrap();
        let back = compare_spectra(&pbc, &obc, 0).unwrap();
        prop_assert_eq!(fwd.verdict, back.verdict);
        prop_assert!((fwd.distance - back.distance).abs() < 1e-15);
    }

    #[test]
    fn gauge_transform_preserves_spectrum(kx in nonzero_complex(), ky in nonzero_complex(), phi in -0.7f64..0.7, k_x in -PI..PI, len in 4usize..22) {
        let params = ReciprocalDiagonalParams::new(kx, ky).unwrap();
        let b = BravaisSpec::rectangular(SQRT_2, SQRT_2).unwrap();
        let flux = FluxSpec::real(phi).unwrap();
        let chain = gauge_transform(&params, &b, &flux, k_x).unwrap();
        let e1 = diagonalize(&reciprocal_diagonal(&params, &b, &flux, k_x, len, BoundaryCondition::Open).unwrap()).unwrap();
        let e2 = diagonalize(&chain.hamiltonian(len, BoundaryCondition::Open).unwrap()).unwrap();
        for z in e1.eigenvalues() {
            let d = e2.eigenvalues().iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-10, "eigenvalue {z} unmatched by {d:e}");
        }
        for n in -10..10 {
            prop_assert!((chain.w_left(n).norm() - chain.original().w_left(n).norm()).abs() < 1e-12);
            prop_assert!((chain.w_right(n).norm() - chain.original().w_right(n).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn transfer_det_is_energy_independent(kx in nonzero_complex(), ky in nonzero_complex(), denominator in 2i64..12, k_x in -PI..PI, energies in prop::array::uniform10(complex(3.0))) {
        let params = ReciprocalDiagonalParams::new(kx, ky).unwrap();
        let b = BravaisSpec::rectangular(SQRT_2, SQRT_2).unwrap();
        // Phi = 2 B on this lattice
        let flux = FluxSpec::rational(1, 2 * denominator).unwrap();
        let chain = gauge_transform(&params, &b, &flux, k_x).unwrap();
        let q = denominator as usize;
        let reference = log_det_magnitude(&chain, q).unwrap();
        for e in energies {
            let t = transfer_product(&chain, e, q).unwrap();
            prop_assert!((t.log_abs_det() - reference).abs() < 1e-10);
        }
    }

    #[test]
    fn plaquette_flux_is_gauge_invariant(params in hofstadter(), phi in -0.7f64..0.7, size in 2usize..12) {
        let mask = GeometryMask::lower_triangle(size).unwrap();
        let hops: NearestNeighborHops = (&params).into();
        let m = build_masked_hamiltonian(&hops, &FluxSpec::real(phi).unwrap(), &mask).unwrap();
        for (_, z) in plaquette_fluxes(&m, &hops, &mask) {
            prop_assert!((z - Complex64::cis(TAU * phi)).norm() < 1e-12);
        }
    }

    #[test]
    fn masked_distribution_is_normalized(params in hofstadter(), phi in -0.7f64..0.7, size in 2usize..10) {
        let mask = GeometryMask::lower_triangle(size).unwrap();
        let hops: NearestNeighborHops = (&params).into();
        let m = build_masked_hamiltonian(&hops, &FluxSpec::real(phi).unwrap(), &mask).unwrap();
        let d = distribution_map(&m, &mask).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-12);
    }
}

/// Rational flux 1/5 on the diagonal cut with a = sqrt(2), so the chain has
/// period five.
fn period_five_chain() -> (GaugeTransformedChain, usize) {
    let params = ReciprocalDiagonalParams::new(c(1.0, 0.0), c(0.3, 0.7)).unwrap();
    let b = BravaisSpec::rectangular(SQRT_2, SQRT_2).unwrap();
    (
        gauge_transform(&params, &b, &FluxSpec::rational(1, 10).unwrap(), 0.37).unwrap(),
        5,
    )
}

#[test]
fn obc_eigenvalues_zero_the_corner_of_the_transfer_product() {
    let (chain, q) = period_five_chain();
    let len = 4 * q;
    let spectrum = diagonalize(&chain.hamiltonian(len, BoundaryCondition::Open).unwrap()).unwrap();
    let relative = |e: Complex64| {
        let t = transfer_product(&chain, e, len).unwrap();
        let scale = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| t.log_abs_entry(i, j))
            .fold(f64::NEG_INFINITY, f64::max);
        t.log_abs_entry(0, 0) - scale
    };
    let probes: Vec<Complex64> = (0..20)
        .map(|k| Complex64::from_polar(1.0 + 0.1 * k as f64, 0.7 * k as f64 + 0.2))
        .collect();
    let best_probe = probes
        .iter()
        .map(|&e| relative(e))
        .fold(f64::INFINITY, f64::min);
    for &e in spectrum.eigenvalues() {
        assert!(
            relative(e) < best_probe,
            "E = {e}: {} vs probes {best_probe}",
            relative(e)
        );
    }
}

#[test]
fn boundary_amplitude_ratio_follows_the_transfer_product() {
    let (chain, q) = period_five_chain();
    let len = 4 * q;
    let spectrum = diagonalize(&chain.hamiltonian(len, BoundaryCondition::Open).unwrap()).unwrap();
    let v = spectrum.eigenvectors();
    // S maps (phi_1, phi_0) to (phi_{L+1}, phi_L); with phi_0 = 0 the lower
    // left entry gives phi_L / phi_1
    for (l, &e) in spectrum.eigenvalues().iter().enumerate() {
        let t = transfer_product(&chain, e, len - 1).unwrap();
        let predicted = t.log_abs_entry(0, 0);
        let actual = (v[(len - 1, l)].norm() / v[(0, l)].norm()).ln();
        assert!(
            (predicted - actual).abs() < 2f64.ln(),
            "E = {e}: {predicted} vs {actual}"
        );
    }
}
