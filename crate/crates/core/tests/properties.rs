use pcl_core::algebra::{hermite_expand, ordered_product, power_to_ordered, OrderedPolynomial};
use pcl_core::bath::DissipatonSpectrum;
use pcl_core::generator::{Generator, HierarchyState, SystemModel};
use pcl_core::hierarchy::{CouplingKind, SignConvention};
use pcl_core::linalg::{dagger, frobenius, hermitian_eigen, identity, trace, unitary_propagator};
use pcl_core::observables::{hamiltonian_of_mean_force, pauli_expectations, vn_entropy};
use pcl_core::{CMatrix, Complex64};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| CMatrix::from_vec(n, n, v))
}

fn hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
    matrix(n).prop_map(|a| (&a + dagger(&a)) * Complex64::new(0.5, 0.0))
}

/// Full-rank density matrix `A A† / tr(A A†)` mixed with a little identity.
fn density(n: usize) -> impl Strategy<Value = CMatrix> {
    matrix(n).prop_map(move |a| {
        let rho = &a * dagger(&a) + identity(n) * Complex64::new(0.05, 0.0);
        let tr = trace(&rho);
        rho / tr
    })
}

proptest! {
    #[test]
    fn ordered_product_is_associative(eta in complex(), a in 0usize..5, b in 0usize..5, c in 0usize..5) {
        let left = ordered_product(a, b, eta).mul(&OrderedPolynomial::monomial(c, Complex64::new(1.0, 0.0)), eta);
        let right = OrderedPolynomial::monomial(a, Complex64::new(1.0, 0.0)).mul(&ordered_product(b, c, eta), eta);
        let scale = left.0.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(left.max_abs_diff(&right) <= 1e-12 * scale);
    }

    #[test]
    fn ordered_product_is_commutative(eta in complex(), a in 0usize..7, b in 0usize..7) {
        prop_assert_eq!(ordered_product(a, b, eta), ordered_product(b, a, eta));
    }

    /// `Σ_n z^n H_n(f) / n! = exp(z f − η z² / 2)`.
    #[test]
    fn hermite_generating_function(eta in complex(), z in complex(), f in complex()) {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut weight = Complex64::new(1.0, 0.0);
        for n in 0..40 {
            sum += weight * hermite_expand(n, eta).eval(f);
            weight *= z / (n + 1) as f64;
        }
        let exact = (z * f - eta * z * z / 2.0).exp();
        prop_assert!((sum - exact).norm() <= 1e-12 * exact.norm().max(1.0));
    }

    #[test]
    fn hermite_round_trip(eta in complex(), n in 0usize..11) {
        let h = hermite_expand(n, eta);
        let scale: f64 = h
            .0
            .iter()
            .enumerate()
            .map(|(j, c)| c.norm() * power_to_ordered(j, eta).0.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .sum();
        let back = h.to_ordered(eta);
        prop_assert!(back.max_abs_diff(&OrderedPolynomial::monomial(n, Complex64::new(1.0, 0.0))) <= 1e-12 * scale);
    }

    #[test]
    fn eigen_reconstruction(m in (1usize..13).prop_flat_map(hermitian)) {
        let n = m.nrows();
        let (values, v) = hermitian_eigen(&m);
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, values.iter().map(|&x| Complex64::new(x, 0.0))));
        let scale = frobenius(&m).max(1.0);
        prop_assert!(frobenius(&(&v * d * dagger(&v) - &m)) <= 1e-10 * scale);
        prop_assert!(frobenius(&(dagger(&v) * &v - identity(n))) <= 1e-10);
    }

    #[test]
    fn entropy_is_unitarily_invariant(rho in (2usize..5).prop_flat_map(density), h in hermitian(4), t in 0.0f64..3.0) {
        let n = rho.nrows();
        let u = unitary_propagator(&h.view((0, 0), (n, n)).into_owned(), t);
        let rotated = &u * &rho * dagger(&u);
        let (s0, s1) = (vn_entropy(&rho).unwrap(), vn_entropy(&rotated).unwrap());
        prop_assert!((s0 - s1).abs() <= 1e-10);
        prop_assert!(s0 >= -1e-12 && s0 <= (n as f64).ln() + 1e-12);
    }

    #[test]
    fn mean_force_round_trip(h in hermitian(2), beta_idx in 0usize..3) {
        let beta = [0.1, 1.0, 10.0][beta_idx];
        let shift = trace(&h) / 2.0;
        let h = &h - identity(2) * shift;
        let unnorm = pcl_core::linalg::hermitian_map(&h, |e| Complex64::new((-beta * e).exp(), 0.0));
        let z = trace(&unnorm).re;
        let rho = unnorm / Complex64::new(z, 0.0);
        let p_min = hermitian_eigen(&rho).0[0];
        prop_assume!(p_min > 1e-11);
        let mf = hamiltonian_of_mean_force(&rho, beta).unwrap();
        // ln ρ amplifies rounding by 1/p_min.
        let tol = 1e-12 + 1e-14 / (beta * p_min);
        prop_assert!(frobenius(&(&mf.h_eff - &h)) <= tol * frobenius(&h).max(1.0));
        prop_assert!((mf.ln_z - z.ln()).abs() <= tol * beta * z.ln().abs().max(1.0));
    }

    /// The hierarchy never changes `tr ρ_0` and maps Hermitian-transported
    /// states onto Hermitian-transported derivatives.
    #[test]
    fn generator_preserves_trace_and_hermiticity(
        eps in -2.0f64..2.0,
        alpha in -2.0f64..2.0,
        lambda in 0.0f64..1.5,
        eta_re in 0.1f64..2.0,
        eta_im in -0.5f64..0.5,
        pcl in any::<bool>(),
        seed in prop::collection::vec(complex(), 15 * 4),
    ) {
        let spec = DissipatonSpectrum::new(
            vec![Complex64::new(eta_re, eta_im), Complex64::new(0.3, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(4.0, 0.0)],
            vec![0, 1],
            0.5,
        ).unwrap();
        let model = SystemModel::two_level(eps, alpha, lambda);
        let kind = if pcl { CouplingKind::Pcl } else { CouplingKind::Cl };
        let gen = Generator::build(kind, &model, &spec, 4, SignConvention::Even);
        prop_assert_eq!(gen.rows(), 15);
        // Hermitian-transport symmetric random state: ρ_{n̄} = ρ_n†, with n̄ = n for self-paired modes.
        let mut state = HierarchyState::zeros(2, gen.rows());
        for r in 0..gen.rows() {
            let a = CMatrix::from_vec(2, 2, seed[4 * r..4 * r + 4].to_vec());
            state.set_block(r, &((&a + dagger(&a)) * Complex64::new(0.5, 0.0)));
        }
        let d = gen.rhs(&state).unwrap();
        prop_assert!(trace(&d.matrix(0)).norm() <= 1e-12 * d.max_abs().max(1.0));
        prop_assert!(gen.hermiticity_defect(&d) <= 1e-12 * d.max_abs().max(1.0));
    }

    #[test]
    fn bloch_vector_of_density_lies_in_ball(rho in density(2)) {
        let b = pauli_expectations(&rho).unwrap();
        prop_assert!(b.norm <= 1.0 + 1e-12);
        prop_assert!((b.norm - (b.x * b.x + b.y * b.y + b.z * b.z).sqrt()).abs() <= 1e-14);
    }
}
