use proptest::prelude::*;
use qrev_core::qcore::gates;
use qrev_core::qcore::random::{random_channel, random_density, random_hermitian, random_pure};
use qrev_core::qcore::{apply_channel, hermitian_eig, trace_distance};
use qrev_core::{Channel, ComplexMatrix, DensityMatrix, Povm, PureState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smallest environment that admits an isometry of the requested shape.
fn min_kraus(nin: usize, nout: usize, kraus: usize) -> usize {
    kraus.max((1usize << nin).div_ceil(1usize << nout))
}

fn built_in_channels() -> Vec<Channel> {
    let eta = DensityMatrix::basis(1, 1).unwrap();
    vec![
        Channel::identity(2),
        Channel::unitary(gates::cz()).unwrap(),
        Channel::depolarizing(0.3).unwrap().tensor(&Channel::identity(1)),
        Channel::dephasing(2),
        Channel::partial_trace(2, &[1]).unwrap(),
        Channel::append_state(2, &eta).unwrap(),
        Channel::replace(2, &DensityMatrix::maximally_mixed(1).unwrap()).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn channels_contract_trace_distance(seed in any::<u64>(), nin in 1usize..=2, nout in 1usize..=2, kraus in 1usize..=4) {
        let mut g = rng(seed);
        let phi = random_channel(nin, nout, min_kraus(nin, nout, kraus), &mut g);
        let rho = random_density(nin, &mut g);
        let sigma = random_density(nin, &mut g);
        let before = trace_distance(&rho, &sigma).unwrap();
        let after = trace_distance(&apply_channel(&phi, &rho).unwrap(), &apply_channel(&phi, &sigma).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-8, "{after} > {before}");
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>(), n in 1usize..=3) {
        let mut g = rng(seed);
        let a = random_density(n, &mut g);
        let b = random_density(n, &mut g);
        let c = random_density(n, &mut g);
        let ab = trace_distance(&a, &b).unwrap();
        let ba = trace_distance(&b, &a).unwrap();
        let bc = trace_distance(&b, &c).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() < 1e-8);
        prop_assert!(ac <= ab + bc + 1e-8);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-8);
        prop_assert!((-1e-12..=1.0 + 1e-8).contains(&ab));
    }

    #[test]
    fn pauli_twirl_is_maximally_mixed(seed in any::<u64>(), n in 1usize..=3) {
        let mut g = rng(seed);
        let rho = random_density(n, &mut g);
        let d = 1usize << n;
        let mut acc = ComplexMatrix::zeros(d, d);
        for k in 0..1usize << (2 * n) {
            let x: Vec<bool> = (0..n).map(|j| (k >> j) & 1 == 1).collect();
            let z: Vec<bool> = (0..n).map(|j| (k >> (n + j)) & 1 == 1).collect();
            let p = gates::pauli_string(&x, &z);
            let term = &(&p * rho.matrix()) * &p.adjoint();
            acc = &acc + &term;
        }
        let avg = acc.scale_re(1.0 / (1usize << (2 * n)) as f64);
        prop_assert!(avg.approx_eq(&ComplexMatrix::identity(d).scale_re(1.0 / d as f64), 1e-9));
    }

    #[test]
    fn built_in_channels_preserve_trace_and_positivity(seed in any::<u64>()) {
        let mut g = rng(seed);
        let rho = random_density(2, &mut g);
        for ch in built_in_channels() {
            let out = apply_channel(&ch, &rho).unwrap();
            prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-9);
            prop_assert!(out.min_eigenvalue().unwrap() > -1e-8);
        }
    }

    #[test]
    fn random_channels_are_complete(seed in any::<u64>(), nin in 1usize..=2, nout in 1usize..=3, kraus in 1usize..=5) {
        let phi = random_channel(nin, nout, min_kraus(nin, nout, kraus), &mut rng(seed));
        prop_assert!(phi.completeness_error() < 1e-9);
        let out = phi.apply(&random_density(nin, &mut rng(seed ^ 1))).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn teleportation_returns_input(seed in any::<u64>()) {
        let phi = random_pure(1, &mut rng(seed));
        let joint = phi.tensor(&PureState::phi_plus()).unwrap().to_density().unwrap();
        let bell = Povm::bell();
        for effect in bell.effects() {
            let x = effect.label & 2 != 0;
            let z = effect.label & 1 != 0;
            let projector = effect.operator.kron(&ComplexMatrix::identity(2));
            let post = &(&projector * joint.matrix()) * &projector;
            let p = post.trace().re;
            prop_assert!((p - 0.25).abs() < 1e-9);
            let remaining = DensityMatrix::new(post.scale_re(1.0 / p)).unwrap().partial_trace(&[2]).unwrap();
            let fix = gates::pauli_xz(x, z);
            let fixed = DensityMatrix::new(&(&fix * remaining.matrix()) * &fix.adjoint()).unwrap();
            prop_assert!(fixed.expectation_pure(&phi).unwrap() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn eigensolver_reconstructs(seed in any::<u64>(), dim in 1usize..=16) {
        let m = random_hermitian(dim, &mut rng(seed));
        let eig = hermitian_eig(&m).unwrap();
        prop_assert!(eig.reconstruct().approx_eq(&m, 1e-9));
        for w in eig.values.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product_recovers_factor(seed in any::<u64>()) {
        let mut g = rng(seed);
        let a = random_density(1, &mut g);
        let b = random_density(2, &mut g);
        let ab = a.tensor(&b).unwrap();
        prop_assert!(ab.partial_trace(&[0]).unwrap().matrix().approx_eq(a.matrix(), 1e-10));
        prop_assert!(ab.partial_trace(&[1, 2]).unwrap().matrix().approx_eq(b.matrix(), 1e-10));
    }

    #[test]
    fn adjoint_matches_schrodinger_picture(seed in any::<u64>()) {
        let mut g = rng(seed);
        let phi = random_channel(1, 2, 3, &mut g);
        let rho = random_density(1, &mut g);
        let obs = random_hermitian(4, &mut g);
        let lhs = phi.apply(&rho).unwrap().expectation(&obs).unwrap();
        let rhs = rho.expectation(&phi.apply_adjoint(&obs).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }
}
