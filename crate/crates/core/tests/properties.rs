use proptest::prelude::*;

use liouqsl::applications::{amplitude_damping as adc, krylov, sff};
use liouqsl::evolution::{propagate_expm, state_at, uniform_grid};
use liouqsl::lindblad::{self, amplitude_damping};
use liouqsl::linalg::{self, c, CVec};
use liouqsl::liouville::{
    devectorize, liouville_angle, normalize_state, sandwich_superop, superop_variance, vectorize, DensityMatrix,
};
use liouqsl::{qsl, random, spectral};

fn psi(alpha: f64) -> DensityMatrix {
    let v = CVec::from_vec(vec![c(alpha, 0.0), c((1.0 - alpha * alpha).sqrt(), 0.0)]);
    DensityMatrix::from_pure(&v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vectorization_roundtrip_and_sandwich(seed in any::<u64>(), d in 2usize..5) {
        let mut r = random::rng(seed);
        let a = random::ginibre(&mut r, d, d);
        let b = random::ginibre(&mut r, d, d);
        let m = random::ginibre(&mut r, d, d);
        let v = vectorize(&b).unwrap();
        prop_assert_eq!(devectorize(&v), b.clone());
        let s = sandwich_superop(&a, &m).unwrap();
        let lhs = vectorize(&(&a * &b * &m)).unwrap().into_vec();
        prop_assert!((s.matrix() * v.into_vec() - lhs).norm() < 1e-12);
    }

    #[test]
    fn generators_preserve_trace_and_hermiticity(seed in any::<u64>(), d in 2usize..4) {
        let mut r = random::rng(seed);
        let spec = random::lindblad_spec(&mut r, d, d, 1.0, 1.0);
        let l = lindblad::liouvillian(&spec, 0.0).unwrap();
        let rho = random::density(&mut r, d);
        let dr = devectorize(&l.apply(&vectorize(rho.matrix()).unwrap()).unwrap());
        prop_assert!(dr.trace().norm() < 1e-12);
        prop_assert!(linalg::hermiticity_defect(&dr) < 1e-12);
        let t = 3.0 * random::unitary(&mut r, 1)[(0, 0)].norm();
        let out = state_at(&l, &rho, t).unwrap();
        prop_assert!(DensityMatrix::new(linalg::hermitize(&out)).is_ok());
    }

    #[test]
    fn speed_split_is_ordered(seed in any::<u64>(), d in 2usize..4) {
        let mut r = random::rng(seed);
        let spec = random::lindblad_spec(&mut r, d, d, 1.0, 1.0);
        let parts = lindblad::build_liouvillian(&spec, 0.0).unwrap();
        let s0 = normalize_state(&random::density(&mut r, d));
        let s = normalize_state(&random::density(&mut r, d));
        let basis = qsl::complete_basis(&s0).unwrap();
        let (total, cl) = qsl::speed_split(&parts.full, &basis, &s).unwrap();
        prop_assert!(total >= 0.0 && cl >= -1e-12 && cl <= total + 1e-10);
        let dec = qsl::speed_decomposition(&parts, &s).unwrap();
        prop_assert!((dec.total_sq() - superop_variance(&parts.full, &s).unwrap()).abs() < 1e-10);
        let p = qsl::exact_uncertainty_product(&parts.full, &basis, &s).unwrap();
        prop_assert!((p - 0.5).abs() < 1e-9);
    }

    #[test]
    fn angle_is_a_bounded_symmetric_distance(seed in any::<u64>(), d in 2usize..5) {
        let mut r = random::rng(seed);
        let a = random::density(&mut r, d);
        let b = random::density(&mut r, d);
        let ab = liouville_angle(&a, &b).unwrap();
        prop_assert!((ab - liouville_angle(&b, &a).unwrap()).abs() < 1e-14);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&ab));
        prop_assert!(liouville_angle(&a, &a).unwrap() < 1e-7);
    }

    #[test]
    fn closed_forms_track_propagation(alpha in 0.0f64..=1.0, n in 0.0f64..2.0, t in 0.5f64..800.0) {
        let l = lindblad::liouvillian(&amplitude_damping(0.01, n).unwrap(), 0.0).unwrap();
        let cf = adc::amplitude_damping_closed_forms(alpha, 0.01, n, t).unwrap();
        let rho = DensityMatrix::new(linalg::hermitize(&state_at(&l, &psi(alpha), t).unwrap())).unwrap();
        prop_assert!((rho.matrix() - &cf.rho_t).norm() < 1e-8);
        prop_assert!((qsl::speed(&l, &normalize_state(&rho)).unwrap() - cf.speed).abs() < 1e-6);
        prop_assert!((liouville_angle(&psi(alpha), &rho).unwrap() - cf.theta_0t).abs() < 1e-7);
    }

    #[test]
    fn spectral_reconstruction(seed in any::<u64>(), d in 2usize..4) {
        let mut r = random::rng(seed);
        let spec = random::lindblad_spec(&mut r, d, d, 1.0, 1.0);
        let l = lindblad::liouvillian(&spec, 0.0).unwrap();
        let sd = spectral::spectral_decompose(&l).unwrap();
        prop_assert!(sd.condition() < 1e-8);
        let g = sd.left().adjoint() * sd.right();
        prop_assert!(linalg::max_abs(&(g - linalg::identity(d * d))) < 1e-8);
        prop_assert!(sd.eigenvalues().iter().all(|z| z.re <= 1e-10));
    }

    #[test]
    fn krylov_amplitudes_normalized(seed in any::<u64>(), d in 2usize..6, beta in 0.0f64..3.0) {
        let mut r = random::rng(seed);
        let h = random::hermitian(&mut r, d);
        let rho = sff::coherent_gibbs_state(&h, beta).unwrap();
        let times = uniform_grid(3.0, 61).unwrap();
        let kd = krylov::krylov_build(&h, &rho, &times).unwrap();
        prop_assert!(kd.normalization_defect() < 1e-10);
        prop_assert_eq!(kd.complexity()[0], 0.0);
        prop_assert!(kd.complexity().iter().all(|&x| x >= 0.0));
        let tr = propagate_expm(kd.generator(), &rho, &times).unwrap();
        prop_assert!(krylov::tradeoff_check(&kd, &sff::sff_series(&tr)).unwrap() <= 1.0 + 1e-8);
    }
}
