use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use spincat::estimation::{
    cfi, cfi_precision, precision, probabilities, qfi_jz, NoiseKernel, NoiseModel, PrecisionQuery,
    ReadoutSignal,
};
use spincat::evolution::{dephased_readout, interferometer, mirror_asymmetry, DephasingConfig, ReadoutConfig};
use spincat::experiments::loglog_fit;
use spincat::spin::{rot_x, RotationSign, SpinLength};
use spincat::states::msscs;

fn sign() -> impl Strategy<Value = RotationSign> {
    prop_oneof![Just(RotationSign::Positive), Just(RotationSign::Negative)]
}

fn even_n(max_half: usize) -> impl Strategy<Value = usize> {
    (1..=max_half).prop_map(|h| 2 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotations_compose(n in 1usize..=64, a in -3.0f64..3.0, b in -3.0f64..3.0, s in sign()) {
        let spin = SpinLength::new(n).unwrap();
        let ab = rot_x(spin, a, s).compose(&rot_x(spin, b, s)).unwrap();
        let direct = rot_x(spin, a + b, s);
        let diff = ab
            .entries()
            .iter()
            .zip(direct.entries().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        prop_assert!(diff < 1e-10, "diff {diff}");
        prop_assert!(direct.unitarity_defect() < 1e-11);
    }

    #[test]
    fn opposite_rotations_cancel(n in 1usize..=64, a in 0.0f64..PI) {
        let spin = SpinLength::new(n).unwrap();
        let id = rot_x(spin, a, RotationSign::Positive)
            .compose(&rot_x(spin, a, RotationSign::Negative))
            .unwrap();
        for i in 0..=n {
            for j in 0..=n {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((id.entries()[(i, j)].re - expected).abs() < 1e-10);
                prop_assert!(id.entries()[(i, j)].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn interferometer_preserves_norm(
        n in 1usize..=120,
        theta in 0.0f64..1.5,
        phi in -PI..PI,
        tau in 0.0f64..3.0,
    ) {
        let input = msscs(SpinLength::new(n).unwrap(), theta).unwrap();
        let out = interferometer(&input, phi, &ReadoutConfig::new(tau).unwrap());
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        let total: f64 = probabilities(&out).probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_inputs_are_mirror_symmetric(n in 1usize..=400, theta in 0.0f64..1.57) {
        let input = msscs(SpinLength::new(n).unwrap(), theta).unwrap();
        prop_assert!(mirror_asymmetry(&input) < 1e-13);
        prop_assert!(input.expectation_jz().abs() < 1e-10);
    }

    #[test]
    fn information_chain(
        n in even_n(30),
        theta in 0.0f64..1.5,
        phi in 0.0f64..FRAC_PI_2,
        tau in 0.05f64..FRAC_PI_2,
    ) {
        let input = msscs(SpinLength::new(n).unwrap(), theta).unwrap();
        let q = PrecisionQuery::new(phi, tau);
        let ep = precision(&input, &q).unwrap();
        let cf = cfi_precision(&input, &q).unwrap();
        let bound = 1.0 / qfi_jz(&input).sqrt();
        if !cf.is_divergent() {
            prop_assert!(cf.delta_phi >= bound * (1.0 - 1e-9), "{} < {}", cf.delta_phi, bound);
            if !ep.is_divergent() {
                prop_assert!(ep.delta_phi >= cf.delta_phi * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn noisy_cfi_never_exceeds_qfi(
        n in even_n(20),
        theta in 0.0f64..1.5,
        phi in 0.0f64..FRAC_PI_2,
        sigma in 0.0f64..8.0,
        g in 0.0f64..6.0,
    ) {
        let input = msscs(SpinLength::new(n).unwrap(), theta).unwrap();
        let kernel = NoiseKernel::new(input.spin(), &NoiseModel::new(sigma).unwrap());
        let signal = ReadoutSignal::compute(&input, phi, 1.0, &DephasingConfig::new(g).unwrap())
            .unwrap()
            .with_noise(&kernel);
        if let Ok(f) = cfi(&signal.probs, &signal.dprobs) {
            prop_assert!(f <= qfi_jz(&input) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn noise_kernel_is_linear_and_stochastic(
        n in 1usize..=60,
        sigma in 0.0f64..20.0,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let spin = SpinLength::new(n).unwrap();
        let kernel = NoiseKernel::new(spin, &NoiseModel::new(sigma).unwrap());
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let x: Vec<f64> = (0..=n).map(|_| next()).collect();
        let y: Vec<f64> = (0..=n).map(|_| next() - 0.5).collect();
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = kernel.apply(&mixed);
        let kx = kernel.apply(&x);
        let ky = kernel.apply(&y);
        for i in 0..=n {
            prop_assert!((lhs[i] - (a * kx[i] + b * ky[i])).abs() < 1e-12);
        }
        let before: f64 = x.iter().sum();
        let after: f64 = kx.iter().sum();
        prop_assert!((before - after).abs() < 1e-12);
        prop_assert!(kx.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn dephased_state_is_a_density_operator(
        n in 1usize..=24,
        theta in 0.0f64..1.5,
        phi in -PI..PI,
        tau in 0.0f64..FRAC_PI_2,
        g in 0.0f64..8.0,
    ) {
        let input = msscs(SpinLength::new(n).unwrap(), theta).unwrap();
        let rho = dephased_readout(&input, phi, tau, &DephasingConfig::new(g).unwrap()).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.trace().im.abs() < 1e-12);
        prop_assert!(rho.hermiticity_defect() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn power_laws_are_recovered(exponent in -2.0f64..2.0, scale in 0.01f64..100.0) {
        let pts: Vec<(f64, f64)> = [3.0, 10.0, 40.0, 250.0]
            .iter()
            .map(|&x: &f64| (x, scale * x.powf(exponent)))
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        prop_assert!((fit.slope - exponent).abs() < 1e-10);
        prop_assert!((fit.intercept - scale.ln()).abs() < 1e-9);
        prop_assert!(fit.r_squared >= 0.0 && fit.r_squared <= 1.0);
    }
}
