//! Phase accumulation, the twisting readout sequence and collective dephasing
//! during the twisting stage.
//!
//! Time is dimensionless throughout: `tau = chi * t` and `g = gamma / chi`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{check_range, Error, Result};
use crate::linalg;
use crate::spin::{rot_x, DensityOperator, DickeVector, RotationSign, SpinLength};
use crate::states::CatSpec;

/// Readout `R_x^dagger(pi/2) exp(i tau Jz^2) R_x(pi/2)` with
/// `R_x(pi/2) = exp(+i (pi/2) Jx)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutConfig {
    tau: f64,
    pulse_angle: f64,
    pre_sign: RotationSign,
    post_sign: RotationSign,
}

impl ReadoutConfig {
    pub fn new(tau: f64) -> Result<Self> {
        check_range("tau", tau, "[0, inf)", tau >= 0.0)?;
        Ok(Self {
            tau,
            pulse_angle: FRAC_PI_2,
            pre_sign: RotationSign::Positive,
            post_sign: RotationSign::Negative,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pulse_angle(&self) -> f64 {
        self.pulse_angle
    }

    pub fn pre_sign(&self) -> RotationSign {
        self.pre_sign
    }

    pub fn post_sign(&self) -> RotationSign {
        self.post_sign
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        check_range("tau", tau, "[0, inf)", tau >= 0.0)?;
        Ok(Self { tau, ..self })
    }
}

/// Collective `Jz` dephasing at rate `g = gamma / chi`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct DephasingConfig {
    gamma_ratio: f64,
}

impl DephasingConfig {
    pub fn new(gamma_ratio: f64) -> Result<Self> {
        check_range("gamma_ratio", gamma_ratio, "[0, inf)", gamma_ratio >= 0.0)?;
        Ok(Self { gamma_ratio })
    }

    pub fn none() -> Self {
        Self { gamma_ratio: 0.0 }
    }

    pub fn gamma_ratio(&self) -> f64 {
        self.gamma_ratio
    }

    pub fn is_coherent(&self) -> bool {
        self.gamma_ratio == 0.0
    }
}

fn diagonal_phase(state: &DickeVector, phase: impl Fn(f64) -> f64) -> DickeVector {
    let spin = state.spin();
    let amps = DVector::from_iterator(
        spin.dim(),
        state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| a * C64::from_polar(1.0, phase(spin.m(i)))),
    );
    DickeVector::from_raw_unchecked(spin, amps)
}

/// `exp(-i phi Jz)`.
pub fn phase_accumulate(state: &DickeVector, phi: f64) -> DickeVector {
    diagonal_phase(state, |m| -m * phi)
}

/// One-axis twisting `exp(+i tau Jz^2)`.
pub fn oat(state: &DickeVector, tau: f64) -> DickeVector {
    diagonal_phase(state, |m| tau * m * m)
}

/// Pre-pulse, twisting, post-pulse, applied in that order. Dense path, valid
/// for any `N` and `tau`.
pub fn readout(state: &DickeVector, cfg: &ReadoutConfig) -> DickeVector {
    let spin = state.spin();
    let pre = rot_x(spin, cfg.pulse_angle, cfg.pre_sign);
    let post = rot_x(spin, cfg.pulse_angle, cfg.post_sign);
    let pulsed = pre.apply_unchecked(state);
    let twisted = oat(&pulsed, cfg.tau);
    post.apply_unchecked(&twisted)
}

/// Phase accumulation followed by [`readout`].
pub fn interferometer(input: &DickeVector, phi: f64, cfg: &ReadoutConfig) -> DickeVector {
    readout(&phase_accumulate(input, phi), cfg)
}

pub(crate) const SYMMETRY_TOL: f64 = 1e-12;

/// Max `|a_m - a_-m|`.
pub fn mirror_asymmetry(state: &DickeVector) -> f64 {
    let a = state.amplitudes();
    let n = a.len() - 1;
    (0..=n / 2)
        .map(|i| (a[i] - a[n - i]).norm())
        .fold(0.0, f64::max)
}

/// `i^p` for integer `p`.
fn i_pow(p: i64) -> C64 {
    match p.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Final state of the full interferometer at `tau = pi/2` for a mirror
/// symmetric input with even `J`, in O(N):
/// `a_k [cos(k phi) + (-1)^(J-k) sin(k phi)] i^((J-k)^2)`.
///
/// `input` is the state before phase accumulation.
pub fn readout_closed_form(input: &DickeVector, phi: f64) -> Result<DickeVector> {
    let spin = input.spin();
    if !spin.has_even_j() {
        return Err(Error::OddSpinLength(spin.n_particles()));
    }
    let asym = mirror_asymmetry(input);
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let j = (spin.n_particles() / 2) as i64;
    let amps = DVector::from_iterator(
        spin.dim(),
        input.amplitudes().iter().enumerate().map(|(i, a)| {
            let k = i as i64 - j;
            let parity = if (j - k) % 2 == 0 { 1.0 } else { -1.0 };
            let (s, c) = (k as f64 * phi).sin_cos();
            a * (c + parity * s) * i_pow((j - k) * (j - k))
        }),
    );
    Ok(DickeVector::from_raw_unchecked(spin, amps))
}

/// Elementwise factors of the exact dephased twisting channel,
/// `exp(i (m^2 - n^2) tau) exp(-g tau (m - n)^2 / 2)`.
pub(crate) fn channel_factors(spin: SpinLength, tau: f64, gamma_ratio: f64) -> DMatrix<C64> {
    let dim = spin.dim();
    DMatrix::from_fn(dim, dim, |r, c| {
        let (m, n) = (spin.m(r), spin.m(c));
        let d = m - n;
        C64::from_polar((-gamma_ratio * tau * d * d / 2.0).exp(), (m * m - n * n) * tau)
    })
}

/// Exact solution of `drho/dtau = i[Jz^2, rho] + g (Jz rho Jz - {Jz^2, rho}/2)`.
/// Both generators are diagonal in the Dicke basis, so the map acts entrywise.
pub fn dephasing_propagate(
    rho: &DensityOperator,
    tau: f64,
    cfg: &DephasingConfig,
) -> Result<DensityOperator> {
    check_range("tau", tau, "[0, inf)", tau >= 0.0)?;
    let factors = channel_factors(rho.spin(), tau, cfg.gamma_ratio());
    let entries = rho.entries().component_mul(&factors);
    Ok(DensityOperator::from_entries_unchecked(rho.spin(), entries))
}

/// Dephased interferometer for an arbitrary input state: the twisting stage
/// runs under [`dephasing_propagate`], pulses and phase accumulation are ideal.
pub fn dephased_readout(
    input: &DickeVector,
    phi: f64,
    tau: f64,
    cfg: &DephasingConfig,
) -> Result<DensityOperator> {
    let spin = input.spin();
    let pre = rot_x(spin, FRAC_PI_2, RotationSign::Positive);
    let post = rot_x(spin, FRAC_PI_2, RotationSign::Negative);
    let pulsed = pre.apply_unchecked(&phase_accumulate(input, phi));
    let rho0 = DensityOperator::from_pure(&pulsed);
    let rho = dephasing_propagate(&rho0, tau, cfg)?;
    let u = post.entries();
    let entries = linalg::cmatmul(&linalg::cmatmul(u, rho.entries()), &u.adjoint());
    Ok(DensityOperator::from_entries_unchecked(spin, entries))
}

/// [`dephased_readout`] for a cat input.
pub fn dephased_readout_pipeline(
    cat: &CatSpec,
    phi: f64,
    tau: f64,
    cfg: &DephasingConfig,
) -> Result<DensityOperator> {
    dephased_readout(&cat.state()?, phi, tau, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::msscs;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn spin(n: usize) -> SpinLength {
        SpinLength::new(n).unwrap()
    }

    fn max_diff(a: &DickeVector, b: &DickeVector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    fn ghz(n: usize) -> DickeVector {
        msscs(spin(n), 0.0).unwrap()
    }

    #[test]
    fn phase_accumulation() {
        let psi = msscs(spin(12), 0.6).unwrap();
        assert_eq!(phase_accumulate(&psi, 0.0), psi);
        let out = phase_accumulate(&psi, 1.3);
        for (a, b) in psi.populations().iter().zip(out.populations()) {
            assert!((a - b).abs() < 1e-15);
        }
        let g = phase_accumulate(&ghz(10), 0.37);
        let rel = g.amplitude(-5.0).unwrap() / g.amplitude(5.0).unwrap();
        assert!((rel - C64::from_polar(1.0, 10.0 * 0.37)).norm() < 1e-14);
    }

    #[test]
    fn twisting() {
        let psi = msscs(spin(12), 0.6).unwrap();
        assert_eq!(oat(&psi, 0.0), psi);
        assert!(max_diff(&oat(&psi, 2.0 * PI), &psi) < 1e-12);
        let basis = DickeVector::basis(spin(6), 2.0).unwrap();
        let out = oat(&basis, 0.9);
        assert!((out.amplitude(2.0).unwrap() - C64::from_polar(1.0, 3.6)).norm() < 1e-15);
    }

    #[test]
    fn readout_at_zero_tau_is_identity() {
        let psi = msscs(spin(20), 0.5).unwrap();
        let out = readout(&psi, &ReadoutConfig::new(0.0).unwrap());
        assert!(max_diff(&out, &psi) < 1e-10);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_sign_conventions() {
        let cfg = ReadoutConfig::new(0.4).unwrap();
        assert_eq!(cfg.pre_sign(), RotationSign::Positive);
        assert_eq!(cfg.post_sign(), RotationSign::Negative);
        assert_eq!(cfg.pulse_angle(), FRAC_PI_2);
        assert!(ReadoutConfig::new(-0.1).is_err());
        assert!(DephasingConfig::new(-1.0).is_err());
    }

    #[test]
    fn closed_form_matches_dense() {
        let cfg = ReadoutConfig::new(FRAC_PI_2).unwrap();
        for n in [8usize, 12, 40] {
            let psi = msscs(spin(n), 0.7).unwrap();
            for k in 0..16 {
                let phi = -PI + 2.0 * PI * k as f64 / 16.0;
                let dense = interferometer(&psi, phi, &cfg);
                let closed = readout_closed_form(&psi, phi).unwrap();
                assert!(max_diff(&dense, &closed) < 1e-10, "N={n} phi={phi}");
            }
        }
    }

    #[test]
    fn closed_form_ghz_branch() {
        let j = 4.0;
        let phi = 0.3f64;
        let out = readout_closed_form(&ghz(8), phi).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let top = out.amplitude(j).unwrap();
        let bottom = out.amplitude(-j).unwrap();
        assert!((top - C64::new(r * ((j * phi).cos() + (j * phi).sin()), 0.0)).norm() < 1e-15);
        // (J - k)^2 = 64 for k = -J, so the phase is i^64 = 1
        assert!((bottom - C64::new(r * ((j * phi).cos() - (j * phi).sin()), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn closed_form_at_zero_phase_keeps_populations() {
        let psi = msscs(spin(16), 0.9).unwrap();
        let out = readout_closed_form(&psi, 0.0).unwrap();
        for (a, b) in psi.populations().iter().zip(out.populations()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_two_level_input() {
        let s = spin(8);
        let mut amps = DVector::zeros(9);
        amps[2] = C64::new(1.0, 0.0);
        amps[6] = C64::new(1.0, 0.0);
        let psi = DickeVector::normalized(s, amps).unwrap();
        let cfg = ReadoutConfig::new(FRAC_PI_2).unwrap();
        let dense = interferometer(&psi, 0.3, &cfg);
        let closed = readout_closed_form(&psi, 0.3).unwrap();
        assert!(max_diff(&dense, &closed) < 1e-10);
    }

    #[test]
    fn closed_form_rejections() {
        assert_eq!(
            readout_closed_form(&ghz(6), 0.1),
            Err(Error::OddSpinLength(6))
        );
        let s = spin(8);
        let psi = DickeVector::normalized(
            s,
            DVector::from_iterator(9, (0..9).map(|i| C64::new(1.0 + i as f64, 0.0))),
        )
        .unwrap();
        assert!(matches!(readout_closed_form(&psi, 0.1), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn channel_preserves_diagonal_and_trace() {
        let psi = msscs(spin(10), 0.4).unwrap();
        let rho = DensityOperator::from_pure(&rot_x(spin(10), 0.8, RotationSign::Positive).apply(&psi).unwrap());
        let out = dephasing_propagate(&rho, 0.7, &DephasingConfig::new(3.0).unwrap()).unwrap();
        for (a, b) in rho.diagonal().iter().zip(out.diagonal()) {
            assert_eq!(*a, b);
        }
        assert!((out.trace() - 1.0).norm() < 1e-12);
        assert!(out.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn coherent_channel_is_the_twist() {
        let s = spin(10);
        let psi = rot_x(s, 0.8, RotationSign::Positive).apply(&msscs(s, 0.4).unwrap()).unwrap();
        let rho = DensityOperator::from_pure(&psi);
        let out = dephasing_propagate(&rho, 0.9, &DephasingConfig::none()).unwrap();
        let expected = DensityOperator::from_pure(&oat(&psi, 0.9));
        assert!(linalg::max_abs_diff(out.entries(), expected.entries()) < 1e-12);
    }

    #[test]
    fn dephased_pipeline_trace() {
        let cat = CatSpec::new(20, FRAC_PI_4).unwrap();
        for g in [0.0, 2.0, 6.0] {
            for k in 0..=4 {
                let tau = FRAC_PI_2 * k as f64 / 4.0;
                let rho = dephased_readout_pipeline(&cat, 0.1, tau, &DephasingConfig::new(g).unwrap()).unwrap();
                assert!((rho.trace() - 1.0).norm() < 1e-12);
            }
        }
        assert!(dephasing_propagate(
            &DensityOperator::from_pure(&cat.state().unwrap()),
            -1.0,
            &DephasingConfig::none()
        )
        .is_err());
    }
}
