//! Fisher information, Cramér-Rao bounds and error-propagation precision of
//! the interaction-based readout, with optional Gaussian detection noise.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{check_range, Error, Result};
use crate::evolution::{
    channel_factors, mirror_asymmetry, phase_accumulate, readout, DephasingConfig, ReadoutConfig,
    SYMMETRY_TOL,
};
use crate::linalg;
use crate::spin::{rot_x, DensityOperator, DickeVector, RotationSign, SpinLength};
use crate::states::{c_coefficient, cat_threshold, CatSpec};

/// Smallest population still treated as an outcome in the CFI sum.
pub const CFI_PROB_FLOOR: f64 = 1e-14;
/// Derivative magnitude below which an empty bin carries no information.
pub const CFI_DERIVATIVE_FLOOR: f64 = 1e-12;
/// Slope magnitude below which error propagation is flagged divergent.
pub const SLOPE_FLOOR: f64 = 1e-12;
/// Cat-regime lower bound on `N` for the analytic bound.
pub const ANALYTIC_MIN_PARTICLES: usize = 40;

/// Outcome distribution of a `Jz` measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityDistribution {
    spin: SpinLength,
    probs: Vec<f64>,
}

impl ProbabilityDistribution {
    const NEGATIVE_TOL: f64 = 1e-10;
    const SUM_TOL: f64 = 1e-10;

    /// Validating constructor: entries must be `>= -1e-10` and sum to 1
    /// within 1e-10. Slightly negative entries are clamped to 0.
    pub fn new(spin: SpinLength, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != spin.dim() {
            return Err(Error::DimensionMismatch {
                expected: spin.dim(),
                got: probs.len(),
            });
        }
        if let Some(&p) = probs.iter().find(|&&p| !(p >= -Self::NEGATIVE_TOL)) {
            return Err(Error::OutOfRange {
                name: "probability",
                value: p,
                range: "[0, 1]",
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::OutOfRange {
                name: "total probability",
                value: sum,
                range: "1 +/- 1e-10",
            });
        }
        Ok(Self::from_weights(spin, probs))
    }

    /// Clamps negatives to zero and rescales to unit sum.
    pub(crate) fn from_weights(spin: SpinLength, mut probs: Vec<f64>) -> Self {
        probs.iter_mut().for_each(|p| *p = p.max(0.0));
        let sum: f64 = probs.iter().sum();
        if sum > 0.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Self { spin, probs }
    }

    pub fn spin(&self) -> SpinLength {
        self.spin
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, m: f64) -> Option<f64> {
        self.spin.index_of(m).map(|i| self.probs[i])
    }

    pub fn mean(&self) -> f64 {
        first_moment(self.spin, &self.probs)
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        (second_moment(self.spin, &self.probs) - mean * mean).max(0.0)
    }
}

fn first_moment(spin: SpinLength, w: &[f64]) -> f64 {
    w.iter().enumerate().map(|(i, p)| spin.m(i) * p).sum()
}

fn second_moment(spin: SpinLength, w: &[f64]) -> f64 {
    w.iter()
        .enumerate()
        .map(|(i, p)| {
            let m = spin.m(i);
            m * m * p
        })
        .sum()
}

pub fn probabilities(state: &DickeVector) -> ProbabilityDistribution {
    ProbabilityDistribution::from_weights(state.spin(), state.populations())
}

pub fn probabilities_rho(rho: &DensityOperator) -> ProbabilityDistribution {
    ProbabilityDistribution::from_weights(rho.spin(), rho.diagonal())
}

/// Gaussian detection noise on the measured `m`, standard deviation `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        check_range("sigma", sigma, "[0, inf)", sigma >= 0.0)?;
        Ok(Self { sigma })
    }

    pub fn noiseless() -> Self {
        Self { sigma: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Column-stochastic blur `K[m, n] = A_n exp(-(m-n)^2 / (2 sigma^2))`, each
/// source column normalized over the truncated outcome range `-J..J`.
#[derive(Clone, Debug)]
pub struct NoiseKernel {
    spin: SpinLength,
    matrix: Option<DMatrix<f64>>,
}

impl NoiseKernel {
    pub fn new(spin: SpinLength, noise: &NoiseModel) -> Self {
        if noise.sigma == 0.0 {
            return Self { spin, matrix: None };
        }
        let dim = spin.dim();
        let two_s2 = 2.0 * noise.sigma * noise.sigma;
        let mut k = DMatrix::from_fn(dim, dim, |m, n| {
            let d = m as f64 - n as f64;
            (-d * d / two_s2).exp()
        });
        for mut col in k.column_iter_mut() {
            let total = col.sum();
            col /= total;
        }
        Self {
            spin,
            matrix: Some(k),
        }
    }

    pub fn spin(&self) -> SpinLength {
        self.spin
    }

    /// Applies the kernel to any sequence indexed like the Dicke basis
    /// (probabilities or their derivatives).
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        match &self.matrix {
            None => values.to_vec(),
            Some(k) => (k * DVector::from_column_slice(values)).iter().copied().collect(),
        }
    }
}

pub fn apply_detection_noise(p: &ProbabilityDistribution, noise: &NoiseModel) -> ProbabilityDistribution {
    if noise.sigma == 0.0 {
        return p.clone();
    }
    let kernel = NoiseKernel::new(p.spin, noise);
    ProbabilityDistribution::from_weights(p.spin, kernel.apply(&p.probs))
}

/// `4 Var(Jz)`.
pub fn qfi_jz(state: &DickeVector) -> f64 {
    4.0 * state.variance_jz()
}

/// `1 / sqrt(mu F)`.
pub fn qcrb(fisher: f64, mu: u32) -> Result<f64> {
    if !(fisher > 0.0) || !fisher.is_finite() {
        return Err(Error::NonPositiveFisher(fisher));
    }
    if mu == 0 {
        return Err(Error::OutOfRange {
            name: "mu",
            value: 0.0,
            range: "positive integers",
        });
    }
    Ok(1.0 / (mu as f64 * fisher).sqrt())
}

/// `C(theta) / N`, defined only inside the cat regime.
pub fn qcrb_analytic_cat(spec: &CatSpec) -> Result<f64> {
    let n = spec.n_particles();
    if n < ANALYTIC_MIN_PARTICLES {
        return Err(Error::TooFewParticles {
            n,
            min: ANALYTIC_MIN_PARTICLES,
        });
    }
    let threshold = cat_threshold(spec.spin())?;
    if spec.theta() > threshold {
        return Err(Error::NotACat {
            theta: spec.theta(),
            threshold,
            n,
        });
    }
    Ok(c_coefficient(spec.theta())? / n as f64)
}

/// Noiseless outcome distribution of the interferometer and its exact
/// derivative with respect to the phase.
#[derive(Clone, Debug)]
pub struct ReadoutSignal {
    pub probs: ProbabilityDistribution,
    pub dprobs: Vec<f64>,
}

impl ReadoutSignal {
    /// Interferometer output for `input`, phase `phi` and twisting `tau`;
    /// takes the density-operator path when `dephasing` is non-zero.
    pub fn compute(
        input: &DickeVector,
        phi: f64,
        tau: f64,
        dephasing: &DephasingConfig,
    ) -> Result<Self> {
        check_range("tau", tau, "[0, inf)", tau >= 0.0)?;
        if dephasing.is_coherent() {
            Ok(pure_signal(input, phi, &ReadoutConfig::new(tau)?))
        } else {
            Ok(dephased_signal(input, phi, tau, dephasing.gamma_ratio()))
        }
    }

    pub fn with_noise(&self, kernel: &NoiseKernel) -> Self {
        Self {
            probs: ProbabilityDistribution::from_weights(self.probs.spin, kernel.apply(&self.probs.probs)),
            dprobs: kernel.apply(&self.dprobs),
        }
    }

    /// `(<Jz>, Var Jz, d<Jz>/dphi)`.
    pub fn moments(&self) -> (f64, f64, f64) {
        let spin = self.probs.spin;
        (
            self.probs.mean(),
            self.probs.variance(),
            first_moment(spin, &self.dprobs),
        )
    }
}

fn times_minus_i_jz(state: &DickeVector) -> DVector<C64> {
    let spin = state.spin();
    DVector::from_iterator(
        spin.dim(),
        state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| a * C64::new(0.0, -spin.m(i))),
    )
}

fn pure_signal(input: &DickeVector, phi: f64, cfg: &ReadoutConfig) -> ReadoutSignal {
    let spin = input.spin();
    let out = phase_accumulate(input, phi);
    let d_out = DickeVector::from_raw_unchecked(spin, times_minus_i_jz(&out));
    let fin = readout(&out, cfg);
    let d_fin = readout(&d_out, cfg);
    let probs = fin.populations();
    let dprobs = fin
        .amplitudes()
        .iter()
        .zip(d_fin.amplitudes().iter())
        .map(|(a, da)| 2.0 * (a.conj() * da).re)
        .collect();
    ReadoutSignal {
        probs: ProbabilityDistribution::from_weights(spin, probs),
        dprobs,
    }
}

fn dephased_signal(input: &DickeVector, phi: f64, tau: f64, gamma_ratio: f64) -> ReadoutSignal {
    let spin = input.spin();
    let pre = rot_x(spin, FRAC_PI_2, RotationSign::Positive);
    let post = rot_x(spin, FRAC_PI_2, RotationSign::Negative);
    let out = phase_accumulate(input, phi);
    let pulsed = pre.apply_to_amplitudes(out.amplitudes());
    let d_pulsed = pre.apply_to_amplitudes(&times_minus_i_jz(&out));
    let factors = channel_factors(spin, tau, gamma_ratio);
    // d rho0 / d phi = |d psi><psi| + h.c.; the channel is linear and its
    // factor matrix is Hermitian, so the derivative diagonal is twice the real
    // part of the propagated |d psi><psi| term.
    let rho = (&pulsed * pulsed.adjoint()).component_mul(&factors);
    let cross = (&d_pulsed * pulsed.adjoint()).component_mul(&factors);
    let probs = linalg::sandwich_diagonal(post.entries(), &rho)
        .iter()
        .map(|z| z.re)
        .collect();
    let dprobs = linalg::sandwich_diagonal(post.entries(), &cross)
        .iter()
        .map(|z| 2.0 * z.re)
        .collect();
    ReadoutSignal {
        probs: ProbabilityDistribution::from_weights(spin, probs),
        dprobs,
    }
}

/// Exact `dP_m/dphi` for the coherent interferometer.
pub fn derivative_distribution(input: &DickeVector, phi: f64, cfg: &ReadoutConfig) -> Vec<f64> {
    pure_signal(input, phi, cfg).dprobs
}

/// Classical Fisher information `sum_m (dP_m)^2 / P_m`.
pub fn cfi(p: &ProbabilityDistribution, dp: &[f64]) -> Result<f64> {
    if dp.len() != p.probs.len() {
        return Err(Error::DimensionMismatch {
            expected: p.probs.len(),
            got: dp.len(),
        });
    }
    // No single outcome can carry more than the Heisenberg ceiling N^2, so a
    // near-empty bin above it is floating-point dust, not information.
    let ceiling = (p.spin.n_particles() as f64).powi(2);
    let mut total = 0.0;
    for (i, (&prob, &d)) in p.probs.iter().zip(dp).enumerate() {
        if prob < CFI_PROB_FLOOR {
            if d.abs() < CFI_DERIVATIVE_FLOOR {
                continue;
            }
            let term = d * d / prob;
            if !(term <= ceiling) {
                return Err(Error::DivergentInformation {
                    m: p.spin.m(i),
                    derivative: d,
                });
            }
            total += term;
            continue;
        }
        total += d * d / prob;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrecisionMethod {
    ErrorPropagation,
    CfiBound,
    Qcrb,
}

impl PrecisionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PrecisionMethod::ErrorPropagation => "error_propagation",
            PrecisionMethod::CfiBound => "cfi",
            PrecisionMethod::Qcrb => "qcrb",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrecisionFlag {
    Ok,
    /// Vanishing signal slope (or zero information): `delta_phi` is infinite.
    DivergentSlope,
    /// A zero-probability outcome with non-zero derivative.
    DivergentInformation,
}

impl PrecisionFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PrecisionFlag::Ok => "ok",
            PrecisionFlag::DivergentSlope => "divergent_slope",
            PrecisionFlag::DivergentInformation => "divergent_information",
        }
    }
}

/// Phase standard deviation together with the point it was evaluated at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionResult {
    pub delta_phi: f64,
    pub method: PrecisionMethod,
    pub phi: f64,
    pub tau: f64,
    pub sigma: f64,
    pub gamma_ratio: f64,
    pub mu: u32,
    pub flag: PrecisionFlag,
}

impl PrecisionResult {
    pub fn is_divergent(&self) -> bool {
        self.flag != PrecisionFlag::Ok
    }
}

/// Evaluation point of the interferometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionQuery {
    pub phi: f64,
    pub tau: f64,
    pub noise: NoiseModel,
    pub dephasing: DephasingConfig,
    pub mu: u32,
}

impl PrecisionQuery {
    pub fn new(phi: f64, tau: f64) -> Self {
        Self {
            phi,
            tau,
            noise: NoiseModel::noiseless(),
            dephasing: DephasingConfig::none(),
            mu: 1,
        }
    }

    pub fn with_noise(self, noise: NoiseModel) -> Self {
        Self { noise, ..self }
    }

    pub fn with_dephasing(self, dephasing: DephasingConfig) -> Self {
        Self { dephasing, ..self }
    }

    pub fn with_mu(self, mu: u32) -> Self {
        Self { mu, ..self }
    }

    fn result(&self, delta_phi: f64, method: PrecisionMethod, flag: PrecisionFlag) -> PrecisionResult {
        PrecisionResult {
            delta_phi,
            method,
            phi: self.phi,
            tau: self.tau,
            sigma: self.noise.sigma(),
            gamma_ratio: self.dephasing.gamma_ratio(),
            mu: self.mu,
            flag,
        }
    }
}

fn check_mu(mu: u32) -> Result<()> {
    if mu == 0 {
        Err(Error::OutOfRange {
            name: "mu",
            value: 0.0,
            range: "positive integers",
        })
    } else {
        Ok(())
    }
}

fn error_propagation_from_signal(signal: &ReadoutSignal, q: &PrecisionQuery) -> PrecisionResult {
    let (_, var, slope) = signal.moments();
    if !(slope.abs() >= SLOPE_FLOOR) {
        return q.result(f64::INFINITY, PrecisionMethod::ErrorPropagation, PrecisionFlag::DivergentSlope);
    }
    let delta = var.sqrt() / slope.abs() / (q.mu as f64).sqrt();
    q.result(delta, PrecisionMethod::ErrorPropagation, PrecisionFlag::Ok)
}

/// `Delta Jz / |d<Jz>/dphi|` (divided by `sqrt(mu)`) at an arbitrary
/// evaluation point, with noise and dephasing.
pub fn precision(input: &DickeVector, q: &PrecisionQuery) -> Result<PrecisionResult> {
    check_mu(q.mu)?;
    let kernel = NoiseKernel::new(input.spin(), &q.noise);
    precision_with_kernel(input, q, &kernel)
}

/// [`precision`] with a prebuilt noise kernel, for sweeps that reuse it.
pub fn precision_with_kernel(
    input: &DickeVector,
    q: &PrecisionQuery,
    kernel: &NoiseKernel,
) -> Result<PrecisionResult> {
    check_mu(q.mu)?;
    let signal = ReadoutSignal::compute(input, q.phi, q.tau, &q.dephasing)?.with_noise(kernel);
    Ok(error_propagation_from_signal(&signal, q))
}

/// Error-propagation precision of the coherent interferometer, single trial.
pub fn error_propagation_precision(
    input: &DickeVector,
    phi: f64,
    cfg: &ReadoutConfig,
    noise: &NoiseModel,
) -> PrecisionResult {
    let q = PrecisionQuery::new(phi, cfg.tau()).with_noise(*noise);
    let kernel = NoiseKernel::new(input.spin(), noise);
    let signal = pure_signal(input, phi, cfg).with_noise(&kernel);
    error_propagation_from_signal(&signal, &q)
}

/// `1 / sqrt(mu F_C)` of the (noisy) outcome distribution.
pub fn cfi_precision(input: &DickeVector, q: &PrecisionQuery) -> Result<PrecisionResult> {
    check_mu(q.mu)?;
    let kernel = NoiseKernel::new(input.spin(), &q.noise);
    let signal = ReadoutSignal::compute(input, q.phi, q.tau, &q.dephasing)?.with_noise(&kernel);
    Ok(match cfi(&signal.probs, &signal.dprobs) {
        Ok(f) if f > 0.0 => q.result(
            1.0 / (q.mu as f64 * f).sqrt(),
            PrecisionMethod::CfiBound,
            PrecisionFlag::Ok,
        ),
        Ok(_) => q.result(f64::INFINITY, PrecisionMethod::CfiBound, PrecisionFlag::DivergentSlope),
        Err(_) => q.result(0.0, PrecisionMethod::CfiBound, PrecisionFlag::DivergentInformation),
    })
}

/// Evaluation points with a closed-form precision at `tau = pi/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedFormPoint {
    Zero,
    HalfPi,
}

/// Closed-form error-propagation precision at `tau = pi/2` for a mirror
/// symmetric input with even `J`:
/// `sqrt(S) / |sum 2 k^2 |a_k|^2 s_k|` with `S = sum k^2 |a_k|^2` and
/// `s_k = (-1)^(J-k)` at `phi = 0`, `s_k = 1` at `phi = pi/2`.
pub fn precision_closed_form(input: &DickeVector, point: ClosedFormPoint) -> Result<f64> {
    let spin = input.spin();
    if !spin.has_even_j() {
        return Err(Error::OddSpinLength(spin.n_particles()));
    }
    let asym = mirror_asymmetry(input);
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let j = (spin.n_particles() / 2) as i64;
    let mut spread = 0.0;
    let mut slope = 0.0;
    for (i, a) in input.amplitudes().iter().enumerate() {
        let k = i as i64 - j;
        let w = (k * k) as f64 * a.norm_sqr();
        spread += w;
        let sign = match point {
            ClosedFormPoint::HalfPi => 1.0,
            ClosedFormPoint::Zero if (j - k) % 2 == 0 => 1.0,
            ClosedFormPoint::Zero => -1.0,
        };
        slope += 2.0 * w * sign;
    }
    if slope.abs() < SLOPE_FLOOR {
        return Err(Error::DivergentSlope(slope));
    }
    Ok(spread.sqrt() / slope.abs())
}
