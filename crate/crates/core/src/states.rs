//! Spin coherent states, mirror-symmetric superpositions (MSSCS), spin cat
//! states and their analytic descriptors.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{check_range, Error, Result};
use crate::spin::{DickeVector, SpinLength};

/// Cumulative table of `ln k!`.
#[derive(Clone, Debug)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.table[n] - self.table[k] - self.table[n - k]
    }

    /// `ln Gamma(x)` for integer or half-integer `x = twice_x / 2 > 0`.
    pub fn ln_gamma_half(&self, twice_x: usize) -> f64 {
        if twice_x % 2 == 0 {
            self.ln_factorial(twice_x / 2 - 1)
        } else {
            // Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
            let k = (twice_x - 1) / 2;
            self.ln_factorial(2 * k) - k as f64 * 4f64.ln() - self.ln_factorial(k) + 0.5 * PI.ln()
        }
    }
}

/// `x * ln(y)` with the convention `0 * ln 0 = 0`.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Real binomial coefficients `c_m(theta)`, `m = -J..J`, unit-normalized.
pub fn scs_coefficients(spin: SpinLength, theta: f64) -> Result<Vec<f64>> {
    check_range("theta", theta, "[0, pi]", (0.0..=PI).contains(&theta))?;
    let n = spin.n_particles();
    let lf = LogFactorials::new(n);
    let (s, c) = (theta / 2.0).sin_cos();
    let mut coeffs: Vec<f64> = (0..=n)
        .map(|up| {
            let down = n - up;
            let ln = 0.5 * lf.ln_binomial(n, up) + xlny(up as f64, c) + xlny(down as f64, s);
            ln.exp()
        })
        .collect();
    let norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|x| *x /= norm);
    Ok(coeffs)
}

/// Spin coherent state `|theta, azimuth>`,
/// `a_m = c_m(theta) exp(-i (J+m) azimuth)`.
pub fn scs(spin: SpinLength, theta: f64, azimuth: f64) -> Result<DickeVector> {
    let coeffs = scs_coefficients(spin, theta)?;
    let amps = DVector::from_iterator(
        spin.dim(),
        coeffs
            .iter()
            .enumerate()
            .map(|(up, &c)| C64::from_polar(c, -(up as f64) * azimuth)),
    );
    DickeVector::normalized(spin, amps)
}

fn mirrored(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    (0..=n).map(|i| coeffs[i] + coeffs[n - i]).collect()
}

fn check_msscs_theta(theta: f64) -> Result<()> {
    check_range("theta", theta, "[0, pi/2)", (0.0..FRAC_PI_2).contains(&theta))
}

/// Superposition `N_C (|theta, 0> + |pi - theta, 0>)`, exactly normalized.
/// The amplitudes satisfy `a_m == a_-m` bit for bit.
pub fn msscs(spin: SpinLength, theta: f64) -> Result<DickeVector> {
    msscs_with_azimuth(spin, theta, 0.0)
}

/// MSSCS whose two branches share the azimuth `azimuth`.
pub fn msscs_with_azimuth(spin: SpinLength, theta: f64, azimuth: f64) -> Result<DickeVector> {
    check_msscs_theta(theta)?;
    let sum = mirrored(&scs_coefficients(spin, theta)?);
    let amps = DVector::from_iterator(
        spin.dim(),
        sum.iter()
            .enumerate()
            .map(|(up, &a)| C64::from_polar(a, -(up as f64) * azimuth)),
    );
    DickeVector::normalized(spin, amps)
}

/// The factor `N_C` that normalizes `|theta> + |pi - theta>`.
pub fn msscs_normalization(spin: SpinLength, theta: f64) -> Result<f64> {
    check_msscs_theta(theta)?;
    let sum = mirrored(&scs_coefficients(spin, theta)?);
    Ok(1.0 / sum.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Largest polar angle for which the MSSCS is a cat state:
/// `arcsin(2 [((J-1)!)^2 / (2 (2J)!)]^(1/(2J)))`.
pub fn cat_threshold(spin: SpinLength) -> Result<f64> {
    let n = spin.n_particles();
    if n < 4 {
        return Err(Error::ThresholdUndefined(n));
    }
    let lf = LogFactorials::new(n);
    let ln_inner = 2.0 * lf.ln_gamma_half(n) - 2f64.ln() - lf.ln_factorial(n);
    let x = 2.0 * (ln_inner / n as f64).exp();
    Ok(x.min(1.0).asin())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MbarMode {
    /// Root of the coefficient-difference condition, including the `+1/(1+t^2)` term.
    Exact,
    /// Large-`N` form `(N/2) cos(theta)`.
    Approx,
}

/// Peak location `M` of the upper lobe of `c_m(theta)`, as a continuous value.
pub fn mbar(spin: SpinLength, theta: f64, mode: MbarMode) -> f64 {
    let t2 = (theta / 2.0).tan().powi(2);
    let lobe = (1.0 - t2) / (1.0 + t2);
    match mode {
        MbarMode::Exact => spin.j() * lobe + 1.0 / (1.0 + t2),
        MbarMode::Approx => spin.j() * lobe,
    }
}

/// [`mbar`] rounded to an integer, ties to even.
pub fn mbar_rounded(spin: SpinLength, theta: f64, mode: MbarMode) -> f64 {
    mbar(spin, theta, mode).round_ties_even()
}

/// Prefactor `C(theta) = 1 + 2t^2/(1 - t^2)` of the cat-state bound `C/N`.
pub fn c_coefficient(theta: f64) -> Result<f64> {
    check_msscs_theta(theta)?;
    let t2 = (theta / 2.0).tan().powi(2);
    Ok(1.0 + 2.0 * t2 / (1.0 - t2))
}

/// An input MSSCS / cat state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatSpec {
    n_particles: usize,
    theta: f64,
    azimuth: f64,
}

impl CatSpec {
    pub fn new(n_particles: usize, theta: f64) -> Result<Self> {
        SpinLength::new(n_particles)?;
        check_msscs_theta(theta)?;
        Ok(Self {
            n_particles,
            theta,
            azimuth: 0.0,
        })
    }

    pub fn with_azimuth(mut self, azimuth: f64) -> Self {
        self.azimuth = azimuth;
        self
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn spin(&self) -> SpinLength {
        SpinLength::new(self.n_particles).expect("validated in constructor")
    }

    pub fn state(&self) -> Result<DickeVector> {
        msscs_with_azimuth(self.spin(), self.theta, self.azimuth)
    }

    /// Whether `theta` is at or below the cat threshold for this `N`.
    pub fn is_cat(&self) -> Result<bool> {
        Ok(self.theta <= cat_threshold(self.spin())?)
    }
}
