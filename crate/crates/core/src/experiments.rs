//! Sweep engine: τ optimization, scaling fits and the parameter scans behind
//! the readout, detection-noise and dephasing studies.
//!
//! Every scan evaluates independent grid points and returns them in grid
//! order, so output is identical for any worker count.

use std::f64::consts::FRAC_PI_2;

use crate::error::{check_range, Error, Result};
use crate::estimation::{
    precision_with_kernel, qcrb, qcrb_analytic_cat, qfi_jz, NoiseKernel, NoiseModel, PrecisionQuery,
    PrecisionResult,
};
use crate::evolution::DephasingConfig;
use crate::spin::{DickeVector, SpinLength};
use crate::states::{mbar, msscs, scs, CatSpec, MbarMode};

/// Particle numbers used for the scaling fits.
pub const DEFAULT_N_GRID: [usize; 8] = [40, 60, 100, 160, 250, 400, 630, 1000];
/// Coarse τ grid size of the optimizer (and the default scan grid).
pub const COARSE_TAU_POINTS: usize = 201;
/// Absolute τ tolerance of the golden-section refinement.
pub const TAU_TOLERANCE: f64 = 1e-6;

/// How grid points are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Data-parallel over grid points on the current rayon pool. Falls back
    /// to sequential evaluation when built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f` over `items`, returning results in input order.
pub fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Working point of the interferometer phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhiCenter {
    Zero,
    HalfPi,
}

impl PhiCenter {
    pub fn value(self) -> f64 {
        match self {
            PhiCenter::Zero => 0.0,
            PhiCenter::HalfPi => FRAC_PI_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhiCenter::Zero => "zero",
            PhiCenter::HalfPi => "half-pi",
        }
    }
}

/// Options shared by all scans.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub exec: Execution,
    pub mu: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            exec: Execution::default(),
            mu: 1,
        }
    }
}

impl ScanOptions {
    pub fn sequential() -> Self {
        Self {
            exec: Execution::Sequential,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if self.mu == 0 {
            return Err(Error::OutOfRange {
                name: "mu",
                value: 0.0,
                range: "positive integers",
            });
        }
        Ok(())
    }
}

/// Validated parameter grids for a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub thetas: Vec<f64>,
    pub n_values: Vec<usize>,
    pub tau_grid: Vec<f64>,
    pub phi_center: PhiCenter,
    pub sigmas: Vec<f64>,
    pub gamma_ratios: Vec<f64>,
    pub mu: u32,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        fn ascending(name: &str, v: &[f64]) -> Result<()> {
            if v.is_empty() {
                return Err(Error::InvalidGrid(format!("{name} grid is empty")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} grid has non-finite values")));
            }
            if v.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidGrid(format!("{name} grid is not ascending")));
            }
            Ok(())
        }
        ascending("theta", &self.thetas)?;
        ascending("tau", &self.tau_grid)?;
        ascending("sigma", &self.sigmas)?;
        ascending("gamma_ratio", &self.gamma_ratios)?;
        if self.n_values.is_empty() {
            return Err(Error::InvalidGrid("N grid is empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGrid("N grid is not ascending".into()));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n == 0 || n % 2 == 1) {
            return Err(Error::InvalidGrid(format!("N = {n} is not a positive even number")));
        }
        if let Some(t) = self.thetas.iter().find(|&&t| !(0.0..=FRAC_PI_2).contains(&t)) {
            return Err(Error::InvalidGrid(format!("theta = {t} outside [0, pi/2]")));
        }
        if let Some(t) = self.tau_grid.iter().find(|&&t| t < 0.0) {
            return Err(Error::InvalidGrid(format!("tau = {t} is negative")));
        }
        if let Some(s) = self.sigmas.iter().find(|&&s| s < 0.0) {
            return Err(Error::InvalidGrid(format!("sigma = {s} is negative")));
        }
        if let Some(g) = self.gamma_ratios.iter().find(|&&g| g < 0.0) {
            return Err(Error::InvalidGrid(format!("gamma_ratio = {g} is negative")));
        }
        if self.mu == 0 {
            return Err(Error::InvalidGrid("mu must be positive".into()));
        }
        Ok(())
    }
}

/// `tau_i = (pi/2) i / 201`, `i = 1..=201`.
pub fn default_tau_grid() -> Vec<f64> {
    (1..=COARSE_TAU_POINTS)
        .map(|i| FRAC_PI_2 * i as f64 / COARSE_TAU_POINTS as f64)
        .collect()
}

/// Input state of a scan: the mirror-symmetric cat for `theta < pi/2`, the
/// equatorial coherent state at `theta = pi/2`.
pub fn input_state(n: usize, theta: f64) -> Result<DickeVector> {
    let spin = SpinLength::new(n)?;
    if theta == FRAC_PI_2 {
        scs(spin, theta, 0.0)
    } else {
        msscs(spin, theta)
    }
}

/// Minimizer of a function on `[a, b]` by golden-section search.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        // `<=` keeps the left point on ties, biasing toward smaller arguments.
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauOptimum {
    pub tau: f64,
    pub delta_phi: f64,
    pub result: PrecisionResult,
}

fn finite_delta(r: &PrecisionResult) -> f64 {
    if r.is_divergent() {
        f64::INFINITY
    } else {
        r.delta_phi
    }
}

/// Optimal twisting strength at fixed `phi`: coarse scan over `(0, pi/2]`
/// then golden-section refinement inside the best grid cell.
pub fn optimize_tau(
    input: &DickeVector,
    phi: f64,
    noise: &NoiseModel,
    dephasing: &DephasingConfig,
) -> Result<TauOptimum> {
    optimize_tau_mu(input, phi, noise, dephasing, 1)
}

fn optimize_tau_mu(
    input: &DickeVector,
    phi: f64,
    noise: &NoiseModel,
    dephasing: &DephasingConfig,
    mu: u32,
) -> Result<TauOptimum> {
    let kernel = NoiseKernel::new(input.spin(), noise);
    let query = |tau: f64| {
        PrecisionQuery::new(phi, tau)
            .with_noise(*noise)
            .with_dephasing(*dephasing)
            .with_mu(mu)
    };
    let eval = |tau: f64| precision_with_kernel(input, &query(tau), &kernel);

    let grid = default_tau_grid();
    let mut best: Option<(usize, PrecisionResult)> = None;
    for (i, &tau) in grid.iter().enumerate() {
        let r = eval(tau)?;
        if r.is_divergent() {
            continue;
        }
        if best.map_or(true, |(_, b)| r.delta_phi < b.delta_phi) {
            best = Some((i, r));
        }
    }
    let (i, coarse) = best.ok_or(Error::AllDivergent)?;

    let lo = if i == 0 { 0.0 } else { grid[i - 1] };
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let mut failure = None;
    let (tau, _) = golden_section_min(
        |t| match eval(t) {
            Ok(r) => finite_delta(&r),
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        TAU_TOLERANCE,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let refined = eval(tau)?;
    let pick = if finite_delta(&refined) < coarse.delta_phi {
        refined
    } else {
        coarse
    };
    Ok(TauOptimum {
        tau: pick.tau,
        delta_phi: pick.delta_phi,
        result: pick,
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn loglog_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points"));
    }
    if points
        .iter()
        .any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::DegenerateFit("log-log fit needs positive finite values"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all x values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    pub result: PrecisionResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingScan {
    pub theta: f64,
    pub phi_center: PhiCenter,
    pub points: Vec<ScalingPoint>,
    pub fit: FitResult,
}

/// Minimum readout error versus `N`: τ optimized per `N` at phase 0, fixed
/// `tau = pi/2` at phase π/2.
pub fn scaling_scan(
    theta: f64,
    phi_center: PhiCenter,
    n_grid: &[usize],
    opts: &ScanOptions,
) -> Result<ScalingScan> {
    opts.check()?;
    let results = map_ordered(n_grid, opts.exec, |&n| -> Result<ScalingPoint> {
        let input = input_state(n, theta)?;
        let phi = phi_center.value();
        let result = match phi_center {
            PhiCenter::Zero => {
                optimize_tau_mu(&input, phi, &NoiseModel::noiseless(), &DephasingConfig::none(), opts.mu)?
                    .result
            }
            PhiCenter::HalfPi => {
                let kernel = NoiseKernel::new(input.spin(), &NoiseModel::noiseless());
                precision_with_kernel(&input, &PrecisionQuery::new(phi, FRAC_PI_2).with_mu(opts.mu), &kernel)?
            }
        };
        Ok(ScalingPoint { n, result })
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let fit = loglog_fit(
        &points
            .iter()
            .map(|p| (p.n as f64, p.result.delta_phi))
            .collect::<Vec<_>>(),
    )?;
    Ok(ScalingScan {
        theta,
        phi_center,
        points,
        fit,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QcrbPoint {
    pub n: usize,
    pub qfi: f64,
    pub delta_phi: f64,
    /// `C(theta)/N` where the cat approximation applies.
    pub analytic: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QcrbScan {
    pub theta: f64,
    pub points: Vec<QcrbPoint>,
    pub fit: FitResult,
}

/// Quantum Cramér-Rao bound from the exact QFI of each input state.
pub fn qcrb_scan(theta: f64, n_grid: &[usize], opts: &ScanOptions) -> Result<QcrbScan> {
    opts.check()?;
    let results = map_ordered(n_grid, opts.exec, |&n| -> Result<QcrbPoint> {
        let qfi = qfi_jz(&input_state(n, theta)?);
        let analytic = if theta < FRAC_PI_2 {
            qcrb_analytic_cat(&CatSpec::new(n, theta)?)
                .ok()
                .map(|d| d / (opts.mu as f64).sqrt())
        } else {
            None
        };
        Ok(QcrbPoint {
            n,
            qfi,
            delta_phi: qcrb(qfi, opts.mu)?,
            analytic,
        })
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let fit = loglog_fit(
        &points
            .iter()
            .map(|p| (p.n as f64, p.delta_phi))
            .collect::<Vec<_>>(),
    )?;
    Ok(QcrbScan { theta, points, fit })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauScanRow {
    pub theta: f64,
    pub n: usize,
    pub result: PrecisionResult,
}

/// `Delta phi` over a `(theta, gamma_ratio, tau)` grid, in that nesting order.
pub fn tau_scan(
    thetas: &[f64],
    n: usize,
    phi_center: PhiCenter,
    gamma_ratios: &[f64],
    tau_grid: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<TauScanRow>> {
    opts.check()?;
    for &tau in tau_grid {
        check_range("tau", tau, "[0, inf)", tau >= 0.0)?;
    }
    let dephasings = gamma_ratios
        .iter()
        .map(|&g| DephasingConfig::new(g))
        .collect::<Result<Vec<_>>>()?;
    let inputs = thetas
        .iter()
        .map(|&t| input_state(n, t))
        .collect::<Result<Vec<_>>>()?;
    let kernel = NoiseKernel::new(SpinLength::new(n)?, &NoiseModel::noiseless());

    let mut points = Vec::with_capacity(thetas.len() * dephasings.len() * tau_grid.len());
    for t in 0..thetas.len() {
        for d in &dephasings {
            for &tau in tau_grid {
                points.push((t, *d, tau));
            }
        }
    }
    let rows = map_ordered(&points, opts.exec, |&(t, dephasing, tau)| {
        let q = PrecisionQuery::new(phi_center.value(), tau)
            .with_dephasing(dephasing)
            .with_mu(opts.mu);
        precision_with_kernel(&inputs[t], &q, &kernel).map(|result| TauScanRow {
            theta: thetas[t],
            n,
            result,
        })
    });
    rows.into_iter().collect()
}

/// Row of a grid scan with the argmin over τ, per θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutOptimum {
    pub theta: f64,
    pub n: usize,
    pub gamma_ratio: f64,
    pub optimum: TauOptimum,
}

/// Optimized `(tau_opt, Delta phi_min)` for each `(theta, gamma_ratio)`.
pub fn readout_optima(
    thetas: &[f64],
    n: usize,
    phi_center: PhiCenter,
    gamma_ratios: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<ReadoutOptimum>> {
    opts.check()?;
    let mut points = Vec::new();
    for &theta in thetas {
        for &g in gamma_ratios {
            points.push((theta, DephasingConfig::new(g)?));
        }
    }
    let rows = map_ordered(&points, opts.exec, |&(theta, dephasing)| {
        let input = input_state(n, theta)?;
        let optimum = optimize_tau_mu(
            &input,
            phi_center.value(),
            &NoiseModel::noiseless(),
            &dephasing,
            opts.mu,
        )?;
        Ok(ReadoutOptimum {
            theta,
            n,
            gamma_ratio: dephasing.gamma_ratio(),
            optimum,
        })
    });
    rows.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseRow {
    pub theta: f64,
    pub n: usize,
    pub result: PrecisionResult,
    /// `sigma / Delta Jz` with `Delta Jz ~ Mbar`; `None` when `Mbar < 1`.
    pub sigma_normalized: Option<f64>,
    /// `Delta phi / Delta phi_Q` with `Delta phi_Q ~ 1 / (2 Mbar)`.
    pub delta_normalized: Option<f64>,
}

/// Precision under Gaussian detection noise. At phase 0 τ is re-optimized
/// for every σ; at phase π/2 it stays at `pi/2`.
pub fn noise_scan(
    thetas: &[f64],
    n: usize,
    phi_center: PhiCenter,
    sigmas: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<NoiseRow>> {
    opts.check()?;
    let spin = SpinLength::new(n)?;
    let mut points = Vec::new();
    for t in 0..thetas.len() {
        for &sigma in sigmas {
            points.push((t, NoiseModel::new(sigma)?));
        }
    }
    let inputs = thetas
        .iter()
        .map(|&t| input_state(n, t))
        .collect::<Result<Vec<_>>>()?;
    let rows = map_ordered(&points, opts.exec, |&(t, noise)| {
        let theta = thetas[t];
        let input = &inputs[t];
        let result = match phi_center {
            PhiCenter::Zero => {
                optimize_tau_mu(input, 0.0, &noise, &DephasingConfig::none(), opts.mu)?.result
            }
            PhiCenter::HalfPi => {
                let kernel = NoiseKernel::new(spin, &noise);
                let q = PrecisionQuery::new(FRAC_PI_2, FRAC_PI_2)
                    .with_noise(noise)
                    .with_mu(opts.mu);
                precision_with_kernel(input, &q, &kernel)?
            }
        };
        let m = mbar(spin, theta, MbarMode::Approx);
        let (sigma_normalized, delta_normalized) = if m >= 1.0 {
            let dq = 1.0 / (2.0 * m) / (opts.mu as f64).sqrt();
            (Some(noise.sigma() / m), Some(result.delta_phi / dq))
        } else {
            (None, None)
        };
        Ok(NoiseRow {
            theta,
            n,
            result,
            sigma_normalized,
            delta_normalized,
        })
    });
    rows.into_iter().collect()
}
