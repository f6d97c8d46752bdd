//! Acceptance suite: one PASS/FAIL line per criterion, tolerances as pinned
//! in the project requirements. Exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use spincat::estimation::{
    cfi, derivative_distribution, error_propagation_precision, probabilities,
    qfi_jz, NoiseModel,
};
use spincat::evolution::{
    dephased_readout, dephasing_propagate, interferometer, readout_closed_form, DephasingConfig,
    ReadoutConfig,
};
use spincat::experiments::{
    input_state, noise_scan, optimize_tau, qcrb_scan, tau_scan, PhiCenter, ScanOptions,
    DEFAULT_N_GRID,
};
use spincat::oracle;
use spincat::spin::{rot_x, DensityOperator, RotationSign, SpinLength};
use spincat::states::{c_coefficient, mbar, MbarMode};

const CATS: [f64; 4] = [0.0, FRAC_PI_8, FRAC_PI_4, 7.0 * PI / 20.0];
const CAT_NAMES: [&str; 4] = ["0", "pi/8", "pi/4", "7pi/20"];

struct Outcome {
    passed: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        self.lines.push(format!("    [{}] {what}", if ok { "ok" } else { "FAIL" }));
    }
}

fn seq() -> ScanOptions {
    ScanOptions::sequential()
}

fn c1_heisenberg_scaling() -> Outcome {
    let mut o = Outcome::new();
    let thetas = [0.0, FRAC_PI_8, 3.0 * PI / 16.0, FRAC_PI_4, 7.0 * PI / 20.0];
    let names = ["0", "pi/8", "3pi/16", "pi/4", "7pi/20"];
    let start = Instant::now();
    let scans: Vec<_> = thetas
        .iter()
        .map(|&t| qcrb_scan(t, &DEFAULT_N_GRID, &seq()).unwrap())
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    for ((scan, &theta), name) in scans.iter().zip(&thetas).zip(names) {
        let slope = scan.fit.slope;
        o.check(
            (slope + 1.0).abs() <= 0.01,
            format!("theta={name}: slope {slope:.5} (target -1 +/- 0.01)"),
        );
        // ln C(0) = 0, so the 5% band is taken on the prefactor exp(intercept).
        let c = c_coefficient(theta).unwrap();
        let ratio = scan.fit.intercept.exp() / c;
        o.check(
            (ratio - 1.0).abs() <= 0.05,
            format!(
                "theta={name}: exp(intercept)/C = {ratio:.4} (intercept {:.4}, ln C {:.4}; target within 5%)",
                scan.fit.intercept,
                c.ln()
            ),
        );
    }
    o.check(elapsed < 1.0, format!("runtime {elapsed:.3} s (target < 1 s)"));
    o
}

fn c2_non_cat_references() -> Outcome {
    let mut o = Outcome::new();
    let scs = qcrb_scan(FRAC_PI_2, &DEFAULT_N_GRID, &seq()).unwrap();
    o.check(
        (scs.fit.slope + 0.5).abs() <= 0.01,
        format!("SCS theta=pi/2: slope {:.5} (target -0.5 +/- 0.01)", scs.fit.slope),
    );
    let wide = qcrb_scan(15.0 * PI / 32.0, &DEFAULT_N_GRID, &seq()).unwrap();
    o.check(
        (wide.fit.slope + 0.83).abs() <= 0.05,
        format!("MSSCS theta=15pi/32: slope {:.5} (target -0.83 +/- 0.05)", wide.fit.slope),
    );
    o
}

fn c3_bound_saturation() -> Outcome {
    let mut o = Outcome::new();
    let cfg = ReadoutConfig::new(FRAC_PI_2).unwrap();
    for (&theta, name) in CATS.iter().zip(CAT_NAMES) {
        let input = input_state(100, theta).unwrap();
        let r = error_propagation_precision(&input, FRAC_PI_2, &cfg, &NoiseModel::noiseless());
        let sat = r.delta_phi * qfi_jz(&input).sqrt();
        o.check(
            (sat - 1.0).abs() <= 1e-8,
            format!("theta={name}: delta_phi*sqrt(QFI) - 1 = {:.2e} (target 1e-8)", sat - 1.0),
        );
        let analytic = c_coefficient(theta).unwrap() / 100.0;
        let rel = (r.delta_phi / analytic - 1.0).abs();
        o.check(rel <= 0.03, format!("theta={name}: |delta_phi N/C - 1| = {rel:.4} (target 3%)"));
    }
    o
}

fn c4_cfi_equals_qfi() -> Outcome {
    let mut o = Outcome::new();
    let cfg = ReadoutConfig::new(FRAC_PI_2).unwrap();
    for n in [100usize, 200] {
        for (&theta, name) in CATS.iter().zip(CAT_NAMES) {
            let input = input_state(n, theta).unwrap();
            let p = probabilities(&interferometer(&input, FRAC_PI_2, &cfg));
            let dp = derivative_distribution(&input, FRAC_PI_2, &cfg);
            let q = qfi_jz(&input);
            let rel = (cfi(&p, &dp).unwrap() - q).abs() / q;
            o.check(rel <= 1e-10, format!("N={n} theta={name}: |CFI-QFI|/QFI = {rel:.2e}"));
        }
    }
    o
}

fn c5_closed_form_oracles() -> Outcome {
    let mut o = Outcome::new();
    let cfg = ReadoutConfig::new(FRAC_PI_2).unwrap();
    for n in [8usize, 12, 100] {
        let mut worst: f64 = 0.0;
        for &theta in &CATS {
            let input = input_state(n, theta).unwrap();
            for i in 0..32 {
                let phi = 2.0 * PI * i as f64 / 32.0;
                let dense = interferometer(&input, phi, &cfg);
                let closed = readout_closed_form(&input, phi).unwrap();
                for (a, b) in dense.amplitudes().iter().zip(closed.amplitudes().iter()) {
                    worst = worst.max((a - b).norm());
                }
            }
        }
        o.check(worst <= 1e-10, format!("N={n}: closed form vs dense max |da| = {worst:.2e}"));
    }
    let mut worst: f64 = 0.0;
    for &theta in &CATS {
        let input = input_state(8, theta).unwrap();
        let amps: Vec<_> = input.amplitudes().iter().copied().collect();
        for i in 0..32 {
            let phi = 2.0 * PI * i as f64 / 32.0;
            for tau in [0.4, FRAC_PI_2] {
                let dense = interferometer(&input, phi, &ReadoutConfig::new(tau).unwrap());
                let slow = oracle::readout_by_expm(&amps, phi, tau);
                for (a, b) in dense.amplitudes().iter().zip(&slow) {
                    worst = worst.max((a - b).norm());
                }
            }
        }
    }
    o.check(worst <= 1e-10, format!("N=8: dense vs scaling-and-squaring expm max |da| = {worst:.2e}"));
    o
}

fn c6_optimal_readout() -> Outcome {
    let mut o = Outcome::new();
    let none = NoiseModel::noiseless();
    let coherent = DephasingConfig::none();
    for (&theta, name) in CATS.iter().zip(CAT_NAMES) {
        let input = input_state(100, theta).unwrap();
        let opt = optimize_tau(&input, FRAC_PI_2, &none, &coherent).unwrap();
        o.check(
            (opt.tau - FRAC_PI_2).abs() <= 1e-3,
            format!("phi=pi/2 theta={name}: tau_opt {:.6} (target pi/2 +/- 1e-3)", opt.tau),
        );
    }
    let ghz = optimize_tau(&input_state(100, 0.0).unwrap(), 0.0, &none, &coherent).unwrap();
    o.check(
        (ghz.tau - FRAC_PI_2).abs() <= 1e-3,
        format!("phi=0 GHZ: tau_opt {:.6} (target pi/2 +/- 1e-3)", ghz.tau),
    );
    let cat = optimize_tau(&input_state(100, FRAC_PI_4).unwrap(), 0.0, &none, &coherent).unwrap();
    o.check(
        (cat.tau - FRAC_PI_4).abs() <= 2e-2,
        format!(
            "phi=0 theta=pi/4: tau_opt {:.6} (target pi/4 +/- 2e-2), delta_phi {:.5}",
            cat.tau, cat.delta_phi
        ),
    );
    o
}

fn c7_detection_noise() -> Outcome {
    let mut o = Outcome::new();
    let cfg = ReadoutConfig::new(FRAC_PI_2).unwrap();
    let spin = SpinLength::new(100).unwrap();
    for (&theta, name) in CATS.iter().zip(CAT_NAMES) {
        let input = input_state(100, theta).unwrap();
        let m = mbar(spin, theta, MbarMode::Approx);
        let clean = error_propagation_precision(&input, FRAC_PI_2, &cfg, &NoiseModel::noiseless());
        // Moment model: the noise adds sigma^2 to Var(Jz) of the final state
        // and leaves the slope untouched.
        let var = probabilities(&interferometer(&input, FRAC_PI_2, &cfg)).variance();
        let mut worst = (0.0, 0.0);
        let mut last = clean.delta_phi;
        let mut monotone = true;
        for i in 0..=40 {
            let sigma = m * i as f64 / 40.0;
            let noisy =
                error_propagation_precision(&input, FRAC_PI_2, &cfg, &NoiseModel::new(sigma).unwrap());
            let ratio = noisy.delta_phi / clean.delta_phi;
            let model = (1.0 + sigma * sigma / var).sqrt();
            let dev = (ratio / model - 1.0).abs();
            if dev > worst.0 {
                worst = (dev, sigma);
            }
            monotone &= noisy.delta_phi >= last;
            last = noisy.delta_phi;
        }
        o.check(
            worst.0 <= 0.10,
            format!(
                "theta={name}: worst |ratio/model - 1| = {:.3} at sigma = {:.2} = {:.2} Mbar (target 10% for sigma <= Mbar)",
                worst.0,
                worst.1,
                worst.1 / m
            ),
        );
        o.check(monotone, format!("theta={name}: delta_phi nondecreasing in sigma"));
    }

    // Collapse of the normalized curves for sigma/Delta Jz <= 0.25.
    let fractions: Vec<f64> = (0..=5).map(|i| 0.05 * i as f64).collect();
    let mut curves = Vec::new();
    for &theta in &CATS {
        let m = mbar(spin, theta, MbarMode::Approx);
        let sigmas: Vec<f64> = fractions.iter().map(|f| f * m).collect();
        let rows = noise_scan(&[theta], 100, PhiCenter::HalfPi, &sigmas, &seq()).unwrap();
        curves.push(rows.iter().map(|r| r.delta_normalized.unwrap()).collect::<Vec<_>>());
    }
    let mut spread: f64 = 0.0;
    for k in 0..fractions.len() {
        let vals: Vec<f64> = curves.iter().map(|c| c[k]).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(0.0, f64::max);
        spread = spread.max(hi / lo - 1.0);
    }
    o.check(
        spread <= 0.10,
        format!("normalized curves: max pairwise spread {spread:.4} for sigma/DJz <= 0.25 (target 10%)"),
    );

    // Knee of the moment model.
    for (&theta, name) in CATS.iter().zip(CAT_NAMES) {
        let m = mbar(spin, theta, MbarMode::Approx);
        let rows = noise_scan(&[theta], 100, PhiCenter::HalfPi, &[0.25 * m, m], &seq()).unwrap();
        let (a, b) = (rows[0].delta_normalized.unwrap(), rows[1].delta_normalized.unwrap());
        o.check(
            a <= 1.2 && b >= 1.3,
            format!("theta={name}: knee delta/deltaQ {a:.3} at 0.25 (<= 1.2), {b:.3} at 1.0 (>= 1.3)"),
        );
    }
    o
}

fn c8_dephasing() -> Outcome {
    let mut o = Outcome::new();
    let spin = SpinLength::new(8).unwrap();
    let input = input_state(8, 0.5).unwrap();
    let pulsed = rot_x(spin, FRAC_PI_2, RotationSign::Positive).apply(&input).unwrap();
    let rho0 = DensityOperator::from_pure(&pulsed);
    let amps: Vec<_> = pulsed.amplitudes().iter().copied().collect();
    let mut worst: f64 = 0.0;
    for (tau, g) in [(FRAC_PI_4, 2.0), (FRAC_PI_2, 6.0)] {
        let exact = dephasing_propagate(&rho0, tau, &DephasingConfig::new(g).unwrap()).unwrap();
        let rk = oracle::rk4_dephasing(&oracle::projector(&amps), tau, g, 1e-4);
        for i in 0..=8 {
            for j in 0..=8 {
                worst = worst.max((exact.entries()[(i, j)] - rk[(i, j)]).norm());
            }
        }
    }
    o.check(worst <= 1e-6, format!("N=8: exact channel vs RK4(1e-4) max entry diff {worst:.2e}"));

    let mut trace: f64 = 0.0;
    for g in [0.0, 2.0, 6.0] {
        for &theta in &CATS {
            let rho = dephased_readout(&input_state(100, theta).unwrap(), 0.1, 0.7, &DephasingConfig::new(g).unwrap())
                .unwrap();
            trace = trace.max((rho.trace().re - 1.0).abs().max(rho.trace().im.abs()));
        }
    }
    o.check(trace <= 1e-12, format!("N=100: |tr rho - 1| max {trace:.2e}"));

    let taus: Vec<f64> = (1..=20).map(|i| 0.08 * i as f64).collect();
    let pure = tau_scan(&CATS, 40, PhiCenter::Zero, &[0.0], &taus, &seq()).unwrap();
    let mut unitary: f64 = 0.0;
    for (&theta, chunk) in CATS.iter().zip(pure.chunks(taus.len())) {
        let input = input_state(40, theta).unwrap();
        for row in chunk {
            let rho = dephased_readout(&input, 0.0, row.result.tau, &DephasingConfig::none()).unwrap();
            let psi = interferometer(&input, 0.0, &ReadoutConfig::new(row.result.tau).unwrap());
            let reference = DensityOperator::from_pure(&psi);
            for (a, b) in rho.entries().iter().zip(reference.entries().iter()) {
                unitary = unitary.max((a - b).norm());
            }
        }
    }
    o.check(unitary <= 1e-10, format!("g=0 density path vs unitary pipeline max diff {unitary:.2e}"));

    let opt = optimize_tau(
        &input_state(100, FRAC_PI_4).unwrap(),
        0.0,
        &NoiseModel::noiseless(),
        &DephasingConfig::new(6.0).unwrap(),
    )
    .unwrap();
    let sql = 1.0 / 10.0;
    o.check(
        opt.delta_phi < sql,
        format!(
            "N=100 theta=pi/4 g=6 phi=0: optimized delta_phi {:.4} at tau {:.4} (target < 1/sqrt(N) = {sql})",
            opt.delta_phi, opt.tau
        ),
    );
    o
}

fn c9_performance() -> Outcome {
    let mut o = Outcome::new();
    let taus = spincat::experiments::default_tau_grid();
    let start = Instant::now();
    for center in [PhiCenter::Zero, PhiCenter::HalfPi] {
        tau_scan(&CATS, 100, center, &[0.0], &taus, &seq()).unwrap();
    }
    let t = start.elapsed().as_secs_f64();
    o.check(t < 10.0, format!("tau scan N=100, 4 states, 201 points, 2 centers, 1 thread: {t:.3} s (< 10 s)"));

    let start = Instant::now();
    let mut thetas = CATS.to_vec();
    thetas.extend([3.0 * PI / 16.0, 15.0 * PI / 32.0, FRAC_PI_2]);
    for theta in thetas {
        qcrb_scan(theta, &DEFAULT_N_GRID, &seq()).unwrap();
    }
    let t = start.elapsed().as_secs_f64();
    o.check(t < 1.0, format!("QCRB scan up to N=1000, 7 states: {t:.3} s (< 1 s)"));
    o
}

fn run_cli(args: &[&str], out: &Path, threads: usize) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_spincat"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .expect("spawn spincat");
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out).unwrap()
}

fn c10_determinism() -> Outcome {
    let mut o = Outcome::new();
    let dir = std::env::temp_dir().join(format!("spincat-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cases: [&[&str]; 5] = [
        &["ultimate-bound"],
        &["scaling", "--n-grid", "40,60,100"],
        &["readout-scan", "--tau-grid", "0.05:pi/2:41"],
        &["detection-noise", "--sigma-grid", "0:30:7"],
        &["dephasing", "--tau-grid", "0.05:pi/2:21", "--theta", "pi/4", "--theta", "7pi/20"],
    ];
    for args in cases {
        let reference = run_cli(args, &dir.join("a.csv"), 1);
        let same = [2usize, 4, 1]
            .iter()
            .enumerate()
            .all(|(k, &t)| run_cli(args, &dir.join(format!("b{k}.csv")), t) == reference);
        o.check(
            same && !reference.is_empty(),
            format!("{}: byte-identical CSV for --threads 1, 2, 4 and a rerun", args[0]),
        );
    }
    std::fs::remove_dir_all(&dir).ok();
    o
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("C1 Heisenberg scaling of the QCRB", c1_heisenberg_scaling),
        ("C2 non-cat reference slopes", c2_non_cat_references),
        ("C3 bound saturation at phi = pi/2", c3_bound_saturation),
        ("C4 CFI = QFI at phi = pi/2", c4_cfi_equals_qfi),
        ("C5 closed-form and expm oracles", c5_closed_form_oracles),
        ("C6 optimal readout", c6_optimal_readout),
        ("C7 detection-noise robustness", c7_detection_noise),
        ("C8 dephasing channel", c8_dephasing),
        ("C9 performance envelope", c9_performance),
        ("C10 determinism", c10_determinism),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let outcome = run();
        println!("{} {name}", if outcome.passed { "PASS" } else { "FAIL" });
        for line in &outcome.lines {
            println!("{line}");
        }
        if !outcome.passed {
            failed.push(name);
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
