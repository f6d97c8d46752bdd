//! Command-line flags, the optional TOML config, and their merge into a
//! validated run configuration.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use spincat::experiments::{default_tau_grid, PhiCenter, DEFAULT_N_GRID};

#[derive(Parser, Debug)]
#[command(name = "spincat", version, about = "Spin-cat phase estimation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Quantum Cramér-Rao bound versus N, with log-log fits.
    UltimateBound(Flags),
    /// Precision versus twisting strength, plus the optimum per state.
    ReadoutScan(Flags),
    /// Optimized precision versus N at both phase working points, with fits.
    Scaling(Flags),
    /// Optimized precision under Gaussian detection noise.
    DetectionNoise(Flags),
    /// Precision versus twisting strength under collective dephasing.
    Dephasing(Flags),
    /// Oracle-equivalence and invariant checks.
    Verify(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::UltimateBound(_) => "ultimate-bound",
            Command::ReadoutScan(_) => "readout-scan",
            Command::Scaling(_) => "scaling",
            Command::DetectionNoise(_) => "detection-noise",
            Command::Dephasing(_) => "dephasing",
            Command::Verify(_) => "verify",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::UltimateBound(f)
            | Command::ReadoutScan(f)
            | Command::Scaling(f)
            | Command::DetectionNoise(f)
            | Command::Dephasing(f)
            | Command::Verify(f) => f,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Center {
    Zero,
    HalfPi,
}

impl From<Center> for PhiCenter {
    fn from(c: Center) -> Self {
        match c {
            Center::Zero => PhiCenter::Zero,
            Center::HalfPi => PhiCenter::HalfPi,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Default, PartialEq)]
pub struct Flags {
    /// Polar angle; repeatable. Radians or fractions of pi such as `7pi/20`.
    #[arg(long = "theta", allow_hyphen_values = true)]
    pub theta: Vec<String>,
    /// Particle number for fixed-N experiments (even).
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated particle numbers for scaling experiments.
    #[arg(long = "n-grid", value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// Phase working point; the subcommand default is used when omitted.
    #[arg(long = "phi-center", value_enum)]
    pub phi_center: Option<Center>,
    /// Twisting grid `start:stop:points`, inclusive.
    #[arg(long = "tau-grid", allow_hyphen_values = true)]
    pub tau_grid: Option<String>,
    /// Detection-noise grid: comma list or `start:stop:points`.
    #[arg(long = "sigma-grid", allow_hyphen_values = true)]
    pub sigma_grid: Option<String>,
    /// Dephasing ratio gamma/chi; comma list, repeatable.
    #[arg(long = "gamma-ratio", value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma_ratio: Vec<f64>,
    /// Number of independent trials.
    #[arg(long)]
    pub mu: Option<u32>,
    /// Output data file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write an SVG line plot to this path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// TOML file with the flag names as keys (dashes or underscores); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Clone, PartialEq)]
#[serde(untagged)]
enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Number(x) => format!("{x}"),
            Scalar::Text(s) => s.clone(),
        }
    }
}

#[derive(Deserialize, Debug, Clone, PartialEq)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize, Debug, Default, Clone, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    #[serde(alias = "theta")]
    theta: Option<OneOrMany<Scalar>>,
    n: Option<usize>,
    #[serde(alias = "n_grid")]
    n_grid: Option<Vec<usize>>,
    #[serde(alias = "phi_center")]
    phi_center: Option<Center>,
    #[serde(alias = "tau_grid")]
    tau_grid: Option<String>,
    #[serde(alias = "sigma_grid")]
    sigma_grid: Option<OneOrMany<Scalar>>,
    #[serde(alias = "gamma_ratio")]
    gamma_ratio: Option<OneOrMany<f64>>,
    mu: Option<u32>,
    out: Option<PathBuf>,
    format: Option<Format>,
    svg: Option<PathBuf>,
    threads: Option<usize>,
}

/// Effective, validated parameters of one run; echoed into the manifest.
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub theta: Vec<f64>,
    pub theta_labels: Vec<String>,
    pub n: usize,
    pub n_grid: Vec<usize>,
    pub phi_centers: Vec<Center>,
    pub tau_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub gamma_ratio: Vec<f64>,
    pub mu: u32,
    pub out: PathBuf,
    pub format: Format,
    pub svg: Option<PathBuf>,
    pub threads: Option<usize>,
    pub config: Option<PathBuf>,
}

/// Parses `0.3`, `pi`, `pi/2`, `7pi/20`, `3*pi/16`, `-pi/8` or `1/3`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.to_ascii_lowercase();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), Some(b.to_string())),
        None => (s.clone(), None),
    };
    let numerator = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| anyhow!("invalid angle `{text}`"))?,
        };
        c * PI
    } else {
        num.parse::<f64>().map_err(|_| anyhow!("invalid angle `{text}`"))?
    };
    let value = match den {
        Some(d) => {
            let d = d.parse::<f64>().map_err(|_| anyhow!("invalid angle `{text}`"))?;
            if d == 0.0 {
                bail!("invalid angle `{text}`: zero denominator");
            }
            numerator / d
        }
        None => numerator,
    };
    if !value.is_finite() {
        bail!("invalid angle `{text}`");
    }
    Ok(value)
}

/// `start:stop:points`, inclusive, evenly spaced.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("range `{text}` must look like start:stop:points");
    }
    let start = parse_angle(parts[0])?;
    let stop = parse_angle(parts[1])?;
    let points: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| anyhow!("range `{text}`: point count must be a positive integer"))?;
    match points {
        0 => bail!("range `{text}`: point count must be positive"),
        1 => Ok(vec![start]),
        _ => Ok((0..points)
            .map(|i| {
                if i + 1 == points {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (points - 1) as f64
                }
            })
            .collect()),
    }
}

/// Comma list of numbers or a `start:stop:points` range.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    if text.contains(':') {
        parse_range(text)
    } else {
        text.split(',').map(parse_angle).collect()
    }
}

fn default_thetas(command: &Command) -> Vec<&'static str> {
    match command {
        Command::UltimateBound(_) => vec!["0", "pi/8", "3pi/16", "pi/4", "7pi/20", "15pi/32", "pi/2"],
        _ => vec!["0", "pi/8", "pi/4", "7pi/20"],
    }
}

fn default_centers(command: &Command) -> Vec<Center> {
    match command {
        Command::Dephasing(_) => vec![Center::Zero],
        _ => vec![Center::Zero, Center::HalfPi],
    }
}

fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn is_even_positive(n: usize) -> bool {
    n > 0 && n % 2 == 0
}

/// Merges flags over the config file over subcommand defaults, then
/// validates the documented ranges.
pub fn resolve(command: &Command) -> Result<RunConfig> {
    let flags = command.flags();
    let file = match &flags.config {
        Some(p) => load_config(p)?,
        None => FileConfig::default(),
    };

    let theta_labels: Vec<String> = if !flags.theta.is_empty() {
        flags.theta.clone()
    } else if let Some(t) = file.theta {
        t.into_vec().iter().map(Scalar::text).collect()
    } else {
        default_thetas(command).into_iter().map(String::from).collect()
    };
    let theta = theta_labels
        .iter()
        .map(|t| parse_angle(t))
        .collect::<Result<Vec<_>>>()?;

    let n = flags.n.or(file.n).unwrap_or(100);
    let n_grid = flags
        .n_grid
        .clone()
        .or(file.n_grid)
        .unwrap_or_else(|| DEFAULT_N_GRID.to_vec());
    let phi_centers = flags
        .phi_center
        .or(file.phi_center)
        .map(|c| vec![c])
        .unwrap_or_else(|| default_centers(command));
    let tau_grid = match flags.tau_grid.clone().or(file.tau_grid) {
        Some(t) => parse_range(&t)?,
        None => default_tau_grid(),
    };
    let sigma_grid = match (&flags.sigma_grid, file.sigma_grid) {
        (Some(s), _) => parse_list(s)?,
        (None, Some(v)) => match v {
            OneOrMany::One(Scalar::Text(s)) => parse_list(&s)?,
            other => other
                .into_vec()
                .iter()
                .map(|s| parse_angle(&s.text()))
                .collect::<Result<Vec<_>>>()?,
        },
        (None, None) => {
            let half = n as f64 / 2.0;
            (0..=25).map(|i| half * i as f64 / 25.0).collect()
        }
    };
    let gamma_ratio = if !flags.gamma_ratio.is_empty() {
        flags.gamma_ratio.clone()
    } else if let Some(g) = file.gamma_ratio {
        g.into_vec()
    } else if matches!(command, Command::Dephasing(_)) {
        vec![0.0, 2.0, 6.0]
    } else {
        vec![0.0]
    };
    let mu = flags.mu.or(file.mu).unwrap_or(1);
    let format = flags.format.or(file.format).unwrap_or(Format::Csv);
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let out = flags
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("{}.{ext}", command.name())));
    let svg = flags.svg.clone().or(file.svg);
    let threads = flags.threads.or(file.threads);

    if let Some(t) = theta.iter().find(|&&t| !(0.0..=FRAC_PI_2).contains(&t)) {
        bail!("theta = {t} outside [0, pi/2]");
    }
    if !is_even_positive(n) {
        bail!("N = {n} must be a positive even number");
    }
    if n_grid.is_empty() {
        bail!("N grid is empty");
    }
    if let Some(bad) = n_grid.iter().find(|&&m| !is_even_positive(m)) {
        bail!("N = {bad} in the N grid must be a positive even number");
    }
    if let Some(t) = tau_grid.iter().find(|&&t| !(t >= 0.0)) {
        bail!("tau = {t} must be non-negative");
    }
    if sigma_grid.is_empty() {
        bail!("sigma grid is empty");
    }
    if let Some(s) = sigma_grid.iter().find(|&&s| !(s >= 0.0)) {
        bail!("sigma = {s} must be non-negative");
    }
    if let Some(g) = gamma_ratio.iter().find(|&&g| !(g >= 0.0 && g.is_finite())) {
        bail!("gamma ratio = {g} must be non-negative");
    }
    if mu == 0 {
        bail!("mu must be a positive integer");
    }
    if threads == Some(0) {
        bail!("threads must be positive");
    }

    Ok(RunConfig {
        theta,
        theta_labels,
        n,
        n_grid,
        phi_centers,
        tau_grid,
        sigma_grid,
        gamma_ratio,
        mu,
        out,
        format,
        svg,
        threads,
        config: flags.config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    #[test]
    fn angles() {
        assert_eq!(parse_angle("7pi/20").unwrap(), 7.0 * PI / 20.0);
        assert_eq!(parse_angle("pi/2").unwrap(), FRAC_PI_2);
        assert_eq!(parse_angle("pi/4").unwrap(), FRAC_PI_4);
        assert_eq!(parse_angle("pi/8").unwrap(), FRAC_PI_8);
        assert_eq!(parse_angle("3*pi/16").unwrap(), 3.0 * PI / 16.0);
        assert_eq!(parse_angle("0").unwrap(), 0.0);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("-pi/8").unwrap(), -FRAC_PI_8);
        assert_eq!(parse_angle("1/4").unwrap(), 0.25);
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("").is_err());
    }

    #[test]
    fn ranges() {
        let r = parse_range("0:pi/2:201").unwrap();
        assert_eq!(r.len(), 201);
        assert_eq!(r[0], 0.0);
        assert_eq!(r[200], FRAC_PI_2);
        assert_eq!(parse_range("0.5:1:1").unwrap(), vec![0.5]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert_eq!(parse_list("0,1,2.5").unwrap(), vec![0.0, 1.0, 2.5]);
    }

    fn cmd(args: &[&str]) -> Command {
        let mut full = vec!["spincat"];
        full.extend_from_slice(args);
        Cli::try_parse_from(full).unwrap().command
    }

    #[test]
    fn defaults_and_validation() {
        let cfg = resolve(&cmd(&["ultimate-bound"])).unwrap();
        assert_eq!(cfg.theta.len(), 7);
        assert_eq!(cfg.n_grid, DEFAULT_N_GRID.to_vec());
        assert_eq!(cfg.out, PathBuf::from("ultimate-bound.csv"));
        let cfg = resolve(&cmd(&["dephasing"])).unwrap();
        assert_eq!(cfg.gamma_ratio, vec![0.0, 2.0, 6.0]);
        assert_eq!(cfg.phi_centers, vec![Center::Zero]);

        assert!(resolve(&cmd(&["scaling", "--n-grid", "40,41"])).is_err());
        assert!(resolve(&cmd(&["readout-scan", "--n", "99"])).is_err());
        assert!(resolve(&cmd(&["readout-scan", "--theta", "2"])).is_err());
        assert!(resolve(&cmd(&["detection-noise", "--sigma-grid", "-1,2"])).is_err());
        assert!(resolve(&cmd(&["dephasing", "--gamma-ratio", "-2"])).is_err());
        assert!(resolve(&cmd(&["scaling", "--mu", "0"])).is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = std::env::temp_dir().join(format!("spincat-args-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(
            &path,
            "theta = [\"pi/8\", 0.5]\nn = 40\nn-grid = [40, 60]\nsigma_grid = \"0:4:5\"\nmu = 3\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let cfg = resolve(&cmd(&["scaling", "--config", p, "--n", "60"])).unwrap();
        assert_eq!(cfg.theta, vec![FRAC_PI_8, 0.5]);
        assert_eq!(cfg.n, 60);
        assert_eq!(cfg.n_grid, vec![40, 60]);
        assert_eq!(cfg.sigma_grid, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(cfg.mu, 3);

        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(resolve(&cmd(&["scaling", "--config", p])).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
