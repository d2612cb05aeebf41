//! Command-line front end for the `shinf` library.
//!
//! Data goes to stdout (or `--out`), diagnostics to stderr. Exit status is 0
//! on success, 2 when the system is not robustly stable and 1 otherwise.

pub mod file;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;

use clap::{Args, Parser, Subcommand};

use shinf::chain::chain_pseudo_abscissa;
use shinf::flows::{default_region, pseudo_spectral_abscissa};
use shinf::linalg::{CMat, CVec, C64};
use shinf::pipeline::{asymptotic_part, check_robust_stability, distance_table};
use shinf::sdep::{build_sdep, SdepKind};
use shinf::spectrum::{chain_abscissa, rightmost_roots, SpectrumRegion};
use shinf::transfer::{gain_sweep, uniform_grid};
use shinf::{nominal_strong_hinf_norm, robust_strong_hinf_norm, SolverConfig, UncertainDelaySystem};

pub use file::{FileError, SystemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "shinf", version, about = "Robust strong H-infinity norm of uncertain time-delay systems")]
pub struct Cli {
    /// Seed of all randomized restarts.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the multi-start searches (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Relative tolerance of the outer root finders.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Random restarts per multi-start search.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Cap on |Im s| for characteristic root searches.
    #[arg(long = "imag-cap", global = true)]
    pub imag_cap: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// System description (JSON).
    pub file: String,
    /// Ignore the uncertainty blocks.
    #[arg(long)]
    pub nominal: bool,
    /// Replace the delays, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delays: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robust strong H-infinity norm report.
    Norm {
        #[command(flatten)]
        system: SystemArgs,
    },
    /// Worst-case gain on a uniform frequency grid, as CSV.
    Gain {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long = "omega-max", default_value_t = 50.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 1001)]
        points: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Rightmost characteristic roots at a fixed uncertainty, as CSV.
    Spectrum {
        #[command(flatten)]
        system: SystemArgs,
        /// Block entries, row-major per block, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delta: Option<Vec<f64>>,
        /// Complex m x p matrix: row-major entries such as `0.1-0.2j`, or
        /// `EPS*[u1,u2]*[v1,v2]^H` for `EPS u v^H`.
        #[arg(long = "Delta", allow_hyphen_values = true)]
        big_delta: Option<String>,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Pseudo-spectral abscissae of the finite roots and of the root chains.
    Psa {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Emit `eps,alpha_fin,alpha_chain` on a uniform grid of [0, --eps-max].
        #[arg(long)]
        sweep: bool,
        #[arg(long = "eps-max")]
        eps_max: Option<f64>,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Distances to loss of well-posedness, chain crossing, finite crossing and instability.
    Distances {
        #[command(flatten)]
        system: SystemArgs,
    },
    /// Robust strong stability of the state equation.
    Stability {
        #[command(flatten)]
        system: SystemArgs,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{0}")]
    Solver(#[from] shinf::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(shinf::Error::Unstable { .. }) => EXIT_UNSTABLE,
            _ => EXIT_ERROR,
        }
    }
}

fn config(cli: &Cli) -> SolverConfig {
    let mut c = SolverConfig { seed: cli.seed, imag_cap: cli.imag_cap, ..SolverConfig::default() };
    if let Some(t) = cli.tol {
        c.outer_tol = t;
    }
    if let Some(r) = cli.restarts {
        c.restarts = r;
    }
    c
}

fn load(args: &SystemArgs) -> Result<UncertainDelaySystem, CliError> {
    let sys = SystemFile::read(&args.file)?.to_system(&args.file)?;
    let sys = match &args.delays {
        Some(d) => sys.with_delays(d.clone())?,
        None => sys,
    };
    Ok(if args.nominal { sys.nominal_system() } else { sys })
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

fn fmt_c(z: C64) -> String {
    format!("{}{}{}j", fmt_f(z.re), if z.im < 0.0 { "" } else { "+" }, fmt_f(z.im))
}

/// Parses `a`, `bj`, `a+bj` or `a-bj`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t = s.trim().replace(' ', "");
    let err = || format!("cannot parse complex number {s:?}");
    if let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
            .map(|(i, _)| i)
            .last();
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        Ok(C64::new(re.parse().map_err(|_| err())?, im.parse().map_err(|_| err())?))
    } else {
        Ok(C64::new(t.parse().map_err(|_| err())?, 0.0))
    }
}

fn parse_vector(s: &str) -> Result<CVec, String> {
    let body = s.trim().strip_prefix('[').and_then(|b| b.strip_suffix(']')).ok_or_else(|| format!("expected [..], got {s:?}"))?;
    let v: Vec<C64> = body.split(',').map(parse_complex).collect::<Result<_, _>>()?;
    Ok(CVec::from_vec(v))
}

/// Parses the `--Delta` argument into an `m x p` matrix.
pub fn parse_big_delta(s: &str, m: usize, p: usize) -> Result<CMat, String> {
    let t = s.trim();
    if let Some(rest) = t.strip_suffix("^H") {
        let parts: Vec<&str> = rest.splitn(3, '*').collect();
        if parts.len() != 3 {
            return Err(format!("expected EPS*[u]*[v]^H, got {s:?}"));
        }
        let eps: f64 = parts[0].trim().parse().map_err(|_| format!("bad eps in {s:?}"))?;
        let u = parse_vector(parts[1])?;
        let v = parse_vector(parts[2])?;
        if u.len() != m || v.len() != p {
            return Err(format!("u must have {m} and v {p} entries"));
        }
        return Ok(CMat::from_fn(m, p, |i, j| u[i] * v[j].conj() * eps));
    }
    let entries: Vec<C64> = t.split(',').map(parse_complex).collect::<Result<_, _>>()?;
    if entries.len() != m * p {
        return Err(format!("Delta needs {} entries, got {}", m * p, entries.len()));
    }
    Ok(CMat::from_row_slice(m, p, &entries))
}

fn emit(out: Option<&str>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Output { path: path.into(), source }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Output { path: "stdout".into(), source }),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = config(cli);
    match &cli.command {
        Command::Norm { system } => {
            let sys = load(system)?;
            let report = if system.nominal { nominal_strong_hinf_norm(&sys, &cfg)? } else { robust_strong_hinf_norm(&sys, &cfg)? };
            for w in &report.diagnostics.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let _ = writeln!(stderr, "{}", report.summary());
            emit(None, &report.to_text(), stdout)
        }
        Command::Gain { system, omega_max, points, out } => {
            let sys = load(system)?;
            let curve = gain_sweep(&sys, &uniform_grid(*omega_max, *points), &cfg);
            let poles = curve.gain.iter().filter(|g| g.is_nan()).count();
            if poles > 0 {
                let _ = writeln!(stderr, "warning: {poles} grid points hit a pole and are reported as nan");
            }
            if let Some((w, g)) = curve.peak() {
                let _ = writeln!(stderr, "peak gain {g} at omega = {w}");
            }
            emit(out.as_deref(), &curve.to_csv(), stdout)
        }
        Command::Spectrum { system, delta, big_delta, count, out } => {
            let sys = load(system)?;
            let point = match delta {
                Some(v) => sys.point_from_flat(v)?,
                None => sys.zero_point(),
            };
            let dmat = match big_delta {
                Some(s) => parse_big_delta(s, sys.m(), sys.p()).map_err(CliError::Usage)?,
                None => CMat::zeros(sys.m(), sys.p()),
            };
            let sd = build_sdep(&sys, &point, &dmat)?;
            let region = match cli.imag_cap {
                Some(c) => SpectrumRegion::new(c),
                None => SpectrumRegion::default_for(&sd),
            };
            let roots = rightmost_roots(&sd, &region, *count)?;
            let mut csv = String::from("re,im\n");
            for t in &roots {
                let _ = writeln!(csv, "{},{}", fmt_f(t.lambda.re), fmt_f(t.lambda.im));
            }
            let _ = writeln!(stderr, "chain_abscissa = {}", fmt_f(chain_abscissa(&sd)?));
            emit(out.as_deref(), &csv, stdout)
        }
        Command::Psa { system, eps, sweep, eps_max, points, out } => {
            let sys = load(system)?;
            let asym = asymptotic_part(&sys, &cfg)?.asymptotic_norm;
            let region = default_region(&sys, &cfg);
            if *sweep {
                let emax = eps_max.ok_or_else(|| CliError::Usage("--sweep needs --eps-max".into()))?;
                let mut csv = String::from("eps,alpha_fin,alpha_chain\n");
                for e in uniform_grid(emax, *points) {
                    let fin = pseudo_spectral_abscissa(&sys, e, asym, &region, &cfg).map_or(f64::NAN, |o| o.alpha);
                    let ch = chain_pseudo_abscissa(&sys, SdepKind::Full, e, &cfg).unwrap_or(f64::NAN);
                    let _ = writeln!(csv, "{},{},{}", fmt_f(e), fmt_f(fin), fmt_f(ch));
                }
                return emit(out.as_deref(), &csv, stdout);
            }
            let opt = pseudo_spectral_abscissa(&sys, *eps, asym, &region, &cfg).map_err(|e| match e {
                shinf::Error::Domain(_) => CliError::Usage(format!(
                    "eps = {eps} is outside [0, {}): finite roots determine the abscissa only below the reciprocal of the robust asymptotic norm {asym}",
                    fmt_f(if asym > 0.0 { 1.0 / asym } else { f64::INFINITY })
                )),
                other => other.into(),
            })?;
            let ch = chain_pseudo_abscissa(&sys, SdepKind::Full, *eps, &cfg)?;
            let mut text = String::new();
            let _ = writeln!(text, "eps = {}", fmt_f(*eps));
            let _ = writeln!(text, "alpha_fin = {}", fmt_f(opt.alpha));
            let _ = writeln!(text, "alpha_chain = {}", fmt_f(ch));
            let _ = writeln!(text, "root = {}", fmt_c(opt.state.triple.lambda));
            let flat: Vec<String> = opt.point.flatten().iter().map(|x| fmt_f(*x)).collect();
            let _ = writeln!(text, "delta = {}", flat.join(","));
            let dd: Vec<String> = opt.delta().iter().map(|z| fmt_c(*z)).collect();
            let _ = writeln!(text, "Delta = {}", dd.join(","));
            emit(out.as_deref(), &text, stdout)
        }
        Command::Distances { system } => {
            let sys = load(system)?;
            let t = distance_table(&sys, &cfg)?;
            let mut text = String::new();
            let _ = writeln!(text, "dist_nwp = {}", fmt_f(t.nwp));
            let _ = writeln!(text, "dist_chain = {}", fmt_f(t.chain));
            let _ = writeln!(text, "dist_fin = {}", fmt_f(t.fin));
            let _ = writeln!(text, "dist_ins = {}", fmt_f(t.ins));
            emit(None, &text, stdout)
        }
        Command::Stability { system } => {
            let sys = load(system)?;
            let r = check_robust_stability(&sys, &cfg)?;
            let mut text = String::new();
            let _ = writeln!(text, "stable = {}", r.stable);
            let _ = writeln!(text, "abscissa = {}", fmt_f(r.abscissa));
            if let Some(z) = r.root {
                let _ = writeln!(text, "root = {}", fmt_c(z));
            }
            let flat: Vec<String> = r.point.flatten().iter().map(|x| fmt_f(*x)).collect();
            let _ = writeln!(text, "delta = {}", flat.join(","));
            if let Some(c) = r.chain_radius {
                let _ = writeln!(text, "chain_radius = {}", fmt_f(c));
            }
            emit(None, &text, stdout)?;
            if r.stable {
                Ok(())
            } else {
                Err(shinf::Error::Unstable { abscissa: r.abscissa, root: r.root, delta: r.point.flatten() }.into())
            }
        }
    }
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
