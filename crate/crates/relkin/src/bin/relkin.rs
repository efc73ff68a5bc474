//! Thin batch driver over the verification suites: parses flags, loads
//! config files, dispatches, writes reports, and maps failures to exit codes
//! (0 pass, 1 assertion failures, 2 configuration errors).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relkin::config::RunConfig;
use relkin::minkowski::Vec3;
use relkin::report::{self, Report};
use relkin::suites;
use relkin::FourMomentum;

#[derive(Parser)]
#[command(name = "relkin", about = "relativistic collision-operator verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// kernel/quadrature config file (flat key = value)
    #[arg(long)]
    kernel: Option<PathBuf>,
    /// extra quadrature config file, applied after --kernel
    #[arg(long)]
    quad: Option<PathBuf>,
    /// RNG seed override
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads (default: logical cores)
    #[arg(long)]
    threads: Option<usize>,
    /// output path; derived tabular data lands next to it
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// angular cutoff override
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// conservation, frame conditions, Jacobians and pointwise inequalities
    Geometry {
        #[command(flatten)]
        common: Common,
        /// number of random tuples
        #[arg(long, default_value_t = 1_000_000.0)]
        n: f64,
    },
    /// scattering-sphere vs dual vs Carleman forms, reduction gap
    Representations {
        #[command(flatten)]
        common: Common,
    },
    /// equilibrium mass, moment bands, collision invariants, entropy sign
    Conservation {
        #[command(flatten)]
        common: Common,
    },
    /// dyadic piece scaling and the reduced kernel constant
    Dyadic {
        #[command(flatten)]
        common: Common,
    },
    /// family ratios: Dirichlet form, norm part, fractional norm
    Coercivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "default10")]
        family: String,
    },
    /// lattice frequency-decomposition inequality ratios
    Norms {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 1)]
        jmax: u32,
    },
    /// scan |dp'/dp| over a momentum grid
    JacobianScan {
        #[command(flatten)]
        common: Common,
        /// fixed partner momentum "x,y,z"
        #[arg(long, default_value = "0.5,0,-0.5")]
        q: String,
        /// scattering direction "x,y,z" (normalized)
        #[arg(long, default_value = "0,0.6,0.8")]
        omega: String,
        /// grid as "min:max:step"
        #[arg(long, default_value = "-5:5:0.5")]
        grid: String,
        /// evaluate in extended precision
        #[arg(long)]
        extended: bool,
    },
    /// truncated split of the collision-frequency integral
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// evaluation momentum "x,y,z"
        #[arg(long, default_value = "0,0,0")]
        p: String,
        /// truncation radii, comma separated
        #[arg(long, default_value = "5,10,20,40", value_name = "R")]
        r: String,
    },
    /// aggregate previously written JSON reports
    Report {
        /// report files; with --all, every *.json in the current directory
        #[arg(long, num_args = 0..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_vec3(text: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("cannot parse `{text}` as a 3-vector: {e}"))?;
    if parts.len() != 3 {
        return Err(format!("expected 3 components in `{text}`"));
    }
    Ok(Vec3::new(parts[0], parts[1], parts[2]))
}

fn load_config(common: &Common) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    for path in [&common.kernel, &common.quad].into_iter().flatten() {
        let loaded = RunConfig::load(path).map_err(|e| e.to_string())?;
        cfg = loaded;
    }
    if let Some(seed) = common.seed {
        cfg.quad.seed = seed;
    }
    if let Some(eps) = common.eps {
        cfg.kernel.epsilon = eps;
        cfg.kernel.validate().map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

fn emit(report: &Report, common: &Common, csv: Option<(&str, Vec<String>)>) -> ExitCode {
    if let Some(out) = &common.out {
        match common.format {
            Format::Json => {
                if let Err(e) = report.write_json(out) {
                    eprintln!("cannot write {}: {e}", out.display());
                    return ExitCode::from(2);
                }
            }
            Format::Csv => {
                if let Some((header, rows)) = &csv {
                    if let Err(e) = report::write_csv(out, header, rows) {
                        eprintln!("cannot write {}: {e}", out.display());
                        return ExitCode::from(2);
                    }
                } else if let Err(e) = report.write_json(out) {
                    eprintln!("cannot write {}: {e}", out.display());
                    return ExitCode::from(2);
                }
            }
        }
        // tabular side channel when both are requested
        if matches!(common.format, Format::Json) {
            if let Some((header, rows)) = &csv {
                let side = out.with_extension("csv");
                let _ = report::write_csv(&side, header, rows);
            }
        }
    } else {
        println!("{}", report.to_json());
    }
    for check in &report.checks {
        println!(
            "[{}] {}: {}",
            if check.passed { "pass" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn configure_threads(common: &Common) {
    if let Some(threads) = common.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Geometry { common, n } => {
            configure_threads(&common);
            let cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = suites::geometry_suite(&cfg, n as u64, cfg.quad.seed);
            emit(&report, &common, None)
        }
        Command::Representations { common } => {
            configure_threads(&common);
            let cfg = match load_config(&common) {
                Ok(mut c) => {
                    if common.eps.is_none() && c.kernel.epsilon == 0.0 {
                        c.kernel.epsilon = 0.2;
                    }
                    c
                }
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = suites::representations_suite(&cfg);
            emit(&report, &common, None)
        }
        Command::Conservation { common } => {
            configure_threads(&common);
            let cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = suites::conservation_suite(&cfg);
            emit(&report, &common, None)
        }
        Command::Dyadic { common } => {
            configure_threads(&common);
            let cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = suites::dyadic_suite(&cfg);
            emit(&report, &common, None)
        }
        Command::Coercivity { common, family } => {
            configure_threads(&common);
            if family != "default10" {
                eprintln!("config error: unknown family `{family}` (available: default10)");
                return ExitCode::from(2);
            }
            let cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let (report, rows) = suites::coercivity_suite(&cfg);
            emit(
                &report,
                &common,
                Some(("fId,dirichlet,nForm,fractionalSq,ratio", rows)),
            )
        }
        Command::Norms {
            common,
            rho,
            gamma,
            jmax,
        } => {
            configure_threads(&common);
            let cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let (report, rows) = suites::norms_suite(&cfg, rho, gamma, jmax);
            emit(
                &report,
                &common,
                Some(("fId,jMax,lhs,lhsDeriv,rhsSq,ratio,ratioDeriv", rows)),
            )
        }
        Command::JacobianScan {
            common,
            q,
            omega,
            grid,
            extended,
        } => {
            configure_threads(&common);
            let cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let parse = || -> Result<(FourMomentum, Vec3, [f64; 3]), String> {
                let qv = parse_vec3(&q)?;
                let w = parse_vec3(&omega)?.normalize();
                let parts: Vec<f64> = grid
                    .split(':')
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format!("bad grid `{grid}`: {e}"))?;
                if parts.len() != 3 || parts[2] <= 0.0 || parts[1] <= parts[0] {
                    return Err(format!("bad grid `{grid}`, expected min:max:step"));
                }
                Ok((
                    relkin::minkowski::mass_shell_lift(qv).map_err(|e| e.to_string())?,
                    w,
                    [parts[0], parts[1], parts[2]],
                ))
            };
            let (qm, w, g) = match parse() {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let (report, rows) = suites::jacobian_scan_suite(&cfg, &qm, w, g[0], g[1], g[2], extended);
            emit(&report, &common, Some(("p1,p2,p3,det", rows)))
        }
        Command::Counterexample { common, p, r } => {
            configure_threads(&common);
            let cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let parse = || -> Result<(FourMomentum, Vec<f64>), String> {
                let pv = parse_vec3(&p)?;
                let radii: Vec<f64> = r
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format!("bad radii `{r}`: {e}"))?;
                Ok((
                    relkin::minkowski::mass_shell_lift(pv).map_err(|e| e.to_string())?,
                    radii,
                ))
            };
            let (pm, radii) = match parse() {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = suites::counterexample_suite(&cfg, &pm, &radii);
            emit(&report, &common, None)
        }
        Command::Report { inputs, all, out } => {
            let mut paths = inputs;
            if all {
                if let Ok(dir) = std::fs::read_dir(".") {
                    for entry in dir.flatten() {
                        let path = entry.path();
                        if path.extension().is_some_and(|e| e == "json") {
                            paths.push(path);
                        }
                    }
                }
            }
            paths.sort();
            match report::aggregate(&paths) {
                Ok(summary) => {
                    if let Some(out) = out {
                        if let Err(e) = summary.write_json(&out) {
                            eprintln!("cannot write {}: {e}", out.display());
                            return ExitCode::from(2);
                        }
                    } else {
                        println!("{}", summary.to_json());
                    }
                    if summary.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
