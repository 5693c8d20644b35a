//! The `heis` command line: generators, estimators, sweeps and the lemma
//! checks, each writing a whitespace-separated table behind a `#` header.
//!
//! Exit codes: 0 on success, 1 when a checked invariant fails, 2 on usage
//! or parameter errors.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dimension::{box_dimension, correlation_dimension, default_scales, DimensionEstimate};
use crate::error::{HeisError, Result};
use crate::group::{project_to_chart, Angle, HPoint};
use crate::lemmas::{
    cover_sweep, holder_constants, identity_suite, incidence_sweep, metric_suite,
    triple_point_solve, triple_suite, verify_transversality, IdentityCheck, IncidenceConfig,
    TransversalityConfig, TripleSolution,
};
use crate::measures::{
    frostman_exponent, ifs_generate, read_cloud, sample_cube, sample_horizontal_line,
    sample_vertical_plane, write_cloud, IfsSpec, WeightedCloud, DEFAULT_IFS_CAP,
};
use crate::sweep::{
    bound_bdfm, bound_fh, bound_theorem, improvement_interval, kappa, sweep_dimension,
    z_delta_fraction,
};

/// Version tag on the first line of every table.
pub const TABLE_MAGIC: &str = "#heis-table v1";

#[derive(Debug, Parser)]
#[command(
    name = "heis",
    version,
    about = "Projection experiments in the first Heisenberg group"
)]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to $HEIS_THREADS, then to the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Cube,
    Line,
    Plane,
    Ifs,
}

#[derive(Debug, Args)]
struct CloudArgs {
    /// Read a cloud file instead of generating one.
    #[arg(long, conflicts_with = "kind")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Angle of the line or plane.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, default_value_t = 8)]
    ifs_m: usize,
    #[arg(long, default_value_t = 5)]
    depth: u32,
    #[arg(long, default_value_t = DEFAULT_IFS_CAP)]
    cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Box,
    Correlation,
    Frostman,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a cloud file.
    Gen {
        #[command(flatten)]
        cloud: CloudArgs,
    },
    /// Estimate a dimension of a cloud.
    Dim {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, value_enum, default_value_t = Method::Box)]
        method: Method,
        /// Comma-separated scales; defaults to a dyadic window above the
        /// cloud's resolution.
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        /// Ball centres per radius (frostman).
        #[arg(long, default_value_t = 32)]
        centers: usize,
    },
    /// Project a cloud to a vertical subgroup and print chart coordinates.
    Project {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
    },
    /// Per-angle box dimension of the projections.
    Sweep {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        /// Report the fraction of angles reaching this; defaults to the
        /// bound at the cloud's nominal dimension minus 0.2.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Fractions of angles where projected balls are heavy.
    Zdelta {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.125,0.0625,0.03125")]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 3.0)]
        s: f64,
        /// Defaults to kappa(s) + 1e-3.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Check the interval structure of near-angle sets.
    VerifyTransversality {
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = crate::lemmas::transversality::DEFAULT_SCAN)]
        scan: usize,
    },
    /// Build and sample-check covers of Euclidean balls by Korányi balls.
    VerifyCover {
        /// Ball centre `x,y,t`.
        #[arg(long, value_delimiter = ',', default_value = "0,0,0")]
        center: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.25,0.125,0.0625,0.03125,0.015625,0.0078125"
        )]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Randomized metric and identity checks.
    VerifyIdentities {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Solve the three-point system, or check it on random triples.
    Triple {
        /// Three points `x,y,t` separated by `;`.
        #[arg(long)]
        points: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Quadruple counts across a sweep of scales.
    Incidence {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, default_value_t = 3.0)]
        s: f64,
        /// Defaults to kappa(s) + 1e-3.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.125,0.0625,0.03125,0.015625"
        )]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 0.25)]
        t: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        v_samples: Option<usize>,
        #[arg(long, default_value_t = 4096)]
        budget: usize,
        /// Allowed excess of the fitted slope over the bound exponent.
        #[arg(long, default_value_t = 0.3)]
        slack: f64,
    },
    /// Tabulate the dimension bounds over (2, 4].
    Bounds {
        #[arg(long, default_value_t = 0.01)]
        s_grid: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen { .. } => "gen",
            Command::Dim { .. } => "dim",
            Command::Project { .. } => "project",
            Command::Sweep { .. } => "sweep",
            Command::Zdelta { .. } => "zdelta",
            Command::VerifyTransversality { .. } => "verify-transversality",
            Command::VerifyCover { .. } => "verify-cover",
            Command::VerifyIdentities { .. } => "verify-identities",
            Command::Triple { .. } => "triple",
            Command::Incidence { .. } => "incidence",
            Command::Bounds { .. } => "bounds",
        }
    }
}

/// Outcome of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Ok,
    Failed,
}

fn load_cloud(a: &CloudArgs, seed: u64) -> Result<WeightedCloud> {
    if let Some(path) = &a.input {
        let f = File::open(path).map_err(|e| HeisError::Io(format!("{}: {e}", path.display())))?;
        return read_cloud(BufReader::new(f));
    }
    match a.kind.unwrap_or(Kind::Cube) {
        Kind::Cube => sample_cube(a.n, seed),
        Kind::Line => sample_horizontal_line(Angle::new(a.theta), a.n, seed),
        Kind::Plane => sample_vertical_plane(Angle::new(a.theta), a.n, seed),
        Kind::Ifs => {
            let spec = IfsSpec::heisenberg_digits(a.ifs_m, a.depth)?.with_cap(a.cap);
            ifs_generate(&spec, seed)
        }
    }
}

fn resolve_kappa(s: f64, k: Option<f64>) -> Result<f64> {
    match k {
        Some(k) => Ok(k),
        None => Ok(kappa(s)? + 1e-3),
    }
}

fn write_estimate(out: &mut dyn Write, est: &DimensionEstimate) -> io::Result<()> {
    writeln!(out, "# scale value")?;
    for row in &est.table {
        writeln!(out, "{} {}", row.scale, row.value)?;
    }
    writeln!(out, "# slope intercept r2 window_lo window_hi")?;
    writeln!(out, "# fit {}", est.summary_line())?;
    if est.degenerate {
        writeln!(
            out,
            "# degenerate: the measured quantity does not vary with scale"
        )?;
    }
    Ok(())
}

fn write_checks(out: &mut dyn Write, checks: &[IdentityCheck]) -> io::Result<bool> {
    let mut ok = true;
    for c in checks {
        writeln!(
            out,
            "{} {} {} {:.3e} {}",
            c.name,
            c.trials,
            c.failures,
            c.worst_ratio,
            if c.passed() { "pass" } else { "FAIL" }
        )?;
        ok &= c.passed();
    }
    Ok(ok)
}

fn parse_points(s: &str) -> Result<[HPoint; 3]> {
    let bad = || HeisError::InvalidParameter(format!("expected 'x,y,t;x,y,t;x,y,t', got '{s}'"));
    let pts: Vec<HPoint> = s
        .split(';')
        .map(|p| {
            let c: Vec<f64> = p
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            match c[..] {
                [x, y, t] => HPoint::try_new(x, y, t),
                _ => Err(bad()),
            }
        })
        .collect::<Result<_>>()?;
    pts.try_into().map_err(|_| bad())
}

fn execute(cmd: &Command, seed: u64, out: &mut dyn Write, header: &[String]) -> Result<Verdict> {
    let head = |out: &mut dyn Write| -> io::Result<()> {
        writeln!(out, "{TABLE_MAGIC}")?;
        for line in header {
            writeln!(out, "# {line}")?;
        }
        Ok(())
    };
    match cmd {
        Command::Gen { cloud } => {
            let c = load_cloud(cloud, seed)?;
            let mut meta = vec![TABLE_MAGIC.trim_start_matches('#').to_string()];
            meta.extend(header.iter().cloned());
            write_cloud(out, &c, &meta)?;
        }
        Command::Dim {
            cloud,
            method,
            scales,
            centers,
        } => {
            let c = load_cloud(cloud, seed)?;
            head(out)?;
            let scales = match (scales, method) {
                (Some(s), _) => s.clone(),
                // the estimator trims unresolved radii itself
                (None, Method::Frostman) => (0..=16).map(|k| 0.5f64.powf(k as f64 / 2.0)).collect(),
                (None, _) => default_scales(c.resolution()),
            };
            let est = match method {
                Method::Box => box_dimension(&c, &scales)?,
                Method::Correlation => correlation_dimension(&c, &scales)?,
                Method::Frostman => frostman_exponent(&c, &scales, *centers, seed)?,
            };
            write_estimate(out, &est)?;
        }
        Command::Project { cloud, angle } => {
            let c = load_cloud(cloud, seed)?;
            head(out)?;
            let th = Angle::new(*angle);
            writeln!(out, "# lambda1 lambda2 weight")?;
            for (p, w) in c.points().iter().zip(c.weights()) {
                let q = project_to_chart(&th, p);
                writeln!(out, "{} {} {}", q.lambda1, q.lambda2, w)?;
            }
        }
        Command::Sweep {
            cloud,
            grid,
            scales,
            threshold,
        } => {
            let c = load_cloud(cloud, seed)?;
            head(out)?;
            // each projection trims the window at its own chart resolution
            let scales = scales.clone().unwrap_or_else(|| default_scales(0.0));
            let res = sweep_dimension(&c, *grid, &scales)?;
            writeln!(out, "# theta slope r2 window_lo window_hi")?;
            for (th, est) in res.thetas.iter().zip(&res.per_theta_dimension) {
                match est {
                    Ok(e) => writeln!(
                        out,
                        "{:.9} {:.6} {:.6} {} {}",
                        th.radians(),
                        e.slope,
                        e.r_squared,
                        e.window.0,
                        e.window.1
                    )?,
                    Err(e) => writeln!(out, "{:.9} nan nan nan nan # {e}", th.radians())?,
                }
            }
            if let Some(b) = res.bounds {
                writeln!(
                    out,
                    "# bounds s={} theorem={:?} bdfm={:?} fh={:?}",
                    b.s, b.theorem, b.bdfm, b.fh
                )?;
            }
            let thr = threshold.or(res.bounds.and_then(|b| b.theorem).map(|t| t - 0.2));
            if let Some(thr) = thr {
                writeln!(
                    out,
                    "# fraction_at_least {thr} {:.6}",
                    res.fraction_at_least(thr)
                )?;
            }
        }
        Command::Zdelta {
            cloud,
            deltas,
            s,
            kappa,
            grid,
            samples,
        } => {
            let c = load_cloud(cloud, seed)?;
            let k = resolve_kappa(*s, *kappa)?;
            let eta = crate::sweep::eta_choice(*s, k)?;
            head(out)?;
            writeln!(out, "# kappa={k} eta={eta}")?;
            writeln!(out, "# delta mean_bad_fraction bad_point_mass resolved")?;
            for (i, &d) in deltas.iter().enumerate() {
                let r =
                    z_delta_fraction(&c, d, *s, eta, *grid, *samples, seed.wrapping_add(i as u64))?;
                writeln!(
                    out,
                    "{} {:.6} {:.6} {}",
                    d,
                    r.mean_fraction(),
                    r.bad_point_mass,
                    r.resolved
                )?;
            }
        }
        Command::VerifyTransversality {
            pairs,
            deltas,
            scan,
        } => {
            head(out)?;
            let mut cfg = TransversalityConfig::new(*pairs, deltas.clone(), seed);
            cfg.scan = *scan;
            let rep = verify_transversality(&cfg)?;
            writeln!(out, "# pair family d_h delta intervals max_len c_emp")?;
            for r in &rep.rows {
                writeln!(
                    out,
                    "{} {} {:.9} {} {} {:.6e} {:.6}",
                    r.pair_id,
                    r.family.name(),
                    r.d_h,
                    r.delta,
                    r.n_intervals,
                    r.max_len,
                    r.c_emp
                )?;
            }
            writeln!(out, "# max_intervals {}", rep.max_count)?;
            writeln!(out, "# c_emp {:.6}", rep.c_emp)?;
            match rep.slope {
                Some(s) => writeln!(out, "# slope {s:.6} over {} points", rep.fit_points)?,
                None => writeln!(out, "# slope unavailable ({} points)", rep.fit_points)?,
            }
            writeln!(out, "# counts_ok {}", rep.counts_ok)?;
            if !rep.counts_ok {
                return Ok(Verdict::Failed);
            }
        }
        Command::VerifyCover {
            center,
            radii,
            samples,
        } => {
            let v = match center[..] {
                [x, y, t] => HPoint::try_new(x, y, t)?,
                _ => return Err(HeisError::InvalidParameter("--center takes x,y,t".into())),
            };
            head(out)?;
            match cover_sweep(&v, radii, *samples, seed) {
                Ok(rep) => {
                    writeln!(out, "# r count count_times_r")?;
                    let mut ok = true;
                    for row in &rep.rows {
                        writeln!(out, "{} {} {:.6}", row.r, row.count, row.count_times_r)?;
                        ok &= row.count as f64 <= (rep.n_emp / row.r).ceil();
                    }
                    writeln!(out, "# n_emp {:.6}", rep.n_emp)?;
                    writeln!(out, "# slope {:.6}", rep.slope)?;
                    writeln!(
                        out,
                        "# samples_per_ball {} all covered",
                        rep.samples_per_ball
                    )?;
                    if !ok {
                        return Ok(Verdict::Failed);
                    }
                }
                Err(e @ HeisError::Uncovered { .. }) => {
                    writeln!(out, "# FAIL {e}")?;
                    return Ok(Verdict::Failed);
                }
                Err(e) => return Err(e),
            }
        }
        Command::VerifyIdentities { trials } => {
            head(out)?;
            writeln!(out, "# check trials failures worst_error_ratio status")?;
            let mut ok = write_checks(out, &metric_suite(*trials, seed))?;
            ok &= write_checks(out, &identity_suite(*trials, seed))?;
            let h = holder_constants(*trials, seed);
            let holder_ok = h.c_lo >= 1e-3 && h.c_hi <= 1e3;
            writeln!(
                out,
                "holder_comparison {} {} {:.6} {}",
                h.trials,
                usize::from(!holder_ok),
                h.c_hi.max(1.0 / h.c_lo),
                if holder_ok { "pass" } else { "FAIL" }
            )?;
            writeln!(out, "# holder c_lo={:.6} c_hi={:.6}", h.c_lo, h.c_hi)?;
            if !(ok && holder_ok) {
                return Ok(Verdict::Failed);
            }
        }
        Command::Triple { points, trials } => {
            head(out)?;
            if let Some(p) = points {
                let [a, b, c] = parse_points(p)?;
                match triple_point_solve(&a, &b, &c) {
                    TripleSolution::Unique { point, det } => {
                        writeln!(out, "# x y t det")?;
                        writeln!(out, "{} {} {} {}", point.x, point.y, point.t, det)?;
                    }
                    TripleSolution::Degenerate { det } => {
                        writeln!(out, "# degenerate det={det}")?;
                    }
                }
            } else {
                writeln!(out, "# check trials failures worst_error_ratio status")?;
                if !write_checks(out, &triple_suite(*trials, seed))? {
                    return Ok(Verdict::Failed);
                }
            }
        }
        Command::Incidence {
            cloud,
            s,
            kappa,
            deltas,
            t,
            grid,
            v_samples,
            budget,
            slack,
        } => {
            let c = load_cloud(cloud, seed)?;
            let first = *deltas
                .first()
                .ok_or_else(|| HeisError::InvalidParameter("need at least one delta".into()))?;
            let mut cfg = IncidenceConfig::new(*s, resolve_kappa(*s, *kappa)?, first, *t)?;
            cfg.v_samples = *v_samples;
            cfg.triple_budget = *budget;
            head(out)?;
            writeln!(
                out,
                "# kappa={} eta={:e} alpha={:.6} bound_exponent={:.6}",
                cfg.kappa,
                cfg.eta,
                cfg.alpha,
                cfg.bound_exponent()
            )?;
            let sw = incidence_sweep(&c, &cfg, deltas, *grid, seed, *slack)?;
            writeln!(
                out,
                "# delta count std_error qualifying_pairs v_evaluated exact inconclusive"
            )?;
            for r in &sw.rows {
                writeln!(
                    out,
                    "{} {:.9e} {:.3e} {} {} {} {}",
                    r.delta,
                    r.count,
                    r.std_error,
                    r.qualifying_pairs,
                    r.v_evaluated,
                    r.exact,
                    r.inconclusive
                )?;
            }
            match sw.slope {
                Some(sl) => writeln!(out, "# slope {sl:.6} bound {:.6}", sw.bound_exponent)?,
                None => writeln!(out, "# slope unavailable")?,
            }
            if sw.within_bound == Some(false) {
                writeln!(out, "# FAIL slope exceeds bound exponent + {slack}")?;
                return Ok(Verdict::Failed);
            }
        }
        Command::Bounds { s_grid } => {
            if !(*s_grid > 0.0 && *s_grid <= 2.0) {
                return Err(HeisError::InvalidParameter(format!(
                    "--s-grid must lie in (0, 2], got {s_grid}"
                )));
            }
            head(out)?;
            let (_, cross) = improvement_interval();
            writeln!(out, "# crossover {cross:.9}")?;
            writeln!(out, "# s theorem bdfm fh improves")?;
            let steps = (2.0 / s_grid).round() as usize;
            for k in 1..=steps {
                let s = (2.0 + k as f64 * s_grid).min(4.0);
                let th = bound_theorem(s)?;
                let (b, f) = (bound_bdfm(s)?, bound_fh(s)?);
                writeln!(
                    out,
                    "{s:.6} {th:.9} {b:.9} {f:.9} {}",
                    u8::from(th > b.max(f))
                )?;
            }
        }
    }
    Ok(Verdict::Ok)
}

fn thread_count(flag: Option<usize>, env: Option<String>) -> std::result::Result<usize, String> {
    if let Some(n) = flag {
        return if n > 0 {
            Ok(n)
        } else {
            Err("--threads must be positive".into())
        };
    }
    if let Some(v) = env {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!(
                "HEIS_THREADS must be a positive integer, got '{v}'"
            )),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the CLI on `argv` (including the program name), writing tables to
/// `stdout` (or `--out`) and diagnostics to `stderr`. Returns the exit code.
pub fn run_with_io(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return 0;
                }
                _ => 2,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    let threads = match thread_count(cli.threads, std::env::var("HEIS_THREADS").ok()) {
        Ok(n) => n,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 2;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start thread pool: {e}");
            return 2;
        }
    };

    let header = vec![
        format!("command={}", cli.cmd.name()),
        format!("seed={}", cli.seed),
        format!("config={:?}", cli.cmd),
        format!("threads={threads}"),
    ];

    let mut file_out;
    let out: &mut dyn Write = match &cli.out {
        Some(path) => match File::create(path) {
            Ok(f) => {
                file_out = BufWriter::new(f);
                &mut file_out
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {}: {e}", path.display());
                return 2;
            }
        },
        None => stdout,
    };

    let mut buf = Vec::new();
    let result = pool.install(|| execute(&cli.cmd, cli.seed, &mut buf, &header));
    let flushed = out.write_all(&buf).and_then(|_| out.flush());
    match (result, flushed) {
        (Ok(Verdict::Ok), Ok(())) => 0,
        (Ok(Verdict::Failed), _) => {
            let _ = writeln!(stderr, "{}: verification failed", cli.cmd.name());
            1
        }
        (Ok(Verdict::Ok), Err(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
        (Err(e), _) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

/// [`run_with_io`] on the process's stdout and stderr.
pub fn run(argv: &[String]) -> i32 {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    run_with_io(argv, &mut lock, &mut io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut argv = vec!["heis".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with_io(&argv, &mut o, &mut e);
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_str(&["frobnicate"]).0, 2);
        assert_eq!(run_str(&["bounds", "--nope"]).0, 2);
        assert_eq!(run_str(&[]).0, 2);
        assert_eq!(run_str(&["bounds", "--s-grid", "0"]).0, 2);
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("verify-transversality"));
    }

    #[test]
    fn bounds_table() {
        let (code, out, _) = run_str(&["bounds", "--s-grid", "0.5", "--threads", "1"]);
        assert_eq!(code, 0);
        assert!(out.starts_with(TABLE_MAGIC));
        assert!(out.contains("# crossover 3.205758"));
        assert!(out.contains("# threads=1"));
        let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].starts_with("2.500000 1.250000000"));
        assert!(rows[3].starts_with("4.000000"));
    }

    #[test]
    fn thread_precedence() {
        assert_eq!(thread_count(Some(3), Some("5".into())), Ok(3));
        assert_eq!(thread_count(None, Some("5".into())), Ok(5));
        assert!(thread_count(None, Some("x".into())).is_err());
        assert!(thread_count(Some(0), None).is_err());
        assert!(thread_count(None, None).unwrap() >= 1);
    }

    #[test]
    fn triple_explicit_points() {
        let (code, out, _) = run_str(&["triple", "--points", "1,0,0;0,1,0;0,0,0"]);
        assert_eq!(code, 0);
        assert!(out.lines().any(|l| l.ends_with(" 4")));
        let (code, out, _) = run_str(&["triple", "--points", "0,0,0;1,1,0;2,2,5"]);
        assert_eq!(code, 0);
        assert!(out.contains("# degenerate"));
        assert_eq!(run_str(&["triple", "--points", "1,2;3"]).0, 2);
    }

    #[test]
    fn parameter_errors_exit_2() {
        let (code, _, err) = run_str(&["dim", "--kind", "ifs", "--ifs-m", "3"]);
        assert_eq!(code, 2);
        assert!(err.contains("error"));
    }
}
