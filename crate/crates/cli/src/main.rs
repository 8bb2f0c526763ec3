use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use srwlab::cadlag::{
    j1_dist_interval, m1_dist_on, m1_dist_whole, uniform_dist, Polyline, StepFunction, M1_TOL,
};
use srwlab::harness::{
    run_experiment_with_threads, ExperimentConfig, ExperimentId, RunResult, WeightSpec,
};
use srwlab::ray_knight::RayKnight;
use srwlab::rng::seeded;
use srwlab::walk::{simulate_to_t, Sign, WalkParams};

#[derive(Parser)]
#[command(name = "srwlab", version, about = "Self-repelling walk laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the walk directly and write its local-time profile.
    Simulate(WalkArgs),
    /// Build the profile from the site recursions.
    Profile {
        #[command(flatten)]
        walk: WalkArgs,
        /// Also sample the coupled ζ field.
        #[arg(long)]
        coupled: bool,
    },
    /// Distance between two functions stored as CSV.
    Metric {
        #[arg(value_enum)]
        kind: MetricKind,
        left: PathBuf,
        right: PathBuf,
        /// Restrict to [a, b]; M1 uses the whole line when omitted.
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
        interval: Option<Vec<f64>>,
        #[arg(long, default_value_t = M1_TOL)]
        tol: f64,
    },
    /// Table of the invariant measure of the η chain.
    Rho {
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the experiments E1..E10.
    Experiment {
        /// JSON config; defaults of `--id` when omitted.
        config: Option<PathBuf>,
        #[arg(long)]
        id: Option<ExperimentId>,
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Directory for result.json and samples.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    M1,
    J1,
    Uniform,
}

#[derive(Args)]
struct WeightArgs {
    /// `w(k) = exp(beta k)`.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, default_value_t = 10)]
    radius: usize,
    /// `k value` table; overrides `--beta`.
    #[arg(long)]
    weight_file: Option<PathBuf>,
}

impl WeightArgs {
    fn spec(&self) -> WeightSpec {
        match &self.weight_file {
            Some(path) => WeightSpec::Table { path: path.clone() },
            None => WeightSpec::Exponential {
                beta: self.beta,
                radius: self.radius,
            },
        }
    }
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    x: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value = "-", allow_hyphen_values = true)]
    iota: Sign,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    weight: WeightArgs,
    /// Directory for the CSV and metadata; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Simulate(a) => {
            let w = a.weight.spec().build()?;
            let p = WalkParams::new(a.n, a.x, a.theta, a.iota)?;
            let prof = simulate_to_t(&w, &p, &mut seeded(a.seed))?;
            let meta = serde_json::to_string_pretty(&prof.metadata(Some(a.seed), "direct"))?;
            emit(a.out.as_deref(), "profile.csv", &prof.to_csv(), &meta)?;
        }
        Command::Profile { walk: a, coupled } => {
            let w = a.weight.spec().build()?;
            let p = WalkParams::new(a.n, a.x, a.theta, a.iota)?;
            let mut rk = RayKnight::new(&w)?;
            let mut rng = seeded(a.seed);
            if coupled {
                rk.prepare_coupling(a.n)?;
                let cs = rk.coupled(&p, &mut rng)?;
                let meta = serde_json::to_string_pretty(&cs.profile.metadata(Some(a.seed), "eta"))?;
                emit(a.out.as_deref(), "coupled.csv", &cs.to_csv(), &meta)?;
            } else {
                let prof = rk.profile(&p, &mut rng)?;
                let meta = serde_json::to_string_pretty(&prof.metadata(Some(a.seed), "eta"))?;
                emit(a.out.as_deref(), "profile.csv", &prof.to_csv(), &meta)?;
            }
        }
        Command::Metric {
            kind,
            left,
            right,
            interval,
            tol,
        } => {
            let (lower, upper, tol) =
                metric(kind, &left, &right, interval.map(|v| (v[0], v[1])), tol)?;
            println!("lower,upper,tolerance");
            println!("{lower},{upper},{tol}");
        }
        Command::Rho { weight, out } => {
            let rk = RayKnight::new(&weight.spec().build()?)?;
            let csv = rk.rho().to_csv();
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Experiment {
            config,
            id,
            replicates,
            seed,
            threads,
            out,
        } => {
            let mut cfg = match (config, id) {
                (Some(path), _) => ExperimentConfig::load(path)?,
                (None, Some(id)) => ExperimentConfig::default_for(id),
                (None, None) => return Err("give a config file or --id".into()),
            };
            if let Some(r) = replicates {
                cfg.replicates = r;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let result = run_experiment_with_threads(&cfg, threads)?;
            report(&result);
            return Ok(result.passed);
        }
    }
    Ok(true)
}

fn emit(dir: Option<&Path>, name: &str, csv: &str, meta: &str) -> Result<(), Failure> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), csv)?;
            std::fs::write(dir.join("metadata.json"), meta)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

enum Function {
    Step(StepFunction<f64>),
    Path(Polyline<f64>),
}

fn read_function(path: &Path) -> Result<Function, Failure> {
    let text = std::fs::read_to_string(path)?;
    let header = text.lines().next().unwrap_or("").trim();
    Ok(if header.starts_with("u,") {
        Function::Path(Polyline::from_csv(&text)?)
    } else {
        Function::Step(StepFunction::from_csv(&text)?)
    })
}

fn metric(
    kind: MetricKind,
    left: &Path,
    right: &Path,
    interval: Option<(f64, f64)>,
    tol: f64,
) -> Result<(f64, f64, f64), Failure> {
    let (f, g) = (read_function(left)?, read_function(right)?);
    let path = |h: &Function| match h {
        Function::Step(s) => s.to_polyline(),
        Function::Path(p) => p.clone(),
    };
    Ok(match kind {
        MetricKind::M1 => {
            let d = match interval {
                Some((a, b)) => m1_dist_on(&path(&f), &path(&g), a, b, tol)?,
                None => m1_dist_whole(&path(&f), &path(&g))?,
            };
            ((d - tol).max(0.0), d, tol)
        }
        MetricKind::Uniform => {
            let (a, b) = interval.ok_or("uniform distance needs --interval")?;
            let d = uniform_dist(&path(&f), &path(&g), a, b)?;
            (d, d, 0.0)
        }
        MetricKind::J1 => {
            let (a, b) = interval.ok_or("J1 distance needs --interval")?;
            let (Function::Step(f), Function::Step(g)) = (&f, &g) else {
                return Err("J1 distance needs step functions (breakpoint,value)".into());
            };
            let j = j1_dist_interval(f, g, a, b)?;
            (j.lower, j.upper, 0.0)
        }
    })
}

fn report(r: &RunResult) {
    println!("{:?}: {}", r.experiment, r.title);
    for v in &r.verdicts {
        println!(
            "  [{}] {}: {:.6} {} {:.6}",
            if v.passed { "pass" } else { "FAIL" },
            v.name,
            v.statistic,
            v.comparison,
            v.threshold
        );
    }
    for (k, v) in &r.extra {
        println!("  {k} = {v:.6}");
    }
    println!(
        "  {} in {:.2}s",
        if r.passed { "passed" } else { "failed" },
        r.timing.wall_seconds
    );
}
