use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ogpm::analytics::{
    whole_domain_error, worst_case_error, write_curves_csv, DEFAULT_CURVE_POINTS,
};
use ogpm::estimation::{run_experiment, write_reports_csv, ExperimentConfig};
use ogpm::polar::{budget_curve, optimal_budget_split, total_error, write_budget_curve_csv};
use ogpm::solver::{
    fit_closed_form, solve_probabilities_with, verify_optimal_m_with, Feature, SolverOptions,
    SolverProblem,
};
use ogpm::{Error, ErrorMetric, Interval, MechanismSpec, Perturber};

#[derive(Parser)]
#[command(name = "ogpm", version, about = "Optimal piecewise LDP mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected error over the input domain, one row per grid point
    Curves {
        #[arg(long, value_delimiter = ',', required = true)]
        mechanisms: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilon: Vec<f64>,
        #[arg(long, default_value = "l1")]
        metric: ErrorMetric,
        #[arg(long, default_value_t = DEFAULT_CURVE_POINTS)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest expected error over inputs
    WorstCase {
        #[arg(long, value_delimiter = ',', required = true)]
        mechanisms: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilon: Vec<f64>,
        #[arg(long, default_value = "l1")]
        metric: ErrorMetric,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerically optimal m-piece mechanism
    Solve {
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value = "l1")]
        metric: ErrorMetric,
        /// Optimize for this single input instead of the worst case
        #[arg(long)]
        at: Option<f64>,
        #[arg(long)]
        circular: bool,
        /// Require E[M(x)] = x on the enlarged output domain
        #[arg(long)]
        unbiased: bool,
        #[arg(long, default_value_t = 32)]
        starts: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks that m pieces match m+1 pieces at random (ε, x)
    VerifyM {
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value = "l1")]
        metric: ErrorMetric,
        #[arg(long)]
        circular: bool,
        #[arg(long, default_value_t = 0.05)]
        epsilon_min: f64,
        #[arg(long, default_value_t = 10.0)]
        epsilon_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-squares fit of a closed form to solved values
    Fit {
        #[arg(long, default_value = "exp-half")]
        feature: Feature,
        /// CSV with `epsilon` and `value` columns; solves fresh samples if absent
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon_min: f64,
        #[arg(long, default_value_t = 8.0)]
        epsilon_max: f64,
        #[arg(long, default_value = "l1")]
        metric: ErrorMetric,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distribution and mean estimation experiment from a key=value config
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Budget split between radius and angle of polar data
    PolarSplit {
        #[arg(long)]
        epsilon_total: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturbs a list of values
    Sample {
        #[arg(long)]
        mechanism: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Vec<f64>,
        /// One value per line, read when --values is absent
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failures carry their exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Dataset(_) => 3,
            Error::Solver(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::from(Error::from(e))
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn specs(names: &[String]) -> Result<Vec<MechanismSpec>, Failure> {
    names
        .iter()
        .map(|n| MechanismSpec::by_name(n).map_err(Failure::from))
        .collect()
}

fn read_fit_samples(path: &Path) -> Result<Vec<(f64, f64)>, Failure> {
    let mut r = csv::Reader::from_path(path).map_err(Error::from)?;
    let headers = r.headers().map_err(Error::from)?.clone();
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim()));
    let (e, v) = match (col(&["epsilon"]), col(&["value", "density", "p"])) {
        (Some(e), Some(v)) => (e, v),
        _ => {
            return Err(Failure::from(Error::Dataset(
                "fit input needs `epsilon` and `value` columns".into(),
            )))
        }
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(Error::from)?;
        let parse = |i: usize| -> Result<f64, Failure> {
            let cell = rec.get(i).unwrap_or("").trim();
            cell.parse()
                .map_err(|_| Failure::from(Error::Dataset(format!("`{cell}` is not a number"))))
        };
        out.push((parse(e)?, parse(v)?));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Curves {
            mechanisms,
            epsilon,
            metric,
            points,
            out,
        } => {
            let specs = specs(&mechanisms)?;
            let mut curves = Vec::new();
            for spec in &specs {
                for &e in &epsilon {
                    curves.push(whole_domain_error(spec, e, metric, points)?);
                }
            }
            write_curves_csv(&curves, sink(&out)?)?;
        }
        Command::WorstCase {
            mechanisms,
            epsilon,
            metric,
            out,
        } => {
            let specs = specs(&mechanisms)?;
            let mut w = csv::Writer::from_writer(sink(&out)?);
            w.write_record(["mechanism", "epsilon", "metric", "worst_case"])
                .map_err(Error::from)?;
            for spec in &specs {
                for &e in &epsilon {
                    let v = worst_case_error(spec, e, metric)?;
                    w.write_record([
                        spec.name(),
                        &e.to_string(),
                        &metric.to_string(),
                        &v.to_string(),
                    ])
                    .map_err(Error::from)?;
                }
            }
            w.flush()?;
        }
        Command::Solve {
            m,
            epsilon,
            metric,
            at,
            circular,
            unbiased,
            starts,
            seed,
            out,
        } => {
            let domain = if circular {
                Interval::circle()
            } else {
                Interval::unit()
            };
            let mut problem = SolverProblem::new(domain, metric, m, epsilon);
            if let Some(x) = at {
                problem = problem.at_point(x);
            }
            if unbiased {
                let c = ogpm::mechanisms::ogpm_unbiased_bound(epsilon);
                problem = problem.unbiased(Interval::classical(-c, c + 1.0)?);
            }
            let opts = SolverOptions {
                starts,
                seed,
                ..SolverOptions::default()
            };
            let sol = solve_probabilities_with(&problem, &opts)?;
            sol.write_csv(sink(&out)?)?;
            eprintln!(
                "objective={} high={} low={} converged={}",
                sol.objective,
                sol.high_density(),
                sol.low_density(),
                sol.converged
            );
            if !sol.converged {
                return Err(Failure {
                    code: 4,
                    message: "restarts disagree; the solution may not be optimal".into(),
                });
            }
        }
        Command::VerifyM {
            m,
            samples,
            metric,
            circular,
            epsilon_min,
            epsilon_max,
            seed,
            out,
        } => {
            let domain = if circular {
                Interval::circle()
            } else {
                Interval::unit()
            };
            let report = verify_optimal_m_with(
                domain,
                metric,
                m,
                samples,
                (epsilon_min, epsilon_max),
                seed,
                &SolverOptions::default(),
            )?;
            let mut w = sink(&out)?;
            writeln!(w, "{}", report.summary())?;
            for f in &report.failures {
                writeln!(w, "mismatch epsilon={} x={}: {}", f.epsilon, f.x, f.reason)?;
            }
            w.flush()?;
            if report.compared == 0 {
                return Err(Failure {
                    code: 4,
                    message: "no sample converged".into(),
                });
            }
        }
        Command::Fit {
            feature,
            input,
            samples,
            epsilon_min,
            epsilon_max,
            metric,
            seed,
            out,
        } => {
            let data = match input {
                Some(p) => read_fit_samples(&p)?,
                None => {
                    if !(epsilon_min > 0.0 && epsilon_max > epsilon_min) {
                        return Err(Failure::from(Error::Config("bad epsilon range".into())));
                    }
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..samples)
                        .map(|_| {
                            let e = rng.gen_range(epsilon_min..epsilon_max);
                            let p = SolverProblem::new(Interval::unit(), metric, 3, e);
                            solve_probabilities_with(&p, &SolverOptions::default())
                                .map(|s| (e, s.high_density()))
                        })
                        .collect::<Result<Vec<_>, _>>()?
                }
            };
            let fit = fit_closed_form(&data, feature)?;
            let mut w = csv::Writer::from_writer(sink(&out)?);
            w.write_record(["feature", "beta1", "beta2", "max_residual", "samples"])
                .map_err(Error::from)?;
            w.write_record([
                fit.feature.to_string(),
                fit.beta[0].to_string(),
                fit.beta[1].to_string(),
                fit.max_residual.to_string(),
                data.len().to_string(),
            ])
            .map_err(Error::from)?;
            w.flush()?;
        }
        Command::Estimate { config, seed, out } => {
            let mut cfg = ExperimentConfig::from_file(&config).map_err(|e| match e {
                Error::Io(m) => Failure::from(Error::Io(format!("{}: {m}", config.display()))),
                other => Failure::from(other),
            })?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let reports = run_experiment(&cfg)?;
            write_reports_csv(&reports, sink(&out)?)?;
        }
        Command::PolarSplit {
            epsilon_total,
            d,
            points,
            out,
        } => {
            let split = optimal_budget_split(epsilon_total, d)?;
            let err = total_error(&split, d)?;
            eprintln!(
                "epsilon1={} epsilon2={} total_error={err}",
                split.epsilon1, split.epsilon2
            );
            if out.is_some() {
                println!(
                    "epsilon1={} epsilon2={} total_error={err}",
                    split.epsilon1, split.epsilon2
                );
            }
            write_budget_curve_csv(&budget_curve(epsilon_total, d, points)?, sink(&out)?)?;
        }
        Command::Sample {
            mechanism,
            epsilon,
            values,
            input,
            seed,
            out,
        } => {
            let spec = MechanismSpec::by_name(&mechanism)?;
            let values = match (values.is_empty(), input) {
                (false, _) => values,
                (true, Some(p)) => {
                    let text = std::fs::read_to_string(&p)?;
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(|l| {
                            l.parse::<f64>().map_err(|_| {
                                Failure::from(Error::Dataset(format!("`{l}` is not a number")))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?
                }
                (true, None) => {
                    return Err(Failure::from(Error::Config(
                        "give --values or --input".into(),
                    )))
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = csv::Writer::from_writer(sink(&out)?);
            w.write_record(["x", "y"]).map_err(Error::from)?;
            for x in values {
                let y = spec.perturb(epsilon, x, &mut rng)?;
                w.write_record([x.to_string(), y.to_string()])
                    .map_err(Error::from)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
