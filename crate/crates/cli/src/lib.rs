//! Command-line front end for `ptdep-core`.
//!
//! Exit codes: 0 on success, 2 for invalid input or flags, 3 when the data in
//! a single `test` are degenerate (a margin without spread).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptdep_core::io::{
    emit, read_matrix, read_table, render_diff, render_power, render_scan, render_summaries,
    render_sweep, render_test_result, Format, SweepRow,
};
use ptdep_core::simgen::{
    power_experiment, replicate_experiment, CheckerTheta, ModelKind, Percentiles,
    PolyaTreeStatistic, PowerSettings, SimModel, ThresholdSource, DEFAULT_LEVEL,
    DEFAULT_PERMUTATIONS,
};
use ptdep_core::{
    diff_scan, pairwise_scan, run_test, AxisPolicy, Error, Method, PairedSample, PartitionConfig,
    ShiftGrid, ShiftSearchConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

/// Concentration constants used by `sweep-c` unless `--c-values` is given.
pub const SWEEP_C_VALUES: [f64; 4] = [0.1, 1.0, 5.0, 10.0];

#[derive(Parser, Debug)]
#[command(
    name = "ptdep",
    version,
    about = "Bayesian evidence for dependence between paired samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test two columns of a CSV file for dependence.
    Test {
        file: PathBuf,
        /// Column for x, by header name or 0-based index.
        #[arg(long, default_value = "0")]
        x_col: String,
        /// Column for y, by header name or 0-based index.
        #[arg(long, default_value = "1")]
        y_col: String,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Test every pair of columns in a CSV matrix.
    Scan {
        file: PathBuf,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Differential dependence between two conditions with the same variables.
    Diff {
        file_a: PathBuf,
        file_b: PathBuf,
        /// Report pairs whose p_diff is at least this value.
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Replicate experiments on simulated data with percentile summaries.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// True and false positive rates on simulated data.
    Power {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum, default_value_t = ThresholdArg::Posterior)]
        threshold: ThresholdArg,
        /// Permutations for the permutation threshold.
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        perms: usize,
        /// Significance level for the permutation threshold.
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: f64,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sensitivity of p(M1) to the concentration constant c, on a file or on
    /// simulated data.
    SweepC {
        /// CSV file; when absent, data are simulated.
        file: Option<PathBuf>,
        #[arg(long, default_value = "0")]
        x_col: String,
        #[arg(long, default_value = "1")]
        y_col: String,
        /// Comma-separated values of c.
        #[arg(long, value_delimiter = ',', default_values_t = SWEEP_C_VALUES)]
        c_values: Vec<f64>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct PartitionArgs {
    /// Concentration constant; cells at level k use a = c k^2.
    #[arg(long = "c", default_value_t = ptdep_core::config::DEFAULT_C)]
    c: f64,
    #[arg(long, default_value_t = ptdep_core::tree::DEFAULT_DEPTH_CAP)]
    depth_cap: usize,
    /// Prior odds p(M0)/p(M1).
    #[arg(long, default_value_t = 1.0)]
    prior_odds: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Basic)]
    method: MethodArg,
    /// Shift grid for ebayes: a number of quantiles or `midpoints`.
    #[arg(long, default_value = "64", value_parser = parse_grid)]
    grid: ShiftGrid,
    #[arg(long, value_enum, default_value_t = WrapAxis::X)]
    wrap_axis: WrapAxis,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Model name, a comma-separated list, or `all`.
    #[arg(long, default_value = "all")]
    model: String,
    #[arg(long, default_value_t = 150)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, env = "PTDEP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ptdep_core::simgen::DEFAULT_X_RANGE.0, allow_negative_numbers = true)]
    x_min: f64,
    #[arg(long, default_value_t = ptdep_core::simgen::DEFAULT_X_RANGE.1, allow_negative_numbers = true)]
    x_max: f64,
    #[arg(long, value_enum, default_value_t = ThetaArg::TwoPi)]
    checker_theta: ThetaArg,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Basic,
    Ebayes,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum WrapAxis {
    X,
    Xy,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ThresholdArg {
    Posterior,
    Permutation,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ThetaArg {
    TwoPi,
    Unit,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Json,
    Csv,
}

fn parse_grid(s: &str) -> Result<ShiftGrid, String> {
    if s == "midpoints" {
        return Ok(ShiftGrid::AllMidpoints);
    }
    s.parse::<usize>()
        .map(ShiftGrid::Quantiles)
        .map_err(|_| format!("expected a number of quantiles or 'midpoints', got '{s}'"))
}

impl PartitionArgs {
    fn config(&self) -> Result<(PartitionConfig, Method), Error> {
        let cfg = PartitionConfig::default()
            .with_c(self.c)
            .with_depth_cap(self.depth_cap)
            .with_prior_odds(self.prior_odds);
        cfg.validate()?;
        let method = match self.method {
            MethodArg::Basic => Method::Basic,
            MethodArg::Ebayes => {
                let scfg = ShiftSearchConfig {
                    axes: match self.wrap_axis {
                        WrapAxis::X => AxisPolicy::XOnly,
                        WrapAxis::Xy => AxisPolicy::XAndY,
                    },
                    grid: self.grid,
                    include_no_shift: true,
                };
                scfg.validate()?;
                Method::EmpiricalBayes(scfg)
            }
        };
        Ok((cfg, method))
    }
}

impl SimArgs {
    fn models(&self, all: &[ModelKind]) -> Result<Vec<SimModel>, Error> {
        let kinds: Vec<ModelKind> = if self.model == "all" {
            all.to_vec()
        } else {
            self.model
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<_, _>>()?
        };
        let theta = match self.checker_theta {
            ThetaArg::TwoPi => CheckerTheta::TwoPi,
            ThetaArg::Unit => CheckerTheta::Unit,
        };
        kinds
            .into_iter()
            .map(|k| {
                let m = SimModel::new(k, self.sigma)
                    .with_x_range(self.x_min, self.x_max)
                    .with_checker_theta(theta);
                m.validate()?;
                Ok(m)
            })
            .collect()
    }

    fn check_sizes(&self) -> Result<(), Error> {
        if self.n == 0 || self.reps == 0 {
            return Err(Error::InvalidInput(
                "--n and --reps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl OutputArgs {
    fn format(&self) -> Format {
        match self.format {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }

    fn write(&self, contents: &str) -> Result<(), Error> {
        emit(contents, self.output.as_deref())
    }
}

/// Errors from a command, tagged with whether they count as degenerate data.
struct Failure {
    error: Error,
    degenerate_exit: bool,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure {
            error,
            degenerate_exit: false,
        }
    }
}

fn column_pair(file: &Path, x_col: &str, y_col: &str) -> Result<PairedSample, Error> {
    let table = read_table(file)?;
    let (ix, iy) = (table.column_index(x_col)?, table.column_index(y_col)?);
    PairedSample::new(table.columns[ix].clone(), table.columns[iy].clone())
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Test {
            file,
            x_col,
            y_col,
            partition,
            out,
        } => {
            let (cfg, method) = partition.config()?;
            let sample = column_pair(&file, &x_col, &y_col)?;
            let result = run_test(&sample, &cfg, &method).map_err(|e| Failure {
                degenerate_exit: e.is_degenerate(),
                error: e,
            })?;
            out.write(&render_test_result(&result, out.format())?)?;
        }
        Command::Scan {
            file,
            partition,
            run,
            out,
        } => {
            let (cfg, method) = partition.config()?;
            let m = read_matrix(&file)?;
            let pairs = pairwise_scan(&m, &cfg, &method, run.workers)?;
            out.write(&render_scan(&pairs, out.format())?)?;
        }
        Command::Diff {
            file_a,
            file_b,
            threshold,
            partition,
            run,
            out,
        } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Error::InvalidInput(format!(
                    "--threshold must lie in [0, 1], got {threshold}"
                ))
                .into());
            }
            let (cfg, method) = partition.config()?;
            let (a, b) = (read_matrix(&file_a)?, read_matrix(&file_b)?);
            let d = diff_scan(&a, &b, &cfg, &method, threshold, run.workers)?;
            out.write(&render_diff(&d, out.format())?)?;
        }
        Command::Simulate {
            sim,
            partition,
            run,
            out,
        } => {
            let (cfg, method) = partition.config()?;
            sim.check_sizes()?;
            let all = [ModelKind::DEPENDENT.as_slice(), &[ModelKind::Independent]].concat();
            let summaries = sim
                .models(&all)?
                .iter()
                .map(|m| {
                    replicate_experiment(m, sim.n, sim.reps, &cfg, &method, sim.seed, run.workers)
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.write(&render_summaries(&summaries, out.format())?)?;
        }
        Command::Power {
            sim,
            threshold,
            perms,
            level,
            partition,
            run,
            out,
        } => {
            let (cfg, method) = partition.config()?;
            sim.check_sizes()?;
            let stat = PolyaTreeStatistic { cfg, method };
            let settings = PowerSettings {
                source: match threshold {
                    ThresholdArg::Posterior => ThresholdSource::Posterior,
                    ThresholdArg::Permutation => ThresholdSource::Permutation,
                },
                n_perm: perms,
                level,
                workers: run.workers,
            };
            let reports = sim
                .models(&ModelKind::DEPENDENT)?
                .iter()
                .map(|m| power_experiment(m, sim.n, sim.reps, &stat, &settings, sim.seed))
                .collect::<Result<Vec<_>, _>>()?;
            out.write(&render_power(&reports, out.format())?)?;
        }
        Command::SweepC {
            file,
            x_col,
            y_col,
            c_values,
            sim,
            partition,
            run,
            out,
        } => {
            let (base, method) = partition.config()?;
            let mut rows = Vec::new();
            let configs = c_values
                .iter()
                .map(|&c| {
                    let cfg = base.with_c(c);
                    cfg.validate().map(|_| cfg)
                })
                .collect::<Result<Vec<_>, _>>()?;
            match file {
                Some(path) => {
                    let sample = column_pair(&path, &x_col, &y_col)?;
                    let label = path.display().to_string();
                    for cfg in &configs {
                        let r = run_test(&sample, cfg, &method)?;
                        rows.push(SweepRow {
                            c: cfg.hyper.c,
                            label: label.clone(),
                            n: sample.len(),
                            p_dependent: Percentiles::of(&[r.p_dependent]),
                        });
                    }
                }
                None => {
                    sim.check_sizes()?;
                    let all = [ModelKind::DEPENDENT.as_slice(), &[ModelKind::Independent]].concat();
                    for model in sim.models(&all)? {
                        for cfg in &configs {
                            let s = replicate_experiment(
                                &model,
                                sim.n,
                                sim.reps,
                                cfg,
                                &method,
                                sim.seed,
                                run.workers,
                            )?;
                            rows.push(SweepRow {
                                c: cfg.hyper.c,
                                label: model.kind.as_str().into(),
                                n: sim.n,
                                p_dependent: s.p_dependent,
                            });
                        }
                    }
                }
            }
            out.write(&render_sweep(&rows, out.format())?)?;
        }
    }
    Ok(())
}

/// Parse `args` (including the program name) and run the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.error);
            if f.degenerate_exit {
                EXIT_DEGENERATE
            } else {
                EXIT_INPUT
            }
        }
    }
}
