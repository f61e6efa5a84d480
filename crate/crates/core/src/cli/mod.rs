//! The `loadbal` command-line tool.
//!
//! Exit status is 0 on success, 1 for usage and configuration errors and 2
//! for unusable input data.

pub mod config;
pub mod csvio;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::distribution::{diffusive_balance, edge_cut, refine_partition, sfc_partition, CurveKind, WeightMap};
use crate::error::{Error, Result};
use crate::estimator::{
    fit_coefficients, fraction_within, relative_errors, summary_stats, EstimatorCoefficients, Part, TimingSample,
};
use crate::grid::{Assignment, BlockGrid};
use crate::metrics::{load_imbalance, process_loads};
use crate::replay::{replay, summarize, ReplaySummary, Strategy};
use crate::scenario::{build_preset, quantity_trace, synthesize_timings, unclamped};

use config::{CoefficientsFile, ErrorSummary, Overrides, Quality, RunConfig};
use csvio::ReportRow;

#[derive(Debug, Parser)]
#[command(name = "loadbal", version, about = "Block workload estimation and load distribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit workload coefficients to a timing-sample CSV.
    Calibrate {
        samples: PathBuf,
        /// Coefficient file to write (TOML).
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a scenario under a balancing strategy and write a report CSV.
    Replay {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        interval: Option<u64>,
    },
    /// Partition a grid once from a block-weight CSV.
    Partition {
        weights: PathBuf,
        /// Blocks per axis, e.g. "4,4,5".
        #[arg(long, value_parser = parse_dims)]
        dims: [usize; 3],
        #[arg(long)]
        block_size: usize,
        #[arg(long)]
        procs: usize,
        #[arg(long, default_value = "hilbert")]
        strategy: String,
        #[arg(long, default_value_t = crate::distribution::DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Assignment CSV to write; printed to stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare report CSVs of the same scenario.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
    /// Write a timing-sample CSV synthesized from a scenario.
    Synthesize {
        #[arg(long, default_value = "settling-box")]
        preset: String,
        #[arg(long, default_value_t = 0.5)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        block_size: Option<usize>,
        #[arg(long)]
        diameter: Option<f64>,
        #[arg(long)]
        steps: Option<u64>,
        /// Steps between snapshots.
        #[arg(long, default_value_t = 100)]
        every: u64,
        /// Relative standard deviation of the multiplicative noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        /// Coefficient file used as ground truth instead of the built-in table.
        #[arg(long)]
        coefficients: Option<PathBuf>,
        /// Drop blocks where some part would be clamped at zero.
        #[arg(long)]
        unclamped_only: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated counts, got '{s}'"));
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("not a block count: '{p}'"))?;
    }
    Ok(out)
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match command {
        Command::Calibrate { samples, output } => {
            let q = cmd_calibrate(&samples, &output)?;
            writeln!(out, "fitted {} samples -> {}", q.samples, output.display()).map_err(io)?;
            for (name, s) in q.parts() {
                writeln!(out, "  {name:<6} median {:+.4}  MAD {:.4}", s.median, s.mad).map_err(io)?;
            }
            writeln!(
                out,
                "samples with |E_tot| < 0.10: {:.1}%",
                100.0 * q.fraction_within_10_percent
            )
            .map_err(io)?;
        }
        Command::Replay {
            config,
            seed,
            steps,
            strategy,
            interval,
        } => {
            let overrides = Overrides {
                seed,
                steps,
                strategy,
                interval,
            };
            let s = cmd_replay(&config, &overrides)?;
            write!(out, "{}", summary_text(&s)).map_err(io)?;
        }
        Command::Partition {
            weights,
            dims,
            block_size,
            procs,
            strategy,
            tolerance,
            output,
        } => {
            let strategy: Strategy = strategy.parse()?;
            let grid = BlockGrid::new(dims, block_size)?;
            let p = cmd_partition(&weights, &grid, procs, strategy, tolerance)?;
            let csv = csvio::render_assignment_csv(&grid, &p.assignment);
            match &output {
                Some(path) => csvio::write_file(path, &csv)?,
                None => out.write_all(&csv).map_err(io)?,
            }
            let loads: Vec<String> = p.loads.iter().map(|l| format!("{l}")).collect();
            writeln!(out, "loads: [{}]", loads.join(", ")).map_err(io)?;
            writeln!(out, "LI: {}", p.load_imbalance).map_err(io)?;
            writeln!(out, "edge cut: {}", p.edge_cut).map_err(io)?;
        }
        Command::Report { reports } => {
            let lines = cmd_report(&reports)?;
            write!(out, "{}", report_table(&lines)).map_err(io)?;
        }
        Command::Synthesize {
            preset,
            scale,
            seed,
            block_size,
            diameter,
            steps,
            every,
            noise,
            noise_seed,
            coefficients,
            unclamped_only,
            output,
        } => {
            let mut scenario = build_preset(&preset, scale, block_size, diameter)?;
            scenario.seed = seed;
            if let Some(s) = steps {
                scenario.duration = s;
            }
            let truth = match coefficients {
                Some(p) => config::read_coefficients_file(&p)?,
                None => EstimatorCoefficients::reference_profile(),
            };
            let trace = quantity_trace(&scenario, every)?;
            let mut samples = synthesize_timings(&trace, &truth, noise, noise_seed)?;
            if unclamped_only {
                samples.retain(|s| unclamped(&s.quantities, &truth));
            }
            csvio::write_file(&output, &csvio::render_timing_csv(&samples))?;
            writeln!(out, "wrote {} samples to {}", samples.len(), output.display()).map_err(io)?;
        }
    }
    Ok(())
}

impl Quality {
    pub fn parts(&self) -> [(&'static str, ErrorSummary); 6] {
        [
            ("lbm", self.lbm),
            ("bh", self.bh),
            ("coup1", self.coup1),
            ("coup2", self.coup2),
            ("rb", self.rb),
            ("total", self.total),
        ]
    }
}

/// Fit quality of `c` on `samples`.
pub fn fit_quality(samples: &[TimingSample], c: &EstimatorCoefficients) -> Result<Quality> {
    let e = relative_errors(samples, c)?;
    let summary = |v: &[f64]| -> Result<ErrorSummary> {
        let (median, mad) = summary_stats(v)?;
        Ok(ErrorSummary { median, mad })
    };
    Ok(Quality {
        samples: samples.len(),
        fraction_within_10_percent: fraction_within(&e.total, 0.10),
        lbm: summary(e.part(Part::Lbm))?,
        bh: summary(e.part(Part::Bh))?,
        coup1: summary(e.part(Part::Coup1))?,
        coup2: summary(e.part(Part::Coup2))?,
        rb: summary(e.part(Part::Rb))?,
        total: summary(&e.total)?,
    })
}

/// Fits coefficients to a timing CSV and writes them, with fit quality, to
/// `output`.
pub fn cmd_calibrate(samples_path: &Path, output: &Path) -> Result<Quality> {
    let samples = csvio::read_timing_csv(samples_path)?;
    let data_err = |e: Error| match e {
        Error::InvalidArgument(m) => Error::Data(format!("{}: {m}", samples_path.display())),
        other => other,
    };
    let coefficients = fit_coefficients(&samples).map_err(data_err)?;
    let quality = fit_quality(&samples, &coefficients).map_err(data_err)?;
    let file = CoefficientsFile {
        coefficients,
        quality: Some(quality.clone()),
    };
    let text = toml::to_string(&file).expect("coefficient file serializes");
    csvio::write_file(output, text.as_bytes())?;
    Ok(quality)
}

/// Runs the configured replay, writes the report CSV (and the summary, if
/// configured) and returns the summary.
pub fn cmd_replay(config_path: &Path, overrides: &Overrides) -> Result<ReplaySummary> {
    let cfg = RunConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let run = cfg.resolve(base, overrides)?;
    let reports = replay(&run.scenario, run.strategy, &run.options)?;
    csvio::write_file(&run.report, &csvio::render_report_csv(&reports))?;
    let summary = summarize(&reports)?;
    if let Some(p) = &run.summary {
        csvio::write_file(p, summary_text(&summary).as_bytes())?;
    }
    Ok(summary)
}

pub fn summary_text(s: &ReplaySummary) -> String {
    format!(
        "strategy = \"{}\"\nintervals = {}\nmean_load_imbalance = {}\nmedian_load_imbalance = {}\n\
         makespan_ms = {}\nmean_edge_cut = {}\n",
        s.strategy, s.intervals, s.mean_load_imbalance, s.median_load_imbalance, s.makespan, s.mean_edge_cut
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOutcome {
    pub assignment: Assignment,
    pub loads: Vec<f64>,
    pub load_imbalance: f64,
    pub edge_cut: u64,
}

/// Partitions `grid` once from a weight CSV. `none` yields the uniform-weight
/// Hilbert partition; `diffusive` starts from it.
pub fn cmd_partition(
    weights_path: &Path,
    grid: &BlockGrid,
    n_procs: usize,
    strategy: Strategy,
    tolerance: f64,
) -> Result<PartitionOutcome> {
    let weights = csvio::read_weights_csv(weights_path, grid)?;
    if n_procs == 0 || n_procs > grid.len() {
        return Err(Error::invalid(format!(
            "cannot spread {} blocks over {n_procs} processes",
            grid.len()
        )));
    }
    let uniform = || sfc_partition(grid, &WeightMap::uniform(grid), n_procs, CurveKind::Hilbert);
    let assignment = match strategy {
        Strategy::None => uniform()?,
        Strategy::Morton => sfc_partition(grid, &weights, n_procs, CurveKind::Morton)?,
        Strategy::Hilbert => sfc_partition(grid, &weights, n_procs, CurveKind::Hilbert)?,
        Strategy::Diffusive => diffusive_balance(grid, &weights, &uniform()?, 100)?.0,
        Strategy::Refine => {
            let start = sfc_partition(grid, &weights, n_procs, CurveKind::Hilbert)?;
            refine_partition(grid, &weights, &start, tolerance)?
        }
    };
    let loads = process_loads(grid, &assignment, &weights)?;
    Ok(PartitionOutcome {
        load_imbalance: load_imbalance(&loads)?,
        edge_cut: edge_cut(grid, &assignment)?,
        assignment,
        loads,
    })
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportLine {
    pub path: PathBuf,
    pub strategy: String,
    pub intervals: usize,
    pub mean_load_imbalance: f64,
    pub median_load_imbalance: f64,
    pub makespan: f64,
    /// Makespan as a percentage of the first report's.
    pub relative_makespan: f64,
    pub mean_edge_cut: f64,
}

const TOTAL_LOAD_RTOL: f64 = 1e-6;

/// Compares reports of the same scenario. Reports are comparable when they
/// cover the same steps with the same process count and distribute the same
/// total load at every step.
pub fn cmd_report(paths: &[PathBuf]) -> Result<Vec<ReportLine>> {
    if paths.is_empty() {
        return Err(Error::invalid("no report files given"));
    }
    let all: Vec<Vec<ReportRow>> = paths.iter().map(|p| csvio::read_report_csv(p)).collect::<Result<_>>()?;
    let first = &all[0];
    for (path, rows) in paths.iter().zip(&all).skip(1) {
        let same = rows.len() == first.len()
            && rows.iter().zip(first).all(|(a, b)| {
                a.step == b.step
                    && a.n_procs == b.n_procs
                    && (a.total_load - b.total_load).abs() <= TOTAL_LOAD_RTOL * b.total_load.abs().max(f64::MIN_POSITIVE)
            });
        if !same {
            return Err(Error::Data(format!(
                "incomparable reports: {} and {} differ in steps, process count or total load",
                paths[0].display(),
                path.display()
            )));
        }
    }
    let makespan = |rows: &[ReportRow]| rows.iter().map(|r| r.max_load).sum::<f64>();
    let base = makespan(first);
    paths
        .iter()
        .zip(&all)
        .map(|(path, rows)| {
            let li: Vec<f64> = rows.iter().map(|r| r.load_imbalance).collect();
            let n = rows.len() as f64;
            let m = makespan(rows);
            Ok(ReportLine {
                path: path.clone(),
                strategy: rows[0].strategy.clone(),
                intervals: rows.len(),
                mean_load_imbalance: li.iter().sum::<f64>() / n,
                median_load_imbalance: summary_stats(&li)?.0,
                makespan: m,
                relative_makespan: if base > 0.0 { 100.0 * m / base } else { 100.0 },
                mean_edge_cut: rows.iter().map(|r| r.edge_cut as f64).sum::<f64>() / n,
            })
        })
        .collect()
}

pub fn report_table(lines: &[ReportLine]) -> String {
    let mut s = format!(
        "{:<12} {:>9} {:>9} {:>9} {:>13} {:>9} {:>12}  file\n",
        "strategy", "intervals", "mean LI", "median LI", "makespan ms", "relative", "mean cut"
    );
    for l in lines {
        s += &format!(
            "{:<12} {:>9} {:>9.4} {:>9.4} {:>13.3} {:>8.1}% {:>12.1}  {}\n",
            l.strategy,
            l.intervals,
            l.mean_load_imbalance,
            l.median_load_imbalance,
            l.makespan,
            l.relative_makespan,
            l.mean_edge_cut,
            l.path.display()
        );
    }
    s
}
