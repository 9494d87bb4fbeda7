//! Command-line entry points. Every command delegates to the library and
//! writes its result to `--out` or standard output.
//!
//! Exit status: 0 on success, 1 on I/O failure, 2 on validation,
//! conditioning or density errors, 3 on parse errors (including bad
//! arguments).

pub mod formats;

use crate::error::{Error, Result};
use crate::fit::{evaluate_model, interpolate, least_squares_from_samples, tikhonov_fit};
use crate::kernels::{kernel_cheb_coeff, KernelOrder};
use crate::localize::{convergence_study, verify_ckc, CoefficientKernel, ConvergenceTable, RadiusRule};
use crate::rotations::{haar_quadrature, point_set_stats, sample_points, SamplingMode, DEFAULT_PROBES_PER_POINT};
use crate::wigner::{FourierCoefficients, WignerIndex, C64};
use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "so3spline", version, about = "Surface splines on the rotation group SO(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chebyshev coefficients k̃_m(ℓ) of the surface spline, as CSV.
    Coeffs {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        lmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a model to a dataset: interpolation by default.
    Fit {
        #[arg(long)]
        m: u32,
        /// Tikhonov smoothing parameter λ > 0.
        #[arg(long, conflicts_with = "lsq")]
        lambda: Option<f64>,
        /// Least-squares fit on quasi-uniform centers, with equal data weights.
        #[arg(long)]
        lsq: bool,
        /// Number of centers for --lsq; defaults to a quarter of the records.
        #[arg(long, requires = "lsq")]
        centers: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved model at the rotations of a points file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the coefficient kernel conditions on the dataset's rotations.
    Validate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "L")]
        precision: usize,
        /// Radius; defaults to the calibrated rule c·L²·h.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence study of T_Ξ on nested quasi-uniform levels, as CSV.
    Convergence {
        #[arg(long)]
        m: u32,
        #[arg(long = "L")]
        precision: usize,
        #[arg(long)]
        levels: usize,
        /// Size of the finest level; coarser levels shrink it geometrically so
        /// the fill distance halves from the first level to the last.
        #[arg(long, default_value_t = 2000)]
        max_centers: usize,
        /// Degree ℓ of the target character 𝔠_ℓ.
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Exactness degree of the product rule used for A_ξ and the L₂ error.
        #[arg(long, default_value_t = 30)]
        rule: usize,
        #[arg(long, default_value_t = 1000)]
        probes: usize,
        /// Radius constant c in ρ = c·L²·h; defaults to the calibrated value.
        #[arg(long)]
        radius_constant: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// `h`-halving level sizes: `max·8^{−(levels−1−i)/(levels−1)}`.
pub fn level_sizes(levels: usize, max_centers: usize) -> Vec<usize> {
    (0..levels)
        .map(|i| {
            let e = (levels - 1 - i) as f64 / (levels - 1).max(1) as f64;
            (max_centers as f64 / 8f64.powf(e)).round() as usize
        })
        .collect()
}

/// The character `𝔠_ℓ = Σ_k D^ℓ_{k,k}` as symmetric-normalized coefficients.
pub fn character_coefficients(degree: usize) -> Result<FourierCoefficients> {
    let mut f = FourierCoefficients::zeros(degree);
    let v = C64::new(1.0 / ((2 * degree + 1) as f64).sqrt(), 0.0);
    for k in -(degree as i64)..=degree as i64 {
        f.set(WignerIndex::new(degree, k, k)?, v);
    }
    Ok(f)
}

fn order(m: u32) -> Result<KernelOrder> {
    KernelOrder::new(m)
}

pub fn coeffs_csv(m: u32, lmax: usize) -> Result<String> {
    let order = order(m)?;
    let mut out = String::from("l,coefficient\n");
    for l in 0..=lmax {
        let _ = writeln!(out, "{l},{}", kernel_cheb_coeff(order, l));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn convergence_table(
    m: u32,
    precision: usize,
    levels: usize,
    max_centers: usize,
    degree: usize,
    rule: usize,
    probes: usize,
    radius_rule: RadiusRule,
    seed: u64,
) -> Result<ConvergenceTable> {
    let order = order(m)?;
    let sizes = level_sizes(levels, max_centers);
    let base = sample_points(max_centers, SamplingMode::QuasiUniform, seed)?;
    let sets = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| base.prefix(n, DEFAULT_PROBES_PER_POINT * n, seed.wrapping_add(i as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;
    let f = character_coefficients(degree)?;
    convergence_study(order, precision, &f, &sets, &haar_quadrature(rule), radius_rule, probes, seed)
}

fn execute(command: Command) -> Result<(String, Option<PathBuf>, Option<String>)> {
    match command {
        Command::Coeffs { m, lmax, out } => Ok((coeffs_csv(m, lmax)?, out, None)),
        Command::Fit {
            m,
            lambda,
            lsq,
            centers,
            seed,
            data,
            out,
        } => {
            let order = order(m)?;
            let dataset = formats::load_dataset(&data)?;
            let model = if lsq {
                let count = centers.unwrap_or((dataset.len() / 4).max(2));
                let set = sample_points(count, SamplingMode::QuasiUniform, seed)?;
                let w = vec![1.0 / dataset.len() as f64; dataset.len()];
                least_squares_from_samples(set.points(), order, dataset.rotations(), &w, dataset.values())?
            } else if let Some(lambda) = lambda {
                tikhonov_fit(dataset.rotations(), dataset.values(), lambda, order)?
            } else {
                interpolate(dataset.rotations(), dataset.values(), order)?
            };
            Ok((formats::model_to_json(&model), out, None))
        }
        Command::Eval { model, points, out } => {
            let model = formats::load_model(&model)?;
            let values: Vec<C64> = formats::load_points(&points)?
                .iter()
                .map(|x| evaluate_model(&model, x))
                .collect();
            Ok((formats::values_to_json(&values), out, None))
        }
        Command::Validate {
            data,
            precision,
            rho,
            probes,
            seed,
            out,
        } => {
            let dataset = formats::load_dataset(&data)?;
            let n = dataset.len();
            let set = point_set_stats(dataset.rotations().to_vec(), DEFAULT_PROBES_PER_POINT * n, seed)?;
            let radius = rho.unwrap_or_else(|| RadiusRule::calibrated().radius(precision, set.fill_distance()));
            let kernel = CoefficientKernel::new(&set, precision, radius)?;
            let report = verify_ckc(&kernel, probes, seed);
            let warning = (!report.passes()).then(|| {
                format!(
                    "coefficient kernel conditions violated: {} density failures, precision residual {:e}, support violation {:e}",
                    report.density_failures, report.max_precision_residual, report.max_support_violation
                )
            });
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            Ok((json, out, warning))
        }
        Command::Convergence {
            m,
            precision,
            levels,
            max_centers,
            degree,
            rule,
            probes,
            radius_constant,
            seed,
            out,
        } => {
            let radius_rule = radius_constant.map(RadiusRule::new).transpose()?.unwrap_or_default();
            let table = convergence_table(m, precision, levels, max_centers, degree, rule, probes, radius_rule, seed)?;
            Ok((table.to_csv(), out, None))
        }
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => formats::write(path, text),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status. Results go to `stdout` unless `--out` is given.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = execute(cli.command).and_then(|(text, out, warning)| {
        emit(&text, out.as_deref(), stdout)?;
        Ok(warning)
    });
    match result {
        Ok(None) => 0,
        Ok(Some(warning)) => {
            let _ = writeln!(stderr, "error: {warning}");
            2
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
