//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgGroup, Parser, ValueEnum};

use crate::formula::parse_formula;
use crate::isotope_data::IsotopeTable;
use crate::oracle::{self, OracleError, OracleLimit};
use crate::peak::Peak;
use crate::tree::{build_tree, select, BuildError, Selection, SelectionRequest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_FORMULA: i32 = 2;
pub const EXIT_ELEMENT: i32 = 3;
pub const EXIT_PARAMS: i32 = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Tsv,
    Csv,
}

impl Format {
    fn separator(self) -> char {
        match self {
            Format::Tsv => '\t',
            Format::Csv => ',',
        }
    }
}

/// Compute the most abundant isotopologue peaks of a chemical formula.
#[derive(Debug, Parser)]
#[command(name = "isotopk", version, about)]
#[command(group(ArgGroup::new("request").required(true).args(["k", "p"])))]
pub struct Args {
    /// Molecular formula, e.g. C16802H26738N4640O5411S121 or (CH3)2O.
    #[arg(long)]
    pub formula: String,
    /// Number of peaks to return.
    #[arg(long)]
    pub k: Option<u64>,
    /// Return the fewest peaks whose probabilities sum to at least this.
    #[arg(long)]
    pub p: Option<f64>,
    /// Layer growth rate.
    #[arg(long, default_value_t = 1.05)]
    pub alpha: f64,
    /// Isotope table file (`<Symbol> <mass> <abundance>` per line).
    #[arg(long)]
    pub isotopes: Option<PathBuf>,
    /// Sort rows by descending probability.
    #[arg(long)]
    pub sorted: bool,
    /// Write rows here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
    /// Report generation time on standard error.
    #[arg(long)]
    pub time: bool,
    /// Use brute-force enumeration (small compounds only).
    #[arg(long)]
    pub oracle: bool,
    /// Print base-10 log-probabilities.
    #[arg(long)]
    pub log10: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub formula: String,
    pub request: SelectionRequest,
    pub alpha: f64,
    pub isotopes: Option<PathBuf>,
    pub sorted: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub time: bool,
    pub oracle: bool,
    pub log10: bool,
}

impl RunConfig {
    pub fn from_args(args: Args) -> Result<RunConfig, String> {
        let request = match (args.k, args.p) {
            (Some(0), _) => return Err("--k must be at least 1".into()),
            (Some(k), None) => SelectionRequest::TopK(k),
            (None, Some(p)) if p > 0.0 && p < 1.0 => SelectionRequest::CumulativeTarget(p),
            (None, Some(p)) => return Err(format!("--p must be in (0, 1), got {p}")),
            _ => return Err("exactly one of --k and --p is required".into()),
        };
        if !(args.alpha.is_finite() && args.alpha >= 1.0) {
            return Err(format!("--alpha must be >= 1, got {}", args.alpha));
        }
        Ok(RunConfig {
            formula: args.formula,
            request,
            alpha: args.alpha,
            isotopes: args.isotopes,
            sorted: args.sorted,
            output: args.output,
            format: args.format,
            time: args.time,
            oracle: args.oracle,
            log10: args.log10,
        })
    }
}

/// Formats `x` with 17 significant digits, in plain notation for moderate
/// magnitudes and scientific notation otherwise. The text parses back to the
/// same double.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        format!("{x:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

/// Parses and validates command-line arguments, runs, and returns the exit
/// code.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FORMULA } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
            } else {
                let _ = write!(stdout, "{e}");
            }
            return code;
        }
    };
    match RunConfig::from_args(args) {
        Ok(config) => run(&config, stdout, stderr),
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_PARAMS
        }
    }
}

pub fn run(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(config, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err((code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

type Failure = (i32, String);

fn execute(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let comp = parse_formula(&config.formula).map_err(|e| (EXIT_FORMULA, e.to_string()))?;
    let custom;
    let table = match &config.isotopes {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (EXIT_ELEMENT, format!("{}: {e}", path.display())))?;
            custom = IsotopeTable::parse(&text)
                .map_err(|e| (EXIT_ELEMENT, format!("{}: {e}", path.display())))?;
            &custom
        }
        None => IsotopeTable::load_default(),
    };

    let start = Instant::now();
    let selection = if config.oracle {
        oracle_selection(&comp, table, config.request)?
    } else {
        let mut root = build_tree(&comp, table, config.alpha).map_err(|e| match e {
            BuildError::InvalidAlpha(_) => (EXIT_PARAMS, e.to_string()),
            _ => (EXIT_ELEMENT, e.to_string()),
        })?;
        select(&mut root, config.request)
    };
    let elapsed = start.elapsed();

    if selection.exhausted {
        if let SelectionRequest::TopK(k) = config.request {
            let _ = writeln!(
                stderr,
                "warning: requested {k} peaks but {} has only {}",
                config.formula,
                selection.peaks.len()
            );
        }
    }
    if config.time {
        let _ = writeln!(stderr, "selection_time_s\t{:.9}", elapsed.as_secs_f64());
    }

    let mut peaks = selection.peaks;
    if config.sorted {
        peaks.sort_by(|a, b| b.cmp_logp(a).then(a.mass.total_cmp(&b.mass)));
    }
    let written = match &config.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            write_peaks(&mut w, &peaks, config)?;
            w.flush()
        }),
        None => {
            let mut w = BufWriter::new(stdout);
            write_peaks(&mut w, &peaks, config).and_then(|_| w.flush())
        }
    };
    written.map_err(|e| (EXIT_IO, format!("writing output: {e}")))
}

fn oracle_selection(
    comp: &crate::formula::Composition,
    table: &IsotopeTable,
    request: SelectionRequest,
) -> Result<Selection, Failure> {
    let map_err = |e: OracleError| match e {
        OracleError::UnknownElement(_) => (EXIT_ELEMENT, e.to_string()),
        OracleError::LimitExceeded { .. } => (EXIT_PARAMS, e.to_string()),
    };
    let limit = OracleLimit::default();
    match request {
        SelectionRequest::TopK(k) => {
            let k = usize::try_from(k).unwrap_or(usize::MAX);
            let peaks = oracle::top_k_reference(comp, table, k, limit).map_err(map_err)?;
            Ok(Selection {
                exhausted: peaks.len() < k,
                peaks,
            })
        }
        SelectionRequest::CumulativeTarget(p) => Ok(Selection {
            peaks: oracle::cumulative_reference(comp, table, p, limit).map_err(map_err)?,
            exhausted: false,
        }),
    }
}

/// Writes the header and one row per peak.
pub fn write_peaks<W: Write>(w: &mut W, peaks: &[Peak], config: &RunConfig) -> io::Result<()> {
    let sep = config.format.separator();
    let log_col = if config.log10 { "log10_prob" } else { "log_prob" };
    writeln!(w, "mass{sep}{log_col}{sep}prob")?;
    for peak in peaks {
        let log = if config.log10 {
            peak.logp / std::f64::consts::LN_10
        } else {
            peak.logp
        };
        writeln!(
            w,
            "{}{sep}{}{sep}{}",
            format_sig17(peak.mass),
            format_sig17(log),
            format_sig17(peak.prob())
        )?;
    }
    Ok(())
}
