//! `krphase` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric tolerance failure,
//! 4 I/O error.

// `!(a > b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "krphase", version, about = "Kirkwood-Rihaczek phase-space distributions and a two-LO heterodyne simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// `key = value` configuration file (a manifest is also accepted).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set lo.a=0.0425`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, env = "KRPHASE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Format of grid and field outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Binary)]
    pub format: Format,
    /// Field preset: gaussian, wire or custom.
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// dimensionless or millimeters.
    #[arg(long, global = true)]
    pub units: Option<String>,
    /// Field grid points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Sets `lo.a = waist/r` and `lo.A = waist·r`.
    #[arg(long = "lo-ratio", global = true, value_name = "R")]
    pub lo_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Binary => "bin",
            Format::Csv => "csv",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Wigner function from the KR grid.
    Wigner,
    /// Wigner function straight from the field.
    DirectWigner,
    /// KR (unconjugated).
    Kr,
    CharKr,
    CharW,
    Q,
    P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Overlap integrals only.
    Ideal,
    /// Full time-domain detection and lock-in chain.
    Timedomain,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the scenario field.
    Field,
    /// Compute K* from a field.
    Kr {
        /// Field file; the configured scenario when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also write the unconjugated KR grid.
        #[arg(long)]
        with_kr: bool,
    },
    /// Convert K* to another distribution.
    Transform {
        #[arg(long, value_enum)]
        to: Target,
        /// K* grid; `kr_conj.<ext>` in the output directory when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Position and momentum marginals of a grid.
    Marginals {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Simulate the two-LO heterodyne scan.
    Heterodyne {
        #[arg(long, value_enum, default_value_t = Mode::Ideal)]
        mode: Mode,
        /// Also report a resolution sweep over these factors.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<f64>,
    },
    /// Fit a Gaussian to a two-column CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Fail (exit 3) if the reported width is below this.
        #[arg(long)]
        min_width: Option<f64>,
        /// Fail (exit 3) if the reported width is above this.
        #[arg(long)]
        max_width: Option<f64>,
    },
    /// Compare a grid with a reference and check tolerances.
    Compare {
        /// Grid to check. Defaults to `wigner.<ext>` for `direct-wigner` and
        /// `heterodyne_ideal.<ext>` for `kr`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// `direct-wigner`, `kr` (both rebuilt from the input's manifest) or a grid file.
        #[arg(long)]
        against: String,
        #[arg(long)]
        max_linf: Option<f64>,
        #[arg(long)]
        max_rel_l2: Option<f64>,
        #[arg(long)]
        min_corr: Option<f64>,
    },
    /// Emit plot data and a gnuplot script.
    Plot {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let result = match &cli.command {
        Command::Field => commands::field(c),
        Command::Kr { input, with_kr } => commands::kr(c, input.as_deref(), *with_kr),
        Command::Transform { to, input } => commands::transform(c, *to, input.as_deref()),
        Command::Marginals { input } => commands::marginals(c, input.as_deref()),
        Command::Heterodyne { mode, sweep } => commands::heterodyne(c, *mode, sweep),
        Command::Fit {
            input,
            min_width,
            max_width,
        } => commands::fit(c, input, *min_width, *max_width),
        Command::Compare {
            input,
            against,
            max_linf,
            max_rel_l2,
            min_corr,
        } => commands::compare(
            c,
            input.as_deref(),
            against,
            commands::Thresholds {
                max_linf: *max_linf,
                max_rel_l2: *max_rel_l2,
                min_corr: *min_corr,
            },
        ),
        Command::Plot { input } => plot::plot(c, input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("krphase: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
