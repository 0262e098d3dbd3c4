use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mqkd::config::{load_config, OutputFormat};
use mqkd::mac::{max_wdm_channels, SchemeSpec};
use mqkd::mc::{compare, simulate_interferers, simulate_lbs_sensing, McConfig, McMode};
use mqkd::network::WdmParams;
use mqkd::ooc::generate_family;
use mqkd::scenario::{run_scenario, run_sweep, Table};
use mqkd::{Error, Result, SystemParams};

#[derive(Parser)]
#[command(name = "mqkd", version, about = "Key-rate bounds for multiple-access QKD star networks")]
struct Cli {
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Seed for Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Monte Carlo trials.
    #[arg(long, global = true, default_value_t = 100_000)]
    trials: u64,

    /// Evaluate sweep points and trials on all cores. Output is unchanged.
    #[arg(long, global = true)]
    parallel: bool,

    /// Report key bits per frame instead of bits/s.
    #[arg(long, global = true)]
    per_frame: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Keyvalue,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Keyvalue => OutputFormat::KeyValue,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Tdma,
    Cdma,
    Lbs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bernoulli,
    CodeLevel,
    LbsSensing,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce a figure preset: fig5a, fig5b, fig6a, fig6b, fig7, fig8, fig10.
    Scenario { name: String },
    /// Run the sweeps of a configuration file.
    Sweep { config: PathBuf },
    /// Monte Carlo check of the interference model.
    Mc {
        /// Parameter file; defaults to the nominal network.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SchemeArg::Cdma)]
        scheme: SchemeArg,
        /// Code weight (cdma).
        #[arg(long, default_value_t = 1)]
        w: usize,
        /// Listening periods (lbs).
        #[arg(long, default_value_t = 0)]
        k: u64,
        /// Active pairs; defaults to the star size.
        #[arg(long)]
        n_active: Option<usize>,
        /// Defaults to lbs-sensing for lbs and bernoulli otherwise.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Also write the interferer histogram as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Print a generated OOC family, one code per line.
    Codes { n_chips: usize, w: usize, count: usize },
    /// Largest WDM channel count with a positive rate at full load.
    Maxw {
        /// Channel isolation in dB (crosstalk factor 10^(-dB/10)).
        alpha_xt_db: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scheme inside each wavelength: tdma, cdma:<w> or lbs:<k>.
        #[arg(long, default_value = "tdma")]
        inner: String,
        #[arg(long, default_value_t = 64)]
        w_max: usize,
    },
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn params_from(config: Option<&Path>) -> Result<SystemParams> {
    match config {
        Some(p) => Ok(load_config(p)?.0),
        None => Ok(SystemParams::table_one()),
    }
}

fn emit_table(table: &Table, out: &mut dyn Write, format: OutputFormat, per_frame: bool) -> Result<()> {
    for note in &table.notes {
        eprintln!("note: {note}");
    }
    table.write(&mut *out, format, per_frame)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let format: OutputFormat = cli.format.into();
    match cli.command {
        Command::Scenario { name } => {
            let table = run_scenario(&name, cli.parallel)?;
            let mut out = open_output(cli.output.as_deref())?;
            emit_table(&table, &mut out, format, cli.per_frame)?;
            out.flush()?;
        }
        Command::Sweep { config } => {
            let (params, sweeps) = load_config(&config)?;
            if sweeps.is_empty() {
                return Err(Error::Config(format!("{}: no [[sweep]] tables", config.display())));
            }
            let mut shared: Option<Box<dyn Write>> = None;
            for spec in &sweeps {
                let table = run_sweep(&params, spec, cli.parallel)?;
                match &spec.output {
                    Some(path) => {
                        let mut out = open_output(Some(path))?;
                        emit_table(&table, &mut out, spec.format, cli.per_frame)?;
                        out.flush()?;
                    }
                    None => {
                        if shared.is_none() {
                            shared = Some(open_output(cli.output.as_deref())?);
                        }
                        let out = shared.as_mut().expect("opened above");
                        emit_table(&table, out, spec.format, cli.per_frame)?;
                    }
                }
            }
            if let Some(mut out) = shared {
                out.flush()?;
            }
        }
        Command::Mc {
            config,
            scheme,
            w,
            k,
            n_active,
            mode,
            histogram,
        } => {
            let params = params_from(config.as_deref())?;
            let scheme = match scheme {
                SchemeArg::Tdma => SchemeSpec::tdma(),
                SchemeArg::Cdma => SchemeSpec::cdma(w),
                SchemeArg::Lbs => SchemeSpec::lbs(k),
            };
            let mode = mode.unwrap_or(match scheme.kind {
                mqkd::SchemeKind::Lbs { .. } => ModeArg::LbsSensing,
                _ => ModeArg::Bernoulli,
            });
            let n_active = n_active.unwrap_or(params.n_star);
            let mut cfg = McConfig::new(params, scheme, n_active, cli.trials, cli.seed);
            cfg.parallel = cli.parallel;
            let result = match mode {
                ModeArg::Bernoulli => simulate_interferers(&cfg)?,
                ModeArg::CodeLevel => {
                    cfg.mode = McMode::CodeLevel;
                    simulate_interferers(&cfg)?
                }
                ModeArg::LbsSensing => simulate_lbs_sensing(&cfg)?,
            };
            let cmp = compare(&cfg, &result)?;

            let mut out = open_output(cli.output.as_deref())?;
            writeln!(out, "scheme: {scheme}")?;
            writeln!(
                out,
                "mode: {}",
                match mode {
                    ModeArg::Bernoulli => "bernoulli",
                    ModeArg::CodeLevel => "code-level",
                    ModeArg::LbsSensing => "lbs-sensing",
                }
            )?;
            writeln!(out, "seed: {}", cli.seed)?;
            result.write_key_value(&mut out)?;
            cmp.write_key_value(&mut out)?;
            out.flush()?;
            if let Some(path) = histogram {
                let mut h = open_output(Some(&path))?;
                result.write_histogram_csv(&mut h)?;
                h.flush()?;
            }
        }
        Command::Codes { n_chips, w, count } => {
            let family = generate_family(n_chips, w, count)?;
            let mut out = open_output(cli.output.as_deref())?;
            for code in family.codes() {
                writeln!(out, "{code}")?;
            }
            out.flush()?;
        }
        Command::Maxw {
            alpha_xt_db,
            config,
            inner,
            w_max,
        } => {
            let params = params_from(config.as_deref())?;
            let inner: SchemeSpec = inner.parse()?;
            if inner.wdm.is_some() {
                return Err(Error::Config("--inner must not itself be a wdm scheme".into()));
            }
            if w_max < 1 {
                return Err(Error::Config("--w-max must be >= 1".into()));
            }
            let alpha = WdmParams::alpha_from_isolation_db(alpha_xt_db);
            let channels = max_wdm_channels(&params, alpha, &inner, w_max)?;
            let mut out = open_output(cli.output.as_deref())?;
            writeln!(out, "alpha_xt: {}", mqkd::report::sig6(alpha))?;
            writeln!(out, "max_channels: {channels}")?;
            writeln!(out, "total_users: {}", channels * params.n_star)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
