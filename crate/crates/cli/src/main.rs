use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use sdap::config::Layout;
use sdap::harness::{
    activation_heatmap, bruteforce, exit_code, run_single, run_sweep, validate, RunOptions, SweepSpec, SweepVar,
    EXIT_OK, EXIT_VALIDATION,
};
use sdap::precoder::Variant;
use sdap::{Error, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "sdap", version, about = "Secure precoding with distributed-antenna selection")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Monte Carlo draws per solution; 0 skips the Monte Carlo report.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Comma-separated variants, e.g. `imperfect-prob,unknown-det`.
    #[arg(long, value_delimiter = ',', default_value = "imperfect-prob")]
    variant: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write solution, summary, trace, Monte Carlo and constellation CSVs.
    Run {
        #[command(flatten)]
        common: Common,
        /// Keep every antenna on.
        #[arg(long)]
        no_as: bool,
    },
    /// Sweep one parameter over several trials and write per-trial and summary CSVs.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// gamma_d_db, gamma_k_db, edge_fraction, n_eves or sigma_e.
        #[arg(long)]
        var: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Comma-separated layouts: da_grid, ca_center.
        #[arg(long, value_delimiter = ',', default_value = "da_grid")]
        layouts: Vec<String>,
        #[arg(long)]
        no_as: bool,
    },
    /// Per-antenna activation frequency over random user placements.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Run the invariant checks and exit nonzero on any failure.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate every antenna selection of one instance (N <= 12).
    Bruteforce {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::from_file(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn variants(common: &Common) -> Result<Vec<Variant>> {
    common.variant.iter().map(|s| s.trim().parse()).collect()
}

fn single_variant(common: &Common) -> Result<Variant> {
    match variants(common)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(Error::Config("this subcommand takes exactly one --variant".into())),
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<i32> {
    let start = Instant::now();
    let code = match cli.cmd {
        Command::Run { common, no_as } => {
            let cfg = load(&common)?;
            let opts =
                RunOptions { variant: single_variant(&common)?, samples: common.samples, no_as, ..Default::default() };
            let out = run_single(&cfg, &opts, &common.out_dir)?;
            let s = &out.solution;
            println!(
                "{} {}: total {:.3} mW (tx {:.3}, circuit {:.3}), {} of {} antennas on, {} iterations",
                opts.variant,
                out.status.as_str(),
                s.power.total_mw,
                s.power.tx_mw,
                s.power.circuit_mw,
                s.selection.active(),
                s.n(),
                s.iterations
            );
            if let Some(r) = &out.report {
                println!("IR constructive rate {:.4} over {} draws", r.ir_ci_prob, r.n_samples);
            }
            print_files(&out.files);
            EXIT_OK
        }
        Command::Sweep { common, var, values, trials, layouts, no_as } => {
            let cfg = load(&common)?;
            let layouts = layouts
                .iter()
                .map(|l| l.parse::<Layout>().map_err(Error::Config))
                .collect::<Result<Vec<_>>>()?;
            let spec = SweepSpec {
                sweep_var: var.parse::<SweepVar>()?,
                values,
                n_trials: trials,
                variants: variants(&common)?,
                layouts,
                no_as,
                samples: common.samples,
            };
            let (_, summary, files) = run_sweep(&cfg, &spec, Some(&common.out_dir))?;
            for s in &summary {
                println!(
                    "{} = {}  {:<9} {:<14} solved {}/{}  mean total {:.3} mW",
                    spec.sweep_var,
                    s.value,
                    s.layout,
                    s.variant,
                    s.n_solved,
                    s.n_trials,
                    s.stats[0].0
                );
            }
            print_files(&files);
            EXIT_OK
        }
        Command::Heatmap { common, trials } => {
            let cfg = load(&common)?;
            let (rows, solved, files) =
                activation_heatmap(&cfg, single_variant(&common)?, trials, Some(&common.out_dir))?;
            println!("{solved} of {trials} placements solved");
            for r in &rows {
                println!("antenna {:>2} ({:>5.1}, {:>5.1})  on {:.3}", r.antenna, r.x_m, r.y_m, r.activation);
            }
            print_files(&files);
            EXIT_OK
        }
        Command::Validate { common } => {
            let cfg = load(&common)?;
            let report = validate(&cfg, &variants(&common)?, common.samples)?;
            print!("{}", report.table());
            if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
        Command::Bruteforce { common } => {
            let cfg = load(&common)?;
            let opts = RunOptions { variant: single_variant(&common)?, ..Default::default() };
            let out = bruteforce(&cfg, &opts, &common.out_dir)?;
            let r = &out.result;
            println!("{} of {} selections feasible", r.feasible_count(), r.table.len());
            match &r.best_t {
                Some(t) => {
                    let bits: String = t.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    println!("best selection {bits}: {:.4} mW", r.best_total_mw);
                }
                None => println!("no feasible selection"),
            }
            if let Some(s) = out.sca_total_mw {
                println!("selection loop: {s:.4} mW");
            }
            print_files(&out.files);
            EXIT_OK
        }
    };
    eprintln!("elapsed {:.2} s", start.elapsed().as_secs_f64());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
