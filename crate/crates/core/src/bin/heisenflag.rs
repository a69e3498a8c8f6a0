use clap::{Args, Parser, Subcommand};
use heisenflag::cli::{
    diagnostic, exit_code, field_info, field_norms, field_slice_csv, run_experiment, run_field_gen, ExperimentConfig,
    FieldKind, Overrides,
};
use heisenflag::{Error, GridField, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "heisenflag", version, about = "Flag Hardy space experiments on a discretized Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eight Hardy-norm functionals over a corpus, with pairwise ratios.
    Equivalence(Common),
    /// Growth of the radial maximal norm of the witness in the t-extent.
    ProperSubspace(Common),
    /// Weighted kernel against Sobolev norms, plus a tail budget for one particle.
    Multiplier(Common),
    /// Generate, inspect and convert field files.
    Field {
        #[command(subcommand)]
        action: FieldCmd,
    },
}

#[derive(Subcommand)]
enum FieldCmd {
    /// Write a named test field.
    Gen {
        #[command(flatten)]
        common: Common,
        /// zero, gaussian, particle, witness, random or indicator; overrides `params.kind`.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Print the header and summary statistics.
    Info {
        #[arg(long)]
        input: PathBuf,
    },
    /// Print L1, L2 and Linf norms, and optionally an Lp norm.
    Norm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Write the z-slice nearest a given t as CSV.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    cfg.apply(&Overrides { out_dir: c.out.clone(), seed: c.seed, threads: c.threads });
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn batch(c: &Common, expected: &str) -> Result<()> {
    let cfg = load(c)?;
    if cfg.experiment != expected {
        return Err(Error::Config(format!("config is for '{}', not '{expected}'", cfg.experiment)));
    }
    for p in run_experiment(&cfg)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn read_field(p: &Path) -> Result<GridField> {
    if !p.is_file() {
        return Err(Error::Config(format!("input file {} does not exist", p.display())));
    }
    GridField::read_hfld(p)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Equivalence(c) => batch(&c, "equivalence"),
        Cmd::ProperSubspace(c) => batch(&c, "proper_subspace"),
        Cmd::Multiplier(c) => batch(&c, "multiplier"),
        Cmd::Field { action } => match action {
            FieldCmd::Gen { common, kind } => {
                let cfg = load(&common)?;
                let kind = kind.map(|k| k.parse::<FieldKind>()).transpose()?;
                println!("{}", run_field_gen(&cfg, kind)?.display());
                Ok(())
            }
            FieldCmd::Info { input } => {
                println!("{}", serde_json::to_string_pretty(&field_info(&read_field(&input)?))?);
                Ok(())
            }
            FieldCmd::Norm { input, p } => {
                println!("{}", serde_json::to_string_pretty(&field_norms(&read_field(&input)?, p)?)?);
                Ok(())
            }
            FieldCmd::Convert { input, t, out } => {
                let csv = field_slice_csv(&read_field(&input)?, t)?;
                match out {
                    Some(p) => std::fs::write(p, csv)?,
                    None => print!("{csv}"),
                }
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            if code == 3 {
                eprintln!("{}", diagnostic(&e));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(code as u8)
        }
    }
}
