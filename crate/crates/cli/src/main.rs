//! `iplc`: compile, run, explore and serve intensional programs.

mod demo;
mod program;
mod repl;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use iplc_core::gee::{Eductive, ProcedureRegistry, Warehouse, ROOT_SUBJECT};
use iplc_core::Context;
use iplc_tiers::net::TcpNetwork;
use iplc_tiers::{Address, Client, TierKind};

use crate::program::{deadline_override, eval_failure, load, parse_ctx, tier_failure, Failure};

/// Stack for evaluation threads; deep recursion is common in eduction.
pub const EVAL_STACK: usize = 256 << 20;

#[derive(Parser)]
#[command(name = "iplc", version, about = "Intensional language compiler and eduction engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a source file to GEER.
    Compile {
        input: PathBuf,
        /// Output path; defaults to the input with a `.geer` extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a program's root at a context.
    Run {
        /// A `.ipl` source or a compiled `.geer` file.
        input: PathBuf,
        /// Evaluation context, e.g. `[t:5]`.
        #[arg(long, default_value = "[]")]
        ctx: String,
        /// Write the demand trace.
        #[arg(long)]
        trace: bool,
        /// Trace file; implies --trace. Defaults to the input with a `.trace` extension.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Run on a served cluster through this store tier instead of locally.
        #[arg(long, value_name = "ADDR")]
        dst: Option<String>,
    },
    /// Interactive session: `;`-terminated lines declare, other lines evaluate.
    Repl,
    /// Host one tier (or a manager) over TCP until shut down.
    Serve {
        #[arg(long, value_parser = parse_kind)]
        tier: TierKind,
        #[arg(long, default_value = "127.0.0.1:0")]
        listen: String,
        /// Manager to register with; required for every tier but gim.
        #[arg(long)]
        gim: Option<String>,
        /// Node id; defaults to one derived from the process id.
        #[arg(long)]
        node: Option<String>,
        /// Directory for store logs.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Sync the store log after every write.
        #[arg(long)]
        fsync: bool,
    },
    /// Run a program on an in-process cluster and print tier statistics.
    Demo {
        /// A corpus program name, a `.ipl` source or a `.geer` file.
        program: String,
        #[arg(long, default_value = "gim:1,dgt:2,dst:2,dwt:2")]
        topology: String,
        #[arg(long, default_value = "[]")]
        ctx: String,
        /// Crash one instance part way through, e.g. `dwt@50%`.
        #[arg(long)]
        kill: Option<String>,
        /// Seed for the simulated network's delivery order.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use loopback TCP instead of the simulated network.
        #[arg(long)]
        tcp: bool,
    },
}

fn parse_kind(s: &str) -> Result<TierKind, String> {
    s.parse::<TierKind>().map_err(|_| format!("unknown tier kind `{s}` (expected dgt, dst, dwt or gim)"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let worker = std::thread::Builder::new().stack_size(EVAL_STACK).spawn(move || dispatch(cli));
    let result = match worker {
        Ok(h) => h.join().unwrap_or_else(|_| Err(Failure::Eval("evaluation thread panicked".into()))),
        Err(e) => Err(Failure::Io(e.to_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compile { input, output } => compile(input, output),
        Command::Run { input, ctx, trace, trace_out, dst } => run(input, &ctx, trace, trace_out, dst),
        Command::Repl => repl::run(std::io::stdin().lock(), std::io::stdout().lock()),
        Command::Serve { tier, listen, gim, node, log, fsync } => {
            serve::run(serve::Options { tier, listen, gim, node, log, fsync })
        }
        Command::Demo { program, topology, ctx, kill, seed, tcp } => {
            demo::run(demo::Options { program, topology, ctx, kill, seed, tcp })
        }
    }
}

fn compile(input: PathBuf, output: Option<PathBuf>) -> Result<(), Failure> {
    let source = std::fs::read_to_string(&input).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
    let geer = iplc_core::compile(&source).map_err(|errs| Failure::compile(&input, &errs))?;
    let out = output.unwrap_or_else(|| input.with_extension("geer"));
    std::fs::write(&out, geer.serialize()).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    println!("{} {}", geer.program_id(), out.display());
    Ok(())
}

fn run(input: PathBuf, ctx: &str, trace: bool, trace_out: Option<PathBuf>, dst: Option<String>) -> Result<(), Failure> {
    let ctx: Context = parse_ctx(ctx)?;
    let geer = load(&input)?;
    if let Some(dst) = dst {
        if trace || trace_out.is_some() {
            return Err(Failure::Usage("--trace is only available for local runs".into()));
        }
        let net = TcpNetwork::new(deadline_override().unwrap_or(iplc_tiers::net::TCP_DEADLINE_MS));
        let client = Client::connect(net, "127.0.0.1:0", Duration::from_secs(60)).map_err(tier_failure)?;
        let dst = Address::from(dst.as_str());
        client.add_geer(&dst, &geer).map_err(tier_failure)?;
        let v = client.execute(&dst, &geer, &ctx).map_err(tier_failure)?;
        println!("{v}");
        return Ok(());
    }
    let registry = ProcedureRegistry::standard();
    let warehouse = Warehouse::new();
    let engine = Eductive::new(&geer, &warehouse, &registry);
    let result = engine.demand(ROOT_SUBJECT, &ctx);
    if trace || trace_out.is_some() {
        let path = trace_out.unwrap_or_else(|| input.with_extension("trace"));
        let file = std::fs::File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        engine.trace().write_to(std::io::BufWriter::new(file)).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    let v = result.map_err(|e| eval_failure(&e))?;
    println!("{v}");
    Ok(())
}
