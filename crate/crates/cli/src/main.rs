use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use gf2m_verify::genbench::{gen_mastrovito, inject_fault, oracle_check, FaultSpec, OracleVerdict};
use gf2m_verify::netlist::{parse_blif, parse_netlist, Netlist, PortMap};
use gf2m_verify::rewriter::{extract_bit, extract_full, RewriteOptions, DEFAULT_TERM_CAP};
use gf2m_verify::scheduler::{default_threads, verify, VerifyConfig};
use gf2m_verify::selftest::run_all;
use gf2m_verify::{FieldSpec, IrreducibilityCheck};

/// Traces are dropped above this degree unless forced.
const TRACE_MAX_DEGREE: usize = 8;

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "gf2m-verify",
    version,
    about = "Verify gate-level GF(2^m) multipliers by per-bit backward rewriting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a netlist against A*B mod P(x).
    Verify(VerifyArgs),
    /// Print the polynomial computed by each output.
    Extract(ExtractArgs),
    /// Write a Mastrovito multiplier netlist, optionally with one injected fault.
    Generate(GenerateArgs),
    /// Run the built-in invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct FieldArgs {
    /// Degree m of a built-in field.
    #[arg(long)]
    field: Option<usize>,
    /// Field polynomial, e.g. "x^4+x+1" or 0x13.
    #[arg(long)]
    poly: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Netlist path (native format, or BLIF for *.blif); `-` reads stdin.
    netlist: PathBuf,
    #[command(flatten)]
    field: FieldArgs,
    /// Worker threads [default: logical cores, capped at m].
    #[arg(long, env = "GF2M_VERIFY_THREADS")]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    /// Print the rewriting trace of every bit.
    #[arg(long)]
    trace: bool,
    /// Keep traces even for m > 8.
    #[arg(long, requires = "trace")]
    force_trace: bool,
    /// Maximum live monomials per bit.
    #[arg(long, env = "GF2M_VERIFY_TERM_CAP", default_value_t = DEFAULT_TERM_CAP)]
    term_cap: usize,
    /// File with `<port> <net>` lines mapping a_i/b_i/z_i to netlist names.
    #[arg(long)]
    port_map: Option<PathBuf>,
    #[arg(long, default_value = "auto", value_parser = parse_check)]
    irreducibility: IrreducibilityCheck,
    /// Omit timing, memory and thread fields (output then independent of --threads).
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtractFormat {
    Poly,
    Trace,
}

#[derive(Args)]
struct ExtractArgs {
    netlist: PathBuf,
    /// Index into the primary outputs.
    #[arg(long, conflicts_with = "all")]
    bit: Option<usize>,
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value_t = ExtractFormat::Poly)]
    format: ExtractFormat,
    #[arg(long, env = "GF2M_VERIFY_TERM_CAP", default_value_t = DEFAULT_TERM_CAP)]
    term_cap: usize,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fault to inject: `seed=N[,gate=NAME][,kind=kind-swap|input-swap|output-negation]`.
    #[arg(long, value_parser = FaultSpec::parse)]
    fault: Option<FaultSpec>,
    #[arg(long, default_value = "auto", value_parser = parse_check)]
    irreducibility: IrreducibilityCheck,
}

#[derive(Args)]
struct SelftestArgs {
    /// Largest field degree exercised.
    #[arg(long, default_value_t = 8)]
    max_m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_check(s: &str) -> Result<IrreducibilityCheck, String> {
    s.parse()
}

type CmdResult = Result<u8, String>;

fn load_field(f: &FieldArgs, check: IrreducibilityCheck) -> Result<FieldSpec, String> {
    match (f.field, &f.poly) {
        (Some(m), None) => FieldSpec::builtin(m).map_err(|e| e.to_string()),
        (None, Some(p)) => FieldSpec::parse_with(p, check).map_err(|e| e.to_string()),
        _ => Err("exactly one of --field and --poly is required".into()),
    }
}

fn read_input(path: &Path) -> Result<String, String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("stdin: {e}"))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn load_netlist(path: &Path) -> Result<Netlist, String> {
    let text = read_input(path)?;
    let is_blif = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("blif"));
    let parsed = if is_blif {
        parse_blif(&text)
    } else {
        parse_netlist(&text)
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let fs = load_field(&a.field, a.irreducibility)?;
    let netlist = load_netlist(&a.netlist)?;
    let m = fs.degree();
    let mut trace = a.trace;
    if trace && m > TRACE_MAX_DEGREE && !a.force_trace {
        warn!("trace disabled for m = {m} > {TRACE_MAX_DEGREE}; pass --force-trace to keep it");
        trace = false;
    }
    let port_map = match &a.port_map {
        Some(p) => {
            Some(PortMap::parse(&read_input(p)?).map_err(|e| format!("{}: {e}", p.display()))?)
        }
        None => None,
    };
    let cfg = VerifyConfig {
        threads: a.threads.unwrap_or_else(|| default_threads(m)),
        trace,
        term_cap: a.term_cap,
        irreducibility_check: a.irreducibility,
        port_map,
    };
    let report = verify(&netlist, &fs, &cfg).map_err(|e| e.to_string())?;
    let mut out = io::stdout().lock();
    match a.format {
        ReportFormat::Text => {
            let _ = write!(out, "{}", report.render_text(!a.no_timing));
            for (bit, t) in &report.traces {
                let _ = write!(out, "\ntrace of bit {bit}:\n{t}");
            }
        }
        ReportFormat::Json => {
            let _ = writeln!(out, "{}", report.to_json(!a.no_timing));
        }
    }
    Ok(report.exit_code() as u8)
}

fn cmd_extract(a: &ExtractArgs) -> CmdResult {
    let n = load_netlist(&a.netlist)?;
    let outs = n.primary_outputs().to_vec();
    let trace = matches!(a.format, ExtractFormat::Trace);
    let opts = RewriteOptions {
        trace,
        term_cap: a.term_cap,
        ..Default::default()
    };
    let mut out = io::stdout().lock();
    match a.bit {
        Some(bit) => {
            let &z = outs.get(bit).ok_or_else(|| {
                format!("bit {bit} out of range: netlist has {} outputs", outs.len())
            })?;
            let ex = extract_bit(&n, &n.cone(z), bit, &opts).map_err(|e| e.to_string())?;
            match ex.trace {
                Some(t) => {
                    let _ = write!(out, "{}", t.render(n.vars()));
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{}: {}",
                        n.vars().name(z),
                        ex.polynomial.render(n.vars())
                    );
                }
            }
        }
        None => {
            if !a.all {
                return Err("pass --bit <i> or --all".into());
            }
            let (sig, t) = extract_full(&n, &outs, &opts).map_err(|e| e.to_string())?;
            match t {
                Some(t) => {
                    let _ = write!(out, "{}", t.render(n.vars()));
                }
                None => {
                    for (&z, p) in outs.iter().zip(&sig.slots) {
                        let _ = writeln!(out, "{}: {}", n.vars().name(z), p.render(n.vars()));
                    }
                }
            }
        }
    }
    Ok(0)
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult {
    let fs = load_field(&a.field, a.irreducibility)?;
    let mut n = gen_mastrovito(&fs);
    if let Some(spec) = &a.fault {
        let f = inject_fault(&n, spec).map_err(|e| e.to_string())?;
        eprintln!("{}", f.description);
        match oracle_check(&f.netlist, &fs, spec.seed) {
            Ok(OracleVerdict::Counterexample(cx)) => eprintln!(
                "oracle: function changed (a = {:#x}, b = {:#x}: got {:#x}, want {:#x})",
                cx.a, cx.b, cx.got, cx.want
            ),
            Ok(OracleVerdict::Pass) => {
                warn!("oracle found no input pair distinguishing the mutant")
            }
            Err(e) => warn!("oracle not run: {e}"),
        }
        n = f.netlist;
    }
    let text = n.render();
    match &a.out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?,
        None => {
            let _ = io::stdout().lock().write_all(text.as_bytes());
        }
    }
    Ok(0)
}

fn cmd_selftest(a: &SelftestArgs) -> CmdResult {
    let suites = run_all(a.max_m, a.seed);
    let mut failed = false;
    for s in &suites {
        let status = if s.passed() { "PASS" } else { "FAIL" };
        println!("{:<14} {status}  ({} checks)", s.name, s.checks);
        for f in &s.failures {
            println!("    failed: {f}");
        }
        failed |= !s.passed();
    }
    println!(
        "selftest up to m = {}: {}",
        a.max_m,
        if failed { "FAIL" } else { "PASS" }
    );
    Ok(if failed { EXIT_FAIL } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
