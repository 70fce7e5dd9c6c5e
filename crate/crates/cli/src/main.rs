use std::io::{IsTerminal, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use twisted_core::cli::{load, reads_input, run, Format, Options, COMMANDS};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

/// Exact computations and audits for twisted complexes.
#[derive(Debug, Parser)]
#[command(name = "twisted", version, allow_negative_numbers = true)]
struct Args {
    /// One of: homology, validate, hom, pretr-hom, d2-audit, mc-validate, tot, rl-check, e1,
    /// tr-hom, cone, shift, tensor, dual, twist, null-homotopy, triangle-check, sign-audit, prop56-audit
    command: String,
    /// Input documents; `-` or none reads stdin.
    inputs: Vec<PathBuf>,
    /// Number of random trials for audits.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Family member used for every restricted block it applies to.
    #[arg(long)]
    choice: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Amount for `shift` and `twist`.
    #[arg(long, default_value_t = 1)]
    by: i64,
}

fn read_inputs(args: &Args, opts: &Options) -> Result<Vec<String>, String> {
    let mut texts = Vec::new();
    for p in &args.inputs {
        if p.as_os_str() == "-" {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
            texts.push(s);
        } else {
            texts.push(std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?);
        }
    }
    if texts.is_empty() && reads_input(&args.command, opts) && !std::io::stdin().is_terminal() {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
        if !s.trim().is_empty() {
            texts.push(s);
        }
    }
    Ok(texts)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !COMMANDS.contains(&args.command.as_str()) {
        eprintln!("unknown command {:?}; expected one of {}", args.command, COMMANDS.join(", "));
        return ExitCode::from(2);
    }
    let opts = Options {
        trials: args.trials,
        seed: args.seed,
        choice: args.choice.clone(),
        format: match args.format {
            FormatArg::Json => Format::Json,
            FormatArg::Text => Format::Text,
        },
        by: args.by,
    };
    let docs = match read_inputs(&args, &opts).map_err(twisted_core::Error::Input).and_then(|t| load(&t)) {
        Ok(d) => d,
        Err(e) => {
            let v = serde_json::json!({"error": e.to_string()});
            print!("{}", twisted_core::cli::render(&v, opts.format));
            return ExitCode::from(2);
        }
    };
    let out = run(&args.command, &docs, &opts);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.output.as_bytes());
    ExitCode::from(out.code as u8)
}
