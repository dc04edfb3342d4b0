use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use cellload::cli::{self, Format, Report, EXIT_OK, EXIT_USAGE};
use cellload::config::{Config, KEYS};

/// Keys that have a dedicated flag with its own precedence rules.
const FIXED: &[&str] = &["seed", "realizations"];

fn common_args(cmd: Command) -> Command {
    let mut cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .value_parser(value_parser!(PathBuf))
                .help("key = value configuration file"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("N")
                .value_parser(value_parser!(u64))
                .help("master seed; overrides CELLLOAD_SEED and the config file"),
        )
        .arg(
            Arg::new("realizations")
                .long("realizations")
                .value_name("N")
                .value_parser(value_parser!(usize))
                .help("Monte-Carlo realizations per grid point"),
        )
        .arg(
            Arg::new("jobs")
                .long("jobs")
                .value_name("N")
                .value_parser(value_parser!(usize))
                .help("worker threads (results do not depend on it)"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("PATH")
                .value_parser(value_parser!(PathBuf))
                .help("write the table here and metadata to PATH.meta.json"),
        )
        .arg(
            Arg::new("format")
                .long("format")
                .value_parser(["csv", "json"])
                .default_value("csv"),
        );
    for &(key, help) in KEYS {
        if FIXED.contains(&key) {
            continue;
        }
        let dashed: &'static str = Box::leak(key.replace('_', "-").into_boxed_str());
        let mut arg = Arg::new(key)
            .long(key)
            .value_name("VALUE")
            .help(help)
            .help_heading("Config overrides")
            .allow_negative_numbers(true);
        if dashed != key {
            arg = arg.alias(dashed);
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

fn command() -> Command {
    let validate = || {
        Arg::new("validate")
            .long("validate")
            .action(ArgAction::SetTrue)
            .help("compare with Monte-Carlo and exit 2 on mismatch")
    };
    Command::new("cellload")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Cell load distribution and dimensioning of Poisson cellular networks")
        .subcommand_required(true)
        .subcommand(common_args(
            Command::new("stable-fraction")
                .about("fraction of cells with load below one")
                .arg(validate()),
        ))
        .subcommand(common_args(
            Command::new("mean-load")
                .about("EI, CF and mean-cell load approximations")
                .arg(validate()),
        ))
        .subcommand(common_args(
            Command::new("throughput-compare")
                .about("dynamic flow-level versus static full-buffer throughput"),
        ))
        .subcommand(common_args(
            Command::new("selftest").about("special-function and quadrature diagnostics"),
        ))
}

fn resolve_config(m: &ArgMatches) -> Result<Config, String> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            Config::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => Config::default(),
    };
    for &(key, _) in KEYS {
        if FIXED.contains(&key) {
            continue;
        }
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v).map_err(|e| e.to_string())?;
        }
    }
    if let Ok(v) = std::env::var("CELLLOAD_SEED") {
        cfg.set("seed", &v)
            .map_err(|e| format!("CELLLOAD_SEED: {e}"))?;
    }
    if let Some(s) = m.get_one::<u64>("seed") {
        cfg.set("seed", &s.to_string()).map_err(|e| e.to_string())?;
    }
    if let Some(r) = m.get_one::<usize>("realizations") {
        cfg.set("realizations", &r.to_string())
            .map_err(|e| e.to_string())?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn emit(report: &Report, cfg: &Config, m: &ArgMatches) -> io::Result<()> {
    let format = match m.get_one::<String>("format").map(String::as_str) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    };
    match m.get_one::<PathBuf>("out") {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.table.write(&mut w, format)?;
            w.flush()?;
            let mut meta = BufWriter::new(File::create(sidecar_path(path))?);
            serde_json::to_writer_pretty(&mut meta, &report.sidecar(cfg))?;
            writeln!(meta)?;
            meta.flush()
        }
        None => report.table.write(io::stdout().lock(), format),
    }
}

fn run() -> i32 {
    let matches = match command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, m) = matches.subcommand().expect("subcommand is required");
    let cfg = match resolve_config(m) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(&jobs) = m.get_one::<usize>("jobs") {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    }
    let validate = matches!(m.try_get_one::<bool>("validate"), Ok(Some(true)));
    let report = match name {
        "stable-fraction" => cli::cmd_stable_fraction(&cfg, validate),
        "mean-load" => cli::cmd_mean_load(&cfg, validate),
        "throughput-compare" => cli::cmd_throughput_compare(&cfg),
        "selftest" => cli::cmd_selftest(&cfg),
        _ => unreachable!("unknown subcommand"),
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = emit(&report, &cfg, m) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    for f in &report.failures {
        eprintln!("FAIL {f}");
    }
    report.exit_code()
}

fn main() -> ExitCode {
    ExitCode::from(run() as u8)
}
