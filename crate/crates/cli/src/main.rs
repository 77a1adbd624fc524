use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Arg, ArgAction, ArgMatches, Command};
use oppsim_cli::settings::{flag_name, KEYS};
use oppsim_cli::{build_spec, parse_config, run_batch, summary_table, write_outputs, PRESETS};

fn cli() -> Command {
    let mut run = Command::new("run")
        .about("Run an experiment and write per-run and averaged series")
        .arg(Arg::new("config").long("config").short('c').value_name("FILE").help("key = value config file"))
        .arg(Arg::new("preset").long("preset").short('p').value_name("TAG").help("figure preset, see `oppsim presets`"))
        .arg(
            Arg::new("runs")
                .long("runs")
                .value_name("K")
                .value_parser(clap::value_parser!(usize))
                .default_value("10")
                .help("seeds per point, starting at the master seed"),
        )
        .arg(Arg::new("out").long("out").short('o').value_name("DIR").help("output directory"))
        .arg(Arg::new("dat").long("dat").action(ArgAction::SetTrue).help("also write gnuplot .dat averages"))
        .arg(Arg::new("event-log").long("event-log").value_name("FILE").help("JSON-lines contact log of the first run"))
        .arg(
            Arg::new("print-config")
                .long("print-config")
                .action(ArgAction::SetTrue)
                .help("print resolved settings and points, then exit"),
        )
        .next_help_heading("Simulation keys");
    for key in KEYS {
        let mut arg = Arg::new(key.name)
            .long(flag_name(key.name))
            .value_name("V")
            .help(format!("{} [default: {}]", key.help, key.default));
        if key.name == "threshold.item" {
            arg = arg.alias("rt");
        }
        run = run.arg(arg);
    }
    Command::new("oppsim")
        .about("Opportunistic network dissemination simulator")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .subcommand(run)
        .subcommand(Command::new("presets").about("List experiment presets"))
        .subcommand(Command::new("keys").about("List configuration keys and defaults"))
}

fn run(m: &ArgMatches) -> anyhow::Result<()> {
    let file = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            Some(parse_config(&text).with_context(|| format!("parsing {path}"))?)
        }
        None => None,
    };
    let flags: Vec<(String, String)> = KEYS
        .iter()
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect();
    let runs = *m.get_one::<usize>("runs").expect("default");
    let spec = build_spec(m.get_one::<String>("preset").map(String::as_str), file.as_ref(), &flags, runs)?;
    if m.get_flag("print-config") {
        print!("{}", spec.base.to_text());
        println!("# seeds {:?}", spec.seeds);
        for p in spec.resolve()? {
            println!("# point {} ({})", p.label, p.stem);
        }
        return Ok(());
    }
    let event_log = m.get_one::<String>("event-log").map(PathBuf::from);
    let result = run_batch(&spec, event_log.as_deref())?;
    print!("{}", summary_table(&result));
    if let Some(dir) = m.get_one::<String>("out") {
        let written = write_outputs(&result, dir.as_ref(), m.get_flag("dat"))?;
        eprintln!("wrote {} files to {dir}", written.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let outcome = match matches.subcommand() {
        Some(("run", m)) => run(m),
        Some(("presets", _)) => {
            for (tag, about) in PRESETS {
                println!("{tag:<6} {about}");
            }
            Ok(())
        }
        Some(("keys", _)) => {
            for k in KEYS {
                println!("{:<36} {:<10} {}", k.name, k.default, k.help);
            }
            Ok(())
        }
        _ => unreachable!("subcommand required"),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
