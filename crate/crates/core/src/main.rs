use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use txlog::bench::{run_bench, to_csv, Mode};
use txlog::repl::{Session, SessionConfig, Status};

#[derive(Parser)]
#[command(name = "txlog", version, about = "Tabled Transaction Logic interpreter")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Load a program and run its queries, or the one given with --query.
    Run {
        file: PathBuf,
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        no_tabling: bool,
        #[arg(long)]
        no_incremental: bool,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
        #[arg(long)]
        trace: bool,
    },
    /// Run a generated benchmark instance in several modes.
    Bench {
        name: String,
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "tabled,untabled")]
        modes: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
    },
}

fn exit(status: Status) -> ExitCode {
    ExitCode::from(status.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        None => repl(),
        Some(Command::Run { file, query, no_tabling, no_incremental, max_steps, trace }) => {
            let config = SessionConfig { tabling: !no_tabling, incremental: !no_incremental, max_steps, trace, seed: 0 };
            let mut session = Session::new(config);
            let loaded = session.load_file(&file);
            if loaded.status != Status::Ok {
                eprintln!("{}", loaded.text);
                return exit(loaded.status);
            }
            let reply = match query {
                Some(q) => session.query(&q),
                None => session.run_program_queries(),
            };
            if reply.status == Status::Ok {
                println!("{}", reply.text);
            } else {
                eprintln!("{}", reply.text);
            }
            exit(reply.status)
        }
        Some(Command::Bench { name, n, modes, csv, seed, max_steps }) => {
            let modes: Result<Vec<Mode>, _> = modes.iter().map(|m| Mode::parse(m)).collect();
            let rows = modes.map_err(|e| e.to_string()).and_then(|modes| {
                run_bench(&name, n, &modes, seed, max_steps).map_err(|e| e.to_string())
            });
            match rows {
                Ok(rows) => {
                    let text = to_csv(&rows);
                    print!("{text}");
                    if let Some(path) = csv {
                        if let Err(e) = std::fs::write(&path, text) {
                            eprintln!("cannot write {}: {e}", path.display());
                            return ExitCode::from(1);
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn repl() -> ExitCode {
    let mut session = Session::default();
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    let mut pending = String::new();
    loop {
        print!("{}", if pending.is_empty() { "txlog> " } else { "   ... " });
        out.flush().ok();
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) | Err(_) => return ExitCode::SUCCESS,
            Ok(_) => {}
        }
        pending.push_str(&line);
        let text = pending.trim();
        // queries may span lines until the closing period
        if !text.starts_with(':') && !text.is_empty() && !text.ends_with('.') {
            continue;
        }
        let reply = session.eval(text);
        pending.clear();
        if reply.status == Status::Quit {
            return ExitCode::SUCCESS;
        }
        if !reply.text.is_empty() {
            println!("{}", reply.text);
        }
    }
}
