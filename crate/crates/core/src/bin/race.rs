use clap::{Parser, Subcommand};
use racegame::harness::{
    metrics_csv, metrics_from_dir, parse_replay, racing_line_for, replay_path, rescore, run_series, ControllerKind,
    HarnessError, RaceConfig, RaceSetup,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "race", about = "Head-to-head kart races between game-theoretic controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one race and write its replay.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Race index within the series (selects start lanes).
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Append reward breakdowns to the replay.
        #[arg(long)]
        rewards: bool,
    },
    /// Run a full series, writing replays and metrics.csv.
    Series {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rewards: bool,
    },
    /// Re-derive violations and rewards from a replay's ticks.
    Rescore {
        #[arg(long)]
        replay: PathBuf,
    },
    /// Recompute metrics from a directory of replays.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run { config, seed, out, index, rewards } => {
            let mut cfg = RaceConfig::load(&config)?;
            cfg.seed = seed;
            cfg.record_rewards |= rewards;
            let track = cfg.load_track()?;
            let line = if cfg.players.contains(&ControllerKind::FixedLqng) { Some(racing_line_for(&cfg, &track)?) } else { None };
            let setup = RaceSetup::new(&cfg, &track, line.as_ref())?;
            let race = setup.run(index, true);
            std::fs::create_dir_all(&out)?;
            let path = replay_path(&out, index);
            std::fs::write(&path, race.replay.unwrap_or_default())?;
            let s = &race.result.summary;
            println!(
                "outcome {:?} finish {:?} progress {:?} violations {} replay {}",
                s.outcome,
                s.finish_times,
                s.progress,
                race.result.violations.len(),
                path.display()
            );
        }
        Command::Series { config, out, rewards } => {
            let mut cfg = RaceConfig::load(&config)?;
            cfg.record_rewards |= rewards;
            let series = run_series(&cfg, false, Some(&out))?;
            print!("{}", metrics_csv(std::slice::from_ref(&series.metrics)));
        }
        Command::Rescore { replay } => {
            let replay = parse_replay(&std::fs::read_to_string(&replay)?)?;
            let cfg = &replay.header.config;
            let report = rescore(&replay, &cfg.rules, &cfg.reward)?;
            println!("violations recorded {} rescored {}", report.recorded_violations.len(), report.violations.len());
            for p in 0..2 {
                println!("player {} reward total {:.6}", p + 1, report.rewards[p].total());
            }
            let rewards_ok = report.rewards_match.unwrap_or(true);
            if let Some(m) = report.rewards_match {
                println!("recorded rewards match: {m}");
            }
            if !(report.violations_match() && rewards_ok) {
                eprintln!("rescore mismatch");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Metrics { input, csv } => {
            let metrics = metrics_from_dir(&input)?;
            let doc = metrics_csv(&metrics);
            std::fs::write(&csv, &doc)?;
            print!("{doc}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("RACE_LOG_LEVEL", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
