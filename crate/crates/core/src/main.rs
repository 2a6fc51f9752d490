use std::process::ExitCode;

use clap::Parser;
use hetnet_comp::metrics::bler_percent;
use hetnet_comp::runner::{run, Cli};

fn main() -> ExitCode {
    let cfg = match Cli::parse().resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for m in &outcome.modes {
                let k = &m.summary;
                let fmt = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
                println!(
                    "{:<8} pico avg {} edge {} | overall avg {} edge {} | BLER {} | CQI {} | CoMP on {}/{} TTIs",
                    m.mode.as_str(),
                    fmt(k.pico_served.average_mbps),
                    fmt(k.pico_served.edge_mbps),
                    fmt(k.overall.average_mbps),
                    fmt(k.overall.edge_mbps),
                    k.avg_bler.map(bler_percent).unwrap_or_else(|| "-".into()),
                    fmt(k.avg_cqi),
                    m.comp_on_ttis,
                    cfg.ttis,
                );
            }
            println!("outputs in {} ({:.1} s)", cfg.out.display(), outcome.wall_clock_s);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
