//! Experiment runner: loads a scenario, dispatches one experiment, and
//! writes its results as a single CSV file.
//!
//! Output is fully computed in memory before anything touches the
//! filesystem, so a failing run never leaves a partial file behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fsotrade_core::fso::db_per_km_to_natural;
use fsotrade_core::scenario::Scenario;
use fsotrade_core::sim;
use fsotrade_core::trading::{demand, market_equilibrium, supply};
use fsotrade_core::weather;
use fsotrade_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fsotrade",
    about = "Hybrid RF/FSO spectrum-trading experiments",
    after_help = "Precedence: --seed beats --set, which beats the scenario file, \
                  which beats built-in defaults."
)]
struct Cli {
    /// Scenario file (TOML); defaults apply when omitted
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Override the Monte Carlo seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override one scenario key, e.g. --set market.mean_ues=10
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Print the effective configuration as TOML and exit
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Source demand curve over the configured price grid
    DemandCurve {
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Relay supply curve over the configured price grid
    SupplyCurve {
        #[arg(long)]
        out: PathBuf,
    },
    /// Market equilibrium quote per configured relay
    Equilibrium {
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo sweep over optical attenuation
    Sweep {
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean capacity versus relay count at fixed attenuation
    Asymptote {
        #[arg(long)]
        out: PathBuf,
    },
    /// Profit breakdown over the attenuation sweep
    Profit {
        #[arg(long)]
        out: PathBuf,
    },
    /// System availability over a visibility series
    Availability {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic visibility fixture
    FixtureGen {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let overrides = parse_overrides(&cli.set)?;
    let mut scenario = Scenario::load(cli.scenario.as_deref(), &overrides)?;
    if let Some(seed) = cli.seed {
        scenario.market.seed = seed;
    }
    if cli.dump_config {
        print!("{}", scenario.dump());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::Config(
            "nothing to do: pass a command or --dump-config (see --help)".into(),
        ));
    };
    let (out, content) = match &command {
        Command::DemandCurve { out } => (out, demand_curve_csv(&scenario)?),
        Command::SupplyCurve { out } => (out, supply_curve_csv(&scenario)?),
        Command::Equilibrium { out } => (out, equilibrium_csv(&scenario)?),
        Command::Sweep { out } => (out, sweep_csv(&scenario)?),
        Command::Asymptote { out } => (out, asymptote_csv(&scenario)?),
        Command::Profit { out } => (out, profit_csv(&scenario)?),
        Command::Availability { out } => (out, availability_csv(&scenario)?),
        Command::FixtureGen { out } => (out, fixture_csv(&scenario)?),
    };
    std::fs::write(out, content)
        .map_err(|e| Error::Config(format!("cannot write `{}`: {e}", out.display())))?;
    Ok(())
}

fn parse_overrides(set: &[String]) -> Result<Vec<(String, String)>> {
    set.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| {
                    Error::Config(format!("--set `{kv}` must have the form key=value"))
                })
        })
        .collect()
}

/// Fixed-precision cell so identical runs emit identical bytes.
fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn demand_curve_csv(scenario: &Scenario) -> Result<String> {
    let source = scenario.curve_source();
    source.validate()?;
    let relay = scenario
        .curve_relays()?
        .into_iter()
        .next()
        .expect("validated scenario has at least one relay");
    let mut csv = String::from("price_util_per_mhz,bandwidth_mhz,source_utility_util,regime\n");
    for price in scenario.price_grid() {
        let point = demand(price, &source, &relay.link)?;
        let utility =
            fsotrade_core::trading::source_utility(point.bandwidth_mhz, price, &source, &relay.link);
        let regime = match point.regime {
            fsotrade_core::trading::DemandRegime::InteriorRoot => "interior",
            fsotrade_core::trading::DemandRegime::MinimumPlateau => "plateau",
            fsotrade_core::trading::DemandRegime::Quit => "quit",
        };
        let _ = writeln!(
            csv,
            "{},{},{},{regime}",
            num(price),
            num(point.bandwidth_mhz),
            num(utility)
        );
    }
    Ok(csv)
}

fn supply_curve_csv(scenario: &Scenario) -> Result<String> {
    let relay = scenario
        .curve_relays()?
        .into_iter()
        .next()
        .expect("validated scenario has at least one relay");
    relay.validate()?;
    let mut csv = String::from("price_util_per_mhz,supply_mhz\n");
    for price in scenario.price_grid() {
        let _ = writeln!(csv, "{},{}", num(price), num(supply(price, &relay)));
    }
    Ok(csv)
}

fn equilibrium_csv(scenario: &Scenario) -> Result<String> {
    let source = scenario.curve_source();
    source.validate()?;
    let mut csv = String::from(
        "relay_id,status,price_util_per_mhz,bandwidth_mhz,source_utility_util,relay_utility_util\n",
    );
    for relay in scenario.curve_relays()? {
        relay.validate()?;
        match market_equilibrium(&source, &relay)? {
            Some(q) => {
                let _ = writeln!(
                    csv,
                    "{},trade,{},{},{},{}",
                    relay.id,
                    num(q.price),
                    num(q.bandwidth_mhz),
                    num(q.source_utility),
                    num(q.relay_utility)
                );
            }
            None => {
                let _ = writeln!(csv, "{},no-equilibrium,,,,", relay.id);
            }
        }
    }
    Ok(csv)
}

const SWEEP_HEADER: &str =
    "kappa_db_per_km,mean_capacity_mbps,trade_rate,source_profit,relay_profit,n,upsilon_m,seed";

fn run_sweep(scenario: &Scenario) -> Result<Vec<(f64, sim::AggregateStats)>> {
    let cfg = scenario.sim_config();
    let grid_db = scenario.sweep_grid_db_per_km();
    let grid: Vec<f64> = grid_db.iter().map(|&db| db_per_km_to_natural(db)).collect();
    let points = sim::sweep_kappa(&cfg, &grid)?;
    Ok(grid_db.into_iter().zip(points.into_iter().map(|p| p.stats)).collect())
}

fn sweep_csv(scenario: &Scenario) -> Result<String> {
    let m = &scenario.market;
    let mut csv = format!("{SWEEP_HEADER}\n");
    for (kappa_db, stats) in run_sweep(scenario)? {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            num(kappa_db),
            num(stats.mean_capacity_mbps),
            num(stats.trade_rate),
            num(stats.mean_source_profit),
            num(stats.mean_total_relay_profit),
            m.samples_per_point,
            num(m.mean_ues),
            m.seed
        );
    }
    Ok(csv)
}

fn profit_csv(scenario: &Scenario) -> Result<String> {
    let m = &scenario.market;
    let mut csv =
        String::from("kappa_db_per_km,source_profit,relay_profit,trade_rate,n,upsilon_m,seed\n");
    for (kappa_db, stats) in run_sweep(scenario)? {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            num(kappa_db),
            num(stats.mean_source_profit),
            num(stats.mean_total_relay_profit),
            num(stats.trade_rate),
            m.samples_per_point,
            num(m.mean_ues),
            m.seed
        );
    }
    Ok(csv)
}

fn asymptote_csv(scenario: &Scenario) -> Result<String> {
    let cfg = scenario.sim_config();
    let m = &scenario.market;
    let kappa_db = scenario.asymptote.kappa_db_per_km;
    let points = sim::asymptotic_capacity(
        &cfg,
        db_per_km_to_natural(kappa_db),
        &scenario.asymptote.relay_counts,
    )?;
    let mut csv =
        String::from("relay_count,mean_capacity_mbps,kappa_db_per_km,n,upsilon_m,seed\n");
    for (count, capacity) in points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            count,
            num(capacity),
            num(kappa_db),
            m.samples_per_point,
            num(m.mean_ues),
            m.seed
        );
    }
    Ok(csv)
}

fn availability_csv(scenario: &Scenario) -> Result<String> {
    let w = &scenario.weather;
    if w.series_path.is_empty() {
        return Err(Error::Config(
            "availability needs weather.series_path pointing at a visibility file".into(),
        ));
    }
    let series = weather::load_series(Path::new(&w.series_path))?;
    let kappa = weather::to_attenuation(&series, scenario.fso_params().wavelength_m)?;
    let cfg = scenario.sim_config();
    let report = sim::availability(&cfg, &kappa)?;
    let fog = weather::fog_statistics(&series, w.fog_threshold_km);
    let mut csv = String::from(
        "availability,total_hours,outage_hours,fog_hours,games_per_outage_hour,seed\n",
    );
    let _ = writeln!(
        csv,
        "{:.12},{},{},{},{},{}",
        report.availability,
        report.total_hours,
        report.outage_hours,
        fog.fog_hours,
        cfg.games_per_weather_interval(),
        scenario.market.seed
    );
    Ok(csv)
}

fn fixture_csv(scenario: &Scenario) -> Result<String> {
    let w = &scenario.weather;
    let series = weather::generate_fixture(w.fixture_hours, w.fixture_fog_hours, w.fixture_seed)?;
    Ok(weather::serialize_series(&series))
}
