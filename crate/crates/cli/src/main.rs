//! `tracksel` command line: run scenarios, dump exact small-instance
//! distributions, validate configuration files, and emit bundled presets.
//!
//! ```text
//! tracksel run --config experiment.toml --out results/
//! tracksel run --tracker central-known --slots 50000 --seeds 20
//! tracksel oracle --out results/            # π_β and price-response dumps
//! tracksel validate --config experiment.toml
//! tracksel preset markov --instance 3 --out configs/
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tracksel::estimate::conditional_mse;
use tracksel::gibbs::EnergyTable;
use tracksel::model::Configuration;
use tracksel::oracle::{brute_force_lagrangian, exact_gibbs_distribution};
use tracksel::runner::{run_scenario_to_dir, summary_path};
use tracksel::scenario::{iid_preset, markov_preset, Scenario, TrackerKind};
use tracksel::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tracksel",
    version,
    about = "Dynamic sensor-subset selection simulator",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: one CSV trace per seed plus a JSON summary.
    Run(RunArgs),
    /// Dump the exact configuration distribution and price response
    /// (i.i.d. scenarios only; the error table is closed-form there).
    Oracle(OracleArgs),
    /// Check a scenario file without running anything.
    Validate(SourceArgs),
    /// Emit a bundled preset scenario as TOML.
    Preset(PresetArgs),
}

/// Where a scenario comes from, plus the common overrides.
#[derive(Args)]
struct SourceArgs {
    /// Scenario file (TOML). Defaults to a bundled preset matched to the
    /// tracker kind.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the tracker kind (e.g. central-known, dist-iid, kcf).
    #[arg(long, value_name = "NAME")]
    tracker: Option<TrackerKind>,
    /// Override the number of slots per replication.
    #[arg(long, value_name = "U64")]
    slots: Option<u64>,
    /// Run exactly one replication with this seed.
    #[arg(long, value_name = "U64", conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Run replications with seeds 1..=K.
    #[arg(long, value_name = "K")]
    seeds: Option<u64>,
}

impl SourceArgs {
    fn load(&self) -> Result<Scenario> {
        let mut scenario = match &self.config {
            Some(path) => Scenario::from_toml_file(path)?,
            // No file: pick the preset family the requested tracker runs on.
            None => match self.tracker {
                Some(kind) if kind.wants_markov() => markov_preset(1),
                _ => iid_preset(),
            },
        };
        if let Some(kind) = self.tracker {
            scenario.tracker = kind;
        }
        if let Some(slots) = self.slots {
            scenario.slots = slots;
        }
        if let Some(seed) = self.seed {
            scenario.seeds = vec![seed];
        } else if let Some(k) = self.seeds {
            scenario.seeds = (1..=k).collect();
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Output directory for traces and the summary.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Output directory for the dump files.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Inverse temperature (defaults to the scenario's).
    #[arg(long)]
    beta: Option<f64>,
    /// Activation price for the distribution dump (defaults to the
    /// scenario's initial price).
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of price grid points for the response dump.
    #[arg(long, default_value_t = 101)]
    grid: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PresetFamily {
    /// Five scalar sensors observing an i.i.d. Gaussian process.
    Iid,
    /// Five-node line network tracking a four-state Markov chain.
    Markov,
}

#[derive(Args)]
struct PresetArgs {
    /// Which preset family to emit.
    #[arg(value_enum)]
    family: PresetFamily,
    /// Instance number for the markov family's drawn constants.
    #[arg(long, value_name = "U64", default_value_t = 1)]
    instance: u64,
    /// Override the preset's tracker kind.
    #[arg(long, value_name = "NAME")]
    tracker: Option<TrackerKind>,
    /// Write `<name>.toml` into this directory instead of stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Oracle(args) => oracle(args),
        Command::Validate(args) => validate(args),
        Command::Preset(args) => preset(args),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let scenario = args.source.load()?;
    println!(
        "running {} ({} seeds x {} slots, tracker {}, hash {})",
        scenario.name,
        scenario.seeds.len(),
        scenario.slots,
        scenario.tracker,
        scenario.hash()
    );
    let report = run_scenario_to_dir(&scenario, &args.out)?;
    for s in &report.per_seed {
        println!(
            "  seed {:>4}: mse_avg {:.6}  active_avg {:.4}  lambda {:.4}",
            s.seed, s.mse_avg, s.active_avg, s.final_lambda
        );
    }
    println!(
        "mean over seeds: mse_avg {:.6}, active_avg {:.4}",
        report.mean_mse_avg, report.mean_active_avg
    );
    println!("wrote {}", summary_path(&args.out, &scenario).display());
    Ok(())
}

/// The exact error table of an i.i.d. scenario, evaluated at the true
/// parameter (what the known-parameter tracker would use).
fn exact_table(scenario: &Scenario, lambda: f64) -> Result<EnergyTable> {
    // Any tracker kind may be configured; the dump only needs the model.
    let model = match &scenario.model {
        tracksel::scenario::ModelSpec::Iid(spec) => spec.build()?,
        tracksel::scenario::ModelSpec::Markov(_) => {
            return Err(Error::Config(
                "exact dumps need an i.i.d. scenario: its error table is closed-form".into(),
            ))
        }
    };
    let n = model.num_sensors();
    let mut table = EnergyTable::constant(n, 0.0, lambda);
    for b in Configuration::all(n) {
        table.set_f(b, conditional_mse(&model.family, &model.sensors, b, &model.theta_true)?);
    }
    Ok(table)
}

/// CSV of `π_β` over all configurations at one (β, λ).
fn distribution_csv(table: &EnergyTable, beta: f64) -> Result<String> {
    let dist = exact_gibbs_distribution(table, beta)?;
    let mut out = String::from("config,active,f,h,prob\n");
    for b in Configuration::all(table.num_sensors()) {
        out.push_str(&format!(
            "{b},{},{},{},{}\n",
            b.active_count(),
            table.f(b),
            table.h(b)?,
            dist.prob(b)
        ));
    }
    Ok(out)
}

/// CSV of the price response: mean active count under `π_β` and the
/// cardinality of the cheapest minimum-cost configuration, on a λ grid.
fn price_response_csv(
    table: &EnergyTable,
    beta: f64,
    bounds: (f64, f64),
    grid: usize,
) -> Result<String> {
    if grid < 2 {
        return Err(Error::Config("price grid needs at least 2 points".into()));
    }
    let mut table = table.clone();
    let mut out = String::from("lambda,mean_active,min_cost_active\n");
    for i in 0..grid {
        let lambda = bounds.0 + (bounds.1 - bounds.0) * i as f64 / (grid - 1) as f64;
        table.set_lambda(lambda);
        let dist = exact_gibbs_distribution(&table, beta)?;
        let (argmin, _) = brute_force_lagrangian(&table)?;
        let cardinality = argmin.iter().map(Configuration::active_count).min().unwrap_or(0);
        out.push_str(&format!("{lambda},{},{cardinality}\n", dist.mean_active()));
    }
    Ok(out)
}

fn oracle(args: OracleArgs) -> Result<()> {
    let scenario = args.source.load()?;
    let beta = args.beta.unwrap_or(scenario.beta);
    let lambda = args.lambda.unwrap_or(scenario.lambda0);
    let table = exact_table(&scenario, lambda)?;

    std::fs::create_dir_all(&args.out)?;
    let dist_path = args.out.join(format!("{}_distribution.csv", scenario.name));
    std::fs::write(&dist_path, distribution_csv(&table, beta)?)?;
    let resp_path = args.out.join(format!("{}_price_response.csv", scenario.name));
    std::fs::write(
        &resp_path,
        price_response_csv(&table, beta, scenario.lambda_bounds(), args.grid)?,
    )?;
    println!("wrote {}", dist_path.display());
    println!("wrote {}", resp_path.display());
    Ok(())
}

fn validate(args: SourceArgs) -> Result<()> {
    let scenario = args.load()?;
    println!(
        "ok: {} (tracker {}, {} sensors, {} seeds, {} slots, hash {})",
        scenario.name,
        scenario.tracker,
        scenario.num_sensors(),
        scenario.seeds.len(),
        scenario.slots,
        scenario.hash()
    );
    Ok(())
}

fn preset(args: PresetArgs) -> Result<()> {
    let mut scenario = match args.family {
        PresetFamily::Iid => iid_preset(),
        PresetFamily::Markov => markov_preset(args.instance),
    };
    if let Some(kind) = args.tracker {
        scenario.tracker = kind;
        scenario.validate()?;
    }
    let text = scenario.to_toml()?;
    match args.out {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("{}.toml", scenario.name));
            std::fs::write(&path, text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Cli {
        Cli::try_parse_from(argv).expect("argv parses")
    }

    #[test]
    fn run_flags_override_the_scenario() {
        let cli = parse(&["tracksel", "run", "--tracker", "central-known", "--slots", "7", "--seed", "99"]);
        let Command::Run(args) = cli.command else { panic!("expected run") };
        let s = args.source.load().unwrap();
        assert_eq!(s.tracker, TrackerKind::CentralKnown);
        assert_eq!(s.slots, 7);
        assert_eq!(s.seeds, vec![99]);
    }

    #[test]
    fn markov_trackers_default_to_the_markov_preset() {
        let cli = parse(&["tracksel", "run", "--tracker", "kcf", "--seeds", "3"]);
        let Command::Run(args) = cli.command else { panic!("expected run") };
        let s = args.source.load().unwrap();
        assert_eq!(s.tracker, TrackerKind::Kcf);
        assert_eq!(s.seeds, vec![1, 2, 3]);
    }

    #[test]
    fn seed_and_seeds_conflict() {
        assert!(Cli::try_parse_from(["tracksel", "run", "--seed", "1", "--seeds", "2"]).is_err());
    }

    #[test]
    fn unknown_tracker_names_are_rejected() {
        assert!(Cli::try_parse_from(["tracksel", "run", "--tracker", "psychic"]).is_err());
    }

    #[test]
    fn distribution_dump_sums_to_one() {
        let scenario = iid_preset();
        let table = exact_table(&scenario, 0.01).unwrap();
        let csv = distribution_csv(&table, scenario.beta).unwrap();
        let mut total = 0.0;
        for line in csv.lines().skip(1) {
            total += line.rsplit(',').next().unwrap().parse::<f64>().unwrap();
        }
        assert!((total - 1.0).abs() < 1e-12, "probabilities sum to {total}");
        assert_eq!(csv.lines().count(), 1 + (1 << scenario.num_sensors()));
    }

    #[test]
    fn price_response_is_monotone_in_lambda() {
        let scenario = iid_preset();
        let table = exact_table(&scenario, 0.0).unwrap();
        let csv = price_response_csv(&table, 5.0, (0.0, 1.0), 21).unwrap();
        let means: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        for w in means.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "mean active must not increase with price");
        }
    }

    #[test]
    fn oracle_rejects_markov_scenarios() {
        let scenario = markov_preset(1);
        assert!(exact_table(&scenario, 0.1).is_err());
    }
}
