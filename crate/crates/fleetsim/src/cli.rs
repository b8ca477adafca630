//! Command-line interface.

use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fleetsim_core::analysis::{self, PlanningParams, VehicleRounding};
use fleetsim_core::engine::{self, ExperimentOptions, RunLimits};
use fleetsim_core::geometry::{self, grid_multimedian, ServiceArea};
use fleetsim_core::stats::{self, WelchConfig};
use fleetsim_core::PolicyId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{self, ConfigOverrides};
use crate::formats::{self, LayoutFile, Summary};
use crate::runner;
use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "fleetsim", version, about = "Multi-depot UAV delivery fleet simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the replications of one (policy, K, L) cell and write its traces.
    Simulate(SimulateArgs),
    /// Run a grid of cells and write one summary row per cell.
    Sweep(SweepArgs),
    /// Write the minimum-expenditure staircase.
    Frontier(FrontierArgs),
    /// Write depot layouts with their multi-median values.
    Placement(PlacementArgs),
    /// Re-run the warm-up analysis on stored job traces.
    Welch(WelchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON file with any subset of the configuration keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Master seed; replication r uses seed + r.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Deliveries before the first stability check.
    #[arg(long = "n-customers", default_value_t = 4000)]
    pub n_customers: usize,
    /// Arrival count an undecided run is extended to.
    #[arg(long = "arrival-cap", default_value_t = 10_000)]
    pub arrival_cap: usize,
    /// Use this warm-up length instead of Welch's estimate.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Half-width of the Welch window.
    #[arg(long = "half-window", default_value_t = 500)]
    pub half_window: usize,
}

impl RunArgs {
    pub fn options(&self) -> ExperimentOptions {
        ExperimentOptions {
            replications: self.reps,
            master_seed: self.seed,
            limits: RunLimits {
                n_customers: self.n_customers,
                arrival_cap: self.arrival_cap.max(self.n_customers),
                ..RunLimits::default()
            },
            welch: WelchConfig {
                half_window: self.half_window,
                ..WelchConfig::default()
            },
            warmup_override: self.warmup,
            ..ExperimentOptions::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = "fj+")]
    pub policy: PolicyId,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = "nj+,nj-,fj+,fj-")]
    pub policies: String,
    /// Vehicle counts, e.g. `1..24` or `8,12,16`.
    #[arg(long = "K-range", alias = "Ks", default_value = "1..24")]
    pub k_range: String,
    /// Depot counts, e.g. `1,4,9,16`.
    #[arg(long = "L-range", alias = "Ls", default_value = "1,4,9,16")]
    pub l_range: String,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FrontierArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Largest depot count considered.
    #[arg(long = "l-max", default_value_t = 100)]
    pub l_max: usize,
    #[arg(long = "vehicle-rounding", default_value = "paper")]
    pub vehicle_rounding: VehicleRounding,
    /// Sweep CSV whose stable cells are written as operating points.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlacementArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Depot counts to place.
    #[arg(long = "L-range", alias = "Ls", default_value = "1,4,9,16")]
    pub l_range: String,
    /// Monte Carlo samples for the reported estimate.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct WelchArgs {
    /// Job-trace CSV files, one per replication.
    #[arg(required = true)]
    pub jobs: Vec<PathBuf>,
    #[arg(long = "half-window", default_value_t = 500)]
    pub half_window: usize,
    /// Relative half-width of the flatness band.
    #[arg(long, default_value_t = 0.05)]
    pub band: f64,
    #[arg(long, default_value = "welch.csv")]
    pub out: PathBuf,
}

/// Parses `a..b` (inclusive), `a..=b`, or a comma list of either.
pub fn parse_range(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("cannot parse range `{spec}`"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_policies(spec: &str) -> CliResult<Vec<PolicyId>> {
    spec.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<PolicyId>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

fn load_config(args: &ConfigArgs) -> CliResult<fleetsim_core::SystemConfig> {
    config::load(args.config.as_deref(), &args.overrides)
}

/// File-name form of a policy token (`fj+` → `fj-plus`).
pub fn policy_slug(policy: PolicyId) -> String {
    policy.token().replace('+', "-plus").replace("j-", "j-minus").replace("-minusplus", "-plus")
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Frontier(a) => frontier(&a),
        Command::Placement(a) => placement(&a),
        Command::Welch(a) => welch(&a),
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let opts = args.run.options();
    let (result, traces) = runner::run_experiment(&cfg, args.policy, &opts)?;
    let out = &args.out;
    for t in &traces {
        formats::write_file(&out.join(format!("jobs_seed{}.csv", t.seed)), |w| formats::write_jobs_csv(w, &t.jobs))?;
        formats::write_file(&out.join(format!("pending_seed{}.csv", t.seed)), |w| {
            formats::write_pending_csv(w, &t.samples)
        })?;
    }
    if let Some(curve) = &result.welch {
        formats::write_file(&out.join("welch.csv"), |w| formats::write_welch_csv(w, curve))?;
    }
    let layout = engine::depot_layout(&cfg)?;
    formats::write_json(&out.join("layout.json"), &LayoutFile::new(cfg.side_km, &layout))?;
    let summary = Summary::from(&result);
    formats::write_json(&out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string(&summary)?);
    if result.energy_violations > 0 {
        eprintln!("warning: {} energy violations (battery empty in flight)", result.energy_violations);
    }
    if result.estimate.is_none() {
        return Err(CliError::AllUnstable);
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let base = load_config(&args.config)?;
    let policies = parse_policies(&args.policies)?;
    let ks = parse_range(&args.k_range)?;
    let ls = parse_range(&args.l_range)?;
    // Validate every cell before simulating any.
    let cells = runner::sweep_cells(&base, &policies, &ls, &ks);
    for c in &cells {
        c.config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let results = runner::run_cells(&cells, &args.run.options())?;
    let summaries: Vec<Summary> = results.iter().map(Summary::from).collect();
    for s in &summaries {
        let name = format!(
            "{}_L{}_K{}.json",
            policy_slug(s.policy.parse().expect("tokens round-trip")),
            s.depots,
            s.vehicles
        );
        formats::write_json(&args.out.join("cells").join(name), s)?;
    }
    formats::write_file(&args.out.join("sweep.csv"), |w| formats::write_sweep_csv(w, &summaries))?;

    let params = PlanningParams::from_config(&base);
    let regions: Vec<_> = ls
        .iter()
        .map(|&l| {
            let layout = engine::depot_layout(&base.clone().with_fleet(1, l))?;
            Ok(analysis::impossible_region(&params, l, layout.h_l))
        })
        .collect::<CliResult<_>>()?;
    formats::write_file(&args.out.join("impossible.csv"), |w| formats::write_impossible_csv(w, &regions))?;
    println!("{} cells written to {}", summaries.len(), args.out.display());
    Ok(())
}

pub fn frontier(args: &FrontierArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    if cfg.cost_vehicle == 0.0 && cfg.cost_depot == 0.0 {
        return Err(CliError::Config("frontier needs C_v or C_d to be non-zero".into()));
    }
    let params = PlanningParams::from_config(&cfg);
    let area = ServiceArea::new(cfg.side_km)?;
    let h = |l: usize| grid_multimedian(&area, l);
    let points = analysis::grid_frontier(&params, args.l_max, args.vehicle_rounding)?;
    let envelope = analysis::integer_envelope(&params, &points, h);
    formats::write_file(&args.out.join("frontier.csv"), |w| formats::write_frontier_csv(w, &points))?;
    formats::write_file(&args.out.join("envelope.csv"), |w| formats::write_envelope_csv(w, &envelope))?;
    if let Some(path) = &args.sweep {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let rows = formats::read_sweep_csv(file)?;
        write_operating_points(&args.out.join("operating_points.csv"), &rows, &cfg)?;
    }
    for p in points.iter().take(4) {
        println!(
            "L={:<3} T>={:.3} min  I_min={:.2}  (l*={}, K={})",
            p.depots,
            p.t_tread.as_minutes(),
            p.i_min,
            p.l_star,
            p.k_term
        );
    }
    Ok(())
}

fn write_operating_points(path: &Path, rows: &[Summary], cfg: &fleetsim_core::SystemConfig) -> CliResult<()> {
    formats::write_file(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["policy", "K", "L", "T_mean_min", "cost_usd"])?;
        for r in rows.iter().filter(|r| r.stable) {
            let Some(t) = r.t_mean_min else { continue };
            let cost = analysis::infra_cost(r.vehicles as f64, r.depots as f64, cfg.cost_vehicle, cfg.cost_depot);
            out.write_record([
                r.policy.clone(),
                r.vehicles.to_string(),
                r.depots.to_string(),
                format!("{t:.6}"),
                format!("{cost:.2}"),
            ])?;
        }
        out.flush().map_err(|e| CliError::Format(e.to_string()))
    })
}

pub fn placement(args: &PlacementArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let area = cfg.area()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for l in parse_range(&args.l_range)? {
        let layout = engine::depot_layout(&cfg.clone().with_fleet(1, l))?;
        let est = geometry::multimedian_value(&layout, &area, args.samples, &mut rng)?;
        let zemel = geometry::zemel_lower_bound(area.area(), l);
        formats::write_json(&args.out.join(format!("layout_L{l}.json")), &LayoutFile::new(cfg.side_km, &layout))?;
        println!(
            "L={l:<3} H={:.6} km  monte-carlo={:.6}±{:.6}  zemel={:.6}",
            layout.h_l, est.mean, est.std_error, zemel
        );
    }
    Ok(())
}

pub fn welch(args: &WelchArgs) -> CliResult<()> {
    let mut series = Vec::new();
    for path in &args.jobs {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        series.push(formats::read_delivery_series(file)?);
    }
    let shortest = series.iter().map(Vec::len).min().unwrap_or(0);
    let refs: Vec<&[f64]> = series.iter().map(|s| &s[..shortest]).collect();
    let cfg = WelchConfig {
        half_window: args.half_window,
        band: args.band,
    };
    let warmup = stats::welch_warmup(&refs, &cfg)?;
    let curve = stats::welch_curve(&refs, args.half_window)?;
    formats::write_file(&args.out, |w| formats::write_welch_csv(w, &curve))?;
    println!("{}", serde_json::to_string(&warmup)?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..4").unwrap(), [1, 2, 3, 4]);
        assert_eq!(parse_range("1,4,9,16").unwrap(), [1, 4, 9, 16]);
        assert_eq!(parse_range("2..=3,8").unwrap(), [2, 3, 8]);
        assert!(parse_range("4..1").is_err());
        assert!(parse_range("").is_err());
        assert!(parse_range("a").is_err());
    }

    #[test]
    fn slugs() {
        let slugs: Vec<String> = PolicyId::ALL.into_iter().map(policy_slug).collect();
        assert_eq!(slugs, ["nj-plus", "nj-minus", "fj-plus", "fj-minus"]);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
