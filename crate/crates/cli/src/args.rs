use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hedgecost::hedge_sim::DEFAULT_DELTA_THRESHOLD;
use hedgecost::unit_cost::{DEFAULT_K_STEP, DEFAULT_T_STEP, EXPIRY_CUTOFF};
use hedgecost::HOUR;
use serde::Serialize;

const TIME_UNITS: &str = "Times are in years: one trading day is 1/252 and one trading hour is 1/(252 x 6.5). \
Spot is normalized to 1, so strikes are moneyness K / S0. \
A JSON file given with --config supplies default flag values (keys are long flag names, \
an optional \"command\" key names the subcommand); flags on the command line take precedence.";

#[derive(Debug, Parser)]
#[command(name = "hedgecost", version, about = "Liquidity cost of delta hedging against a limit-order supply curve", long_about = None, after_help = TIME_UNITS)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Worker threads for quadrature and simulation; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// JSON file with default flag values.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unit liquidity cost I by quadrature, optionally over a parameter sweep.
    Unitcost(UnitCostArgs),
    /// Monte Carlo liquidity cost of a rebalancing policy.
    Simulate(SimulateArgs),
    /// Distribution of the discrete-hedging liquidity cost.
    Distribution(DistributionArgs),
    /// Order-book supply curves and slope fits.
    #[command(subcommand)]
    Supplycurve(SupplyCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Unitcost(_) => "unitcost",
            Command::Simulate(_) => "simulate",
            Command::Distribution(_) => "distribution",
            Command::Supplycurve(SupplyCommand::Fit(_)) => "supplycurve fit",
            Command::Supplycurve(SupplyCommand::Stationary(_)) => "supplycurve stationary",
            Command::Supplycurve(SupplyCommand::Eval(_)) => "supplycurve eval",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MarketArgs {
    #[arg(long, visible_alias = "sigma", default_value_t = 0.3, allow_negative_numbers = true)]
    pub vol: f64,

    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub rate: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptionArgs {
    /// Option maturity in years.
    #[arg(long, visible_alias = "T", default_value_t = 0.1)]
    pub maturity: f64,

    /// Strike over spot.
    #[arg(long, visible_alias = "K", default_value_t = 1.0)]
    pub moneyness: f64,

    /// Hedge a put instead of a call.
    #[arg(long)]
    pub put: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct UnitCostArgs {
    #[command(flatten)]
    pub market: MarketArgs,

    #[command(flatten)]
    pub option: OptionArgs,

    /// Supply-curve slope used for the scaled cost.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    #[arg(long, default_value_t = 1.0)]
    pub n_options: f64,

    /// Spot price used for the scaled cost.
    #[arg(long, default_value_t = 1.0)]
    pub spot: f64,

    #[arg(long, default_value_t = DEFAULT_T_STEP)]
    pub t_step: f64,

    #[arg(long, default_value_t = DEFAULT_K_STEP)]
    pub k_step: f64,

    /// Hedging stops this long before maturity.
    #[arg(long, default_value_t = EXPIRY_CUTOFF)]
    pub expiry_cutoff: f64,

    /// Evaluate every combination of --vols, --maturities and --strikes.
    #[arg(long)]
    pub sweep: bool,

    #[arg(long, value_delimiter = ',', requires = "sweep")]
    pub vols: Option<Vec<f64>>,

    #[arg(long, value_delimiter = ',', requires = "sweep")]
    pub maturities: Option<Vec<f64>>,

    #[arg(long, value_delimiter = ',', requires = "sweep")]
    pub strikes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Rebalance every trading hour.
    Hourly,
    /// Rebalance whenever the delta has moved by --threshold.
    Threshold,
    /// Rebalance every --dt years.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostFormArg {
    /// Trade the exact change in Black-Scholes delta.
    Exact,
    /// Charge the second-order gamma approximation per step.
    Gamma,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub market: MarketArgs,

    #[command(flatten)]
    pub option: OptionArgs,

    #[arg(long, value_enum, default_value_t = PolicyKind::Hourly)]
    pub policy: PolicyKind,

    /// Rebalancing interval for the fixed policy.
    #[arg(long, default_value_t = HOUR)]
    pub dt: f64,

    #[arg(long, default_value_t = DEFAULT_DELTA_THRESHOLD)]
    pub threshold: f64,

    /// Monitoring step for the threshold policy; a tenth of an hour by default.
    #[arg(long)]
    pub monitor_dt: Option<f64>,

    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Hedging stops here; one trading day before maturity by default.
    #[arg(long)]
    pub stop_time: Option<f64>,

    /// Slope of the discrete supply curve.
    #[arg(long, default_value_t = 1.0)]
    pub alpha_prime: f64,

    #[arg(long, default_value_t = 1.0)]
    pub n_options: f64,

    #[arg(long, value_enum, default_value_t = CostFormArg::Exact)]
    pub cost_form: CostFormArg,

    /// Simulate under a physical drift instead of the risk-free rate.
    #[arg(long, allow_negative_numbers = true)]
    pub drift: Option<f64>,

    /// Include every path's cost in the report.
    #[arg(long)]
    pub keep_paths: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct DistributionArgs {
    #[command(flatten)]
    pub market: MarketArgs,

    #[command(flatten)]
    pub option: OptionArgs,

    /// Rebalancing dates, equally spaced up to maturity.
    #[arg(long, default_value_t = 50)]
    pub steps: usize,

    #[arg(long, default_value_t = 1.0)]
    pub alpha_prime: f64,

    #[arg(long, default_value_t = 200)]
    pub x_nodes: usize,

    #[arg(long, default_value_t = 200)]
    pub xi_nodes: usize,

    /// Largest cost on the grid; a multiple of the mean cost by default.
    #[arg(long)]
    pub xi_max: Option<f64>,

    #[arg(long, default_value_t = 20.0)]
    pub xi_max_multiple: f64,

    /// Add Monte Carlo CDF and histogram columns.
    #[arg(long)]
    pub mc_overlay: bool,

    #[arg(long, default_value_t = 100_000)]
    pub mc_paths: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum SupplyCommand {
    /// Fit the supply-curve slope of a book snapshot.
    Fit(FitArgs),
    /// Expected stationary book of a Poisson order-flow model.
    Stationary(StationaryArgs),
    /// Average execution price of a market order.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BookArgs {
    /// CSV with columns side,price,size.
    #[arg(long)]
    pub book: PathBuf,

    #[arg(long)]
    pub tick: Option<f64>,

    /// Mid price; the touch midpoint by default.
    #[arg(long)]
    pub mid: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeArg {
    /// Slope at zero size from the first few levels.
    Continuous,
    /// Secant slope at trade size --q.
    Discrete,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SlopeArgs {
    #[arg(long, value_enum, default_value_t = RegimeArg::Continuous)]
    pub regime: RegimeArg,

    /// Levels per side in the continuous fit.
    #[arg(long, default_value_t = hedgecost::supply_curve::DEFAULT_FIT_LEVELS)]
    pub levels: usize,

    /// Signed trade size for the discrete fit.
    #[arg(long, allow_negative_numbers = true, required_if_eq("regime", "discrete"))]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct FitArgs {
    #[command(flatten)]
    pub book: BookArgs,

    #[command(flatten)]
    pub slope: SlopeArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct StationaryArgs {
    /// Limit-order rate at the first tick, repeated across the book.
    #[arg(long, conflicts_with_all = ["lambda", "power_k"])]
    pub lambda1: Option<f64>,

    /// Limit-order rate per tick.
    #[arg(long, value_delimiter = ',', conflicts_with = "power_k")]
    pub lambda: Option<Vec<f64>>,

    /// Power-law rates k / i^a; needs --power-a.
    #[arg(long, requires = "power_a")]
    pub power_k: Option<f64>,

    #[arg(long)]
    pub power_a: Option<f64>,

    /// Market-order rate at the touch.
    #[arg(long)]
    pub mu: f64,

    /// Cancellation rate per resting order at the first tick, repeated across the book.
    #[arg(long, conflicts_with = "theta")]
    pub theta1: Option<f64>,

    /// Cancellation rate per tick.
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,

    /// Number of ticks; the length of the rate lists by default.
    #[arg(long)]
    pub depth: Option<usize>,

    /// Tick size of the synthetic book.
    #[arg(long, default_value_t = 0.01)]
    pub tick: f64,

    /// Mid price of the synthetic book.
    #[arg(long, default_value_t = 1.0)]
    pub mid: f64,

    #[command(flatten)]
    pub slope: SlopeArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[command(flatten)]
    pub book: BookArgs,

    /// Signed order size: positive buys, negative sells.
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
}
