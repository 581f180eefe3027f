//! The `pppi` command line.
//!
//! Every evaluating subcommand works on a grid `alpha x m x lambda` built
//! from single values, lists or sweeps, evaluates the points in parallel and
//! prints one row per point in grid order.

mod config;
mod output;
mod sweep;
mod verify;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::combinatorics::{dump_classes, ExponentVector};
use crate::error::{Error, Result};
use crate::functionals::{
    interference_functional, laplace_moment_check, rayleigh_singular_moment, FunctionalSpec, NetworkConfig,
};
use crate::models::{FadingModel, PathLossKind, PathLossModel};
use crate::outage::{at_least_one, independent_baselines, joint_auto, joint_outage, success_auto, LinkConfig};
use crate::quadrature::QuadratureSpec;
use crate::simulator::{estimate_functional, estimate_link, SimConfig, TailMode};

pub use output::{sig9, write_rows, Format, Row};
pub use sweep::{Preset, PresetParams, Quantity, Scale, SweepSpec};

#[derive(Debug, Parser)]
#[command(
    name = "pppi",
    version,
    about = "Interference functionals and success probabilities in Poisson networks, with a Monte Carlo cross-check"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// E[prod_i I_i^p_i exp(-c I_i)] for the interference in q slots
    Functional(FunctionalArgs),
    /// Single-slot success probability (with the two-slot columns alongside)
    Outage(LinkArgs),
    /// Two-slot success, joint outage and time-diversity probabilities
    Joint(LinkArgs),
    /// Monte Carlo estimates with standard errors
    Simulate(SimulateArgs),
    /// Parameter sweeps, including the figure presets
    Sweep(SweepArgs),
    /// Compare analytic values with Monte Carlo estimates
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Clone)]
struct ModelFlags {
    /// Intensity of the interferer field
    #[arg(long, conflicts_with = "lambda_sweep")]
    lambda: Option<f64>,
    /// Intensity sweep lo:hi:steps[:log]
    #[arg(long, value_name = "LO:HI:STEPS[:log]")]
    lambda_sweep: Option<SweepSpec>,
    /// ALOHA transmit probability
    #[arg(long, default_value_t = 1.0)]
    tx_prob: f64,
    /// rayleigh | erlang:k | rice:k,psi | nakagami:m, optional :unit suffix
    #[arg(long)]
    fading: Option<FadingModel>,
    /// singular | min | eps:e | dist1
    #[arg(long, default_value = "singular")]
    pathloss: PathLossKind,
    /// Path-loss exponent (> 2)
    #[arg(long, conflicts_with_all = ["alpha_list", "alpha_sweep"])]
    alpha: Option<f64>,
    /// Comma-separated path-loss exponents
    #[arg(long, conflicts_with = "alpha_sweep")]
    alpha_list: Option<String>,
    /// Path-loss exponent sweep lo:hi:steps[:log]
    #[arg(long, value_name = "LO:HI:STEPS[:log]")]
    alpha_sweep: Option<SweepSpec>,
    /// Absolute quadrature tolerance
    #[arg(long, default_value_t = 1e-10)]
    abs_tol: f64,
    /// Relative quadrature tolerance
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
}

#[derive(Debug, Args, Clone)]
struct LinkFlags {
    /// Nakagami parameter of all links (integer)
    #[arg(long, conflicts_with = "m_list")]
    m: Option<u32>,
    /// Comma-separated Nakagami parameters
    #[arg(long)]
    m_list: Option<String>,
    /// SIR threshold
    #[arg(long)]
    theta: Option<f64>,
    /// Link distance
    #[arg(long, conflicts_with = "d_alpha_root")]
    d: Option<f64>,
    /// Set the link distance to BASE^(1/alpha)
    #[arg(long, value_name = "BASE")]
    d_alpha_root: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FuncMethod {
    /// closed form where one exists, quadrature otherwise
    Auto,
    ClosedForm,
    Quadrature,
    /// exact Laplace-transform derivatives (Rayleigh, singular, c = 1)
    Laplace,
}

#[derive(Debug, Args, Clone)]
struct FuncFlags {
    /// Comma-separated exponents p_1,...,p_q (one per slot)
    #[arg(long, conflicts_with = "k")]
    p: Option<String>,
    /// Single-slot exponent, shorthand for --p k
    #[arg(long)]
    k: Option<u32>,
    /// Damping constant c
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_enum, default_value_t = FuncMethod::Auto)]
    method: FuncMethod,
}

#[derive(Debug, Args, Clone)]
struct SimFlags {
    /// Number of replications
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Window radius; chosen from --bias-tol when absent
    #[arg(long)]
    window: Option<f64>,
    /// How the field outside the window is treated
    #[arg(long, default_value = "mean-field", value_parser = ["mean-field", "truncate"])]
    tail: String,
    /// Largest admissible truncation-bias bound when choosing the window
    #[arg(long, default_value_t = 1e-3)]
    bias_tol: f64,
}

#[derive(Debug, Args, Clone)]
struct OutFlags {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write rows to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for any of the long flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FunctionalArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    func: FuncFlags,
    /// Print the matrix classes used by the sum-product formula to stderr
    #[arg(long)]
    dump_matrices: bool,
    #[command(flatten)]
    out: OutFlags,
}

#[derive(Debug, Args)]
struct LinkArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    link: LinkFlags,
    #[command(flatten)]
    out: OutFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimQuantity {
    /// success, two-slot success and two-slot outage frequencies
    Link,
    /// E[prod_i I_i^p_i exp(-c I_i)]
    Functional,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SimQuantity::Link)]
    quantity: SimQuantity,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    link: LinkFlags,
    #[command(flatten)]
    func: FuncFlags,
    #[command(flatten)]
    sim: SimFlags,
    #[command(flatten)]
    out: OutFlags,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum, required_unless_present = "preset")]
    quantity: Option<Quantity>,
    /// Parameter set of one of the figures (fig1..fig8)
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    link: LinkFlags,
    #[command(flatten)]
    func: FuncFlags,
    #[command(flatten)]
    out: OutFlags,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = verify::Suite::Quick)]
    suite: verify::Suite,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Override the number of replications per case
    #[arg(long)]
    reps: Option<u64>,
    #[command(flatten)]
    out: OutFlags,
}

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 ok, 1 i/o failure, 2 usage or invalid input, 3 numerical accuracy
/// failure, 4 verification failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("pppi: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pppi: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Accuracy { .. } | Error::Domain(_) => 3,
        Error::Io(_) => 1,
        Error::InvalidInput(_) | Error::OutOfRange(_) | Error::Unsupported(_) => 2,
    }
}

fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config::config_path(&args) else {
        return Ok(args);
    };
    let path = PathBuf::from(path);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
    let entries = config::parse_config(&text, &path)?;
    Ok(config::inject(args, &entries))
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Functional(a) => {
            let setup = FuncSetup::new(&a.model, &a.func, false)?;
            if a.dump_matrices {
                eprintln!("{}", serde_json::to_string_pretty(&dump_classes(&setup.p)?).expect("json"));
            }
            let grid = Grid::new(&a.model, None, None, 0.1)?;
            let rows = par_rows(&grid, |pt| setup.row(pt))?;
            emit(&a.out, &rows)?;
        }
        Command::Outage(a) | Command::Joint(a) => {
            let setup = LinkSetup::new(&a.model, &a.link, None)?;
            let grid = Grid::new(&a.model, Some(&a.link), None, 0.01)?;
            let rows = par_rows(&grid, |pt| setup.row(pt))?;
            emit(&a.out, &rows)?;
        }
        Command::Sweep(a) => {
            let preset = a.preset.map(Preset::params);
            let quantity = a.quantity.or(preset.as_ref().map(|p| p.quantity)).expect("clap requires one");
            let rows = match quantity {
                Quantity::IExpI | Quantity::Functional => {
                    let setup = FuncSetup::new(&a.model, &a.func, quantity == Quantity::IExpI)?;
                    let grid = Grid::new(&a.model, None, preset.as_ref(), 0.1)?;
                    par_rows(&grid, |pt| setup.row(pt))?
                }
                Quantity::Outage | Quantity::Joint => {
                    let setup = LinkSetup::new(&a.model, &a.link, preset.as_ref())?;
                    let grid = Grid::new(&a.model, Some(&a.link), preset.as_ref(), 0.01)?;
                    par_rows(&grid, |pt| setup.row(pt))?
                }
            };
            emit(&a.out, &rows)?;
        }
        Command::Simulate(a) => {
            let sim = sim_config(&a.sim)?;
            let rows = match a.quantity {
                SimQuantity::Link => {
                    let setup = LinkSetup::new(&a.model, &a.link, None)?;
                    let grid = Grid::new(&a.model, Some(&a.link), None, 0.01)?;
                    grid.points().iter().map(|pt| setup.sim_row(pt, &sim)).collect::<Result<Vec<_>>>()?
                }
                SimQuantity::Functional => {
                    let setup = FuncSetup::new(&a.model, &a.func, false)?;
                    let grid = Grid::new(&a.model, None, None, 0.1)?;
                    grid.points().iter().map(|pt| setup.sim_row(pt, &sim)).collect::<Result<Vec<_>>>()?
                }
            };
            emit(&a.out, &rows)?;
        }
        Command::Verify(a) => {
            let (rows, failures) = verify::run_suite(a.suite, a.seed, a.reps)?;
            emit(&a.out, &rows)?;
            if failures > 0 {
                eprintln!("pppi: {failures} of {} checks disagree by more than 4 standard errors", rows.len());
                return Ok(4);
            }
        }
    }
    Ok(0)
}

fn emit(out: &OutFlags, rows: &[Row]) -> Result<()> {
    match &out.out {
        Some(path) => write_rows(BufWriter::new(File::create(path)?), rows, out.format),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_rows(&mut lock, rows, out.format)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn par_rows<F>(grid: &Grid, eval: F) -> Result<Vec<Row>>
where
    F: Fn(&Point) -> Result<Row> + Sync + Send,
{
    grid.points().par_iter().map(eval).collect()
}

fn sim_config(f: &SimFlags) -> Result<SimConfig> {
    if f.reps == 0 {
        return Err(Error::InvalidInput("--reps must be at least 1".into()));
    }
    Ok(SimConfig {
        window_radius: f.window,
        replications: f.reps,
        seed: f.seed,
        tail: f.tail.parse::<TailMode>()?,
        bias_tolerance: f.bias_tol,
    })
}

fn quad_spec(model: &ModelFlags) -> Result<QuadratureSpec> {
    QuadratureSpec::new(model.abs_tol, model.rel_tol, QuadratureSpec::default().max_subdivisions)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    alpha: f64,
    m: Option<u32>,
    lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Grid {
    alphas: Vec<f64>,
    ms: Vec<Option<u32>>,
    lambdas: Vec<f64>,
}

impl Grid {
    /// Command-line values win over preset values, which win over defaults.
    fn new(model: &ModelFlags, link: Option<&LinkFlags>, preset: Option<&PresetParams>, lambda: f64) -> Result<Self> {
        let alphas = if let Some(a) = model.alpha {
            vec![a]
        } else if let Some(list) = &model.alpha_list {
            sweep::parse_list(list)?
        } else if let Some(s) = &model.alpha_sweep {
            s.values()
        } else if let Some(p) = preset {
            match &p.alpha_sweep {
                Some(s) => s.values(),
                None => p.alphas.clone(),
            }
        } else {
            vec![4.0]
        };
        let lambdas = if let Some(l) = model.lambda {
            vec![l]
        } else if let Some(s) = &model.lambda_sweep {
            s.values()
        } else if let Some(p) = preset {
            match (&p.lambda_sweep, p.lambda) {
                (Some(s), _) => s.values(),
                (None, Some(l)) => vec![l],
                (None, None) => vec![lambda],
            }
        } else {
            vec![lambda]
        };
        let ms = match link {
            None => vec![None],
            Some(_) if model.fading.is_some() => vec![None],
            Some(l) => {
                let list: Vec<u32> = if let Some(m) = l.m {
                    vec![m]
                } else if let Some(list) = &l.m_list {
                    sweep::parse_list(list)?
                } else if let Some(p) = preset {
                    p.ms.clone()
                } else {
                    vec![3]
                };
                list.into_iter().map(Some).collect()
            }
        };
        if alphas.is_empty() || lambdas.is_empty() || ms.is_empty() {
            return Err(Error::InvalidInput("empty parameter list".into()));
        }
        Ok(Self { alphas, ms, lambdas })
    }

    fn points(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.alphas.len() * self.ms.len() * self.lambdas.len());
        for &alpha in &self.alphas {
            for &m in &self.ms {
                for &lambda in &self.lambdas {
                    pts.push(Point { alpha, m, lambda });
                }
            }
        }
        pts
    }
}

/// Fixed settings of a functional evaluation.
#[derive(Debug, Clone)]
struct FuncSetup {
    fading: FadingModel,
    pathloss: PathLossKind,
    tx_prob: f64,
    p: ExponentVector,
    c: f64,
    method: FuncMethod,
    quad: QuadratureSpec,
}

impl FuncSetup {
    fn new(model: &ModelFlags, func: &FuncFlags, i_exp_i: bool) -> Result<Self> {
        if i_exp_i && (func.p.is_some() || func.c.is_some_and(|c| c != 1.0)) {
            return Err(Error::InvalidInput("--quantity i-exp-i fixes c = 1 and a single slot; use --k".into()));
        }
        let p = match (&func.p, func.k) {
            (Some(list), _) => ExponentVector::new(sweep::parse_list(list)?)?,
            (None, Some(k)) => ExponentVector::scalar(k)?,
            (None, None) => ExponentVector::scalar(1)?,
        };
        let c = func.c.unwrap_or(1.0);
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidInput(format!("damping c must be positive, got {c}")));
        }
        Ok(Self {
            fading: model.fading.unwrap_or_else(FadingModel::rayleigh),
            pathloss: model.pathloss,
            tx_prob: model.tx_prob,
            p,
            c,
            method: func.method,
            quad: quad_spec(model)?,
        })
    }

    fn network(&self, pt: &Point) -> Result<NetworkConfig> {
        NetworkConfig::new(pt.lambda, self.tx_prob, self.fading, PathLossModel::new(self.pathloss, pt.alpha)?)
    }

    fn inputs(&self, pt: &Point) -> Row {
        Row::default()
            .input("fading", self.fading)
            .input("pathloss", self.pathloss)
            .input("alpha", pt.alpha)
            .input("lambda", pt.lambda)
            .input("tx_prob", self.tx_prob)
            .input("p", p_list(&self.p))
            .input("c", self.c)
    }

    /// `Some(k)` when the Rayleigh/singular closed forms apply.
    fn closed_form_order(&self) -> Option<u32> {
        let exponential = self.fading.gamma_shape() == Some(1.0) && self.fading.mean() == 1.0;
        let k = self.p.total();
        (exponential && self.pathloss == PathLossKind::Singular && self.p.len() == 1 && self.c == 1.0 && (1..=4).contains(&k))
            .then_some(k)
    }

    fn row(&self, pt: &Point) -> Result<Row> {
        let network = self.network(pt)?;
        let closed = self.closed_form_order();
        let need_closed = |what: &str| {
            closed.ok_or_else(|| {
                Error::Unsupported(format!(
                    "{what} needs Rayleigh fading, singular path loss, one slot, c = 1 and k in 1..=4"
                ))
            })
        };
        let (value, method) = match self.method {
            FuncMethod::Auto if closed.is_some() => {
                (rayleigh_singular_moment(closed.unwrap(), pt.lambda, self.tx_prob, pt.alpha)?, "closed-form")
            }
            FuncMethod::ClosedForm => {
                (rayleigh_singular_moment(need_closed("--method closed-form")?, pt.lambda, self.tx_prob, pt.alpha)?, "closed-form")
            }
            FuncMethod::Laplace => {
                (laplace_moment_check(need_closed("--method laplace")?, pt.lambda, self.tx_prob, pt.alpha)?, "laplace")
            }
            FuncMethod::Auto | FuncMethod::Quadrature => {
                let spec = FunctionalSpec::new(self.p.clone(), self.c)?;
                (interference_functional(&network, &spec, &self.quad)?, "quadrature")
            }
        };
        Ok(self.inputs(pt).output("value", value).method(method))
    }

    fn sim_row(&self, pt: &Point, sim: &SimConfig) -> Result<Row> {
        let network = self.network(pt)?;
        let spec = FunctionalSpec::new(self.p.clone(), self.c)?;
        let est = estimate_functional(&network, &spec, sim)?;
        Ok(sim_inputs(self.inputs(pt), sim)
            .output("value", est.mean)
            .output("value_se", est.std_error)
            .output("window_radius", est.window_radius)
            .output("bias_bound", est.truncation_bias_bound)
            .method("monte-carlo"))
    }
}

/// `p` as accepted by `--p`.
fn p_list(p: &ExponentVector) -> String {
    p.as_slice().iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn sim_inputs(row: Row, sim: &SimConfig) -> Row {
    let tail = match sim.tail {
        TailMode::MeanField => "mean-field",
        TailMode::Truncate => "truncate",
    };
    let row = row.input("reps", sim.replications).input("seed", sim.seed).input("tail", tail);
    match sim.window_radius {
        Some(r) => row.input("window", r),
        None => row.input("bias_tol", sim.bias_tolerance),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Distance {
    Fixed(f64),
    AlphaRoot(f64),
}

/// Fixed settings of a link evaluation.
#[derive(Debug, Clone)]
struct LinkSetup {
    fading: Option<FadingModel>,
    pathloss: PathLossKind,
    tx_prob: f64,
    theta: f64,
    distance: Distance,
    quad: QuadratureSpec,
}

impl LinkSetup {
    fn new(model: &ModelFlags, link: &LinkFlags, preset: Option<&PresetParams>) -> Result<Self> {
        if model.fading.is_some() && (link.m.is_some() || link.m_list.is_some()) {
            return Err(Error::InvalidInput(
                "give the link fading either through --fading or through --m/--m-list, not both".into(),
            ));
        }
        let distance = match (link.d, link.d_alpha_root, preset) {
            (Some(d), _, _) => Distance::Fixed(d),
            (None, Some(base), _) => Distance::AlphaRoot(base),
            (None, None, Some(p)) => match p.distance_root {
                Some(base) => Distance::AlphaRoot(base),
                None => Distance::Fixed(p.distance),
            },
            (None, None, None) => Distance::Fixed(2.0),
        };
        Ok(Self {
            fading: model.fading,
            pathloss: model.pathloss,
            tx_prob: model.tx_prob,
            theta: link.theta.or(preset.map(|p| p.theta)).unwrap_or(0.5),
            distance,
            quad: quad_spec(model)?,
        })
    }

    fn link(&self, pt: &Point) -> Result<LinkConfig> {
        let fading = match (self.fading, pt.m) {
            (Some(f), _) => f,
            (None, Some(m)) => FadingModel::nakagami(f64::from(m))?,
            (None, None) => FadingModel::nakagami(3.0)?,
        };
        let d = match self.distance {
            Distance::Fixed(d) => d,
            Distance::AlphaRoot(base) => base.powf(1.0 / pt.alpha),
        };
        let network = NetworkConfig::new(pt.lambda, self.tx_prob, fading, PathLossModel::new(self.pathloss, pt.alpha)?)?;
        LinkConfig::new(network, self.theta, d)
    }

    fn inputs(&self, link: &LinkConfig) -> Row {
        let net = &link.network;
        Row::default()
            .input("fading", net.fading)
            .input("pathloss", net.pathloss.kind())
            .input("alpha", net.pathloss.alpha())
            .input("lambda", net.intensity)
            .input("tx_prob", net.tx_prob)
            .input("m", link.m())
            .input("theta", link.threshold)
            .input("d", link.distance)
    }

    fn row(&self, pt: &Point) -> Result<Row> {
        let link = self.link(pt)?;
        let (p, m1) = success_auto(&link, &self.quad)?;
        let (pj, m2) = joint_auto(&link, &self.quad)?;
        let (sq, div) = independent_baselines(p);
        let method = if m1 == m2 {
            m1.as_str().to_string()
        } else {
            format!("{}/{}", m1.as_str(), m2.as_str())
        };
        Ok(self
            .inputs(&link)
            .output("p_success", p)
            .output("p_joint", pj)
            .output("p_joint_outage", joint_outage(p, pj))
            .output("p_at_least_one", at_least_one(p, pj))
            .output("p_indep_square", sq)
            .output("p_indep_diversity", div)
            .method(&method))
    }

    fn sim_row(&self, pt: &Point, sim: &SimConfig) -> Result<Row> {
        let link = self.link(pt)?;
        let est = estimate_link(&link, sim)?;
        Ok(sim_inputs(self.inputs(&link), sim)
            .output("p_success", est.success.mean)
            .output("p_success_se", est.success.std_error)
            .output("p_joint", est.joint.mean)
            .output("p_joint_se", est.joint.std_error)
            .output("p_joint_outage", est.joint_outage.mean)
            .output("p_joint_outage_se", est.joint_outage.std_error)
            .output("window_radius", est.success.window_radius)
            .output("bias_bound", est.joint.truncation_bias_bound)
            .method("monte-carlo"))
    }
}
