//! Command-line arguments, their canonical text form and the metadata sidecar.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use scwave::coupled::RunOptions;
use scwave::density::{ChannelFamily, ChannelSpec};
use scwave::ensemble::DegreeDistribution;
use scwave::single::DensityDeOptions;
use scwave::soliton::{GeneralOptions, SolverGrid};

use crate::error::{config, CliResult};

#[derive(Debug, Parser)]
#[command(name = "scwave", version, about = "Decoding-wave velocities of spatially coupled systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BP and MAP thresholds of an LDPC ensemble.
    Thresholds(CommonArgs),
    /// Single-system potential along x (BEC) or along the DE trajectory.
    Potential(CommonArgs),
    /// Coupled simulation with kink tracking.
    Run(CommonArgs),
    /// Analytic (soliton) or empirical (coupled run) velocity.
    Velocity(CommonArgs),
    /// Gaussian-approximation thresholds and velocities.
    Ga(CommonArgs),
    /// Generalized LDPC scalar system.
    Gldpc(CommonArgs),
    /// Compressive-sensing state evolution.
    Cs(CommonArgs),
    /// Scaling-law parameter from the BEC velocity.
    Gamma(CommonArgs),
    /// Velocity over a parameter range.
    Sweep(CommonArgs),
    /// Regenerates one of the reference tables.
    ReproduceTable(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Thresholds,
    Potential,
    Run,
    Velocity,
    Ga,
    Gldpc,
    Cs,
    Gamma,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelArg {
    Bec,
    Bsc,
    Biawgn,
}

impl From<ChannelArg> for ChannelFamily {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Bec => ChannelFamily::Bec,
            ChannelArg::Bsc => ChannelFamily::Bsc,
            ChannelArg::Biawgn => ChannelFamily::Biawgn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Analytic,
    Empirical,
    Both,
}

impl Mode {
    pub fn analytic(self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }
    pub fn empirical(self) -> bool {
        matches!(self, Mode::Empirical | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SystemArg {
    Ldpc,
    Ga,
    Gldpc,
    Cs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct CommonArgs {
    /// `l,r`, `L:...;R:...` (node degrees) or `lambda:...;rho:...` (edge degrees).
    #[arg(long, default_value = "3,6")]
    pub ensemble: String,
    #[arg(long, value_enum, default_value = "bec")]
    pub channel: ChannelArg,
    /// Erasure probability (BEC) or the control parameter of a scalar system.
    #[arg(long, visible_alias = "delta")]
    pub eps: Option<f64>,
    /// BSC crossover probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// BIAWGN noise variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// BIAWGN channel mean `2/σ²`.
    #[arg(long = "psi-inv-hc")]
    pub psi_inv_hc: Option<f64>,
    /// Chain length `L_c`.
    #[arg(long = "L", default_value_t = 1024)]
    pub l_c: usize,
    #[arg(long, default_value_t = 8)]
    pub w: usize,
    #[arg(long = "z-min", default_value_t = -8.0, allow_hyphen_values = true)]
    pub z_min: f64,
    #[arg(long = "z-max", default_value_t = 8.0, allow_hyphen_values = true)]
    pub z_max: f64,
    /// Solver step; must be the reciprocal of an integer.
    #[arg(long, default_value_t = 0.05)]
    pub hz: f64,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long = "max-sweeps", default_value_t = 10_000)]
    pub max_sweeps: usize,
    #[arg(long, value_enum, default_value = "analytic")]
    pub mode: Mode,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// GLDPC component code length.
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    /// GLDPC erasure-correction parameter.
    #[arg(long, default_value_t = 3)]
    pub e: usize,
    /// Compressive-sensing sparsity.
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e5)]
    pub snr: f64,
    /// Slab variance of the Bernoulli-Gaussian prior (default `1/ρ`).
    #[arg(long = "slab-variance")]
    pub slab_variance: Option<f64>,
    #[arg(long = "system", value_enum, default_value = "ldpc")]
    pub system: SystemArg,
    #[arg(long = "param-from", allow_hyphen_values = true)]
    pub param_from: Option<f64>,
    #[arg(long = "param-to", allow_hyphen_values = true)]
    pub param_to: Option<f64>,
    #[arg(long = "param-steps", default_value_t = 5)]
    pub param_steps: usize,
    /// Distance below `ε_MAP` for the scaling-law estimate.
    #[arg(long = "delta-eps", default_value_t = 0.04)]
    pub delta_eps: f64,
    #[arg(long = "t-max", default_value_t = 20_000)]
    pub t_max: usize,
    #[arg(long = "t-transient", default_value_t = 100)]
    pub t_transient: usize,
    #[arg(long = "sample-every", default_value_t = 20)]
    pub sample_every: usize,
}

impl Default for CommonArgs {
    fn default() -> Self {
        let cli = Cli::try_parse_from(["scwave", "run"]).expect("defaults parse");
        match cli.command {
            Command::Run(a) => a,
            _ => unreachable!(),
        }
    }
}

impl CommonArgs {
    pub fn ensemble(&self) -> CliResult<DegreeDistribution> {
        Ok(DegreeDistribution::parse(&self.ensemble)?)
    }

    pub fn regular(&self) -> CliResult<(usize, usize)> {
        self.ensemble()?
            .regular_degrees()
            .ok_or_else(|| config(format!("'{}' is not a regular ensemble", self.ensemble)))
    }

    /// Channel parameter in the family's own units.
    pub fn channel_parameter(&self) -> CliResult<f64> {
        match self.channel {
            ChannelArg::Bec => self.eps.ok_or_else(|| config("--channel bec needs --eps")),
            ChannelArg::Bsc => self.p.ok_or_else(|| config("--channel bsc needs --p")),
            ChannelArg::Biawgn => match (self.sigma2, self.psi_inv_hc) {
                (Some(s), None) => Ok(s),
                (None, Some(m)) if m > 0.0 => Ok(2.0 / m),
                (None, Some(m)) => Err(config(format!("--psi-inv-hc must be positive, got {m}"))),
                (Some(_), Some(_)) => Err(config("give only one of --sigma2 and --psi-inv-hc")),
                (None, None) => Err(config("--channel biawgn needs --sigma2 or --psi-inv-hc")),
            },
        }
    }

    pub fn channel_spec(&self) -> CliResult<ChannelSpec> {
        Ok(ChannelSpec::new(self.channel.into(), self.channel_parameter()?)?)
    }

    /// GA channel mean from `--psi-inv-hc` or `--sigma2`.
    pub fn ga_mean(&self) -> CliResult<f64> {
        match (self.psi_inv_hc, self.sigma2) {
            (Some(m), None) if m > 0.0 => Ok(m),
            (None, Some(s)) => Ok(scwave::ga::mean_from_sigma2(s)?),
            (Some(_), Some(_)) => Err(config("give only one of --sigma2 and --psi-inv-hc")),
            _ => Err(config("GA needs a positive --psi-inv-hc or --sigma2")),
        }
    }

    pub fn eps(&self) -> CliResult<f64> {
        self.eps.ok_or_else(|| config("this command needs --eps"))
    }

    pub fn solver_grid(&self) -> CliResult<SolverGrid> {
        if !(self.hz > 0.0) {
            return Err(config(format!("--hz must be positive, got {}", self.hz)));
        }
        let k = (1.0 / self.hz).round();
        if (k * self.hz - 1.0).abs() > 1e-9 {
            return Err(config(format!("--hz {} is not the reciprocal of an integer", self.hz)));
        }
        if !(self.tol > 0.0) {
            return Err(config(format!("--tol must be positive, got {}", self.tol)));
        }
        let grid = SolverGrid {
            z_min: self.z_min,
            z_max: self.z_max,
            per_unit: k as usize,
            damping: self.damping,
            max_sweeps: self.max_sweeps,
            tol: self.tol,
        };
        grid.points().map_err(|e| config(e.to_string()))?;
        Ok(grid)
    }

    pub fn general_options(&self) -> CliResult<GeneralOptions> {
        Ok(GeneralOptions {
            solver: self.solver_grid()?,
            ..GeneralOptions::default()
        })
    }

    pub fn run_options(&self) -> CliResult<RunOptions> {
        if self.sample_every == 0 {
            return Err(config("--sample-every must be at least 1"));
        }
        if self.w == 0 || self.l_c == 0 {
            return Err(config("--L and --w must be at least 1"));
        }
        Ok(RunOptions {
            t_transient: self.t_transient,
            t_max: self.t_max,
            sample_every: self.sample_every,
            ..RunOptions::default()
        })
    }

    pub fn pool(&self) -> CliResult<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            if j == 0 {
                return Err(config("--jobs must be at least 1"));
            }
            b = b.num_threads(j);
        }
        b.build().map_err(|e| config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum TableName {
    #[value(name = "I")]
    I,
    #[value(name = "II")]
    II,
    #[value(name = "III")]
    III,
    #[value(name = "V")]
    V,
    #[value(name = "gldpc_fig")]
    GldpcFig,
    #[value(name = "cs_fig")]
    CsFig,
}

impl TableName {
    pub fn file_stem(self) -> &'static str {
        match self {
            TableName::I => "table_I",
            TableName::II => "table_II",
            TableName::III => "table_III",
            TableName::V => "table_V",
            TableName::GldpcFig => "gldpc_fig",
            TableName::CsFig => "cs_fig",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct TableArgs {
    #[arg(value_enum)]
    pub name: TableName,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Fully resolved invocation; its canonical text is stable JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub args: CommonArgs,
}

impl RunConfig {
    pub fn canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_canonical(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Contents of `meta.json`: configuration plus the numerical settings in force.
#[derive(Debug, Serialize)]
pub struct Meta<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a C,
    pub solver_grid: Option<SolverGridMeta>,
    pub density_grid: DensityGridMeta,
    pub tolerances: Tolerances,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SolverGridMeta {
    pub z_min: f64,
    pub z_max: f64,
    pub per_unit: usize,
    pub damping: f64,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl From<SolverGrid> for SolverGridMeta {
    fn from(g: SolverGrid) -> Self {
        SolverGridMeta {
            z_min: g.z_min,
            z_max: g.z_max,
            per_unit: g.per_unit,
            damping: g.damping,
            max_sweeps: g.max_sweeps,
            tol: g.tol,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DensityGridMeta {
    pub points: usize,
    pub l_max: f64,
    pub de_tol: f64,
    pub de_max_iters: usize,
}

impl Default for DensityGridMeta {
    fn default() -> Self {
        let de = DensityDeOptions::default();
        DensityGridMeta {
            points: de.grid.len(),
            l_max: de.grid.l_max(),
            de_tol: de.tol,
            de_max_iters: de.max_iters,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub bisection_steps: usize,
    pub fixed_point_tol: f64,
    pub zero_level: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bisection_steps: scwave::numeric::BISECTION_STEPS,
            fixed_point_tol: scwave::numeric::FP_TOL,
            zero_level: scwave::single::ZERO_LEVEL,
        }
    }
}

pub fn write_meta<C: Serialize>(dir: &Path, meta: &Meta<'_, C>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(meta)?;
    std::fs::write(dir.join("meta.json"), text + "\n")?;
    Ok(())
}
