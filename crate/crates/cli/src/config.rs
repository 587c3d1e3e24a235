//! Run configuration: a JSON file with the same keys as the command-line
//! flags, overridden flag by flag.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use groundbound::fermion::Symmetry;
use groundbound::moment::MomentLevel;
use groundbound::projections::StoppingStatistic;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Ising,
    Heisenberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Moments {
    Second,
    Fourth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryArg {
    ParityOnly,
    NumberConserving,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stop {
    Energy,
    Gap,
}

/// `squared`: sum of squared increment changes; `sqrt`: its square root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Squared,
    Sqrt,
}

/// Every run option. Unset fields take the documented defaults in
/// [`RunConfig::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    /// Lattice model.
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,

    /// Number of sites N.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,

    /// Ising coupling j_c [default: -1].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jc: Option<f64>,

    /// Ising transverse field h [default: 0.5].
    #[arg(long = "h", id = "field", allow_hyphen_values = true)]
    #[serde(default, rename = "h", skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,

    /// Heisenberg exchange J [default: 0.5].
    #[arg(long = "J", id = "exchange", allow_hyphen_values = true)]
    #[serde(default, rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,

    /// Translation-invariant solve. Selects the sign-flipped Ising chain;
    /// for Heisenberg it implies --periodic.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ti: Option<bool>,

    /// Heisenberg ring instead of the open chain.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<bool>,

    /// Relaxation order [default: second for Ising, fourth for Heisenberg].
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<Moments>,

    /// Superselection layout [default: parity-only for Ising,
    /// number-conserving for Heisenberg].
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryArg>,

    /// First step length [default: N].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,

    /// Step length after the first step [default: 0.5].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,

    /// Energy-improvement tolerance [default: 1e-4].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_e: Option<f64>,

    /// Dykstra tolerance [default: tau-e].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_dykstra: Option<f64>,

    /// Dykstra stopping statistic [default: squared].
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dykstra_statistic: Option<Statistic>,

    /// Iteration limit [default: 100000].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,

    /// Stopping rule [default: energy].
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<Stop>,

    /// Duality-gap tolerance for --stop gap [default: 1e-6].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_gap: Option<f64>,

    /// Moment record to start from.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<PathBuf>,

    /// Compare with exact diagonalization (N ≤ 16).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,

    /// Report path [default: stdout].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Convergence trace CSV path.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,

    /// Directory for plot tables `per_site.csv` and `iterations.csv`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_dir: Option<PathBuf>,

    /// Path for the final moment record, usable with --warm-start.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_moments: Option<PathBuf>,

    /// Worker threads for the projections [default: all cores].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// Configuration with every default applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub model: Model,
    pub sites: usize,
    pub jc: f64,
    pub h: f64,
    pub j: f64,
    pub ti: bool,
    pub periodic: bool,
    pub level: MomentLevel,
    pub symmetry: Symmetry,
    pub alpha0: Option<f64>,
    pub alpha: f64,
    pub tau_e: f64,
    pub tau_dykstra: f64,
    pub statistic: StoppingStatistic,
    pub max_iters: usize,
    pub stop: Stop,
    pub tau_gap: f64,
    pub warm_start: Option<PathBuf>,
    pub oracle: bool,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub plot_dir: Option<PathBuf>,
    pub save_moments: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Largest N for exact diagonalization.
pub const ORACLE_LIMIT: usize = 16;

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `top` replace those of `self`.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        let base = &mut self;
        overlay!(
            base,
            top,
            model,
            sites,
            jc,
            h,
            j,
            ti,
            periodic,
            moments,
            symmetry,
            alpha0,
            alpha,
            tau_e,
            tau_dykstra,
            dykstra_statistic,
            max_iters,
            stop,
            tau_gap,
            warm_start,
            oracle,
            out,
            trace,
            plot_dir,
            save_moments,
            threads
        );
        self
    }

    /// Apply defaults and check the configuration. Errors are usage errors.
    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let Some(model) = self.model else {
            bail!("missing required option --model")
        };
        let Some(sites) = self.sites else {
            bail!("missing required option --sites")
        };
        if sites < 2 {
            bail!("--sites must be at least 2");
        }
        let ti = self.ti.unwrap_or(false);
        let periodic = match model {
            Model::Heisenberg => self.periodic.unwrap_or(false) || ti,
            Model::Ising => {
                if self.periodic == Some(true) {
                    bail!("--periodic applies to the Heisenberg model; the Ising boundary is chosen by --ti");
                }
                false
            }
        };
        let level = match self.moments.unwrap_or(match model {
            Model::Ising => Moments::Second,
            Model::Heisenberg => Moments::Fourth,
        }) {
            Moments::Second => MomentLevel::Second,
            Moments::Fourth => MomentLevel::Fourth,
        };
        let symmetry = match self.symmetry.unwrap_or(match model {
            Model::Ising => SymmetryArg::ParityOnly,
            Model::Heisenberg => SymmetryArg::NumberConserving,
        }) {
            SymmetryArg::ParityOnly => Symmetry::ParityOnly,
            SymmetryArg::NumberConserving => Symmetry::NumberConserving,
        };
        let tau_e = self.tau_e.unwrap_or(1e-4);
        let oracle = self.oracle.unwrap_or(false);
        if oracle && sites > ORACLE_LIMIT {
            bail!("--oracle needs --sites ≤ {ORACLE_LIMIT}");
        }
        let r = Resolved {
            model,
            sites,
            jc: self.jc.unwrap_or(-1.0),
            h: self.h.unwrap_or(0.5),
            j: self.j.unwrap_or(0.5),
            ti,
            periodic,
            level,
            symmetry,
            alpha0: self.alpha0,
            alpha: self.alpha.unwrap_or(0.5),
            tau_e,
            tau_dykstra: self.tau_dykstra.unwrap_or(tau_e),
            statistic: match self.dykstra_statistic.unwrap_or(Statistic::Squared) {
                Statistic::Squared => StoppingStatistic::SquaredIncrementChange,
                Statistic::Sqrt => StoppingStatistic::IncrementChange,
            },
            max_iters: self.max_iters.unwrap_or(100_000),
            stop: self.stop.unwrap_or(Stop::Energy),
            tau_gap: self.tau_gap.unwrap_or(1e-6),
            warm_start: self.warm_start.clone(),
            oracle,
            out: self.out.clone(),
            trace: self.trace.clone(),
            plot_dir: self.plot_dir.clone(),
            save_moments: self.save_moments.clone(),
            threads: self.threads,
        };
        for (name, v) in [
            ("alpha", r.alpha),
            ("tau-e", r.tau_e),
            ("tau-dykstra", r.tau_dykstra),
            ("tau-gap", r.tau_gap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("--{name} must be positive");
            }
        }
        if r.alpha0.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
            bail!("--alpha0 must be positive");
        }
        if r.max_iters == 0 || r.threads == Some(0) {
            bail!("--max-iters and --threads must be positive");
        }
        Ok(r)
    }
}

impl Resolved {
    /// The resolved configuration in file form; loading it reproduces the run.
    pub fn echo(&self) -> RunConfig {
        RunConfig {
            model: Some(self.model),
            sites: Some(self.sites),
            jc: Some(self.jc),
            h: Some(self.h),
            j: Some(self.j),
            ti: Some(self.ti),
            periodic: Some(self.periodic),
            moments: Some(match self.level {
                MomentLevel::Second => Moments::Second,
                MomentLevel::Fourth => Moments::Fourth,
            }),
            symmetry: Some(match self.symmetry {
                Symmetry::ParityOnly => SymmetryArg::ParityOnly,
                Symmetry::NumberConserving => SymmetryArg::NumberConserving,
            }),
            alpha0: self.alpha0,
            alpha: Some(self.alpha),
            tau_e: Some(self.tau_e),
            tau_dykstra: Some(self.tau_dykstra),
            dykstra_statistic: Some(match self.statistic {
                StoppingStatistic::SquaredIncrementChange => Statistic::Squared,
                StoppingStatistic::IncrementChange => Statistic::Sqrt,
            }),
            max_iters: Some(self.max_iters),
            stop: Some(self.stop),
            tau_gap: Some(self.tau_gap),
            warm_start: self.warm_start.clone(),
            oracle: Some(self.oracle),
            out: self.out.clone(),
            trace: self.trace.clone(),
            plot_dir: self.plot_dir.clone(),
            save_moments: self.save_moments.clone(),
            threads: self.threads,
        }
    }
}
