//! Solve execution and report output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context};
use groundbound::models::{
    heisenberg_energy_per_site_limit, heisenberg_jw, ising_exact_energy, ising_fermionic,
    HamiltonianSpec, MomentumLabel,
};
use groundbound::moment::{
    objective_from_hamiltonian, AffineEmbedding, IndexMap, MomentMatrix, MomentRecord,
    StorageLayout,
};
use groundbound::oracle::{correlations, diagonalize_fermionic, CorrelationReport};
use groundbound::projections::DykstraConfig;
use groundbound::solver::{
    solve, write_trace_csv, Init, SolveReport, SolverConfig, StopMode, Termination,
};
use groundbound::ti::{solve_ti, warm_start_extend, TiEmbedding, TiParameters};
use serde::Serialize;

use crate::config::{Model, Resolved, RunConfig, Stop};

#[derive(Debug, Serialize)]
pub struct Timings {
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub oracle_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub tau_e: f64,
    pub tau_dykstra: f64,
    pub dykstra_statistic: groundbound::projections::StoppingStatistic,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_gap: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub lower_bound: f64,
    pub energy_per_site: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_energy: Option<f64>,
    /// `closed-form` or `diagonalization`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_source: Option<&'static str>,
    /// `exact_energy / lower_bound`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_deviation: Option<f64>,
    pub iterations: usize,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlations: Option<CorrelationReport>,
    pub dykstra_sweeps: usize,
    pub n_params: usize,
    pub instance: String,
    pub tolerances: Tolerances,
    pub timings: Timings,
    pub config: RunConfig,
}

fn hamiltonian(cfg: &Resolved) -> anyhow::Result<HamiltonianSpec> {
    Ok(match cfg.model {
        Model::Ising => ising_fermionic(cfg.sites, cfg.jc, cfg.h, cfg.ti)?,
        Model::Heisenberg => heisenberg_jw(cfg.sites, cfg.j, cfg.periodic)?,
    })
}

fn solver_config(cfg: &Resolved, init: Init) -> SolverConfig {
    SolverConfig {
        alpha0: cfg.alpha0,
        alpha: cfg.alpha,
        tau_e: cfg.tau_e,
        dykstra: DykstraConfig {
            tau: cfg.tau_dykstra,
            statistic: cfg.statistic,
            ..DykstraConfig::default()
        },
        max_iters: cfg.max_iters,
        init,
        stop: match cfg.stop {
            Stop::Energy => StopMode::EnergyImprovement,
            Stop::Gap => StopMode::DualityGap { tau: cfg.tau_gap },
        },
    }
}

fn load_record(path: &Path) -> anyhow::Result<MomentRecord> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Output of either solve path.
struct Solved {
    report: SolveReport,
    n_params: usize,
    correlations: Option<CorrelationReport>,
    moments: MomentRecord,
}

fn solve_dense(cfg: &Resolved, h: &HamiltonianSpec, map: Arc<IndexMap>) -> anyhow::Result<Solved> {
    let emb = AffineEmbedding::from_shared(map.clone())?;
    let obj = objective_from_hamiltonian(h, map.clone())?;
    let init = match &cfg.warm_start {
        None => Init::Zero,
        Some(p) => Init::Warm(MomentMatrix::from_record(&load_record(p)?)?.into_blocks()),
    };
    let report = solve(&obj, &emb, &solver_config(cfg, init))?;
    let x = MomentMatrix::new(map.clone(), report.final_iterate.clone())?;
    let correlations = match (cfg.model, map.level()) {
        (Model::Heisenberg, groundbound::moment::MomentLevel::Fourth) => {
            Some(correlations(&x, cfg.periodic, cfg.j)?)
        }
        _ => None,
    };
    Ok(Solved {
        n_params: emb.n_params(),
        correlations,
        moments: x.to_record(),
        report,
    })
}

fn solve_translation_invariant(
    cfg: &Resolved,
    h: &HamiltonianSpec,
    map: Arc<IndexMap>,
) -> anyhow::Result<Solved> {
    if cfg.stop == Stop::Gap {
        bail!("--stop gap is available on the dense path only");
    }
    let emb = TiEmbedding::new(map.clone())?;
    let obj = emb.objective(h)?;
    let init = match &cfg.warm_start {
        None => Init::Zero,
        Some(p) => {
            let rec = load_record(p)?;
            let params = match rec.layout {
                StorageLayout::TranslationInvariant => TiParameters::from_record(&rec)?,
                StorageLayout::Dense => {
                    let x = MomentMatrix::from_record(&rec)?;
                    if x.index_map().n_sites() != cfg.sites {
                        bail!("a dense warm start must have {} sites", cfg.sites);
                    }
                    emb.parameters_of(&x)
                }
            };
            let params = if params.n_sites == cfg.sites {
                params
            } else {
                warm_start_extend(&params, &emb)?
            };
            Init::Warm(emb.to_sectors(&params)?)
        }
    };
    let report = solve_ti(&obj, &emb, &solver_config(cfg, init))?;
    let params = emb.from_sectors(&report.final_iterate);
    let correlations = match (cfg.model, map.level()) {
        (Model::Heisenberg, groundbound::moment::MomentLevel::Fourth) => {
            Some(correlations(&emb.moments(params.clone())?, true, cfg.j)?)
        }
        _ => None,
    };
    Ok(Solved {
        n_params: emb.n_params(),
        correlations,
        moments: params.to_record(),
        report,
    })
}

fn exact_energy(
    cfg: &Resolved,
    h: &HamiltonianSpec,
) -> anyhow::Result<Option<(f64, &'static str)>> {
    if cfg.model == Model::Ising {
        let label = if cfg.ti {
            MomentumLabel::Even
        } else {
            MomentumLabel::Odd
        };
        return Ok(Some((
            ising_exact_energy(cfg.sites, cfg.jc, cfg.h, label),
            "closed-form",
        )));
    }
    if cfg.oracle {
        return Ok(Some((diagonalize_fermionic(h)?.energy, "diagonalization")));
    }
    Ok(None)
}

/// Thermodynamic-limit energy per site of the configured model.
fn energy_per_site_limit(cfg: &Resolved) -> f64 {
    match cfg.model {
        Model::Heisenberg => heisenberg_energy_per_site_limit(cfg.j),
        Model::Ising => {
            let n = 1 << 16;
            ising_exact_energy(n, cfg.jc, cfg.h, MomentumLabel::Even) / n as f64
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Write the plot tables `per_site.csv` (N, e_N, e_inf) and
/// `iterations.csv` (k, E_k).
pub fn emit_plot_data(
    dir: &Path,
    report: &Report,
    trace: &[groundbound::solver::TraceRow],
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let cfg = report.config.resolve()?;
    let mut f = create(&dir.join("per_site.csv"))?;
    writeln!(f, "N,e_N,e_inf")?;
    writeln!(
        f,
        "{},{:.12e},{:.12e}",
        cfg.sites,
        report.energy_per_site,
        energy_per_site_limit(&cfg)
    )?;
    f.flush()?;
    let mut f = create(&dir.join("iterations.csv"))?;
    writeln!(f, "k,E_k")?;
    for r in trace {
        writeln!(f, "{},{:.15e}", r.k, r.energy)?;
    }
    f.flush()?;
    Ok(())
}

/// Execute a run and write its outputs.
pub fn run(cfg: &Resolved) -> anyhow::Result<Report> {
    let setup = Instant::now();
    let h = hamiltonian(cfg)?;
    let map = Arc::new(IndexMap::new(cfg.sites, cfg.symmetry, cfg.level)?);
    let setup_seconds = setup.elapsed().as_secs_f64();

    let solve_start = Instant::now();
    let solved = if cfg.ti {
        solve_translation_invariant(cfg, &h, map)?
    } else {
        solve_dense(cfg, &h, map)?
    };
    let solve_seconds = solve_start.elapsed().as_secs_f64();

    let oracle_start = Instant::now();
    let exact = exact_energy(cfg, &h)?;
    let oracle_seconds = oracle_start.elapsed().as_secs_f64();

    let r = &solved.report;
    let report = Report {
        lower_bound: r.lower_bound,
        energy_per_site: r.lower_bound / cfg.sites as f64,
        exact_energy: exact.map(|e| e.0),
        exact_source: exact.map(|e| e.1),
        ratio: exact.map(|(e, _)| e / r.lower_bound),
        relative_deviation: exact.map(|(e, _)| ((r.lower_bound - e) / e).abs()),
        iterations: r.iterations,
        termination: r.termination,
        duality_gap: r.duality_gap,
        correlations: solved.correlations,
        dykstra_sweeps: r.total_sweeps,
        n_params: solved.n_params,
        instance: format!("{:016x}", r.instance),
        tolerances: Tolerances {
            tau_e: cfg.tau_e,
            tau_dykstra: cfg.tau_dykstra,
            dykstra_statistic: cfg.statistic,
            tau_gap: (cfg.stop == Stop::Gap).then_some(cfg.tau_gap),
        },
        timings: Timings {
            setup_seconds,
            solve_seconds,
            oracle_seconds,
        },
        config: cfg.echo(),
    };

    let json = serde_json::to_string_pretty(&report)?;
    match &cfg.out {
        Some(p) => {
            let mut f = create(p)?;
            writeln!(f, "{json}")?;
            f.flush()?;
        }
        None => println!("{json}"),
    }
    if let Some(p) = &cfg.trace {
        let mut f = create(p)?;
        write_trace_csv(&r.trace, &mut f)?;
        f.flush()?;
    }
    if let Some(dir) = &cfg.plot_dir {
        emit_plot_data(dir, &report, &r.trace)?;
    }
    if let Some(p) = &cfg.save_moments {
        let mut f = create(p)?;
        serde_json::to_writer(&mut f, &solved.moments)?;
        f.flush()?;
    }
    Ok(report)
}
