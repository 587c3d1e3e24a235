//! Projected-gradient solver for the moment relaxation and its dual.
//!
//! The objective is linear, so its gradient is the constant matrix `G` and
//! each step is `X_{k+1} = P_C(X_k − α_k G)`, with `P_C` evaluated by
//! Dykstra's algorithm (affine set first, PSD cone second).

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::BlockVec;
use crate::moment::{AffineEmbedding, MomentLevel, Objective};
use crate::projections::{dykstra_project, project_psd_blocks, ConvexSet, DykstraConfig};

/// A feasible set `C = PSD ∩ affine` on which the solver iterates.
pub trait Relaxation: Sync {
    fn zero(&self) -> BlockVec;
    fn project_affine(&self, x: &BlockVec) -> BlockVec;
    fn project_psd(&self, x: &BlockVec) -> Result<BlockVec>;
    /// Least-squares free parameters of an iterate.
    fn extract_params(&self, x: &BlockVec) -> Vec<f64>;
    fn n_sites(&self) -> usize;
}

impl Relaxation for AffineEmbedding {
    fn zero(&self) -> BlockVec {
        self.zeros()
    }

    fn project_affine(&self, x: &BlockVec) -> BlockVec {
        self.project(x)
    }

    fn project_psd(&self, x: &BlockVec) -> Result<BlockVec> {
        project_psd_blocks(x)
    }

    fn extract_params(&self, x: &BlockVec) -> Vec<f64> {
        self.extract_blocks(x)
    }

    fn n_sites(&self) -> usize {
        self.index_map().n_sites()
    }
}

struct AffinePart<'a, R: ?Sized>(&'a R);
struct PsdPart<'a, R: ?Sized>(&'a R);

impl<R: Relaxation + ?Sized> ConvexSet for AffinePart<'_, R> {
    fn project(&self, x: &BlockVec) -> Result<BlockVec> {
        Ok(self.0.project_affine(x))
    }
}

impl<R: Relaxation + ?Sized> ConvexSet for PsdPart<'_, R> {
    fn project(&self, x: &BlockVec) -> Result<BlockVec> {
        self.0.project_psd(x)
    }
}

/// Dykstra projection onto `C`, affine set first.
pub fn project_feasible<R: Relaxation + ?Sized>(
    rel: &R,
    x: &BlockVec,
    cfg: &DykstraConfig,
) -> Result<(BlockVec, usize)> {
    let (out, st) = dykstra_project(x, &[&AffinePart(rel), &PsdPart(rel)], cfg)?;
    Ok((out, st.sweeps))
}

#[derive(Clone, Debug, Default)]
pub enum Init {
    #[default]
    Zero,
    /// Starting matrix in the relaxation's own storage layout.
    Warm(BlockVec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StopMode {
    /// Stop once `E(X_k) − E(X_{k+1}) ≤ tau_e`.
    EnergyImprovement,
    /// Run the dual alongside and stop once `E(X_k) − H(Z_k) ≤ tau`.
    DualityGap { tau: f64 },
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Step length of the first step from the zero matrix; `None` means `N`.
    pub alpha0: Option<f64>,
    pub alpha: f64,
    pub tau_e: f64,
    pub dykstra: DykstraConfig,
    pub max_iters: usize,
    pub init: Init,
    pub stop: StopMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha0: None,
            alpha: 0.5,
            tau_e: 1e-4,
            dykstra: DykstraConfig::new(1e-4),
            max_iters: 100_000,
            init: Init::Zero,
            stop: StopMode::EnergyImprovement,
        }
    }
}

impl SolverConfig {
    /// Same tolerance for the energy stop and the Dykstra statistic.
    pub fn with_tolerance(tau: f64) -> Self {
        Self {
            tau_e: tau,
            dykstra: DykstraConfig::new(tau),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::Numerical(format!(
                "invalid solver configuration: {what}"
            )))
        };
        if let Some(a) = self.alpha0 {
            if !(a > 0.0) {
                return bad("alpha0 must be positive");
            }
        }
        if !(self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if !(self.tau_e > 0.0) {
            return bad("tau_e must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if let StopMode::DualityGap { tau } = self.stop {
            if !(tau > 0.0) {
                return bad("duality-gap tolerance must be positive");
            }
        }
        self.dykstra.validate()
    }

    fn step(&self, k: usize, n_sites: usize, warm: bool) -> f64 {
        if k == 0 && !warm {
            self.alpha0.unwrap_or(n_sites as f64)
        } else {
            self.alpha
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub energy: f64,
    pub dykstra_sweeps: usize,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Primal,
    Dual,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub sense: Sense,
    pub lower_bound: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub params: Vec<f64>,
    pub termination: Termination,
    pub duality_gap: Option<f64>,
    pub instance: u64,
    pub total_sweeps: usize,
    pub elapsed_seconds: f64,
    #[serde(skip)]
    pub final_iterate: BlockVec,
}

/// One accepted step, passed to solve observers.
pub struct Step<'a> {
    pub k: usize,
    pub alpha: f64,
    pub previous: &'a BlockVec,
    pub next: &'a BlockVec,
}

/// Identifier of a problem instance, shared by its primal and dual reports.
pub fn instance_id(obj: &Objective) -> u64 {
    instance_hash(obj.index_map(), &obj.g, obj.c)
}

pub(crate) fn instance_hash(map: &crate::moment::IndexMap, g: &BlockVec, c: f64) -> u64 {
    let mut h = DefaultHasher::new();
    map.n_sites().hash(&mut h);
    (map.level() == MomentLevel::Fourth).hash(&mut h);
    format!("{:?}", map.symmetry()).hash(&mut h);
    c.to_bits().hash(&mut h);
    for b in &g.blocks {
        for z in b.iter() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

fn interrupted(e: Error, trace: &[TraceRow]) -> Error {
    match e {
        Error::DykstraNotConverged { .. } | Error::Numerical(_) => Error::SolveInterrupted {
            source: Box::new(e),
            trace: trace.to_vec(),
        },
        other => other,
    }
}

/// Projected-gradient minimization of `⟨g, X⟩ + c` over a relaxation.
pub fn minimize<R: Relaxation + ?Sized>(
    rel: &R,
    g: &BlockVec,
    c: f64,
    cfg: &SolverConfig,
    instance: u64,
    observer: &mut dyn FnMut(&Step<'_>),
) -> Result<SolveReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (mut x, warm) = match &cfg.init {
        Init::Zero => (rel.zero(), false),
        Init::Warm(x0) => {
            if x0.sizes() != rel.zero().sizes() {
                return Err(Error::LengthMismatch {
                    expected: rel.zero().len(),
                    got: x0.len(),
                });
            }
            (x0.clone(), true)
        }
    };
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut total_sweeps = 0;
    let mut termination = Termination::MaxIterations;
    for k in 0..cfg.max_iters {
        let alpha = cfg.step(k, rel.n_sites(), warm);
        let mut y = x.clone();
        y.axpy(-alpha, g);
        let (next, sweeps) =
            project_feasible(rel, &y, &cfg.dykstra).map_err(|e| interrupted(e, &trace))?;
        total_sweeps += sweeps;
        let energy = g.inner(&next) + c;
        observer(&Step {
            k: k + 1,
            alpha,
            previous: &x,
            next: &next,
        });
        let improvement = trace.last().map(|r| r.energy - energy);
        trace.push(TraceRow {
            k: k + 1,
            energy,
            dykstra_sweeps: sweeps,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
        x = next;
        if improvement.is_some_and(|d| d <= cfg.tau_e) {
            termination = Termination::Converged;
            break;
        }
    }
    let last = trace.last().expect("max_iters is positive");
    Ok(SolveReport {
        sense: Sense::Primal,
        lower_bound: last.energy,
        iterations: trace.len(),
        params: rel.extract_params(&x),
        termination,
        duality_gap: None,
        instance,
        total_sweeps,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        trace,
        final_iterate: x,
    })
}

/// Primal solve: minimize `E(X) = Re tr[G X] + c` over `C`.
pub fn solve(obj: &Objective, emb: &AffineEmbedding, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_observed(obj, emb, cfg, &mut |_| {})
}

pub fn solve_observed(
    obj: &Objective,
    emb: &AffineEmbedding,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&Step<'_>),
) -> Result<SolveReport> {
    match cfg.stop {
        StopMode::EnergyImprovement => {
            minimize(emb, &obj.g, obj.c, cfg, instance_id(obj), observer)
        }
        StopMode::DualityGap { tau } => solve_with_gap(obj, emb, cfg, tau).map(|(p, _)| p),
    }
}

/// Dual feasible set `PSD ∩ {Z : Z − G ⊥ span(L)}` and dual objective data.
pub struct DualRelaxation<'a> {
    emb: &'a AffineEmbedding,
    /// `P_W(G)` with `W` the span of the embedding directions.
    g_span: BlockVec,
    /// Minimum-norm point of the primal affine set.
    pub f0: BlockVec,
    /// `⟨G, F₀⟩ + c`
    pub offset: f64,
}

impl<'a> DualRelaxation<'a> {
    pub fn new(obj: &Objective, emb: &'a AffineEmbedding) -> Result<Self> {
        if emb.index_map().level() != MomentLevel::Second {
            return Err(Error::UnsupportedScope(
                "the dual solve covers second-moment relaxations only".into(),
            ));
        }
        let f0 = emb.project(&emb.zeros());
        let g_span = emb.project_linear(&obj.g);
        let offset = obj.g.inner(&f0) + obj.c;
        Ok(Self {
            emb,
            g_span,
            f0,
            offset,
        })
    }

    /// `H(Z) = −⟨F₀, Z⟩ + ⟨G, F₀⟩ + c`
    pub fn value(&self, z: &BlockVec) -> f64 {
        self.offset - self.f0.inner(z)
    }
}

impl Relaxation for DualRelaxation<'_> {
    fn zero(&self) -> BlockVec {
        self.emb.zeros()
    }

    fn project_affine(&self, z: &BlockVec) -> BlockVec {
        let mut out = z - &self.emb.project_linear(z);
        out.axpy(1.0, &self.g_span);
        out
    }

    fn project_psd(&self, z: &BlockVec) -> Result<BlockVec> {
        project_psd_blocks(z)
    }

    fn extract_params(&self, z: &BlockVec) -> Vec<f64> {
        self.emb.extract_blocks(z)
    }

    fn n_sites(&self) -> usize {
        self.emb.index_map().n_sites()
    }
}

fn dual_report(mut r: SolveReport, dual: &DualRelaxation<'_>) -> SolveReport {
    // minimize() tracked ⟨F₀, Z⟩; translate to H(Z)
    for row in &mut r.trace {
        row.energy = dual.offset - row.energy;
    }
    r.lower_bound = dual.value(&r.final_iterate);
    r.sense = Sense::Dual;
    r
}

/// Dual solve: maximize `H(Z)` over the dual feasible set. Second moments only.
pub fn solve_dual(
    obj: &Objective,
    emb: &AffineEmbedding,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let dual = DualRelaxation::new(obj, emb)?;
    match cfg.stop {
        StopMode::EnergyImprovement => {
            let r = minimize(&dual, &dual.f0, 0.0, cfg, instance_id(obj), &mut |_| {})?;
            Ok(dual_report(r, &dual))
        }
        StopMode::DualityGap { tau } => solve_with_gap(obj, emb, cfg, tau).map(|(_, d)| d),
    }
}

/// Primal and dual iterations in lockstep, stopped on the duality gap.
pub fn solve_with_gap(
    obj: &Objective,
    emb: &AffineEmbedding,
    cfg: &SolverConfig,
    tau_gap: f64,
) -> Result<(SolveReport, SolveReport)> {
    cfg.validate()?;
    let dual = DualRelaxation::new(obj, emb)?;
    let instance = instance_id(obj);
    let start = Instant::now();
    let mut x = match &cfg.init {
        Init::Zero => emb.zeros(),
        Init::Warm(x0) => x0.clone(),
    };
    let warm = matches!(cfg.init, Init::Warm(_));
    let mut z = emb.zeros();
    let mut pt: Vec<TraceRow> = Vec::new();
    let mut dt: Vec<TraceRow> = Vec::new();
    let (mut ps, mut ds) = (0, 0);
    let mut termination = Termination::MaxIterations;
    let mut gap = f64::INFINITY;
    for k in 0..cfg.max_iters {
        let alpha = cfg.step(k, emb.index_map().n_sites(), warm);
        let mut y = x.clone();
        y.axpy(-alpha, &obj.g);
        let (xn, sx) = project_feasible(emb, &y, &cfg.dykstra).map_err(|e| interrupted(e, &pt))?;
        let dual_alpha = cfg.step(k, emb.index_map().n_sites(), false);
        let mut w = z.clone();
        w.axpy(-dual_alpha, &dual.f0);
        let (zn, sz) =
            project_feasible(&dual, &w, &cfg.dykstra).map_err(|e| interrupted(e, &dt))?;
        x = xn;
        z = zn;
        ps += sx;
        ds += sz;
        let e = obj.energy(&x);
        let hv = dual.value(&z);
        let t = start.elapsed().as_secs_f64();
        pt.push(TraceRow {
            k: k + 1,
            energy: e,
            dykstra_sweeps: sx,
            elapsed_seconds: t,
        });
        dt.push(TraceRow {
            k: k + 1,
            energy: hv,
            dykstra_sweeps: sz,
            elapsed_seconds: t,
        });
        gap = e - hv;
        if gap <= tau_gap {
            termination = Termination::Converged;
            break;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let primal = SolveReport {
        sense: Sense::Primal,
        lower_bound: pt.last().map(|r| r.energy).unwrap_or(f64::NAN),
        iterations: pt.len(),
        params: emb.extract_blocks(&x),
        trace: pt,
        termination,
        duality_gap: Some(gap),
        instance,
        total_sweeps: ps,
        elapsed_seconds: elapsed,
        final_iterate: x,
    };
    let dual_rep = SolveReport {
        sense: Sense::Dual,
        lower_bound: dt.last().map(|r| r.energy).unwrap_or(f64::NAN),
        iterations: dt.len(),
        params: emb.extract_blocks(&z),
        trace: dt,
        termination,
        duality_gap: Some(gap),
        instance,
        total_sweeps: ds,
        elapsed_seconds: elapsed,
        final_iterate: z,
    };
    Ok((primal, dual_rep))
}

/// `E(X_k) − H(Z_k)` for reports of the same instance.
pub fn gap(primal: &SolveReport, dual: &SolveReport) -> Result<f64> {
    if primal.instance != dual.instance
        || primal.sense != Sense::Primal
        || dual.sense != Sense::Dual
    {
        return Err(Error::MismatchedInstances);
    }
    Ok(primal.lower_bound - dual.lower_bound)
}

/// Write the trace as CSV with header `k,energy,dykstra_sweeps,elapsed_seconds`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "k,energy,dykstra_sweeps,elapsed_seconds")?;
    for r in trace {
        writeln!(
            out,
            "{},{:.15e},{},{:.6}",
            r.k, r.energy, r.dykstra_sweeps, r.elapsed_seconds
        )?;
    }
    Ok(())
}
