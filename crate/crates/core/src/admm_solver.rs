//! Three-block ADMM for
//!
//! ```text
//! min sum_j t_j   s.t.   t_j >= |d_j|^p,   (w, d) in D
//! ```
//!
//! written with the copies `s = w`, `f = d` (inside `D`) and `t_mirror = t`.
//! One iteration updates `(d, t)` by elementwise epigraph projection, `(s, f)`
//! by projection onto `D`, then `w` and `t_mirror` in closed form, followed
//! by dual ascent on the three copy constraints.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::dataset::ChunkedDataset;
use crate::epigraph_prox::{project_epigraph, PExponent};
use crate::error::{Error, Result};
use crate::feasible_set::{FeasibilityReport, FeasibleSet, Projector, ProjectorSettings};
use crate::lti_sim::GriddedSystem;
use crate::pole_grid::{PoleGrid, PoleKind};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub p: PExponent,
    pub rho: f64,
    pub max_outer: usize,
    /// Stop once `|d - f|_2` falls to this value.
    pub stop_tol: f64,
    /// Caps at or below this are treated as zero.
    pub eps_bar: f64,
    pub tol_inner: f64,
    pub max_inner: usize,
    pub init_sigma: f64,
    pub seed: u64,
    /// Apply the energy weights to the zero-state coefficients too.
    pub scale_zero_state: bool,
    /// Cells are shrunk by this much before solving so that the reported
    /// solution re-quantizes exactly despite the inner tolerance.
    pub interval_margin: f64,
    /// Penalty of the inner projection.
    pub inner_rho: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            p: PExponent::HALF,
            rho: 20.0,
            max_outer: 100,
            stop_tol: 1e-2,
            eps_bar: 1e-3,
            tol_inner: 1e-6,
            max_inner: 2000,
            init_sigma: 0.1,
            seed: 0,
            scale_zero_state: true,
            interval_margin: 1e-5,
            inner_rho: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho = {} must be positive", self.rho));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return bad("iteration budgets must be positive".into());
        }
        for (name, v) in [
            ("stop_tol", self.stop_tol),
            ("eps_bar", self.eps_bar),
            ("tol_inner", self.tol_inner),
            ("inner_rho", self.inner_rho),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.init_sigma >= 0.0 && self.init_sigma.is_finite()) {
            return bad(format!("init_sigma = {} must be nonnegative", self.init_sigma));
        }
        if !(self.interval_margin >= 0.0 && self.interval_margin.is_finite()) {
            return bad(format!("interval_margin = {} must be nonnegative", self.interval_margin));
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        if self.p.is_l1() {
            Mode::L1
        } else {
            Mode::Lp
        }
    }

    fn projector_settings(&self) -> ProjectorSettings {
        ProjectorSettings {
            rho: self.inner_rho,
            tol: self.tol_inner,
            max_iter: self.max_inner,
            ..ProjectorSettings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lp,
    L1,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Lp => "lp",
            Mode::L1 => "l1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub w: Vec<f64>,
    pub d: Vec<f64>,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub t_mirror: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub theta: Vec<f64>,
    pub iteration: usize,
}

impl SolverState {
    fn check(&self, set: &FeasibleSet) -> Result<()> {
        let (nw, ng) = (set.w_len(), set.groups());
        for (len, want) in [
            (self.w.len(), nw),
            (self.s.len(), nw),
            (self.lambda1.len(), nw),
            (self.d.len(), ng),
            (self.t.len(), ng),
            (self.f.len(), ng),
            (self.t_mirror.len(), ng),
            (self.lambda2.len(), ng),
            (self.theta.len(), ng),
        ] {
            if len != want {
                return Err(Error::LengthMismatch {
                    expected: want,
                    actual: len,
                });
            }
        }
        Ok(())
    }

    /// `|d - f|_2`.
    pub fn cap_gap(&self) -> f64 {
        dist(&self.d, &self.f)
    }
}

/// Every variable, duals included, i.i.d. `N(0, init_sigma^2)`.
pub fn initialize<R: Rng + ?Sized>(set: &FeasibleSet, cfg: &SolverConfig, rng: &mut R) -> Result<SolverState> {
    cfg.validate()?;
    let normal = Normal::new(0.0, cfg.init_sigma)
        .map_err(|e| Error::InvalidConfig(format!("init_sigma: {e}")))?;
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(rng)).collect() };
    let (nw, ng) = (set.w_len(), set.groups());
    Ok(SolverState {
        w: draw(nw),
        d: draw(ng),
        t: draw(ng),
        s: draw(nw),
        f: draw(ng),
        t_mirror: draw(ng),
        lambda1: draw(nw),
        lambda2: draw(ng),
        theta: draw(ng),
        iteration: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// `|d - f|_2`.
    pub cap_gap: f64,
    /// `|d - f|_2 / |f|_2`.
    pub relative_gap: f64,
    /// `|w - s|_2`.
    pub param_gap: f64,
    /// `|t - t_mirror|_2`.
    pub epi_gap: f64,
    /// `sum_j t_j`.
    pub objective: f64,
    /// Caps above `eps_bar`.
    pub active_caps: usize,
    pub inner_iterations: usize,
    pub inner_residual: f64,
}

/// The steps of one iteration with a caller-owned projector.
pub fn iterate_with(
    state: &mut SolverState,
    projector: &mut Projector<'_>,
    cfg: &SolverConfig,
) -> Result<IterationRecord> {
    let rho = cfg.rho;
    let ng = state.d.len();

    // (d, t)
    for j in 0..ng {
        let x = state.f[j] - state.lambda2[j] / rho;
        let t = state.t_mirror[j] - state.theta[j] / rho;
        let (dj, tj) = project_epigraph(x, t, cfg.p)?;
        state.d[j] = dj;
        state.t[j] = tj;
    }

    // (s, f)
    let w_hat: Vec<f64> = state
        .w
        .iter()
        .zip(&state.lambda1)
        .map(|(w, l)| w + l / rho)
        .collect();
    let d_hat: Vec<f64> = state
        .d
        .iter()
        .zip(&state.lambda2)
        .map(|(d, l)| d + l / rho)
        .collect();
    let out = projector.project(&w_hat, &d_hat)?;
    state.s = out.s;
    state.f = out.f;

    // w and t_mirror
    for ((w, s), l) in state.w.iter_mut().zip(&state.s).zip(&state.lambda1) {
        *w = s - l / rho;
    }
    for ((z, t), th) in state.t_mirror.iter_mut().zip(&state.t).zip(&state.theta) {
        *z = t + (th - 1.0) / rho;
    }

    // duals
    for ((l, w), s) in state.lambda1.iter_mut().zip(&state.w).zip(&state.s) {
        *l += rho * (w - s);
    }
    for ((l, d), f) in state.lambda2.iter_mut().zip(&state.d).zip(&state.f) {
        *l += rho * (d - f);
    }
    for ((th, t), z) in state.theta.iter_mut().zip(&state.t).zip(&state.t_mirror) {
        *th += rho * (t - z);
    }
    state.iteration += 1;

    let cap_gap = dist(&state.d, &state.f);
    let f_norm = norm(&state.f);
    Ok(IterationRecord {
        iter: state.iteration,
        cap_gap,
        relative_gap: if f_norm > 0.0 { cap_gap / f_norm } else { cap_gap },
        param_gap: dist(&state.w, &state.s),
        epi_gap: dist(&state.t, &state.t_mirror),
        objective: state.t.iter().sum(),
        active_caps: state.f.iter().filter(|&&v| v > cfg.eps_bar).count(),
        inner_iterations: out.iterations,
        inner_residual: out.residual,
    })
}

/// One iteration from a cold projector.
pub fn iterate_once(state: &SolverState, set: &FeasibleSet, cfg: &SolverConfig) -> Result<SolverState> {
    state.check(set)?;
    let mut projector = Projector::new(set, cfg.projector_settings())?;
    let mut next = state.clone();
    iterate_with(&mut next, &mut projector, cfg)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// Budget exhausted with the best gap within 10% of the tolerance.
    NearThreshold,
    BudgetExhausted,
}

impl Termination {
    /// Converged or close enough to report.
    pub fn is_success(self) -> bool {
        !matches!(self, Termination::BudgetExhausted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveGroup {
    pub group: usize,
    pub pole: Complex64,
    /// 1 for a real pole, 2 for a conjugate pair.
    pub multiplicity: usize,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Sensor-output error per chunk over its observed samples.
    pub zeta_out: Vec<f64>,
    /// Sensor-input error per chunk over the full horizon; needs ground truth.
    pub zeta_in: Option<Vec<f64>>,
    /// Observed samples whose re-quantized model output differs from the data.
    pub level_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub mode: Mode,
    pub status: Termination,
    pub iterations: usize,
    /// Iteration the reported copy comes from.
    pub reported_iteration: usize,
    pub final_gap: f64,
    pub history: Vec<IterationRecord>,
    pub system: GriddedSystem,
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    /// Epigraph-side caps of the same iteration.
    pub d: Vec<f64>,
    pub active_groups: Vec<ActiveGroup>,
    pub detected_order: usize,
    pub feasibility: FeasibilityReport,
    pub metrics: Metrics,
    pub config: SolverConfig,
}

impl IdentificationResult {
    /// Noisy model output `y + n` per chunk over the full horizon; missing
    /// samples carry no noise.
    pub fn sensor_inputs(&self, dataset: &ChunkedDataset, grid: &PoleGrid, set: &FeasibleSet) -> Result<Vec<Vec<f64>>> {
        analysis::model_sensor_inputs(dataset, grid, set, &self.system, &self.s)
    }
}

/// Run the ADMM on `dataset` over `grid` with `cfg` as given.
pub fn solve(dataset: &ChunkedDataset, grid: &PoleGrid, cfg: &SolverConfig) -> Result<IdentificationResult> {
    cfg.validate()?;
    let set = FeasibleSet::assemble(dataset, grid, cfg.scale_zero_state, cfg.interval_margin)?;
    let mut rng = stream(cfg.seed, Stream::SolverInit);
    let mut state = initialize(&set, cfg, &mut rng)?;
    let mut projector = Projector::new(&set, cfg.projector_settings())?;

    let mut history = Vec::with_capacity(cfg.max_outer);
    let mut best: Option<Snapshot> = None;
    let mut status = Termination::BudgetExhausted;
    for _ in 0..cfg.max_outer {
        let rec = iterate_with(&mut state, &mut projector, cfg)?;
        if !rec.cap_gap.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "iterates diverged at iteration {}",
                rec.iter
            )));
        }
        history.push(rec);
        if rec.cap_gap <= cfg.stop_tol {
            status = Termination::Converged;
            best = Some(Snapshot::of(&state, rec.cap_gap));
            break;
        }
        if best.as_ref().is_none_or(|b| rec.cap_gap < b.gap) {
            best = Some(Snapshot::of(&state, rec.cap_gap));
        }
    }

    let mut snap = best.expect("at least one iteration ran");
    if status != Termination::Converged && snap.gap <= 1.1 * cfg.stop_tol {
        status = Termination::NearThreshold;
    }
    set.fit_noise(&mut snap.s);
    finish(dataset, grid, &set, cfg, status, history, snap)
}

/// The copy reported at the end of a run.
struct Snapshot {
    gap: f64,
    iteration: usize,
    s: Vec<f64>,
    f: Vec<f64>,
    d: Vec<f64>,
}

impl Snapshot {
    fn of(state: &SolverState, gap: f64) -> Self {
        Snapshot {
            gap,
            iteration: state.iteration,
            s: state.s.clone(),
            f: state.f.clone(),
            d: state.d.clone(),
        }
    }
}

/// [`solve`] with the `l1` norm in place of the quasi-norm.
pub fn solve_l1(dataset: &ChunkedDataset, grid: &PoleGrid, cfg: &SolverConfig) -> Result<IdentificationResult> {
    let cfg = SolverConfig {
        p: PExponent::ONE,
        ..cfg.clone()
    };
    solve(dataset, grid, &cfg)
}

fn finish(
    dataset: &ChunkedDataset,
    grid: &PoleGrid,
    set: &FeasibleSet,
    cfg: &SolverConfig,
    status: Termination,
    history: Vec<IterationRecord>,
    snap: Snapshot,
) -> Result<IdentificationResult> {
    let Snapshot { gap, iteration, s, f, d } = snap;
    let system = set.layout().unpack(&s, cfg.scale_zero_state);
    let active_groups = active_groups(grid, &f, cfg.eps_bar);
    let detected_order = analysis::detected_order(&f, grid, cfg.eps_bar)?;
    let feasibility = set.is_feasible(&s, &f, 10.0 * cfg.tol_inner)?;
    let (zeta_out, level_mismatches) = analysis::output_errors(dataset, grid, set, &system, &s)?;
    Ok(IdentificationResult {
        mode: cfg.mode(),
        status,
        iterations: history.len(),
        reported_iteration: iteration,
        final_gap: gap,
        history,
        system,
        s,
        f,
        d,
        active_groups,
        detected_order,
        feasibility,
        metrics: Metrics {
            zeta_out,
            zeta_in: None,
            level_mismatches,
        },
        config: cfg.clone(),
    })
}

fn active_groups(grid: &PoleGrid, f: &[f64], eps_bar: f64) -> Vec<ActiveGroup> {
    grid.points()
        .iter()
        .zip(f)
        .enumerate()
        .filter(|(_, (_, &cap))| cap > eps_bar)
        .map(|(group, (p, &cap))| ActiveGroup {
            group,
            pole: p.value,
            multiplicity: match p.kind {
                PoleKind::RealAxis => 1,
                PoleKind::UpperHalf => 2,
            },
            cap,
        })
        .collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
