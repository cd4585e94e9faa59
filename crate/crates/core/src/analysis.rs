//! Metrics on identified systems and the two batch experiments.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm_solver::{solve, solve_l1, IdentificationResult, Mode, SolverConfig, Termination};
use crate::dataset::{generate_random_dataset, ChunkedDataset, GroundTruth, SyntheticConfig};
use crate::error::{Error, Result};
use crate::feasible_set::FeasibleSet;
use crate::lti_sim::{simulate_chunk, GriddedSystem};
use crate::pole_grid::{GridConfig, PoleGrid, PoleKind};
use crate::quantizer::QuantizerSpec;
use crate::rng::{cell_seed, stream, Stream};

/// Pole count of the groups whose cap exceeds `eps_bar`; pairs count twice.
pub fn detected_order(f: &[f64], grid: &PoleGrid, eps_bar: f64) -> Result<usize> {
    if !(eps_bar > 0.0) {
        return Err(Error::InvalidConfig(format!("eps_bar = {eps_bar} must be positive")));
    }
    if f.len() != grid.group_count() {
        return Err(Error::LengthMismatch {
            expected: grid.group_count(),
            actual: f.len(),
        });
    }
    Ok(grid
        .points()
        .iter()
        .zip(f)
        .filter(|(_, &fj)| fj > eps_bar)
        .map(|(p, _)| match p.kind {
            PoleKind::RealAxis => 1,
            PoleKind::UpperHalf => 2,
        })
        .sum())
}

/// `sqrt(sum_k (a(k) - b(k))^2)`.
pub fn sensor_input_error(reference: &[f64], model: &[f64]) -> Result<f64> {
    if reference.len() != model.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: model.len(),
        });
    }
    Ok(reference
        .iter()
        .zip(model)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Same as [`sensor_input_error`] over level values keyed by sample index;
/// both maps must cover the same indices.
pub fn sensor_output_error(reference: &BTreeMap<usize, f64>, model: &BTreeMap<usize, f64>) -> Result<f64> {
    if !reference.keys().eq(model.keys()) {
        return Err(Error::InvalidDataset(
            "sensor output error needs identical index sets".into(),
        ));
    }
    Ok(reference
        .values()
        .zip(model.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Model sensor input `y + n` per chunk; samples without a noise variable
/// (missing ones) carry the noise-free output.
pub fn model_sensor_inputs(
    dataset: &ChunkedDataset,
    grid: &PoleGrid,
    set: &FeasibleSet,
    system: &GriddedSystem,
    s: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut out = dataset
        .chunks
        .iter()
        .enumerate()
        .map(|(i, c)| simulate_chunk(system, grid, i, &c.input))
        .collect::<Result<Vec<_>>>()?;
    for (m, row) in set.rows().iter().enumerate() {
        out[row.chunk][row.sample] += set.noise(s, m);
    }
    Ok(out)
}

/// Per-chunk sensor-output error of the model and the number of observed
/// samples whose re-quantized level differs from the recorded one.
pub fn output_errors(
    dataset: &ChunkedDataset,
    grid: &PoleGrid,
    set: &FeasibleSet,
    system: &GriddedSystem,
    s: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let inputs = model_sensor_inputs(dataset, grid, set, system, s)?;
    let q = &dataset.quantizer;
    let mut errors = Vec::with_capacity(dataset.chunk_count());
    let mut mismatches = 0;
    for (chunk, y) in dataset.chunks.iter().zip(&inputs) {
        let mut reference = BTreeMap::new();
        let mut model = BTreeMap::new();
        for (&k, &level) in &chunk.observed {
            let (got, value) = q.quantize(y[k])?;
            mismatches += usize::from(got != level);
            reference.insert(k, q.level(level)?);
            model.insert(k, value);
        }
        errors.push(sensor_output_error(&reference, &model)?);
    }
    Ok((errors, mismatches))
}

/// Per-chunk sensor-input error against the true noisy outputs.
pub fn input_errors(
    result: &IdentificationResult,
    dataset: &ChunkedDataset,
    grid: &PoleGrid,
    truth: &GroundTruth,
) -> Result<Vec<f64>> {
    let set = FeasibleSet::assemble(dataset, grid, result.config.scale_zero_state, 0.0)?;
    let model = model_sensor_inputs(dataset, grid, &set, &result.system, &result.s)?;
    truth
        .noisy
        .iter()
        .zip(&model)
        .map(|(a, b)| sensor_input_error(a, b))
        .collect()
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub mean: f64,
    pub q75: f64,
    pub max: f64,
    pub count: usize,
}

impl BoxStats {
    /// `None` for empty input.
    pub fn from_values(values: &[f64]) -> Option<BoxStats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(BoxStats {
            min: v[0],
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q75: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
            count: v.len(),
        })
    }
}

/// Average ranks, ties sharing the mean of their positions (1-based).
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson on average ranks). `NaN` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Everything a synthetic cell needs besides its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSetup {
    pub data: SyntheticConfig,
    pub quantizer: QuantizerSpec,
    pub grid: GridConfig,
    pub solver: SolverConfig,
}

impl Default for SyntheticSetup {
    fn default() -> Self {
        SyntheticSetup {
            data: SyntheticConfig::default(),
            quantizer: QuantizerSpec::make_uniform(3, 3.0).expect("valid default quantizer"),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

/// Outcome of one solve inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub mode: Mode,
    pub order: Option<usize>,
    pub status: Option<Termination>,
    pub iterations: usize,
    pub final_gap: f64,
    pub level_mismatches: usize,
    pub error: Option<String>,
}

impl CellOutcome {
    fn from_result(mode: Mode, r: Result<IdentificationResult>) -> Self {
        match r {
            Ok(r) => CellOutcome {
                mode,
                order: Some(r.detected_order),
                status: Some(r.status),
                iterations: r.iterations,
                final_gap: r.final_gap,
                level_mismatches: r.metrics.level_mismatches,
                error: None,
            },
            Err(e) => CellOutcome {
                mode,
                order: None,
                status: None,
                iterations: 0,
                final_gap: f64::NAN,
                level_mismatches: 0,
                error: Some(e.to_string()),
            },
        }
    }

    /// Solved and converged (or near-threshold).
    pub fn completed(&self) -> bool {
        self.status.is_some_and(Termination::is_success)
    }
}

/// Both modes on one synthetic system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemCell {
    pub original_order: usize,
    pub index: usize,
    pub seed: u64,
    pub l1: CellOutcome,
    pub lp: CellOutcome,
}

/// Seeded synthetic instance `(dataset, truth, grid)`.
pub fn synthetic_instance(
    setup: &SyntheticSetup,
    seed: u64,
) -> Result<(ChunkedDataset, GroundTruth, PoleGrid)> {
    let (ds, truth) = generate_random_dataset(&setup.data, &setup.quantizer, &mut stream(seed, Stream::System))?;
    let grid = PoleGrid::build(&setup.grid, ds.max_chunk_len())?;
    Ok((ds, truth, grid))
}

/// Both modes on the instance with the given seed; the solver seed is the
/// instance seed.
pub fn run_cell(setup: &SyntheticSetup, original_order: usize, index: usize, seed: u64) -> SystemCell {
    let setup = SyntheticSetup {
        data: SyntheticConfig {
            order: original_order,
            ..setup.data.clone()
        },
        ..setup.clone()
    };
    let cfg = SolverConfig {
        seed,
        ..setup.solver.clone()
    };
    match synthetic_instance(&setup, seed) {
        Ok((ds, _, grid)) => SystemCell {
            original_order,
            index,
            seed,
            l1: CellOutcome::from_result(Mode::L1, solve_l1(&ds, &grid, &cfg)),
            lp: CellOutcome::from_result(Mode::Lp, solve(&ds, &grid, &cfg)),
        },
        Err(e) => {
            let failed = |mode| CellOutcome::from_result(mode, Err(Error::InvalidDataset(e.to_string())));
            SystemCell {
                original_order,
                index,
                seed,
                l1: failed(Mode::L1),
                lp: failed(Mode::Lp),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStats {
    pub original_order: usize,
    pub l1: Option<BoxStats>,
    pub lp: Option<BoxStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSystemTable {
    pub seed: u64,
    pub systems_per_order: usize,
    pub stats: Vec<OrderStats>,
    pub cells: Vec<SystemCell>,
}

impl MultiSystemTable {
    pub fn failed_cells(&self) -> usize {
        self.cells
            .iter()
            .map(|c| usize::from(!c.l1.completed()) + usize::from(!c.lp.completed()))
            .sum()
    }
}

/// Random systems per original order, each solved in both modes; box
/// statistics over the detected orders of the cells that produced a result.
/// Cells run on the current rayon pool.
pub fn run_multi_system(
    orders: &[usize],
    systems_per_order: usize,
    setup: &SyntheticSetup,
    seed: u64,
) -> Result<MultiSystemTable> {
    if systems_per_order == 0 {
        return Err(Error::InvalidConfig("systems_per_order must be at least 1".into()));
    }
    setup.solver.validate()?;
    setup.data.validate()?;
    let jobs: Vec<(usize, usize)> = orders
        .iter()
        .flat_map(|&o| (0..systems_per_order).map(move |i| (o, i)))
        .collect();
    let cells: Vec<SystemCell> = jobs
        .par_iter()
        .map(|&(o, i)| run_cell(setup, o, i, cell_seed(seed, o as u64, i as u64)))
        .collect();
    let stats = orders
        .iter()
        .map(|&o| {
            let pick = |f: fn(&SystemCell) -> &CellOutcome| -> Vec<f64> {
                cells
                    .iter()
                    .filter(|c| c.original_order == o)
                    .filter_map(|c| f(c).order.map(|v| v as f64))
                    .collect()
            };
            OrderStats {
                original_order: o,
                l1: BoxStats::from_values(&pick(|c| &c.l1)),
                lp: BoxStats::from_values(&pick(|c| &c.lp)),
            }
        })
        .collect();
    Ok(MultiSystemTable {
        seed,
        systems_per_order,
        stats,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub l1: CellOutcome,
    pub lp: CellOutcome,
    /// `|y - y_model|_2` against the reference output, when given.
    pub output_error_l1: Option<f64>,
    pub output_error_lp: Option<f64>,
}

/// Both modes on a single-chunk dataset for each noise bound. `reference`
/// is the noise-free output of that chunk, if known.
pub fn run_noise_sweep(
    chunk: &ChunkedDataset,
    reference: Option<&[f64]>,
    eps_values: &[f64],
    grid: &PoleGrid,
    cfg: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    if eps_values.is_empty() || eps_values.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidConfig("eps values must be positive".into()));
    }
    if eps_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("eps values must be sorted".into()));
    }
    if chunk.chunk_count() != 1 {
        return Err(Error::InvalidDataset(format!(
            "noise sweep runs on one chunk, got {}",
            chunk.chunk_count()
        )));
    }
    if let Some(r) = reference {
        if r.len() != chunk.chunks[0].len() {
            return Err(Error::LengthMismatch {
                expected: chunk.chunks[0].len(),
                actual: r.len(),
            });
        }
    }
    cfg.validate()?;
    eps_values
        .par_iter()
        .map(|&eps| {
            let ds = chunk.with_noise_bound(eps)?;
            let error = |r: &Result<IdentificationResult>| -> Option<f64> {
                let (res, reference) = (r.as_ref().ok()?, reference?);
                let y = simulate_chunk(&res.system, grid, 0, &ds.chunks[0].input).ok()?;
                sensor_input_error(reference, &y).ok()
            };
            let l1 = solve_l1(&ds, grid, cfg);
            let lp = solve(&ds, grid, cfg);
            Ok(SweepRow {
                eps,
                output_error_l1: error(&l1),
                output_error_lp: error(&lp),
                l1: CellOutcome::from_result(Mode::L1, l1),
                lp: CellOutcome::from_result(Mode::Lp, lp),
            })
        })
        .collect()
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(Error::InvalidConfig(format!("bad geometric grid [{lo}, {hi}] x {n}")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| lo * (ratio * i as f64).exp()).collect())
}
