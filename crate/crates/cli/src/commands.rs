use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use quantid::admm_solver::Termination;
use quantid::analysis::{input_errors, run_multi_system, run_noise_sweep, synthetic_instance};
use quantid::dataset::{chunkify, dataset_from_series, load_two_column_series, synthetic_series, ChunkPair};
use quantid::export;
use quantid::rng::{stream, Stream};
use quantid::{solve, solve_l1, ChunkedDataset, FeasibleSet, GroundTruth, PoleGrid, SolverConfig};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// CSV with the resolved config as a `#` header.
fn write_csv(
    cfg: &RunConfig,
    path: &Path,
    title: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> quantid::Result<()>,
) -> Result<(), CliError> {
    let mut out = create(path)?;
    let wrap = |e: quantid::Error| CliError::io(path, e);
    export::write_header(&mut out, title, cfg).map_err(wrap)?;
    body(&mut out).map_err(wrap)?;
    out.flush().map_err(|e| CliError::io(path, e))
}

fn write_json(cfg: &RunConfig, path: &Path, key: &str, value: &impl Serialize) -> Result<(), CliError> {
    let doc = serde_json::json!({ "config": cfg, key: value });
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::io(path, e))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))
}

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        seed: cfg.seed,
        ..cfg.solver.clone()
    }
}

fn load_record(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    load_two_column_series(path).map_err(|e| match e {
        quantid::Error::Io(io) => CliError::io(path, io),
        other => CliError::Config(format!("data.file.path {}: {other}", path.display())),
    })
}

/// The dataset described by the config, with ground truth for synthetic
/// sources.
fn build_dataset(cfg: &RunConfig) -> Result<(ChunkedDataset, Option<GroundTruth>, PoleGrid), CliError> {
    match &cfg.data.file {
        None => {
            let (ds, truth, grid) = synthetic_instance(&cfg.setup()?, cfg.seed)?;
            Ok((ds, Some(truth), grid))
        }
        Some(src) => {
            let (u, y) = load_record(&src.path)?;
            let (mut pairs, _) = chunkify(&u, &y, src.chunk_len)?;
            if let Some(m) = src.max_chunks {
                pairs.truncate(m);
            }
            let q = cfg.setup()?.quantizer;
            let mut rng = stream(cfg.seed, Stream::Observation);
            let ds = dataset_from_series(&pairs, &q, src.noise_bound, src.added_noise, src.missing_fraction, &mut rng)?;
            let grid = PoleGrid::build(&cfg.grid, ds.max_chunk_len())?;
            Ok((ds, None, grid))
        }
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let (ds, truth, grid) = build_dataset(cfg)?;
    prepare_out(cfg)?;
    write_csv(cfg, &cfg.out.join("dataset.csv"), "dataset", |w| export::write_chunks(w, &ds))?;
    write_csv(cfg, &cfg.out.join("grid.csv"), "pole grid", |w| export::write_grid(w, &grid))?;
    if let Some(t) = &truth {
        write_json(cfg, &cfg.out.join("truth.json"), "truth", t)?;
    }
    println!(
        "wrote {} chunks, {} observed samples, {} grid poles to {}",
        ds.chunk_count(),
        ds.observation_count(),
        grid.pole_count(),
        cfg.out.display()
    );
    Ok(())
}

pub fn identify(cfg: &RunConfig, data: Option<&Path>) -> Result<(), CliError> {
    let (ds, truth, grid) = match data {
        None => build_dataset(cfg)?,
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let q = cfg.setup()?.quantizer;
            let eps = cfg.data.file.as_ref().map_or(cfg.data.synthetic.noise_bound, |f| f.noise_bound);
            let ds = export::read_chunks(&text, q, eps)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let grid = PoleGrid::build(&cfg.grid, ds.max_chunk_len())?;
            (ds, None, grid)
        }
    };
    prepare_out(cfg)?;
    let solver = solver_config(cfg);
    let mut runs = Vec::new();
    if cfg.mode.run_lp() {
        runs.push(solve(&ds, &grid, &solver)?);
    }
    if cfg.mode.run_l1() {
        runs.push(solve_l1(&ds, &grid, &solver)?);
    }

    let set = FeasibleSet::assemble(&ds, &grid, solver.scale_zero_state, 0.0)?;
    let mut incomplete = 0;
    for mut r in runs {
        if let Some(t) = &truth {
            r.metrics.zeta_in = Some(input_errors(&r, &ds, &grid, t)?);
        }
        let mode = r.mode.to_string();
        let recon = r.sensor_inputs(&ds, &grid, &set)?;
        write_json(cfg, &cfg.out.join(format!("result_{mode}.json")), "result", &r)?;
        write_csv(cfg, &cfg.out.join(format!("history_{mode}.csv")), "iterations", |w| {
            export::write_history(w, &r.history)
        })?;
        write_csv(cfg, &cfg.out.join(format!("reconstruction_{mode}.csv")), "reconstruction", |w| {
            export::write_reconstruction(w, &ds, &recon)
        })?;
        let zeta_out = r.metrics.zeta_out.iter().fold(0.0f64, |m, v| m.max(*v));
        println!(
            "{mode}: {:?} after {} iterations, gap {:.3e}, order {}, max zeta_out {zeta_out:.3e}",
            r.status, r.iterations, r.final_gap, r.detected_order
        );
        if r.status == Termination::BudgetExhausted {
            incomplete += 1;
        }
    }
    match incomplete {
        0 => Ok(()),
        n => Err(CliError::Incomplete(n)),
    }
}

pub fn multi_system(cfg: &RunConfig) -> Result<(), CliError> {
    let mut setup = cfg.setup()?;
    setup.solver = solver_config(cfg);
    let table = run_multi_system(&cfg.experiment.orders, cfg.experiment.systems_per_order, &setup, cfg.seed)?;
    prepare_out(cfg)?;
    write_csv(cfg, &cfg.out.join("multi_system.csv"), "detected order statistics", |w| {
        export::write_multi_system(w, &table)
    })?;
    write_csv(cfg, &cfg.out.join("multi_system_cells.csv"), "per-system outcomes", |w| {
        export::write_multi_system_cells(w, &table)
    })?;
    for s in &table.stats {
        let show = |b: Option<quantid::analysis::BoxStats>| {
            b.map_or("-".to_string(), |b| format!("median {} mean {:.2} max {}", b.median, b.mean, b.max))
        };
        println!("order {}: lp {} | l1 {}", s.original_order, show(s.lp), show(s.l1));
    }
    for c in &table.cells {
        for o in [&c.lp, &c.l1] {
            if let Some(e) = &o.error {
                eprintln!("order {} system {} {}: {e}", c.original_order, c.index, o.mode);
            }
        }
    }
    match table.failed_cells() {
        0 => Ok(()),
        n => Err(CliError::Incomplete(n)),
    }
}

pub fn noise_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let eps = cfg.experiment.eps_values()?;
    let (pairs, chunk_len, added_noise, missing): (Vec<ChunkPair>, usize, f64, f64) = match &cfg.data.file {
        Some(src) => {
            let (u, y) = load_record(&src.path)?;
            let (pairs, _) = chunkify(&u, &y, src.chunk_len)?;
            (pairs, src.chunk_len, src.added_noise, src.missing_fraction)
        }
        None => {
            let syn = &cfg.data.synthetic;
            let mut rng = stream(cfg.seed, Stream::System);
            let (u, y, _) = synthetic_series(cfg.experiment.series_len, cfg.experiment.series_order, &mut rng)?;
            let (pairs, _) = chunkify(&u, &y, syn.chunk_len)?;
            (pairs, syn.chunk_len, 0.0, syn.missing_fraction)
        }
    };
    let i = cfg.experiment.chunk_index;
    let Some(chunk) = pairs.get(i) else {
        return Err(CliError::Config(format!(
            "experiment.chunk_index: {i} but the record has {} chunks",
            pairs.len()
        )));
    };
    let q = cfg.setup()?.quantizer;
    let mut rng = stream(cfg.seed, Stream::Observation);
    let ds = dataset_from_series(std::slice::from_ref(chunk), &q, eps[0], added_noise, missing, &mut rng)?;
    let grid = PoleGrid::build(&cfg.grid, chunk_len)?;
    let rows = run_noise_sweep(&ds, Some(&chunk.1), &eps, &grid, &solver_config(cfg))?;
    prepare_out(cfg)?;
    write_csv(cfg, &cfg.out.join("noise_sweep.csv"), "detected order against noise bound", |w| {
        export::write_noise_sweep(w, &rows)
    })?;
    let mut incomplete = 0;
    for r in &rows {
        let show = |o: Option<usize>| o.map_or("-".to_string(), |v| v.to_string());
        println!("eps {:.4}: lp {} | l1 {}", r.eps, show(r.lp.order), show(r.l1.order));
        for o in [&r.lp, &r.l1] {
            if let Some(e) = &o.error {
                eprintln!("eps {} {}: {e}", r.eps, o.mode);
            }
            incomplete += usize::from(!o.completed());
        }
    }
    match incomplete {
        0 => Ok(()),
        n => Err(CliError::Incomplete(n)),
    }
}
