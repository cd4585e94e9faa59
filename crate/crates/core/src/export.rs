//! CSV tables for external plotting. Every file starts with `#` lines
//! echoing the configuration that produced it.

use std::io::Write;

use serde::Serialize;

use crate::admm_solver::IterationRecord;
use crate::analysis::{MultiSystemTable, SweepRow};
use crate::dataset::ChunkedDataset;
use crate::error::{Error, Result};
use crate::feasible_set::Violation;
use crate::lti_sim::ChunkResponse;
use crate::pole_grid::PoleGrid;

/// `# key: value` header, one line per line of pretty JSON.
pub fn write_header<W: Write>(out: &mut W, title: &str, config: &impl Serialize) -> Result<()> {
    writeln!(out, "# {title}")?;
    for line in serde_json::to_string_pretty(config)?.lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn rows<W: Write, R: Serialize>(out: W, records: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `real,imag` for every pole, partners included.
pub fn write_grid<W: Write>(mut out: W, grid: &PoleGrid) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        real: f64,
        imag: f64,
    }
    let mut all = Vec::with_capacity(grid.pole_count());
    for p in grid.points() {
        all.push(Row { real: p.value.re, imag: p.value.im });
        if p.multiplicity() == 2 {
            all.push(Row { real: p.value.re, imag: -p.value.im });
        }
    }
    out.flush()?;
    rows(out, all)
}

/// `k,y,y_zi,y_zs` with `k` starting at 1.
pub fn write_series<W: Write>(out: W, response: &ChunkResponse) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        k: usize,
        y: f64,
        y_zi: f64,
        y_zs: f64,
    }
    rows(
        out,
        (0..response.y.len()).map(|s| Row {
            k: s + 1,
            y: response.y[s],
            y_zi: response.zero_input[s],
            y_zs: response.zero_state[s],
        }),
    )
}

/// `chunk,k,u,observed,level_index,level_value`; missing samples leave the
/// level columns empty.
pub fn write_chunks<W: Write>(out: W, dataset: &ChunkedDataset) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        chunk: usize,
        k: usize,
        u: f64,
        observed: u8,
        level_index: Option<usize>,
        level_value: Option<f64>,
    }
    let mut all = Vec::new();
    for (i, c) in dataset.chunks.iter().enumerate() {
        for (s, &u) in c.input.iter().enumerate() {
            let level = c.observed.get(&s).copied();
            all.push(Row {
                chunk: i,
                k: s + 1,
                u,
                observed: u8::from(level.is_some()),
                level_index: level,
                level_value: level.map(|l| dataset.quantizer.level(l)).transpose()?,
            });
        }
    }
    rows(out, all)
}

/// Parse the output of [`write_chunks`] back into a dataset with the given
/// quantizer and noise bound.
pub fn read_chunks(
    text: &str,
    quantizer: crate::quantizer::QuantizerSpec,
    noise_bound: f64,
) -> Result<ChunkedDataset> {
    #[derive(serde::Deserialize)]
    struct Row {
        chunk: usize,
        k: usize,
        u: f64,
        observed: u8,
        level_index: Option<usize>,
    }
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut chunks: Vec<crate::dataset::Chunk> = Vec::new();
    for (line, rec) in reader.deserialize::<Row>().enumerate() {
        let row = rec.map_err(|e| Error::Parse {
            line: line + 2,
            message: e.to_string(),
        })?;
        if row.chunk > chunks.len() || row.k == 0 {
            return Err(Error::Parse {
                line: line + 2,
                message: format!("unexpected chunk {} / k {}", row.chunk, row.k),
            });
        }
        if row.chunk == chunks.len() {
            chunks.push(crate::dataset::Chunk {
                input: Vec::new(),
                observed: Default::default(),
            });
        }
        let c = &mut chunks[row.chunk];
        if row.k != c.input.len() + 1 {
            return Err(Error::Parse {
                line: line + 2,
                message: format!("samples of chunk {} out of order at k = {}", row.chunk, row.k),
            });
        }
        c.input.push(row.u);
        match (row.observed, row.level_index) {
            (1, Some(l)) => {
                c.observed.insert(row.k - 1, l);
            }
            (0, _) => {}
            _ => {
                return Err(Error::Parse {
                    line: line + 2,
                    message: "observed sample without level".into(),
                })
            }
        }
    }
    ChunkedDataset::new(chunks, quantizer, noise_bound)
}

/// `chunk,k,observed,y_hat,z` of a reconstruction; `z` is the re-quantized
/// level value.
pub fn write_reconstruction<W: Write>(out: W, dataset: &ChunkedDataset, sensor_inputs: &[Vec<f64>]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        chunk: usize,
        k: usize,
        observed: u8,
        y_hat: f64,
        z: f64,
    }
    let mut all = Vec::new();
    for (i, (c, y)) in dataset.chunks.iter().zip(sensor_inputs).enumerate() {
        for (s, &v) in y.iter().enumerate() {
            all.push(Row {
                chunk: i,
                k: s + 1,
                observed: u8::from(c.observed.contains_key(&s)),
                y_hat: v,
                z: dataset.quantizer.quantize(v)?.1,
            });
        }
    }
    rows(out, all)
}

pub fn write_history<W: Write>(out: W, history: &[IterationRecord]) -> Result<()> {
    rows(out, history)
}

pub fn write_violations<W: Write>(out: W, violations: &[Violation]) -> Result<()> {
    rows(out, violations)
}

/// One row per original order with the box statistics of both modes.
pub fn write_multi_system<W: Write>(out: W, table: &MultiSystemTable) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        original_order: usize,
        mode: &'static str,
        count: usize,
        min: f64,
        q25: f64,
        median: f64,
        mean: f64,
        q75: f64,
        max: f64,
    }
    let mut all = Vec::new();
    for s in &table.stats {
        for (mode, b) in [("l1", &s.l1), ("lp", &s.lp)] {
            let nan = f64::NAN;
            let b = b.unwrap_or(crate::analysis::BoxStats {
                min: nan,
                q25: nan,
                median: nan,
                mean: nan,
                q75: nan,
                max: nan,
                count: 0,
            });
            all.push(Row {
                original_order: s.original_order,
                mode,
                count: b.count,
                min: b.min,
                q25: b.q25,
                median: b.median,
                mean: b.mean,
                q75: b.q75,
                max: b.max,
            });
        }
    }
    rows(out, all)
}

/// Per-cell detail of a multi-system run.
pub fn write_multi_system_cells<W: Write>(out: W, table: &MultiSystemTable) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        original_order: usize,
        index: usize,
        seed: u64,
        order_l1: Option<usize>,
        order_lp: Option<usize>,
        iterations_l1: usize,
        iterations_lp: usize,
        error_l1: Option<&'a str>,
        error_lp: Option<&'a str>,
    }
    rows(
        out,
        table.cells.iter().map(|c| Row {
            original_order: c.original_order,
            index: c.index,
            seed: c.seed,
            order_l1: c.l1.order,
            order_lp: c.lp.order,
            iterations_l1: c.l1.iterations,
            iterations_lp: c.lp.iterations,
            error_l1: c.l1.error.as_deref(),
            error_lp: c.lp.error.as_deref(),
        }),
    )
}

pub fn write_noise_sweep<W: Write>(out: W, sweep: &[SweepRow]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        eps: f64,
        order_l1: Option<usize>,
        order_lp: Option<usize>,
        output_error_l1: Option<f64>,
        output_error_lp: Option<f64>,
        completed_l1: u8,
        completed_lp: u8,
    }
    rows(
        out,
        sweep.iter().map(|r| Row {
            eps: r.eps,
            order_l1: r.l1.order,
            order_lp: r.lp.order,
            output_error_l1: r.output_error_l1,
            output_error_lp: r.output_error_lp,
            completed_l1: u8::from(r.l1.completed()),
            completed_lp: u8::from(r.lp.completed()),
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Chunk;
    use crate::quantizer::QuantizerSpec;

    #[test]
    fn chunks_round_trip() {
        let q = QuantizerSpec::make_uniform(3, 1.0).unwrap();
        let ds = ChunkedDataset::new(
            vec![
                Chunk {
                    input: vec![0.5, -1.25, 3.0],
                    observed: [(0, 2), (2, 7)].into_iter().collect(),
                },
                Chunk {
                    input: vec![1.0, 2.0],
                    observed: [(1, 0)].into_iter().collect(),
                },
            ],
            q.clone(),
            0.1,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_header(&mut buf, "chunks", &serde_json::json!({"seed": 1})).unwrap();
        write_chunks(&mut buf, &ds).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# chunks\n"));
        assert_eq!(read_chunks(&text, q, 0.1).unwrap(), ds);
    }

    #[test]
    fn grid_lists_partners() {
        let g = PoleGrid::from_points(
            &[num_complex::Complex64::new(0.5, 0.0), num_complex::Complex64::new(0.0, 0.9)],
            5,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_grid(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3);
        assert!(text.contains("0.0,-0.9"));
    }
}
