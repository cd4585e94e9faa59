//! Chunked, fragmented, quantized observations and synthetic ground truth.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti_sim::{simulate_chunk, GriddedSystem};
use crate::pole_grid::PoleGrid;
use crate::quantizer::QuantizerSpec;

/// One chunk of contiguous input with the surviving quantized outputs.
///
/// Sample indices are 0-based: `observed[&s]` is the level index at time
/// instant `s + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub input: Vec<f64>,
    pub observed: BTreeMap<usize, usize>,
}

impl Chunk {
    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkedDataset {
    pub chunks: Vec<Chunk>,
    pub quantizer: QuantizerSpec,
    pub noise_bound: f64,
}

impl ChunkedDataset {
    pub fn new(chunks: Vec<Chunk>, quantizer: QuantizerSpec, noise_bound: f64) -> Result<Self> {
        let ds = ChunkedDataset {
            chunks,
            quantizer,
            noise_bound,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunks.is_empty() {
            return Err(Error::InvalidDataset("no chunks".into()));
        }
        if !(self.noise_bound >= 0.0 && self.noise_bound.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "noise bound {} must be finite and nonnegative",
                self.noise_bound
            )));
        }
        for (i, c) in self.chunks.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidDataset(format!("chunk {i} is empty")));
            }
            if c.input.iter().any(|u| !u.is_finite()) {
                return Err(Error::InvalidDataset(format!("chunk {i} has non-finite input")));
            }
            for (&s, &level) in &c.observed {
                if s >= c.len() {
                    return Err(Error::InvalidDataset(format!(
                        "chunk {i}: observed index {s} beyond length {}",
                        c.len()
                    )));
                }
                if level >= self.quantizer.level_count() {
                    return Err(Error::InvalidDataset(format!(
                        "chunk {i}: level index {level} invalid for a {}-level quantizer",
                        self.quantizer.level_count()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn chunk_count(&self) -> usize {
        self.chunks.len()
    }

    pub fn max_chunk_len(&self) -> usize {
        self.chunks.iter().map(Chunk::len).max().unwrap_or(0)
    }

    pub fn observation_count(&self) -> usize {
        self.chunks.iter().map(|c| c.observed.len()).sum()
    }

    /// Dataset holding only chunk `i`.
    pub fn single_chunk(&self, i: usize) -> Result<Self> {
        let c = self.chunks.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.chunks.len(),
        })?;
        Ok(ChunkedDataset {
            chunks: vec![c.clone()],
            quantizer: self.quantizer.clone(),
            noise_bound: self.noise_bound,
        })
    }

    pub fn with_noise_bound(&self, eps: f64) -> Result<Self> {
        let mut ds = self.clone();
        ds.noise_bound = eps;
        ds.validate()?;
        Ok(ds)
    }
}

/// Physical (unscaled) system: pair poles are stored once with positive
/// imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSystem {
    pub poles: Vec<Complex64>,
    pub coeffs: Vec<Complex64>,
    pub feedthrough: f64,
}

impl TrueSystem {
    pub fn order(&self) -> usize {
        self.poles
            .iter()
            .map(|p| if p.im == 0.0 { 1 } else { 2 })
            .sum()
    }

    pub fn grid(&self) -> Result<PoleGrid> {
        PoleGrid::unscaled(&self.poles)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub system: TrueSystem,
    /// Zero-input coefficients per chunk, aligned with `system.poles`.
    pub initial: Vec<Vec<Complex64>>,
    pub clean: Vec<Vec<f64>>,
    pub noise: Vec<Vec<f64>>,
    pub noisy: Vec<Vec<f64>>,
}

/// Stable random system: `order / 2` conjugate pairs plus one real pole when
/// `order` is odd, radii uniform on `[0.3, 0.95]`, angles uniform on `(0, pi)`,
/// standard-normal coefficients and feedthrough.
pub fn generate_random_system<R: Rng + ?Sized>(order: usize, rng: &mut R) -> Result<TrueSystem> {
    if order < 1 {
        return Err(Error::InvalidDataset("system order must be at least 1".into()));
    }
    let mut poles = Vec::with_capacity(order / 2 + 1);
    let mut coeffs = Vec::with_capacity(order / 2 + 1);
    for _ in 0..order / 2 {
        let radius = rng.random_range(RADIUS_RANGE.0..=RADIUS_RANGE.1);
        // open interval: a zero angle would make the pair real
        let theta = loop {
            let th = rng.random_range(0.0..PI);
            if th > 0.0 {
                break th;
            }
        };
        poles.push(Complex64::from_polar(radius, theta));
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        coeffs.push(Complex64::new(re, im));
    }
    if order % 2 == 1 {
        let radius = rng.random_range(RADIUS_RANGE.0..=RADIUS_RANGE.1);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        poles.push(Complex64::new(sign * radius, 0.0));
        let re: f64 = StandardNormal.sample(rng);
        coeffs.push(Complex64::new(re, 0.0));
    }
    let feedthrough: f64 = StandardNormal.sample(rng);
    Ok(TrueSystem {
        poles,
        coeffs,
        feedthrough,
    })
}

pub const RADIUS_RANGE: (f64, f64) = (0.3, 0.95);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub chunks: usize,
    pub chunk_len: usize,
    pub input_bound: f64,
    pub noise_bound: f64,
    pub missing_fraction: f64,
    pub order: usize,
    /// Standard deviation of the per-chunk zero-input coefficients.
    pub initial_sigma: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            chunks: 4,
            chunk_len: 50,
            input_bound: 5.0,
            noise_bound: 0.25,
            missing_fraction: 0.1,
            order: 10,
            initial_sigma: 1e-2,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDataset(m));
        if self.chunks == 0 || self.chunk_len == 0 {
            return bad("chunks and chunk_len must be positive".into());
        }
        if !(self.input_bound > 0.0) {
            return bad(format!("input_bound {} must be positive", self.input_bound));
        }
        if !(self.noise_bound >= 0.0) {
            return bad(format!("noise_bound {} must be nonnegative", self.noise_bound));
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return bad(format!("missing_fraction {} outside [0, 1)", self.missing_fraction));
        }
        if !(self.initial_sigma >= 0.0) {
            return bad(format!("initial_sigma {} must be nonnegative", self.initial_sigma));
        }
        Ok(())
    }
}

/// Random system, uniform inputs, Gaussian initial conditions, then
/// [`observe`] on every chunk.
pub fn generate_random_dataset<R: Rng + ?Sized>(
    cfg: &SyntheticConfig,
    quantizer: &QuantizerSpec,
    rng: &mut R,
) -> Result<(ChunkedDataset, GroundTruth)> {
    cfg.validate()?;
    let system = generate_random_system(cfg.order, rng)?;
    let inputs: Vec<Vec<f64>> = (0..cfg.chunks)
        .map(|_| {
            (0..cfg.chunk_len)
                .map(|_| rng.random_range(-cfg.input_bound..=cfg.input_bound))
                .collect()
        })
        .collect();
    let initial: Vec<Vec<Complex64>> = (0..cfg.chunks)
        .map(|_| {
            system
                .poles
                .iter()
                .map(|p| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = if p.im == 0.0 { 0.0 } else { StandardNormal.sample(rng) };
                    Complex64::new(re, im) * cfg.initial_sigma
                })
                .collect()
        })
        .collect();
    let clean = simulate_true(&system, &initial, &inputs)?;

    let mut chunks = Vec::with_capacity(cfg.chunks);
    let (mut noise, mut noisy) = (Vec::new(), Vec::new());
    for (y, u) in clean.iter().zip(inputs) {
        let obs = observe(y, quantizer, cfg.noise_bound, cfg.missing_fraction, rng)?;
        chunks.push(Chunk {
            input: u,
            observed: obs.observed,
        });
        noise.push(obs.noise);
        noisy.push(obs.noisy);
    }
    let dataset = ChunkedDataset::new(chunks, quantizer.clone(), cfg.noise_bound)?;
    Ok((
        dataset,
        GroundTruth {
            system,
            initial,
            clean,
            noise,
            noisy,
        },
    ))
}

/// Noise-free outputs of a physical system, one sequence per chunk.
pub fn simulate_true(
    system: &TrueSystem,
    initial: &[Vec<Complex64>],
    inputs: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let grid = system.grid()?;
    if grid.group_count() != system.poles.len() {
        return Err(Error::InvalidDataset("duplicate poles in true system".into()));
    }
    let sys = GriddedSystem {
        r: system.feedthrough,
        a: system.coeffs.clone(),
        b: initial.to_vec(),
        scale_zero_state: false,
    };
    inputs
        .iter()
        .enumerate()
        .map(|(i, u)| simulate_chunk(&sys, &grid, i, u))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub noise: Vec<f64>,
    pub noisy: Vec<f64>,
    pub observed: BTreeMap<usize, usize>,
}

/// Uniform noise on `[-eps, eps]`, quantization, then removal of
/// `floor(missing_fraction * n)` samples chosen without replacement.
pub fn observe<R: Rng + ?Sized>(
    y: &[f64],
    quantizer: &QuantizerSpec,
    eps: f64,
    missing_fraction: f64,
    rng: &mut R,
) -> Result<Observation> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidDataset(format!("noise bound {eps} must be nonnegative")));
    }
    if !(0.0..1.0).contains(&missing_fraction) {
        return Err(Error::InvalidDataset(format!(
            "missing fraction {missing_fraction} outside [0, 1)"
        )));
    }
    let noise: Vec<f64> = y
        .iter()
        .map(|_| if eps > 0.0 { rng.random_range(-eps..=eps) } else { 0.0 })
        .collect();
    let noisy: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
    let n = y.len();
    let missing = missing_count(n, missing_fraction);
    let dropped: Vec<usize> = index::sample(rng, n, missing).into_vec();
    let mut observed = BTreeMap::new();
    for (s, &v) in noisy.iter().enumerate() {
        if !dropped.contains(&s) {
            observed.insert(s, quantizer.quantize(v)?.0);
        }
    }
    Ok(Observation {
        noise,
        noisy,
        observed,
    })
}

pub fn missing_count(n: usize, fraction: f64) -> usize {
    // guard against 0.1 * 50 = 4.999..
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// Whitespace-separated two-column text: column 1 input, column 2 output.
/// Lines starting with `#` or `%` and blank lines are skipped; extra
/// columns are ignored.
pub fn load_two_column_series(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    parse_two_column_series(&text)
}

pub fn parse_two_column_series(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected at least 2 columns, found {}", fields.len()),
            });
        }
        let parse = |f: &str| {
            f.parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{f:?}: {e}"),
            })
        };
        u.push(parse(fields[0])?);
        y.push(parse(fields[1])?);
    }
    Ok((u, y))
}

/// A `(input, output)` window pair.
pub type ChunkPair = (Vec<f64>, Vec<f64>);

/// Consecutive non-overlapping windows; the trailing remainder is dropped and
/// its length returned alongside.
pub fn chunkify(u: &[f64], y: &[f64], chunk_len: usize) -> Result<(Vec<ChunkPair>, usize)> {
    if u.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            actual: y.len(),
        });
    }
    if chunk_len == 0 {
        return Err(Error::InvalidDataset("chunk length must be positive".into()));
    }
    if chunk_len > u.len() {
        return Err(Error::InvalidDataset(format!(
            "chunk length {chunk_len} exceeds series length {}",
            u.len()
        )));
    }
    let pairs: Vec<ChunkPair> = u
        .chunks_exact(chunk_len)
        .zip(y.chunks_exact(chunk_len))
        .map(|(a, b)| (a.to_vec(), b.to_vec()))
        .collect();
    Ok((pairs, u.len() % chunk_len))
}

/// Dataset from measured chunks: outputs are perturbed by `added_noise`,
/// quantized and fragmented; the feasibility noise bound is `eps`.
pub fn dataset_from_series<R: Rng + ?Sized>(
    pairs: &[ChunkPair],
    quantizer: &QuantizerSpec,
    eps: f64,
    added_noise: f64,
    missing_fraction: f64,
    rng: &mut R,
) -> Result<ChunkedDataset> {
    let mut chunks = Vec::with_capacity(pairs.len());
    for (u, y) in pairs {
        let obs = observe(y, quantizer, added_noise, missing_fraction, rng)?;
        chunks.push(Chunk {
            input: u.clone(),
            observed: obs.observed,
        });
    }
    ChunkedDataset::new(chunks, quantizer.clone(), eps)
}

/// Stand-in for a measured input/output record: a random stable system of
/// the given order driven by uniform input, with the output rescaled to unit
/// peak magnitude.
pub fn synthetic_series<R: Rng + ?Sized>(
    len: usize,
    order: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>, TrueSystem)> {
    let mut system = generate_random_system(order, rng)?;
    let u: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let zero_ic = vec![vec![Complex64::new(0.0, 0.0); system.poles.len()]];
    let y = simulate_true(&system, &zero_ic, std::slice::from_ref(&u))?.remove(0);
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        system.feedthrough /= peak;
        for c in system.coeffs.iter_mut() {
            *c /= peak;
        }
    }
    let y = y.iter().map(|v| v / peak.max(f64::MIN_POSITIVE)).collect();
    Ok((u, y, system))
}
