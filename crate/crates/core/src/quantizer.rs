//! Cell/level quantizer.
//!
//! Cell `i` is the half-open interval `[boundaries[i-1], boundaries[i])`
//! with `boundaries[-1] = -inf` and `boundaries[len] = +inf`, so values that
//! land exactly on a threshold go to the upper cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    boundaries: Vec<f64>,
    levels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uniform: Option<UniformMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformMeta {
    pub bits: u32,
    pub saturation: f64,
    pub step: f64,
}

impl QuantizerSpec {
    pub fn new(boundaries: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidQuantizer("need at least two levels".into()));
        }
        if boundaries.len() + 1 != levels.len() {
            return Err(Error::InvalidQuantizer(format!(
                "{} levels need {} boundaries, got {}",
                levels.len(),
                levels.len() - 1,
                boundaries.len()
            )));
        }
        if boundaries.iter().chain(&levels).any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuantizer("non-finite entry".into()));
        }
        if !strictly_increasing(&boundaries) || !strictly_increasing(&levels) {
            return Err(Error::InvalidQuantizer(
                "boundaries and levels must be strictly increasing".into(),
            ));
        }
        Ok(QuantizerSpec {
            boundaries,
            levels,
            uniform: None,
        })
    }

    /// `2^bits` levels equally spaced on `[-saturation, saturation]`, with
    /// thresholds at the midpoints.
    pub fn make_uniform(bits: u32, saturation: f64) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(Error::InvalidQuantizer(format!("bits {bits} outside 1..=16")));
        }
        if !(saturation > 0.0 && saturation.is_finite()) {
            return Err(Error::InvalidQuantizer(format!(
                "saturation {saturation} must be positive"
            )));
        }
        let cells = (1u64 << bits) as f64 - 1.0;
        Self::uniform_with_step(bits, 2.0 * saturation / cells)
    }

    /// Symmetric uniform quantizer with an explicit step; the saturation
    /// level follows as `step * (2^bits - 1) / 2`.
    pub fn uniform_with_step(bits: u32, step: f64) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(Error::InvalidQuantizer(format!("bits {bits} outside 1..=16")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidQuantizer(format!("step {step} must be positive")));
        }
        let count = 1usize << bits;
        let half = (count as f64 - 1.0) / 2.0;
        let levels: Vec<f64> = (0..count).map(|i| (i as f64 - half) * step).collect();
        let boundaries: Vec<f64> = (1..count).map(|i| (i as f64 - half - 0.5) * step).collect();
        let mut spec = Self::new(boundaries, levels)?;
        spec.uniform = Some(UniformMeta {
            bits,
            saturation: half * step,
            step,
        });
        Ok(spec)
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn uniform(&self) -> Option<&UniformMeta> {
        self.uniform.as_ref()
    }

    pub fn step(&self) -> Option<f64> {
        self.uniform.map(|u| u.step)
    }

    pub fn level(&self, index: usize) -> Result<f64> {
        self.levels
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.levels.len(),
            })
    }

    /// Cell index and output level of `x`.
    pub fn quantize(&self, x: f64) -> Result<(usize, f64)> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let index = self.boundaries.partition_point(|&b| b <= x);
        Ok((index, self.levels[index]))
    }

    /// Half-open interval `[lo, hi)` mapped to `index`; saturation cells are
    /// unbounded on their outer side.
    pub fn cell_bounds(&self, index: usize) -> Result<(f64, f64)> {
        if index >= self.levels.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.levels.len(),
            });
        }
        let lo = if index == 0 {
            f64::NEG_INFINITY
        } else {
            self.boundaries[index - 1]
        };
        let hi = self
            .boundaries
            .get(index)
            .copied()
            .unwrap_or(f64::INFINITY);
        Ok((lo, hi))
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}
