//! The convex set of data-consistent parameters and caps.
//!
//! A point of the set is `(w, f)` with `w = [r, a, b^(0..T), noise]` in the
//! real layout of [`ParamLayout`] and one cap `f_j` per grid group. It
//! belongs to the set when
//!
//! * every observed sample satisfies `lo <= y(k) + n(k) <= hi` for the cell
//!   of its recorded level (`y` from the chunk's forward operator),
//! * every noise entry satisfies `|n(k)| <= eps`,
//! * every coefficient is under its cap: `|a_j| <= f_j` and
//!   `|b_j^(i)| <= f_j` (modulus for pair groups), hence `f >= 0`.
//!
//! Noise variables exist only for observed samples. Conjugate symmetry is
//! built into the layout, so it needs no rows.

mod projector;

pub use projector::{project_capped_group, ProjectionOutcome, Projector, ProjectorSettings};

use serde::{Deserialize, Serialize};

use crate::dataset::ChunkedDataset;
use crate::error::{Error, Result};
use crate::lti_sim::{forward_operator, ForwardOperator, ParamLayout};
use crate::pole_grid::PoleGrid;

/// Closing margin for the open upper end of a cell.
pub const UPPER_MARGIN: f64 = 1e-12;

/// One observed sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub chunk: usize,
    /// 0-based sample index inside the chunk.
    pub sample: usize,
    pub level: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct FeasibleSet {
    layout: ParamLayout,
    operators: Vec<ForwardOperator>,
    rows: Vec<IntervalRow>,
    eps: f64,
    scale_zero_state: bool,
}

impl FeasibleSet {
    /// Build the set for `dataset` over `grid`. Finite cell ends are pulled
    /// inward by `margin` (the upper end by at least [`UPPER_MARGIN`]).
    pub fn assemble(
        dataset: &ChunkedDataset,
        grid: &PoleGrid,
        scale_zero_state: bool,
        margin: f64,
    ) -> Result<Self> {
        dataset.validate()?;
        if !(margin >= 0.0) {
            return Err(Error::InvalidConfig(format!("interval margin {margin} must be nonnegative")));
        }
        let operators = dataset
            .chunks
            .iter()
            .map(|c| forward_operator(grid, &c.input, scale_zero_state))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(dataset.observation_count());
        for (i, chunk) in dataset.chunks.iter().enumerate() {
            for (&sample, &level) in &chunk.observed {
                let (lo, hi) = dataset.quantizer.cell_bounds(level)?;
                let (lo, hi) = (lo + margin, hi - margin.max(UPPER_MARGIN));
                if lo > hi {
                    return Err(Error::InvalidConfig(format!(
                        "interval margin {margin} empties cell {level}"
                    )));
                }
                rows.push(IntervalRow {
                    chunk: i,
                    sample,
                    level,
                    lo,
                    hi,
                });
            }
        }
        let layout = ParamLayout::new(grid, dataset.chunk_count(), rows.len());
        Ok(FeasibleSet {
            layout,
            operators,
            rows,
            eps: dataset.noise_bound,
            scale_zero_state,
        })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn rows(&self) -> &[IntervalRow] {
        &self.rows
    }

    pub fn operator(&self, chunk: usize) -> &ForwardOperator {
        &self.operators[chunk]
    }

    pub fn noise_bound(&self) -> f64 {
        self.eps
    }

    pub fn scale_zero_state(&self) -> bool {
        self.scale_zero_state
    }

    /// Number of caps.
    pub fn groups(&self) -> usize {
        self.layout.groups()
    }

    /// Length of `w`.
    pub fn w_len(&self) -> usize {
        self.layout.len()
    }

    pub fn cone_count(&self) -> usize {
        self.groups() * (self.layout.chunks() + 1)
    }

    /// Model output `y(k)` of a row (noise excluded).
    pub fn row_output(&self, w: &[f64], row: usize) -> f64 {
        let r = &self.rows[row];
        let op_row = self.operators[r.chunk].row(r.sample);
        let cl = self.layout.coeff_len();
        let shared: f64 = op_row[..1 + cl].iter().zip(&w[..1 + cl]).map(|(a, b)| a * b).sum();
        let b0 = self.layout.b_start(r.chunk);
        let own: f64 = op_row[1 + cl..]
            .iter()
            .zip(&w[b0..b0 + cl])
            .map(|(a, b)| a * b)
            .sum();
        shared + own
    }

    pub fn noise(&self, w: &[f64], row: usize) -> f64 {
        w[self.layout.noise_start() + row]
    }

    /// Every constraint's violation (only positive ones are listed).
    pub fn violations(&self, w: &[f64], f: &[f64]) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |id: String, kind: ConstraintKind, amount: f64| {
            if amount > 0.0 {
                out.push(Violation { id, kind, amount });
            }
        };
        for (m, r) in self.rows.iter().enumerate() {
            let n = self.noise(w, m);
            let yhat = self.row_output(w, m) + n;
            push(
                format!("interval[chunk={},k={}]", r.chunk, r.sample + 1),
                ConstraintKind::Interval,
                (r.lo - yhat).max(yhat - r.hi),
            );
            push(
                format!("noise[chunk={},k={}]", r.chunk, r.sample + 1),
                ConstraintKind::NoiseBox,
                n.abs() - self.eps,
            );
        }
        for j in 0..self.groups() {
            let (off, dof) = self.layout.group_slot(j);
            let norm = |start: usize| -> f64 {
                w[start + off..start + off + dof]
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
            };
            push(
                format!("cone[a,group={j}]"),
                ConstraintKind::Cone,
                norm(self.layout.a_start()) - f[j],
            );
            for i in 0..self.layout.chunks() {
                push(
                    format!("cone[b,chunk={i},group={j}]"),
                    ConstraintKind::Cone,
                    norm(self.layout.b_start(i)) - f[j],
                );
            }
            push(format!("nonneg[group={j}]"), ConstraintKind::Nonnegativity, -f[j]);
        }
        out
    }

    pub fn is_feasible(&self, w: &[f64], f: &[f64], tol: f64) -> Result<FeasibilityReport> {
        self.check_dims(w, f)?;
        let worst = self
            .violations(w, f)
            .into_iter()
            .max_by(|a, b| a.amount.total_cmp(&b.amount));
        let feasible = worst.as_ref().is_none_or(|v| v.amount <= tol);
        Ok(FeasibilityReport { feasible, worst })
    }

    pub(crate) fn check_dims(&self, w: &[f64], f: &[f64]) -> Result<()> {
        if w.len() != self.w_len() {
            return Err(Error::LengthMismatch {
                expected: self.w_len(),
                actual: w.len(),
            });
        }
        if f.len() != self.groups() {
            return Err(Error::LengthMismatch {
                expected: self.groups(),
                actual: f.len(),
            });
        }
        Ok(())
    }

    /// Move each noise entry into the range that puts its row inside the cell
    /// while keeping `|n| <= eps`; rows whose range is empty keep the closest
    /// admissible value.
    pub fn fit_noise(&self, w: &mut [f64]) {
        let start = self.layout.noise_start();
        for (m, r) in self.rows.iter().enumerate() {
            let y = self.row_output(w, m);
            let lo = (r.lo - y).max(-self.eps);
            let hi = (r.hi - y).min(self.eps);
            let n = &mut w[start + m];
            if lo <= hi {
                *n = n.clamp(lo, hi);
            } else if r.lo - y > self.eps {
                *n = self.eps;
            } else {
                *n = -self.eps;
            }
        }
    }

    /// Solve `min |s - w_hat|^2 + |f - d_hat|^2` over the set with a fresh
    /// projector. Repeated projections should reuse a [`Projector`].
    pub fn project(
        &self,
        w_hat: &[f64],
        d_hat: &[f64],
        settings: ProjectorSettings,
    ) -> Result<ProjectionOutcome> {
        let mut p = Projector::new(self, settings)?;
        p.project(w_hat, d_hat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Interval,
    NoiseBox,
    Cone,
    Nonnegativity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    pub kind: ConstraintKind,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub worst: Option<Violation>,
}
